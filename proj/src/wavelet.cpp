#include "npmddm/wavelet.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <functional>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace npmddm {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// sqrt(3) based closed form for the 4-tap filter.
const std::array<double, 4> kDaubechies4 = [] {
  const double s3 = std::sqrt(3.0);
  const double d = 4.0 * std::sqrt(2.0);
  return std::array<double, 4>{(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d};
}();

const std::array<double, 2> kHaar = {kInvSqrt2, kInvSqrt2};

// 8-tap filter (four vanishing moments), from spectral factorisation at 40 digits.
const std::array<double, 8> kDaubechies8 = {
    0.2303778133088965008632912,  0.714846570552915647089922,    0.6308807679298589078817163,
    -0.02798376941685985421141375, -0.1870348117190930840795707, 0.03084138183556076362721936,
    0.03288301166688519973540751, -0.01059740178506903210488321};

struct FilterPair {
  std::span<const double> lo;
  std::vector<double> hi;
};

FilterPair filters(WaveletFamily family) {
  return {scaling_filter(family), wavelet_filter(family)};
}

void check_levels(const WaveletSpec& spec) {
  if (spec.levels < 1) throw std::invalid_argument("wavelet levels must be >= 1");
}

// Periodic decimated analysis: a[k] = sum_n lo[n] x[(2k+n) mod N].
void analysis_step(std::span<const double> x, const FilterPair& f, std::span<double> a, std::span<double> d) {
  const std::size_t n = x.size();
  const std::size_t half = n / 2;
  const std::size_t len = f.lo.size();
  for (std::size_t k = 0; k < half; ++k) {
    double sa = 0.0, sd = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const double v = x[(2 * k + t) % n];
      sa += f.lo[t] * v;
      sd += f.hi[t] * v;
    }
    a[k] = sa;
    d[k] = sd;
  }
}

void synthesis_step(std::span<const double> a, std::span<const double> d, const FilterPair& f, std::span<double> x) {
  const std::size_t n = x.size();
  const std::size_t len = f.lo.size();
  std::fill(x.begin(), x.end(), 0.0);
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t t = 0; t < len; ++t) x[(2 * k + t) % n] += f.lo[t] * a[k] + f.hi[t] * d[k];
}

// A trous analysis with the filters dilated by `step`.
void stationary_step(std::span<const double> x, const FilterPair& f, std::size_t step, std::span<double> a,
                     std::span<double> d) {
  const std::size_t n = x.size();
  const std::size_t len = f.lo.size();
  for (std::size_t i = 0; i < n; ++i) {
    double sa = 0.0, sd = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const double v = x[(i + step * t) % n];
      sa += f.lo[t] * v;
      sd += f.hi[t] * v;
    }
    a[i] = sa;
    d[i] = sd;
  }
}

// Adjoint of stationary_step divided by 2 (the analysis operator satisfies T^T T = 2I).
void stationary_inverse(std::span<const double> a, std::span<const double> d, const FilterPair& f, std::size_t step,
                        std::span<double> x) {
  const std::size_t n = x.size();
  const std::size_t len = f.lo.size();
  std::fill(x.begin(), x.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < len; ++t) x[(i + step * t) % n] += 0.5 * (f.lo[t] * a[i] + f.hi[t] * d[i]);
}

using Analysis = std::function<void(std::span<const double>, std::span<double>, std::span<double>)>;
using Synthesis = std::function<void(std::span<const double>, std::span<const double>, std::span<double>)>;

// Applies a 1D analysis to every row (dim = 1) or column (dim = 0).
std::pair<Grid, Grid> split(const Grid& x, int dim, bool decimate, const Analysis& step) {
  const Eigen::Index n = dim == 1 ? x.cols() : x.rows();
  const Eigen::Index lines = dim == 1 ? x.rows() : x.cols();
  const Eigen::Index out = decimate ? n / 2 : n;
  Grid lo = dim == 1 ? Grid(x.rows(), out) : Grid(out, x.cols());
  Grid hi = lo;
  std::vector<double> in(n), a(out), d(out);
  for (Eigen::Index l = 0; l < lines; ++l) {
    for (Eigen::Index t = 0; t < n; ++t) in[t] = dim == 1 ? x(l, t) : x(t, l);
    step(in, a, d);
    for (Eigen::Index t = 0; t < out; ++t) {
      (dim == 1 ? lo(l, t) : lo(t, l)) = a[t];
      (dim == 1 ? hi(l, t) : hi(t, l)) = d[t];
    }
  }
  return {std::move(lo), std::move(hi)};
}

Grid merge(const Grid& lo, const Grid& hi, int dim, bool decimated, const Synthesis& step) {
  const Eigen::Index in_len = dim == 1 ? lo.cols() : lo.rows();
  const Eigen::Index lines = dim == 1 ? lo.rows() : lo.cols();
  const Eigen::Index n = decimated ? 2 * in_len : in_len;
  Grid x = dim == 1 ? Grid(lo.rows(), n) : Grid(n, lo.cols());
  std::vector<double> a(in_len), d(in_len), out(n);
  for (Eigen::Index l = 0; l < lines; ++l) {
    for (Eigen::Index t = 0; t < in_len; ++t) {
      a[t] = dim == 1 ? lo(l, t) : lo(t, l);
      d[t] = dim == 1 ? hi(l, t) : hi(t, l);
    }
    step(a, d, out);
    for (Eigen::Index t = 0; t < n; ++t) (dim == 1 ? x(l, t) : x(t, l)) = out[t];
  }
  return x;
}

struct Quad {
  Grid ll, horizontal, vertical, diagonal;
};

// Rows first, then columns. Horizontal = highpass along rows, lowpass along columns.
Quad split2(const Grid& x, bool decimate, const Analysis& step) {
  auto [row_lo, row_hi] = split(x, 1, decimate, step);
  auto [ll, vertical] = split(row_lo, 0, decimate, step);
  auto [horizontal, diagonal] = split(row_hi, 0, decimate, step);
  return {std::move(ll), std::move(horizontal), std::move(vertical), std::move(diagonal)};
}

Grid merge2(const Quad& q, bool decimated, const Synthesis& step) {
  Grid row_lo = merge(q.ll, q.vertical, 0, decimated, step);
  Grid row_hi = merge(q.horizontal, q.diagonal, 0, decimated, step);
  return merge(row_lo, row_hi, 1, decimated, step);
}

void check_shape(const Grid& g, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (g.rows() != rows || g.cols() != cols)
    throw std::invalid_argument(std::string("coefficient shape mismatch in ") + what);
}

}  // namespace

WaveletFamily parse_wavelet_family(std::string_view name) {
  if (name == "haar") return WaveletFamily::Haar;
  if (name == "daubechies-4") return WaveletFamily::Daubechies4;
  if (name == "daubechies-8") return WaveletFamily::Daubechies8;
  throw std::invalid_argument("unknown wavelet family '" + std::string(name) + "'");
}

std::string to_string(WaveletFamily family) {
  switch (family) {
    case WaveletFamily::Haar: return "haar";
    case WaveletFamily::Daubechies4: return "daubechies-4";
    case WaveletFamily::Daubechies8: return "daubechies-8";
  }
  return "unknown";
}

std::string to_string(Orientation o) {
  switch (o) {
    case Orientation::Horizontal: return "horizontal";
    case Orientation::Vertical: return "vertical";
    case Orientation::Diagonal: return "diagonal";
  }
  return "unknown";
}

std::span<const double> scaling_filter(WaveletFamily family) {
  switch (family) {
    case WaveletFamily::Haar: return kHaar;
    case WaveletFamily::Daubechies4: return kDaubechies4;
    case WaveletFamily::Daubechies8: return kDaubechies8;
  }
  throw std::invalid_argument("unknown wavelet family");
}

std::vector<double> wavelet_filter(WaveletFamily family) {
  const auto lo = scaling_filter(family);
  const std::size_t len = lo.size();
  std::vector<double> hi(len);
  for (std::size_t n = 0; n < len; ++n) hi[n] = (n % 2 == 0 ? 1.0 : -1.0) * lo[len - 1 - n];
  return hi;
}

Coeffs1D dwt1(std::span<const double> signal, const WaveletSpec& spec) {
  check_levels(spec);
  const std::size_t n = signal.size();
  const std::size_t block = std::size_t{1} << spec.levels;
  if (n == 0 || n % block != 0)
    throw std::invalid_argument("dwt1: signal length " + std::to_string(n) + " not divisible by 2^" +
                                std::to_string(spec.levels));
  const auto f = filters(spec.family);
  Coeffs1D out;
  std::vector<double> current(signal.begin(), signal.end());
  for (int j = 1; j <= spec.levels; ++j) {
    std::vector<double> a(current.size() / 2), d(current.size() / 2);
    analysis_step(current, f, a, d);
    out.details.push_back(std::move(d));
    current = std::move(a);
  }
  out.approx = std::move(current);
  return out;
}

std::vector<double> idwt1(const Coeffs1D& coeffs, const WaveletSpec& spec) {
  check_levels(spec);
  if (coeffs.details.size() != static_cast<std::size_t>(spec.levels))
    throw std::invalid_argument("idwt1: level count mismatch");
  const auto f = filters(spec.family);
  std::vector<double> current = coeffs.approx;
  for (int j = spec.levels; j >= 1; --j) {
    const auto& d = coeffs.details[j - 1];
    if (d.size() != current.size()) throw std::invalid_argument("idwt1: coefficient shape mismatch");
    std::vector<double> x(2 * current.size());
    synthesis_step(current, d, f, x);
    current = std::move(x);
  }
  return current;
}

SubbandCoeffs dwt2(const Grid& image, const WaveletSpec& spec) {
  check_levels(spec);
  const Eigen::Index block = Eigen::Index{1} << spec.levels;
  if (image.size() == 0 || image.rows() % block != 0 || image.cols() % block != 0)
    throw std::invalid_argument("dwt2: image " + std::to_string(image.rows()) + "x" + std::to_string(image.cols()) +
                                " not divisible by 2^" + std::to_string(spec.levels));
  const auto f = filters(spec.family);
  const Analysis step = [&f](std::span<const double> x, std::span<double> a, std::span<double> d) {
    analysis_step(x, f, a, d);
  };
  SubbandCoeffs out;
  out.levels = spec.levels;
  Grid current = image;
  for (int j = 1; j <= spec.levels; ++j) {
    Quad q = split2(current, true, step);
    out.details[{j, Orientation::Horizontal}] = std::move(q.horizontal);
    out.details[{j, Orientation::Vertical}] = std::move(q.vertical);
    out.details[{j, Orientation::Diagonal}] = std::move(q.diagonal);
    current = std::move(q.ll);
  }
  out.approx = std::move(current);
  return out;
}

Grid idwt2(const SubbandCoeffs& coeffs, const WaveletSpec& spec) {
  check_levels(spec);
  if (coeffs.stationary || coeffs.levels != spec.levels)
    throw std::invalid_argument("idwt2: coefficients do not match the wavelet spec");
  const auto f = filters(spec.family);
  const Synthesis step = [&f](std::span<const double> a, std::span<const double> d, std::span<double> x) {
    synthesis_step(a, d, f, x);
  };
  Grid current = coeffs.approx;
  for (int j = spec.levels; j >= 1; --j) {
    Quad q;
    q.ll = std::move(current);
    for (Orientation o : kOrientations) {
      auto it = coeffs.details.find({j, o});
      if (it == coeffs.details.end()) throw std::invalid_argument("idwt2: missing detail subband");
      check_shape(it->second, q.ll.rows(), q.ll.cols(), "idwt2");
    }
    q.horizontal = coeffs.detail(j, Orientation::Horizontal);
    q.vertical = coeffs.detail(j, Orientation::Vertical);
    q.diagonal = coeffs.detail(j, Orientation::Diagonal);
    current = merge2(q, true, step);
  }
  return current;
}

SubbandCoeffs swt2(const Grid& image, const WaveletSpec& spec) {
  check_levels(spec);
  const auto f = filters(spec.family);
  const auto len = static_cast<Eigen::Index>(f.lo.size());
  if (image.rows() < len || image.cols() < len)
    throw std::invalid_argument("swt2: image smaller than the filter support");
  SubbandCoeffs out;
  out.levels = spec.levels;
  out.stationary = true;
  Grid current = image;
  for (int j = 1; j <= spec.levels; ++j) {
    const std::size_t dilation = std::size_t{1} << (j - 1);
    const Analysis step = [&f, dilation](std::span<const double> x, std::span<double> a, std::span<double> d) {
      stationary_step(x, f, dilation, a, d);
    };
    Quad q = split2(current, false, step);
    out.details[{j, Orientation::Horizontal}] = std::move(q.horizontal);
    out.details[{j, Orientation::Vertical}] = std::move(q.vertical);
    out.details[{j, Orientation::Diagonal}] = std::move(q.diagonal);
    current = std::move(q.ll);
  }
  out.approx = std::move(current);
  return out;
}

Grid iswt2(const SubbandCoeffs& coeffs, const WaveletSpec& spec) {
  check_levels(spec);
  if (!coeffs.stationary || coeffs.levels != spec.levels)
    throw std::invalid_argument("iswt2: coefficients do not match the wavelet spec");
  const auto f = filters(spec.family);
  Grid current = coeffs.approx;
  for (int j = spec.levels; j >= 1; --j) {
    const std::size_t dilation = std::size_t{1} << (j - 1);
    const Synthesis step = [&f, dilation](std::span<const double> a, std::span<const double> d,
                                          std::span<double> x) { stationary_inverse(a, d, f, dilation, x); };
    Quad q;
    for (Orientation o : kOrientations) {
      auto it = coeffs.details.find({j, o});
      if (it == coeffs.details.end()) throw std::invalid_argument("iswt2: missing detail subband");
      check_shape(it->second, current.rows(), current.cols(), "iswt2");
    }
    q.ll = std::move(current);
    q.horizontal = coeffs.detail(j, Orientation::Horizontal);
    q.vertical = coeffs.detail(j, Orientation::Vertical);
    q.diagonal = coeffs.detail(j, Orientation::Diagonal);
    current = merge2(q, false, step);
  }
  return current;
}

Threshold parse_threshold(std::string_view text) {
  if (text == "universal") return UniversalThreshold{};
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument("threshold must be 'universal' or a number, got '" + std::string(text) + "'");
  if (!(v >= 0.0)) throw std::invalid_argument("threshold must be non-negative");
  return v;
}

std::string to_string(const Threshold& t) {
  if (std::holds_alternative<UniversalThreshold>(t)) return "universal";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, std::get<double>(t));
  return std::string(buf, ptr);
}

double mad_sigma(std::span<const double> values) {
  if (values.empty()) return 0.0;
  std::vector<double> v(values.begin(), values.end());
  auto median = [](std::vector<double>& w) {
    const std::size_t mid = w.size() / 2;
    std::nth_element(w.begin(), w.begin() + mid, w.end());
    double m = w[mid];
    if (w.size() % 2 == 0) m = 0.5 * (m + *std::max_element(w.begin(), w.begin() + mid));
    return m;
  };
  const double med = median(v);
  for (double& x : v) x = std::abs(x - med);
  return median(v) / 0.6745;
}

double universal_threshold(const SubbandCoeffs& coeffs, std::size_t pixel_count) {
  const Grid& finest = coeffs.detail(1, Orientation::Diagonal);
  const double sigma = mad_sigma(std::span<const double>(finest.data(), static_cast<std::size_t>(finest.size())));
  if (pixel_count < 2) return 0.0;
  return sigma * std::sqrt(2.0 * std::log(static_cast<double>(pixel_count)));
}

Grid soft_threshold_denoise(const Grid& image, const WaveletSpec& spec, const Threshold& lambda) {
  if (const double* v = std::get_if<double>(&lambda); v && !(*v >= 0.0))
    throw std::invalid_argument("soft threshold must be non-negative");
  SubbandCoeffs c = dwt2(image, spec);
  const double lam = std::holds_alternative<UniversalThreshold>(lambda)
                         ? universal_threshold(c, static_cast<std::size_t>(image.size()))
                         : std::get<double>(lambda);
  if (lam == 0.0) return image;
  for (auto& [key, g] : c.details) g = g.unaryExpr([lam](double x) { return soft_threshold(x, lam); });
  return idwt2(c, spec);
}

}  // namespace npmddm
