#include "npmddm/density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace npmddm {

SqrtDensity SqrtDensity::from_coefficients(Eigen::VectorXd coeffs, Support support, int resolution,
                                           WaveletSpec basis) {
  if (!(support.lower < support.upper)) throw std::invalid_argument("density support must satisfy a < b");
  if (resolution < 0 || coeffs.size() != (Eigen::Index{1} << resolution))
    throw std::invalid_argument("density coefficient count must be 2^resolution");
  coeffs = coeffs.cwiseAbs();
  const double norm = coeffs.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw std::invalid_argument("density coefficients have zero norm");
  coeffs /= norm;
  return SqrtDensity(std::move(coeffs), support, resolution, basis);
}

double SqrtDensity::sqrt_at(double x) const {
  if (x < support_.lower || x > support_.upper) return 0.0;
  const auto cells = coeffs_.size();
  auto k = static_cast<Eigen::Index>(std::floor((x - support_.lower) / cell_width()));
  k = std::clamp<Eigen::Index>(k, 0, cells - 1);
  return coeffs_[k] / std::sqrt(cell_width());
}

SqrtDensity estimate_sqrt_density(std::span<const double> sample, Support support, int resolution,
                                  const WaveletSpec& basis, std::optional<Threshold> smoothing) {
  if (sample.size() < 2) throw std::invalid_argument("density estimation needs at least 2 samples");
  if (!(support.lower < support.upper)) throw std::invalid_argument("density support must satisfy a < b");
  if (resolution < 1 || resolution > 24) throw std::invalid_argument("density resolution out of range");

  const Eigen::Index cells = Eigen::Index{1} << resolution;
  const double scale = static_cast<double>(cells) / support.width();
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(cells);
  for (double x : sample) {
    if (std::isnan(x)) throw std::invalid_argument("density sample contains NaN");
    const double pos = std::floor((x - support.lower) * scale);
    const auto k = static_cast<Eigen::Index>(std::clamp(pos, 0.0, static_cast<double>(cells - 1)));
    counts[k] += 1.0;
  }
  Eigen::VectorXd alpha = (counts / static_cast<double>(sample.size())).cwiseSqrt();

  if (smoothing) {
    if (basis.levels > resolution)
      throw std::invalid_argument("density smoothing needs wavelet levels <= resolution");
    Coeffs1D c = dwt1(std::span<const double>(alpha.data(), static_cast<std::size_t>(cells)), basis);
    double lam = 0.0;
    if (std::holds_alternative<UniversalThreshold>(*smoothing)) {
      lam = mad_sigma(c.details.front()) * std::sqrt(2.0 * std::log(static_cast<double>(cells)));
    } else {
      lam = std::get<double>(*smoothing);
    }
    for (auto& level : c.details)
      for (double& v : level) v = soft_threshold(v, lam);
    const auto back = idwt1(c, basis);
    alpha = Eigen::Map<const Eigen::VectorXd>(back.data(), cells);
  }
  return SqrtDensity::from_coefficients(std::move(alpha), support, resolution, basis);
}

double hellinger_coefficients(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hellinger: coefficient length mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("hellinger: zero coefficient vector");
  return (a / na - b / nb).norm() / std::sqrt(2.0);
}

double hellinger(const SqrtDensity& p, const SqrtDensity& q) {
  if (!(p.support() == q.support()) || p.resolution() != q.resolution() ||
      p.basis().family != q.basis().family || p.basis().levels != q.basis().levels)
    throw std::invalid_argument("hellinger: densities live on different grids");
  // Non-negative unit vectors, so the distance is at most 1 up to rounding.
  return std::min(1.0, (p.coeffs() - q.coeffs()).norm() / std::sqrt(2.0));
}

}  // namespace npmddm
