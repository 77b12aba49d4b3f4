#pragma once

#include "npmddm/raster.hpp"

#include <compare>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace npmddm {

/// Orthonormal Daubechies families, named by filter length.
enum class WaveletFamily { Haar, Daubechies4, Daubechies8 };
enum class Boundary { Periodic };

struct WaveletSpec {
  WaveletFamily family = WaveletFamily::Daubechies4;
  int levels = 3;
  Boundary boundary = Boundary::Periodic;
};

WaveletFamily parse_wavelet_family(std::string_view name);
std::string to_string(WaveletFamily family);

/// Lowpass (scaling) analysis filter h, normalised so sum h = sqrt(2), sum h^2 = 1.
std::span<const double> scaling_filter(WaveletFamily family);
/// Highpass filter g[n] = (-1)^n h[L-1-n].
std::vector<double> wavelet_filter(WaveletFamily family);

/// Detail orientation. Horizontal is the subband that is highpass along rows
/// (index [0,1]), vertical is highpass along columns ([1,0]), diagonal is both ([1,1]).
enum class Orientation { Horizontal, Vertical, Diagonal };
inline constexpr Orientation kOrientations[] = {Orientation::Horizontal, Orientation::Vertical,
                                                Orientation::Diagonal};
std::string to_string(Orientation o);

struct SubbandKey {
  int level;  // 1 = finest
  Orientation orientation;
  auto operator<=>(const SubbandKey&) const = default;
};

/// 2D coefficient tree. Decimated: level-j details are (rows/2^j) x (cols/2^j).
/// Stationary: every subband has the image size.
struct SubbandCoeffs {
  Grid approx;
  std::map<SubbandKey, Grid> details;
  int levels = 0;
  bool stationary = false;

  const Grid& detail(int level, Orientation o) const { return details.at({level, o}); }
};

/// 1D coefficients. details[j-1] holds level j (finest first).
struct Coeffs1D {
  std::vector<double> approx;
  std::vector<std::vector<double>> details;
};

Coeffs1D dwt1(std::span<const double> signal, const WaveletSpec& spec);
std::vector<double> idwt1(const Coeffs1D& coeffs, const WaveletSpec& spec);

SubbandCoeffs dwt2(const Grid& image, const WaveletSpec& spec);
Grid idwt2(const SubbandCoeffs& coeffs, const WaveletSpec& spec);

/// Undecimated (a trous) transform with the same orthonormal filters. Each
/// level multiplies energy by 4, so sum_j 4^-j |d_j|^2 + 4^-J |a_J|^2 = |x|^2.
SubbandCoeffs swt2(const Grid& image, const WaveletSpec& spec);
Grid iswt2(const SubbandCoeffs& coeffs, const WaveletSpec& spec);

struct UniversalThreshold {};
using Threshold = std::variant<UniversalThreshold, double>;

/// Parses "universal" or a non-negative number.
Threshold parse_threshold(std::string_view text);
std::string to_string(const Threshold& t);

inline double soft_threshold(double c, double lambda) {
  const double a = (c < 0 ? -c : c) - lambda;
  return a > 0 ? (c < 0 ? -a : a) : 0.0;
}

/// Median absolute deviation about the median, divided by 0.6745.
double mad_sigma(std::span<const double> values);

/// sigma_hat * sqrt(2 ln N), sigma_hat from the finest diagonal subband.
double universal_threshold(const SubbandCoeffs& coeffs, std::size_t pixel_count);

/// DWT, soft-threshold every detail subband, inverse DWT. Approximation
/// coefficients are untouched.
Grid soft_threshold_denoise(const Grid& image, const WaveletSpec& spec, const Threshold& lambda);

}  // namespace npmddm
