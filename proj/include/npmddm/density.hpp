#pragma once

#include "npmddm/wavelet.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>

namespace npmddm {

struct Support {
  double lower = 0.0;
  double upper = 1.0;
  double width() const { return upper - lower; }
  bool operator==(const Support&) const = default;
};

/// Square root of a density on [lower, upper], stored as its 2^J0 scaling
/// coefficients in the orthonormal box basis phi_k = w^{-1/2} 1[cell k],
/// w = (upper - lower) / 2^J0. Coefficients are non-negative with unit l2
/// norm, so f = (sum_k alpha_k phi_k)^2 integrates to one.
class SqrtDensity {
 public:
  /// Takes |coeffs| and rescales to unit norm. Throws on a zero vector.
  static SqrtDensity from_coefficients(Eigen::VectorXd coeffs, Support support, int resolution,
                                       WaveletSpec basis = {});

  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  const Support& support() const { return support_; }
  int resolution() const { return resolution_; }
  const WaveletSpec& basis() const { return basis_; }
  double cell_width() const { return support_.width() / static_cast<double>(coeffs_.size()); }

  /// Value of the estimated sqrt-density at x (0 outside the support).
  double sqrt_at(double x) const;
  /// Estimated density at x.
  double density_at(double x) const {
    const double s = sqrt_at(x);
    return s * s;
  }

 private:
  SqrtDensity(Eigen::VectorXd coeffs, Support support, int resolution, WaveletSpec basis)
      : coeffs_(std::move(coeffs)), support_(support), resolution_(resolution), basis_(basis) {}

  Eigen::VectorXd coeffs_;
  Support support_;
  int resolution_;
  WaveletSpec basis_;
};

/// Histogram square-root estimator: alpha_k = sqrt(n_k / n) on 2^J0 cells of
/// the support (samples outside are clipped to the boundary cell). When
/// `smoothing` is set the coefficient vector is passed through dwt1 with
/// `basis`, detail coefficients are soft-thresholded and the result inverted
/// and renormalised.
SqrtDensity estimate_sqrt_density(std::span<const double> sample, Support support, int resolution,
                                  const WaveletSpec& basis = {}, std::optional<Threshold> smoothing = std::nullopt);

/// He(f, g) = (1/2 int (sqrt f - sqrt g)^2)^{1/2}, computed in coefficient space.
double hellinger(const SqrtDensity& p, const SqrtDensity& q);

/// (1/sqrt 2) * || a/|a| - b/|b| ||, the raw coefficient-space form.
double hellinger_coefficients(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace npmddm
