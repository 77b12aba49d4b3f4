#pragma once

#include "npmddm/raster.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace npmddm {

/// Exponential model gamma(h) = tau2 + sigma2 (1 - exp(-h / theta)) with a
/// Wendland taper of range taper_range applied to the covariance.
struct VariogramModel {
  double tau2 = 0.0;
  double sigma2 = 1.0;
  double theta = 1.0;
  double taper_range = 3.0;

  double correlation(double h) const;
  double semivariogram(double h) const;
  /// Tapered covariance sigma2 rho(h) W(h, r), without the nugget.
  double tapered_covariance(double h) const;
};

/// (1 - h/r)_+^4 (1 + 4h/r).
double wendland_taper(double h, double r);

struct EmpiricalVariogram {
  std::vector<double> centers;  // mean pair distance in the bin
  std::vector<double> gamma;
  std::vector<std::uint64_t> counts;  // pixel pairs per image
};

struct VariogramOptions {
  double max_lag = 8.0;
  int bins = 15;
  std::size_t subsample = 0;  // max anchor pixels, 0 = all
  std::uint64_t seed = 1;
};

/// Binned semivariance pooled over images; empty bins are dropped.
EmpiricalVariogram empirical_variogram(const RasterSeries& series, const VariogramOptions& options = {});

class VariogramFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VariogramFit {
  VariogramModel model;
  double contrast = 0.0;
  double initial_contrast = 0.0;
  int iterations = 0;
};

/// Count-weighted least squares fit of the exponential model, by
/// Nelder-Mead with projection onto tau2 >= 0, sigma2 > 0 and
/// 0 < theta <= 10 * (largest bin centre).
/// The taper range defaults to 3 theta.
VariogramFit fit_variogram(const EmpiricalVariogram& ev);

/// Count-weighted squared distance between the bins and the model.
double variogram_contrast(const EmpiricalVariogram& ev, const VariogramModel& model);

struct Site {
  double x = 0.0;
  double y = 0.0;
};

/// Pixel centres of an image in spatial units, row-major.
std::vector<Site> grid_sites(Eigen::Index rows, Eigen::Index cols, PixelSpacing spacing = {});

class KrigingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tapered ordinary kriging over a fixed set of observation sites. The sparse
/// covariance is factorised once (LDL^T, AMD ordering) and reused.
class OrdinaryKriging {
 public:
  OrdinaryKriging(std::vector<Site> sites, VariogramModel model);

  /// mu + c^T Sigma^{-1} (z - mu 1) at every target, mu the GLS mean of z.
  Eigen::VectorXd predict(const Eigen::VectorXd& values, std::span<const Site> targets) const;
  double mean(const Eigen::VectorXd& values) const;

  const Eigen::SparseMatrix<double>& covariance() const { return sigma_; }
  const std::vector<Site>& sites() const { return sites_; }

 private:
  std::vector<std::pair<Eigen::Index, double>> cross_covariance(const Site& target) const;

  std::vector<Site> sites_;
  VariogramModel model_;
  Eigen::SparseMatrix<double> sigma_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
  Eigen::VectorXd sigma_inv_ones_;
  double ones_sigma_inv_ones_ = 0.0;
  // Bucket grid of cell size taper_range for neighbour queries.
  double cell_ = 1.0;
  double x0_ = 0.0, y0_ = 0.0;
  Eigen::Index nx_ = 1, ny_ = 1;
  std::vector<std::vector<Eigen::Index>> buckets_;
};

/// Predictions for every image at `targets` (M x targets).
Eigen::MatrixXd krige_predict(const RasterSeries& series, const VariogramModel& model,
                              std::span<const Site> targets, int threads = 1);

/// Kriging predictions at the observed pixel sites.
RasterSeries krige_smooth(const RasterSeries& series, const VariogramModel& model, int threads = 1);

}  // namespace npmddm
