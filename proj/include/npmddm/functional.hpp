#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace npmddm {

/// Curve time series in coefficient form: row m holds the coefficients of
/// f_m - f_bar, `mean` those of f_bar.
struct CurveSeries {
  Eigen::MatrixXd coeffs;  // M x K, column means zero
  Eigen::VectorXd mean;    // K

  /// Centres the rows of `curves` (M x K).
  static CurveSeries from_curves(const Eigen::MatrixXd& curves);

  Eigen::Index size() const { return coeffs.rows(); }
  Eigen::Index dim() const { return coeffs.cols(); }
  /// Uncentred curves, mean added back to every row.
  Eigen::MatrixXd curves() const { return coeffs.rowwise() + mean.transpose(); }
};

/// One step of the sequential eigenvalue test.
struct EigenvalueTest {
  int index;        // tests H0: lambda_{index+1} = 0
  double observed;
  double critical;  // (1 - alpha) bootstrap quantile
  bool rejected;
};

struct FunctionalModel {
  int d_hat = 0;
  int lag = 2;
  Eigen::VectorXd eigenvalues;    // K, descending
  Eigen::MatrixXd eigenvectors;   // K x K, columns ordered as eigenvalues
  Eigen::MatrixXd eigenfunctions; // K x d_hat, leading columns of eigenvectors
  Eigen::MatrixXd loadings;       // M x d_hat, eta_{k,m} = <c^m, h_k>
  std::vector<EigenvalueTest> tests;
};

struct DimensionTestOptions {
  int lag = 2;
  int replicates = 500;
  double alpha = 0.05;
  std::optional<double> block_length = 1.0;  // mean block length; nullopt: ceil(M^{1/3})
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;  // distinguishes independent tests under one seed
  int threads = 1;
};

/// D = (M-p)^{-2} sum_{k=1..p} A_k^T A_k with A_k = C_{(k)}^T C, where C holds
/// rows 1..M-p and C_{(k)} rows 1+k..M-p+k. Symmetric positive semidefinite.
Eigen::MatrixXd build_d_matrix(const CurveSeries& cs, int lag);

/// Sequential bootstrap test on the eigenvalues of D. For q = 0, 1, ... the
/// series is split into its projection on the top-q eigenvectors plus a
/// residual; replicates keep the projection and resample residual rows with a
/// stationary bootstrap. The default mean block length of 1 draws residual
/// rows independently, which matches the white-noise null; longer blocks keep
/// any serial dependence left in the residual. d_hat is the first q whose observed
/// lambda_{q+1} does not exceed the (1 - alpha) replicate quantile.
FunctionalModel estimate_dimension(const CurveSeries& cs, const DimensionTestOptions& options = {});

/// Model with a prescribed dimension (no testing).
FunctionalModel fit_dimension(const CurveSeries& cs, int lag, int d);

/// mean + loadings * eigenfunctions^T, as a curve series around the same mean.
CurveSeries reconstruct(const FunctionalModel& model, const CurveSeries& cs);

/// Projections of the curves on the leading `components` eigenvectors (M x components).
Eigen::MatrixXd project_loadings(const FunctionalModel& model, const CurveSeries& cs, int components);

/// Point forecasts (horizon x d_hat) from an AR(1) with intercept fitted by
/// least squares to each loading series.
Eigen::MatrixXd forecast_loadings(const FunctionalModel& model, int horizon);

/// Politis-Romano stationary bootstrap indices (circular, geometric block lengths).
std::vector<Eigen::Index> stationary_bootstrap_indices(Eigen::Index n, double mean_block, std::mt19937_64& rng);

}  // namespace npmddm
