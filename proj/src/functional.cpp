#include "npmddm/functional.hpp"

#include "npmddm/parallel.hpp"
#include "npmddm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace npmddm {

namespace {

Eigen::MatrixXd d_matrix(const Eigen::MatrixXd& c, int lag) {
  const Eigen::Index m = c.rows();
  const Eigen::Index k = c.cols();
  const Eigen::Index span = m - lag;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k, k);
  const auto base = c.topRows(span);
  for (int shift = 1; shift <= lag; ++shift) {
    const Eigen::MatrixXd a = c.middleRows(shift, span).transpose() * base;
    d.noalias() += a.transpose() * a;
  }
  d /= static_cast<double>(span) * static_cast<double>(span);
  return 0.5 * (d + d.transpose());
}

struct Spectrum {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // matching columns
};

// Descending eigenpairs; each vector's largest-magnitude entry is made positive.
Spectrum spectrum(const Eigen::MatrixXd& d) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigen decomposition of D failed");
  const Eigen::Index k = d.rows();
  Spectrum s{es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::Index arg = 0;
    s.vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (s.vectors(arg, j) < 0) s.vectors.col(j) *= -1.0;
  }
  return s;
}

double largest_eigenvalue_at(const Eigen::MatrixXd& d, int index) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d, Eigen::EigenvaluesOnly);
  const auto& v = es.eigenvalues();
  return v[v.size() - 1 - index];
}

void check_lag(Eigen::Index m, int lag) {
  if (lag < 1 || lag > m - 2)
    throw std::invalid_argument("lag p=" + std::to_string(lag) + " outside [1, M-2] for M=" + std::to_string(m));
}

FunctionalModel assemble(const CurveSeries& cs, int lag, Spectrum s, int d) {
  FunctionalModel model;
  model.lag = lag;
  model.d_hat = d;
  model.eigenvalues = std::move(s.values);
  model.eigenvectors = std::move(s.vectors);
  model.eigenfunctions = model.eigenvectors.leftCols(d);
  model.loadings = cs.coeffs * model.eigenfunctions;
  return model;
}

}  // namespace

CurveSeries CurveSeries::from_curves(const Eigen::MatrixXd& curves) {
  if (curves.rows() == 0 || curves.cols() == 0) throw std::invalid_argument("empty curve series");
  CurveSeries cs;
  cs.mean = curves.colwise().mean().transpose();
  cs.coeffs = curves.rowwise() - cs.mean.transpose();
  return cs;
}

Eigen::MatrixXd build_d_matrix(const CurveSeries& cs, int lag) {
  check_lag(cs.size(), lag);
  return d_matrix(cs.coeffs, lag);
}

std::vector<Eigen::Index> stationary_bootstrap_indices(Eigen::Index n, double mean_block, std::mt19937_64& rng) {
  if (n <= 0) return {};
  if (!(mean_block >= 1.0)) throw std::invalid_argument("mean block length must be >= 1");
  std::uniform_int_distribution<Eigen::Index> start(0, n - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const double p_new = 1.0 / mean_block;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  idx[0] = start(rng);
  for (std::size_t t = 1; t < idx.size(); ++t) idx[t] = coin(rng) < p_new ? start(rng) : (idx[t - 1] + 1) % n;
  return idx;
}

FunctionalModel fit_dimension(const CurveSeries& cs, int lag, int d) {
  check_lag(cs.size(), lag);
  if (d < 0 || d > cs.dim()) throw std::invalid_argument("dimension outside [0, K]");
  return assemble(cs, lag, spectrum(d_matrix(cs.coeffs, lag)), d);
}

FunctionalModel estimate_dimension(const CurveSeries& cs, const DimensionTestOptions& options) {
  const Eigen::Index m = cs.size();
  const Eigen::Index k = cs.dim();
  if (m < 8) throw std::invalid_argument("dimension test needs M >= 8, got " + std::to_string(m));
  if (options.replicates < 100) throw std::invalid_argument("dimension test needs at least 100 replicates");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  check_lag(m, options.lag);

  const double block = options.block_length.value_or(std::ceil(std::cbrt(static_cast<double>(m))));
  Spectrum s = spectrum(d_matrix(cs.coeffs, options.lag));
  const double floor = std::max(s.values[0], 0.0) * 1e-12;
  const auto replicates = static_cast<std::size_t>(options.replicates);
  const std::size_t crit_index =
      std::min(replicates - 1, static_cast<std::size_t>(std::ceil((1.0 - options.alpha) * options.replicates)) - 1);

  std::vector<EigenvalueTest> tests;
  int d_hat = static_cast<int>(k);
  for (int q = 0; q < k; ++q) {
    const double observed = s.values[q];
    if (!(observed > floor) || observed <= 0.0) {
      d_hat = q;
      break;
    }
    const Eigen::MatrixXd h = s.vectors.leftCols(q);
    const Eigen::MatrixXd fitted = cs.coeffs * h * h.transpose();
    const Eigen::MatrixXd residual = cs.coeffs - fitted;

    std::vector<double> stats(replicates);
    parallel_for(replicates, options.threads, [&](std::size_t b) {
      auto rng = make_stream(options.seed, {stream::kBootstrap, options.stream, static_cast<std::uint64_t>(q), b});
      const auto idx = stationary_bootstrap_indices(m, block, rng);
      Eigen::MatrixXd x = fitted;
      for (Eigen::Index t = 0; t < m; ++t) x.row(t) += residual.row(idx[static_cast<std::size_t>(t)]);
      x.rowwise() -= x.colwise().mean();
      stats[b] = largest_eigenvalue_at(d_matrix(x, options.lag), q);
    });
    std::sort(stats.begin(), stats.end());
    const double critical = stats[crit_index];
    const bool rejected = observed > critical;
    tests.push_back({q, observed, critical, rejected});
    if (!rejected) {
      d_hat = q;
      break;
    }
  }
  FunctionalModel model = assemble(cs, options.lag, std::move(s), d_hat);
  model.tests = std::move(tests);
  return model;
}

CurveSeries reconstruct(const FunctionalModel& model, const CurveSeries& cs) {
  if (model.eigenfunctions.rows() != cs.dim() || model.loadings.rows() != cs.size())
    throw std::invalid_argument("reconstruct: model was fitted to a different curve series");
  CurveSeries out;
  out.mean = cs.mean;
  out.coeffs = model.loadings * model.eigenfunctions.transpose();
  return out;
}

Eigen::MatrixXd project_loadings(const FunctionalModel& model, const CurveSeries& cs, int components) {
  if (model.eigenvectors.rows() != cs.dim()) throw std::invalid_argument("project_loadings: dimension mismatch");
  if (components < 0 || components > cs.dim()) throw std::invalid_argument("project_loadings: bad component count");
  return cs.coeffs * model.eigenvectors.leftCols(components);
}

Eigen::MatrixXd forecast_loadings(const FunctionalModel& model, int horizon) {
  if (horizon < 1) throw std::invalid_argument("forecast horizon must be >= 1");
  const Eigen::Index m = model.loadings.rows();
  if (m < 10) throw std::invalid_argument("loading forecasts need M >= 10, got " + std::to_string(m));
  const Eigen::Index d = model.loadings.cols();
  Eigen::MatrixXd out(horizon, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const Eigen::VectorXd y = model.loadings.col(c);
    const auto x = y.head(m - 1);
    const auto z = y.tail(m - 1);
    const double xbar = x.mean();
    const double zbar = z.mean();
    const double sxx = (x.array() - xbar).square().sum();
    double phi = 0.0;
    double intercept = y.mean();
    if (sxx > 1e-14 * (1.0 + x.squaredNorm())) {
      phi = ((x.array() - xbar) * (z.array() - zbar)).sum() / sxx;
      intercept = zbar - phi * xbar;
    }
    double last = y[m - 1];
    for (int h = 0; h < horizon; ++h) {
      last = intercept + phi * last;
      out(h, c) = last;
    }
  }
  return out;
}

}  // namespace npmddm
