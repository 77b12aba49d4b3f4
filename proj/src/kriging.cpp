#include "npmddm/kriging.hpp"

#include "npmddm/parallel.hpp"
#include "npmddm/rng.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <iterator>
#include <sstream>
#include <tuple>

namespace npmddm {

double wendland_taper(double h, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("taper range must be positive");
  const double x = h / r;
  if (x >= 1.0) return 0.0;
  const double a = 1.0 - x;
  return a * a * a * a * (1.0 + 4.0 * x);
}

double VariogramModel::correlation(double h) const { return std::exp(-h / theta); }

double VariogramModel::semivariogram(double h) const {
  if (h <= 0.0) return 0.0;
  return tau2 + sigma2 * (1.0 - correlation(h));
}

double VariogramModel::tapered_covariance(double h) const {
  return sigma2 * correlation(h) * wendland_taper(h, taper_range);
}

std::vector<Site> grid_sites(Eigen::Index rows, Eigen::Index cols, PixelSpacing spacing) {
  std::vector<Site> out;
  out.reserve(static_cast<std::size_t>(rows * cols));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      out.push_back({static_cast<double>(j) * spacing.dx, static_cast<double>(i) * spacing.dy});
  return out;
}

EmpiricalVariogram empirical_variogram(const RasterSeries& series, const VariogramOptions& options) {
  if (!(options.max_lag > 0.0)) throw std::invalid_argument("variogram max_lag must be positive");
  if (options.bins < 1) throw std::invalid_argument("variogram needs at least one bin");
  const Eigen::Index rows = series.rows();
  const Eigen::Index cols = series.cols();
  const auto [dx, dy] = series.spacing();

  // Half-plane offsets so that each unordered pixel pair is visited once.
  struct Offset {
    Eigen::Index di, dj;
    double h;
    int bin;
  };
  const double width = options.max_lag / options.bins;
  std::vector<Offset> offsets;
  const auto reach_i = static_cast<Eigen::Index>(std::floor(options.max_lag / dy));
  const auto reach_j = static_cast<Eigen::Index>(std::floor(options.max_lag / dx));
  for (Eigen::Index di = 0; di <= std::min(reach_i, rows - 1); ++di) {
    for (Eigen::Index dj = -std::min(reach_j, cols - 1); dj <= std::min(reach_j, cols - 1); ++dj) {
      if (di == 0 && dj <= 0) continue;
      const double h = std::hypot(static_cast<double>(di) * dy, static_cast<double>(dj) * dx);
      if (h > options.max_lag) continue;
      const int bin = std::min(options.bins - 1, static_cast<int>(std::ceil(h / width)) - 1);
      offsets.push_back({di, dj, h, std::max(bin, 0)});
    }
  }

  std::vector<Eigen::Index> anchors(static_cast<std::size_t>(rows * cols));
  std::iota(anchors.begin(), anchors.end(), Eigen::Index{0});
  if (options.subsample > 0 && anchors.size() > options.subsample) {
    auto rng = make_stream(options.seed, {stream::kVariogram});
    std::vector<Eigen::Index> picked;
    picked.reserve(options.subsample);
    std::sample(anchors.begin(), anchors.end(), std::back_inserter(picked), options.subsample, rng);
    anchors = std::move(picked);
  }

  std::vector<double> sq(static_cast<std::size_t>(options.bins), 0.0);
  std::vector<double> dist(static_cast<std::size_t>(options.bins), 0.0);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(options.bins), 0);
  for (Eigen::Index a : anchors) {
    const Eigen::Index i = a / cols;
    const Eigen::Index j = a % cols;
    for (const auto& o : offsets) {
      const Eigen::Index i2 = i + o.di;
      const Eigen::Index j2 = j + o.dj;
      if (i2 >= rows || j2 < 0 || j2 >= cols) continue;
      const auto b = static_cast<std::size_t>(o.bin);
      for (const auto& img : series.images()) {
        const double d = img(i, j) - img(i2, j2);
        sq[b] += d * d;
      }
      dist[b] += o.h;
      ++counts[b];
    }
  }

  EmpiricalVariogram ev;
  const double images = static_cast<double>(series.size());
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] == 0) continue;
    const double n = static_cast<double>(counts[b]);
    ev.centers.push_back(dist[b] / n);
    ev.gamma.push_back(0.5 * sq[b] / (images * n));
    ev.counts.push_back(counts[b]);
  }
  return ev;
}

double variogram_contrast(const EmpiricalVariogram& ev, const VariogramModel& model) {
  double s = 0.0;
  for (std::size_t b = 0; b < ev.centers.size(); ++b) {
    const double r = ev.gamma[b] - model.semivariogram(ev.centers[b]);
    s += static_cast<double>(ev.counts[b]) * r * r;
  }
  return s;
}

namespace {

// Fit runs on distances scaled by h_scale and semivariances by g_scale.
struct FitProblem {
  const EmpiricalVariogram* ev;
  double h_scale;
  double g_scale;
  double weight_scale;
  double theta_min;
  double theta_max;
  double sigma_min;
};

VariogramModel project(const FitProblem& p, const gsl_vector* x) {
  VariogramModel m;
  m.tau2 = std::max(gsl_vector_get(x, 0), 0.0) * p.g_scale;
  m.sigma2 = std::max(gsl_vector_get(x, 1), p.sigma_min) * p.g_scale;
  m.theta = std::clamp(gsl_vector_get(x, 2), p.theta_min, p.theta_max) * p.h_scale;
  return m;
}

double objective(const gsl_vector* x, void* params) {
  const auto& p = *static_cast<const FitProblem*>(params);
  const VariogramModel m = project(p, x);
  // Distance outside the box keeps the simplex from drifting on the flat projected region.
  double outside = 0.0;
  outside += std::pow(std::min(gsl_vector_get(x, 0), 0.0), 2);
  outside += std::pow(std::min(gsl_vector_get(x, 1) - p.sigma_min, 0.0), 2);
  outside += std::pow(std::min(gsl_vector_get(x, 2) - p.theta_min, 0.0), 2);
  outside += std::pow(std::max(gsl_vector_get(x, 2) - p.theta_max, 0.0), 2);
  return variogram_contrast(*p.ev, m) / (p.g_scale * p.g_scale * p.weight_scale) + outside;
}

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* s) const { gsl_multimin_fminimizer_free(s); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

}  // namespace

VariogramFit fit_variogram(const EmpiricalVariogram& ev) {
  if (ev.centers.size() < 3) throw std::invalid_argument("variogram fit needs at least 3 nonempty bins");
  if (ev.gamma.size() != ev.centers.size() || ev.counts.size() != ev.centers.size())
    throw std::invalid_argument("variogram arrays differ in length");

  FitProblem p;
  p.ev = &ev;
  p.h_scale = *std::max_element(ev.centers.begin(), ev.centers.end());
  const double g_max = *std::max_element(ev.gamma.begin(), ev.gamma.end());
  p.g_scale = g_max > 0.0 ? g_max : 1.0;
  p.weight_scale = static_cast<double>(std::accumulate(ev.counts.begin(), ev.counts.end(), std::uint64_t{0}));
  p.theta_min = 1e-6;
  // A flat variogram trades sill against range without bound; cap the range at ten times the largest lag.
  p.theta_max = 10.0;
  p.sigma_min = 1e-9;
  if (!(p.h_scale > 0.0)) throw std::invalid_argument("variogram bin centres must be positive");

  // Start: half the first-bin value as nugget, the rest as sill, range a third of the span.
  const auto first = static_cast<std::size_t>(std::min_element(ev.centers.begin(), ev.centers.end()) - ev.centers.begin());
  const double tau0 = 0.5 * ev.gamma[first] / p.g_scale;
  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(3));
  gsl_vector_set(x.get(), 0, tau0);
  gsl_vector_set(x.get(), 1, std::max(1.0 - tau0, 0.1));
  gsl_vector_set(x.get(), 2, 1.0 / 3.0);

  gsl_multimin_function fn{&objective, 3, &p};
  VariogramFit fit;
  fit.initial_contrast = variogram_contrast(ev, project(p, x.get()));

  gsl_set_error_handler_off();
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3));
  std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(3));
  // Restarting from the best vertex guards against a collapsed simplex.
  for (int restart = 0; restart < 6; ++restart) {
    gsl_vector_set_all(step.get(), restart == 0 ? 0.2 : 0.05);
    gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get());
    for (int iter = 0; iter < 20000; ++iter) {
      ++fit.iterations;
      if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), 1e-12) == GSL_SUCCESS) break;
    }
    gsl_vector_memcpy(x.get(), gsl_multimin_fminimizer_x(s.get()));
  }

  fit.model = project(p, x.get());
  fit.model.taper_range = 3.0 * fit.model.theta;
  fit.contrast = variogram_contrast(ev, fit.model);
  const double negligible = 1e-20 * p.g_scale * p.g_scale * p.weight_scale;
  if (!(fit.contrast < fit.initial_contrast) && fit.initial_contrast > negligible) {
    std::ostringstream msg;
    msg << "variogram fit did not improve on the initial simplex (contrast " << fit.contrast << ")";
    throw VariogramFitError(msg.str());
  }
  return fit;
}

OrdinaryKriging::OrdinaryKriging(std::vector<Site> sites, VariogramModel model)
    : sites_(std::move(sites)), model_(model) {
  if (sites_.empty()) throw KrigingError("kriging needs at least one site");
  if (!(model_.tau2 >= 0.0) || !(model_.sigma2 > 0.0) || !(model_.theta > 0.0) || !(model_.taper_range > 0.0))
    throw KrigingError("invalid variogram model for kriging");
  const auto n = static_cast<Eigen::Index>(sites_.size());

  if (model_.tau2 == 0.0) {
    std::vector<Eigen::Index> order(sites_.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [this](Eigen::Index a, Eigen::Index b) {
      return std::tie(sites_[a].x, sites_[a].y) < std::tie(sites_[b].x, sites_[b].y);
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
      const Site& a = sites_[order[k - 1]];
      const Site& b = sites_[order[k]];
      if (a.x == b.x && a.y == b.y) {
        std::ostringstream msg;
        msg << "covariance is singular: sites " << std::min(order[k - 1], order[k]) << " and "
            << std::max(order[k - 1], order[k]) << " coincide and the nugget is zero";
        throw KrigingError(msg.str());
      }
    }
  }

  double xmax = sites_.front().x, ymax = sites_.front().y;
  x0_ = xmax;
  y0_ = ymax;
  for (const auto& s : sites_) {
    x0_ = std::min(x0_, s.x);
    y0_ = std::min(y0_, s.y);
    xmax = std::max(xmax, s.x);
    ymax = std::max(ymax, s.y);
  }
  // Cap the bucket count for very long ranges; queries stay exact either way.
  cell_ = std::max({model_.taper_range, (xmax - x0_) / 512.0, (ymax - y0_) / 512.0, 1e-12});
  nx_ = static_cast<Eigen::Index>(std::floor((xmax - x0_) / cell_)) + 1;
  ny_ = static_cast<Eigen::Index>(std::floor((ymax - y0_) / cell_)) + 1;
  buckets_.assign(static_cast<std::size_t>(nx_ * ny_), {});
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto bx = static_cast<Eigen::Index>(std::floor((sites_[i].x - x0_) / cell_));
    const auto by = static_cast<Eigen::Index>(std::floor((sites_[i].y - y0_) / cell_));
    buckets_[static_cast<std::size_t>(by * nx_ + bx)].push_back(i);
  }

  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const auto& [j, c] : cross_covariance(sites_[i])) {
      if (j < i) continue;
      const double v = j == i ? c + model_.tau2 : c;
      triplets.emplace_back(i, j, v);
      if (j != i) triplets.emplace_back(j, i, v);
    }
  }
  sigma_.resize(n, n);
  sigma_.setFromTriplets(triplets.begin(), triplets.end());

  solver_.compute(sigma_);
  if (solver_.info() != Eigen::Success || (solver_.vectorD().array() <= 0.0).any())
    throw KrigingError("tapered covariance matrix is not positive definite");
  sigma_inv_ones_ = solver_.solve(Eigen::VectorXd::Ones(n));
  ones_sigma_inv_ones_ = sigma_inv_ones_.sum();
}

std::vector<std::pair<Eigen::Index, double>> OrdinaryKriging::cross_covariance(const Site& t) const {
  std::vector<std::pair<Eigen::Index, double>> out;
  const auto bx = static_cast<Eigen::Index>(std::floor((t.x - x0_) / cell_));
  const auto by = static_cast<Eigen::Index>(std::floor((t.y - y0_) / cell_));
  const Eigen::Index reach = static_cast<Eigen::Index>(std::ceil(model_.taper_range / cell_));
  for (Eigen::Index y = std::max<Eigen::Index>(0, by - reach); y <= std::min(ny_ - 1, by + reach); ++y) {
    for (Eigen::Index x = std::max<Eigen::Index>(0, bx - reach); x <= std::min(nx_ - 1, bx + reach); ++x) {
      for (Eigen::Index i : buckets_[static_cast<std::size_t>(y * nx_ + x)]) {
        const double h = std::hypot(sites_[i].x - t.x, sites_[i].y - t.y);
        if (h < model_.taper_range) out.emplace_back(i, model_.tapered_covariance(h));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double OrdinaryKriging::mean(const Eigen::VectorXd& values) const {
  if (values.size() != static_cast<Eigen::Index>(sites_.size())) throw KrigingError("data length differs from site count");
  return sigma_inv_ones_.dot(values) / ones_sigma_inv_ones_;
}

Eigen::VectorXd OrdinaryKriging::predict(const Eigen::VectorXd& values, std::span<const Site> targets) const {
  if (values.size() != static_cast<Eigen::Index>(sites_.size())) throw KrigingError("data length differs from site count");
  const Eigen::VectorXd sigma_inv_values = solver_.solve(values);
  const double mu = sigma_inv_ones_.dot(values) / ones_sigma_inv_ones_;
  const Eigen::VectorXd weights = sigma_inv_values - mu * sigma_inv_ones_;
  Eigen::VectorXd out(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t t = 0; t < targets.size(); ++t) {
    double acc = mu;
    for (const auto& [i, c] : cross_covariance(targets[t])) acc += c * weights[i];
    out[static_cast<Eigen::Index>(t)] = acc;
  }
  return out;
}

namespace {

Eigen::VectorXd flatten(const Grid& g) {
  Eigen::VectorXd v(g.size());
  for (Eigen::Index i = 0, k = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) v[k++] = g(i, j);
  return v;
}

}  // namespace

Eigen::MatrixXd krige_predict(const RasterSeries& series, const VariogramModel& model, std::span<const Site> targets,
                              int threads) {
  const OrdinaryKriging ok(grid_sites(series.rows(), series.cols(), series.spacing()), model);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(series.size()), static_cast<Eigen::Index>(targets.size()));
  parallel_for(series.size(), threads, [&](std::size_t m) {
    out.row(static_cast<Eigen::Index>(m)) = ok.predict(flatten(series[m]), targets).transpose();
  });
  return out;
}

RasterSeries krige_smooth(const RasterSeries& series, const VariogramModel& model, int threads) {
  const auto sites = grid_sites(series.rows(), series.cols(), series.spacing());
  const Eigen::MatrixXd pred = krige_predict(series, model, sites, threads);
  std::vector<Grid> images;
  images.reserve(series.size());
  for (std::size_t m = 0; m < series.size(); ++m) {
    Grid g(series.rows(), series.cols());
    for (Eigen::Index i = 0, k = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = pred(static_cast<Eigen::Index>(m), k++);
    images.push_back(std::move(g));
  }
  return series.with_images(std::move(images));
}

}  // namespace npmddm
