// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and run
// counts are fixed here; nothing is tuned to make a criterion pass.

#include "npmddm/commands.hpp"
#include "npmddm/density.hpp"
#include "npmddm/functional.hpp"
#include "npmddm/kriging.hpp"
#include "npmddm/mddm.hpp"
#include "npmddm/mixture.hpp"
#include "npmddm/wavelet.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

using namespace npmddm;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <class... T>
std::string fmt(const char* f, T... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Grid random_grid(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Grid::NullaryExpr(r, c, [&] { return n(rng); });
}

double energy(const SubbandCoeffs& c) {
  double e = c.approx.squaredNorm();
  for (const auto& [k, g] : c.details) e += g.squaredNorm();
  return e;
}

// 1. Perfect reconstruction and Parseval on 1000 random inputs per family and level.
void wavelet_correctness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double recon = 0.0, parseval = 0.0;
  for (auto f : {WaveletFamily::Haar, WaveletFamily::Daubechies4, WaveletFamily::Daubechies8})
    for (int levels = 1; levels <= 3; ++levels) {
      const WaveletSpec spec{f, levels};
      for (int trial = 0; trial < 1000; ++trial) {
        const Grid v = random_grid(64, 1, rng);
        const std::vector<double> x(v.data(), v.data() + v.size());
        const auto c1 = dwt1(x, spec);
        const auto b1 = idwt1(c1, spec);
        double e1 = 0.0;
        for (double a : c1.approx) e1 += a * a;
        for (const auto& d : c1.details)
          for (double a : d) e1 += a * a;
        for (std::size_t i = 0; i < x.size(); ++i) recon = std::max(recon, std::abs(b1[i] - x[i]));
        parseval = std::max(parseval, std::abs(e1 - v.squaredNorm()) / v.squaredNorm());

        const Grid g = random_grid(16, 16, rng);
        const auto c2 = dwt2(g, spec);
        recon = std::max(recon, (idwt2(c2, spec) - g).cwiseAbs().maxCoeff());
        parseval = std::max(parseval, std::abs(energy(c2) - g.squaredNorm()) / g.squaredNorm());

        const auto c3 = swt2(g, spec);
        recon = std::max(recon, (iswt2(c3, spec) - g).cwiseAbs().maxCoeff());
        double e3 = c3.approx.squaredNorm() / std::pow(4.0, levels);
        for (const auto& [key, d] : c3.details) e3 += d.squaredNorm() / std::pow(4.0, key.level);
        parseval = std::max(parseval, std::abs(e3 - g.squaredNorm()) / g.squaredNorm());
      }
    }
  const double secs = seconds_since(t0);
  report(1, recon < 1e-9 && parseval < 1e-10 && secs < 10.0,
         fmt("max reconstruction error %.3g (< 1e-9), max Parseval relative error %.3g (< 1e-10), %.2f s (< 10 s)",
             recon, parseval, secs));
}

// 2. Uniform sample recovery and normalisation of every estimate.
void density_estimator() {
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(100000);
  for (auto& v : x) v = u(rng);
  const auto flat = estimate_sqrt_density(x, {0.0, 1.0}, 3, {WaveletFamily::Haar, 1});
  double worst = 0.0;
  for (int i = 0; i <= 900; ++i) worst = std::max(worst, std::abs(flat.density_at(0.05 + i * 0.001) - 1.0));

  auto integral = [](const SqrtDensity& d) {
    const int n = 1 << 12;
    const double h = d.support().width() / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += d.density_at(d.support().lower + (i + 0.5) * h) * h;
    return acc;
  };
  double norm_err = std::abs(flat.coeffs().norm() - 1.0);
  double int_err = std::abs(integral(flat) - 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::exponential_distribution<double> ex(1.5);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> s(200 + 50 * trial);
    for (auto& v : s) v = trial % 2 ? nd(rng) : ex(rng);
    const std::optional<Threshold> smooth =
        trial % 3 == 0 ? std::nullopt : std::optional<Threshold>(trial % 3 == 1 ? Threshold{UniversalThreshold{}} : Threshold{0.02});
    const auto d = estimate_sqrt_density(s, {-4.0, 6.0}, 3 + trial % 6, {}, smooth);
    norm_err = std::max(norm_err, std::abs(d.coeffs().norm() - 1.0));
    int_err = std::max(int_err, std::abs(integral(d) - 1.0));
  }
  report(2, worst < 0.05 && norm_err < 1e-8 && int_err < 1e-6,
         fmt("max |f-1| on [0.05,0.95] %.4f (< 0.05), max |norm-1| %.3g (< 1e-8), max |int f - 1| %.3g (< 1e-6)",
             worst, norm_err, int_err));
}

// 3. Coefficient-space Hellinger against quadrature, bounds and triangle inequality.
void hellinger_oracle() {
  std::mt19937_64 rng(1003);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Support s{-2.0, 3.0};
  auto random_density = [&] {
    const int res = 6;
    Eigen::VectorXd c(1 << res);
    for (auto& v : c) v = u(rng) < 0.25 ? 0.0 : u(rng);
    c[3] += 0.05;
    return SqrtDensity::from_coefficients(c, s, res);
  };
  auto quadrature = [&](const SqrtDensity& p, const SqrtDensity& q) {
    // Midpoint rule on f and g themselves: 1/2 int (sqrt f - sqrt g)^2.
    const int n = 1 << 16;
    const double h = s.width() / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = s.lower + (i + 0.5) * h;
      const double d = std::sqrt(p.density_at(x)) - std::sqrt(q.density_at(x));
      acc += d * d * h;
    }
    return std::sqrt(0.5 * acc);
  };
  double worst = 0.0;
  bool bounded = true;
  for (int i = 0; i < 100; ++i) {
    const auto p = random_density();
    const auto q = random_density();
    const double h = hellinger(p, q);
    worst = std::max(worst, std::abs(h - quadrature(p, q)));
    bounded = bounded && h >= 0.0 && h <= 1.0 && hellinger(p, p) == 0.0;
  }
  int triangle = 0;
  for (int i = 0; i < 100; ++i) {
    const auto a = random_density();
    const auto b = random_density();
    const auto c = random_density();
    triangle += hellinger(a, c) <= hellinger(a, b) + hellinger(b, c) + 1e-12;
  }
  report(3, worst < 1e-6 && bounded && triangle == 100,
         fmt("max |He - quadrature| %.3g (< 1e-6), bounds %s, triangle inequality %d/100", worst,
             bounded ? "hold" : "violated", triangle));
}

// 4. Fast D matrix against the literal quadruple sum.
void d_matrix_oracle() {
  std::mt19937_64 rng(1004);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  int cases = 0;
  for (int m = 4; m <= 8; ++m)
    for (int k : {2, 3})
      for (int p : {1, 2}) {
        const Eigen::MatrixXd c = Eigen::MatrixXd::NullaryExpr(m, k, [&] { return n(rng); });
        Eigen::MatrixXd naive = Eigen::MatrixXd::Zero(k, k);
        for (int j = 0; j < k; ++j)
          for (int jp = 0; jp < k; ++jp)
            for (int lag = 1; lag <= p; ++lag)
              for (int r = 0; r < m - p; ++r)
                for (int s = 0; s < m - p; ++s)
                  for (int l = 0; l < k; ++l) naive(j, jp) += c(r, j) * c(s, jp) * c(r + lag, l) * c(s + lag, l);
        naive /= double(m - p) * double(m - p);
        CurveSeries cs;
        cs.coeffs = c;
        cs.mean = Eigen::VectorXd::Zero(k);
        worst = std::max(worst, (build_d_matrix(cs, p) - naive).cwiseAbs().maxCoeff());
        ++cases;
      }
  report(4, worst < 1e-10, fmt("%d (M,K,p) cases, max abs difference %.3g (< 1e-10)", cases, worst));
}

// 5. Dimension recovery on rank-2 and rank-0 synthetic curve series.
void dimension_recovery() {
  const auto t0 = Clock::now();
  const int m = 64, k = 16;
  const double sigma = 0.01;
  auto series = [&](bool signal, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    const Eigen::MatrixXd g = Eigen::MatrixXd::NullaryExpr(k, 2, [&] { return n(rng); });
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd h = qr.householderQ() * Eigen::MatrixXd::Identity(k, 2);
    Eigen::MatrixXd c(m, k);
    for (int t = 0; t < m; ++t) {
      const double a = 2.0 * M_PI * (t + 1) / m;
      c.row(t) = signal ? Eigen::RowVectorXd((std::sin(a) * h.col(0) + std::cos(a) * h.col(1)).transpose())
                        : Eigen::RowVectorXd::Zero(k);
      for (int j = 0; j < k; ++j) c(t, j) += sigma * n(rng);
    }
    return CurveSeries::from_curves(c);
  };
  int rank2 = 0, rank0 = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DimensionTestOptions o;
    o.lag = 2;
    o.replicates = 500;
    o.alpha = 0.05;
    o.seed = seed;
    o.threads = 4;
    rank2 += estimate_dimension(series(true, 5000 + seed), o).d_hat == 2;
    rank0 += estimate_dimension(series(false, 6000 + seed), o).d_hat == 0;
  }
  const double secs = seconds_since(t0);
  report(5, rank2 >= 15 && rank0 >= 19 && secs < 300.0,
         fmt("rank-2 recovered %d/20 (>= 15), rank-0 recovered %d/20 (>= 19), %.1f s (< 300 s)", rank2, rank0, secs));
}

// 6. Block structure and change localisation on the 8-image variance fixture.
void mddm_localization() {
  int blocks = 0, located = 0;
  double ratio_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    FixtureSpec f;
    f.kind = FixtureKind::VarianceChange;
    f.images = 8;
    f.rows = 32;
    f.cols = 32;
    f.change_index = 4;  // images 5..8 in 1-based numbering
    f.seed = seed;
    AnalysisOptions o;
    o.seed = seed;
    const Mddm m = compute_mddm(log_transform(make_fixture(f)), o);
    double cross = 0.0, within = 0.0;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        if (i == j) continue;
        ((i < 4) != (j < 4) ? cross : within) += m.values(i, j);
      }
    cross /= 32.0;
    within /= 24.0;
    const bool block = cross > 3.0 * within;
    const std::size_t arg = change_scores(m).argmax;  // 0-based; images 4 and 5 are indices 3 and 4
    blocks += block;
    located += block && (arg == 3 || arg == 4);
    ratio_sum += within > 0.0 ? cross / within : 0.0;
  }
  report(6, located >= 18,
         fmt("block structure in %d/20 seeds, block and argmax in {4,5} in %d/20 (>= 18), mean cross/within %.2f",
             blocks, located, ratio_sum / 20.0));
}

// 7. Kriging: exact interpolation, taper convergence, variogram self-consistency, smoothing gain.
void kriging_checks() {
  std::mt19937_64 rng(1007);
  std::normal_distribution<double> n(0.0, 1.0);

  const auto sites8 = grid_sites(8, 8);
  const Eigen::VectorXd z8 = Eigen::VectorXd::NullaryExpr(64, [&] { return n(rng); });
  const double interp = (OrdinaryKriging(sites8, {0.0, 1.0, 2.0, 6.0}).predict(z8, sites8) - z8).cwiseAbs().maxCoeff();

  // Dense untapered oracle on a 6x6 grid.
  const auto sites = grid_sites(6, 6);
  const Eigen::VectorXd z = Eigen::VectorXd::NullaryExpr(36, [&] { return n(rng); });
  VariogramModel model{0.1, 1.0, 2.0, 200.0};
  const std::vector<Site> targets{{0.5, 0.5}, {2.3, 3.7}, {4.5, 1.2}, {1.0, 4.0}, {3.0, 3.0}};
  auto cov = [&](const Site& a, const Site& b) {
    return model.sigma2 * std::exp(-std::hypot(a.x - b.x, a.y - b.y) / model.theta);
  };
  Eigen::MatrixXd s(36, 36);
  for (int i = 0; i < 36; ++i)
    for (int j = 0; j < 36; ++j) s(i, j) = cov(sites[i], sites[j]) + (i == j ? model.tau2 : 0.0);
  const Eigen::LDLT<Eigen::MatrixXd> f(s);
  const Eigen::VectorXd si1 = f.solve(Eigen::VectorXd::Ones(36));
  const double mu = si1.dot(z) / si1.sum();
  const Eigen::VectorXd w = f.solve(z - mu * Eigen::VectorXd::Ones(36));
  Eigen::VectorXd dense(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t t = 0; t < targets.size(); ++t) {
    dense[static_cast<Eigen::Index>(t)] = mu;
    for (int i = 0; i < 36; ++i) dense[static_cast<Eigen::Index>(t)] += cov(targets[t], sites[i]) * w[i];
  }
  const double taper = (OrdinaryKriging(sites, model).predict(z, targets) - dense).cwiseAbs().maxCoeff();

  const VariogramModel truth{0.1, 1.0, 5.0, 15.0};
  EmpiricalVariogram ev;
  for (int b = 1; b <= 20; ++b) {
    ev.centers.push_back(0.75 * b);
    ev.gamma.push_back(truth.semivariogram(0.75 * b));
    ev.counts.push_back(static_cast<std::uint64_t>(2000 - 40 * b));
  }
  const auto fit = fit_variogram(ev).model;
  const double rel = std::max({std::abs(fit.tau2 / truth.tau2 - 1.0), std::abs(fit.sigma2 / truth.sigma2 - 1.0),
                               std::abs(fit.theta / truth.theta - 1.0)});

  // Seeded 16x16 Gaussian field from (0.05, 1, 4) plus nugget noise.
  const VariogramModel field_model{0.05, 1.0, 4.0, 12.0};
  const auto fs16 = grid_sites(16, 16);
  Eigen::MatrixXd c(256, 256);
  for (int i = 0; i < 256; ++i)
    for (int j = 0; j < 256; ++j)
      c(i, j) = field_model.sigma2 * std::exp(-std::hypot(fs16[i].x - fs16[j].x, fs16[i].y - fs16[j].y) / field_model.theta);
  const Eigen::VectorXd truth_field = Eigen::LLT<Eigen::MatrixXd>(c).matrixL() * Eigen::VectorXd::NullaryExpr(256, [&] { return n(rng); });
  std::normal_distribution<double> noise(0.0, std::sqrt(field_model.tau2));
  Grid clean(16, 16), noisy(16, 16);
  for (int i = 0, k = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j, ++k) {
      clean(i, j) = truth_field[k];
      noisy(i, j) = truth_field[k] + noise(rng);
    }
  const Grid smooth = krige_smooth(RasterSeries({noisy}), field_model)[0];
  const double mse_raw = (noisy - clean).squaredNorm() / 256.0;
  const double mse_smooth = (smooth - clean).squaredNorm() / 256.0;

  report(7, interp < 1e-6 && taper < 1e-6 && rel < 0.01 && mse_smooth < mse_raw,
         fmt("interpolation error %.3g (< 1e-6), tapered vs dense at r=100 theta %.3g (< 1e-6), "
             "variogram max relative error %.3g (< 0.01), smoothing MSE %.4f vs raw %.4f",
             interp, taper, rel, mse_smooth, mse_raw));
}

// 8. Mixture recovery: step mixture and single-change valley.
void mixture_recovery() {
  std::mt19937_64 rng(1008);
  std::normal_distribution<double> n(0.0, 0.1);
  const int len = 128;
  std::vector<double> y(len);
  for (int i = 0; i < len; ++i) y[i] = (i < len / 2 ? 1.0 : 0.0) + n(rng);
  const auto r = estimate_mixture(y);
  double mae = 0.0;
  int used = 0;
  for (int i = 0; i < len; ++i) {
    if (std::abs(i - len / 2) <= 4) continue;
    mae += std::abs(r.rho[i] - (i < len / 2 ? 1.0 : 0.0));
    ++used;
  }
  mae /= used;

  int located = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 g(8000 + seed);
    std::normal_distribution<double> small(0.0, 0.05);
    std::uniform_int_distribution<int> where(4, 59);
    const int at = where(g);
    std::vector<double> v(64);
    for (int i = 0; i < 64; ++i) v[i] = (i == at ? 0.0 : 1.0) + small(g);
    const auto res = estimate_mixture(v);
    bool ok = !res.valleys.empty();
    for (std::size_t t : res.valleys) ok = ok && std::abs(static_cast<int>(t) - at) <= 1;
    located += ok;
  }
  report(8, mae < 0.15 && located >= 18,
         fmt("step mixture MAE %.4f (< 0.15), single-change valley within +-1 in %d/20 (>= 18)", mae, located));
}

// 9. Byte-identical CLI outputs across runs and thread counts.
void determinism() {
  const fs::path dir = fs::temp_directory_path() / "npmddm_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto sh = [](const std::string& cmd) {
    const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string{std::istreambuf_iterator<char>(in), {}};
  };
  const std::string cli = NPMDDM_CLI;
  bool ok = sh(cli + " synth variance-change --images 16 --change 8 --seed 21 -o " + (dir / "s.rts1").string()) == 0;
  {
    std::ofstream cfg(dir / "run.ini");
    cfg << "seed = 17\ninput.path = s.rts1\npredict.horizon = 2\n";
  }
  int compared = 0;
  for (const std::string cmd : {"mddm", "predict", "mixture"}) {
    const std::string base = cli + " " + cmd + " -c " + (dir / "run.ini").string();
    ok = ok && sh(base + " -j 1 -o " + (dir / (cmd + "_a")).string()) == 0;
    ok = ok && sh(base + " -j 1 -o " + (dir / (cmd + "_b")).string()) == 0;
    ok = ok && sh(base + " -j 8 -o " + (dir / (cmd + "_c")).string()) == 0;
    if (!ok) break;
    for (const auto& e : fs::directory_iterator(dir / (cmd + "_a"))) {
      const std::string a = slurp(e.path());
      ok = ok && a == slurp(dir / (cmd + "_b") / e.path().filename()) &&
           a == slurp(dir / (cmd + "_c") / e.path().filename());
      ++compared;
    }
  }
  report(9, ok && compared == 5, fmt("%d output files compared over 3 runs each (1, 1 and 8 threads)", compared));
}

}  // namespace

int main() {
  wavelet_correctness();
  density_estimator();
  hellinger_oracle();
  d_matrix_oracle();
  dimension_recovery();
  mddm_localization();
  kriging_checks();
  mixture_recovery();
  determinism();
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
