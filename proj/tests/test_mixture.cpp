#include "npmddm/mixture.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

using namespace npmddm;
using Catch::Approx;

TEST_CASE("two means on scalars") {
  const std::vector<double> v{0.1, 0.0, 5.0, 5.2, 0.2, 4.9};
  CHECK(two_means(v) == std::vector<int>{0, 0, 1, 1, 0, 1});
  const std::vector<double> flat(5, 1.0);
  CHECK_THROWS_AS(two_means(flat), std::invalid_argument);
}

TEST_CASE("grid index map") {
  CHECK(grid_to_index(0, 16, 10) == 0);
  CHECK(grid_to_index(15, 16, 10) == 9);
  CHECK(grid_to_index(5, 8, 8) == 5);
}

TEST_CASE("valleys are run minima below the threshold") {
  const std::vector<double> rho{0.9, 0.4, 0.2, 0.45, 0.8, 0.3, 0.9, 0.1};
  CHECK(find_valleys(rho, 0.5) == std::vector<std::size_t>{2, 5, 7});
  CHECK(find_valleys(std::vector<double>(6, 1.0), 0.5).empty());
}

TEST_CASE("one outlying loading produces a single valley there") {
  std::vector<double> y(32, 1.0);
  y[11] = -1.0;
  const auto r = estimate_mixture(y, {{WaveletFamily::Haar, 3}});
  CHECK(r.mu_u == Approx(1.0));
  CHECK(r.mu_v == Approx(-1.0));
  CHECK(r.w[11] == Approx(0.0));
  CHECK(r.labels[11] == 0);
  CHECK(r.valleys == std::vector<std::size_t>{11});
}

TEST_CASE("two groups of equal size") {
  std::vector<double> y(16, 0.0);
  for (int i = 0; i < 8; ++i) y[i] = 2.0;
  const auto r = estimate_mixture(y);
  CHECK(r.mu_u == 2.0);
  MixtureOptions swapped;
  swapped.swap_labels = true;
  CHECK(estimate_mixture(y, swapped).mu_u == 0.0);
}

TEST_CASE("rho is clipped to the unit interval and thresholding only smooths") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.3);
  std::vector<double> y(64);
  for (int i = 0; i < 64; ++i) y[i] = (i % 16 < 8 ? 1.0 : 0.0) + n(rng);
  MixtureOptions exact;
  exact.threshold = 0.0;
  const auto r = estimate_mixture(y, exact);
  for (std::size_t i = 0; i < r.rho.size(); ++i) CHECK(r.rho[i] == Approx(std::clamp(r.w[i], 0.0, 1.0)).margin(1e-12));
  for (double v : estimate_mixture(y).rho) CHECK((v >= 0.0 && v <= 1.0));
  MixtureOptions strict;
  strict.valley_threshold = 0.0;
  CHECK(estimate_mixture(y, strict).valleys.empty());
}

TEST_CASE("grid padding keeps the rho length a power of two") {
  std::vector<double> y(20);
  for (int i = 0; i < 20; ++i) y[i] = i < 12 ? 1.0 : 0.0;
  const auto r = estimate_mixture(y, {{WaveletFamily::Daubechies4, 2}});
  CHECK(r.rho.size() == 32);
  CHECK(r.labels.size() == 32);
  for (std::size_t v : r.valleys) CHECK(v < 20);
}

TEST_CASE("mixture preconditions") {
  CHECK_THROWS_AS(estimate_mixture(std::vector<double>{1, 2, 3, 4, 5, 6, 7}), std::invalid_argument);
  CHECK_THROWS_AS(estimate_mixture(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8}, {{WaveletFamily::Haar, 4}}),
                  std::invalid_argument);
  MixtureOptions o;
  o.threshold = -0.1;
  CHECK_THROWS_AS(estimate_mixture(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8}, o), std::invalid_argument);
}

TEST_CASE("mean mixture") {
  std::vector<MixtureResult> rs(2);
  rs[0].rho = {1.0, 0.0, 0.5};
  rs[1].rho = {0.0, 0.0, 1.0};
  CHECK(mean_mixture(rs) == std::vector<double>{0.5, 0.0, 0.75});
  rs[1].rho.pop_back();
  CHECK_THROWS(mean_mixture(rs));
  CHECK_THROWS(mean_mixture(std::vector<MixtureResult>{}));
}
