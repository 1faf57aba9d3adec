#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "distdyn/error.hpp"
#include "distdyn/kde.hpp"
#include "test_support.hpp"

using namespace distdyn;
using distdyn::test::normal_pdf;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

TransitionPairs pairs_of(std::vector<TransitionPair> p) { return {std::move(p), 1}; }

}  // namespace

TEST_SUITE("silverman_bandwidth") {
  TEST_CASE("samples 1..5") {
    const std::vector<double> s{1, 2, 3, 4, 5};
    // sd = sqrt(2.5), type-7 IQR = 4 - 2 = 2, min(1.5811, 2 / 1.34) = 1.49254
    const double expected = 0.9 * (2.0 / 1.34) * std::pow(5.0, -0.2);
    CHECK(silverman_bandwidth(s, 1) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(std::abs(silverman_bandwidth(s, 1) - 0.9736) <= 1e-3);
    CHECK(silverman_bandwidth(s, 2) == doctest::Approx(0.9 * (2.0 / 1.34) * std::pow(5.0, -1.0 / 6.0)));
  }

  TEST_CASE("sd branch when the IQR is wide") {
    const std::vector<double> s{0, 0, 10, 10};
    // sd = sqrt(100/3) = 5.7735; IQR (type 7) = 10 - 0 = 10 -> 7.46; min = sd
    CHECK(silverman_bandwidth(s, 1) == doctest::Approx(0.9 * std::sqrt(100.0 / 3.0) * std::pow(4.0, -0.2)));
  }

  TEST_CASE("type-7 quartiles") {
    const std::vector<double> s{7, 1, 3, 5};
    CHECK(quantile(s, 0.25) == doctest::Approx(2.5));
    CHECK(quantile(s, 0.75) == doctest::Approx(5.5));
    CHECK(quantile(s, 0.0) == 1.0);
    CHECK(quantile(s, 1.0) == 7.0);
  }

  TEST_CASE("degenerate samples") {
    CHECK(code_of([] { silverman_bandwidth(std::vector<double>{2, 2, 2}, 1); }) == ErrorCode::ZeroSpread);
    CHECK(code_of([] { silverman_bandwidth(std::vector<double>{2}, 1); }) == ErrorCode::InsufficientData);
    CHECK(code_of([] { silverman_bandwidth(std::vector<double>{1, 2}, 3); }) == ErrorCode::InvalidArgument);
  }
}

TEST_SUITE("density_1d") {
  TEST_CASE("single sample raw peak is K(0)") {
    auto g = Grid::uniform(-5.0, 7.0, 121);  // 1.0 is a grid point
    auto raw = raw_density_1d(std::vector<double>{1.0}, 1.0, g);
    CHECK(std::abs(raw[60] - 1.0 / std::sqrt(2.0 * std::numbers::pi)) <= 1e-12);
  }

  TEST_CASE("two-sample mixture at the midpoint") {
    auto g = Grid::uniform(-4.0, 6.0, 101);  // 1.0 at index 50
    auto raw = raw_density_1d(std::vector<double>{0.0, 2.0}, 1.0, g);
    CHECK(std::abs(raw[50] - 0.24197072451914337) <= 1e-12);
  }

  TEST_CASE("errors") {
    auto g = Grid::uniform(0.0, 1.0, 32);
    CHECK(code_of([&] { density_1d(std::vector<double>{}, 1.0, g); }) == ErrorCode::EmptySamples);
    CHECK(code_of([&] { density_1d(std::vector<double>{0.5}, 0.0, g); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("property: normalization, linearity, translation, truncation") {
    std::mt19937_64 rng(101);
    std::normal_distribution<double> draw(1.0, 0.5);
    std::uniform_int_distribution<int> size(2, 40);
    std::uniform_real_distribution<double> shift(-3.0, 3.0);
    for (int trial = 0; trial < 120; ++trial) {
      const int n = size(rng);
      std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
      for (auto& v : a) v = draw(rng);
      for (auto& v : b) v = draw(rng);
      const double h = silverman_bandwidth(a, 1);
      auto [lo, hi] = std::minmax_element(a.begin(), a.end());
      auto grid = Grid::uniform(std::max(0.0, *lo - 2.0 * h), *hi + 2.0 * h, 128);

      auto curve = density_1d(a, h, grid);
      CHECK(std::abs(integrate(grid, curve.values()) - 1.0) <= 1e-6);
      for (double v : curve.values()) CHECK(v >= 0.0);

      // Raw estimates are linear in the sample: concat(a, b) = mean of the two.
      std::vector<double> ab = a;
      ab.insert(ab.end(), b.begin(), b.end());
      auto ra = raw_density_1d(a, h, grid);
      auto rb = raw_density_1d(b, h, grid);
      auto rab = raw_density_1d(ab, h, grid);
      for (std::size_t i = 0; i < grid.count(); ++i) CHECK(std::abs(rab[i] - 0.5 * (ra[i] + rb[i])) <= 1e-12);

      // Shifting samples and grid together leaves raw values unchanged.
      const double c = shift(rng);
      std::vector<double> shifted = a;
      for (auto& v : shifted) v += c;
      auto grid_shifted = Grid::uniform(grid.lower() + c, grid.upper() + c, grid.count());
      auto rs = raw_density_1d(shifted, h, grid_shifted);
      for (std::size_t i = 0; i < grid.count(); ++i) CHECK(std::abs(rs[i] - ra[i]) <= 1e-12);

      // Grid spanning +-4h beyond the data keeps all but 1e-4 of the raw mass.
      auto wide = Grid::uniform(*lo - 4.0 * h, *hi + 4.0 * h, 2048);
      const double mass = integrate(wide, raw_density_1d(a, h, wide));
      CHECK(mass >= 1.0 - 1e-4);
      CHECK(mass <= 1.0 + 1e-6);
    }
  }

  TEST_CASE("evaluation is independent of thread count") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> draw(1.0, 0.3);
    std::vector<double> s(500);
    for (auto& v : s) v = draw(rng);
    auto g = Grid::uniform(0.0, 2.5, 300);
    CHECK(raw_density_1d(s, 0.1, g, 1) == raw_density_1d(s, 0.1, g, 7));
  }
}

TEST_SUITE("density_2d") {
  TEST_CASE("single pair raw peak is K(0)^2") {
    auto g = Grid::uniform(-4.0, 6.0, 101);
    auto raw = raw_density_2d(pairs_of({{1.0, 1.0}}), {1.0, 1.0}, g, g);
    CHECK(std::abs(raw[50 * 101 + 50] - 1.0 / (2.0 * std::numbers::pi)) <= 1e-12);
  }

  TEST_CASE("raw values match the product-kernel formula") {
    auto pairs = pairs_of({{0.4, 0.9}, {1.3, 0.7}, {0.8, 1.6}});
    auto g = Grid::uniform(0.0, 2.0, 21);
    Bandwidths bw{0.3, 0.2};
    auto raw = raw_density_2d(pairs, bw, g, g);
    for (std::size_t a = 0; a < g.count(); a += 4) {
      for (std::size_t b = 0; b < g.count(); b += 3) {
        double expected = 0.0;
        for (const auto& p : pairs.pairs)
          expected += normal_pdf(g[a], p.x, bw.x) * normal_pdf(g[b], p.y, bw.y);
        expected /= 3.0;
        CHECK(raw[a * g.count() + b] == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("symmetric pairs give a symmetric surface") {
    auto pairs = pairs_of({{0.5, 1.2}, {1.2, 0.5}, {0.9, 0.9}, {1.7, 0.3}, {0.3, 1.7}});
    auto g = Grid::uniform(0.0, 2.5, 64);
    auto s = density_2d(pairs, {0.25, 0.25}, g, g);
    for (std::size_t i = 0; i < g.count(); ++i)
      for (std::size_t j = 0; j < g.count(); ++j) CHECK(std::abs(s(i, j) - s(j, i)) <= 1e-12);
  }

  TEST_CASE("property: unit two-dimensional integral") {
    std::mt19937_64 rng(77);
    std::lognormal_distribution<double> draw(0.0, 0.4);
    for (int trial = 0; trial < 100; ++trial) {
      TransitionPairs pairs;
      const int n = 2 + trial % 30;
      for (int i = 0; i < n; ++i) pairs.pairs.push_back({draw(rng), draw(rng)});
      auto gx = Grid::uniform(0.0, 4.0, 48);
      auto gy = Grid::uniform(0.0, 4.5, 40);
      auto s = density_2d(pairs, silverman_bandwidths(pairs), gx, gy);
      double mass = 0.0;
      for (std::size_t i = 0; i < gx.count(); ++i) mass += gx.weights()[i] * integrate(gy, s.row(i));
      CHECK(std::abs(mass - 1.0) <= 1e-6);
    }
  }

  TEST_CASE("errors") {
    auto g = Grid::uniform(0.0, 1.0, 16);
    CHECK(code_of([&] { density_2d(TransitionPairs{}, {1, 1}, g, g); }) == ErrorCode::EmptySamples);
  }
}

TEST_SUITE("conditional_density") {
  TEST_CASE("independent x and y: every well-supported row is the marginal of y") {
    // Rows in the thin x tails condition on a handful of pairs and are
    // noisy, so only rows with at least a fifth of the peak x-density count.
    std::mt19937_64 rng(2024);
    std::lognormal_distribution<double> draw_x(0.0, 0.35);
    std::lognormal_distribution<double> draw_y(-0.1, 0.3);
    TransitionPairs pairs;
    for (int i = 0; i < 4000; ++i) pairs.pairs.push_back({draw_x(rng), draw_y(rng)});
    auto grid = Grid::uniform(0.0, 3.5, 160);
    auto est = estimate_kernel(pairs, grid);
    auto ys = pairs.ys();
    auto pooled_y = density_1d(ys, est.bandwidths.y, grid);
    int checked = 0;
    for (std::size_t i = 0; i < grid.count(); ++i) {
      if (!est.kernel.supported(i) || est.kernel.row_weight(i) < 0.2) continue;
      CHECK(l1_distance(grid, est.kernel.row(i), pooled_y.values()) <= 0.1);
      ++checked;
    }
    CHECK(checked > 50);
  }

  TEST_CASE("retained rows integrate to one; thin rows are flagged") {
    std::mt19937_64 rng(8);
    std::lognormal_distribution<double> draw(0.0, 0.4);
    TransitionPairs pairs;
    for (int i = 0; i < 300; ++i) {
      double x = draw(rng);
      pairs.pairs.push_back({x, x * draw(rng)});
    }
    auto grid = Grid::uniform(0.0, 8.0, 128);
    auto est = estimate_kernel(pairs, grid);
    std::size_t unsupported = 0;
    for (std::size_t i = 0; i < grid.count(); ++i) {
      if (est.kernel.supported(i)) {
        CHECK(std::abs(integrate(grid, est.kernel.row(i)) - 1.0) <= 1e-9);
      } else {
        ++unsupported;
        CHECK(est.kernel.row_weight(i) < kDefaultDensityFloor);
      }
    }
    CHECK(unsupported > 0);
  }

  TEST_CASE("tight cluster at (1, 1) peaks on the diagonal") {
    auto pairs = pairs_of({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}});
    auto grid = Grid::uniform(0.0, 2.0, 41);  // 1.0 at index 20
    auto joint = density_2d(pairs, {0.1, 0.1}, grid, grid);
    auto marginal = density_1d(pairs.xs(), 0.1, grid);
    auto kernel = conditional_density(joint, marginal);
    auto row = kernel.row(20);
    CHECK(std::max_element(row.begin(), row.end()) - row.begin() == 20);
  }

  TEST_CASE("grid mismatch") {
    auto pairs = pairs_of({{1.0, 1.0}, {1.2, 0.8}});
    auto g1 = Grid::uniform(0.0, 2.0, 32);
    auto g2 = Grid::uniform(0.0, 2.5, 32);
    auto joint = density_2d(pairs, {0.2, 0.2}, g1, g1);
    auto marginal = density_1d(pairs.xs(), 0.2, g2);
    CHECK(code_of([&] { conditional_density(joint, marginal); }) == ErrorCode::GridMismatch);
  }
}

TEST_CASE("density curves reject negative or massless values") {
  auto g = Grid::uniform(0.0, 1.0, 16);
  CHECK(code_of([&] { DensityCurve(g, std::vector<double>(16, 0.0)); }) == ErrorCode::InvalidArgument);
  std::vector<double> v(16, 1.0);
  v[3] = -0.1;
  CHECK(code_of([&] { DensityCurve(g, v); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { DensityCurve(g, std::vector<double>(15, 1.0)); }) == ErrorCode::GridMismatch);
}

TEST_CASE("default grid spans zero to 1.1 times the maximum") {
  auto g = default_grid(3.0);
  CHECK(g.lower() == 0.0);
  CHECK(g.upper() == doctest::Approx(3.3));
  CHECK(g.count() == 256);
}
