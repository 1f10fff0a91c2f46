#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "drci/distributions.hpp"
#include "gen.hpp"

using namespace drci;

namespace {
WeightedEcdf uni(std::vector<double> v) { return WeightedEcdf::uniform(v); }
WeightedEcdf point(double y) { return uni({y}); }
}  // namespace

TEST_SUITE("distributions") {

TEST_CASE("ecdf construction") {
  const std::vector<double> v{1, 2}, w{0.5, 0.5};
  const auto f = ecdf(v, w);
  CHECK(f(1.0) == doctest::Approx(0.5));
  CHECK(f(2.0) == 1.0);
  CHECK(f(0.999) == 0.0);
  CHECK(f(1.5) == doctest::Approx(0.5));

  const std::vector<double> v2{2, 1, 1}, w2{1, 1, 2};
  const auto g = ecdf(v2, w2);
  REQUIRE(g.size() == 2);
  CHECK(g.atoms()[0] == 1.0);
  CHECK(g.atoms()[1] == 2.0);
  CHECK(g.weights()[0] == doctest::Approx(0.75));
  CHECK(g.weights()[1] == doctest::Approx(0.25));

  const std::vector<double> v3{5}, w3{3};
  const auto h = ecdf(v3, w3);
  REQUIRE(h.size() == 1);
  CHECK(h.weights()[0] == 1.0);
  CHECK(h.mean() == 5.0);
}

TEST_CASE("ecdf errors and zero-mass atoms") {
  const std::vector<double> empty;
  CHECK_THROWS_AS(WeightedEcdf::uniform(empty), std::invalid_argument);
  const std::vector<double> v{1, 2}, neg{1, -1}, zero{0, 0}, short_w{1};
  CHECK_THROWS_AS(ecdf(v, neg), std::invalid_argument);
  CHECK_THROWS_AS(ecdf(v, zero), std::invalid_argument);
  CHECK_THROWS_AS(ecdf(v, short_w), std::invalid_argument);
  const std::vector<double> nan_v{1, std::nan("")}, ones{1, 1};
  CHECK_THROWS_AS(ecdf(nan_v, ones), std::invalid_argument);

  const std::vector<double> v3{0, 1, 2}, w3{0.5, 0.0, 0.5};
  const auto f = ecdf(v3, w3);
  CHECK(f.size() == 2);
  CHECK(f.mass_at(1.0) == 0.0);
  CHECK(f.mass_at(2.0) == doctest::Approx(0.5));
}

TEST_CASE("quantile is the generalized inverse") {
  const auto f = uni({0, 1, 2, 3});
  CHECK(f.quantile(0.0) == 0.0);
  CHECK(f.quantile(0.25) == 0.0);
  CHECK(f.quantile(0.26) == 1.0);
  CHECK(f.quantile(0.5) == 1.0);
  CHECK(f.quantile(1.0) == 3.0);
  CHECK(f.quantile(2.0) == 3.0);
  // 0.1 + 0.2 style rounding must not skip an atom.
  const std::vector<double> v{0, 1, 2}, w{0.1, 0.2, 0.7};
  CHECK(ecdf(v, w).quantile(0.1 + 0.2) == 1.0);
}

TEST_CASE("ks examples") {
  const auto f = uni({0, 1});
  CHECK(ks(f, f) == 0.0);
  CHECK(ks(point(0), point(1)) == 1.0);
  CHECK(ks(f, point(0)) == doctest::Approx(0.5));
  // G read at y + 2 lines up with F.
  CHECK(shifted_ks(uni({0, 1}), uni({2, 3}), 2.0) == 0.0);
  CHECK(shifted_ks(uni({0, 1}), uni({2, 3}), -2.0) == 1.0);
}

TEST_CASE("shift grid") {
  const std::vector<double> a{0, 10};
  const auto g = shift_grid(a, 5);
  CHECK(g.step == doctest::Approx(2.0));
  REQUIRE(g.size() == 11);
  CHECK(g.shifts.front() == doctest::Approx(-10.0));
  CHECK(g.shifts.back() == doctest::Approx(10.0));
  CHECK(g.shifts[5] == 0.0);
  for (std::size_t j = 0; j < g.size(); ++j)
    CHECK(g.shifts[j] == doctest::Approx(-g.shifts[g.size() - 1 - j]));

  const std::vector<double> b{3, 3, 3};
  const auto d = shift_grid(b, 7);
  CHECK(d.shifts == std::vector<double>{0.0});

  const std::vector<double> c{0, 1};
  CHECK(shift_grid(c, 1).shifts == std::vector<double>{-1.0, 0.0, 1.0});
  CHECK_THROWS_AS(shift_grid(c, 0), std::invalid_argument);
  const std::vector<double> none;
  CHECK_THROWS_AS(shift_grid(none, 3), std::invalid_argument);
}

TEST_CASE("min_shift_ks examples") {
  const auto f = uni({0, 1, 4});
  const std::vector<double> pooled{0, 1, 4};
  const auto grid = shift_grid(pooled, 4);  // step 1
  for (KsMode mode : {KsMode::grid, KsMode::exact_atoms}) {
    const auto r = min_shift_ks(f, f, grid, mode);
    CHECK(r.distance == 0.0);
    CHECK(r.shift == 0.0);
  }
  // G = F moved by +2: the best reading of G(y + c) is c = 2.
  const auto g = uni({2, 3, 6});
  const auto r = min_shift_ks(f, g, grid, KsMode::exact_atoms);
  CHECK(r.distance == 0.0);
  CHECK(r.shift == doctest::Approx(2.0));

  const std::vector<double> pooled2{0, 1, 2, 3};
  const auto grid2 = shift_grid(pooled2, 3);
  const auto r2 = min_shift_ks(uni({0, 1}), uni({2, 3}), grid2, KsMode::exact_atoms);
  CHECK(r2.distance == 0.0);
  CHECK(r2.shift == doctest::Approx(2.0));
}

TEST_CASE("min_shift_ks tie-break prefers small shifts") {
  // Point masses far apart: KS is 1 at every shift except the exact match.
  const auto f = point(0);
  const auto g = point(0.5);
  const std::vector<double> pooled{0, 1};
  const auto grid = shift_grid(pooled, 1);  // shifts -1, 0, 1
  const auto r = min_shift_ks(f, g, grid, KsMode::exact_atoms);
  CHECK(r.distance == 1.0);
  CHECK(r.shift == 0.0);
}

TEST_CASE("d0 examples") {
  CHECK(d0(uni({0, 1}), uni({0, 1}), D0Regime::gamma_ge_2) == 0.0);
  CHECK(d0(point(0), uni({0, 1}), D0Regime::gamma_ge_2) == doctest::Approx(0.5));
  CHECK(d0(point(0), uni({0, 1}), D0Regime::gamma_lt_2) == doctest::Approx(0.5));
  CHECK(d0(uni({0, 1}), point(0), D0Regime::gamma_lt_2) == doctest::Approx(0.5));
  CHECK(d0_regime(2.0) == D0Regime::gamma_ge_2);
  CHECK(d0_regime(1.5) == D0Regime::gamma_lt_2);
}

TEST_CASE("cic target") {
  const auto f00 = uni({1, 4, 6});
  const auto b = uni({0, 2, 5});
  const auto same = cic_target_cdf(b, b, f00);
  REQUIRE(same.size() == f00.size());
  for (std::size_t i = 0; i < f00.size(); ++i) {
    CHECK(same.atoms()[i] == f00.atoms()[i]);
    CHECK(same.weights()[i] == doctest::Approx(f00.weights()[i]));
  }
  // Treated baselines are the control baselines moved by +1. Each control
  // rank p maps to F_b1(F_b0^-1(p)): 1/3 -> F_b1(0) = 0, 2/3 -> F_b1(2) = 1/3,
  // 1 -> F_b1(5) = 2/3, and the top atom takes the remaining mass.
  const auto b1 = uni({1, 3, 6});
  const auto moved = cic_target_cdf(b1, b, f00);
  REQUIRE(moved.size() == 2);
  CHECK(moved.atoms()[0] == 4.0);
  CHECK(moved.weights()[0] == doctest::Approx(1.0 / 3.0));
  CHECK(moved.atoms()[1] == 6.0);
  CHECK(moved.mean() == doctest::Approx(4.0 / 3.0 + 4.0));

  const auto single = cic_target_cdf(b1, b, point(7));
  CHECK(single.size() == 1);
  CHECK(single.atoms()[0] == 7.0);

  // Treated baselines concentrated low: every control rank maps to the
  // bottom atom.
  const auto low = cic_target_cdf(point(-10), b, f00);
  CHECK(low.size() == 1);
  CHECK(low.atoms()[0] == 1.0);

  // Treated baselines above every control baseline: mass goes to the top.
  const auto high = cic_target_cdf(point(100), b, f00);
  CHECK(high.size() == 1);
  CHECK(high.atoms()[0] == 6.0);
}

TEST_CASE("property: ks symmetric, bounded; grid never exceeds exact") {
  gen::Rng rng(11);
  for (int it = 0; it < 300; ++it) {
    const auto nf = static_cast<std::size_t>(gen::uniform_int(rng, 1, 8));
    const auto ng = static_cast<std::size_t>(gen::uniform_int(rng, 1, 8));
    const bool ties = it % 2 == 0;
    const auto fv = gen::values(rng, nf, ties), gv = gen::values(rng, ng, ties);
    const auto f = ecdf(fv, gen::weights(rng, nf));
    const auto g = ecdf(gv, gen::weights(rng, ng));
    const double d = ks(f, g);
    CHECK(d == doctest::Approx(ks(g, f)).epsilon(1e-12));
    CHECK(d >= 0.0);
    CHECK(d <= 1.0 + 1e-12);
    CHECK(shifted_ks(f, g, 0.0) == doctest::Approx(d).epsilon(1e-12));

    std::vector<double> pooled = fv;
    pooled.insert(pooled.end(), gv.begin(), gv.end());
    const auto grid = shift_grid(pooled, gen::uniform_int(rng, 1, 6));
    for (std::size_t j = 0; j < grid.size(); ++j)
      CHECK(grid_ks_at(f, g, grid, j) <= shifted_ks(f, g, grid.shifts[j]) + 1e-12);
    const auto rg = min_shift_ks(f, g, grid, KsMode::grid);
    const auto re = min_shift_ks(f, g, grid, KsMode::exact_atoms);
    CHECK(rg.distance <= re.distance + 1e-12);
  }
}

TEST_CASE("property: cic target is a distribution on the control atoms") {
  gen::Rng rng(12);
  for (int it = 0; it < 200; ++it) {
    const auto n = [&] { return static_cast<std::size_t>(gen::uniform_int(rng, 1, 7)); };
    const auto a = uni(gen::values(rng, n(), true));
    const auto b = uni(gen::values(rng, n(), true));
    const auto c = uni(gen::values(rng, n(), it % 2 == 0));
    const auto t = cic_target_cdf(a, b, c);
    double total = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      total += t.weights()[i];
      CHECK(c.mass_at(t.atoms()[i]) > 0.0);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.mean() >= c.min() - 1e-12);
    CHECK(t.mean() <= c.max() + 1e-12);
  }
}

}  // TEST_SUITE
