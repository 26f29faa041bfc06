#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "wrgsim/diagnostics.hpp"
#include "wrgsim/errors.hpp"
#include "wrgsim/graph.hpp"
#include "wrgsim/rng.hpp"

using namespace wrgsim;

namespace {
double brute_assignment(const std::vector<double>& cost, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  double best = INFINITY;
  do {
    double c = 0;
    for (std::size_t i = 0; i < n; ++i) c += cost[i * n + p[i]];
    best = std::min(best, c);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

std::vector<Trajectory> runs(const RandomGraph& g, const ModelSpec& m, const InitialLaw& init, std::size_t R,
                             double T, double h, std::size_t stride = 1) {
  std::vector<Trajectory> out;
  for (std::size_t r = 0; r < R; ++r) out.push_back(simulate_graph_system(g, m, init, T, h, NoiseBath{3, 0, 1}, r, {1, stride}));
  return out;
}
}  // namespace

TEST_CASE("w1 in one dimension") {
  std::vector<double> a{0, 1, 2}, b{1, 2, 3};
  CHECK(w1_1d(a, b) == doctest::Approx(1.0));
  std::vector<double> c{0}, d{0, 2};
  CHECK(w1_1d(c, d) == doctest::Approx(1.0));
  CHECK(w1_1d(a, a) == 0.0);
  CHECK_THROWS_AS(w1_1d(std::vector<double>{}, a), PreconditionError);
}

TEST_CASE("assignment cost matches permutations") {
  KeyedStream rng(hash_key({8}));
  for (std::size_t n = 1; n <= 7; ++n)
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> cost(n * n);
      for (auto& v : cost) v = rng.uniform();
      CHECK(assignment_cost(cost, n) == doctest::Approx(brute_assignment(cost, n)).epsilon(1e-12));
    }
}

TEST_CASE("w1 in several dimensions") {
  std::vector<double> a{0, 0, 1, 1}, b{1, 1, 0, 0};
  CHECK_FALSE(w1_nd(a, b, 2).sliced);
  CHECK(w1_nd(a, b, 2).value == doctest::Approx(0.0).epsilon(1e-15));
  std::vector<double> c{0, 0, 3, 4};
  std::vector<double> e{0, 0, 0, 0};
  CHECK(w1_nd(c, e, 2).value == doctest::Approx(2.5));
  std::vector<double> big(2 * 300), shifted(2 * 300);
  KeyedStream rng(hash_key({9}));
  for (std::size_t k = 0; k < big.size(); ++k) {
    big[k] = rng.uniform();
    shifted[k] = big[k] + (k % 2 ? 0.0 : 0.5);
  }
  auto s = w1_nd(big, shifted, 2, 1, 128);
  CHECK(s.sliced);
  // Sliced distance of a pure shift averages |<shift, u>| over directions: 0.5 * 2/pi.
  CHECK(s.value == doctest::Approx(1 / M_PI).epsilon(0.1));
}

TEST_CASE("propagation error is zero for identical runs and relabeling invariant") {
  auto g = complete_graph(10);
  auto m = builtin_model("kuramoto", {{"sigma", 0.3}});
  auto init = uniform_law(0, 6);
  auto sys = runs(g, m, init, 4, 0.3, 0.01);
  auto p0 = propagation_error(sys, sys);
  CHECK(p0.max == 0.0);
  auto m2 = builtin_model("kuramoto", {{"sigma", 0.3}, {"coupling", 2.0}});
  auto other = runs(g, m2, init, 4, 0.3, 0.01);
  auto p = propagation_error(sys, other);
  CHECK(p.max > 0);
  CHECK(p.p95 <= p.max);
  CHECK(p.replicas == 4);
  auto perm_a = sys, perm_b = other;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t k = 0; k < sys[r].stored(); ++k)
      for (std::size_t i = 0; i < 10; ++i) {
        perm_a[r].states[k * 10 + i] = sys[r].states[k * 10 + (9 - i)];
        perm_b[r].states[k * 10 + i] = other[r].states[k * 10 + (9 - i)];
      }
  CHECK(propagation_error(perm_a, perm_b).max == doctest::Approx(p.max).epsilon(1e-15));
  other.pop_back();
  CHECK_THROWS_AS(propagation_error(sys, other), PreconditionError);
}

TEST_CASE("empirical measure error and profile error") {
  auto g = complete_graph(8);
  auto m = builtin_model("ou", {{"sigma", 0.0}});
  auto init = affine_point_law(1, 0);
  auto sys = runs(g, m, init, 2, 0.2, 0.01, 5);
  PicardOptions po;
  po.snapshot_stride = 5;
  auto mf = picard_solve(m, builtin_kernel("one-minus-xy"), midpoint_grid(4), 2, init, 0.2, 0.01, po);
  auto e = empirical_measure_error(sys, mf, [](std::span<const double> th, double) { return th[0]; });
  // Euler particles against the RK4 limit: the gap is the Euler bias of pure decay at t = 0.2.
  const double euler_gap = std::pow(0.99, 20) - std::exp(-0.2);
  CHECK(e.error.value == doctest::Approx(euler_gap * euler_gap).epsilon(1e-6));
  CHECK(e.lipschitz_theta == doctest::Approx(1.0).epsilon(1e-9));

  auto quad = midpoint_grid(8);
  auto psi = heat_solve(m, builtin_kernel("one-minus-xy"), quad, std::vector<double>(8, 1.0), 0.2, 0.01);
  CHECK(profile_error(sys[0], psi, 2) == doctest::Approx(std::abs(euler_gap)).epsilon(1e-6));
  std::vector<double> bumped(8, 1.0);
  bumped[0] = 2.0;
  auto psi2 = heat_solve(m, builtin_kernel("one-minus-xy"), quad, bumped, 0.2, 0.01);
  // Initial difference 1 on a cell of length 1/8, L^2 norm sqrt(1/8).
  CHECK(profile_error(sys[0], psi2, 2) == doctest::Approx(std::sqrt(1.0 / 8)).epsilon(1e-9));
}

TEST_CASE("identification residual") {
  auto m = builtin_model("linear", {{"gamma", 1.0}, {"decay", 1.0}});
  auto quad = midpoint_grid(16);
  auto init = affine_point_law(0, 1);
  auto mf = picard_solve(m, builtin_kernel("one-minus-xy"), quad, 2, init, 0.5, 0.01);
  auto psi = heat_solve(m, builtin_kernel("one-minus-xy"), quad, psi0_from_init(init, quad).values, 0.5, 0.01);
  auto r = identification_residual(psi, mf, trig_dictionary(3));
  CHECK(r.residual < 1e-7);
  TestDictionary zero{"zero", {[](double) { return 0.0; }}};
  CHECK(identification_residual(psi, mf, zero).residual == 0.0);
  auto moved = psi;
  for (auto& v : moved.values) v += 0.1;
  auto r2 = identification_residual(moved, mf, trig_dictionary(3));
  CHECK(r2.residual == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(trig_dictionary(3).functions.size() == 7);
  CHECK(bump_dictionary(5, 2.0).functions.size() == 5);
}

TEST_CASE("upsilon and epsilon terms") {
  auto m = builtin_model("kuramoto", {{"sigma", 0.3}});
  PicardOptions po;
  po.snapshot_stride = 2;
  auto quad = make_positions(PositionScheme::deterministic, 8);
  auto mf = picard_solve(m, builtin_kernel("one-minus-xy"), quad, 20, uniform_law(0, 6.28), 0.1, 0.01, po);
  auto u = upsilon(mf, m, 1, 2, 2, 0.1, 1.0);
  CHECK(u.value >= 0);
  CHECK(u.value <= u.bound);
  // Same nodes and weights: all three discrepancies vanish exactly.
  auto eps = epsilon_terms(mf, m, builtin_kernel("one-minus-xy"), quad, 0.1);
  CHECK(eps.e1 == 0.0);
  CHECK(eps.e2 == 0.0);
  CHECK(eps.e3 == 0.0);
  auto zero = builtin_model("kuramoto", {{"sigma", 0.3}, {"coupling", 0.0}});
  auto mf0 = picard_solve(zero, builtin_kernel("one-minus-xy"), quad, 20, uniform_law(0, 6.28), 0.1, 0.01, po);
  CHECK(upsilon(mf0, zero, 1, 2, 3, 0.1).value == 0.0);
  CHECK_THROWS_AS(epsilon_terms(mf, m, builtin_kernel("one-minus-xy"), midpoint_grid(3), 0.1), PreconditionError);
}

TEST_CASE("d_nt vanishes on complete graphs with matching micro kernel") {
  auto g = complete_graph(6);
  MicroKernel mk{builtin_kernel("constant", {{"p", 1.0}}), 1};
  auto m = builtin_model("kuramoto", {{"sigma", 0.2}});
  auto quad = make_positions(PositionScheme::deterministic, 6);
  auto mf = picard_solve(m, mk.generator, quad, 10, uniform_law(0, 6), 0.1, 0.01);
  std::vector<Trajectory> copies;
  for (std::size_t r = 0; r < 3; ++r)
    copies.push_back(simulate_coupled_copies(mf, mk.generator, g.grid, m, uniform_law(0, 6), 0.1, 0.01, NoiseBath{1, 0, 1}, r));
  CHECK(d_nt_estimate(g, mk, mf, m, copies).max == 0.0);
}

TEST_CASE("hoelder distance") {
  for (std::size_t n : {4, 16, 64}) {
    auto grid = make_positions(PositionScheme::deterministic, n);
    auto r = d_holder_lebesgue(grid, 1.0, 32);
    CHECK(r.value > 0);
    CHECK(r.value <= 1.0 / (2 * n) + 1e-15);
  }
  auto a = midpoint_grid(10);
  CHECK(d_holder(a, a, 0.5, 16).value == 0.0);
}

TEST_CASE("bennett function and relative entropy") {
  CHECK(bennett_B(1e-6) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(bennett_B(1.0) == doctest::Approx(2 * std::log(2.0) - 1));
  CHECK(bennett_B(0.009) == doctest::Approx(((1.009) * std::log1p(0.009) - 0.009) / (0.009 * 0.009)).epsilon(1e-10));
  CHECK(relative_entropy(0.5, 0.25) == doctest::Approx(0.1438410362).epsilon(1e-9));
  CHECK(relative_entropy(0.3, 0.3) == 0.0);
  CHECK(relative_entropy(1.0, 0.5) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(relative_entropy(0.5, 1.0), PreconditionError);
  auto e = entropy_bounds(0.5, 0.5, 0.4, 2.0, 1, 1, 1);
  CHECK(e.inequality_holds);
  CHECK(e.lhs >= e.rhs);
}

TEST_CASE("concentration check") {
  std::vector<double> p(1000, 0.1), v(1000, 1.0);
  auto r = concentration_check(10, 0.1, 1000, p, v, 200, 1);
  CHECK(r.epsilon == doctest::Approx(std::sqrt(32 * 100 * 0.1 * std::log(1000.0) / 1000)).epsilon(1e-12));
  CHECK(r.pass);
  CHECK_THROWS_AS(concentration_check(10, 0.1, 1000, std::vector<double>(1000, 0.5), v, 10, 1), PreconditionError);
  // Pass rate over independent seeds.
  int passes = 0;
  std::vector<double> p2(300, 0.2), v2(300, 1.0);
  for (std::uint64_t s = 0; s < 50; ++s) passes += concentration_check(3, 0.2, 300, p2, v2, 200, s).pass;
  CHECK(passes >= 49);
}

TEST_CASE("bernoulli sum tails") {
  std::vector<double> a(40, 1.0), p(40, 0.5);
  auto c = chung_lu_check(a, p, 3.0, 5000, 2);
  CHECK(c.pass);
  CHECK(c.lower_bound == doctest::Approx(std::exp(-9.0 / 40)));
}

TEST_CASE("moment check") {
  auto g = complete_graph(3);
  auto m = builtin_model("ou", {{"sigma", 0.0}, {"decay", 0.0}});
  auto rs = runs(g, m, affine_point_law(2, 0), 3, 0.1, 0.01);
  auto mr = moment_check(rs, 4);
  CHECK(mr.value == doctest::Approx(16.0));
  CHECK(mr.stderr_ == 0.0);
  CHECK(moment_growth(MomentReport{2.0, 0, 0}, MomentReport{2.2, 0, 0}) == doctest::Approx(0.1));
}

TEST_CASE("report json") {
  DiagnosticsReport rep;
  rep.provenance["seed"] = "1";
  rep.add("a", 1.5, 0.1);
  rep.flag("a", "a <= 2", true);
  CHECK(rep.all_pass());
  auto j = nlohmann::json::parse(rep.to_json());
  CHECK(j["provenance"]["seed"] == "1");
  CHECK_THROWS_AS(rep.add("b", NAN), PreconditionError);
  rep.flag("c", "c <= 0", false);
  CHECK_FALSE(rep.all_pass());
}
