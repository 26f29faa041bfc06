#include <doctest.h>

#include <cmath>
#include <sstream>

#include "wrgsim/errors.hpp"
#include "wrgsim/graph.hpp"
#include "wrgsim/meanfield.hpp"
#include "wrgsim/particles.hpp"

using namespace wrgsim;

TEST_CASE("step count") {
  CHECK(step_count(1.0, 0.01) == 100);
  CHECK(step_count(0.3, 0.1) == 3);
  CHECK_THROWS_AS(step_count(1.0, 0.3), PreconditionError);
}

TEST_CASE("noise bath substeps share one Brownian path") {
  NoiseBath coarse{5, 0, 2}, fine{5, 0, 1};
  for (std::uint64_t s = 0; s < 5; ++s) {
    const double a = coarse.increment(1, 2, s, 0, 0.02);
    const double b = fine.increment(1, 2, 2 * s, 0, 0.01) + fine.increment(1, 2, 2 * s + 1, 0, 0.01);
    CHECK(a == doctest::Approx(b).epsilon(1e-14));
  }
  CHECK(fine.increment(0, 0, 0, 0, 0.01) != fine.increment(1, 0, 0, 0, 0.01));
}

TEST_CASE("euler step of an isolated decaying particle") {
  auto g = graph_from_adjacency(BitMatrix(1), {1.0}, make_positions(PositionScheme::deterministic, 1));
  auto m = builtin_model("linear", {{"decay", 2.0}});
  auto tr = simulate_graph_system(g, m, affine_point_law(1, 0), 1.0, 0.1, NoiseBath{}, 0);
  CHECK(tr.stored() == 11);
  CHECK(tr.state(10, 0)[0] == doctest::Approx(std::pow(0.8, 10)).epsilon(1e-14));
}

TEST_CASE("one step of a two-particle system matches the update rule") {
  auto g = complete_graph(2, 3.0);
  auto m = builtin_model("linear", {{"gamma", 0.5}, {"decay", 1.0}});
  // Positions 1/2 and 1, initial states 1 and 2.
  auto tr = simulate_graph_system(g, m, affine_point_law(0, 2), 0.1, 0.1, NoiseBath{}, 0);
  const double h = 0.1;
  const double want0 = 1 + h * (-1.0 + 0.5 * 3.0 * 0.5 * (1 - 2));
  const double want1 = 2 + h * (-2.0 + 0.5 * 3.0 * 0.5 * (2 - 1));
  CHECK(tr.state(1, 0)[0] == doctest::Approx(want0).epsilon(1e-14));
  CHECK(tr.state(1, 1)[0] == doctest::Approx(want1).epsilon(1e-14));
}

TEST_CASE("trajectories do not depend on the thread count") {
  auto grid = make_positions(PositionScheme::deterministic, 60);
  MicroKernel mk{builtin_kernel("one-minus-xy"), 1};
  auto g = sample_graph(mk, std::vector<double>(60, 1.0), grid, 3);
  auto m = builtin_model("kuramoto", {{"sigma", 0.4}, {"omega_spread", 0.3}});
  auto a = simulate_graph_system(g, m, uniform_law(0, 6), 0.5, 0.01, NoiseBath{9, 0, 1}, 2, {1, 1});
  auto b = simulate_graph_system(g, m, uniform_law(0, 6), 0.5, 0.01, NoiseBath{9, 0, 1}, 2, {3, 1});
  CHECK(a.states == b.states);
  auto c = simulate_graph_system(g, m, uniform_law(0, 6), 0.5, 0.01, NoiseBath{9, 0, 1}, 3, {1, 1});
  CHECK(a.states != c.states);
}

TEST_CASE("kernel system with W = 1 equals the complete graph") {
  auto g = complete_graph(25, 1.0);
  auto W = builtin_kernel("constant", {{"p", 1.0}});
  auto m = builtin_model("fhn", {{"sigma", 0.2}});
  auto init = gaussian_law(0, 1, 0.3, 2);
  auto a = simulate_graph_system(g, m, init, 0.5, 0.01, NoiseBath{4, 0, 1}, 0);
  auto b = simulate_w_system(W, g.grid, m, init, 0.5, 0.01, NoiseBath{4, 0, 1}, 0);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) CHECK(a.states[k] == doctest::Approx(b.states[k]).epsilon(1e-12));
}

TEST_CASE("stride keeps every stride-th state") {
  auto g = complete_graph(4);
  auto m = builtin_model("ou", {});
  auto full = simulate_graph_system(g, m, affine_point_law(0, 0), 1.0, 0.05, NoiseBath{1, 0, 1}, 0, {1, 1});
  auto thin = simulate_graph_system(g, m, affine_point_law(0, 0), 1.0, 0.05, NoiseBath{1, 0, 1}, 0, {1, 5});
  CHECK(thin.stored() == 5);
  for (std::size_t k = 0; k < thin.stored(); ++k)
    for (std::size_t i = 0; i < 4; ++i) CHECK(thin.state(k, i)[0] == full.state(5 * k, i)[0]);
  CHECK(spatial_profile(full, 0.3, 0.5)[0] == full.state(10, 1)[0]);
}

TEST_CASE("blow-up aborts with the step and particle") {
  auto g = complete_graph(3);
  auto m = builtin_model("fhn", {});
  CHECK_THROWS_AS(simulate_graph_system(g, m, affine_point_law(3, 0, 2), 200.0, 5.0, NoiseBath{}, 0), NumericalAbort);
}

TEST_CASE("copies of an interaction-free model coincide with the system") {
  auto g = complete_graph(12);
  auto m = builtin_model("kuramoto", {{"sigma", 0.5}, {"coupling", 0.0}});
  auto W = builtin_kernel("constant", {{"p", 1.0}});
  auto init = uniform_law(0, 6.28);
  auto mf = picard_solve(m, W, midpoint_grid(4), 10, init, 0.5, 0.01);
  auto sys = simulate_graph_system(g, m, init, 0.5, 0.01, NoiseBath{2, 0, 1}, 1);
  auto cop = simulate_coupled_copies(mf, W, g.grid, m, init, 0.5, 0.01, NoiseBath{2, 0, 1}, 1);
  CHECK(sys.states == cop.states);
  CHECK_THROWS_AS(simulate_coupled_copies(mf, W, g.grid, m, init, 0.5, 0.015, NoiseBath{2, 0, 1}, 1),
                  PreconditionError);
}

TEST_CASE("trajectory csv rows") {
  auto g = complete_graph(2);
  auto tr = simulate_graph_system(g, builtin_model("ou", {{"sigma", 0}}), affine_point_law(1, 0), 0.1, 0.1,
                                  NoiseBath{}, 0);
  std::ostringstream os;
  write_trajectory_csv(tr, os);
  CHECK(os.str() == "0,0,0,0,0,1\n0,0,0,1,0,1\n0,1,0.1,0,0,0.9\n0,1,0.1,1,0,0.9\n");
}
