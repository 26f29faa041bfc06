// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "wrgsim/config.hpp"
#include "wrgsim/cut.hpp"
#include "wrgsim/diagnostics.hpp"
#include "wrgsim/graph.hpp"
#include "wrgsim/kernel.hpp"
#include "wrgsim/meanfield.hpp"
#include "wrgsim/model.hpp"
#include "wrgsim/parallel.hpp"
#include "wrgsim/particles.hpp"
#include "wrgsim/rng.hpp"
#include "wrgsim/runner.hpp"

using namespace wrgsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const int kThreads = default_threads();

// Criterion 1: bounded generators with uniform dilution leave no residual.
Outcome exact_zero_dilution() {
  Outcome o;
  const std::vector<Kernel> gens = {builtin_kernel("constant", {{"p", 0.5}}), builtin_kernel("one-minus-xy"),
                                    builtin_kernel("indicator", {{"R", 0.3}})};
  for (const auto& P : gens)
    for (std::size_t n : {10, 100, 1000}) {
      auto grid = make_positions(PositionScheme::deterministic, n);
      MicroKernel mk{P, rho_from_rule(n, 0.4)};
      auto dil = make_dilution(DilutionKind::uniform, mk, grid, kThreads);
      double d = delta_n(P, mk, dil, grid, kThreads);
      if (d != 0.0) o.require(false, P.name() + " n=" + std::to_string(n) + " delta_n=" + num(d));
    }
  if (o.detail.empty()) o.detail = "delta_n == 0 for 9 (kernel, n) pairs";
  return o;
}

// Criterion 2: power-law generator with degree normalization; s_n scaling for a row-invariant kernel.
Outcome power_law_regularity() {
  Outcome o;
  const double alpha = 0.3, delta = 0.45;
  Kernel P = builtin_kernel("power-xy", {{"alpha", alpha}});
  Kernel W = builtin_kernel("power-y", {{"alpha", alpha}});
  std::vector<double> d;
  for (std::size_t n : {64, 256, 1024}) {
    auto grid = make_positions(PositionScheme::deterministic, n);
    MicroKernel mk{P, rho_from_rule(n, delta)};
    auto dil = make_dilution(DilutionKind::degree_normalized, mk, grid, kThreads);
    d.push_back(delta_n(W, mk, dil, grid, kThreads));
  }
  o.require(d[0] > d[1] && d[1] > d[2], "delta_n = " + num(d[0]) + ", " + num(d[1]) + ", " + num(d[2]));

  Kernel Ws = builtin_kernel("power-y", {{"alpha", 0.25}});
  const std::vector<double> ns = {1e2, 1e3, 1e4};
  std::vector<double> s;
  double logc = 0;
  for (double n : ns) {
    auto grid = make_positions(PositionScheme::deterministic, static_cast<std::size_t>(n));
    auto r = s_n(Ws, grid, {}, kThreads);
    o.require(r.converged, "s_n quadrature converged at n=" + num(n));
    s.push_back(r.value);
    logc += std::log(r.value) + 0.75 * std::log(n);
  }
  const double C = std::exp(logc / 3);
  double worst = 0;
  for (std::size_t k = 0; k < ns.size(); ++k) worst = std::max(worst, std::abs(s[k] / (C * std::pow(ns[k], -0.75)) - 1));
  o.require(worst <= 0.30, "s_n = " + num(s[0]) + ", " + num(s[1]) + ", " + num(s[2]) + " fit C=" + num(C) +
                               " max rel dev " + num(worst));
  return o;
}

double propagation(std::size_t n, const MeanFieldSolution& mf, const ModelSpec& m, const InitialLaw& init,
                   std::size_t replicas) {
  auto g = complete_graph(n, 1.0);
  Kernel W = builtin_kernel("constant", {{"p", 1.0}});
  NoiseBath bath{7, 0, 1};
  SimOptions so{kThreads, 1};
  std::vector<Trajectory> sys, cop;
  for (std::size_t r = 0; r < replicas; ++r) {
    sys.push_back(simulate_graph_system(g, m, init, 1.0, 0.01, bath, r, so));
    cop.push_back(simulate_coupled_copies(mf, W, g.grid, m, init, 1.0, 0.01, bath, r, so));
  }
  return propagation_error(sys, cop).max;
}

// Criterion 3: propagation of chaos trend on the complete graph.
Outcome propagation_trend() {
  Outcome o;
  Kernel W = builtin_kernel("constant", {{"p", 1.0}});
  auto init = uniform_law(0, 2 * M_PI);
  auto m = builtin_model("kuramoto", {{"sigma", 0.5}});
  PicardOptions po;
  po.seed = 11;
  po.threads = kThreads;
  auto mf = picard_solve(m, W, midpoint_grid(64), 500, init, 1.0, 0.01, po);
  o.require(mf.converged, "picard converged");
  double e50 = propagation(50, mf, m, init, 100), e400 = propagation(400, mf, m, init, 100);
  o.require(e400 < 0.5 * e50, "error(50)=" + num(e50) + " error(400)=" + num(e400));

  auto m0 = builtin_model("kuramoto", {{"sigma", 0.5}, {"coupling", 0.0}});
  auto mf0 = picard_solve(m0, W, midpoint_grid(8), 50, init, 1.0, 0.01, po);
  double e0 = propagation(50, mf0, m0, init, 10);
  o.require(e0 == 0.0, "zero-interaction control " + num(e0));
  return o;
}

struct IdentRun {
  IdentificationReport rep;
  bool converged = false;
};

IdentRun identify(const ModelSpec& m, const Kernel& W, const PositionGrid& quad, std::size_t M,
                  const InitialLaw& init, double T, double h, const TestDictionary& dict,
                  const std::vector<double>& weights = {}) {
  PicardOptions po;
  po.seed = 5;
  po.threads = kThreads;
  po.tol = 1e-10;
  auto mf = picard_solve(m, W, quad, M, init, T, h, po);
  auto psi = heat_solve(m, W, quad, psi0_from_init(init, quad).values, T, h, kThreads);
  return {identification_residual(psi, mf, dict, weights), mf.converged};
}

// Criterion 4: identification of the mean profile with the heat-type equation.
Outcome identification() {
  Outcome o;
  {
    auto m = builtin_model("kuramoto", {{"sigma", 0.0}});
    auto r = identify(m, builtin_kernel("one-minus-max"), midpoint_grid(128), 2, affine_point_law(0, 2 * M_PI), 1.0,
                      1e-3, trig_dictionary(4));
    o.require(r.converged && r.rep.residual <= 1e-3, "(a) point mass residual " + num(r.rep.residual));
  }
  auto lin = builtin_model("linear", {{"gamma", 1.0}, {"decay", 1.0}, {"sigma", 0.3}});
  auto init = gaussian_law(0, 1, 0.5);
  auto compact = identify(lin, builtin_kernel("one-minus-xy"), midpoint_grid(32), 2000, init, 1.0, 0.01,
                          trig_dictionary(2));
  o.require(compact.converged && compact.rep.residual <= 3 * compact.rep.max_stderr,
            "(b) linear residual " + num(compact.rep.residual) + " vs 3 SE " + num(3 * compact.rep.max_stderr));

  const double reference = 2 * std::max(compact.rep.residual, 3 * compact.rep.max_stderr);
  Kernel Wg("gaussian-affinity", [](double x, double y) { return std::exp(-0.5 * (x - y) * (x - y)); });
  auto density = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI); };
  for (double half : {2.0, 3.0}) {
    auto td = truncate_domain(density, Wg, half, 32);
    auto r = identify(lin, td.kernel, td.quad, 2000, init, 1.0, 0.01, bump_dictionary(5, half), td.measure_weights);
    o.require(r.converged && r.rep.residual <= reference,
              "(c) M=" + num(half) + " residual " + num(r.rep.residual) + " vs " + num(reference));
  }
  return o;
}

// Exhaustive transport oracle: permutations of the common-denominator expansion.
double transport_permutations(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t L = std::lcm(a.size(), b.size());
  std::vector<double> x, y;
  for (std::size_t k = 0; k < L; ++k) {
    x.push_back(a[k / (L / a.size())]);
    y.push_back(b[k / (L / b.size())]);
  }
  std::vector<std::size_t> perm(L);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0;
    for (std::size_t k = 0; k < L; ++k) c += std::abs(x[k] - y[perm[k]]);
    best = std::min(best, c / static_cast<double>(L));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Integral of |F_a - F_b| over the merged breakpoints.
double transport_cdf(std::vector<double> a, std::vector<double> b) {
  std::vector<double> pts = a;
  pts.insert(pts.end(), b.begin(), b.end());
  std::sort(pts.begin(), pts.end());
  auto cdf = [](const std::vector<double>& s, double t) {
    double c = 0;
    for (double v : s) c += v <= t ? 1 : 0;
    return c / static_cast<double>(s.size());
  };
  double total = 0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) total += std::abs(cdf(a, pts[k]) - cdf(b, pts[k])) * (pts[k + 1] - pts[k]);
  return total;
}

double cut_exhaustive(const StepKernel& A) {
  const std::size_t n = A.n;
  double best = 0;
  std::vector<double> col(n);
  for (std::uint32_t S = 0; S < (1u << n); ++S) {
    std::fill(col.begin(), col.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (S >> i & 1)
        for (std::size_t j = 0; j < n; ++j) col[j] += A.lengths[i] * A.lengths[j] * A.at(i, j);
    double sum = 0;
    std::uint32_t T = 0;
    for (std::uint32_t k = 1; k < (1u << n); ++k) {
      const int bit = __builtin_ctz(k);
      T ^= 1u << bit;
      sum += (T >> bit & 1) ? col[bit] : -col[bit];
      best = std::max(best, std::abs(sum));
    }
  }
  return best;
}

// Criterion 5: closed-form and brute-force oracles.
Outcome oracles() {
  Outcome o;
  KeyedStream rng(hash_key({20, 5}));
  double w1_err = 0;
  std::size_t cases = 0;
  for (std::size_t na = 1; na <= 6; ++na)
    for (std::size_t nb = 1; nb <= 6; ++nb)
      for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> a(na), b(nb);
        for (auto& v : a) v = rep % 2 ? std::floor(rng.uniform() * 4) : rng.uniform() * 10 - 5;
        for (auto& v : b) v = rep % 2 ? std::floor(rng.uniform() * 4) : rng.uniform() * 10 - 5;
        const double got = w1_1d(a, b);
        const double want = std::lcm(na, nb) <= 8 ? transport_permutations(a, b) : transport_cdf(a, b);
        w1_err = std::max(w1_err, std::abs(got - want));
        ++cases;
      }
  o.require(w1_err <= 1e-12, "w1_1d vs transport oracle on " + std::to_string(cases) + " sets, max err " + num(w1_err));

  double exact_err = 0, heur_err = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> vals(100);
    for (auto& v : vals) v = rng.uniform() * 2 - 1;
    auto A = uniform_step_kernel(10, vals);
    const double oracle = cut_exhaustive(A);
    CutOptions ex;
    CutOptions he;
    he.mode = CutMode::heuristic;
    he.seed = static_cast<std::uint64_t>(rep);
    exact_err = std::max(exact_err, std::abs(cut_norm(A, ex).value - oracle));
    heur_err = std::max(heur_err, std::abs(cut_norm(A, he).value - oracle));
  }
  o.require(exact_err <= 1e-12, "exact cut norm vs exhaustive, max err " + num(exact_err));
  o.require(heur_err <= 1e-12, "heuristic vs exhaustive, max err " + num(heur_err));

  // Double-sum oracle built from pairwise upsilon values.
  auto m = builtin_model("kuramoto", {{"sigma", 0.3}});
  Kernel W = builtin_kernel("one-minus-xy");
  PicardOptions po;
  po.seed = 3;
  po.snapshot_stride = 5;
  auto quad = make_positions(PositionScheme::deterministic, 16);
  const double T = 0.2;
  auto mf = picard_solve(m, W, quad, 40, uniform_law(0, 2 * M_PI), T, 0.01, po);
  auto grid = make_positions(PositionScheme::deterministic, 8);
  auto eps = epsilon_terms(mf, m, W, grid, T);
  std::vector<std::size_t> node(8);
  for (std::size_t i = 0; i < 8; ++i) node[i] = 2 * i + 1;
  double e1 = 0, e2 = 0, e3 = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    const std::size_t xi = node[i];
    const double x = quad.x(xi);
    std::vector<double> ups(16 * 16);
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t z = 0; z < 16; ++z) ups[y * 16 + z] = upsilon(mf, m, xi, y, z, T).value;
    double nn = 0, nl = 0, ln = 0, ll = 0;
    for (std::size_t k = 0; k < 8; ++k)
      for (std::size_t l = 0; l < 8; ++l)
        nn += W(x, quad.x(node[k])) * W(x, quad.x(node[l])) * ups[node[k] * 16 + node[l]] / 64.0;
    for (std::size_t k = 0; k < 8; ++k)
      for (std::size_t r = 0; r < 16; ++r) {
        nl += W(x, quad.x(node[k])) * W(x, quad.x(r)) * ups[node[k] * 16 + r] / 8.0 / 16.0;
        ln += W(x, quad.x(r)) * W(x, quad.x(node[k])) * ups[r * 16 + node[k]] / 16.0 / 8.0;
      }
    for (std::size_t q = 0; q < 16; ++q)
      for (std::size_t r = 0; r < 16; ++r) ll += W(x, quad.x(q)) * W(x, quad.x(r)) * ups[q * 16 + r] / 256.0;
    e1 = std::max(e1, std::abs(nn - ll));
    e2 = std::max(e2, std::abs(nl - ll));
    e3 = std::max(e3, std::abs(ln - ll));
  }
  const double eerr = std::max({std::abs(eps.e1 - e1), std::abs(eps.e2 - e2), std::abs(eps.e3 - e3)});
  o.require(eerr <= 1e-12 && e1 > 0, "epsilon_terms vs double sums (e1=" + num(e1) + "), max err " + num(eerr));
  return o;
}

// Criterion 6: cut distance of graphs to their limit.
Outcome cut_convergence() {
  Outcome o;
  Kernel one = builtin_kernel("constant", {{"p", 1.0}});
  double worst = 0;
  for (std::size_t n = 2; n <= 12; ++n) {
    auto r = cut_distance_graph_kernel(renormalize(complete_graph(n, 1.0)), one, {}, 4);
    worst = std::max(worst, std::abs(r.value - 1.0 / static_cast<double>(n)));
  }
  o.require(worst == 0.0, "complete graph n=2..12: max |d - 1/n| = " + num(worst));

  std::vector<double> med;
  std::string trend;
  for (std::size_t n : {16, 32, 64, 128, 256}) {
    auto grid = make_positions(PositionScheme::deterministic, n);
    MicroKernel mk{one, 0.5};
    auto dil = make_dilution(DilutionKind::uniform, mk, grid, kThreads);
    std::vector<double> vals;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto g = sample_graph(mk, dil.kappas(), grid, seed, kThreads);
      CutOptions co;
      co.mode = CutMode::heuristic;
      co.seed = seed;
      co.threads = kThreads;
      vals.push_back(cut_distance_graph_kernel(renormalize(g), one, co, 4).value);
    }
    std::sort(vals.begin(), vals.end());
    med.push_back(0.5 * (vals[4] + vals[5]));
    trend += (trend.empty() ? "" : ", ") + num(med.back());
  }
  bool dec = true;
  for (std::size_t k = 1; k < med.size(); ++k) dec = dec && med[k] < med[k - 1];
  o.require(dec, "ER p=0.5 kappa=2 medians " + trend);
  return o;
}

// Criterion 7: concentration inequality, entropy inequality and Bernoulli-sum tails.
Outcome concentration() {
  Outcome o;
  const std::size_t n = 2000;
  auto r = concentration_check(5, 0.2, n, std::vector<double>(n, 0.2), std::vector<double>(n, 1.0), 10000, 1, kThreads);
  o.require(r.pass, "tail " + num(r.empirical_tail) + " <= bound " + num(r.bound));

  double arith = 0;
  for (double kappa : {1.0, 2.5, 5.0, 10.0})
    for (double w : {0.05, 0.2, 1.0})
      for (std::size_t nn : {10, 1000, 100000}) {
        long double N = nn;
        const long double want = std::sqrt(32.0L * kappa * kappa * w * std::log(N) / N);
        std::vector<double> p(nn, 0.0), v(nn, 0.0);
        const double got = concentration_check(kappa, w, nn, p, v, 1, 0).epsilon;
        arith = std::max(arith, static_cast<double>(std::abs(got - want)));
      }
  o.require(arith <= 1e-12, "epsilon_n arithmetic max err " + num(arith));

  std::size_t ok = 0, total = 0;
  for (int xi = 1; xi <= 10; ++xi)
    for (int vi = 1; vi <= 10; ++vi) {
      const double x = 0.1 * xi, v = 0.5 * vi;
      auto e = entropy_bounds(0.5, 0.5, x, v, 1, 1, 1);
      ok += e.inequality_holds;
      ++total;
    }
  o.require(ok == total, "entropy inequality on " + std::to_string(ok) + "/" + std::to_string(total) + " lattice points");

  std::size_t cl_ok = 0, cl_total = 0;
  for (int shape = 0; shape < 3; ++shape) {
    std::vector<double> a(60), p(60);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = shape == 0 ? 1.0 : 0.5 + 0.5 * static_cast<double>(i % 7) / 6.0;
      p[i] = shape == 2 ? 0.1 + 0.8 * static_cast<double>(i % 9) / 8.0 : 0.3;
    }
    for (double lambda : {1.0, 2.0, 3.0, 4.0, 6.0}) {
      auto c = chung_lu_check(a, p, lambda, 20000, 100 + static_cast<std::uint64_t>(shape));
      cl_ok += c.pass;
      ++cl_total;
    }
  }
  o.require(cl_ok == cl_total, "Bernoulli-sum tails within bounds on " + std::to_string(cl_ok) + "/" +
                                   std::to_string(cl_total) + " lattice points");
  return o;
}

// Criterion 8: solver orders and contraction.
Outcome solver_orders() {
  Outcome o;
  auto decay = builtin_model("linear", {{"gamma", 0.0}, {"decay", 1.0}});
  auto u = uniqueness_probe(decay, builtin_kernel("one-minus-xy"), [](double x, std::span<double> out) { out[0] = 1 + x; },
                            1.0, 0.1, 8, kThreads);
  o.require(std::abs(u.order - 4) <= 0.5, "RK4 observed order " + num(u.order));

  auto kur = builtin_model("kuramoto", {{"sigma", 0.2}});
  PicardOptions po;
  po.seed = 9;
  po.threads = kThreads;
  po.tol = 1e-12;
  auto mf = picard_solve(kur, builtin_kernel("one-minus-max"), midpoint_grid(32), 500, uniform_law(0, 2 * M_PI), 1.0,
                         0.01, po);
  bool contracting = mf.gaps.size() >= 3;
  double worst_ratio = 0;
  for (std::size_t k = 1; k < mf.gaps.size(); ++k) {
    if (mf.gaps[k - 1] < 1e-13) break;
    worst_ratio = std::max(worst_ratio, mf.gaps[k] / mf.gaps[k - 1]);
  }
  contracting = contracting && worst_ratio < 1 && mf.converged;
  o.require(contracting, "picard gaps " + std::to_string(mf.gaps.size()) + " sweeps, worst ratio " + num(worst_ratio));

  auto det = builtin_model("kuramoto", {{"sigma", 0.0}});
  auto quad = midpoint_grid(64);
  auto init = affine_point_law(0, 2 * M_PI);
  auto mf0 = picard_solve(det, builtin_kernel("one-minus-max"), quad, 2, init, 1.0, 0.01, po);
  auto heat = heat_solve(det, builtin_kernel("one-minus-max"), quad, psi0_from_init(init, quad).values, 1.0, 0.01, kThreads);
  auto prof = mean_profile(mf0);
  double diff = 0;
  for (std::size_t k = 0; k < heat.values.size(); ++k) diff = std::max(diff, std::abs(heat.values[k] - prof.values[k]));
  o.require(diff <= 1e-6, "picard vs heat " + num(diff));
  return o;
}

// Criterion 9: moment sanity.
Outcome moments() {
  Outcome o;
  {
    const std::size_t n = 10000;
    auto g = graph_from_adjacency(BitMatrix(n), std::vector<double>(n, 1.0), make_positions(PositionScheme::deterministic, n));
    auto m = builtin_model("ou");
    auto tr = simulate_graph_system(g, m, affine_point_law(0, 0), 5.0, 1e-3, NoiseBath{17, 0, 1}, 0, {kThreads, 5000});
    double s1 = 0, s2 = 0;
    const std::size_t last = tr.stored() - 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::pow(tr.state(last, i)[0], 4);
      s1 += v;
      s2 += v * v;
    }
    const double mean = s1 / n, se = std::sqrt((s2 / n - mean * mean) / (n - 1));
    o.require(std::abs(mean - 0.75) <= 3 * se, "OU E theta^4 = " + num(mean) + " +- " + num(se));
  }
  struct Case {
    std::string model;
    Params params;
    InitialLaw init;
  };
  const std::vector<Case> cases = {
      {"kuramoto", {{"sigma", 0.5}}, uniform_law(0, 2 * M_PI)},
      {"fhn", {{"sigma", 0.3}}, gaussian_law(0, 0, 0.5, 2)},
      {"linear", {{"sigma", 0.3}}, gaussian_law(0, 1, 0.5)},
      {"neural-field", {{"sigma", 0.2}}, gaussian_law(0, 1, 0.5)},
      {"ou", {}, affine_point_law(0, 0)},
  };
  auto g = complete_graph(30, 1.0);
  double worst = 0;
  std::string names;
  for (const auto& c : cases) {
    auto m = builtin_model(c.model, c.params);
    const int two_k = m.growth_k >= 3 ? 6 : 4;
    std::vector<Trajectory> coarse, fine;
    for (std::size_t r = 0; r < 40; ++r) {
      coarse.push_back(simulate_graph_system(g, m, c.init, 2.0, 0.01, NoiseBath{23, 0, 2}, r, {kThreads, 1}));
      fine.push_back(simulate_graph_system(g, m, c.init, 2.0, 0.005, NoiseBath{23, 0, 1}, r, {kThreads, 1}));
    }
    const double gr = moment_growth(moment_check(coarse, two_k), moment_check(fine, two_k));
    worst = std::max(worst, std::abs(gr));
    names += (names.empty() ? "" : ", ") + c.model + " " + num(gr);
  }
  o.require(worst <= 0.10, "h vs h/2 moment growth: " + names);
  return o;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Criterion 10: byte-identical outputs across thread counts and replays.
Outcome determinism() {
  Outcome o;
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"simulate", "kernel.name = er\nkernel.p = 0.5\nmodel.name = kuramoto\nmodel.sigma = 0.5\ninit.law = uniform\n"
                   "run.n = 20\nrun.replicas = 2\nrun.seeds = 1,2\nnumerics.T = 0.2\n"},
      {"meanfield", "kernel.name = one-minus-max\nmodel.sigma = 0.3\ninit.law = uniform\nnumerics.Q = 8\nnumerics.M = 20\n"
                    "numerics.T = 0.2\n"},
      {"heat", "kernel.name = one-minus-xy\ninit.law = point\ninit.slope = 6.283185307179586\nnumerics.Q = 16\n"
               "numerics.T = 0.2\n"},
      {"compare", "kernel.name = er\nkernel.p = 0.6\nmodel.sigma = 0.4\ninit.law = uniform\nrun.n = 16\n"
                  "run.replicas = 3\nnumerics.Q = 16\nnumerics.M = 20\nnumerics.T = 0.2\nnumerics.stride = 5\n"},
      {"graphstats", "kernel.name = power-xy\nkernel.alpha = 0.3\nkernel.dilution = degree-normalized\nkernel.rho = n^-0.45\n"
                     "run.n = 50\nrun.seeds = 1,2\n"},
      {"cutdist", "kernel.name = one-minus-xy\nkernel.rho = 0.5\nrun.n = 12\nrun.seeds = 1,2\ncut.mode = exact\ncut.aux = true\n"},
      {"concentration", "concentration.n = 200\nconcentration.trials = 500\nconcentration.kappa = 2\nconcentration.w = 0.5\n"},
      {"sweep", "kernel.name = er\nkernel.rho = 0.5\nsweep.metric = cut_distance\nrun.n_list = 16,32\nrun.seeds = 1,2\n"
                "cut.mode = heuristic\n"},
  };
  const fs::path root = fs::temp_directory_path() / "wrgsim_acceptance_determinism";
  fs::remove_all(root);
  std::size_t files = 0;
  for (const auto& [cmd, text] : runs) {
    auto cfg = parse_config(text);
    std::vector<RunManifest> ms;
    for (int threads : {1, 4, 8}) {
      RunOptions ro;
      ro.out_dir = (root / (cmd + "_t" + std::to_string(threads))).string();
      ro.threads = threads;
      ro.emit_plot_data = true;
      ms.push_back(run_experiment(cmd, cfg, ro));
    }
    bool same = ms[0].exit_code == 0;
    for (std::size_t k = 1; k < ms.size(); ++k) {
      same = same && ms[k].files.size() == ms[0].files.size();
      for (std::size_t f = 0; same && f < ms[0].files.size(); ++f) {
        const auto& a = ms[0].files[f];
        const auto& b = ms[k].files[f];
        same = a.path == b.path && a.fnv1a == b.fnv1a &&
               read_file(root / (cmd + "_t1") / a.path) ==
                   read_file(root / (cmd + "_t" + std::to_string(k == 1 ? 4 : 8)) / b.path);
      }
    }
    for (int threads : {1, 4, 8}) {
      RunOptions ro;
      ro.out_dir = (root / (cmd + "_replay" + std::to_string(threads))).string();
      ro.threads = threads;
      auto rep = replay((root / (cmd + "_t1") / "manifest.json").string(), ro);
      same = same && rep.identical;
    }
    files += ms[0].files.size();
    if (!same) o.require(false, cmd + " differs across threads or replay");
  }
  if (o.pass) o.detail = "8 pipelines, " + std::to_string(files) + " files identical at threads 1/4/8 and on replay";
  fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"exact-zero dilution residual", exact_zero_dilution},
      {"power-law regularity", power_law_regularity},
      {"propagation of chaos trend", propagation_trend},
      {"identification", identification},
      {"oracle equivalences", oracles},
      {"cut-distance convergence", cut_convergence},
      {"concentration bounds", concentration},
      {"solver orders and contraction", solver_orders},
      {"moment sanity", moments},
      {"determinism", determinism},
  };
  int failures = 0;
  std::vector<bool> selected(criteria.size(), argc == 1);
  for (int a = 1; a < argc; ++a) {
    const std::size_t k = std::strtoul(argv[a], nullptr, 10);
    if (k >= 1 && k <= criteria.size()) selected[k - 1] = true;
  }
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!selected[k]) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
