#include "wrgsim/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "wrgsim/errors.hpp"
#include "wrgsim/parallel.hpp"
#include "wrgsim/rng.hpp"

namespace wrgsim {

void DiagnosticsReport::add(const std::string& name, double value, double se) {
  if (!std::isfinite(value) || !std::isfinite(se))
    throw PreconditionError("report entry " + name + " is not finite");
  entries.push_back({name, value, se});
}

void DiagnosticsReport::flag(const std::string& name, const std::string& inequality, bool pass) {
  flags.push_back({name, inequality, pass});
}

bool DiagnosticsReport::all_pass() const {
  return std::all_of(flags.begin(), flags.end(), [](const Flag& f) { return f.pass; });
}

std::string DiagnosticsReport::to_json() const {
  nlohmann::ordered_json j;
  j["provenance"] = provenance;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : entries)
    j["entries"].push_back({{"name", e.name}, {"value", e.value}, {"stderr", e.stderr_}});
  j["flags"] = nlohmann::ordered_json::array();
  for (const auto& f : flags)
    j["flags"].push_back({{"name", f.name}, {"inequality", f.inequality}, {"pass", f.pass}});
  return j.dump(2);
}

double w1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw PreconditionError("w1_1d: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  if (x.size() == y.size()) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
    return s / static_cast<double>(x.size());
  }
  // Integrate |F_a^{-1} - F_b^{-1}| over the merged quantile breakpoints k/m and l/n.
  const std::size_t m = x.size(), n = y.size();
  std::size_t i = 0, j = 0;
  double u = 0, s = 0;
  while (i < m && j < n) {
    double ua = static_cast<double>(i + 1) / static_cast<double>(m);
    double ub = static_cast<double>(j + 1) / static_cast<double>(n);
    double next = std::min(ua, ub);
    s += (next - u) * std::abs(x[i] - y[j]);
    u = next;
    // Compare exactly in integers: (i+1) n vs (j+1) m.
    std::size_t lhs = (i + 1) * n, rhs = (j + 1) * m;
    if (lhs <= rhs) ++i;
    if (rhs <= lhs) ++j;
  }
  return s;
}

double assignment_cost(const std::vector<double>& cost, std::size_t n) {
  if (cost.size() != n * n) throw PreconditionError("assignment_cost: cost must be n x n");
  if (n == 0) return 0;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  auto a = [&](std::size_t i, std::size_t j) { return cost[(i - 1) * n + (j - 1)]; };
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      std::size_t i0 = p[j0], j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= n; ++j)
        if (!used[j]) {
          double cur = a(i0, j) - u[i0] - v[j];
          if (cur < minv[j]) minv[j] = cur, way[j] = j0;
          if (minv[j] < delta) delta = minv[j], j1 = j;
        }
      for (std::size_t j = 0; j <= n; ++j)
        if (used[j]) u[p[j]] += delta, v[j] -= delta;
        else minv[j] -= delta;
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0;
  for (std::size_t j = 1; j <= n; ++j) total += a(p[j], j);
  return total;
}

W1Result w1_nd(std::span<const double> a, std::span<const double> b, std::size_t dim,
               std::uint64_t seed, std::size_t projections) {
  if (dim == 0 || a.empty() || b.empty() || a.size() % dim || b.size() % dim)
    throw PreconditionError("w1_nd: samples must be nonempty count x dim arrays");
  const std::size_t na = a.size() / dim, nb = b.size() / dim;
  if (dim == 1) return {w1_1d(a, b), false};
  if (na == nb && na <= 256) {
    std::vector<double> c(na * na);
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = 0; j < na; ++j) {
        double s = 0;
        for (std::size_t k = 0; k < dim; ++k) s += (a[i * dim + k] - b[j * dim + k]) * (a[i * dim + k] - b[j * dim + k]);
        c[i * na + j] = std::sqrt(s);
      }
    return {assignment_cost(c, na) / static_cast<double>(na), false};
  }
  if (projections == 0) throw PreconditionError("w1_nd: sliced estimate needs projections");
  double total = 0;
  std::vector<double> dir(dim), pa(na), pb(nb);
  for (std::size_t r = 0; r < projections; ++r) {
    double nrm = 0;
    for (std::size_t k = 0; k < dim; ++k) {
      dir[k] = keyed_normal({seed, stream::probe, r, k});
      nrm += dir[k] * dir[k];
    }
    nrm = std::sqrt(nrm);
    for (std::size_t i = 0; i < na; ++i) {
      pa[i] = 0;
      for (std::size_t k = 0; k < dim; ++k) pa[i] += a[i * dim + k] * dir[k] / nrm;
    }
    for (std::size_t i = 0; i < nb; ++i) {
      pb[i] = 0;
      for (std::size_t k = 0; k < dim; ++k) pb[i] += b[i * dim + k] * dir[k] / nrm;
    }
    total += w1_1d(pa, pb);
  }
  return {total / static_cast<double>(projections), true};
}

namespace {

void check_coupling(const Trajectory& a, const Trajectory& b) {
  if (a.n != b.n || a.dim != b.dim || a.steps != b.steps || a.stride != b.stride || a.h != b.h)
    throw PreconditionError("trajectories have different shapes");
  if (a.seed != b.seed || a.noise_stream != b.noise_stream || a.replica != b.replica)
    throw PreconditionError("trajectories do not share coupling keys");
  if (a.positions != b.positions) throw PreconditionError("trajectories use different positions");
}

struct MeanSe {
  double mean = 0, se = 0;
};

MeanSe mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += x;
  double mean = s / n, ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0};
}

PoolReport pool(const std::vector<std::vector<double>>& per_replica) {
  PoolReport r;
  r.replicas = per_replica.size();
  const std::size_t n = per_replica.front().size();
  r.per_index.resize(n);
  r.per_index_stderr.resize(n);
  std::vector<double> col(r.replicas);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < r.replicas; ++k) col[k] = per_replica[k][i];
    auto ms = mean_se(col);
    r.per_index[i] = ms.mean;
    r.per_index_stderr[i] = ms.se;
    if (i == 0 || ms.mean > r.max) r.max = ms.mean, r.max_stderr = ms.se, r.argmax = i;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return r.per_index[x] < r.per_index[y]; });
  std::size_t k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n) - 1;
  r.p95 = r.per_index[order[k]];
  r.p95_stderr = r.per_index_stderr[order[k]];
  return r;
}

// Stored trajectory index -> step on another time grid, when the times coincide.
bool match_step(double t, double h, std::size_t steps, std::size_t& s) {
  double r = t / h;
  double k = std::round(r);
  if (std::abs(r - k) > 1e-9 * std::max(1.0, r) || k < 0 || k > static_cast<double>(steps)) return false;
  s = static_cast<std::size_t>(k);
  return true;
}

double norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Edges of the cells represented by sorted unit-interval nodes: uniform cells for right
// endpoint and midpoint grids, nearest-node cells otherwise.
std::vector<double> unit_cells(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  const double N = static_cast<double>(n);
  bool uniform = true;
  for (std::size_t i = 0; i < n && uniform; ++i) {
    double right = static_cast<double>(i + 1) / N, mid = (static_cast<double>(i) + 0.5) / N;
    uniform = std::abs(xs[i] - right) < 1e-12 || std::abs(xs[i] - mid) < 1e-12;
  }
  std::vector<double> e(n + 1);
  if (uniform) {
    for (std::size_t i = 0; i <= n; ++i) e[i] = static_cast<double>(i) / N;
    return e;
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (xs[i] < xs[i - 1]) throw PreconditionError("profile nodes must be sorted");
    e[i] = 0.5 * (xs[i - 1] + xs[i]);
  }
  e[0] = 0;
  e[n] = 1;
  return e;
}

}  // namespace

PoolReport propagation_error(const std::vector<Trajectory>& system,
                             const std::vector<Trajectory>& copies) {
  if (system.empty() || system.size() != copies.size())
    throw PreconditionError("propagation_error: need matching nonempty replica lists");
  std::vector<std::vector<double>> per(system.size());
  for (std::size_t r = 0; r < system.size(); ++r) {
    const auto& a = system[r];
    const auto& b = copies[r];
    check_coupling(a, b);
    per[r].assign(a.n, 0.0);
    for (std::size_t k = 0; k < a.stored(); ++k)
      for (std::size_t i = 0; i < a.n; ++i) {
        double s = 0;
        for (std::size_t c = 0; c < a.dim; ++c) {
          double d = a.state(k, i)[c] - b.state(k, i)[c];
          s += d * d;
        }
        per[r][i] = std::max(per[r][i], s);
      }
  }
  return pool(per);
}

EmpiricalReport empirical_measure_error(const std::vector<Trajectory>& system,
                                        const MeanFieldSolution& mf, const TestFunction& phi,
                                        std::uint64_t check_seed) {
  if (system.empty()) throw PreconditionError("empirical_measure_error: no replicas");
  if (mf.snapshot_stride == 0) throw PreconditionError("empirical_measure_error: mf ensembles not retained");
  const auto& t0 = system.front();
  const std::size_t d = t0.dim;
  if (d != mf.dim) throw PreconditionError("empirical_measure_error: dimensions differ");
  if (t0.positions.size() != t0.n) throw PreconditionError("empirical_measure_error: needs 1-d positions");

  EmpiricalReport rep;
  std::vector<double> th(d), th2(d);
  for (std::size_t k = 0; k < 256; ++k) {
    double x = keyed_uniform({check_seed, stream::probe, k, 1000});
    for (std::size_t c = 0; c < d; ++c) {
      th[c] = 20 * keyed_uniform({check_seed, stream::probe, k, c}) - 10;
      th2[c] = 20 * keyed_uniform({check_seed, stream::probe, k, c + d}) - 10;
    }
    double f1 = phi(th, x), f2 = phi(th2, x), dist = 0;
    for (std::size_t c = 0; c < d; ++c) dist += (th[c] - th2[c]) * (th[c] - th2[c]);
    if (!std::isfinite(f1) || !std::isfinite(f2))
      throw PreconditionError("empirical_measure_error: test function is not finite");
    if (dist > 0) rep.lipschitz_theta = std::max(rep.lipschitz_theta, std::abs(f1 - f2) / std::sqrt(dist));
    rep.growth = std::max(rep.growth, std::abs(f1) / (1 + norm(th)));
  }

  double best = -1;
  for (std::size_t k = 0; k < t0.stored(); ++k) {
    std::size_t s;
    const double t = t0.time(k);
    if (!match_step(t, mf.h, mf.steps, s) || !mf.has_snapshot(s)) continue;
    double limit = 0;
    for (std::size_t q = 0; q < mf.Q(); ++q) {
      const double* ens = mf.ensemble(s, q);
      double acc = 0;
      for (std::size_t m = 0; m < mf.M; ++m) acc += phi(std::span<const double>(ens + m * d, d), mf.quad.x(q));
      limit += mf.quad.weights[q] * (acc / static_cast<double>(mf.M));
    }
    std::vector<double> sq(system.size());
    for (std::size_t r = 0; r < system.size(); ++r) {
      const auto& tr = system[r];
      double acc = 0;
      for (std::size_t i = 0; i < tr.n; ++i) acc += phi(std::span<const double>(tr.state(k, i), d), tr.positions[i]);
      double diff = acc / static_cast<double>(tr.n) - limit;
      sq[r] = diff * diff;
    }
    auto ms = mean_se(sq);
    if (ms.mean > best) {
      best = ms.mean;
      rep.error = {ms.mean, ms.se};
      rep.worst_time = t;
    }
  }
  if (best < 0) throw PreconditionError("empirical_measure_error: no common snapshot times");
  return rep;
}

ProfileField profile_from_trajectory(const Trajectory& tr) {
  if (tr.positions.size() != tr.n) throw PreconditionError("profile_from_trajectory: needs 1-d positions");
  ProfileField f;
  f.quad = custom_grid(tr.positions, std::vector<double>(tr.n, 1.0 / static_cast<double>(tr.n)));
  f.h = tr.h * static_cast<double>(tr.stride);
  f.steps = tr.stored() - 1;
  f.dim = tr.dim;
  f.values = tr.states;
  return f;
}

double profile_error(const Trajectory& tr, const ProfileField& psi, double k) {
  if (!(k >= 1)) throw PreconditionError("profile_error: k must be >= 1");
  if (tr.positions.size() != tr.n || psi.quad.dim != 1)
    throw PreconditionError("profile_error: unit-interval runs only");
  if (tr.dim != psi.dim) throw PreconditionError("profile_error: dimensions differ");
  std::vector<double> xq(psi.Q());
  for (std::size_t q = 0; q < psi.Q(); ++q) xq[q] = psi.quad.x(q);
  const auto ea = unit_cells(tr.positions), eb = unit_cells(xq);
  bool any = false;
  double worst = 0;
  std::vector<double> diff(tr.dim);
  for (std::size_t kk = 0; kk < tr.stored(); ++kk) {
    std::size_t s;
    if (!match_step(tr.time(kk), psi.h, psi.steps, s)) continue;
    any = true;
    double acc = 0, x = 0;
    std::size_t i = 0, q = 0;
    while (i < tr.n && q < psi.Q()) {
      double next = std::min(ea[i + 1], eb[q + 1]);
      if (next > x) {
        for (std::size_t c = 0; c < tr.dim; ++c) diff[c] = tr.state(kk, i)[c] - psi.at(s, q)[c];
        acc += std::pow(norm(diff), k) * (next - x);
        x = next;
      }
      if (ea[i + 1] <= next) ++i;
      if (eb[q + 1] <= next) ++q;
    }
    worst = std::max(worst, std::pow(acc, 1 / k));
  }
  if (!any) throw PreconditionError("profile_error: no common times");
  return worst;
}

TestDictionary trig_dictionary(std::size_t K) {
  TestDictionary d;
  d.name = "trig-" + std::to_string(K);
  d.functions.push_back([](double) { return 1.0; });
  for (std::size_t k = 1; k <= K; ++k) {
    const double w = 2 * M_PI * static_cast<double>(k);
    d.functions.push_back([w](double x) { return std::cos(w * x); });
    d.functions.push_back([w](double x) { return std::sin(w * x); });
  }
  return d;
}

TestDictionary bump_dictionary(std::size_t K, double half_width) {
  if (K == 0 || !(half_width > 0)) throw PreconditionError("bump_dictionary: K and width must be positive");
  TestDictionary d;
  d.name = "bump-" + std::to_string(K);
  const double spacing = 2 * half_width / static_cast<double>(K);
  const double radius = spacing;
  for (std::size_t j = 0; j < K; ++j) {
    const double centre = -half_width + (static_cast<double>(j) + 0.5) * spacing;
    d.functions.push_back([centre, radius](double x) {
      double u = (x - centre) / radius;
      return std::abs(u) < 1 ? std::exp(1 - 1 / (1 - u * u)) : 0.0;
    });
  }
  return d;
}

IdentificationReport identification_residual(const ProfileField& psi, const MeanFieldSolution& mf,
                                             const TestDictionary& dict,
                                             const std::vector<double>& weights) {
  const std::size_t Q = psi.Q(), d = psi.dim;
  if (Q != mf.Q() || d != mf.dim) throw PreconditionError("identification_residual: quadratures differ");
  for (std::size_t q = 0; q < Q; ++q)
    for (int c = 0; c < psi.quad.dim; ++c)
      if (std::abs(psi.quad.point(q)[c] - mf.quad.point(q)[c]) > 1e-12)
        throw PreconditionError("identification_residual: quadrature nodes differ");
  const auto& w = weights.empty() ? psi.quad.weights : weights;
  if (w.size() != Q) throw PreconditionError("identification_residual: weight count differs");
  std::vector<std::vector<double>> J(dict.functions.size(), std::vector<double>(Q));
  for (std::size_t j = 0; j < J.size(); ++j)
    for (std::size_t q = 0; q < Q; ++q) J[j][q] = dict.functions[j](psi.quad.x(q));

  IdentificationReport rep;
  bool any = false;
  for (std::size_t s = 0; s <= psi.steps; ++s) {
    std::size_t sm;
    const double t = static_cast<double>(s) * psi.h;
    if (!match_step(t, mf.h, mf.steps, sm)) continue;
    any = true;
    for (std::size_t j = 0; j < J.size(); ++j)
      for (std::size_t c = 0; c < d; ++c) {
        double a = 0, b = 0, var = 0;
        for (std::size_t q = 0; q < Q; ++q) {
          const double wj = w[q] * J[j][q];
          const double mean = mf.mean(sm, q)[c];
          a += wj * psi.at(s, q)[c];
          b += wj * mean;
          double v = std::max(0.0, mf.second_moments[(sm * Q + q) * d + c] - mean * mean);
          var += wj * wj * v;
        }
        double se = std::sqrt(var / static_cast<double>(mf.M));
        double res = std::abs(a - b);
        rep.max_stderr = std::max(rep.max_stderr, se);
        if (res > rep.residual || (j == 0 && c == 0 && s == 0)) {
          rep.residual = res;
          rep.stderr_at_max = se;
          rep.worst_function = j;
          rep.worst_time = t;
        }
      }
  }
  if (!any) throw PreconditionError("identification_residual: no common times");
  return rep;
}

std::vector<double> gamma_avg(const MeanFieldSolution& mf, const ModelSpec& m,
                              std::span<const double> theta, std::size_t q, std::size_t s) {
  std::vector<double> out(m.dim, 0.0);
  if (m.separable && mf.features == m.separable->features) {
    m.separable->combine(theta, std::span<const double>(mf.feature(s, q), mf.features), 1.0, out);
    return out;
  }
  if (!mf.has_snapshot(s)) throw PreconditionError("gamma_avg: ensemble not retained at this step");
  std::vector<double> g(m.dim);
  const double* ens = mf.ensemble(s, q);
  for (std::size_t k = 0; k < mf.M; ++k) {
    m.interaction(theta, std::span<const double>(ens + k * m.dim, m.dim), g);
    for (std::size_t c = 0; c < m.dim; ++c) out[c] += g[c];
  }
  for (double& v : out) v /= static_cast<double>(mf.M);
  return out;
}

namespace {

// Trapezoid weights on the snapshot steps 0, stride, ..., steps_T.
std::vector<std::pair<std::size_t, double>> snapshot_rule(const MeanFieldSolution& mf, double T) {
  std::size_t sT;
  if (mf.snapshot_stride == 0) throw PreconditionError("ensembles not retained");
  if (!match_step(T, mf.h, mf.steps, sT) || sT % mf.snapshot_stride)
    throw PreconditionError("T is not on the snapshot grid");
  std::vector<std::pair<std::size_t, double>> rule;
  if (sT == 0) return rule;
  const double dt = static_cast<double>(mf.snapshot_stride) * mf.h;
  for (std::size_t s = 0; s <= sT; s += mf.snapshot_stride)
    rule.push_back({s, (s == 0 || s == sT) ? dt / 2 : dt});
  return rule;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

UpsilonResult upsilon(const MeanFieldSolution& mf, const ModelSpec& m, std::size_t x,
                      std::size_t y, std::size_t z, double T, double growth) {
  if (x >= mf.Q() || y >= mf.Q() || z >= mf.Q()) throw PreconditionError("upsilon: node out of range");
  const std::size_t d = mf.dim;
  UpsilonResult r;
  double sup = 0;
  for (auto [s, wt] : snapshot_rule(mf, T)) {
    const double* ex = mf.ensemble(s, x);
    double ay = 0, az = 0;
    for (std::size_t k = 0; k < mf.M; ++k) {
      ay += norm(std::span<const double>(mf.ensemble(s, y) + k * d, d));
      az += norm(std::span<const double>(mf.ensemble(s, z) + k * d, d));
    }
    ay /= static_cast<double>(mf.M);
    az /= static_cast<double>(mf.M);
    double acc = 0, bacc = 0;
    for (std::size_t k = 0; k < mf.M; ++k) {
      std::span<const double> th(ex + k * d, d);
      acc += dot(gamma_avg(mf, m, th, y, s), gamma_avg(mf, m, th, z, s));
      double nt = norm(th);
      bacc += (1 + nt + ay) * (1 + nt + az);
    }
    r.value += wt * (acc / static_cast<double>(mf.M));
    sup = std::max(sup, bacc / static_cast<double>(mf.M));
  }
  r.bound = T * growth * growth * sup;
  return r;
}

EpsilonTerms epsilon_terms(const MeanFieldSolution& mf, const ModelSpec& m, const Kernel& W,
                           const PositionGrid& grid, double T) {
  const std::size_t n = grid.size(), Q = mf.Q(), d = mf.dim;
  if (grid.dim != 1 || mf.quad.dim != 1) throw PreconditionError("epsilon_terms: unit-interval grids only");
  std::vector<std::size_t> node(n);
  for (std::size_t i = 0; i < n; ++i) {
    node[i] = mf.nearest_node(grid.x(i));
    if (std::abs(mf.quad.x(node[i]) - grid.x(i)) > 1e-12)
      throw PreconditionError("epsilon_terms: grid positions must be quadrature nodes");
  }
  const auto rule = snapshot_rule(mf, T);
  EpsilonTerms out;
  std::vector<double> Gn(d), Gl(d), diff(d);
  std::vector<std::vector<double>> gam(Q);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t qi = node[i];
    const double xi = mf.quad.x(qi);
    double e1 = 0, e2 = 0, e3 = 0;
    for (auto [s, wt] : rule) {
      const double* ex = mf.ensemble(s, qi);
      double a1 = 0, a2 = 0, a3 = 0;
      for (std::size_t k = 0; k < mf.M; ++k) {
        std::span<const double> th(ex + k * d, d);
        for (std::size_t q = 0; q < Q; ++q) gam[q] = gamma_avg(mf, m, th, q, s);
        std::fill(Gn.begin(), Gn.end(), 0.0);
        std::fill(Gl.begin(), Gl.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
          double w = grid.weights[j] * W(xi, mf.quad.x(node[j]));
          for (std::size_t c = 0; c < d; ++c) Gn[c] += w * gam[node[j]][c];
        }
        for (std::size_t q = 0; q < Q; ++q) {
          double w = mf.quad.weights[q] * W(xi, mf.quad.x(q));
          for (std::size_t c = 0; c < d; ++c) Gl[c] += w * gam[q][c];
        }
        for (std::size_t c = 0; c < d; ++c) diff[c] = Gn[c] - Gl[c];
        a1 += dot(Gn, Gn) - dot(Gl, Gl);
        a2 += dot(diff, Gl);
        a3 += dot(Gl, diff);
      }
      const double inv = 1.0 / static_cast<double>(mf.M);
      e1 += wt * a1 * inv;
      e2 += wt * a2 * inv;
      e3 += wt * a3 * inv;
    }
    if (std::abs(e1) > out.e1 || i == 0) out.e1 = std::abs(e1), out.argmax1 = i;
    if (std::abs(e2) > out.e2 || i == 0) out.e2 = std::abs(e2), out.argmax2 = i;
    if (std::abs(e3) > out.e3 || i == 0) out.e3 = std::abs(e3), out.argmax3 = i;
  }
  return out;
}

PoolReport d_nt_estimate(const RandomGraph& g, const MicroKernel& mk, const MeanFieldSolution& mf,
                         const ModelSpec& m, const std::vector<Trajectory>& copies) {
  if (copies.empty()) throw PreconditionError("d_nt_estimate: no replicas");
  const std::size_t n = g.n, d = m.dim;
  for (const auto& c : copies)
    if (c.n != n || c.dim != d || c.positions.size() != n)
      throw PreconditionError("d_nt_estimate: copies do not match the graph");
  const auto& t0 = copies.front();
  std::vector<double> a(n * n, 0.0);
  std::vector<std::size_t> node(n);
  for (std::size_t k = 0; k < n; ++k) node[k] = mf.nearest_node(g.grid.x(k));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      if (k != i)
        a[i * n + k] = g.kappa[i] * ((g.edge(i, k) ? 1.0 : 0.0) - micro_prob(mk, g.grid.x(i), g.grid.x(k)));
  const bool sep = m.separable && mf.features == m.separable->features;
  const std::size_t F = sep ? mf.features : 0;
  const double dt = t0.h * static_cast<double>(t0.stride);
  std::vector<std::vector<double>> per(copies.size(), std::vector<double>(n, 0.0));
  std::vector<double> agg(F), I(d);
  for (std::size_t kk = 0; kk < t0.stored(); ++kk) {
    std::size_t s;
    if (!match_step(t0.time(kk), mf.h, mf.steps, s))
      throw PreconditionError("d_nt_estimate: copy times not on the mean-field grid");
    const double wt = (kk == 0 || kk + 1 == t0.stored()) ? dt / 2 : dt;
    if (t0.stored() == 1) break;
    for (std::size_t i = 0; i < n; ++i) {
      double wsum = 0;
      std::fill(agg.begin(), agg.end(), 0.0);
      if (sep)
        for (std::size_t k = 0; k < n; ++k) {
          double w = a[i * n + k];
          if (w == 0) continue;
          wsum += w;
          const double* f = mf.feature(s, node[k]);
          for (std::size_t c = 0; c < F; ++c) agg[c] += w * f[c];
        }
      for (std::size_t r = 0; r < copies.size(); ++r) {
        std::span<const double> th(copies[r].state(kk, i), d);
        std::fill(I.begin(), I.end(), 0.0);
        if (sep) {
          std::vector<double> ag(F);
          for (std::size_t c = 0; c < F; ++c) ag[c] = agg[c] / static_cast<double>(n);
          m.separable->combine(th, ag, wsum / static_cast<double>(n), I);
        } else {
          for (std::size_t k = 0; k < n; ++k) {
            double w = a[i * n + k];
            if (w == 0) continue;
            auto gk = gamma_avg(mf, m, th, node[k], s);
            for (std::size_t c = 0; c < d; ++c) I[c] += w * gk[c] / static_cast<double>(n);
          }
        }
        per[r][i] += wt * dot(I, I);
      }
    }
  }
  return pool(per);
}

namespace {

struct DictFn {
  std::function<double(double)> f;
  double norm = 1;      // upper bound of the Hoelder norm
  double lebesgue = 0;  // integral over [0,1]
};

std::vector<DictFn> holder_dictionary(double iota, std::size_t K) {
  if (!(iota > 0 && iota <= 1)) throw PreconditionError("d_holder: iota must lie in (0,1]");
  if (K < 2) throw PreconditionError("d_holder: dictionary needs at least 2 functions");
  std::vector<DictFn> out;
  const std::size_t pairs = std::max<std::size_t>(1, K / 4);
  for (std::size_t k = 1; k <= pairs; ++k) {
    const double w = 2 * M_PI * static_cast<double>(k);
    const double nrm = 1 + 2 * std::pow(M_PI * static_cast<double>(k), iota);
    out.push_back({[w](double x) { return std::sin(w * x); }, nrm, 0.0});
    out.push_back({[w](double x) { return std::cos(w * x); }, nrm, 0.0});
  }
  for (std::size_t level = 0; out.size() < K; ++level) {
    const std::size_t count = std::size_t{1} << level;
    const double r = 0.5 / static_cast<double>(count);
    for (std::size_t j = 0; j < count && out.size() < K; ++j) {
      const double c = (static_cast<double>(j) + 0.5) / static_cast<double>(count);
      out.push_back({[c, r](double x) { return std::max(0.0, 1 - std::abs(x - c) / r); },
                     1 + std::pow(r, -iota), r});
    }
  }
  return out;
}

double integrate_grid(const PositionGrid& g, const std::function<double(double)>& f) {
  double s = 0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g.weights[i] * f(g.x(i));
  return s;
}

}  // namespace

HolderReport d_holder(const PositionGrid& a, const PositionGrid& b, double iota, std::size_t K) {
  if (a.dim != 1 || b.dim != 1) throw PreconditionError("d_holder: unit-interval grids only");
  auto dict = holder_dictionary(iota, K);
  HolderReport r;
  r.dictionary = "trig+hat-" + std::to_string(K);
  for (std::size_t j = 0; j < dict.size(); ++j) {
    double v = std::abs(integrate_grid(a, dict[j].f) - integrate_grid(b, dict[j].f)) / dict[j].norm;
    if (v > r.value) r.value = v, r.argmax = j;
  }
  return r;
}

HolderReport d_holder_lebesgue(const PositionGrid& a, double iota, std::size_t K) {
  if (a.dim != 1) throw PreconditionError("d_holder: unit-interval grids only");
  auto dict = holder_dictionary(iota, K);
  HolderReport r;
  r.dictionary = "trig+hat-" + std::to_string(K);
  for (std::size_t j = 0; j < dict.size(); ++j) {
    double v = std::abs(integrate_grid(a, dict[j].f) - dict[j].lebesgue) / dict[j].norm;
    if (v > r.value) r.value = v, r.argmax = j;
  }
  return r;
}

double bennett_B(double u) {
  if (!(u > -1)) throw PreconditionError("bennett_B: u must exceed -1");
  if (std::abs(u) < 1e-2) {
    // sum_{k>=2} (-1)^k u^{k-2} / (k (k-1))
    double s = 0, p = 1;
    for (int k = 2; k <= 9; ++k, p *= -u) s += p / (k * (k - 1));
    return s;
  }
  return ((1 + u) * std::log1p(u) - u) / (u * u);
}

ConcentrationResult concentration_check(double kappa_n, double w_n, std::size_t n,
                                        const std::vector<double>& p, const std::vector<double>& v,
                                        std::size_t trials, std::uint64_t seed, int threads) {
  if (n < 2 || p.size() != n || v.size() != n)
    throw PreconditionError("concentration_check: p and v must have n >= 2 entries");
  if (!(kappa_n > 0) || !(w_n > 0 && w_n <= 1))
    throw PreconditionError("concentration_check: need kappa_n > 0 and w_n in (0,1]");
  for (std::size_t l = 0; l < n; ++l) {
    if (std::abs(v[l]) > 1) throw PreconditionError("concentration_check: |v_l| must be <= 1");
    if (p[l] < 0 || p[l] > w_n) throw PreconditionError("concentration_check: p_l must lie in [0, w_n]");
  }
  if (trials == 0) throw PreconditionError("concentration_check: trials must be positive");
  const double N = static_cast<double>(n), logn = std::log(N);
  ConcentrationResult r;
  r.trials = trials;
  r.epsilon = std::sqrt(32 * kappa_n * kappa_n * w_n * logn / N);
  r.bound = 2 * std::exp(-16 * logn * bennett_B(4 * std::sqrt(2.0) * std::sqrt(logn / (N * w_n))));
  std::vector<char> hit(trials, 0);
  parallel_for(trials, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) {
      double s = 0;
      for (std::size_t l = 0; l < n; ++l) {
        double u = keyed_uniform({seed, stream::trials, t, l}) < p[l] ? 1.0 : 0.0;
        s += (u - p[l]) * v[l];
      }
      hit[t] = std::abs(kappa_n / N * s) > r.epsilon;
    }
  });
  std::size_t count = 0;
  for (char h : hit) count += static_cast<std::size_t>(h);
  r.empirical_tail = static_cast<double>(count) / static_cast<double>(trials);
  r.pass = r.empirical_tail <= r.bound;
  return r;
}

double relative_entropy(double p, double q) {
  if (!(p >= 0 && p <= 1) || !(q > 0 && q < 1))
    throw PreconditionError("relative_entropy: need p in [0,1] and q in (0,1)");
  double h = 0;
  if (p > 0) h += p * std::log(p / q);
  if (p < 1) h += (1 - p) * std::log((1 - p) / (1 - q));
  return h;
}

EntropyReport entropy_bounds(double p, double q, double x, double v, double lambda, double nu,
                             double a) {
  if (!(x > 0) || !(v > 0)) throw PreconditionError("entropy_bounds: need x, v > 0");
  if (!(lambda >= 0) || !(nu > 0) || !(a > 0))
    throw PreconditionError("entropy_bounds: need lambda >= 0, nu > 0, a > 0");
  EntropyReport r;
  r.entropy = relative_entropy(p, q);
  r.lhs = relative_entropy((x + v) / (1 + v), v / (1 + v));
  r.rhs = x * x / (2 * v) * bennett_B(x / v);
  r.inequality_holds = r.lhs >= r.rhs * (1 - 1e-12);
  r.lower_tail_bound = std::exp(-lambda * lambda / (2 * nu));
  r.upper_tail_bound = std::exp(-lambda * lambda / (2 * (nu + a * lambda / 3)));
  return r;
}

ChungLuCheck chung_lu_check(const std::vector<double>& a, const std::vector<double>& p,
                            double lambda, std::size_t trials, std::uint64_t seed) {
  if (a.empty() || a.size() != p.size() || trials == 0)
    throw PreconditionError("chung_lu_check: need matching nonempty a, p and trials > 0");
  double mean = 0, nu = 0, amax = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0) || p[i] < 0 || p[i] > 1) throw PreconditionError("chung_lu_check: need a_i > 0, p_i in [0,1]");
    mean += a[i] * p[i];
    nu += a[i] * a[i] * p[i];
    amax = std::max(amax, a[i]);
  }
  ChungLuCheck r;
  r.lower_bound = std::exp(-lambda * lambda / (2 * nu));
  r.upper_bound = std::exp(-lambda * lambda / (2 * (nu + amax * lambda / 3)));
  std::size_t lo = 0, hi = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    double x = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (keyed_uniform({seed, stream::trials, t, i}) < p[i]) x += a[i];
    lo += x - mean < -lambda;
    hi += x - mean > lambda;
  }
  const double T = static_cast<double>(trials);
  r.lower_tail = static_cast<double>(lo) / T;
  r.upper_tail = static_cast<double>(hi) / T;
  auto slack = [T](double b) { return 3 * std::sqrt(std::max(b * (1 - b), 1 / T) / T); };
  r.pass = r.lower_tail <= r.lower_bound + slack(r.lower_bound) &&
           r.upper_tail <= r.upper_bound + slack(r.upper_bound);
  return r;
}

MomentReport moment_check(const std::vector<Trajectory>& runs, int two_k) {
  if (runs.empty() || two_k < 1) throw PreconditionError("moment_check: need replicas and 2k >= 1");
  const std::size_t n = runs.front().n;
  std::vector<std::vector<double>> per(runs.size(), std::vector<double>(n, 0.0));
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& tr = runs[r];
    if (tr.n != n) throw PreconditionError("moment_check: replicas differ in size");
    for (std::size_t k = 0; k < tr.stored(); ++k)
      for (std::size_t i = 0; i < n; ++i)
        per[r][i] = std::max(per[r][i], std::pow(norm(std::span<const double>(tr.state(k, i), tr.dim)), two_k));
  }
  auto p = pool(per);
  return {p.max, p.max_stderr, p.argmax};
}

double moment_growth(const MomentReport& coarse, const MomentReport& fine) {
  if (coarse.value == 0) return fine.value == 0 ? 0.0 : INFINITY;
  return fine.value / coarse.value - 1;
}

}  // namespace wrgsim
