#include "wrgsim/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "wrgsim/errors.hpp"
#include "wrgsim/parallel.hpp"
#include "wrgsim/rng.hpp"

namespace wrgsim {

PositionGrid make_positions(PositionScheme scheme, std::size_t n, int dim,
                            std::optional<std::uint64_t> seed, ReferenceLaw law) {
  if (n == 0) throw PreconditionError("make_positions: n must be >= 1");
  if (dim < 1) throw PreconditionError("make_positions: dimension must be >= 1");
  PositionGrid g;
  g.scheme = scheme;
  g.law = law;
  g.dim = dim;
  g.coords.resize(n * dim);
  g.weights.assign(n, 1.0 / static_cast<double>(n));
  switch (scheme) {
    case PositionScheme::deterministic:
      if (dim != 1 || law != ReferenceLaw::uniform_unit)
        throw PreconditionError("deterministic grid exists only on the unit interval");
      for (std::size_t i = 0; i < n; ++i)
        g.coords[i] = static_cast<double>(i + 1) / static_cast<double>(n);
      break;
    case PositionScheme::midpoint:
      if (dim != 1 || law != ReferenceLaw::uniform_unit)
        throw PreconditionError("midpoint grid exists only on the unit interval");
      for (std::size_t i = 0; i < n; ++i)
        g.coords[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      break;
    case PositionScheme::iid:
      if (!seed) throw PreconditionError("iid positions require a seed");
      g.seed = seed;
      for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < dim; ++c) {
          auto key = {*seed, stream::positions, static_cast<std::uint64_t>(i),
                      static_cast<std::uint64_t>(c)};
          g.coords[i * dim + c] =
              law == ReferenceLaw::gaussian ? keyed_normal(key) : keyed_uniform(key);
        }
      break;
    case PositionScheme::custom:
      throw PreconditionError("use custom_grid for explicit positions");
  }
  return g;
}

PositionGrid midpoint_grid(std::size_t Q) { return make_positions(PositionScheme::midpoint, Q); }

PositionGrid custom_grid(std::vector<double> coords, std::vector<double> weights, int dim) {
  if (weights.empty() || coords.size() != weights.size() * dim)
    throw PreconditionError("custom_grid: coordinate/weight sizes disagree");
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1) > 1e-12) throw PreconditionError("custom_grid: weights must sum to 1");
  PositionGrid g;
  g.scheme = PositionScheme::custom;
  g.dim = dim;
  g.coords = std::move(coords);
  g.weights = std::move(weights);
  return g;
}

double ks_uniform(const PositionGrid& g) {
  std::vector<double> xs(g.size());
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = g.x(i);
  std::sort(xs.begin(), xs.end());
  double n = static_cast<double>(xs.size()), d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    d = std::max({d, (i + 1) / n - xs[i], xs[i] - i / n});
  return d;
}

Kernel::Kernel(std::string name, Scalar f, KernelInfo info)
    : name_(std::move(name)), dim_(1), scalar_(std::move(f)), info_(std::move(info)) {}

Kernel::Kernel(std::string name, int dim, Vector f, KernelInfo info)
    : name_(std::move(name)), dim_(dim), vector_(std::move(f)), info_(std::move(info)) {
  if (dim == 1) {
    auto v = vector_;
    scalar_ = [v](double x, double y) {
      return v(std::span<const double>(&x, 1), std::span<const double>(&y, 1));
    };
  } else {
    scalar_ = [](double, double) -> double {
      throw PreconditionError("scalar evaluation of a multi-dimensional kernel");
    };
  }
}

double Kernel::operator()(std::span<const double> x, std::span<const double> y) const {
  if (vector_) return vector_(x, y);
  return scalar_(x[0], y[0]);
}

namespace {
double check_value(double v, const std::string& name) {
  if (!std::isfinite(v) || v < 0)
    throw KernelDomainError("kernel " + name + " returned " + std::to_string(v));
  return v;
}

double param(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

double alpha_param(const Params& p) {
  double a = param(p, "alpha", 0.25);
  if (!(a >= 0 && a < 0.5)) throw PreconditionError("alpha must lie in [0, 1/2)");
  return a;
}
}  // namespace

double Kernel::checked(double x, double y) const { return check_value(scalar_(x, y), name_); }

double Kernel::checked(std::span<const double> x, std::span<const double> y) const {
  return check_value((*this)(x, y), name_);
}

Kernel builtin_kernel(const std::string& name, const Params& params, const std::string& base) {
  if (name == "er" || name == "constant") {
    double p = param(params, "p", 1.0);
    if (!(p >= 0) || !std::isfinite(p)) throw PreconditionError("constant kernel needs p >= 0");
    KernelInfo info;
    info.sup_bound = p;
    info.row_invariant = true;
    info.holder_constant = 0;
    info.holder_exponent = 1;
    info.row_integral = [p](double) { return p; };
    return Kernel(name, [p](double, double) { return p; }, info);
  }
  if (name == "one-minus-max") {
    KernelInfo info;
    info.sup_bound = 1;
    info.holder_constant = 1;
    info.holder_exponent = 1;
    info.row_integral = [](double x) { return 0.5 * (1 - x * x); };
    return Kernel(name, [](double x, double y) { return 1 - std::max(x, y); }, info);
  }
  if (name == "one-minus-xy") {
    KernelInfo info;
    info.sup_bound = 1;
    info.holder_constant = 0.5;
    info.holder_exponent = 1;
    info.row_integral = [](double x) { return 1 - 0.5 * x; };
    return Kernel(name, [](double x, double y) { return 1 - x * y; }, info);
  }
  if (name == "indicator") {
    double R = param(params, "R", 0.3);
    if (!(R > 0 && R <= 1)) throw PreconditionError("indicator radius must lie in (0, 1]");
    KernelInfo info;
    info.sup_bound = 1;
    info.holder_constant = 2;
    info.holder_exponent = 1;
    info.row_integral = [R](double x) { return std::min(1.0, x + R) - std::max(0.0, x - R); };
    return Kernel(name, [R](double x, double y) { return std::abs(x - y) <= R ? 1.0 : 0.0; },
                  info);
  }
  if (name == "abs-power") {
    double a = alpha_param(params);
    KernelInfo info;
    info.singular_exponent = a;
    info.row_integral = [a](double x) {
      return (std::pow(x, 1 - a) + std::pow(1 - x, 1 - a)) / (1 - a);
    };
    return Kernel(name, [a](double x, double y) { return x == y ? 0.0 : std::pow(std::abs(x - y), -a); },
                  info);
  }
  if (name == "power-y") {
    double a = alpha_param(params);
    KernelInfo info;
    info.singular_exponent = a;
    info.row_invariant = true;
    info.row_integral = [](double) { return 1.0; };
    return Kernel(name, [a](double, double y) { return (1 - a) * std::pow(y, -a); }, info);
  }
  if (name == "power-xy") {
    double a = alpha_param(params);
    KernelInfo info;
    info.singular_exponent = a;
    info.row_integral = [a](double x) { return (1 - a) * std::pow(x, -a); };
    return Kernel(name,
                  [a](double x, double y) { return (1 - a) * (1 - a) * std::pow(x * y, -a); },
                  info);
  }
  if (name == "normalized") {
    if (base.empty() || base == "normalized")
      throw PreconditionError("normalized kernel needs a base kernel name");
    return normalized_kernel(builtin_kernel(base, params));
  }
  throw PreconditionError("unknown kernel: " + name);
}

Kernel normalized_kernel(const Kernel& base) {
  KernelInfo info;
  info.singular_exponent = base.info().singular_exponent;
  info.row_integral = [](double) { return 1.0; };
  std::function<double(double)> row = base.info().row_integral;
  if (!row) {
    row = [base](double x) {
      QuadOptions opt;
      opt.rel_tol = 1e-10;
      auto f = [&](double y) { return base(x, y); };
      return integrate(f, 0, x).value + integrate(f, x, 1).value;
    };
  }
  // power-xy normalizes to (1-a) y^{-a}
  if (base.name() == "power-xy") info.row_invariant = true;
  return Kernel("normalized-" + base.name(), [base, row](double x, double y) {
    double z = row(x);
    if (!(z > 0)) throw KernelDomainError("normalized kernel: zero row integral");
    return base(x, y) / z;
  }, info);
}

Kernel step_function_kernel(std::string name, std::size_t n, std::vector<double> values) {
  if (values.size() != n * n) throw PreconditionError("step kernel needs n*n values");
  auto vals = std::make_shared<const std::vector<double>>(std::move(values));
  auto cell = [n](double x) {
    auto i = static_cast<std::size_t>(std::floor(x * static_cast<double>(n)));
    return std::min(i, n - 1);
  };
  KernelInfo info;
  return Kernel(std::move(name),
                [vals, n, cell](double x, double y) { return (*vals)[cell(x) * n + cell(y)]; },
                info);
}

double rho_from_rule(std::size_t n, double delta) {
  if (!(delta > 0 && delta < 0.5)) throw PreconditionError("rho rule needs delta in (0, 1/2)");
  return std::pow(static_cast<double>(n), -delta);
}

namespace {
double clamp_prob(double rho, double P) {
  double v = rho * std::min(1.0 / rho, P);
  return std::min(1.0, std::max(0.0, v));
}
void check_rho(double rho) {
  if (!(rho > 0 && rho <= 1)) throw PreconditionError("rho must lie in (0, 1]");
}
}  // namespace

double micro_prob(const MicroKernel& mk, double x, double y) {
  check_rho(mk.rho);
  if (x == y) return 0;
  return clamp_prob(mk.rho, mk.generator.checked(x, y));
}

double micro_prob(const MicroKernel& mk, std::span<const double> x, std::span<const double> y) {
  check_rho(mk.rho);
  if (std::equal(x.begin(), x.end(), y.begin(), y.end())) return 0;
  return clamp_prob(mk.rho, mk.generator.checked(x, y));
}

std::vector<double> Dilution::kappas() const {
  std::vector<double> k(factor.size());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = kappa(i);
  return k;
}

Dilution make_dilution(DilutionKind kind, const MicroKernel& mk, const PositionGrid& grid,
                       int threads) {
  check_rho(mk.rho);
  const std::size_t n = grid.size();
  if (n == 0) throw PreconditionError("dilution: empty grid");
  Dilution d;
  d.kind = kind;
  d.rho = mk.rho;
  d.factor.assign(n, 1.0);
  std::vector<double> row_max(n, 0.0), row_sum(n, 0.0);
  const double cap = 1.0 / mk.rho;
  parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      double s = 0, mx = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double P = mk.generator.checked(grid.point(i), grid.point(j));
        double m = std::min(cap, P);
        s += m;
        mx = std::max(mx, clamp_prob(mk.rho, P));
      }
      row_sum[i] = s;
      row_max[i] = mx;
    }
  });
  if (kind == DilutionKind::degree_normalized) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(row_sum[i] > 0))
        throw KernelDomainError("degree-normalized dilution: node " + std::to_string(i) +
                                " has zero expected degree");
      d.factor[i] = static_cast<double>(n) / row_sum[i];
    }
  }
  d.kappa_cap = 0;
  for (std::size_t i = 0; i < n; ++i) d.kappa_cap = std::max(d.kappa_cap, d.kappa(i));
  d.w_cap = n > 1 ? *std::max_element(row_max.begin(), row_max.end()) : 1.0;
  d.kappa_ge_one = true;
  for (std::size_t i = 0; i < n; ++i)
    if (d.kappa(i) < 1) d.kappa_ge_one = false;
  d.cap_consistent = 1.0 / d.kappa_cap <= d.w_cap && d.w_cap <= 1.0;
  return d;
}

double delta_n(const Kernel& W, const MicroKernel& mk, const Dilution& dil,
               const PositionGrid& grid, int threads) {
  const std::size_t n = grid.size();
  if (dil.size() != n) throw PreconditionError("delta_n: dilution and grid sizes differ");
  const double cap = 1.0 / mk.rho;
  std::vector<double> rows(n, 0.0);
  parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      double s = 0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        double P = mk.generator.checked(grid.point(i), grid.point(k));
        double diluted = dil.factor[i] * std::min(cap, P);
        s += std::abs(diluted - W.checked(grid.point(i), grid.point(k)));
      }
      rows[i] = s / static_cast<double>(n);
    }
  });
  return *std::max_element(rows.begin(), rows.end());
}

SnResult s_n(const Kernel& W, const PositionGrid& grid, const QuadOptions& opt, int threads) {
  if (grid.scheme != PositionScheme::deterministic)
    throw PreconditionError("s_n needs the deterministic unit-interval grid");
  const std::size_t n = grid.size();
  const std::size_t rows = W.info().row_invariant ? 1 : n;
  std::vector<double> vals(rows, 0.0);
  std::vector<double> failed(rows, -1.0);
  parallel_for(rows, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      double xi = grid.x(i), s = 0;
      for (std::size_t k = 0; k < n; ++k) {
        double lo = k == 0 ? 0.0 : grid.x(k - 1), hi = grid.x(k);
        double anchor = W(xi, hi);
        auto r = integrate([&](double y) { return std::abs(anchor - W(xi, y)); }, lo, hi, opt);
        if (!r.converged && failed[i] < 0) failed[i] = lo;
        s += r.value;
      }
      vals[i] = s;
    }
  });
  SnResult out;
  auto it = std::max_element(vals.begin(), vals.end());
  out.value = *it;
  out.argmax_row = static_cast<std::size_t>(it - vals.begin());
  for (double f : failed)
    if (f >= 0) {
      out.converged = false;
      out.failed_panel = f;
      break;
    }
  return out;
}

namespace {
// Integral over y in [0,1] split at the kink/singularity candidate y = x.
QuadResult row_integral_split(const std::function<double(double)>& f, double x,
                              const QuadOptions& opt) {
  QuadResult a = integrate(f, 0, x, opt), b = integrate(f, x, 1, opt);
  QuadResult r;
  r.value = a.value + b.value;
  r.error = a.error + b.error;
  r.evaluations = a.evaluations + b.evaluations;
  r.converged = a.converged && b.converged;
  return r;
}
}  // namespace

namespace {
// A convergent integrable singularity may stop at the depth cap with a small leftover error;
// a divergent one keeps an error comparable to the value.
bool settled(const QuadResult& r) {
  return std::isfinite(r.value) && (r.converged || r.error <= 1e-4 * (1 + std::abs(r.value)));
}
}  // namespace

RowMoments moment_Wr(const Kernel& W, int r, const std::vector<double>& xs_in,
                     const QuadOptions& opt) {
  if (r < 1) throw PreconditionError("moment_Wr: r must be >= 1");
  std::vector<double> xs = xs_in;
  if (xs.empty())
    for (int j = 0; j < 64; ++j) xs.push_back((j + 0.5) / 64.0);
  RowMoments out;
  out.inf_moment_1 = INFINITY;
  out.divergent = W.info().singular_exponent * r >= 1;
  for (double x : xs) {
    auto m1 = row_integral_split([&](double y) { return W(x, y); }, x, opt);
    out.inf_moment_1 = std::min(out.inf_moment_1, m1.value);
    if (!out.divergent) {
      auto mr = row_integral_split([&](double y) { return std::pow(W(x, y), r); }, x, opt);
      if (!settled(mr)) out.divergent = true;
      out.sup_moment_r = std::max(out.sup_moment_r, mr.value);
    }
  }
  if (out.divergent) out.sup_moment_r = INFINITY;
  out.violates_bounded_moment = out.divergent;
  out.violates_nondegenerate = !(out.inf_moment_1 > 0);
  return out;
}

LChiResult lchi_norm(const Kernel& P, double chi, const QuadOptions& opt) {
  if (!(chi > 0)) throw PreconditionError("lchi_norm: chi must be positive");
  LChiResult out;
  if (P.info().singular_exponent * chi >= 1) {
    out.divergent = true;
    out.value = INFINITY;
    return out;
  }
  auto outer = [&](double x) {
    return row_integral_split([&](double y) { return std::pow(P(x, y), chi); }, x, opt).value;
  };
  auto r = integrate(outer, 0, 1, opt);
  out.value = std::pow(r.value, 1.0 / chi);
  out.divergent = !settled(r) || !std::isfinite(out.value);
  return out;
}

namespace {
double grid_residual(const Kernel& W, std::size_t n, int power, int threads) {
  if (n == 0) throw PreconditionError("grid residual: n must be >= 1");
  const double h = 1.0 / static_cast<double>(n);
  QuadOptions opt;
  opt.rel_tol = 1e-8;
  opt.abs_tol = 1e-11 * h * h;
  opt.max_depth = 40;
  std::vector<double> rows(n, 0.0);
  parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      double s = 0;
      double xi = (i + 1) * h;
      for (std::size_t j = 0; j < n; ++j) {
        double yj = (j + 1) * h;
        double anchor = W(xi, yj);
        auto f = [&](double x, double y) {
          double d = std::abs(anchor - W(x, y));
          return power == 2 ? d * d : d;
        };
        s += integrate2d(f, i * h, xi, j * h, yj, opt).value;
      }
      rows[i] = s;
    }
  });
  return std::accumulate(rows.begin(), rows.end(), 0.0);
}
}  // namespace

double grid_l2_residual(const Kernel& W, std::size_t n, int threads) {
  return grid_residual(W, n, 2, threads);
}

double grid_l1_residual(const Kernel& W, std::size_t n, int threads) {
  return grid_residual(W, n, 1, threads);
}

double holder_row_distance(const Kernel& W, double x, double y, const QuadOptions& opt) {
  if (x == y) return 0;
  double lo = std::min(x, y), hi = std::max(x, y);
  auto f = [&](double z) { return std::abs(W(x, z) - W(y, z)); };
  return integrate(f, 0, lo, opt).value + integrate(f, lo, hi, opt).value +
         integrate(f, hi, 1, opt).value;
}

double riemann_offset(std::size_t n, double alpha) {
  long double s = 0;
  for (std::size_t k = n; k >= 1; --k) s += std::pow(static_cast<long double>(k), -alpha);
  return static_cast<double>(s - std::pow(static_cast<long double>(n), 1 - alpha) / (1 - alpha));
}

}  // namespace wrgsim
