#include "wrgsim/cut.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "wrgsim/errors.hpp"
#include "wrgsim/format.hpp"
#include "wrgsim/parallel.hpp"
#include "wrgsim/quadrature.hpp"
#include "wrgsim/rng.hpp"

namespace wrgsim {

bool StepKernel::uniform() const {
  const double l = 1.0 / static_cast<double>(n);
  return std::all_of(lengths.begin(), lengths.end(), [l](double x) { return x == l; });
}

StepKernel make_step_kernel(std::vector<double> values, std::vector<double> lengths) {
  const std::size_t n = lengths.size();
  if (n == 0 || values.size() != n * n) throw PreconditionError("step kernel: need n lengths and n*n values");
  double total = 0;
  for (double l : lengths) {
    if (!(l >= 0)) throw PreconditionError("step kernel: lengths must be nonnegative");
    total += l;
  }
  if (std::abs(total - 1) > 1e-12) throw PreconditionError("step kernel: lengths must sum to 1");
  for (double v : values)
    if (!std::isfinite(v)) throw PreconditionError("step kernel: values must be finite");
  return {n, std::move(values), std::move(lengths)};
}

StepKernel uniform_step_kernel(std::size_t n, std::vector<double> values) {
  if (n == 0) throw PreconditionError("step kernel: n must be positive");
  return make_step_kernel(std::move(values), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

StepKernel difference(const StepKernel& a, const StepKernel& b) {
  if (a.n != b.n || a.lengths != b.lengths) throw PreconditionError("step kernels use different cells");
  StepKernel d = a;
  for (std::size_t k = 0; k < d.values.size(); ++k) d.values[k] -= b.values[k];
  return d;
}

CutMode parse_cut_mode(const std::string& s) {
  if (s == "exact") return CutMode::exact;
  if (s == "heuristic") return CutMode::heuristic;
  throw PreconditionError("cut mode must be exact or heuristic, got " + s);
}

const char* to_string(CutMode m) { return m == CutMode::exact ? "exact" : "heuristic"; }

namespace {

// Weighted matrix: l_i l_j A_ij, or A_ij divided by n twice at the end for uniform cells so
// that integer-valued tables are summed exactly.
struct Weighted {
  std::size_t n;
  std::vector<double> a;
  bool uniform;
  double finish(double v) const {
    const double d = static_cast<double>(n);
    return uniform ? v / d / d : v;
  }
};

Weighted weighted(const StepKernel& A) {
  Weighted w{A.n, A.values, A.uniform()};
  if (!w.uniform) {
    for (std::size_t i = 0; i < A.n; ++i)
      for (std::size_t j = 0; j < A.n; ++j) w.a[i * A.n + j] *= A.lengths[i] * A.lengths[j];
  }
  return w;
}

void check_exact(const StepKernel& A) {
  if (A.n > kMaxExactCut)
    throw PreconditionError("exact cut metrics need n <= " + std::to_string(kMaxExactCut) +
                            ", got n = " + std::to_string(A.n) + "; use heuristic mode");
}

// Enumerates row subsets of the low bits by Gray code for every fixed high-bit prefix and
// reports max over subsets of score(column sums).
template <class Score>
double enumerate_rows(const Weighted& w, int threads, Score&& score) {
  const std::size_t n = w.n;
  const std::size_t high = std::min<std::size_t>(n, 6);
  const std::size_t low = n - high;
  const std::size_t blocks = std::size_t{1} << high;
  std::vector<double> best(blocks, 0.0);
  parallel_for(blocks, threads, [&](std::size_t b, std::size_t e) {
    std::vector<double> c(n);
    for (std::size_t blk = b; blk < e; ++blk) {
      // Row r is in the subset iff bit r is set; the high rows come from blk.
      std::fill(c.begin(), c.end(), 0.0);
      for (std::size_t h = 0; h < high; ++h)
        if ((blk >> h) & 1u) {
          const std::size_t r = low + h;
          for (std::size_t j = 0; j < n; ++j) c[j] += w.a[r * n + j];
        }
      double m = score(c);
      const std::uint64_t total = std::uint64_t{1} << low;
      std::uint64_t gray = 0;
      for (std::uint64_t k = 1; k < total; ++k) {
        const std::uint64_t next = k ^ (k >> 1);
        const std::uint64_t flip = next ^ gray;
        const std::size_t r = static_cast<std::size_t>(__builtin_ctzll(flip));
        const double sgn = (next & flip) ? 1.0 : -1.0;
        for (std::size_t j = 0; j < n; ++j) c[j] += sgn * w.a[r * n + j];
        gray = next;
        m = std::max(m, score(c));
      }
      best[blk] = m;
    }
  });
  return *std::max_element(best.begin(), best.end());
}

double cut_score(const std::vector<double>& c) {
  double pos = 0, neg = 0;
  for (double v : c) (v > 0 ? pos : neg) += v;
  return std::max(pos, -neg);
}

// Alternating best responses for sign * sum_{S x T}, until the value stops improving.
double cut_restart(const Weighted& w, double sign, std::uint64_t seed, std::size_t restart) {
  const std::size_t n = w.n;
  std::vector<char> S(n), T(n);
  std::vector<double> c(n), r(n);
  for (std::size_t i = 0; i < n; ++i) S[i] = keyed_uniform({seed, stream::heuristic, restart, i}) < 0.5;
  double cur = -1;  // every value is >= 0
  for (int round = 0; round < 1000; ++round) {
    std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (S[i])
        for (std::size_t j = 0; j < n; ++j) c[j] += w.a[i * n + j];
    double v = 0;
    for (std::size_t j = 0; j < n; ++j) {
      T[j] = sign * c[j] > 0;
      if (T[j]) v += sign * c[j];
    }
    if (!(v > cur + 1e-15 * (1 + cur))) break;
    cur = v;
    std::fill(r.begin(), r.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (T[j]) r[i] += w.a[i * n + j];
    for (std::size_t i = 0; i < n; ++i) S[i] = sign * r[i] > 0;
  }
  return std::max(cur, 0.0);
}

double heuristic_cut(const Weighted& w, const CutOptions& opt) {
  const std::size_t R = std::max<std::size_t>(1, opt.restarts);
  std::vector<double> best(2 * R, 0.0);
  parallel_for(2 * R, opt.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) best[k] = cut_restart(w, k < R ? 1.0 : -1.0, opt.seed, k);
  });
  return std::max(0.0, *std::max_element(best.begin(), best.end()));
}

double io_restart(const Weighted& w, std::uint64_t seed, std::size_t restart) {
  const std::size_t n = w.n;
  std::vector<double> f(n), g(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = keyed_uniform({seed, stream::heuristic, restart, i}) < 0.5 ? 1 : -1;
  double cur = -1;
  for (int round = 0; round < 1000; ++round) {
    double v = 0;
    for (std::size_t j = 0; j < n; ++j) {
      double r = 0;
      for (std::size_t i = 0; i < n; ++i) r += w.a[i * n + j] * f[i];
      g[j] = r >= 0 ? 1 : -1;
      v += std::abs(r);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0;
      for (std::size_t j = 0; j < n; ++j) r += w.a[i * n + j] * g[j];
      f[i] = r >= 0 ? 1 : -1;
    }
    if (v <= cur + 1e-15 * (1 + cur)) break;
    cur = v;
  }
  return cur;
}

}  // namespace

CutResult cut_norm(const StepKernel& A, const CutOptions& opt) {
  const auto w = weighted(A);
  CutResult r;
  r.mode = opt.mode;
  if (opt.mode == CutMode::exact) {
    check_exact(A);
    r.value = w.finish(enumerate_rows(w, opt.threads, cut_score));
  } else {
    r.value = w.finish(heuristic_cut(w, opt));
    r.lower_bound = true;
  }
  return r;
}

CutResult infty_one_norm(const StepKernel& A, const CutOptions& opt) {
  const auto w = weighted(A);
  CutResult r;
  r.mode = opt.mode;
  if (opt.mode == CutMode::exact) {
    check_exact(A);
    // Sign vectors f as subsets: f_i = +1 on the subset, -1 off it. Start from all -1.
    Weighted shifted = w;
    for (double& v : shifted.a) v *= 2;
    std::vector<double> base(w.n, 0.0);
    for (std::size_t i = 0; i < w.n; ++i)
      for (std::size_t j = 0; j < w.n; ++j) base[j] -= w.a[i * w.n + j];
    // Column sums for subset S under f: base + 2 * sum_{i in S} a_ij.
    r.value = w.finish(enumerate_rows(shifted, opt.threads, [&](const std::vector<double>& c) {
      double s = 0;
      for (std::size_t j = 0; j < c.size(); ++j) s += std::abs(base[j] + c[j]);
      return s;
    }));
  } else {
    const std::size_t R = std::max<std::size_t>(1, opt.restarts);
    std::vector<double> best(R, 0.0);
    parallel_for(R, opt.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) best[k] = io_restart(w, opt.seed, k);
    });
    r.value = w.finish(*std::max_element(best.begin(), best.end()));
    r.lower_bound = true;
  }
  return r;
}

double d1_distance(const StepKernel& a, const StepKernel& b) {
  const auto d = difference(a, b);
  double s = 0;
  for (std::size_t i = 0; i < d.n; ++i)
    for (std::size_t j = 0; j < d.n; ++j) s += d.lengths[i] * d.lengths[j] * std::abs(d.at(i, j));
  return s;
}

double d1_distance(const Kernel& a, const Kernel& b, std::size_t resolution, int gauss) {
  if (resolution == 0) throw PreconditionError("d1_distance: resolution must be positive");
  const double h = 1.0 / static_cast<double>(resolution);
  double s = 0;
  for (std::size_t i = 0; i < resolution; ++i)
    for (std::size_t j = 0; j < resolution; ++j) {
      const double x0 = static_cast<double>(i) * h, y0 = static_cast<double>(j) * h;
      s += h * h * cell_average([&](double x, double y) { return std::abs(a(x, y) - b(x, y)); },
                                x0, x0 + h, y0, y0 + h, gauss);
    }
  return s;
}

StepKernel average_kernel(const Kernel& W, std::size_t n, int gauss, int threads) {
  if (n == 0) throw PreconditionError("average_kernel: n must be positive");
  std::vector<double> v(n * n);
  const double h = 1.0 / static_cast<double>(n);
  parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double x0 = static_cast<double>(i) * h, y0 = static_cast<double>(j) * h;
        v[i * n + j] = cell_average([&](double x, double y) { return W.checked(x, y); }, x0, x0 + h,
                                    y0, y0 + h, gauss);
      }
  });
  return uniform_step_kernel(n, std::move(v));
}

StepKernel graph_step_kernel(const RenormalizedGraph& g) { return uniform_step_kernel(g.n, g.weights); }

CutResult cut_distance_graph_kernel(const RenormalizedGraph& g, const Kernel& W,
                                    const CutOptions& opt, int gauss) {
  return cut_norm(difference(graph_step_kernel(g), average_kernel(W, g.n, gauss, opt.threads)), opt);
}

AuxReport aux_graphs(const RandomGraph& g, const MicroKernel& mk, const Kernel& W,
                     const CutOptions& opt, int gauss) {
  const std::size_t n = g.n;
  if (g.grid.dim != 1) throw PreconditionError("aux_graphs: unit-interval grid required");
  std::vector<double> h1(n * n, 0.0), h2(n * n, 0.0);
  AuxReport r;
  r.mode = opt.mode;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      h1[i * n + j] = g.kappa[i] * micro_prob(mk, g.grid.x(i), g.grid.x(j));
      h2[i * n + j] = W.checked(g.grid.x(i), g.grid.x(j));
      row += std::abs(h1[i * n + j] - h2[i * n + j]);
    }
    r.delta = std::max(r.delta, row / static_cast<double>(n));
  }
  r.H1 = uniform_step_kernel(n, std::move(h1));
  r.H2 = uniform_step_kernel(n, std::move(h2));
  r.graph_h1 = cut_norm(difference(graph_step_kernel(renormalize(g)), r.H1), opt).value;
  r.h1_h2 = cut_norm(difference(r.H1, r.H2), opt).value;
  r.h2_w = cut_norm(difference(r.H2, average_kernel(W, n, gauss, opt.threads)), opt).value;
  r.middle_within_delta = r.h1_h2 <= r.delta * (1 + 1e-12);
  return r;
}

void write_step_kernel_csv(const StepKernel& k, std::ostream& os) {
  for (std::size_t j = 0; j < k.n; ++j) os << (j ? "," : "") << format_double(k.lengths[j]);
  os << '\n';
  for (std::size_t i = 0; i < k.n; ++i) {
    for (std::size_t j = 0; j < k.n; ++j) os << (j ? "," : "") << format_double(k.at(i, j));
    os << '\n';
  }
}

StepKernel read_step_kernel_csv(std::istream& is) {
  auto parse_row = [](const std::string& line) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        out.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw PreconditionError("step kernel csv: bad number '" + cell + "'");
      }
    }
    return out;
  };
  std::string line;
  std::vector<double> lengths;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#') {
      lengths = parse_row(line);
      break;
    }
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto row = parse_row(line);
    if (row.size() != lengths.size()) throw PreconditionError("step kernel csv: ragged row");
    values.insert(values.end(), row.begin(), row.end());
  }
  return make_step_kernel(std::move(values), std::move(lengths));
}

}  // namespace wrgsim
