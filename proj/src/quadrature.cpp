#include "wrgsim/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace wrgsim {

namespace {

struct Rule {
  std::vector<double> x, w;
};

// Golub-Welsch style Newton iteration on Legendre polynomials.
Rule legendre_rule(int m) {
  Rule r;
  r.x.resize(m);
  r.w.resize(m);
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= m; ++k) {
        double p2 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (z * p1 - p0) / (z * z - 1);
      double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1, p1 = z;
    for (int k = 2; k <= m; ++k) {
      double p2 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = m * (z * p1 - p0) / (z * z - 1);
    r.x[i] = z;
    r.w[i] = 2.0 / ((1 - z * z) * dp * dp);
  }
  return r;
}

const Rule& rule(int m) {
  static const std::array<Rule, 9> rules = [] {
    std::array<Rule, 9> out;
    out[1] = Rule{{0.0}, {2.0}};
    for (int m = 2; m <= 8; ++m) out[m] = legendre_rule(m);
    return out;
  }();
  if (m < 1 || m > 8) throw std::invalid_argument("gauss rule order must be in 1..8");
  return rules[m];
}

double panel(const std::function<double(double)>& f, double a, double b) {
  const Rule& r = rule(8);
  double c = 0.5 * (a + b), h = 0.5 * (b - a), s = 0;
  for (int i = 0; i < 8; ++i) s += r.w[i] * f(c + h * r.x[i]);
  return s * h;
}

struct Segment {
  double a, b, whole, left, right;
  int depth;
  double value() const { return left + right; }
  double error() const { return std::abs(left + right - whole); }
};

Segment make_segment(const std::function<double(double)>& f, double a, double b, double whole, int depth) {
  double m = 0.5 * (a + b);
  return {a, b, whole, panel(f, a, m), panel(f, m, b), depth};
}

}  // namespace

const std::array<double, 8>& gl8_nodes() {
  static const std::array<double, 8> n = [] {
    std::array<double, 8> a{};
    for (int i = 0; i < 8; ++i) a[i] = rule(8).x[i];
    return a;
  }();
  return n;
}

const std::array<double, 8>& gl8_weights() {
  static const std::array<double, 8> n = [] {
    std::array<double, 8> a{};
    for (int i = 0; i < 8; ++i) a[i] = rule(8).w[i];
    return a;
  }();
  return n;
}

double gauss_fixed(const std::function<double(double)>& f, double a, double b, int m) {
  const Rule& r = rule(m);
  double c = 0.5 * (a + b), h = 0.5 * (b - a), s = 0;
  for (int i = 0; i < m; ++i) s += r.w[i] * f(c + h * r.x[i]);
  return s * h;
}

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadOptions& opt) {
  QuadResult out;
  if (a == b) return out;
  // Global refinement: split the panel with the largest error estimate until the summed
  // estimate meets the tolerance. Copes with integrable endpoint singularities, where
  // per-panel tolerance halving never terminates.
  std::vector<Segment> segs{make_segment(f, a, b, panel(f, a, b), 0)};
  out.evaluations = 24;
  auto worse = [](const Segment& x, const Segment& y) { return x.error() < y.error(); };
  std::vector<Segment> done;
  const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(segs[0].value()));
  double total_err = segs[0].error(), capped_err = 0;
  const long max_evals = 64L * 1024;
  while (!segs.empty() && total_err > tol && out.evaluations < max_evals) {
    std::pop_heap(segs.begin(), segs.end(), worse);
    Segment s = segs.back();
    segs.pop_back();
    const double m = 0.5 * (s.a + s.b);
    if (s.depth >= opt.max_depth || !(m > s.a && m < s.b)) {
      done.push_back(s);
      capped_err += s.error();
      if (capped_err > tol) break;  // unreachable tolerance
      continue;
    }
    total_err -= s.error();
    for (auto child : {make_segment(f, s.a, m, s.left, s.depth + 1), make_segment(f, m, s.b, s.right, s.depth + 1)}) {
      total_err += child.error();
      segs.push_back(child);
      std::push_heap(segs.begin(), segs.end(), worse);
    }
    out.evaluations += 32;
  }
  done.insert(done.end(), segs.begin(), segs.end());
  std::sort(done.begin(), done.end(), [](const Segment& x, const Segment& y) { return x.a < y.a; });
  for (const auto& s : done) {
    out.value += s.value();
    out.error += s.error();
  }
  out.converged = out.error <= tol && std::isfinite(out.value);
  return out;
}

QuadResult integrate2d(const std::function<double(double, double)>& f, double ax, double bx,
                       double ay, double by, const QuadOptions& opt) {
  QuadResult total;
  QuadOptions inner = opt;
  inner.abs_tol = opt.abs_tol / std::max(1e-300, std::abs(bx - ax));
  auto outer = [&](double x) {
    QuadResult r = integrate([&](double y) { return f(x, y); }, ay, by, inner);
    total.evaluations += r.evaluations;
    if (!r.converged) total.converged = false;
    return r.value;
  };
  QuadResult r = integrate(outer, ax, bx, opt);
  total.value = r.value;
  total.error = r.error;
  total.converged = total.converged && r.converged;
  return total;
}

double cell_average(const std::function<double(double, double)>& f, double ax, double bx,
                    double ay, double by, int m) {
  const Rule& r = rule(m);
  double cx = 0.5 * (ax + bx), hx = 0.5 * (bx - ax);
  double cy = 0.5 * (ay + by), hy = 0.5 * (by - ay);
  // Dividing by the summed weights keeps constants exact.
  double s = 0, total = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      s += r.w[i] * r.w[j] * f(cx + hx * r.x[i], cy + hy * r.x[j]);
      total += r.w[i] * r.w[j];
    }
  return s / total;
}

}  // namespace wrgsim
