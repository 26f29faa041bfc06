#include "wrgsim/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "wrgsim/errors.hpp"
#include "wrgsim/format.hpp"
#include "wrgsim/parallel.hpp"
#include "wrgsim/particles.hpp"
#include "wrgsim/rng.hpp"

namespace wrgsim {

std::size_t MeanFieldSolution::nearest_node(double x) const {
  std::size_t best = 0;
  double bd = INFINITY;
  for (std::size_t q = 0; q < Q(); ++q) {
    double dd = std::abs(quad.x(q) - x);
    if (dd < bd) bd = dd, best = q;
  }
  return best;
}

namespace {

// w_r W(x_q, x_r) with the diagonal removed.
std::vector<double> node_weights(const Kernel& W, const PositionGrid& quad, int threads) {
  const std::size_t Q = quad.size();
  std::vector<double> K(Q * Q, 0.0);
  parallel_for(Q, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t q = b; q < e; ++q)
      for (std::size_t r = 0; r < Q; ++r)
        if (r != q) K[q * Q + r] = quad.weights[r] * W.checked(quad.point(q), quad.point(r));
  });
  return K;
}

bool escaped(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x) || std::abs(x) > 1e12) return true;
  return false;
}

struct Layout {
  std::size_t Q, M, d, F, P;
};

// A frozen measure flow over one time window: per (step, RK stage) either node feature
// means (separable interactions) or full stage ensembles.
struct Flow {
  std::size_t L = 0;
  std::vector<double> feat, agg, ens;
};

class PicardEngine {
 public:
  PicardEngine(const ModelSpec& m, const PositionGrid& quad, const std::vector<double>& K,
               const Layout& lay, double h, const PicardOptions& opt, MeanFieldSolution& out)
      : m_(m), quad_(quad), K_(K), lay_(lay), h_(h), opt_(opt), out_(out) {
    wK_.assign(lay.Q, 0.0);
    for (std::size_t q = 0; q < lay.Q; ++q)
      for (std::size_t r = 0; r < lay.Q; ++r) wK_[q] += K[q * lay.Q + r];
    sep_ = m.separable.has_value();
  }

  Flow constant_flow(std::size_t L, const std::vector<double>& start) const {
    Flow f;
    f.L = L;
    if (sep_) {
      std::vector<double> node(lay_.Q * lay_.F, 0.0), phi(lay_.F);
      for (std::size_t q = 0; q < lay_.Q; ++q) {
        for (std::size_t mm = 0; mm < lay_.M; ++mm) {
          m_.separable->feature(state(start, q, mm), phi);
          for (std::size_t k = 0; k < lay_.F; ++k) node[q * lay_.F + k] += phi[k];
        }
        for (std::size_t k = 0; k < lay_.F; ++k) node[q * lay_.F + k] /= static_cast<double>(lay_.M);
      }
      f.feat.resize(L * 4 * lay_.Q * lay_.F);
      for (std::size_t sj = 0; sj < L * 4; ++sj)
        std::copy(node.begin(), node.end(), f.feat.begin() + sj * lay_.Q * lay_.F);
      finalize(f);
    } else {
      f.ens.resize(L * 4 * lay_.P * lay_.d);
      for (std::size_t sj = 0; sj < L * 4; ++sj)
        std::copy(start.begin(), start.end(), f.ens.begin() + sj * lay_.P * lay_.d);
    }
    return f;
  }

  // Integrates every node over [s0, s0+L) driven by `drive`; when `previous` is given the
  // prior iterate is re-integrated alongside and the pathwise gap returned.
  double sweep(std::size_t s0, const Flow& drive, const Flow* previous,
               const std::vector<double>& start, Flow& next, std::vector<double>& end,
               bool record) {
    const std::size_t L = drive.L, Q = lay_.Q, M = lay_.M, d = lay_.d, F = lay_.F;
    next = Flow{};
    next.L = L;
    if (sep_) next.feat.assign(L * 4 * Q * F, 0.0);
    else next.ens.assign(L * 4 * lay_.P * d, 0.0);
    end.assign(lay_.P * d, 0.0);
    std::vector<double> node_gap(Q, 0.0);
    std::vector<long long> abort_step(Q, -1);
    const double p = static_cast<double>(gap_exponent());
    const bool noisy = !m_.noiseless();

    parallel_for(Q, opt_.threads, [&](std::size_t b, std::size_t e) {
      std::vector<double> X(M * d), Y(M * d), dB(d), stage(4 * F), phi(F), tmp(d);
      std::vector<double> k1(d), k2(d), k3(d), k4(d), th(d);
      for (std::size_t q = b; q < e; ++q) {
        std::copy(start.begin() + q * M * d, start.begin() + (q + 1) * M * d, X.begin());
        Y = X;
        double sup_gap = 0;
        for (std::size_t s = 0; s < L; ++s) {
          const std::size_t gs = s0 + s;
          if (record) record_stats(gs, q, X);
          std::fill(stage.begin(), stage.end(), 0.0);
          for (std::size_t mm = 0; mm < M; ++mm) {
            const std::size_t pidx = q * M + mm;
            if (noisy)
              for (std::size_t c = 0; c < d; ++c)
                dB[c] = std::sqrt(h_) * keyed_normal({opt_.seed, stream::mf_noise, q, mm, gs, c});
            const double dis = disorder_[pidx];
            auto capture = [&](int j, std::span<const double> v) {
              if (sep_) {
                m_.separable->feature(v, phi);
                for (std::size_t k = 0; k < F; ++k) stage[j * F + k] += phi[k];
              } else {
                std::copy(v.begin(), v.end(), next.ens.begin() + ((s * 4 + j) * lay_.P + pidx) * d);
              }
            };
            std::span<double> x(&X[mm * d], d);
            rk_step(x, dis, s, q, drive, dB, noisy, capture, k1, k2, k3, k4, th);
            if (escaped(x) && abort_step[q] < 0) abort_step[q] = static_cast<long long>(gs + 1);
            if (previous) {
              std::span<double> y(&Y[mm * d], d);
              rk_step(y, dis, s, q, *previous, dB, noisy, [](int, std::span<const double>) {},
                      k1, k2, k3, k4, th);
            }
          }
          if (sep_)
            for (std::size_t j = 0; j < 4; ++j)
              for (std::size_t k = 0; k < F; ++k)
                next.feat[((s * 4 + j) * Q + q) * F + k] = stage[j * F + k] / static_cast<double>(M);
          if (previous) sup_gap = std::max(sup_gap, pathwise(X, Y, p));
          if (abort_step[q] >= 0) break;
        }
        if (record && abort_step[q] < 0) record_stats(s0 + L, q, X);
        std::copy(X.begin(), X.end(), end.begin() + q * M * d);
        node_gap[q] = sup_gap;
      }
    });
    for (std::size_t q = 0; q < Q; ++q)
      if (abort_step[q] >= 0)
        throw NumericalAbort(static_cast<std::size_t>(abort_step[q]), q,
                             "mean-field particle left [-1e12, 1e12] at step " +
                                 std::to_string(abort_step[q]) + ", node " + std::to_string(q) +
                                 "; try halving h");
    if (sep_) finalize(next);
    return *std::max_element(node_gap.begin(), node_gap.end());
  }

  int gap_exponent() const {
    if (opt_.gap_exponent > 0) return opt_.gap_exponent;
    return m_.growth_k >= 3 ? 6 : 4;
  }

  std::vector<double> disorder_;

 private:
  std::span<const double> state(const std::vector<double>& v, std::size_t q, std::size_t mm) const {
    return {v.data() + (q * lay_.M + mm) * lay_.d, lay_.d};
  }

  void finalize(Flow& f) const {
    const std::size_t Q = lay_.Q, F = lay_.F;
    f.agg.assign(f.feat.size(), 0.0);
    for (std::size_t sj = 0; sj < f.L * 4; ++sj)
      for (std::size_t q = 0; q < Q; ++q) {
        double* a = &f.agg[(sj * Q + q) * F];
        for (std::size_t r = 0; r < Q; ++r) {
          double w = K_[q * Q + r];
          if (w == 0) continue;
          const double* fr = &f.feat[(sj * Q + r) * F];
          for (std::size_t k = 0; k < F; ++k) a[k] += w * fr[k];
        }
      }
  }

  void drift(std::span<const double> th, double dis, std::size_t s, int j, std::size_t q,
             const Flow& f, std::span<double> out) const {
    const std::size_t d = lay_.d;
    std::vector<double> I(d, 0.0);
    m_.drift(th, dis, out);
    if (sep_) {
      const std::size_t F = lay_.F;
      m_.separable->combine(th, std::span<const double>(&f.agg[((s * 4 + j) * lay_.Q + q) * F], F),
                            wK_[q], I);
    } else {
      std::vector<double> g(d);
      for (std::size_t r = 0; r < lay_.Q; ++r) {
        double w = K_[q * lay_.Q + r];
        if (w == 0) continue;
        std::vector<double> acc(d, 0.0);
        for (std::size_t mm = 0; mm < lay_.M; ++mm) {
          m_.interaction(th,
                         std::span<const double>(&f.ens[((s * 4 + j) * lay_.P + r * lay_.M + mm) * d], d),
                         g);
          for (std::size_t c = 0; c < d; ++c) acc[c] += g[c];
        }
        for (std::size_t c = 0; c < d; ++c) I[c] += w * (acc[c] / static_cast<double>(lay_.M));
      }
    }
    for (std::size_t c = 0; c < d; ++c) out[c] += I[c];
  }

  template <class Capture>
  void rk_step(std::span<double> x, double dis, std::size_t s, std::size_t q, const Flow& f,
               const std::vector<double>& dB, bool noisy, Capture&& capture,
               std::vector<double>& k1, std::vector<double>& k2, std::vector<double>& k3,
               std::vector<double>& k4, std::vector<double>& th) const {
    const std::size_t d = lay_.d;
    const double h = h_;
    capture(0, x);
    drift(x, dis, s, 0, q, f, k1);
    for (std::size_t c = 0; c < d; ++c) th[c] = x[c] + 0.5 * h * k1[c];
    capture(1, th);
    drift(th, dis, s, 1, q, f, k2);
    for (std::size_t c = 0; c < d; ++c) th[c] = x[c] + 0.5 * h * k2[c];
    capture(2, th);
    drift(th, dis, s, 2, q, f, k3);
    for (std::size_t c = 0; c < d; ++c) th[c] = x[c] + h * k3[c];
    capture(3, th);
    drift(th, dis, s, 3, q, f, k4);
    for (std::size_t c = 0; c < d; ++c) {
      double v = x[c] + h / 6 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
      if (noisy)
        for (std::size_t k = 0; k < d; ++k) v += m_.sigma[c * d + k] * dB[k];
      x[c] = v;
    }
  }

  double pathwise(const std::vector<double>& X, const std::vector<double>& Y, double p) const {
    const std::size_t d = lay_.d;
    double acc = 0;
    for (std::size_t mm = 0; mm < lay_.M; ++mm) {
      double s = 0;
      for (std::size_t c = 0; c < d; ++c) {
        double t = X[mm * d + c] - Y[mm * d + c];
        s += t * t;
      }
      acc += std::pow(s, p / 2);
    }
    return std::pow(acc / static_cast<double>(lay_.M), 1 / p);
  }

  void record_stats(std::size_t gs, std::size_t q, const std::vector<double>& X) const {
    const std::size_t Q = lay_.Q, M = lay_.M, d = lay_.d, F = lay_.F;
    const double p = static_cast<double>(out_.gap_exponent);
    std::vector<double> mean(d, 0.0), sec(d, 0.0), fsum(F, 0.0), phi(F);
    double mom = 0;
    for (std::size_t mm = 0; mm < M; ++mm) {
      double nrm = 0;
      for (std::size_t c = 0; c < d; ++c) {
        double v = X[mm * d + c];
        mean[c] += v;
        sec[c] += v * v;
        nrm += v * v;
      }
      mom += std::pow(nrm, p / 2);
      if (F > 0) {
        m_.separable->feature(std::span<const double>(&X[mm * d], d), phi);
        for (std::size_t k = 0; k < F; ++k) fsum[k] += phi[k];
      }
    }
    const double inv = 1.0 / static_cast<double>(M);
    for (std::size_t c = 0; c < d; ++c) {
      out_.means[(gs * Q + q) * d + c] = mean[c] * inv;
      out_.second_moments[(gs * Q + q) * d + c] = sec[c] * inv;
    }
    out_.moment_2k[gs * Q + q] = mom * inv;
    for (std::size_t k = 0; k < F; ++k) out_.feature_means[(gs * Q + q) * F + k] = fsum[k] * inv;
    if (out_.has_snapshot(gs))
      std::copy(X.begin(), X.end(),
                out_.snapshots.begin() + static_cast<std::ptrdiff_t>(((gs / out_.snapshot_stride) * Q + q) * M * d));
  }

  const ModelSpec& m_;
  const PositionGrid& quad_;
  const std::vector<double>& K_;
  Layout lay_;
  double h_;
  PicardOptions opt_;
  MeanFieldSolution& out_;
  std::vector<double> wK_;
  bool sep_ = true;
};

}  // namespace

MeanFieldSolution picard_solve(const ModelSpec& m, const Kernel& W, const PositionGrid& quad,
                               std::size_t M, const InitialLaw& init, double T, double h,
                               const PicardOptions& opt) {
  if (!(opt.tol > 0)) throw PreconditionError("picard_solve: tol must be positive");
  if (M < 2) throw PreconditionError("picard_solve: M must be >= 2");
  if (opt.max_iter < 1) throw PreconditionError("picard_solve: max_iter must be >= 1");
  if (init.dim != m.dim) throw PreconditionError("picard_solve: initial law dimension differs");
  if (!(opt.window > 0)) throw PreconditionError("picard_solve: window must be positive");
  const std::size_t steps = step_count(T, h), Q = quad.size(), d = m.dim;
  const std::size_t F = m.separable ? m.separable->features : 0;
  Layout lay{Q, M, d, F, Q * M};

  MeanFieldSolution out;
  out.quad = quad;
  out.M = M;
  out.dim = d;
  out.features = F;
  out.h = h;
  out.steps = steps;
  out.model_name = m.name;
  out.means.assign((steps + 1) * Q * d, 0.0);
  out.second_moments.assign((steps + 1) * Q * d, 0.0);
  out.moment_2k.assign((steps + 1) * Q, 0.0);
  out.feature_means.assign((steps + 1) * Q * F, 0.0);
  out.snapshot_stride = opt.snapshot_stride;
  std::size_t window_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.window / h)));
  window_steps = std::min(window_steps, std::max<std::size_t>(1, steps));

  std::size_t budget = 0;
  if (opt.snapshot_stride > 0) budget += (steps / opt.snapshot_stride + 1) * Q * M * d;
  if (!m.separable) budget += 3 * window_steps * 4 * Q * M * d;
  if (budget > opt.max_ensemble_doubles)
    throw PreconditionError("picard_solve: retained ensembles exceed the memory budget");
  if (opt.snapshot_stride > 0) out.snapshots.assign((steps / opt.snapshot_stride + 1) * Q * M * d, 0.0);

  const auto K = node_weights(W, quad, opt.threads);
  PicardEngine eng(m, quad, K, lay, h, opt, out);
  out.gap_exponent = eng.gap_exponent();
  eng.disorder_.assign(lay.P, 0.0);
  std::vector<double> start(lay.P * d);
  for (std::size_t q = 0; q < Q; ++q)
    for (std::size_t mm = 0; mm < M; ++mm) {
      init.sampler(quad.point(q), hash_key({opt.seed, stream::mf_init, q, mm}),
                   std::span<double>(&start[(q * M + mm) * d], d));
      if (m.disorder) eng.disorder_[q * M + mm] = m.disorder(hash_key({opt.seed, stream::mf_disorder, q, mm}));
    }

  out.converged = true;
  if (steps == 0) {
    Flow f = eng.constant_flow(0, start);
    Flow next;
    std::vector<double> end;
    eng.sweep(0, f, nullptr, start, next, end, true);
    out.sweeps = 1;
    return out;
  }
  for (std::size_t s0 = 0; s0 < steps; s0 += window_steps) {
    const std::size_t L = std::min(window_steps, steps - s0);
    Flow older = eng.constant_flow(L, start), newer, next;
    std::vector<double> end;
    eng.sweep(s0, older, nullptr, start, newer, end, true);
    ++out.sweeps;
    bool window_converged = false;
    double gap = INFINITY;
    for (int k = 2; k <= opt.max_iter; ++k) {
      gap = eng.sweep(s0, newer, &older, start, next, end, true);
      ++out.sweeps;
      out.gaps.push_back(gap);
      older = std::move(newer);
      newer = std::move(next);
      if (gap < opt.tol) {
        window_converged = true;
        break;
      }
    }
    out.window_final_gaps.push_back(gap);
    out.final_gap = std::max(out.final_gap, gap);
    out.converged = out.converged && window_converged;
    start = end;
  }
  return out;
}

namespace {

void heat_rk4(const ModelSpec& m, const std::vector<double>& K, std::size_t Q,
              const std::vector<double>& psi0, std::size_t steps, double h, int threads,
              std::vector<double>& values) {
  const std::size_t d = m.dim;
  const std::size_t F = m.separable ? m.separable->features : 0;
  std::vector<double> wK(Q, 0.0);
  for (std::size_t q = 0; q < Q; ++q)
    for (std::size_t r = 0; r < Q; ++r) wK[q] += K[q * Q + r];
  values.assign((steps + 1) * Q * d, 0.0);
  std::copy(psi0.begin(), psi0.end(), values.begin());
  std::vector<double> cur(psi0), stage(Q * d), k[4], phi(Q * F), agg(Q * F);
  for (auto& v : k) v.assign(Q * d, 0.0);

  auto eval = [&](const std::vector<double>& x, std::vector<double>& out) {
    if (m.separable) {
      for (std::size_t r = 0; r < Q; ++r)
        m.separable->feature(std::span<const double>(&x[r * d], d), std::span<double>(&phi[r * F], F));
    }
    parallel_for(Q, threads, [&](std::size_t b, std::size_t e) {
      std::vector<double> I(d), g(d);
      for (std::size_t q = b; q < e; ++q) {
        std::span<const double> xq(&x[q * d], d);
        std::span<double> o(&out[q * d], d);
        m.drift(xq, 0.0, o);
        std::fill(I.begin(), I.end(), 0.0);
        if (m.separable) {
          std::vector<double> a(F, 0.0);
          for (std::size_t r = 0; r < Q; ++r) {
            double w = K[q * Q + r];
            if (w == 0) continue;
            for (std::size_t f = 0; f < F; ++f) a[f] += w * phi[r * F + f];
          }
          m.separable->combine(xq, a, wK[q], I);
        } else {
          for (std::size_t r = 0; r < Q; ++r) {
            double w = K[q * Q + r];
            if (w == 0) continue;
            m.interaction(xq, std::span<const double>(&x[r * d], d), g);
            for (std::size_t c = 0; c < d; ++c) I[c] += w * g[c];
          }
        }
        for (std::size_t c = 0; c < d; ++c) o[c] += I[c];
      }
    });
  };

  for (std::size_t s = 0; s < steps; ++s) {
    eval(cur, k[0]);
    for (std::size_t i = 0; i < Q * d; ++i) stage[i] = cur[i] + 0.5 * h * k[0][i];
    eval(stage, k[1]);
    for (std::size_t i = 0; i < Q * d; ++i) stage[i] = cur[i] + 0.5 * h * k[1][i];
    eval(stage, k[2]);
    for (std::size_t i = 0; i < Q * d; ++i) stage[i] = cur[i] + h * k[2][i];
    eval(stage, k[3]);
    for (std::size_t i = 0; i < Q * d; ++i)
      cur[i] = cur[i] + h / 6 * (k[0][i] + 2 * k[1][i] + 2 * k[2][i] + k[3][i]);
    for (std::size_t i = 0; i < Q * d; ++i)
      if (!std::isfinite(cur[i]) || std::abs(cur[i]) > 1e12)
        throw NumericalAbort(s + 1, i / d,
                             "heat equation left [-1e12, 1e12] at step " + std::to_string(s + 1) +
                                 ", node " + std::to_string(i / d) + "; try halving h");
    std::copy(cur.begin(), cur.end(), values.begin() + (s + 1) * Q * d);
  }
}

}  // namespace

ProfileField heat_solve(const ModelSpec& m, const Kernel& W, const PositionGrid& quad,
                        const std::vector<double>& psi0, double T, double h, int threads,
                        bool self_check) {
  const std::size_t Q = quad.size(), d = m.dim;
  if (psi0.size() != Q * d) throw PreconditionError("heat_solve: psi0 must hold Q x d values");
  ProfileField f;
  f.quad = quad;
  f.h = h;
  f.steps = step_count(T, h);
  f.dim = d;
  const auto K = node_weights(W, quad, threads);
  heat_rk4(m, K, Q, psi0, f.steps, h, threads, f.values);
  if (self_check) {
    std::vector<double> fine;
    heat_rk4(m, K, Q, psi0, 2 * f.steps, h / 2, threads, fine);
    double diff = 0;
    for (std::size_t s = 0; s <= f.steps; ++s)
      for (std::size_t i = 0; i < Q * d; ++i)
        diff = std::max(diff, std::abs(f.values[s * Q * d + i] - fine[2 * s * Q * d + i]));
    f.self_convergence = diff;
  }
  return f;
}

ProfileField mean_profile(const MeanFieldSolution& mf) {
  ProfileField f;
  f.quad = mf.quad;
  f.h = mf.h;
  f.steps = mf.steps;
  f.dim = mf.dim;
  f.values = mf.means;
  return f;
}

Psi0 psi0_from_init(const InitialLaw& init, const PositionGrid& quad, std::size_t samples,
                    std::uint64_t seed) {
  const std::size_t Q = quad.size(), d = init.dim;
  Psi0 out;
  out.values.assign(Q * d, 0.0);
  out.stderr_.assign(Q * d, 0.0);
  if (init.mean && samples == 0) {
    for (std::size_t q = 0; q < Q; ++q)
      init.mean(quad.point(q), std::span<double>(&out.values[q * d], d));
    return out;
  }
  if (samples < 2) throw PreconditionError("psi0_from_init: sampling needs at least 2 samples");
  out.sampled = true;
  std::vector<double> v(d);
  for (std::size_t q = 0; q < Q; ++q) {
    std::vector<double> s1(d, 0.0), s2(d, 0.0);
    for (std::size_t k = 0; k < samples; ++k) {
      init.sampler(quad.point(q), hash_key({seed, stream::init, q, k}), v);
      for (std::size_t c = 0; c < d; ++c) s1[c] += v[c], s2[c] += v[c] * v[c];
    }
    const double n = static_cast<double>(samples);
    for (std::size_t c = 0; c < d; ++c) {
      double mean = s1[c] / n, var = std::max(0.0, (s2[c] - n * mean * mean) / (n - 1));
      out.values[q * d + c] = mean;
      out.stderr_[q * d + c] = std::sqrt(var / n);
    }
  }
  return out;
}

UniquenessReport uniqueness_probe(const ModelSpec& m, const Kernel& W,
                                  const std::function<void(double, std::span<double>)>& psi0,
                                  double T, double h, std::size_t Q, int threads) {
  const std::size_t d = m.dim;
  std::vector<ProfileField> levels;
  for (std::size_t lvl = 0; lvl < 3; ++lvl) {
    std::size_t Ql = Q << lvl;
    auto grid = make_positions(PositionScheme::deterministic, Ql);
    std::vector<double> init(Ql * d);
    for (std::size_t q = 0; q < Ql; ++q) psi0(grid.x(q), std::span<double>(&init[q * d], d));
    levels.push_back(heat_solve(m, W, grid, init, T, h / static_cast<double>(1u << lvl), threads));
  }
  // Coarse node q sits at (q+1)/Q, which is node 2^l (q+1) - 1 on level l.
  auto compare = [&](const ProfileField& a, const ProfileField& b, std::size_t factor) {
    double worst = 0;
    for (std::size_t s = 0; s <= levels[0].steps; ++s) {
      double acc = 0;
      for (std::size_t q = 0; q < Q; ++q) {
        std::size_t qa = (q + 1) * (a.Q() / Q) - 1, qb = (q + 1) * (b.Q() / Q) - 1;
        const double* va = a.at(s * (factor / 2), qa);
        const double* vb = b.at(s * factor, qb);
        for (std::size_t c = 0; c < d; ++c) acc += (va[c] - vb[c]) * (va[c] - vb[c]) / static_cast<double>(Q);
      }
      worst = std::max(worst, std::sqrt(acc));
    }
    return worst;
  };
  UniquenessReport r;
  r.discrepancy = compare(levels[0], levels[1], 2);
  r.discrepancy_fine = compare(levels[1], levels[2], 4);
  r.ratio = r.discrepancy_fine > 0 ? r.discrepancy / r.discrepancy_fine : INFINITY;
  r.order = std::log2(r.ratio);
  return r;
}

TruncatedDomain truncate_domain(const std::function<double(double)>& density, const Kernel& W,
                                double half_width, std::size_t nodes_per_dim, int dim) {
  if (!(half_width > 0)) throw PreconditionError("truncate_domain: M must be positive");
  if (nodes_per_dim == 0 || dim < 1) throw PreconditionError("truncate_domain: empty quadrature");
  if (W.dim() != dim) throw PreconditionError("truncate_domain: kernel dimension differs");
  QuadOptions qo;
  qo.rel_tol = 1e-12;
  double mass1 = integrate(density, -half_width, half_width, qo).value;
  double mass = std::pow(mass1, dim);
  if (mass < 0.5)
    throw TruncationError(mass, "truncate_domain: l(B_M) = " + format_double(mass) + " < 1/2");
  TruncatedDomain t;
  t.mass = mass;
  t.half_width = half_width;
  t.volume = std::pow(2 * half_width, dim);
  std::size_t Q = 1;
  for (int c = 0; c < dim; ++c) Q *= nodes_per_dim;
  std::vector<double> coords(Q * dim), weights(Q, 1.0 / static_cast<double>(Q));
  for (std::size_t q = 0; q < Q; ++q) {
    std::size_t rem = q;
    for (int c = dim - 1; c >= 0; --c) {
      std::size_t k = rem % nodes_per_dim;
      rem /= nodes_per_dim;
      coords[q * dim + c] =
          -half_width + 2 * half_width * (static_cast<double>(k) + 0.5) / static_cast<double>(nodes_per_dim);
    }
  }
  t.quad = custom_grid(coords, weights, dim);
  auto dens_M = [density, mass](std::span<const double> y) {
    double v = 1;
    for (double c : y) v *= density(c);
    return v / mass;
  };
  t.density.resize(Q);
  t.measure_weights.resize(Q);
  for (std::size_t q = 0; q < Q; ++q) {
    t.density[q] = dens_M(t.quad.point(q));
    t.measure_weights[q] = t.density[q] * t.volume / static_cast<double>(Q);
  }
  const double vol = t.volume;
  t.kernel = Kernel("truncated-" + W.name(), dim,
                    [W, dens_M, vol](std::span<const double> x, std::span<const double> y) {
                      return W(x, y) * dens_M(y) * vol;
                    });
  return t;
}

void write_profile_csv(const ProfileField& f, std::ostream& os, std::size_t stride) {
  if (stride == 0) stride = 1;
  for (std::size_t s = 0; s <= f.steps; s += stride)
    for (std::size_t q = 0; q < f.Q(); ++q)
      for (std::size_t c = 0; c < f.dim; ++c)
        os << format_double(static_cast<double>(s) * f.h) << ',' << format_double(f.quad.x(q))
           << ',' << c << ',' << format_double(f.at(s, q)[c]) << '\n';
}

}  // namespace wrgsim
