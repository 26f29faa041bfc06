#include "wrgsim/particles.hpp"

#include <cmath>
#include <ostream>

#include "wrgsim/errors.hpp"
#include "wrgsim/format.hpp"
#include "wrgsim/meanfield.hpp"
#include "wrgsim/parallel.hpp"
#include "wrgsim/rng.hpp"

namespace wrgsim {

double NoiseBath::increment(std::uint64_t replica, std::uint64_t particle, std::uint64_t step,
                            std::uint64_t component, double h) const {
  if (substeps <= 1)
    return std::sqrt(h) *
           keyed_normal({seed, stream::noise, stream_id, replica, particle, step, component});
  double s = 0;
  const auto r = static_cast<std::uint64_t>(substeps);
  for (std::uint64_t u = 0; u < r; ++u)
    s += keyed_normal({seed, stream::noise, stream_id, replica, particle, step * r + u, component});
  return std::sqrt(h / static_cast<double>(r)) * s;
}

std::uint64_t NoiseBath::init_key(std::uint64_t replica, std::uint64_t particle) const {
  return hash_key({seed, stream::init, replica, particle});
}

std::uint64_t NoiseBath::disorder_key(std::uint64_t replica, std::uint64_t particle) const {
  return hash_key({seed, stream::disorder, replica, particle});
}

std::size_t step_count(double T, double h) {
  if (!(h > 0) || !(T >= 0)) throw PreconditionError("time grid needs h > 0 and T >= 0");
  double s = std::round(T / h);
  if (std::abs(s * h - T) > 1e-12 * std::max(1.0, T))
    throw PreconditionError("T must be a multiple of h");
  return static_cast<std::size_t>(s);
}

namespace {

// Computes the interaction term for particle i from the step-start states.
using InteractionFn = std::function<void(std::size_t step, std::size_t i,
                                         const std::vector<double>& state,
                                         const std::vector<double>& phi, std::span<double> out)>;

Trajectory run_system(const std::string& system, const PositionGrid& grid, const ModelSpec& m,
                      const InitialLaw& init, double T, double h, const NoiseBath& bath,
                      std::uint64_t replica, const SimOptions& opt, const InteractionFn& inter) {
  if (init.dim != m.dim) throw PreconditionError("initial law and model dimensions differ");
  if (opt.stride == 0) throw PreconditionError("stride must be >= 1");
  const std::size_t n = grid.size(), d = m.dim;
  Trajectory tr;
  tr.n = n;
  tr.dim = d;
  tr.h = h;
  tr.steps = step_count(T, h);
  tr.stride = opt.stride;
  tr.seed = bath.seed;
  tr.noise_stream = bath.stream_id;
  tr.replica = replica;
  tr.model_name = m.name;
  tr.system = system;
  tr.unit_grid = grid.scheme == PositionScheme::deterministic;
  tr.positions = grid.coords;
  tr.states.assign(tr.stored() * n * d, 0.0);

  std::vector<double> cur(n * d), next(n * d), disorder(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    init.sampler(grid.point(i), bath.init_key(replica, i), std::span<double>(&cur[i * d], d));
    if (m.disorder) disorder[i] = m.disorder(bath.disorder_key(replica, i));
  }
  std::copy(cur.begin(), cur.end(), tr.states.begin());

  const std::size_t F = m.separable ? m.separable->features : 0;
  std::vector<double> phi(n * F);
  const bool noisy = !m.noiseless();
  std::vector<int> bad(n, 0);

  for (std::size_t s = 0; s < tr.steps; ++s) {
    if (F > 0)
      parallel_for(n, opt.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j)
          m.separable->feature(std::span<const double>(&cur[j * d], d),
                               std::span<double>(&phi[j * F], F));
      });
    parallel_for(n, opt.threads, [&](std::size_t b, std::size_t e) {
      std::vector<double> drift(d), I(d), dB(d);
      for (std::size_t i = b; i < e; ++i) {
        std::span<const double> th(&cur[i * d], d);
        m.drift(th, disorder[i], drift);
        inter(s, i, cur, phi, I);
        if (noisy)
          for (std::size_t c = 0; c < d; ++c) dB[c] = bath.increment(replica, i, s, c, h);
        bool ok = true;
        for (std::size_t c = 0; c < d; ++c) {
          double v = th[c] + h * (drift[c] + I[c]);
          if (noisy)
            for (std::size_t k = 0; k < d; ++k) v += m.sigma[c * d + k] * dB[k];
          next[i * d + c] = v;
          if (!std::isfinite(v) || std::abs(v) > 1e12) ok = false;
        }
        bad[i] = ok ? 0 : 1;
      }
    });
    for (std::size_t i = 0; i < n; ++i)
      if (bad[i])
        throw NumericalAbort(s + 1, i,
                             "state left [-1e12, 1e12] at step " + std::to_string(s + 1) +
                                 ", particle " + std::to_string(i) + "; try halving h");
    cur.swap(next);
    if ((s + 1) % tr.stride == 0)
      std::copy(cur.begin(), cur.end(), tr.states.begin() + ((s + 1) / tr.stride) * n * d);
  }
  return tr;
}

}  // namespace

Trajectory simulate_graph_system(const RandomGraph& g, const ModelSpec& m, const InitialLaw& init,
                                 double T, double h, const NoiseBath& bath,
                                 std::uint64_t replica, const SimOptions& opt) {
  const std::size_t n = g.n, d = m.dim;
  const double inv_n = 1.0 / static_cast<double>(n);
  InteractionFn inter;
  if (m.separable) {
    const auto& sep = *m.separable;
    const std::size_t F = sep.features;
    inter = [&, F, inv_n](std::size_t, std::size_t i, const std::vector<double>& cur,
                          const std::vector<double>& phi, std::span<double> out) {
      std::vector<double> agg(F, 0.0);
      double wsum = 0;
      g.adjacency.for_each(i, [&](std::size_t j) {
        for (std::size_t f = 0; f < F; ++f) agg[f] += phi[j * F + f];
        wsum += 1.0;
      });
      double scale = g.kappa[i] * inv_n;
      for (auto& a : agg) a *= scale;
      sep.combine(std::span<const double>(&cur[i * d], d), agg, wsum * scale, out);
    };
  } else {
    inter = [&, inv_n](std::size_t, std::size_t i, const std::vector<double>& cur,
                       const std::vector<double>&, std::span<double> out) {
      std::vector<double> gv(d);
      std::fill(out.begin(), out.end(), 0.0);
      g.adjacency.for_each(i, [&](std::size_t j) {
        m.interaction(std::span<const double>(&cur[i * d], d),
                      std::span<const double>(&cur[j * d], d), gv);
        for (std::size_t c = 0; c < d; ++c) out[c] += gv[c];
      });
      double scale = g.kappa[i] * inv_n;
      for (auto& v : out) v *= scale;
    };
  }
  return run_system("graph", g.grid, m, init, T, h, bath, replica, opt, inter);
}

Trajectory simulate_w_system(const Kernel& W, const PositionGrid& grid, const ModelSpec& m,
                             const InitialLaw& init, double T, double h, const NoiseBath& bath,
                             std::uint64_t replica, const SimOptions& opt) {
  const std::size_t n = grid.size(), d = m.dim;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> weight(n * n, 0.0);
  parallel_for(n, opt.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) weight[i * n + j] = W.checked(grid.point(i), grid.point(j));
  });
  InteractionFn inter;
  if (m.separable) {
    const auto& sep = *m.separable;
    const std::size_t F = sep.features;
    inter = [&, F, n, inv_n](std::size_t, std::size_t i, const std::vector<double>& cur,
                             const std::vector<double>& phi, std::span<double> out) {
      std::vector<double> agg(F, 0.0);
      double wsum = 0;
      for (std::size_t j = 0; j < n; ++j) {
        double w = weight[i * n + j];
        if (w == 0) continue;
        for (std::size_t f = 0; f < F; ++f) agg[f] += w * phi[j * F + f];
        wsum += w;
      }
      for (auto& a : agg) a *= inv_n;
      sep.combine(std::span<const double>(&cur[i * d], d), agg, wsum * inv_n, out);
    };
  } else {
    inter = [&, n, inv_n](std::size_t, std::size_t i, const std::vector<double>& cur,
                          const std::vector<double>&, std::span<double> out) {
      std::vector<double> gv(d);
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        double w = weight[i * n + j];
        if (w == 0) continue;
        m.interaction(std::span<const double>(&cur[i * d], d),
                      std::span<const double>(&cur[j * d], d), gv);
        for (std::size_t c = 0; c < d; ++c) out[c] += w * gv[c];
      }
      for (auto& v : out) v *= inv_n;
    };
  }
  return run_system("w", grid, m, init, T, h, bath, replica, opt, inter);
}

Trajectory simulate_coupled_copies(const MeanFieldSolution& mf, const Kernel& W,
                                   const PositionGrid& grid, const ModelSpec& m,
                                   const InitialLaw& init, double T, double h,
                                   const NoiseBath& bath, std::uint64_t replica,
                                   const SimOptions& opt) {
  if (mf.dim != m.dim) throw PreconditionError("coupled copies: model and solution dims differ");
  const double ratio_d = h / mf.h;
  const double ratio = std::round(ratio_d);
  if (ratio < 1 || std::abs(ratio - ratio_d) > 1e-9)
    throw PreconditionError("coupled copies: step must be an integer multiple of the solver step");
  const auto r = static_cast<std::size_t>(ratio);
  const std::size_t steps = step_count(T, h);
  if (steps * r > mf.steps) throw PreconditionError("coupled copies: horizon exceeds the solution");
  const std::size_t n = grid.size(), Q = mf.Q(), d = m.dim;
  if (grid.dim != mf.quad.dim) throw PreconditionError("coupled copies: grid dimensions differ");
  // K(i,q) = w_q W(x_i, y_q); a node sitting exactly on x_i is left out.
  std::vector<double> K(n * Q, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t q = 0; q < Q; ++q) {
      auto xi = grid.point(i), yq = mf.quad.point(q);
      if (std::equal(xi.begin(), xi.end(), yq.begin(), yq.end())) continue;
      K[i * Q + q] = mf.quad.weights[q] * W.checked(xi, yq);
    }
  InteractionFn inter;
  if (m.separable) {
    const auto& sep = *m.separable;
    const std::size_t F = sep.features;
    if (F != mf.features) throw PreconditionError("coupled copies: feature count differs");
    inter = [&, F, Q, r](std::size_t s, std::size_t i, const std::vector<double>& cur,
                         const std::vector<double>&, std::span<double> out) {
      std::vector<double> agg(F, 0.0);
      double wsum = 0;
      const std::size_t ms = s * r;
      for (std::size_t q = 0; q < Q; ++q) {
        double w = K[i * Q + q];
        if (w == 0) continue;
        const double* Fq = mf.feature(ms, q);
        for (std::size_t f = 0; f < F; ++f) agg[f] += w * Fq[f];
        wsum += w;
      }
      sep.combine(std::span<const double>(&cur[i * d], d), agg, wsum, out);
    };
  } else {
    for (std::size_t s = 0; s < steps; ++s)
      if (!mf.has_snapshot(s * r))
        throw PreconditionError("coupled copies: generic interaction needs ensembles at every step");
    inter = [&, Q, r](std::size_t s, std::size_t i, const std::vector<double>& cur,
                      const std::vector<double>&, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      const std::size_t ms = s * r;
      for (std::size_t q = 0; q < Q; ++q) {
        double w = K[i * Q + q];
        if (w == 0) continue;
        auto g = interaction_mean_generic(
            m, std::span<const double>(&cur[i * d], d),
            std::span<const double>(mf.ensemble(ms, q), mf.M * d));
        for (std::size_t c = 0; c < d; ++c) out[c] += w * g[c];
      }
    };
  }
  return run_system("copies", grid, m, init, T, h, bath, replica, opt, inter);
}

std::vector<double> spatial_profile(const Trajectory& tr, double x, double t) {
  if (!tr.unit_grid) throw PreconditionError("spatial_profile needs a deterministic unit grid run");
  if (!(x >= 0 && x < 1)) throw PreconditionError("spatial_profile: x must lie in [0,1)");
  double sd = t / (tr.h * static_cast<double>(tr.stride));
  double s = std::round(sd);
  if (std::abs(s - sd) > 1e-9 || s < 0 || s >= static_cast<double>(tr.stored()))
    throw PreconditionError("spatial_profile: time is not on the stored grid");
  auto i = static_cast<std::size_t>(std::floor(x * static_cast<double>(tr.n)));
  i = std::min(i, tr.n - 1);
  const double* p = tr.state(static_cast<std::size_t>(s), i);
  return std::vector<double>(p, p + tr.dim);
}

void write_trajectory_csv(const Trajectory& tr, std::ostream& os, std::size_t stride) {
  if (stride == 0) stride = 1;
  for (std::size_t s = 0; s < tr.stored(); s += stride)
    for (std::size_t i = 0; i < tr.n; ++i)
      for (std::size_t c = 0; c < tr.dim; ++c)
        os << tr.replica << ',' << s * tr.stride << ',' << format_double(tr.time(s)) << ',' << i
           << ',' << c << ',' << format_double(tr.state(s, i)[c]) << '\n';
}

}  // namespace wrgsim
