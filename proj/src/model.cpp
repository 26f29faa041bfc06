#include "wrgsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wrgsim/errors.hpp"
#include "wrgsim/rng.hpp"

namespace wrgsim {

namespace {

double param(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

std::vector<double> diagonal(std::vector<double> entries) {
  std::size_t d = entries.size();
  std::vector<double> s(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) s[i * d + i] = entries[i];
  return s;
}

double norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void check_known(const Params& p, std::initializer_list<const char*> known, const std::string& model) {
  for (auto& [k, v] : p) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (!ok) throw PreconditionError("model " + model + ": unknown parameter " + k);
    if (!std::isfinite(v)) throw PreconditionError("model " + model + ": non-finite " + k);
  }
}

ModelSpec kuramoto(const Params& p) {
  check_known(p, {"omega", "a", "coupling", "sigma", "omega_spread"}, "kuramoto");
  ModelSpec m;
  m.name = "kuramoto";
  m.dim = 1;
  double omega = param(p, "omega", 0.0), K = param(p, "coupling", 1.0);
  double sigma = param(p, "sigma", 0.0), spread = param(p, "omega_spread", 0.0);
  if (p.count("a")) {
    double a = p.at("a");
    m.drift = [a](std::span<const double> t, double dis, std::span<double> out) {
      out[0] = 1 + a * std::sin(t[0]) + dis;
    };
    m.lipschitz_c = std::abs(a);
  } else {
    m.drift = [omega](std::span<const double>, double dis, std::span<double> out) {
      out[0] = omega + dis;
    };
  }
  if (spread != 0) m.disorder = [spread](std::uint64_t h) { return spread * KeyedStream(h).normal(); };
  m.interaction = [K](std::span<const double> t, std::span<const double> o, std::span<double> out) {
    out[0] = K * std::sin(o[0] - t[0]);
  };
  SeparableInteraction s;
  s.features = 2;
  s.feature = [](std::span<const double> o, std::span<double> phi) {
    phi[0] = std::sin(o[0]);
    phi[1] = std::cos(o[0]);
  };
  s.combine = [K](std::span<const double> t, std::span<const double> S, double,
                  std::span<double> out) {
    out[0] = K * (std::cos(t[0]) * S[0] - std::sin(t[0]) * S[1]);
  };
  m.separable = s;
  m.statistic = SufficientStatistic::circular_order_parameter;
  m.sigma = {sigma};
  m.lipschitz_gamma = std::abs(K);
  m.zero_interaction = K == 0;
  return m;
}

ModelSpec fhn(const Params& p) {
  check_known(p, {"a", "b", "tau", "coupling", "sigma", "sigma_v", "sigma_w"}, "fhn");
  ModelSpec m;
  m.name = "fhn";
  m.dim = 2;
  double a = param(p, "a", 0.7), b = param(p, "b", 0.8), tau = param(p, "tau", 12.5);
  double K = param(p, "coupling", 1.0), sigma = param(p, "sigma", 0.0);
  if (!(tau > 0)) throw PreconditionError("fhn: tau must be positive");
  m.drift = [a, b, tau](std::span<const double> t, double, std::span<double> out) {
    double V = t[0], w = t[1];
    out[0] = V - V * V * V / 3 - w;
    out[1] = (V + a - b * w) / tau;
  };
  m.interaction = [K](std::span<const double> t, std::span<const double> o, std::span<double> out) {
    out[0] = K * (t[0] - o[0]);
    out[1] = 0;
  };
  SeparableInteraction s;
  s.features = 1;
  s.feature = [](std::span<const double> o, std::span<double> phi) { phi[0] = o[0]; };
  s.combine = [K](std::span<const double> t, std::span<const double> S, double wsum,
                  std::span<double> out) {
    out[0] = K * (wsum * t[0] - S[0]);
    out[1] = 0;
  };
  m.separable = s;
  m.statistic = SufficientStatistic::linear_mean;
  m.sigma = diagonal({param(p, "sigma_v", sigma), param(p, "sigma_w", sigma)});
  m.lipschitz_c = 1 + std::abs(1 - 1 / tau) / 2;
  m.lipschitz_gamma = std::abs(K);
  m.growth_k = 3;
  m.zero_interaction = K == 0;
  return m;
}

ModelSpec linear(const Params& p) {
  check_known(p, {"dim", "gamma", "decay", "cubic", "sigma"}, "linear");
  ModelSpec m;
  m.name = "linear";
  double dd = param(p, "dim", 1);
  if (!(dd >= 1 && dd <= 16 && dd == std::floor(dd))) throw PreconditionError("linear: bad dim");
  std::size_t d = static_cast<std::size_t>(dd);
  m.dim = d;
  double g = param(p, "gamma", 1.0), lam = param(p, "decay", 1.0), mu = param(p, "cubic", 0.0);
  double sigma = param(p, "sigma", 0.0);
  if (mu < 0) throw PreconditionError("linear: cubic coefficient must be >= 0");
  m.drift = [lam, mu](std::span<const double> t, double, std::span<double> out) {
    for (std::size_t c = 0; c < t.size(); ++c) out[c] = -lam * t[c] - mu * t[c] * t[c] * t[c];
  };
  m.interaction = [g](std::span<const double> t, std::span<const double> o, std::span<double> out) {
    for (std::size_t c = 0; c < t.size(); ++c) out[c] = g * (t[c] - o[c]);
  };
  SeparableInteraction s;
  s.features = d;
  s.feature = [](std::span<const double> o, std::span<double> phi) {
    std::copy(o.begin(), o.end(), phi.begin());
  };
  s.combine = [g](std::span<const double> t, std::span<const double> S, double wsum,
                  std::span<double> out) {
    for (std::size_t c = 0; c < t.size(); ++c) out[c] = g * (wsum * t[c] - S[c]);
  };
  m.separable = s;
  m.statistic = SufficientStatistic::linear_mean;
  m.sigma = diagonal(std::vector<double>(d, sigma));
  m.lipschitz_c = std::max(0.0, -lam);
  m.lipschitz_gamma = std::abs(g);
  m.growth_k = mu != 0 ? 3 : 2;
  m.zero_interaction = g == 0;
  return m;
}

ModelSpec neural_field(const Params& p) {
  check_known(p, {"alpha", "lambda", "theta0", "gain", "sigma"}, "neural-field");
  ModelSpec m;
  m.name = "neural-field";
  m.dim = 1;
  double alpha = param(p, "alpha", 1.0), lambda = param(p, "lambda", 4.0);
  double th0 = param(p, "theta0", 0.5), gain = param(p, "gain", 1.0);
  auto f = [lambda, th0, gain](double u) { return gain / (1 + std::exp(-lambda * (u - th0))); };
  m.drift = [alpha](std::span<const double> t, double, std::span<double> out) {
    out[0] = -alpha * t[0];
  };
  m.interaction = [f](std::span<const double>, std::span<const double> o, std::span<double> out) {
    out[0] = f(o[0]);
  };
  SeparableInteraction s;
  s.features = 1;
  s.feature = [f](std::span<const double> o, std::span<double> phi) { phi[0] = f(o[0]); };
  s.combine = [](std::span<const double>, std::span<const double> S, double,
                 std::span<double> out) { out[0] = S[0]; };
  m.separable = s;
  m.sigma = {param(p, "sigma", 0.0)};
  m.lipschitz_c = std::max(0.0, -alpha);
  m.lipschitz_gamma = std::max(std::abs(gain), std::abs(gain * lambda) / 4);
  m.zero_interaction = gain == 0;
  return m;
}

ModelSpec ou(const Params& p) {
  check_known(p, {"decay", "sigma"}, "ou");
  ModelSpec m;
  m.name = "ou";
  m.dim = 1;
  double lam = param(p, "decay", 1.0);
  m.drift = [lam](std::span<const double> t, double, std::span<double> out) { out[0] = -lam * t[0]; };
  m.interaction = [](std::span<const double>, std::span<const double>, std::span<double> out) {
    out[0] = 0;
  };
  SeparableInteraction s;
  s.features = 0;
  s.feature = [](std::span<const double>, std::span<double>) {};
  s.combine = [](std::span<const double>, std::span<const double>, double, std::span<double> out) {
    out[0] = 0;
  };
  m.separable = s;
  m.sigma = {param(p, "sigma", 1.0)};
  m.lipschitz_c = std::max(0.0, -lam);
  m.zero_interaction = true;
  return m;
}

}  // namespace

bool ModelSpec::noiseless() const {
  return std::all_of(sigma.begin(), sigma.end(), [](double s) { return s == 0; });
}

ModelSpec builtin_model(const std::string& name, const Params& params) {
  if (name == "kuramoto") return kuramoto(params);
  if (name == "fhn") return fhn(params);
  if (name == "linear") return linear(params);
  if (name == "neural-field") return neural_field(params);
  if (name == "ou") return ou(params);
  throw PreconditionError("unknown model: " + name);
}

ProbeResult probe_constants(const ModelSpec& m, double radius, std::size_t samples,
                            std::uint64_t seed, const std::vector<bool>& vary) {
  if (samples < 2) throw PreconditionError("probe_constants: need at least 2 samples");
  const std::size_t d = m.dim;
  KeyedStream rng(hash_key({seed, stream::probe}));
  std::vector<double> a(d), b(d), a2(d), b2(d), g1(d), g2(d), c1(d), c2(d);
  ProbeResult r;
  auto draw = [&](std::vector<double>& v) {
    for (auto& x : v) x = radius * (2 * rng.uniform() - 1);
  };
  auto nearby = [&](const std::vector<double>& from, std::vector<double>& to) {
    double scale = radius * std::pow(10.0, -6 * rng.uniform());
    for (std::size_t c = 0; c < d; ++c) {
      bool moves = vary.empty() || vary[c];
      to[c] = from[c] + (moves ? scale * (2 * rng.uniform() - 1) : 0.0);
    }
  };
  for (std::size_t s = 0; s < samples; ++s) {
    draw(a);
    draw(b);
    bool local = s % 2 == 0;
    if (local) {
      nearby(a, a2);
      nearby(b, b2);
    } else {
      draw(a2);
      draw(b2);
      if (!vary.empty())
        for (std::size_t c = 0; c < d; ++c)
          if (!vary[c]) a2[c] = a[c], b2[c] = b[c];
    }
    m.interaction(a, b, g1);
    m.interaction(a2, b2, g2);
    double num = 0, den = 0, dc = 0, dd = 0;
    for (std::size_t c = 0; c < d; ++c) {
      num += (g1[c] - g2[c]) * (g1[c] - g2[c]);
    }
    std::vector<double> da(d), db(d);
    for (std::size_t c = 0; c < d; ++c) da[c] = a[c] - a2[c], db[c] = b[c] - b2[c];
    den = norm(da) + norm(db);
    if (den > 0) r.lipschitz_gamma = std::max(r.lipschitz_gamma, std::sqrt(num) / den);
    m.drift(a, 0.0, c1);
    m.drift(a2, 0.0, c2);
    for (std::size_t c = 0; c < d; ++c) {
      dc += da[c] * (c1[c] - c2[c]);
      dd += da[c] * da[c];
    }
    if (dd > 0) r.one_sided_c = std::max(r.one_sided_c, dc / dd);
    double na = norm(a), nb = norm(b);
    r.growth_c = std::max(r.growth_c, norm(c1) / (1 + std::pow(na, m.growth_k)));
    r.growth_gamma = std::max(r.growth_gamma, norm(g1) / (1 + na + nb));
  }
  const double slack = 1e-6;
  r.violates_gamma = r.lipschitz_gamma > m.lipschitz_gamma * (1 + slack) + slack ||
                     r.growth_gamma > std::max(m.lipschitz_gamma, 1e-300) * (1 + slack) + slack;
  r.violates_c = r.one_sided_c > m.lipschitz_c * (1 + slack) + slack;
  return r;
}

std::vector<double> interaction_mean(const ModelSpec& m, std::span<const double> theta,
                                     std::span<const double> ensemble) {
  if (!m.separable) return interaction_mean_generic(m, theta, ensemble);
  const std::size_t d = m.dim, M = ensemble.size() / d;
  if (M == 0) throw PreconditionError("interaction_mean: empty ensemble");
  const auto& s = *m.separable;
  std::vector<double> phi(s.features), agg(s.features, 0.0), out(d);
  for (std::size_t j = 0; j < M; ++j) {
    s.feature(ensemble.subspan(j * d, d), phi);
    for (std::size_t f = 0; f < s.features; ++f) agg[f] += phi[f];
  }
  for (auto& v : agg) v /= static_cast<double>(M);
  s.combine(theta, agg, 1.0, out);
  return out;
}

std::vector<double> interaction_mean_generic(const ModelSpec& m, std::span<const double> theta,
                                             std::span<const double> ensemble) {
  const std::size_t d = m.dim, M = ensemble.size() / d;
  if (M == 0) throw PreconditionError("interaction_mean: empty ensemble");
  std::vector<double> g(d), out(d, 0.0);
  for (std::size_t j = 0; j < M; ++j) {
    m.interaction(theta, ensemble.subspan(j * d, d), g);
    for (std::size_t c = 0; c < d; ++c) out[c] += g[c];
  }
  for (auto& v : out) v /= static_cast<double>(M);
  return out;
}

InitialLaw affine_point_law(double offset, double slope, std::size_t dim) {
  InitialLaw law;
  law.name = "point";
  law.dim = dim;
  law.point_mass = true;
  law.holder_constant = std::abs(slope);
  law.sampler = [offset, slope](std::span<const double> x, std::uint64_t, std::span<double> out) {
    for (auto& v : out) v = offset + slope * x[0];
  };
  law.mean = [offset, slope](std::span<const double> x, std::span<double> out) {
    for (auto& v : out) v = offset + slope * x[0];
  };
  return law;
}

InitialLaw uniform_law(double lo, double hi, std::size_t dim) {
  if (!(hi > lo)) throw PreconditionError("uniform_law: need hi > lo");
  InitialLaw law;
  law.name = "uniform";
  law.dim = dim;
  law.moment_bound_2k = std::pow(std::max(std::abs(lo), std::abs(hi)), 4) * static_cast<double>(dim * dim);
  law.sampler = [lo, hi](std::span<const double>, std::uint64_t key, std::span<double> out) {
    for (std::size_t c = 0; c < out.size(); ++c)
      out[c] = lo + (hi - lo) * to_unit(hash_key({key, static_cast<std::uint64_t>(c)}));
  };
  law.mean = [lo, hi](std::span<const double>, std::span<double> out) {
    for (auto& v : out) v = 0.5 * (lo + hi);
  };
  return law;
}

InitialLaw gaussian_law(double offset, double slope, double sd, std::size_t dim) {
  if (!(sd >= 0)) throw PreconditionError("gaussian_law: sd must be >= 0");
  InitialLaw law;
  law.name = "gaussian";
  law.dim = dim;
  law.holder_constant = std::abs(slope);
  law.sampler = [offset, slope, sd](std::span<const double> x, std::uint64_t key,
                                    std::span<double> out) {
    for (std::size_t c = 0; c < out.size(); ++c)
      out[c] = offset + slope * x[0] + sd * keyed_normal({key, static_cast<std::uint64_t>(c)});
  };
  law.mean = [offset, slope](std::span<const double> x, std::span<double> out) {
    for (auto& v : out) v = offset + slope * x[0];
  };
  return law;
}

}  // namespace wrgsim
