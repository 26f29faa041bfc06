#pragma once
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wrgsim/kernel.hpp"

namespace wrgsim {

enum class SufficientStatistic { none, linear_mean, circular_order_parameter };

using DriftFn = std::function<void(std::span<const double> theta, double disorder,
                                   std::span<double> out)>;
using PairFn = std::function<void(std::span<const double> theta, std::span<const double> other,
                                  std::span<double> out)>;

// Gamma(theta, other) = combine(theta, phi(other), 1), with combine linear in its
// aggregate arguments, so weighted sums over neighbours reduce to
// combine(theta, sum_j w_j phi(theta_j), sum_j w_j).
struct SeparableInteraction {
  std::size_t features = 0;
  std::function<void(std::span<const double> other, std::span<double> phi)> feature;
  std::function<void(std::span<const double> theta, std::span<const double> aggregate,
                     double weight_sum, std::span<double> out)>
      combine;
};

struct ModelSpec {
  std::string name;
  std::size_t dim = 1;
  DriftFn drift;
  PairFn interaction;
  std::vector<double> sigma;  // dim x dim, row-major
  double lipschitz_c = 0;     // one-sided
  double lipschitz_gamma = 0;
  int growth_k = 2;
  SufficientStatistic statistic = SufficientStatistic::none;
  std::optional<SeparableInteraction> separable;
  bool zero_interaction = false;
  // Per-particle quenched parameter drawn from a hash; absent means disorder 0.
  std::function<double(std::uint64_t)> disorder;

  bool noiseless() const;
};

// kuramoto | fhn | linear | neural-field | ou
ModelSpec builtin_model(const std::string& name, const Params& params = {});

struct ProbeResult {
  double lipschitz_gamma = 0;
  double one_sided_c = -INFINITY;
  double growth_c = 0;      // max |c| / (1 + |theta|^k)
  double growth_gamma = 0;  // max |Gamma| / (1 + |theta| + |other|)
  bool violates_gamma = false;
  bool violates_c = false;
};
// vary: which components may differ inside a sampled pair (empty = all).
ProbeResult probe_constants(const ModelSpec& m, double radius, std::size_t samples,
                            std::uint64_t seed, const std::vector<bool>& vary = {});

// [Gamma](theta) against the empirical law of `ensemble` (M x dim, row-major).
std::vector<double> interaction_mean(const ModelSpec& m, std::span<const double> theta,
                                     std::span<const double> ensemble);
std::vector<double> interaction_mean_generic(const ModelSpec& m, std::span<const double> theta,
                                             std::span<const double> ensemble);

struct InitialLaw {
  std::string name;
  std::size_t dim = 1;
  std::function<void(std::span<const double> x, std::uint64_t key, std::span<double> out)>
      sampler;
  std::function<void(std::span<const double> x, std::span<double> out)> mean;  // optional
  double holder_constant = 0, holder_exponent = 1;
  double moment_bound_2k = INFINITY;
  bool point_mass = false;
};

// theta = offset + slope * x in every component
InitialLaw affine_point_law(double offset, double slope, std::size_t dim = 1);
InitialLaw uniform_law(double lo, double hi, std::size_t dim = 1);
// N(offset + slope * x, sd^2) in every component
InitialLaw gaussian_law(double offset, double slope, double sd, std::size_t dim = 1);

}  // namespace wrgsim
