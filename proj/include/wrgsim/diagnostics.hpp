#pragma once
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wrgsim/graph.hpp"
#include "wrgsim/kernel.hpp"
#include "wrgsim/meanfield.hpp"
#include "wrgsim/model.hpp"
#include "wrgsim/particles.hpp"

namespace wrgsim {

struct Estimate {
  double value = 0;
  double stderr_ = 0;
};

// Named scalars plus bound flags, serialized as JSON.
struct DiagnosticsReport {
  struct Entry {
    std::string name;
    double value = 0, stderr_ = 0;
  };
  struct Flag {
    std::string name, inequality;
    bool pass = true;
  };
  std::map<std::string, std::string> provenance;
  std::vector<Entry> entries;
  std::vector<Flag> flags;

  // Throws PreconditionError on a non-finite value.
  void add(const std::string& name, double value, double stderr_ = 0);
  void flag(const std::string& name, const std::string& inequality, bool pass);
  bool all_pass() const;
  std::string to_json() const;
};

// Order-statistics coupling for equal sizes, quantile-function integral otherwise.
double w1_1d(std::span<const double> a, std::span<const double> b);

struct W1Result {
  double value = 0;
  bool sliced = false;
};
// Samples are row-major (count x dim). Exact assignment up to 256 points per side with
// equal counts, sliced estimate (`projections` keyed directions) otherwise.
W1Result w1_nd(std::span<const double> a, std::span<const double> b, std::size_t dim,
               std::uint64_t seed = 0, std::size_t projections = 64);
// Minimum-cost perfect matching on an n x n cost matrix (row-major).
double assignment_cost(const std::vector<double>& cost, std::size_t n);

struct PoolReport {
  double max = 0, max_stderr = 0;
  double p95 = 0, p95_stderr = 0;
  std::size_t argmax = 0;
  std::vector<double> per_index, per_index_stderr;
  std::size_t replicas = 0;
};

// sup_i E sup_s |theta_i - copy_i|^2 over matched replicas.
PoolReport propagation_error(const std::vector<Trajectory>& system,
                             const std::vector<Trajectory>& copies);

using TestFunction = std::function<double(std::span<const double> theta, double x)>;

struct EmpiricalReport {
  Estimate error;        // sup over common times of E |<nu_n - nu, phi>|^2
  double worst_time = 0;
  double lipschitz_theta = 0;  // sampled estimates of the declared growth constants
  double growth = 0;
};
// Needs mf snapshots at the common times.
EmpiricalReport empirical_measure_error(const std::vector<Trajectory>& system,
                                        const MeanFieldSolution& mf, const TestFunction& phi,
                                        std::uint64_t check_seed = 0);

// Unit-interval trajectory as a profile on its own positions.
ProfileField profile_from_trajectory(const Trajectory& tr);
// sup over common times of the L^k(I) norm of |theta_n(., t) - psi(., t)|.
double profile_error(const Trajectory& tr, const ProfileField& psi, double k);

struct TestDictionary {
  std::string name;
  std::vector<std::function<double(double)>> functions;
};
// {1, cos(2 pi k x), sin(2 pi k x) : k <= K}
TestDictionary trig_dictionary(std::size_t K);
// K smooth bumps with equal radii, centres evenly spread over [-half_width, half_width].
TestDictionary bump_dictionary(std::size_t K, double half_width);

struct IdentificationReport {
  double residual = 0;        // max over J, t, component
  double stderr_at_max = 0;
  double max_stderr = 0;      // Monte Carlo SE of the node-mean side, max over J, t
  std::size_t worst_function = 0;
  double worst_time = 0;
};
// weights: integration weights for the x-integral (default: quadrature weights).
IdentificationReport identification_residual(const ProfileField& psi, const MeanFieldSolution& mf,
                                             const TestDictionary& dict,
                                             const std::vector<double>& weights = {});

// [Gamma]_u(theta, node q) at mean-field step s.
std::vector<double> gamma_avg(const MeanFieldSolution& mf, const ModelSpec& m,
                              std::span<const double> theta, std::size_t q, std::size_t s);

struct UpsilonResult {
  double value = 0;
  double bound = 0;  // T * G^2 * sup_u E_x[(1+|theta|+E_y|.|)(1+|theta|+E_z|.|)]
};
// growth: G with |Gamma(a,b)| <= G (1+|a|+|b|), e.g. from probe_constants.
UpsilonResult upsilon(const MeanFieldSolution& mf, const ModelSpec& m, std::size_t x,
                      std::size_t y, std::size_t z, double T, double growth = 0);

struct EpsilonTerms {
  double e1 = 0, e2 = 0, e3 = 0;
  std::size_t argmax1 = 0, argmax2 = 0, argmax3 = 0;
};
// Grid positions must coincide with mf quadrature nodes.
EpsilonTerms epsilon_terms(const MeanFieldSolution& mf, const ModelSpec& m, const Kernel& W,
                           const PositionGrid& grid, double T);

PoolReport d_nt_estimate(const RandomGraph& g, const MicroKernel& mk,
                         const MeanFieldSolution& mf, const ModelSpec& m,
                         const std::vector<Trajectory>& copies);

struct HolderReport {
  double value = 0;  // lower bound of the Hoelder-ball distance
  std::string dictionary;
  std::size_t argmax = 0;
};
// Unit interval. Dictionary: sine/cosine pairs up to frequency max(1, K/4), then dyadic hats
// up to K functions, each normalized by an upper bound of its Hoelder norm.
HolderReport d_holder(const PositionGrid& a, const PositionGrid& b, double iota, std::size_t K);
// Same, against Lebesgue measure on [0,1] (exact integrals of the dictionary).
HolderReport d_holder_lebesgue(const PositionGrid& a, double iota, std::size_t K);

double bennett_B(double u);

struct ConcentrationResult {
  double epsilon = 0;
  double empirical_tail = 0;
  double bound = 0;
  bool pass = false;
  std::size_t trials = 0;
};
ConcentrationResult concentration_check(double kappa_n, double w_n, std::size_t n,
                                        const std::vector<double>& p,
                                        const std::vector<double>& v, std::size_t trials, std::uint64_t seed, int threads = 1);

// p in [0,1] (0 log 0 = 0), q in (0,1).
double relative_entropy(double p, double q);

struct EntropyReport {
  double entropy = 0;
  double lhs = 0, rhs = 0;  // H((x+v)/(1+v) | v/(1+v)) and x^2/(2v) B(x/v)
  bool inequality_holds = false;
  double lower_tail_bound = 0, upper_tail_bound = 0;
};
EntropyReport entropy_bounds(double p, double q, double x, double v, double lambda, double nu,
                             double a);

struct ChungLuCheck {
  double lower_tail = 0, upper_tail = 0;
  double lower_bound = 0, upper_bound = 0;
  bool pass = false;
};
// Monte Carlo check of both Bernoulli-sum tails against their bounds; passes when each
// empirical tail is within three binomial standard errors of its bound.
ChungLuCheck chung_lu_check(const std::vector<double>& a, const std::vector<double>& p,
                            double lambda, std::size_t trials, std::uint64_t seed);

struct MomentReport {
  double value = 0, stderr_ = 0;
  std::size_t argmax = 0;
};
MomentReport moment_check(const std::vector<Trajectory>& runs, int two_k);
// Relative growth of the fine-step moment over the coarse one.
double moment_growth(const MomentReport& coarse, const MomentReport& fine);

}  // namespace wrgsim
