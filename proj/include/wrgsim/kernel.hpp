#pragma once
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wrgsim/quadrature.hpp"

namespace wrgsim {

enum class PositionScheme { deterministic, iid, midpoint, custom };
enum class ReferenceLaw { uniform_unit, gaussian };

struct PositionGrid {
  PositionScheme scheme = PositionScheme::deterministic;
  ReferenceLaw law = ReferenceLaw::uniform_unit;
  int dim = 1;
  std::vector<double> coords;  // size() * dim, row-major
  std::vector<double> weights;
  std::optional<std::uint64_t> seed;

  std::size_t size() const { return weights.size(); }
  double x(std::size_t i) const { return coords[i * dim]; }
  std::span<const double> point(std::size_t i) const {
    return {coords.data() + i * dim, static_cast<std::size_t>(dim)};
  }
};

PositionGrid make_positions(PositionScheme scheme, std::size_t n, int dim = 1,
                            std::optional<std::uint64_t> seed = std::nullopt,
                            ReferenceLaw law = ReferenceLaw::uniform_unit);
// Q midpoint nodes (q+1/2)/Q with weights 1/Q.
PositionGrid midpoint_grid(std::size_t Q);
PositionGrid custom_grid(std::vector<double> coords, std::vector<double> weights, int dim = 1);

// Kolmogorov-Smirnov distance of a 1-d grid to U[0,1].
double ks_uniform(const PositionGrid& g);

struct KernelInfo {
  std::optional<double> sup_bound;
  double singular_exponent = 0;  // L^chi-integrable iff exponent * chi < 1
  bool row_invariant = false;    // W(x,y) depends on y only
  std::optional<double> holder_constant, holder_exponent;
  std::function<double(double)> row_integral;  // closed form x -> int W(x,y) dy, if known
};

class Kernel {
 public:
  using Scalar = std::function<double(double, double)>;
  using Vector = std::function<double(std::span<const double>, std::span<const double>)>;

  Kernel() = default;
  Kernel(std::string name, Scalar f, KernelInfo info = {});
  Kernel(std::string name, int dim, Vector f, KernelInfo info = {});

  double operator()(double x, double y) const { return scalar_(x, y); }
  double operator()(std::span<const double> x, std::span<const double> y) const;
  // Raises KernelDomainError on negative or non-finite values.
  double checked(double x, double y) const;
  double checked(std::span<const double> x, std::span<const double> y) const;

  const std::string& name() const { return name_; }
  const KernelInfo& info() const { return info_; }
  int dim() const { return dim_; }

 private:
  std::string name_;
  int dim_ = 1;
  Scalar scalar_;
  Vector vector_;
  KernelInfo info_;
};

using Params = std::map<std::string, double>;

// Names: er | constant, one-minus-max, one-minus-xy, indicator, abs-power, power-y, power-xy,
// normalized (with base = another builtin name).
Kernel builtin_kernel(const std::string& name, const Params& params = {},
                      const std::string& base = "");
Kernel normalized_kernel(const Kernel& base);
// Kernel that is n x n step-constant on the cells of a unit-interval grid.
Kernel step_function_kernel(std::string name, std::size_t n, std::vector<double> values);

struct MicroKernel {
  Kernel generator;
  double rho = 1;
};

// rho = n^{-delta}
double rho_from_rule(std::size_t n, double delta);

double micro_prob(const MicroKernel& mk, double x, double y);
double micro_prob(const MicroKernel& mk, std::span<const double> x, std::span<const double> y);

enum class DilutionKind { uniform, degree_normalized };

struct Dilution {
  DilutionKind kind = DilutionKind::uniform;
  double rho = 1;
  std::vector<double> factor;  // kappa_i * rho
  double kappa_cap = 1;        // max kappa_i
  double w_cap = 1;            // max off-diagonal micro probability over the grid
  bool kappa_ge_one = true;
  bool cap_consistent = true;  // 1/kappa_cap <= w_cap <= 1

  std::size_t size() const { return factor.size(); }
  double kappa(std::size_t i) const { return factor[i] / rho; }
  std::vector<double> kappas() const;
};

Dilution make_dilution(DilutionKind kind, const MicroKernel& mk, const PositionGrid& grid,
                       int threads = 1);

double delta_n(const Kernel& W, const MicroKernel& mk, const Dilution& dil,
               const PositionGrid& grid, int threads = 1);

struct SnResult {
  double value = 0;
  std::size_t argmax_row = 0;
  bool converged = true;
  double failed_panel = -1;  // left end of the first unconverged cell
};
SnResult s_n(const Kernel& W, const PositionGrid& grid, const QuadOptions& opt = {},
             int threads = 1);

struct RowMoments {
  double sup_moment_r = 0;
  double inf_moment_1 = 0;
  bool divergent = false;          // sup row moment infinite
  bool violates_bounded_moment = false;
  bool violates_nondegenerate = false;
};
// Row moments evaluated at the given x values (default: 64 interior points).
RowMoments moment_Wr(const Kernel& W, int r, const std::vector<double>& xs = {},
                     const QuadOptions& opt = {});

struct LChiResult {
  double value = 0;
  bool divergent = false;
};
LChiResult lchi_norm(const Kernel& P, double chi, const QuadOptions& opt = {});

double grid_l2_residual(const Kernel& W, std::size_t n, int threads = 1);
double grid_l1_residual(const Kernel& W, std::size_t n, int threads = 1);
double holder_row_distance(const Kernel& W, double x, double y, const QuadOptions& opt = {});

// sum_{k<=n} k^{-alpha} - n^{1-alpha}/(1-alpha)
double riemann_offset(std::size_t n, double alpha);

}  // namespace wrgsim
