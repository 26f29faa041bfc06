#pragma once
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "wrgsim/kernel.hpp"
#include "wrgsim/model.hpp"

namespace wrgsim {

// Law flow nu_t^x on Q quadrature nodes, M particles per node.
struct MeanFieldSolution {
  PositionGrid quad;
  std::size_t M = 0, dim = 1, features = 0;
  double h = 0;
  std::size_t steps = 0;
  std::string model_name;

  std::vector<double> feature_means;   // (steps+1) x Q x features
  std::vector<double> means;           // (steps+1) x Q x dim
  std::vector<double> second_moments;  // (steps+1) x Q x dim, E theta_c^2
  std::vector<double> moment_2k;       // (steps+1) x Q, E |theta|^{2k}
  int gap_exponent = 4;

  std::size_t snapshot_stride = 0;  // 0: ensembles not retained
  std::vector<double> snapshots;    // (steps/stride+1) x Q x M x dim

  std::size_t sweeps = 0;
  std::vector<double> gaps;  // gaps[k] compares iterate k+2 with iterate k+1 (last window)
  std::vector<double> window_final_gaps;
  double final_gap = 0;
  bool converged = false;

  std::size_t Q() const { return quad.size(); }
  const double* mean(std::size_t s, std::size_t q) const { return &means[(s * Q() + q) * dim]; }
  const double* feature(std::size_t s, std::size_t q) const {
    return feature_means.data() + (s * Q() + q) * features;
  }
  bool has_snapshot(std::size_t s) const {
    return snapshot_stride > 0 && s % snapshot_stride == 0 && s <= steps;
  }
  const double* ensemble(std::size_t s, std::size_t q) const {
    return snapshots.data() + ((s / snapshot_stride) * Q() + q) * M * dim;
  }
  std::size_t nearest_node(double x) const;
};

struct PicardOptions {
  double tol = 1e-8;
  int max_iter = 50;
  std::uint64_t seed = 0;
  int threads = 1;
  double window = 1.0;
  int gap_exponent = 0;  // 0: 4, or 2k = 6 for cubic drifts
  std::size_t snapshot_stride = 0;
  std::size_t max_ensemble_doubles = 40'000'000;
};

MeanFieldSolution picard_solve(const ModelSpec& m, const Kernel& W, const PositionGrid& quad,
                               std::size_t M, const InitialLaw& init, double T, double h,
                               const PicardOptions& opt = {});

struct ProfileField {
  PositionGrid quad;
  double h = 0;
  std::size_t steps = 0, dim = 1;
  std::vector<double> values;  // (steps+1) x Q x dim
  double self_convergence = -1;  // max |psi_h - psi_{h/2}|, negative when not computed

  std::size_t Q() const { return quad.size(); }
  const double* at(std::size_t s, std::size_t q) const { return &values[(s * Q() + q) * dim]; }
  double* at(std::size_t s, std::size_t q) { return &values[(s * Q() + q) * dim]; }
};

ProfileField heat_solve(const ModelSpec& m, const Kernel& W, const PositionGrid& quad,
                        const std::vector<double>& psi0, double T, double h, int threads = 1,
                        bool self_check = false);

// Profile of node means of a mean-field solution, in ProfileField form.
ProfileField mean_profile(const MeanFieldSolution& mf);

struct Psi0 {
  std::vector<double> values;  // Q x dim
  std::vector<double> stderr_;
  bool sampled = false;
};
Psi0 psi0_from_init(const InitialLaw& init, const PositionGrid& quad, std::size_t samples = 0,
                    std::uint64_t seed = 0);

struct UniquenessReport {
  double discrepancy = 0;       // (h,Q) vs (h/2,2Q)
  double discrepancy_fine = 0;  // (h/2,2Q) vs (h/4,4Q)
  double ratio = 0;
  double order = 0;
};
// Runs heat_solve on nested right-endpoint grids and compares on the coarse nodes.
UniquenessReport uniqueness_probe(const ModelSpec& m, const Kernel& W,
                                  const std::function<void(double, std::span<double>)>& psi0,
                                  double T, double h, std::size_t Q, int threads = 1);

struct TruncatedDomain {
  PositionGrid quad;  // midpoint nodes of [-M,M]^p with uniform weights
  Kernel kernel;      // W(x,y) * l_M(y) * |B_M|
  double mass = 0;    // l(B_M)
  double half_width = 0;
  double volume = 0;
  std::vector<double> density;          // l_M at the nodes
  std::vector<double> measure_weights;  // l_M-quadrature weights at the nodes
};
// density: one-dimensional density, taken as a product over the p coordinates.
TruncatedDomain truncate_domain(const std::function<double(double)>& density, const Kernel& W,
                                double half_width, std::size_t nodes_per_dim, int dim = 1);

void write_profile_csv(const ProfileField& f, std::ostream& os, std::size_t stride = 1);

}  // namespace wrgsim
