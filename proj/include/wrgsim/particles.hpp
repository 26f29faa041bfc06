#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wrgsim/graph.hpp"
#include "wrgsim/kernel.hpp"
#include "wrgsim/model.hpp"

namespace wrgsim {

struct MeanFieldSolution;

// Keyed Gaussian increments. With substeps = r, the increment of step s is the sum of r
// finer draws keyed s*r .. s*r+r-1, so a run at h with r = 2 shares its Brownian path with
// a run at h/2 and r = 1.
struct NoiseBath {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  int substeps = 1;

  double increment(std::uint64_t replica, std::uint64_t particle, std::uint64_t step,
                   std::uint64_t component, double h) const;
  std::uint64_t init_key(std::uint64_t replica, std::uint64_t particle) const;
  std::uint64_t disorder_key(std::uint64_t replica, std::uint64_t particle) const;
};

struct Trajectory {
  std::size_t n = 0, dim = 1;
  double h = 0;
  std::size_t steps = 0;   // time grid t_s = s*h, s = 0..steps
  std::size_t stride = 1;  // stored every stride steps
  std::vector<double> states;  // (steps/stride + 1) x n x dim
  std::vector<double> positions;
  bool unit_grid = false;
  std::uint64_t seed = 0, noise_stream = 0, replica = 0;
  std::string model_name, system;

  std::size_t stored() const { return steps / stride + 1; }
  double time(std::size_t stored_index) const {
    return static_cast<double>(stored_index * stride) * h;
  }
  const double* state(std::size_t stored_index, std::size_t i) const {
    return states.data() + (stored_index * n + i) * dim;
  }
};

struct SimOptions {
  int threads = 1;
  std::size_t stride = 1;
};

std::size_t step_count(double T, double h);

Trajectory simulate_graph_system(const RandomGraph& g, const ModelSpec& m, const InitialLaw& init,
                                 double T, double h, const NoiseBath& bath,
                                 std::uint64_t replica, const SimOptions& opt = {});
Trajectory simulate_w_system(const Kernel& W, const PositionGrid& grid, const ModelSpec& m,
                             const InitialLaw& init, double T, double h, const NoiseBath& bath,
                             std::uint64_t replica, const SimOptions& opt = {});
Trajectory simulate_coupled_copies(const MeanFieldSolution& mf, const Kernel& W,
                                   const PositionGrid& grid, const ModelSpec& m,
                                   const InitialLaw& init, double T, double h,
                                   const NoiseBath& bath, std::uint64_t replica,
                                   const SimOptions& opt = {});

// State of particle floor(n x) at time t (on the stored grid).
std::vector<double> spatial_profile(const Trajectory& tr, double x, double t);

void write_trajectory_csv(const Trajectory& tr, std::ostream& os, std::size_t stride = 1);

}  // namespace wrgsim
