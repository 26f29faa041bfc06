#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wrgsim/graph.hpp"
#include "wrgsim/kernel.hpp"

namespace wrgsim {

// n x n cell values on intervals of the given lengths.
struct StepKernel {
  std::size_t n = 0;
  std::vector<double> values;  // row-major
  std::vector<double> lengths;

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  bool uniform() const;
};

// Validates lengths (nonnegative, summing to 1 within 1e-12).
StepKernel make_step_kernel(std::vector<double> values, std::vector<double> lengths);
StepKernel uniform_step_kernel(std::size_t n, std::vector<double> values);
StepKernel difference(const StepKernel& a, const StepKernel& b);

enum class CutMode { exact, heuristic };
CutMode parse_cut_mode(const std::string& s);
const char* to_string(CutMode m);

struct CutOptions {
  CutMode mode = CutMode::exact;
  std::uint64_t seed = 0;
  std::size_t restarts = 64;
  int threads = 1;
};

struct CutResult {
  double value = 0;
  CutMode mode = CutMode::exact;
  bool lower_bound = false;  // heuristic results only bound the norm from below
};

constexpr std::size_t kMaxExactCut = 22;

CutResult cut_norm(const StepKernel& A, const CutOptions& opt = {});
CutResult infty_one_norm(const StepKernel& A, const CutOptions& opt = {});

// sum of l_i l_j |A_ij - B_ij|; same cells required.
double d1_distance(const StepKernel& a, const StepKernel& b);
// Cellwise gauss x gauss quadrature of |A - B| on a resolution x resolution grid of [0,1]^2.
double d1_distance(const Kernel& a, const Kernel& b, std::size_t resolution, int gauss = 4);

// Cell averages of W on the n x n uniform cells.
StepKernel average_kernel(const Kernel& W, std::size_t n, int gauss = 4, int threads = 1);
// Cells carry the weight kappa_i xi_ij.
StepKernel graph_step_kernel(const RenormalizedGraph& g);

CutResult cut_distance_graph_kernel(const RenormalizedGraph& g, const Kernel& W,
                                    const CutOptions& opt = {}, int gauss = 4);

struct AuxReport {
  StepKernel H1, H2;  // kappa_i W_n(x_i,x_j) and W(x_i,x_j), zero diagonal
  double graph_h1 = 0, h1_h2 = 0, h2_w = 0;
  double delta = 0;  // sup_i (1/n) sum_{j != i} |H1_ij - H2_ij|
  bool middle_within_delta = true;
  CutMode mode = CutMode::exact;
};
AuxReport aux_graphs(const RandomGraph& g, const MicroKernel& mk, const Kernel& W,
                     const CutOptions& opt = {}, int gauss = 4);

// First row: lengths; then n rows of cell values.
void write_step_kernel_csv(const StepKernel& k, std::ostream& os);
StepKernel read_step_kernel_csv(std::istream& is);

}  // namespace wrgsim
