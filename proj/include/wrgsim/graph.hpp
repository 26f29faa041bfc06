#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wrgsim/kernel.hpp"

namespace wrgsim {

// Square bit matrix stored as packed 64-bit rows.
class BitMatrix {
 public:
  BitMatrix() = default;
  explicit BitMatrix(std::size_t n) : n_(n), words_((n + 63) / 64), bits_(n * words_, 0) {}

  std::size_t size() const { return n_; }
  bool get(std::size_t i, std::size_t j) const {
    return (bits_[i * words_ + j / 64] >> (j % 64)) & 1u;
  }
  void set(std::size_t i, std::size_t j, bool v = true) {
    auto& w = bits_[i * words_ + j / 64];
    std::uint64_t m = std::uint64_t{1} << (j % 64);
    w = v ? (w | m) : (w & ~m);
  }
  std::size_t row_count(std::size_t i) const;
  const std::uint64_t* row(std::size_t i) const { return bits_.data() + i * words_; }
  std::size_t words_per_row() const { return words_; }
  bool operator==(const BitMatrix&) const = default;

  // Calls fn(j) for every set bit of row i in ascending j.
  template <class Fn>
  void for_each(std::size_t i, Fn&& fn) const {
    const std::uint64_t* r = row(i);
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t bits = r[w];
      while (bits) {
        int b = __builtin_ctzll(bits);
        fn(w * 64 + static_cast<std::size_t>(b));
        bits &= bits - 1;
      }
    }
  }

 private:
  std::size_t n_ = 0, words_ = 0;
  std::vector<std::uint64_t> bits_;
};

struct RandomGraph {
  std::size_t n = 0;
  BitMatrix adjacency;
  std::vector<double> kappa;
  PositionGrid grid;
  std::uint64_t seed = 0;
  double rho = 1;
  std::string kernel_name;

  bool edge(std::size_t i, std::size_t j) const { return adjacency.get(i, j); }
  std::size_t edge_count() const;
};

RandomGraph sample_graph(const MicroKernel& mk, const std::vector<double>& kappa,
                         const PositionGrid& grid, std::uint64_t seed, int threads = 1);
// Symmetrizes nothing: the caller supplies a symmetric zero-diagonal adjacency.
RandomGraph graph_from_adjacency(BitMatrix adjacency, std::vector<double> kappa,
                                 PositionGrid grid);
RandomGraph complete_graph(std::size_t n, double kappa = 1.0);

double b_n(const RandomGraph& g);

struct RenormalizedGraph {
  std::size_t n = 0;
  std::vector<double> weights;  // n*n, entry (i,j) is the weight of i -> j
  std::vector<double> node_weights;
  double weight(std::size_t i, std::size_t j) const { return weights[i * n + j]; }
};
RenormalizedGraph renormalize(const RandomGraph& g);

struct DegreeStats {
  std::size_t min_degree = 0, max_degree = 0;
  double mean_degree = 0;
  std::vector<std::size_t> degrees;
  std::vector<double> renormalized_row_means;  // kappa_i deg_i / n
};
DegreeStats degree_stats(const RandomGraph& g);

// "# n=.. seed=.. kernel=.." then one "i j" line per edge with i < j.
void export_edges(const RandomGraph& g, std::ostream& os);

}  // namespace wrgsim
