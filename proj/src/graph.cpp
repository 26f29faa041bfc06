#include "wrgsim/graph.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "wrgsim/errors.hpp"
#include "wrgsim/parallel.hpp"
#include "wrgsim/rng.hpp"

namespace wrgsim {

std::size_t BitMatrix::row_count(std::size_t i) const {
  std::size_t c = 0;
  const std::uint64_t* r = row(i);
  for (std::size_t w = 0; w < words_; ++w) c += static_cast<std::size_t>(__builtin_popcountll(r[w]));
  return c;
}

std::size_t RandomGraph::edge_count() const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += adjacency.row_count(i);
  return c / 2;
}

RandomGraph sample_graph(const MicroKernel& mk, const std::vector<double>& kappa,
                         const PositionGrid& grid, std::uint64_t seed, int threads) {
  const std::size_t n = grid.size();
  if (kappa.size() != n) throw PreconditionError("sample_graph: kappa and grid sizes differ");
  RandomGraph g;
  g.n = n;
  g.adjacency = BitMatrix(n);
  g.kappa = kappa;
  g.grid = grid;
  g.seed = seed;
  g.rho = mk.rho;
  g.kernel_name = mk.generator.name();
  // Upper triangle first (each row owns its bits), then mirror.
  parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double p = micro_prob(mk, grid.point(i), grid.point(j));
        if (p <= 0) continue;
        double u = keyed_uniform({seed, stream::edges, static_cast<std::uint64_t>(i),
                                  static_cast<std::uint64_t>(j)});
        if (u < p) g.adjacency.set(i, j);
      }
  });
  parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j)
      for (std::size_t i = 0; i < j; ++i)
        if (g.adjacency.get(i, j)) g.adjacency.set(j, i);
  });
  return g;
}

RandomGraph graph_from_adjacency(BitMatrix adjacency, std::vector<double> kappa,
                                 PositionGrid grid) {
  const std::size_t n = adjacency.size();
  if (kappa.size() != n || grid.size() != n)
    throw PreconditionError("graph_from_adjacency: size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (adjacency.get(i, i)) throw PreconditionError("graph_from_adjacency: nonzero diagonal");
    for (std::size_t j = i + 1; j < n; ++j)
      if (adjacency.get(i, j) != adjacency.get(j, i))
        throw PreconditionError("graph_from_adjacency: adjacency not symmetric");
  }
  RandomGraph g;
  g.n = n;
  g.adjacency = std::move(adjacency);
  g.kappa = std::move(kappa);
  g.grid = std::move(grid);
  g.kernel_name = "injected";
  return g;
}

RandomGraph complete_graph(std::size_t n, double kappa) {
  BitMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) a.set(i, j);
  auto g = graph_from_adjacency(std::move(a), std::vector<double>(n, kappa),
                                make_positions(PositionScheme::deterministic, n));
  g.kernel_name = "complete";
  return g;
}

double b_n(const RandomGraph& g) {
  double best = 0;
  for (std::size_t i = 0; i < g.n; ++i)
    best = std::max(best, std::abs(g.kappa[i] * static_cast<double>(g.adjacency.row_count(i)) /
                                   static_cast<double>(g.n)));
  return best;
}

RenormalizedGraph renormalize(const RandomGraph& g) {
  RenormalizedGraph r;
  r.n = g.n;
  r.weights.assign(g.n * g.n, 0.0);
  r.node_weights.assign(g.n, 1.0 / static_cast<double>(g.n));
  for (std::size_t i = 0; i < g.n; ++i)
    g.adjacency.for_each(i, [&](std::size_t j) { r.weights[i * g.n + j] = g.kappa[i]; });
  return r;
}

DegreeStats degree_stats(const RandomGraph& g) {
  DegreeStats s;
  s.degrees.resize(g.n);
  s.renormalized_row_means.resize(g.n);
  double total = 0;
  for (std::size_t i = 0; i < g.n; ++i) {
    s.degrees[i] = g.adjacency.row_count(i);
    total += static_cast<double>(s.degrees[i]);
    s.renormalized_row_means[i] =
        g.kappa[i] * static_cast<double>(s.degrees[i]) / static_cast<double>(g.n);
  }
  if (g.n > 0) {
    s.min_degree = *std::min_element(s.degrees.begin(), s.degrees.end());
    s.max_degree = *std::max_element(s.degrees.begin(), s.degrees.end());
    s.mean_degree = total / static_cast<double>(g.n);
  }
  return s;
}

void export_edges(const RandomGraph& g, std::ostream& os) {
  os << "# n=" << g.n << " seed=" << g.seed << " kernel=" << g.kernel_name << "\n";
  for (std::size_t i = 0; i < g.n; ++i)
    g.adjacency.for_each(i, [&](std::size_t j) {
      if (i < j) os << i << ' ' << j << '\n';
    });
}

}  // namespace wrgsim
