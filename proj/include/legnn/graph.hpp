#ifndef LEGNN_GRAPH_HPP
#define LEGNN_GRAPH_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "legnn/tensor.hpp"

namespace legnn {

// Immutable partially-labeled graph. Edges are undirected: any direction in
// the input files is dropped at load time and each edge is stored once as a
// canonical (min, max) pair, sorted and deduplicated; adjacency structures
// built from the graph materialize both directions.
struct Graph {
  std::size_t num_nodes = 0;    // M
  std::size_t num_classes = 0;  // C
  std::size_t feature_dim = 0;  // F
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  Tensor features;       // M x F
  Tensor labels_onehot;  // M x C; one-hot rows for labeled nodes, zero rows otherwise
  std::vector<std::size_t> train_nodes;  // sorted, pairwise disjoint with the others
  std::vector<std::size_t> valid_nodes;
  std::vector<std::size_t> test_nodes;

  // Class of a node, -1 when its label row is all-zero.
  int label_of(std::size_t node) const;
  bool is_labeled(std::size_t node) const { return label_of(node) >= 0; }
  std::vector<std::size_t> labeled_nodes() const;
  std::vector<std::size_t> class_counts_among(const std::vector<std::size_t>& nodes) const;

  // Checks the type invariants; throws FormatError describing the violation.
  void validate() const;
};

// Feature matrix for the label vertices; defaults to the C x C identity
// (one-hot label encodings).
struct LabelFeatures {
  Tensor features;  // C x F'

  static LabelFeatures one_hot(std::size_t num_classes);
};

// The (M+C)-vertex graph: block layout [[A, Yc], [Yc^T, 0]] where Yc keeps
// only the rows of Y whose node is in `connected`. The label-label block is
// structurally empty.
struct HeteroGraph {
  SparseMatrix adjacency;  // (M+C) x (M+C), all stored values 1.0
  std::vector<std::size_t> connected;  // sorted node ids with label edges
  std::size_t num_nodes = 0;
  std::size_t num_classes = 0;
};

Graph load_dataset(const std::string& dir);
void save_dataset(const std::string& dir, const Graph& g);

// connected must contain only labeled nodes.
HeteroGraph build_hetero_graph(const Graph& g, const std::vector<std::size_t>& connected);

// Fraction of edges whose endpoints share a label, over edges with both
// endpoints labeled. Throws UndefinedValueError when no edge qualifies.
double compute_homophily(const Graph& g);

// Adds exactly S new undirected edges between labeled nodes of different
// classes; rejects duplicates and self-loops. Deterministic given seed.
Graph generate_synthetic(const Graph& g, std::size_t num_new_edges, std::uint64_t seed);

}  // namespace legnn

#endif  // LEGNN_GRAPH_HPP
