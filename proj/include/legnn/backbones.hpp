#ifndef LEGNN_BACKBONES_HPP
#define LEGNN_BACKBONES_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "legnn/graph.hpp"
#include "legnn/ops.hpp"
#include "legnn/rng.hpp"

namespace legnn {

enum class BackboneKind { gcn, sage, gat };
enum class Method { vanilla, concat, addition, legnn };
enum class Mode { train, eval };

struct BackboneConfig {
  BackboneKind kind = BackboneKind::gcn;
  std::size_t layers = 2;       // K
  std::size_t hidden_dim = 16;  // D
  std::size_t heads = 1;        // gat only
  std::vector<std::size_t> fanouts;  // sage only; one entry per layer
  bool residual = true;
  double dropout = 0.0;
  std::optional<Activation> activation;  // defaults per kind when unset
  double attention_slope = 0.2;          // LeakyReLU slope in attention logits

  Activation effective_activation() const;
  void validate() const;
};

// One message-passing layer's trainable state. Attention vectors are present
// only for GAT, one per head.
struct LayerParams {
  Tensor w_node;   // D x D
  Tensor w_label;  // D x D
  std::vector<Tensor> attn_node;   // D x 1 each
  std::vector<Tensor> attn_label;  // D x 1 each
};

struct ModelParams {
  Tensor proj_node;    // F_in x D
  Tensor proj_label;   // F' x D
  std::vector<LayerParams> layers;
  Tensor w_pred;       // D x C
  Tensor b_pred;       // 1 x C
  Tensor w_label_aug;  // C x F, used by the addition baseline only

  // Glorot-style init, deterministic given the rng state. All tensors are
  // marked requires_grad.
  static ModelParams init(std::size_t node_in_dim, std::size_t label_in_dim,
                          std::size_t node_feat_dim, std::size_t num_classes,
                          const BackboneConfig& cfg, Rng& rng);

  std::vector<Tensor> all_tensors() const;
  // Zeroes the label-side parameters (projection, per-layer transforms,
  // attention); used by the vanilla-reduction checks.
  void zero_label_path();
  ModelParams clone() const;
};

struct ForwardContext {
  Mode mode = Mode::eval;
  Rng* dropout_rng = nullptr;      // needed in train mode when dropout > 0
  std::uint64_t sample_seed = 0;   // SAGE neighbor sampling stream (train mode)
};

struct ForwardResult {
  Tensor z_nodes;   // M x D
  Tensor z_labels;  // C x D (0 x D for node-only methods)
  Tensor logits;    // M x C
  Tensor probs;     // M x C, rows sum to 1
};

// H^0 = [X P_N ; E P_L], the dimension-aligned stacked input.
Tensor project_inputs(const Tensor& x, const Tensor& e, const ModelParams& params);

// Symmetric GCN normalization with self-loops: D^{-1/2} (A + I) D^{-1/2}
// where D is the degree of A + I. Vertices without edges end up with a lone
// unit self-loop entry.
SparseMatrix gcn_normalize(const SparseMatrix& adjacency);
SparseMatrix gcn_normalize(const HeteroGraph& h);

// Row-mean normalization (entries 1/deg); empty rows stay empty.
SparseMatrix mean_normalize(const SparseMatrix& adjacency);

// Per-layer uniform neighbor sampling without replacement, at most
// fanouts[k] kept per destination, mean-normalized. Each (seed, layer,
// vertex) triple seeds an independent stream, so a vertex's draw depends
// only on its own neighbor list.
std::vector<SparseMatrix> sample_neighbors(const SparseMatrix& adjacency,
                                           const std::vector<std::size_t>& fanouts,
                                           std::uint64_t seed);
std::vector<SparseMatrix> sample_neighbors(const HeteroGraph& h,
                                           const std::vector<std::size_t>& fanouts,
                                           std::uint64_t seed);

// One hetero layer over a constant adjacency (GCN/SAGE): type-specific
// transforms on node and label rows, sparse aggregation, optional residual,
// then activation. Rows [0, node_count) are nodes, the rest labels; pass
// node_count == h.rows() for a node-only layer.
Tensor hetero_layer_forward(const Tensor& h, const SparseMatrix& adjacency,
                            const LayerParams& lp, std::size_t node_count,
                            const BackboneConfig& cfg);

// Attention weights over the stored entries of `pattern` given the already
// transformed features; per-destination softmax, heads averaged. Output is
// nnz x 1 and differentiable through the attention vectors and features.
Tensor gat_attention_values(const Tensor& transformed, const SparseMatrix& pattern,
                            const LayerParams& lp, std::size_t node_count,
                            double leaky_slope);

// Attention-valued adjacency for inspection: softmaxed incoming-edge weights
// of every destination sum to 1 (isolated destinations keep an empty row).
SparseMatrix gat_edge_weights(const Tensor& h, const HeteroGraph& hg,
                              const LayerParams& lp, const BackboneConfig& cfg);

// Full label-enhanced forward pass over build_hetero_graph(g, connected).
ForwardResult forward(const Graph& g, const LabelFeatures& lf,
                      const std::vector<std::size_t>& connected,
                      const ModelParams& params, const BackboneConfig& cfg,
                      const ForwardContext& ctx);

// Node-only forward for the vanilla/concat/addition methods. `visible` is
// the set of nodes whose labels may appear in the augmented features; it is
// ignored by vanilla.
ForwardResult forward_baseline(const Graph& g, Method method,
                               const std::vector<std::size_t>& visible,
                               const ModelParams& params, const BackboneConfig& cfg,
                               const ForwardContext& ctx);

// Dispatches on method: `labeled_visible` is the label-connected set for
// legnn and the feature-visibility set for concat/addition.
ForwardResult run_method_forward(const Graph& g, const LabelFeatures& lf,
                                 Method method,
                                 const std::vector<std::size_t>& labeled_visible,
                                 const ModelParams& params,
                                 const BackboneConfig& cfg,
                                 const ForwardContext& ctx);

// M x C matrix equal to Y on `visible` rows and zero elsewhere.
Tensor visible_labels(const Graph& g, const std::vector<std::size_t>& visible);

// X || Y_visible along columns.
Tensor augment_concat(const Tensor& x, const Tensor& y_visible);

// X + Y_visible * W; differentiable through W.
Tensor augment_addition(const Tensor& x, const Tensor& y_visible, const Tensor& w_label_aug);

// Adjacency over the node block only (both directions of every edge).
SparseMatrix node_adjacency(const Graph& g);

Method method_from_string(const std::string& s);
std::string to_string(Method m);
BackboneKind backbone_from_string(const std::string& s);
std::string to_string(BackboneKind k);

}  // namespace legnn

#endif  // LEGNN_BACKBONES_HPP
