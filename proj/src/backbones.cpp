#include "legnn/backbones.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace legnn {

Activation BackboneConfig::effective_activation() const {
  if (activation) return *activation;
  return kind == BackboneKind::gat ? Activation::elu() : Activation::relu();
}

void BackboneConfig::validate() const {
  if (layers < 1) throw ContractError("backbone: need at least one layer");
  if (hidden_dim < 1) throw ContractError("backbone: hidden_dim must be >= 1");
  if (kind == BackboneKind::sage && fanouts.size() != layers) {
    std::ostringstream os;
    os << "backbone: sage needs one fanout per layer (" << layers << "), got "
       << fanouts.size();
    throw ContractError(os.str());
  }
  if (kind == BackboneKind::gat && heads < 1) {
    throw ContractError("backbone: gat needs at least one head");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ContractError("backbone: dropout must be in [0, 1)");
  }
}

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t(rows, cols);
  auto v = t.values_mut();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.uniform(-limit, limit);
  t.set_requires_grad(true);
  return t;
}

void zero_tensor(Tensor& t) {
  auto v = t.values_mut();
  std::fill(v.begin(), v.end(), 0.0);
}

}  // namespace

ModelParams ModelParams::init(std::size_t node_in_dim, std::size_t label_in_dim,
                              std::size_t node_feat_dim, std::size_t num_classes,
                              const BackboneConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t d = cfg.hidden_dim;
  ModelParams p;
  p.proj_node = glorot(node_in_dim, d, rng);
  p.proj_label = glorot(label_in_dim, d, rng);
  for (std::size_t k = 0; k < cfg.layers; ++k) {
    LayerParams lp;
    lp.w_node = glorot(d, d, rng);
    lp.w_label = glorot(d, d, rng);
    if (cfg.kind == BackboneKind::gat) {
      for (std::size_t h = 0; h < cfg.heads; ++h) {
        lp.attn_node.push_back(glorot(d, 1, rng));
        lp.attn_label.push_back(glorot(d, 1, rng));
      }
    }
    p.layers.push_back(std::move(lp));
  }
  p.w_pred = glorot(d, num_classes, rng);
  p.b_pred = Tensor::zeros(1, num_classes);
  p.b_pred.set_requires_grad(true);
  p.w_label_aug = glorot(num_classes, node_feat_dim, rng);
  return p;
}

std::vector<Tensor> ModelParams::all_tensors() const {
  std::vector<Tensor> out{proj_node, proj_label};
  for (const LayerParams& lp : layers) {
    out.push_back(lp.w_node);
    out.push_back(lp.w_label);
    for (const Tensor& a : lp.attn_node) out.push_back(a);
    for (const Tensor& a : lp.attn_label) out.push_back(a);
  }
  out.push_back(w_pred);
  out.push_back(b_pred);
  out.push_back(w_label_aug);
  return out;
}

void ModelParams::zero_label_path() {
  zero_tensor(proj_label);
  for (LayerParams& lp : layers) {
    zero_tensor(lp.w_label);
    for (Tensor& a : lp.attn_label) zero_tensor(a);
  }
}

ModelParams ModelParams::clone() const {
  ModelParams p;
  p.proj_node = proj_node.clone();
  p.proj_label = proj_label.clone();
  for (const LayerParams& lp : layers) {
    LayerParams c;
    c.w_node = lp.w_node.clone();
    c.w_label = lp.w_label.clone();
    for (const Tensor& a : lp.attn_node) c.attn_node.push_back(a.clone());
    for (const Tensor& a : lp.attn_label) c.attn_label.push_back(a.clone());
    p.layers.push_back(std::move(c));
  }
  p.w_pred = w_pred.clone();
  p.b_pred = b_pred.clone();
  p.w_label_aug = w_label_aug.clone();
  return p;
}

Tensor project_inputs(const Tensor& x, const Tensor& e, const ModelParams& params) {
  return concat_rows(matmul(x, params.proj_node), matmul(e, params.proj_label));
}

SparseMatrix gcn_normalize(const SparseMatrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw DimensionError("gcn_normalize: adjacency must be square");
  }
  const std::size_t n = adjacency.rows();
  // A + I, accumulating in triplet space so an existing diagonal entry merges
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
  auto offsets = adjacency.row_offsets();
  auto cols = adjacency.col_indices();
  auto vals = adjacency.values();
  for (std::size_t r = 0; r < n; ++r) {
    bool diag_seen = false;
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      double v = vals[k];
      if (cols[k] == r) {
        v += 1.0;
        diag_seen = true;
      }
      rows[r].emplace_back(cols[k], v);
    }
    if (!diag_seen) {
      rows[r].emplace_back(r, 1.0);
      std::sort(rows[r].begin(), rows[r].end());
    }
  }
  std::vector<double> degree(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (const auto& [c, v] : rows[r]) degree[r] += v;
  }
  std::vector<std::size_t> out_offsets(n + 1, 0), out_cols;
  std::vector<double> out_vals;
  for (std::size_t r = 0; r < n; ++r) {
    out_offsets[r + 1] = out_offsets[r] + rows[r].size();
    for (const auto& [c, v] : rows[r]) {
      out_cols.push_back(c);
      out_vals.push_back(v / std::sqrt(degree[r] * degree[c]));
    }
  }
  return SparseMatrix(n, n, std::move(out_offsets), std::move(out_cols),
                      std::move(out_vals));
}

SparseMatrix gcn_normalize(const HeteroGraph& h) { return gcn_normalize(h.adjacency); }

SparseMatrix mean_normalize(const SparseMatrix& adjacency) {
  auto offsets = adjacency.row_offsets();
  std::vector<double> vals(adjacency.values().begin(), adjacency.values().end());
  for (std::size_t r = 0; r < adjacency.rows(); ++r) {
    const std::size_t deg = offsets[r + 1] - offsets[r];
    if (deg == 0) continue;
    const double w = 1.0 / static_cast<double>(deg);
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) vals[k] = w;
  }
  return adjacency.with_values(std::move(vals));
}

std::vector<SparseMatrix> sample_neighbors(const SparseMatrix& adjacency,
                                           const std::vector<std::size_t>& fanouts,
                                           std::uint64_t seed) {
  const std::size_t n = adjacency.rows();
  auto offsets = adjacency.row_offsets();
  auto cols = adjacency.col_indices();
  std::vector<SparseMatrix> out;
  out.reserve(fanouts.size());
  for (std::size_t layer = 0; layer < fanouts.size(); ++layer) {
    const std::size_t fanout = fanouts[layer];
    std::vector<std::size_t> new_offsets(n + 1, 0), new_cols;
    std::vector<double> new_vals;
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t deg = offsets[r + 1] - offsets[r];
      std::vector<std::size_t> chosen;
      if (deg <= fanout) {
        chosen.assign(cols.begin() + offsets[r], cols.begin() + offsets[r + 1]);
      } else {
        std::vector<std::size_t> pool(cols.begin() + offsets[r],
                                      cols.begin() + offsets[r + 1]);
        Rng rng(Rng::mix(Rng::mix(seed, layer), r));
        // partial Fisher-Yates: the first `fanout` slots become the sample
        for (std::size_t i = 0; i < fanout; ++i) {
          const std::size_t j = i + rng.uniform_index(pool.size() - i);
          std::swap(pool[i], pool[j]);
        }
        chosen.assign(pool.begin(), pool.begin() + fanout);
        std::sort(chosen.begin(), chosen.end());
      }
      const double w = chosen.empty() ? 0.0 : 1.0 / static_cast<double>(chosen.size());
      for (std::size_t c : chosen) {
        new_cols.push_back(c);
        new_vals.push_back(w);
      }
      new_offsets[r + 1] = new_offsets[r] + chosen.size();
    }
    out.emplace_back(SparseMatrix(n, n, std::move(new_offsets),
                                  std::move(new_cols), std::move(new_vals)));
  }
  return out;
}

std::vector<SparseMatrix> sample_neighbors(const HeteroGraph& h,
                                           const std::vector<std::size_t>& fanouts,
                                           std::uint64_t seed) {
  return sample_neighbors(h.adjacency, fanouts, seed);
}

namespace {

// [H_N W_N ; H_L W_L]; node-only input short-circuits to H W_N.
Tensor transform_blocks(const Tensor& h, const LayerParams& lp,
                        std::size_t node_count) {
  if (node_count == h.rows()) return matmul(h, lp.w_node);
  Tensor hn = slice_rows(h, 0, node_count);
  Tensor hl = slice_rows(h, node_count, h.rows());
  return concat_rows(matmul(hn, lp.w_node), matmul(hl, lp.w_label));
}

Tensor finish_layer(const Tensor& aggregated, const Tensor& h_in,
                    const BackboneConfig& cfg) {
  Tensor pre = cfg.residual ? add(aggregated, h_in) : aggregated;
  return apply_activation(pre, cfg.effective_activation());
}

}  // namespace

Tensor hetero_layer_forward(const Tensor& h, const SparseMatrix& adjacency,
                            const LayerParams& lp, std::size_t node_count,
                            const BackboneConfig& cfg) {
  Tensor t = transform_blocks(h, lp, node_count);
  return finish_layer(spmm(adjacency, t), h, cfg);
}

Tensor gat_attention_values(const Tensor& transformed, const SparseMatrix& pattern,
                            const LayerParams& lp, std::size_t node_count,
                            double leaky_slope) {
  if (lp.attn_node.empty()) {
    throw ContractError("gat_attention_values: layer has no attention vectors");
  }
  Tensor tn = slice_rows(transformed, 0, node_count);
  const bool has_labels = node_count < transformed.rows();
  Tensor tl = has_labels
                  ? slice_rows(transformed, node_count, transformed.rows())
                  : Tensor(0, transformed.cols());
  Tensor averaged;
  for (std::size_t head = 0; head < lp.attn_node.size(); ++head) {
    // per-vertex score a_type . (W_type h); shared across the edge's two roles
    Tensor sn = matmul(tn, lp.attn_node[head]);
    Tensor scores = has_labels
                        ? concat_rows(sn, matmul(tl, lp.attn_label[head]))
                        : sn;
    Tensor raw = edge_score_sum(scores, pattern);
    Tensor act = apply_activation(raw, Activation::leaky_relu(leaky_slope));
    Tensor alpha = edge_softmax(act, pattern);
    averaged = head == 0 ? alpha : add(averaged, alpha);
  }
  if (lp.attn_node.size() > 1) {
    averaged = scale(averaged, 1.0 / static_cast<double>(lp.attn_node.size()));
  }
  return averaged;
}

SparseMatrix gat_edge_weights(const Tensor& h, const HeteroGraph& hg,
                              const LayerParams& lp, const BackboneConfig& cfg) {
  Tensor t = transform_blocks(h, lp, hg.num_nodes);
  Tensor values =
      gat_attention_values(t, hg.adjacency, lp, hg.num_nodes, cfg.attention_slope);
  return hg.adjacency.with_values(
      std::vector<double>(values.values().begin(), values.values().end()));
}

namespace {

Tensor gat_layer_forward(const Tensor& h, const SparseMatrix& pattern,
                         const LayerParams& lp, std::size_t node_count,
                         const BackboneConfig& cfg) {
  Tensor t = transform_blocks(h, lp, node_count);
  Tensor alpha =
      gat_attention_values(t, pattern, lp, node_count, cfg.attention_slope);
  return finish_layer(spmm_values(pattern, alpha, t), h, cfg);
}

// Shared K-layer trunk; `pattern` is the raw adjacency (GAT), `per_layer`
// the constant adjacencies (GCN uses one for all layers, SAGE one each).
Tensor run_layers(Tensor h, const ModelParams& params,
                  const std::vector<const SparseMatrix*>& per_layer,
                  std::size_t node_count, const BackboneConfig& cfg,
                  const ForwardContext& ctx) {
  for (std::size_t k = 0; k < cfg.layers; ++k) {
    if (ctx.mode == Mode::train && cfg.dropout > 0.0) {
      if (ctx.dropout_rng == nullptr) {
        throw ContractError("forward: train mode with dropout needs an rng");
      }
      h = dropout(h, cfg.dropout, *ctx.dropout_rng);
    }
    if (cfg.kind == BackboneKind::gat) {
      h = gat_layer_forward(h, *per_layer[k], params.layers[k], node_count, cfg);
    } else {
      h = hetero_layer_forward(h, *per_layer[k], params.layers[k], node_count, cfg);
    }
  }
  return h;
}

std::vector<const SparseMatrix*> layer_adjacencies(
    const SparseMatrix& raw, const BackboneConfig& cfg, const ForwardContext& ctx,
    SparseMatrix& shared_storage, std::vector<SparseMatrix>& sampled_storage) {
  std::vector<const SparseMatrix*> per_layer(cfg.layers, nullptr);
  switch (cfg.kind) {
    case BackboneKind::gcn:
      shared_storage = gcn_normalize(raw);
      for (auto& p : per_layer) p = &shared_storage;
      break;
    case BackboneKind::sage:
      if (ctx.mode == Mode::train) {
        sampled_storage = sample_neighbors(raw, cfg.fanouts, ctx.sample_seed);
        for (std::size_t k = 0; k < cfg.layers; ++k) {
          per_layer[k] = &sampled_storage[k];
        }
      } else {
        // inference aggregates the full neighborhood
        shared_storage = mean_normalize(raw);
        for (auto& p : per_layer) p = &shared_storage;
      }
      break;
    case BackboneKind::gat:
      for (auto& p : per_layer) p = &raw;
      break;
  }
  return per_layer;
}

ForwardResult classify(Tensor z_all, std::size_t node_count,
                       const ModelParams& params) {
  ForwardResult res;
  if (z_all.rows() == node_count) {
    res.z_nodes = z_all;
    res.z_labels = Tensor(0, z_all.cols());
  } else {
    res.z_nodes = slice_rows(z_all, 0, node_count);
    res.z_labels = slice_rows(z_all, node_count, z_all.rows());
  }
  res.logits = add_row_vector(matmul(res.z_nodes, params.w_pred), params.b_pred);
  res.probs = softmax_rows(res.logits);
  return res;
}

}  // namespace

ForwardResult forward(const Graph& g, const LabelFeatures& lf,
                      const std::vector<std::size_t>& connected,
                      const ModelParams& params, const BackboneConfig& cfg,
                      const ForwardContext& ctx) {
  cfg.validate();
  HeteroGraph hg = build_hetero_graph(g, connected);
  Tensor h0 = project_inputs(g.features, lf.features, params);
  SparseMatrix shared = SparseMatrix::identity(0);
  std::vector<SparseMatrix> sampled;
  auto per_layer = layer_adjacencies(hg.adjacency, cfg, ctx, shared, sampled);
  Tensor z = run_layers(h0, params, per_layer, g.num_nodes, cfg, ctx);
  return classify(std::move(z), g.num_nodes, params);
}

ForwardResult forward_baseline(const Graph& g, Method method,
                               const std::vector<std::size_t>& visible,
                               const ModelParams& params, const BackboneConfig& cfg,
                               const ForwardContext& ctx) {
  cfg.validate();
  if (method == Method::legnn) {
    throw ContractError("forward_baseline: legnn is not a node-only method");
  }
  Tensor x_in = g.features;
  if (method == Method::concat) {
    x_in = augment_concat(g.features, visible_labels(g, visible));
  } else if (method == Method::addition) {
    x_in = augment_addition(g.features, visible_labels(g, visible),
                            params.w_label_aug);
  }
  SparseMatrix adj = node_adjacency(g);
  Tensor h0 = matmul(x_in, params.proj_node);
  SparseMatrix shared = SparseMatrix::identity(0);
  std::vector<SparseMatrix> sampled;
  auto per_layer = layer_adjacencies(adj, cfg, ctx, shared, sampled);
  Tensor z = run_layers(h0, params, per_layer, g.num_nodes, cfg, ctx);
  return classify(std::move(z), g.num_nodes, params);
}

ForwardResult run_method_forward(const Graph& g, const LabelFeatures& lf,
                                 Method method,
                                 const std::vector<std::size_t>& labeled_visible,
                                 const ModelParams& params,
                                 const BackboneConfig& cfg,
                                 const ForwardContext& ctx) {
  if (method == Method::legnn) {
    return forward(g, lf, labeled_visible, params, cfg, ctx);
  }
  return forward_baseline(g, method, labeled_visible, params, cfg, ctx);
}

Tensor visible_labels(const Graph& g, const std::vector<std::size_t>& visible) {
  Tensor y(g.num_nodes, g.num_classes);
  for (std::size_t v : visible) {
    const int c = g.label_of(v);
    if (c < 0) {
      throw ContractError("visible_labels: visible node has no label");
    }
    y.set(v, static_cast<std::size_t>(c), 1.0);
  }
  return y;
}

Tensor augment_concat(const Tensor& x, const Tensor& y_visible) {
  if (x.rows() != y_visible.rows()) {
    throw DimensionError("augment_concat: row counts differ");
  }
  const std::size_t f = x.cols(), c = y_visible.cols();
  Tensor out(x.rows(), f + c);
  auto ov = out.values_mut();
  auto xv = x.values();
  auto yv = y_visible.values();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::copy_n(xv.data() + r * f, f, ov.data() + r * (f + c));
    std::copy_n(yv.data() + r * c, c, ov.data() + r * (f + c) + f);
  }
  return out;
}

Tensor augment_addition(const Tensor& x, const Tensor& y_visible,
                        const Tensor& w_label_aug) {
  if (w_label_aug.rows() != y_visible.cols() || w_label_aug.cols() != x.cols()) {
    std::ostringstream os;
    os << "augment_addition: transform must be " << y_visible.cols() << "x"
       << x.cols() << ", got " << w_label_aug.rows() << "x" << w_label_aug.cols();
    throw DimensionError(os.str());
  }
  return add(x, matmul(y_visible, w_label_aug));
}

SparseMatrix node_adjacency(const Graph& g) {
  std::vector<std::tuple<std::size_t, std::size_t, double>> triplets;
  triplets.reserve(2 * g.edges.size());
  for (const auto& [u, v] : g.edges) {
    triplets.emplace_back(u, v, 1.0);
    if (u != v) triplets.emplace_back(v, u, 1.0);
  }
  return SparseMatrix::from_triplets(g.num_nodes, g.num_nodes, std::move(triplets));
}

Method method_from_string(const std::string& s) {
  if (s == "vanilla") return Method::vanilla;
  if (s == "concat") return Method::concat;
  if (s == "addition") return Method::addition;
  if (s == "legnn") return Method::legnn;
  throw UsageError("unknown method '" + s + "'");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::vanilla: return "vanilla";
    case Method::concat: return "concat";
    case Method::addition: return "addition";
    case Method::legnn: return "legnn";
  }
  return "?";
}

BackboneKind backbone_from_string(const std::string& s) {
  if (s == "gcn") return BackboneKind::gcn;
  if (s == "sage") return BackboneKind::sage;
  if (s == "gat") return BackboneKind::gat;
  throw UsageError("unknown backbone '" + s + "'");
}

std::string to_string(BackboneKind k) {
  switch (k) {
    case BackboneKind::gcn: return "gcn";
    case BackboneKind::sage: return "sage";
    case BackboneKind::gat: return "gat";
  }
  return "?";
}

}  // namespace legnn
