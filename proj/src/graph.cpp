#include "legnn/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "legnn/errors.hpp"
#include "legnn/rng.hpp"

namespace legnn {

int Graph::label_of(std::size_t node) const {
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (labels_onehot.at(node, c) == 1.0) return static_cast<int>(c);
  }
  return -1;
}

std::vector<std::size_t> Graph::labeled_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < num_nodes; ++i) {
    if (is_labeled(i)) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Graph::class_counts_among(
    const std::vector<std::size_t>& nodes) const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t v : nodes) {
    const int c = label_of(v);
    if (c >= 0) counts[static_cast<std::size_t>(c)]++;
  }
  return counts;
}

void Graph::validate() const {
  if (features.rows() != num_nodes || features.cols() != feature_dim) {
    throw FormatError("graph: feature matrix shape does not match meta");
  }
  if (labels_onehot.rows() != num_nodes || labels_onehot.cols() != num_classes) {
    throw FormatError("graph: label matrix shape does not match meta");
  }
  for (std::size_t i = 0; i < num_nodes; ++i) {
    int ones = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double v = labels_onehot.at(i, c);
      if (v == 1.0) {
        ones++;
      } else if (v != 0.0) {
        throw FormatError("graph: label matrix entries must be 0 or 1");
      }
    }
    if (ones > 1) {
      throw FormatError("graph: a labeled row must have exactly one entry set");
    }
  }
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw FormatError("graph: edge endpoint out of range");
    }
  }
  std::set<std::size_t> seen;
  for (const auto* split : {&train_nodes, &valid_nodes, &test_nodes}) {
    for (std::size_t v : *split) {
      if (v >= num_nodes) throw FormatError("graph: split node id out of range");
      if (!seen.insert(v).second) {
        throw FormatError("graph: splits must be pairwise disjoint");
      }
    }
  }
}

LabelFeatures LabelFeatures::one_hot(std::size_t num_classes) {
  return LabelFeatures{Tensor::identity(num_classes)};
}

namespace {

[[noreturn]] void file_error(const std::string& file, std::size_t line,
                             const std::string& what) {
  std::ostringstream os;
  os << file << ":" << line << ": " << what;
  throw FormatError(os.str());
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError(path + ": missing or unreadable file");
  }
  return in;
}

std::size_t parse_node_id(const std::string& token, std::size_t num_nodes,
                          const std::string& file, std::size_t line_no) {
  try {
    const long long v = std::stoll(token);
    if (v < 0 || static_cast<std::size_t>(v) >= num_nodes) {
      file_error(file, line_no, "node id " + token + " out of range");
    }
    return static_cast<std::size_t>(v);
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception&) {
    file_error(file, line_no, "expected a node id, got '" + token + "'");
  }
}

}  // namespace

Graph load_dataset(const std::string& dir) {
  Graph g;

  {
    const std::string meta_path = dir + "/meta.json";
    std::ifstream in = open_or_throw(meta_path);
    nlohmann::json meta;
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      file_error(meta_path, 1, std::string("invalid JSON: ") + e.what());
    }
    for (const char* key : {"num_nodes", "num_classes", "feature_dim"}) {
      if (!meta.contains(key) || !meta[key].is_number_unsigned()) {
        file_error(meta_path, 1,
                   std::string("missing or non-integer field '") + key + "'");
      }
    }
    g.num_nodes = meta["num_nodes"].get<std::size_t>();
    g.num_classes = meta["num_classes"].get<std::size_t>();
    g.feature_dim = meta["feature_dim"].get<std::size_t>();
  }

  {
    const std::string path = dir + "/edges.tsv";
    std::ifstream in = open_or_throw(path);
    std::set<std::pair<std::size_t, std::size_t>> edge_set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string a, b, extra;
      if (!(ls >> a >> b)) {
        file_error(path, line_no, "expected 'src<TAB>dst'");
      }
      if (ls >> extra) {
        file_error(path, line_no, "trailing tokens after edge pair");
      }
      std::size_t u = parse_node_id(a, g.num_nodes, path, line_no);
      std::size_t v = parse_node_id(b, g.num_nodes, path, line_no);
      if (u > v) std::swap(u, v);
      edge_set.emplace(u, v);
    }
    g.edges.assign(edge_set.begin(), edge_set.end());
  }

  {
    const std::string path = dir + "/features.tsv";
    std::ifstream in = open_or_throw(path);
    std::vector<double> values;
    values.reserve(g.num_nodes * g.feature_dim);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line_no > g.num_nodes) {
        file_error(path, line_no, "more feature rows than nodes");
      }
      std::istringstream ls(line);
      std::size_t count = 0;
      double x;
      while (ls >> x) {
        values.push_back(x);
        ++count;
      }
      if (!ls.eof()) {
        file_error(path, line_no, "non-numeric feature value");
      }
      if (count != g.feature_dim) {
        std::ostringstream os;
        os << "expected " << g.feature_dim << " features, got " << count;
        file_error(path, line_no, os.str());
      }
    }
    if (line_no != g.num_nodes) {
      file_error(path, line_no, "fewer feature rows than nodes");
    }
    g.features = Tensor(g.num_nodes, g.feature_dim, std::move(values));
  }

  {
    const std::string path = dir + "/labels.tsv";
    std::ifstream in = open_or_throw(path);
    g.labels_onehot = Tensor(g.num_nodes, g.num_classes);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string a, b;
      if (!(ls >> a >> b)) {
        file_error(path, line_no, "expected 'node_id<TAB>class_id'");
      }
      const std::size_t node = parse_node_id(a, g.num_nodes, path, line_no);
      long long cls = -1;
      try {
        cls = std::stoll(b);
      } catch (const std::exception&) {
        file_error(path, line_no, "expected a class id, got '" + b + "'");
      }
      if (cls < 0 || static_cast<std::size_t>(cls) >= g.num_classes) {
        std::ostringstream os;
        os << "class id " << cls << " out of range [0, " << g.num_classes << ")";
        file_error(path, line_no, os.str());
      }
      if (g.label_of(node) >= 0) {
        file_error(path, line_no, "node labeled more than once");
      }
      g.labels_onehot.set(node, static_cast<std::size_t>(cls), 1.0);
    }
  }

  {
    const std::string path = dir + "/split.tsv";
    std::ifstream in = open_or_throw(path);
    std::set<std::size_t> assigned;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string a, which;
      if (!(ls >> a >> which)) {
        file_error(path, line_no, "expected 'node_id<TAB>{train|valid|test}'");
      }
      const std::size_t node = parse_node_id(a, g.num_nodes, path, line_no);
      if (!assigned.insert(node).second) {
        file_error(path, line_no, "node assigned to more than one split");
      }
      if (which == "train") {
        g.train_nodes.push_back(node);
      } else if (which == "valid") {
        g.valid_nodes.push_back(node);
      } else if (which == "test") {
        g.test_nodes.push_back(node);
      } else {
        file_error(path, line_no, "unknown split '" + which + "'");
      }
    }
    std::sort(g.train_nodes.begin(), g.train_nodes.end());
    std::sort(g.valid_nodes.begin(), g.valid_nodes.end());
    std::sort(g.test_nodes.begin(), g.test_nodes.end());
  }

  g.validate();
  return g;
}

void save_dataset(const std::string& dir, const Graph& g) {
  auto open_out = [&](const std::string& name) {
    std::ofstream out(dir + "/" + name);
    if (!out) throw IoError(dir + "/" + name + ": cannot open for writing");
    return out;
  };

  {
    nlohmann::ordered_json meta;
    meta["num_nodes"] = g.num_nodes;
    meta["num_classes"] = g.num_classes;
    meta["feature_dim"] = g.feature_dim;
    auto out = open_out("meta.json");
    out << meta.dump(2) << "\n";
  }
  {
    auto out = open_out("edges.tsv");
    for (const auto& [u, v] : g.edges) out << u << "\t" << v << "\n";
  }
  {
    auto out = open_out("features.tsv");
    out.precision(17);
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      for (std::size_t j = 0; j < g.feature_dim; ++j) {
        if (j) out << "\t";
        out << g.features.at(i, j);
      }
      out << "\n";
    }
  }
  {
    auto out = open_out("labels.tsv");
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      const int c = g.label_of(i);
      if (c >= 0) out << i << "\t" << c << "\n";
    }
  }
  {
    auto out = open_out("split.tsv");
    for (std::size_t v : g.train_nodes) out << v << "\ttrain\n";
    for (std::size_t v : g.valid_nodes) out << v << "\tvalid\n";
    for (std::size_t v : g.test_nodes) out << v << "\ttest\n";
  }
}

HeteroGraph build_hetero_graph(const Graph& g,
                               const std::vector<std::size_t>& connected) {
  const std::size_t total = g.num_nodes + g.num_classes;
  std::vector<std::tuple<std::size_t, std::size_t, double>> triplets;
  triplets.reserve(2 * g.edges.size() + 2 * connected.size());
  for (const auto& [u, v] : g.edges) {
    triplets.emplace_back(u, v, 1.0);
    if (u != v) triplets.emplace_back(v, u, 1.0);
  }
  std::vector<std::size_t> sorted_connected(connected);
  std::sort(sorted_connected.begin(), sorted_connected.end());
  sorted_connected.erase(
      std::unique(sorted_connected.begin(), sorted_connected.end()),
      sorted_connected.end());
  for (std::size_t node : sorted_connected) {
    if (node >= g.num_nodes) {
      throw ContractError("build_hetero_graph: connected node id out of range");
    }
    const int c = g.label_of(node);
    if (c < 0) {
      std::ostringstream os;
      os << "build_hetero_graph: node " << node
         << " has an all-zero label row and cannot be connected";
      throw ContractError(os.str());
    }
    const std::size_t label_vertex = g.num_nodes + static_cast<std::size_t>(c);
    triplets.emplace_back(node, label_vertex, 1.0);
    triplets.emplace_back(label_vertex, node, 1.0);
  }
  HeteroGraph h{SparseMatrix::from_triplets(total, total, std::move(triplets)),
                std::move(sorted_connected), g.num_nodes, g.num_classes};
  return h;
}

double compute_homophily(const Graph& g) {
  std::size_t considered = 0, same = 0;
  for (const auto& [u, v] : g.edges) {
    const int cu = g.label_of(u);
    const int cv = g.label_of(v);
    if (cu < 0 || cv < 0) continue;
    ++considered;
    if (cu == cv) ++same;
  }
  if (considered == 0) {
    throw UndefinedValueError(
        "compute_homophily: no edge joins two labeled nodes");
  }
  return static_cast<double>(same) / static_cast<double>(considered);
}

Graph generate_synthetic(const Graph& g, std::size_t num_new_edges,
                         std::uint64_t seed) {
  const std::vector<std::size_t> labeled = g.labeled_nodes();
  const std::vector<std::size_t> counts = g.class_counts_among(labeled);
  std::size_t classes_present = 0;
  for (std::size_t n : counts) {
    if (n > 0) ++classes_present;
  }
  if (classes_present < 2) {
    throw ContractError(
        "generate_synthetic: need at least two classes among labeled nodes");
  }
  if (num_new_edges == 0) return g;

  // capacity = cross-label pairs not already present as edges
  std::size_t cross_pairs = 0;
  {
    std::size_t total = labeled.size();
    std::size_t same_pairs = 0;
    for (std::size_t n : counts) same_pairs += n * (n - 1) / 2;
    cross_pairs = total * (total - 1) / 2 - same_pairs;
  }
  std::set<std::pair<std::size_t, std::size_t>> edge_set(g.edges.begin(),
                                                         g.edges.end());
  std::size_t existing_cross = 0;
  for (const auto& [u, v] : g.edges) {
    const int cu = g.label_of(u);
    const int cv = g.label_of(v);
    if (cu >= 0 && cv >= 0 && cu != cv) ++existing_cross;
  }
  if (num_new_edges > cross_pairs - existing_cross) {
    std::ostringstream os;
    os << "generate_synthetic: requested " << num_new_edges
       << " cross-label edges but only " << (cross_pairs - existing_cross)
       << " distinct ones can be added";
    throw CapacityError(os.str());
  }

  Rng rng(seed);
  std::size_t added = 0;
  while (added < num_new_edges) {
    const std::size_t u = labeled[rng.uniform_index(labeled.size())];
    const std::size_t v = labeled[rng.uniform_index(labeled.size())];
    if (u == v) continue;
    if (g.label_of(u) == g.label_of(v)) continue;
    const auto e = std::minmax(u, v);
    if (!edge_set.insert({e.first, e.second}).second) continue;
    ++added;
  }

  Graph out = g;
  out.edges.assign(edge_set.begin(), edge_set.end());
  return out;
}

}  // namespace legnn
