#include "mcne/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "mcne/random.hpp"

namespace mcne {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  return out;
}

// Splits a line into unsigned integers; comments ('#') and blank lines yield none.
bool parse_uint_fields(std::string_view line, std::vector<std::uint64_t>& fields) {
  fields.clear();
  if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i == line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + j, value);
    if (ec != std::errc() || ptr != line.data() + j) return false;
    fields.push_back(value);
    i = j;
  }
  return true;
}

std::string location(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

}  // namespace

Graph::Graph(std::size_t node_count, std::span<const NodePair> edges) : adjacency_(node_count) {
  for (const auto& [u, v] : edges) {
    if (u == v) throw std::invalid_argument("Graph: self-loop at node " + std::to_string(u));
    if (u >= node_count || v >= node_count) {
      throw std::invalid_argument("Graph: edge (" + std::to_string(u) + "," + std::to_string(v) +
                                  ") out of range for " + std::to_string(node_count) + " nodes");
    }
    adjacency_[u].push_back(v);
    adjacency_[v].push_back(u);
  }
  std::size_t total = 0;
  for (auto& adj : adjacency_) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    total += adj.size();
  }
  edge_count_ = total / 2;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u >= node_count() || v >= node_count()) return false;
  const auto& adj = adjacency_[u];
  return std::binary_search(adj.begin(), adj.end(), v);
}

std::vector<NodePair> Graph::edges() const {
  std::vector<NodePair> out;
  out.reserve(edge_count_);
  for (NodeId u = 0; u < node_count(); ++u) {
    for (NodeId v : adjacency_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

Graph load_edge_list(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<NodePair> edges;
  std::vector<std::uint64_t> fields;
  std::uint64_t max_id = 0;
  std::uint64_t declared = 0;
  bool any = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // "# nodes N ..." keeps trailing isolated nodes.
    if (line.starts_with("# nodes ")) {
      std::istringstream header(line.substr(8));
      header >> declared;
      continue;
    }
    if (!parse_uint_fields(line, fields) || (!fields.empty() && fields.size() != 2)) {
      throw ParseError(location(path, line_no) + ": expected \"u v\", got \"" + line + "\"");
    }
    if (fields.empty()) continue;
    if (fields[0] == fields[1]) {
      throw ParseError(location(path, line_no) + ": self-loop on node " + std::to_string(fields[0]));
    }
    if (std::max(fields[0], fields[1]) > UINT32_MAX - 1) {
      throw ParseError(location(path, line_no) + ": node id too large");
    }
    max_id = std::max({max_id, fields[0], fields[1]});
    any = true;
    edges.emplace_back(static_cast<NodeId>(fields[0]), static_cast<NodeId>(fields[1]));
  }
  const std::uint64_t n = std::max<std::uint64_t>(declared, any ? max_id + 1 : 0);
  if (n > UINT32_MAX) throw ParseError(path.string() + ": node count too large");
  return Graph(n, edges);
}

void save_edge_list(const Graph& g, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "# nodes " << g.node_count() << " edges " << g.edge_count() << "\n";
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

LabelTable load_labels(const std::filesystem::path& path, std::size_t node_count) {
  auto in = open_input(path);
  LabelTable table;
  table.labels.resize(node_count);
  std::vector<std::uint64_t> fields;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!parse_uint_fields(line, fields) || (!fields.empty() && fields.size() != 2)) {
      throw ParseError(location(path, line_no) + ": expected \"node_id label_id\", got \"" + line +
                       "\"");
    }
    if (fields.empty()) continue;
    if (fields[0] >= table.labels.size()) {
      if (node_count != 0) {
        throw ParseError(location(path, line_no) + ": node id " + std::to_string(fields[0]) +
                         " beyond graph of " + std::to_string(node_count) + " nodes");
      }
      table.labels.resize(fields[0] + 1);
    }
    table.labels[fields[0]].push_back(static_cast<std::uint32_t>(fields[1]));
    table.label_count = std::max<std::size_t>(table.label_count, fields[1] + 1);
  }
  for (auto& set : table.labels) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
  return table;
}

void save_labels(const LabelTable& labels, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (std::size_t v = 0; v < labels.labels.size(); ++v) {
    for (auto label : labels.labels[v]) out << v << ' ' << label << '\n';
  }
}

SbmResult generate_sbm(std::span<const std::size_t> block_sizes, double p_in, double p_out,
                       std::uint64_t seed) {
  if (block_sizes.empty()) throw std::invalid_argument("generate_sbm: no blocks given");
  if (std::any_of(block_sizes.begin(), block_sizes.end(), [](std::size_t b) { return b == 0; })) {
    throw std::invalid_argument("generate_sbm: empty block");
  }
  if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0)) {
    throw std::invalid_argument("generate_sbm: probabilities must lie in [0, 1]");
  }
  std::vector<std::uint32_t> block_of;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    block_of.insert(block_of.end(), block_sizes[b], static_cast<std::uint32_t>(b));
  }
  const std::size_t n = block_of.size();
  Rng rng(seed);
  std::vector<NodePair> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const double p = block_of[u] == block_of[v] ? p_in : p_out;
      if (rng.bernoulli(p)) edges.emplace_back(u, v);
    }
  }
  SbmResult result{Graph(n, edges), {}};
  result.labels.label_count = block_sizes.size();
  result.labels.labels.resize(n);
  for (std::size_t v = 0; v < n; ++v) result.labels.labels[v] = {block_of[v]};
  return result;
}

SparseMatrix normalize_adjacency(const Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<double> inv_sqrt_degree(n);
  for (NodeId v = 0; v < n; ++v) {
    inv_sqrt_degree[v] = 1.0 / std::sqrt(static_cast<double>(g.degree(v) + 1));
  }
  SparseMatrix a;
  a.rows = n;
  a.cols = n;
  a.row_offsets.reserve(n + 1);
  a.row_offsets.push_back(0);
  for (NodeId u = 0; u < n; ++u) {
    bool self_done = false;
    auto emit = [&](NodeId v) {
      a.col_index.push_back(v);
      a.values.push_back(inv_sqrt_degree[u] * inv_sqrt_degree[v]);
    };
    for (NodeId v : g.neighbors(u)) {
      if (!self_done && v > u) {
        emit(u);
        self_done = true;
      }
      emit(v);
    }
    if (!self_done) emit(u);
    a.row_offsets.push_back(a.col_index.size());
  }
  return a;
}

EdgeSplit split_edges(const Graph& g, double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw std::invalid_argument("split_edges: holdout fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  auto edges = g.edges();
  const auto holdout = static_cast<std::size_t>(
      std::floor(holdout_fraction * static_cast<double>(edges.size())));
  rng.shuffle(edges.begin(), edges.end());

  EdgeSplit split;
  split.positives.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(holdout));
  std::vector<NodePair> kept(edges.begin() + static_cast<std::ptrdiff_t>(holdout), edges.end());
  std::sort(kept.begin(), kept.end());
  split.train_graph = Graph(g.node_count(), kept);

  const std::size_t n = g.node_count();
  std::set<NodePair> chosen;
  std::size_t rejections = 0;
  const std::size_t max_rejections = 100 * holdout;
  while (split.negatives.size() < holdout) {
    auto u = static_cast<NodeId>(rng.below(n));
    auto v = static_cast<NodeId>(rng.below(n));
    if (u > v) std::swap(u, v);
    if (u == v || g.has_edge(u, v) || !chosen.insert({u, v}).second) {
      if (++rejections > max_rejections) {
        throw std::runtime_error("split_edges: could not sample " + std::to_string(holdout) +
                                 " negative pairs after " + std::to_string(max_rejections) +
                                 " rejections");
      }
      continue;
    }
    split.negatives.emplace_back(u, v);
  }
  return split;
}

std::vector<std::vector<NodeId>> random_walks(const Graph& g, std::size_t walks_per_node,
                                              std::size_t walk_length, std::uint64_t seed) {
  if (walk_length < 2) throw std::invalid_argument("random_walks: walk_length must be >= 2");
  std::vector<std::vector<NodeId>> walks;
  walks.reserve(g.node_count() * walks_per_node);
  for (std::size_t w = 0; w < walks_per_node; ++w) {
    for (NodeId start = 0; start < g.node_count(); ++start) {
      Rng rng(derive_seed(seed, start, w));
      std::vector<NodeId> walk{start};
      walk.reserve(walk_length);
      while (walk.size() < walk_length) {
        const auto adj = g.neighbors(walk.back());
        if (adj.empty()) break;
        walk.push_back(adj[rng.below(adj.size())]);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

}  // namespace mcne
