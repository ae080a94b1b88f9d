#include "mcne/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace mcne {

namespace {

class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw ParseError(path.string() + ": cannot open for reading");
  }

  /// Next non-empty line split into tokens; false at end of file.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      std::istringstream ss(line);
      tokens.clear();
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(path_.string() + ":" + std::to_string(line_no_) + ": " + message);
  }

  template <typename T>
  T parse(const std::string& token) const {
    T value{};
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      fail("cannot parse \"" + token + "\"");
    }
    return value;
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  return out;
}

void write_row(std::ostream& out, std::span<const double> row) {
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j) out << ' ';
    out << format_real(row[j]);
  }
  out << '\n';
}

void read_rows(LineReader& reader, DenseMatrix& m, const char* what) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (!reader.next(tokens)) {
      reader.fail(std::string("truncated ") + what + ": expected " + std::to_string(m.rows()) +
                  " rows, found " + std::to_string(i) + " (" + std::to_string(m.rows() - i) +
                  " missing)");
    }
    if (tokens.size() != m.cols()) {
      reader.fail(std::string(what) + " row " + std::to_string(i) + ": expected " +
                  std::to_string(m.cols()) + " values, found " + std::to_string(tokens.size()));
    }
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = reader.parse<double>(tokens[j]);
  }
}

// Shortest text that parses back to the same double.
std::string shortest(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << table.node_count() << ' ' << table.dim() << '\n';
  for (std::size_t v = 0; v < table.node_count(); ++v) write_row(out, table.row(v));
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  LineReader reader(path);
  std::vector<std::string> tokens;
  if (!reader.next(tokens) || tokens.size() != 2) reader.fail("expected header \"|V| d\"");
  const auto n = reader.parse<std::size_t>(tokens[0]);
  const auto d = reader.parse<std::size_t>(tokens[1]);
  EmbeddingTable table{DenseMatrix(n, d)};
  read_rows(reader, table.matrix, "embedding body");
  if (reader.next(tokens)) {
    reader.fail("embedding body: expected " + std::to_string(n) + " rows, found extra data");
  }
  return table;
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
  auto out = open_output(path);
  const auto& l = cb.layout;
  out << l.basis_count << ' ' << l.selections << ' ' << cb.dim() << ' ' << l.flavor_name();
  if (l.flavor == CodeFlavor::kKd) out << ' ' << l.block_size << ' ' << l.selections;
  out << '\n';
  for (std::size_t k = 0; k < cb.basis.rows(); ++k) write_row(out, cb.basis.row(k));
  for (std::size_t v = 0; v < cb.node_count(); ++v) {
    const auto codes = cb.codes(v);
    for (std::size_t i = 0; i < codes.size(); ++i) out << (i ? " " : "") << codes[i];
    out << '\n';
  }
}

Codebook load_codebook(const std::filesystem::path& path) {
  LineReader reader(path);
  std::vector<std::string> tokens;
  if (!reader.next(tokens) || tokens.size() < 4) reader.fail("expected header \"s t d flavor [K D]\"");
  const auto s = reader.parse<std::size_t>(tokens[0]);
  const auto t = reader.parse<std::size_t>(tokens[1]);
  const auto d = reader.parse<std::size_t>(tokens[2]);
  Codebook cb;
  if (tokens[3] == "multi_hot") {
    if (tokens.size() != 4) reader.fail("multi_hot header takes no K D fields");
    cb.layout = CodeLayout{CodeFlavor::kMultiHot, s, t, 0};
  } else if (tokens[3] == "kd") {
    if (tokens.size() != 6) reader.fail("kd header needs \"K D\" fields");
    const auto k = reader.parse<std::size_t>(tokens[4]);
    const auto blocks = reader.parse<std::size_t>(tokens[5]);
    if (blocks != t || k * blocks != s) {
      reader.fail("kd header inconsistent: expected s = K*D and t = D");
    }
    cb.layout = CodeLayout{CodeFlavor::kKd, s, t, k};
  } else {
    reader.fail("unknown flavor \"" + tokens[3] + "\"");
  }
  try {
    cb.layout.validate();
  } catch (const std::invalid_argument& e) {
    reader.fail(e.what());
  }
  cb.basis = DenseMatrix(s, d);
  read_rows(reader, cb.basis, "basis");
  while (reader.next(tokens)) {
    if (tokens.size() != t) {
      reader.fail("code row: expected " + std::to_string(t) + " codes, found " +
                  std::to_string(tokens.size()));
    }
    for (const auto& tok : tokens) cb.indexes.push_back(reader.parse<std::uint32_t>(tok));
  }
  try {
    cb.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return cb;
}

void save_split_pairs(const EdgeSplit& split, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "# positives " << split.positives.size() << " negatives " << split.negatives.size() << '\n';
  for (const auto& [u, v] : split.positives) out << u << ' ' << v << " 1\n";
  for (const auto& [u, v] : split.negatives) out << u << ' ' << v << " 0\n";
}

EdgeSplit load_split_pairs(const std::filesystem::path& path) {
  LineReader reader(path);
  std::vector<std::string> tokens;
  EdgeSplit split;
  while (reader.next(tokens)) {
    if (tokens.front().starts_with('#')) continue;
    if (tokens.size() != 3) reader.fail("expected \"u v label\"");
    const NodePair pair{reader.parse<NodeId>(tokens[0]), reader.parse<NodeId>(tokens[1])};
    const auto label = reader.parse<int>(tokens[2]);
    if (label == 1) {
      split.positives.push_back(pair);
    } else if (label == 0) {
      split.negatives.push_back(pair);
    } else {
      reader.fail("pair label must be 0 or 1");
    }
  }
  return split;
}

void save_loss_log(std::span<const McnePEpoch> log, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "epoch,train_loss,val_loss,tau\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << shortest(e.train_loss) << ',' << shortest(e.validation_loss)
        << ',' << shortest(e.tau) << '\n';
  }
}

void save_loss_log(std::span<const McneTEpoch> log, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "epoch,topology_loss,reconstruction_loss,combined_loss,tau\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << shortest(e.topology) << ',' << shortest(e.reconstruction) << ','
        << shortest(e.combined) << ',' << shortest(e.tau) << '\n';
  }
}

}  // namespace mcne
