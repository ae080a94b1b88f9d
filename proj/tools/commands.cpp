#include "commands.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "mcne/eval.hpp"
#include "mcne/graph.hpp"
#include "mcne/io.hpp"
#include "mcne/mcne_p.hpp"
#include "mcne/mcne_t.hpp"
#include "mcne/pretrain.hpp"

namespace mcne::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

struct PretrainOptions {
  CommonOptions common;
  std::string edges;
  std::string output = "embeddings.txt";
  SgnsConfig sgns;
};

struct TrainOptions {
  CommonOptions common;
  std::string flavor = "multi_hot";
  std::size_t s = 128;
  std::size_t t = 8;
  std::size_t kd_k = 16;
  std::size_t kd_d = 8;
  TrainConfig config;
};

struct CompressOptions {
  TrainOptions train;
  std::string embeddings;
};

struct TrainE2eOptions {
  TrainOptions train;
  std::string edges;
  double holdout = 0.0;
};

struct EvalOptions {
  CommonOptions common;
  std::string embeddings;
  std::string codebook;
  std::string labels;
  std::string split;
  double train_fraction = 0.1;
  std::size_t runs = 5;
  MemoryModel memory;
  LogRegConfig logreg;
};

struct MemoryOptions {
  CommonOptions common;
  std::string preset;
  std::uint64_t nodes = 0;
  std::uint64_t dim = 256;
  std::string flavor = "multi_hot";
  std::uint64_t s = 128;
  std::uint64_t t = 8;
  std::uint64_t kd_k = 16;
  std::uint64_t kd_d = 8;
  MemoryModel memory;
};

struct SbmOptions {
  CommonOptions common;
  std::vector<std::size_t> blocks{50, 50, 50, 50};
  double p_in = 0.3;
  double p_out = 0.02;
  std::string edges = "edges.txt";
  std::string labels = "labels.txt";
};

// Dataset presets from the reference settings table (|V|, s, t, K, D) at d = 256.
struct DatasetPreset {
  const char* name;
  std::uint64_t nodes;
  std::uint64_t s, t, k, d_blocks;
};
constexpr DatasetPreset kPresets[] = {
    {"blog", 10'312, 128, 8, 16, 8},
    {"dblp", 16'753, 128, 8, 16, 8},
    {"flickr", 23'664, 256, 16, 16, 16},
    {"youtube", 1'138'499, 8192, 32, 256, 32},
};

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--seed", common.seed, "Random seed")->capture_default_str();
  cmd->add_option("--out-dir", common.out_dir, "Directory for output files")->capture_default_str();
}

void add_train_options(CLI::App* cmd, TrainOptions& o) {
  add_common(cmd, o.common);
  cmd->add_option("--flavor", o.flavor, "Code layout: multi_hot or kd")
      ->check(CLI::IsMember({"multi_hot", "kd"}))
      ->capture_default_str();
  cmd->add_option("--s", o.s, "Number of basis vectors (multi_hot)")->capture_default_str();
  cmd->add_option("--t", o.t, "Selections per node (multi_hot)")->capture_default_str();
  cmd->add_option("--K", o.kd_k, "Basis vectors per block (kd)")->capture_default_str();
  cmd->add_option("--D", o.kd_d, "Number of blocks (kd)")->capture_default_str();
  cmd->add_option("--lr", o.config.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_option("--batch-size", o.config.batch_size, "Minibatch size")->capture_default_str();
  cmd->add_option("--epochs", o.config.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--tau-init", o.config.tau.initial, "Initial temperature")->capture_default_str();
  cmd->add_option("--tau-min", o.config.tau.minimum, "Temperature floor")->capture_default_str();
  cmd->add_option("--tau-decrement", o.config.tau.decrement, "Temperature decrement per step")
      ->capture_default_str();
  cmd->add_option("--tau-step-epochs", o.config.tau.step_epochs, "Epochs between decrements")
      ->capture_default_str();
}

fs::path output_path(const CommonOptions& common, const std::string& name) {
  return fs::path(common.out_dir) / name;
}

void ensure_out_dir(const CommonOptions& common) {
  if (!common.out_dir.empty()) fs::create_directories(common.out_dir);
}

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw std::invalid_argument(std::string("missing required input ") + flag);
  if (!fs::is_regular_file(path)) {
    throw std::invalid_argument(std::string(flag) + ": no such file " + path);
  }
}

CodeLayout resolve_layout(const TrainOptions& o) {
  if (o.flavor == "kd") return CodeLayout::kd(o.kd_k, o.kd_d);
  return CodeLayout::multi_hot(o.s, o.t);
}

void print_train_header(std::ostream& out, const char* command, const TrainConfig& c) {
  const auto& l = c.layout;
  out << "# " << command << " settings\n"
      << "#   flavor=" << l.flavor_name() << " s=" << l.basis_count << " t=" << l.selections;
  if (l.flavor == CodeFlavor::kKd) out << " K=" << l.block_size << " D=" << l.selections;
  out << "\n#   lr=" << c.learning_rate << " batch_size=" << c.batch_size << " epochs=" << c.epochs
      << "\n#   tau_init=" << c.tau.initial << " tau_min=" << c.tau.minimum
      << " tau_decrement=" << c.tau.decrement << " tau_step_epochs=" << c.tau.step_epochs
      << "\n#   seed=" << c.seed << "\n";
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_pretrain(PretrainOptions& o, std::ostream& out) {
  require_file(o.edges, "--edges");
  ensure_out_dir(o.common);
  o.sgns.seed = o.common.seed;
  const auto start = std::chrono::steady_clock::now();
  const Graph g = load_edge_list(o.edges);
  const auto table = train_sgns(g, o.sgns);
  const auto path = output_path(o.common, o.output);
  save_embeddings(table, path);
  out << "# pretrain settings\n#   dim=" << o.sgns.dim << " walks_per_node=" << o.sgns.walks_per_node
      << " walk_length=" << o.sgns.walk_length << " window=" << o.sgns.window
      << " negatives=" << o.sgns.negatives << " epochs=" << o.sgns.epochs
      << " lr=" << o.sgns.learning_rate << " seed=" << o.sgns.seed << "\n"
      << "nodes=" << table.node_count() << " dim=" << table.dim() << " time_s=" << seconds_since(start)
      << "\nwrote " << path.string() << "\n";
  return 0;
}

int cmd_compress(CompressOptions& o, std::ostream& out) {
  require_file(o.embeddings, "--embeddings");
  ensure_out_dir(o.train.common);
  TrainConfig config = o.train.config;
  config.layout = resolve_layout(o.train);
  config.seed = o.train.common.seed;
  config.validate();
  print_train_header(out, "compress", config);
  out << "#   encoder_layers=" << config.encoder_layers << " hidden_width="
      << (config.hidden_width ? config.hidden_width : config.latent_dim())
      << " validation_fraction=" << config.validation_fraction << "\n";

  const auto table = load_embeddings(o.embeddings);
  const auto start = std::chrono::steady_clock::now();
  const auto result = train_mcne_p(table, config);
  const auto cb_path = output_path(o.train.common, "codebook.txt");
  const auto log_path = output_path(o.train.common, "compress_log.csv");
  save_codebook(result.codebook, cb_path);
  save_loss_log(result.log, log_path);
  out << "nodes=" << table.node_count() << " dim=" << table.dim()
      << " best_epoch=" << result.best_epoch << " best_val_loss=" << result.best_validation_loss
      << " time_s=" << seconds_since(start) << "\nwrote " << cb_path.string() << "\nwrote "
      << log_path.string() << "\n";
  return 0;
}

int cmd_train_e2e(TrainE2eOptions& o, std::ostream& out) {
  require_file(o.edges, "--edges");
  ensure_out_dir(o.train.common);
  TrainConfig config = o.train.config;
  config.layout = resolve_layout(o.train);
  config.seed = o.train.common.seed;
  config.validate();
  print_train_header(out, "train-e2e", config);
  out << "#   dim=" << config.dim << " gcn_layers=" << config.gcn_layers
      << " gcn_hidden=" << config.gcn_hidden
      << " input_dim=" << (config.input_dim ? config.input_dim : config.dim)
      << " beta=" << config.beta << " linkpred_holdout=" << o.holdout << "\n";

  Graph g = load_edge_list(o.edges);
  if (o.holdout > 0.0) {
    auto split = split_edges(g, o.holdout, derive_seed(config.seed, 0x5B11));
    const auto split_path = output_path(o.train.common, "split.txt");
    const auto train_path = output_path(o.train.common, "train_edges.txt");
    save_split_pairs(split, split_path);
    save_edge_list(split.train_graph, train_path);
    out << "holdout positives=" << split.positives.size() << " negatives=" << split.negatives.size()
        << "\nwrote " << split_path.string() << "\nwrote " << train_path.string() << "\n";
    g = std::move(split.train_graph);
  }
  const auto start = std::chrono::steady_clock::now();
  const auto result = train_mcne_t(g, config);
  const auto cb_path = output_path(o.train.common, "codebook.txt");
  const auto emb_path = output_path(o.train.common, "embeddings.txt");
  const auto log_path = output_path(o.train.common, "train_e2e_log.csv");
  save_codebook(result.codebook, cb_path);
  save_embeddings(result.embeddings, emb_path);
  save_loss_log(result.log, log_path);
  out << "nodes=" << g.node_count() << " edges=" << g.edge_count()
      << " best_epoch=" << result.best_epoch
      << " skipped_isolated=" << result.triplet_stats.skipped_isolated
      << " skipped_saturated=" << result.triplet_stats.skipped_saturated
      << " time_s=" << seconds_since(start) << "\nwrote " << cb_path.string() << "\nwrote "
      << emb_path.string() << "\nwrote " << log_path.string() << "\n";
  return 0;
}

int cmd_eval(EvalOptions& o, std::ostream& out) {
  if (o.embeddings.empty() == o.codebook.empty()) {
    throw std::invalid_argument("eval: give exactly one of --embeddings or --codebook");
  }
  if (o.labels.empty() && o.split.empty()) {
    throw std::invalid_argument("eval: give --labels (classification) and/or --split (link prediction)");
  }
  ensure_out_dir(o.common);
  EvalReport report;
  DenseMatrix features;
  if (!o.codebook.empty()) {
    require_file(o.codebook, "--codebook");
    const auto cb = load_codebook(o.codebook);
    features = reconstruct_all(cb);
    report.has_codebook = true;
    report.compressed = memory_report(layout_of(cb), o.memory);
    report.utilization = basis_utilization(cb);
  } else {
    require_file(o.embeddings, "--embeddings");
    features = load_embeddings(o.embeddings).matrix;
  }
  report.original = memory_report(OneHotLayout{features.rows(), features.cols()}, o.memory);
  if (report.has_codebook) report.ratios = compression_ratios(report.original, report.compressed);

  if (!o.labels.empty()) {
    require_file(o.labels, "--labels");
    const auto labels = load_labels(o.labels, features.rows());
    report.classification =
        run_classification_eval(features, labels, o.train_fraction, o.runs, o.common.seed, o.logreg);
    report.has_classification = true;
  }
  if (!o.split.empty()) {
    require_file(o.split, "--split");
    report.auc = run_linkpred_eval(features, load_split_pairs(o.split));
    report.has_linkpred = true;
  }
  const auto csv_path = output_path(o.common, "report.csv");
  const auto txt_path = output_path(o.common, "report.txt");
  std::ofstream(csv_path) << report.to_csv();
  std::ofstream(txt_path) << report.to_text();
  out << "# eval settings\n#   train_fraction=" << o.train_fraction << " runs=" << o.runs
      << " seed=" << o.common.seed << " float_bytes=" << o.memory.float_bytes
      << " int_bytes=" << o.memory.int_bytes << "\n"
      << report.to_text() << "wrote " << csv_path.string() << "\nwrote " << txt_path.string()
      << "\n";
  return 0;
}

struct MemoryRow {
  std::string name;
  MemoryCost original;
  MemoryCost compressed;
};

int cmd_report_memory(MemoryOptions& o, std::ostream& out) {
  std::vector<MemoryRow> rows;
  auto add_row = [&](std::string name, std::uint64_t nodes, const StorageLayout& layout) {
    rows.push_back({std::move(name), memory_report(OneHotLayout{nodes, o.dim}, o.memory),
                    memory_report(layout, o.memory)});
  };
  if (!o.preset.empty()) {
    bool found = false;
    for (const auto& p : kPresets) {
      if (o.preset != "all" && o.preset != p.name) continue;
      found = true;
      if (o.flavor == "kd") {
        add_row(p.name, p.nodes, KdLayout{p.k, p.d_blocks, o.dim, p.nodes});
      } else {
        add_row(p.name, p.nodes, MultiHotLayout{p.s, p.t, o.dim, p.nodes});
      }
    }
    if (!found) throw std::invalid_argument("--preset: unknown dataset \"" + o.preset + "\"");
  } else {
    if (o.nodes == 0) throw std::invalid_argument("report-memory: give --nodes or --preset");
    if (o.flavor == "kd") {
      add_row("custom", o.nodes, KdLayout{o.kd_k, o.kd_d, o.dim, o.nodes});
    } else {
      add_row("custom", o.nodes, MultiHotLayout{o.s, o.t, o.dim, o.nodes});
    }
  }

  std::ostringstream csv;
  csv << "dataset,one_hot_params,one_hot_bytes,one_hot_params_m,one_hot_mb,compressed_params,"
         "compressed_bytes,compressed_params_m,compressed_mb,ratio_params,ratio_bytes,"
         "ratio_params_table,ratio_bytes_table\n";
  out << "# report-memory float_bytes=" << o.memory.float_bytes << " int_bytes=" << o.memory.int_bytes
      << " dim=" << o.dim << " flavor=" << o.flavor << "\n";
  out << "dataset   one-hot(M)  one-hot(MB)  " << o.flavor << "(M)  " << o.flavor
      << "(MB)  ratio(params)  ratio(bytes)\n";
  for (const auto& r : rows) {
    const auto ratios = compression_ratios(r.original, r.compressed);
    char line[256];
    std::snprintf(line, sizeof line, "%-9s %10s  %11s  %s (%.2f)  %s (%.2f)  %.2f  %.2f\n",
                  r.name.c_str(), format_million(r.original.params).c_str(),
                  format_megabytes(r.original.bytes).c_str(),
                  format_million(r.compressed.params).c_str(), ratios.params_display,
                  format_megabytes(r.compressed.bytes).c_str(), ratios.bytes_display,
                  ratios.params, ratios.bytes);
    out << line;
    csv << r.name << ',' << r.original.params << ',' << r.original.bytes << ','
        << format_million(r.original.params) << ',' << format_megabytes(r.original.bytes) << ','
        << r.compressed.params << ',' << r.compressed.bytes << ','
        << format_million(r.compressed.params) << ',' << format_megabytes(r.compressed.bytes)
        << ',' << format_real(ratios.params) << ',' << format_real(ratios.bytes) << ','
        << format_real(ratios.params_display) << ',' << format_real(ratios.bytes_display) << '\n';
  }
  ensure_out_dir(o.common);
  const auto path = output_path(o.common, "memory_report.csv");
  std::ofstream(path) << csv.str();
  out << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_generate_sbm(SbmOptions& o, std::ostream& out) {
  ensure_out_dir(o.common);
  const auto sbm = generate_sbm(o.blocks, o.p_in, o.p_out, o.common.seed);
  const auto edges_path = output_path(o.common, o.edges);
  const auto labels_path = output_path(o.common, o.labels);
  save_edge_list(sbm.graph, edges_path);
  save_labels(sbm.labels, labels_path);
  out << "nodes=" << sbm.graph.node_count() << " edges=" << sbm.graph.edge_count()
      << " blocks=" << o.blocks.size() << "\nwrote " << edges_path.string() << "\nwrote "
      << labels_path.string() << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compact multi-hot node embeddings: pretrain, compress, train end-to-end, evaluate",
               "mcne"};
  app.require_subcommand(1);
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "INI/TOML file; sections named after subcommands");

  PretrainOptions pretrain;
  auto* pretrain_cmd = app.add_subcommand("pretrain", "Skip-gram embeddings from random walks");
  add_common(pretrain_cmd, pretrain.common);
  pretrain_cmd->add_option("--edges", pretrain.edges, "Edge-list file")->required();
  pretrain_cmd->add_option("--output", pretrain.output, "Embedding file name inside --out-dir")
      ->capture_default_str();
  pretrain_cmd->add_option("--dim", pretrain.sgns.dim, "Embedding dimension")->capture_default_str();
  pretrain_cmd->add_option("--walks-per-node", pretrain.sgns.walks_per_node)->capture_default_str();
  pretrain_cmd->add_option("--walk-length", pretrain.sgns.walk_length)->capture_default_str();
  pretrain_cmd->add_option("--window", pretrain.sgns.window)->capture_default_str();
  pretrain_cmd->add_option("--negatives", pretrain.sgns.negatives)->capture_default_str();
  pretrain_cmd->add_option("--epochs", pretrain.sgns.epochs)->capture_default_str();
  pretrain_cmd->add_option("--lr", pretrain.sgns.learning_rate)->capture_default_str();

  CompressOptions compress;
  auto* compress_cmd = app.add_subcommand("compress", "Compress an embedding file into a codebook");
  add_train_options(compress_cmd, compress.train);
  compress_cmd->add_option("--embeddings", compress.embeddings, "Embedding file")->required();
  compress_cmd->add_option("--encoder-layers", compress.train.config.encoder_layers)
      ->capture_default_str();
  compress_cmd->add_option("--hidden-width", compress.train.config.hidden_width,
                           "Encoder hidden width (0 = s/2)")
      ->capture_default_str();
  compress_cmd->add_option("--validation-fraction", compress.train.config.validation_fraction)
      ->capture_default_str();

  TrainE2eOptions e2e;
  auto* e2e_cmd = app.add_subcommand("train-e2e", "Learn compact embeddings from graph topology");
  add_train_options(e2e_cmd, e2e.train);
  e2e.train.config.dim = 256;
  e2e_cmd->add_option("--edges", e2e.edges, "Edge-list file")->required();
  e2e_cmd->add_option("--dim", e2e.train.config.dim, "Embedding dimension")->capture_default_str();
  e2e_cmd->add_option("--input-dim", e2e.train.config.input_dim, "Input matrix width (0 = dim)")
      ->capture_default_str();
  e2e_cmd->add_option("--gcn-layers", e2e.train.config.gcn_layers)->capture_default_str();
  e2e_cmd->add_option("--gcn-hidden", e2e.train.config.gcn_hidden)->capture_default_str();
  e2e_cmd->add_option("--beta", e2e.train.config.beta, "Reconstruction weight")
      ->capture_default_str();
  e2e_cmd->add_option("--linkpred-holdout", e2e.holdout,
                      "Fraction of edges held out for link prediction (0 = none)")
      ->check(CLI::Range(0.0, 0.99))
      ->capture_default_str();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Classification, link prediction and memory report");
  add_common(eval_cmd, eval.common);
  eval_cmd->add_option("--embeddings", eval.embeddings, "Embedding file");
  eval_cmd->add_option("--codebook", eval.codebook, "Codebook file");
  eval_cmd->add_option("--labels", eval.labels, "Label file for node classification");
  eval_cmd->add_option("--split", eval.split, "Split file for link prediction");
  eval_cmd->add_option("--train-fraction", eval.train_fraction)->capture_default_str();
  eval_cmd->add_option("--runs", eval.runs)->capture_default_str();
  eval_cmd->add_option("--float-bytes", eval.memory.float_bytes)->capture_default_str();
  eval_cmd->add_option("--int-bytes", eval.memory.int_bytes)->capture_default_str();

  MemoryOptions memory;
  auto* memory_cmd = app.add_subcommand("report-memory", "Parameter and byte accounting");
  add_common(memory_cmd, memory.common);
  memory_cmd->add_option("--preset", memory.preset, "blog, dblp, flickr, youtube or all");
  memory_cmd->add_option("--nodes", memory.nodes);
  memory_cmd->add_option("--dim", memory.dim)->capture_default_str();
  memory_cmd->add_option("--flavor", memory.flavor)
      ->check(CLI::IsMember({"multi_hot", "kd"}))
      ->capture_default_str();
  memory_cmd->add_option("--s", memory.s)->capture_default_str();
  memory_cmd->add_option("--t", memory.t)->capture_default_str();
  memory_cmd->add_option("--K", memory.kd_k)->capture_default_str();
  memory_cmd->add_option("--D", memory.kd_d)->capture_default_str();
  memory_cmd->add_option("--float-bytes", memory.memory.float_bytes)->capture_default_str();
  memory_cmd->add_option("--int-bytes", memory.memory.int_bytes)->capture_default_str();

  SbmOptions sbm;
  auto* sbm_cmd = app.add_subcommand("generate-sbm", "Write a stochastic block model graph");
  add_common(sbm_cmd, sbm.common);
  sbm_cmd->add_option("--blocks", sbm.blocks, "Block sizes")->delimiter(',')->capture_default_str();
  sbm_cmd->add_option("--p-in", sbm.p_in)->capture_default_str();
  sbm_cmd->add_option("--p-out", sbm.p_out)->capture_default_str();
  sbm_cmd->add_option("--edges-name", sbm.edges)->capture_default_str();
  sbm_cmd->add_option("--labels-name", sbm.labels)->capture_default_str();

  std::vector<std::string> argv_rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv_rest.begin(), argv_rest.end());
  try {
    app.parse(argv_rest);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*pretrain_cmd) return cmd_pretrain(pretrain, out);
    if (*compress_cmd) return cmd_compress(compress, out);
    if (*e2e_cmd) return cmd_train_e2e(e2e, out);
    if (*eval_cmd) return cmd_eval(eval, out);
    if (*memory_cmd) return cmd_report_memory(memory, out);
    if (*sbm_cmd) return cmd_generate_sbm(sbm, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace mcne::cli
