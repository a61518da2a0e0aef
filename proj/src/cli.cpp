#include "hgformer/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "hgformer/baselines.hpp"
#include "hgformer/io.hpp"

namespace hgformer {

namespace fs = std::filesystem;

std::vector<double> parse_value_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    parts.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size())
      throw Error(ErrorKind::InvalidParameters, "bad value '" + s + "' in list '" + text + "'");
    return v;
  };

  std::vector<double> out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i] != "...") {
      out.push_back(number(parts[i]));
      continue;
    }
    if (out.size() < 2 || i + 1 >= parts.size())
      throw Error(ErrorKind::InvalidParameters, "'...' needs two values before and one after");
    const double step = out[out.size() - 1] - out[out.size() - 2];
    const double last = number(parts[++i]);
    if (step == 0.0 || (last - out.back()) / step < 0.0)
      throw Error(ErrorKind::InvalidParameters, "progression in '" + text + "' does not reach its end");
    const double first = out[out.size() - 2];
    const long steps = std::lround((last - first) / step);
    for (long s = 2; s < steps; ++s) {
      const double v = first + static_cast<double>(s) * step;
      out.push_back(std::round(v * 1e12) / 1e12);
    }
    out.push_back(last);
  }
  if (out.empty()) throw Error(ErrorKind::InvalidParameters, "empty value list");
  return out;
}

namespace {

struct DataSource {
  std::string manifest;
  bool synthetic = false;
  std::uint64_t synthetic_seed = 0;
};

struct ConfigOptions {
  ModelConfig cfg;
  bool no_residual = false;
  bool single = false;
};

void add_data_options(CLI::App* app, DataSource& src) {
  app->add_option("--manifest", src.manifest, "Dataset manifest (JSON)");
  app->add_flag("--synthetic", src.synthetic, "Use the built-in synthetic community fixture");
  app->add_option("--synthetic-seed", src.synthetic_seed, "Seed of the synthetic fixture");
}

void add_config_options(CLI::App* app, ConfigOptions& o) {
  auto& c = o.cfg;
  app->add_option("--gamma", c.gamma, "Attention/Laplacian mixing coefficient in [0,1]")
      ->capture_default_str();
  app->add_option("--layers", c.num_layers, "Number of layers")->capture_default_str();
  app->add_option("--heads", c.num_heads, "Attention heads per layer")->capture_default_str();
  app->add_option("--d-h", c.d_h, "Hidden width")->capture_default_str();
  app->add_option("--d-k", c.d_k, "Key/query width")->capture_default_str();
  app->add_option("--d-q", c.d_q, "Value width")->capture_default_str();
  app->add_option("--dropout", c.dropout, "Dropout rate")->capture_default_str();
  app->add_flag("--no-residual", o.no_residual, "Disable residual connections");
  app->add_option("--lr", c.lr, "Adam learning rate")->capture_default_str();
  app->add_option("--weight-decay", c.weight_decay, "Decoupled weight decay")->capture_default_str();
  app->add_option("--epochs", c.epochs, "Training epochs per fold")->capture_default_str();
  app->add_option("--ln-eps", c.ln_eps, "Layer-norm epsilon")->capture_default_str();
  app->add_option("--seed", c.seed, "Base random seed")->capture_default_str();
  app->add_flag("--single", o.single, "Single-precision tensors");
}

ModelConfig finish(const ConfigOptions& o) {
  ModelConfig c = o.cfg;
  c.use_residual = !o.no_residual;
  c.precision = o.single ? Precision::Single : Precision::Double;
  return c;
}

Dataset load(const DataSource& src) {
  if (!src.manifest.empty()) return load_dataset(src.manifest);
  if (src.synthetic) {
    SyntheticOptions opts;
    opts.seed = src.synthetic_seed;
    return generate_synthetic(opts);
  }
  throw CLI::ValidationError("--manifest", "one of --manifest or --synthetic is required");
}

void print_config(std::ostream& out, const std::string& command, const ModelConfig& cfg,
                  const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json j{{"command", command}, {"config", config_to_json(cfg)}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  out << "# effective configuration: " << j.dump() << '\n';
}

void write_text(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::FileNotFound, "cannot write " + path);
  fn(f);
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hypergraph node classification with Laplacian-mixed attention", "hgformer"};
  app.require_subcommand(1);

  // train
  DataSource train_src;
  ConfigOptions train_cfg;
  int train_fold = 0;
  int train_folds = 10;
  std::string checkpoint_path;
  auto* train = app.add_subcommand("train", "Train on one stratified fold and report test accuracy");
  add_data_options(train, train_src);
  add_config_options(train, train_cfg);
  train->add_option("--fold", train_fold, "Fold index to hold out")->capture_default_str();
  train->add_option("--folds", train_folds, "Number of folds")->capture_default_str();
  train->add_option("--checkpoint", checkpoint_path, "Write trained parameters here");

  // cv
  DataSource cv_src;
  ConfigOptions cv_cfg;
  CvOptions cv_opts;
  std::string cv_out, cv_json;
  std::optional<double> cv_label_rate;
  auto* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation");
  add_data_options(cv, cv_src);
  add_config_options(cv, cv_cfg);
  cv->add_option("--folds", cv_opts.folds, "Number of folds")->capture_default_str();
  cv->add_option("--threads", cv_opts.threads, "Folds trained concurrently")->capture_default_str();
  cv->add_option("--label-rate", cv_label_rate,
                 "Train on this fraction of each class instead of k-fold splits");
  cv->add_option("--out", cv_out, "CSV report path");
  cv->add_option("--json", cv_json, "JSON report path");

  // sweep
  DataSource sw_src;
  ConfigOptions sw_cfg;
  CvOptions sw_opts;
  std::string sw_param, sw_values, sw_out;
  std::optional<double> sw_label_rate;
  auto* sw = app.add_subcommand("sweep", "Grid over one hyperparameter, one CV run per value");
  add_data_options(sw, sw_src);
  add_config_options(sw, sw_cfg);
  sw->add_option("--param", sw_param, "gamma | heads | layers | residual | d_k")->required();
  sw->add_option("--values", sw_values, "Comma list, e.g. 0,0.1,...,1.0")->required();
  sw->add_option("--folds", sw_opts.folds, "Number of folds")->capture_default_str();
  sw->add_option("--threads", sw_opts.threads, "Folds trained concurrently")->capture_default_str();
  sw->add_option("--label-rate", sw_label_rate, "Label-rate protocol instead of k-fold");
  sw->add_option("--out", sw_out, "CSV output path (stdout when omitted)");

  // verify-equivalence
  std::size_t eq_trials = 100, eq_nodes = 12;
  std::uint64_t eq_seed = 0;
  auto* eq = app.add_subcommand("verify-equivalence",
                                "Check two-stage vs one-stage message passing on random hypergraphs");
  eq->add_option("--trials", eq_trials, "Random hypergraphs")->capture_default_str();
  eq->add_option("--max-nodes", eq_nodes, "Largest node count")->capture_default_str();
  eq->add_option("--seed", eq_seed, "Random seed")->capture_default_str();

  // laplacian
  DataSource lap_src;
  std::string lap_out;
  auto* lap = app.add_subcommand("laplacian", "Print the normalized hypergraph Laplacian as CSV");
  add_data_options(lap, lap_src);
  lap->add_option("--out", lap_out, "CSV output path (stdout when omitted)");

  // synth
  SyntheticOptions syn;
  std::string syn_dir;
  auto* synth = app.add_subcommand("synth", "Write a synthetic community dataset");
  synth->add_option("--out-dir", syn_dir, "Output directory")->required();
  synth->add_option("--nodes", syn.num_nodes, "Nodes")->capture_default_str();
  synth->add_option("--classes", syn.num_classes, "Classes")->capture_default_str();
  synth->add_option("--edges-per-class", syn.edges_per_class, "Intra-class hyperedges per class")
      ->capture_default_str();
  synth->add_option("--edge-size", syn.edge_size, "Nodes per hyperedge")->capture_default_str();
  synth->add_option("--noise", syn.noise, "Uniform feature noise amplitude")->capture_default_str();
  synth->add_option("--seed", syn.seed, "Random seed")->capture_default_str();

  // ingest-check
  std::string ic_manifest;
  auto* ic = app.add_subcommand("ingest-check", "Load a dataset and print its statistics");
  ic->add_option("--manifest", ic_manifest, "Dataset manifest (JSON)")->required();

  std::string command = "hgformer";
  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
    command = app.get_subcommands().front()->get_name();

    if (*train) {
      const Dataset data = load(train_src);
      ModelConfig cfg = finish(train_cfg);
      print_config(out, command, cfg, {{"dataset", data.name}, {"fold", train_fold}});
      const auto splits = make_folds(data.labels, train_folds, cfg.seed);
      if (train_fold < 0 || train_fold >= static_cast<int>(splits.size()))
        throw CLI::ValidationError("--fold", "out of range");
      const auto& split = splits[static_cast<std::size_t>(train_fold)];
      double acc = 0.0;
      bool non_finite = false;
      auto run = [&](auto tag) {
        using T = decltype(tag);
        auto trained = train_one_fold<T>(data, split, cfg);
        non_finite = trained.non_finite;
        acc = evaluate(trained.model, data, split.test_mask);
        if (!trained.loss_trace.empty())
          out << "final_loss," << trained.loss_trace.back() << '\n';
        if (!checkpoint_path.empty())
          write_text(checkpoint_path, [&](std::ostream& f) { save_checkpoint(trained.model.params(), f); });
      };
      if (cfg.precision == Precision::Single)
        run(float{});
      else
        run(double{});
      out << "test_accuracy," << acc << '\n';
      if (non_finite) {
        err << "train: non-finite loss, training aborted\n";
        return kExitNumeric;
      }
    } else if (*cv) {
      const Dataset data = load(cv_src);
      const ModelConfig cfg = finish(cv_cfg);
      cv_opts.label_rate = cv_label_rate;
      print_config(out, command, cfg,
                   {{"dataset", data.name}, {"folds", cv_opts.folds}, {"threads", cv_opts.threads}});
      const TrainReport report = cross_validate(data, cfg, cv_opts);
      for (const auto& w : report.warnings) err << "warning: " << w << '\n';
      write_report_csv(report, out);
      if (!cv_out.empty()) write_text(cv_out, [&](std::ostream& f) { write_report_csv(report, f); });
      if (!cv_json.empty())
        write_text(cv_json, [&](std::ostream& f) { f << report_to_json(report).dump(2) << '\n'; });
      if (report.any_non_finite()) {
        err << "cv: at least one fold hit a non-finite loss\n";
        return kExitNumeric;
      }
    } else if (*sw) {
      const Dataset data = load(sw_src);
      const ModelConfig cfg = finish(sw_cfg);
      sw_opts.label_rate = sw_label_rate;
      const auto values = parse_value_list(sw_values);
      print_config(out, command, cfg,
                   {{"dataset", data.name}, {"param", sw_param}, {"values", values}});
      const auto rows = sweep(data, cfg, sw_param, values, sw_opts);
      write_sweep_csv(rows, out);
      if (!sw_out.empty()) write_text(sw_out, [&](std::ostream& f) { write_sweep_csv(rows, f); });
    } else if (*eq) {
      out << "# effective configuration: "
          << nlohmann::json{{"command", command}, {"trials", eq_trials}, {"max_nodes", eq_nodes},
                            {"seed", eq_seed}}
                 .dump()
          << '\n';
      const auto report = verify_equivalence(eq_trials, eq_nodes, eq_seed);
      out << std::setprecision(6) << "hypersage_max_deviation," << report.hypersage_max_dev << '\n'
          << "unigcn_max_deviation," << report.unigcn_max_dev << '\n';
      if (!report.passed()) {
        err << "verify-equivalence: deviation above 1e-9\n";
        return kExitNumeric;
      }
    } else if (*lap) {
      const Dataset data = load(lap_src);
      const LaplacianMatrix l = laplacian(data.hypergraph);
      for (NodeId v : l.isolated_nodes) err << "warning: node " << v << " is isolated\n";
      auto dump = [&](std::ostream& f) {
        f << std::setprecision(std::numeric_limits<double>::max_digits10);
        for (std::size_t i = 0; i < l.values.rows(); ++i) {
          const auto row = l.values.row(i);
          for (std::size_t j = 0; j < row.size(); ++j) f << (j ? "," : "") << row[j];
          f << '\n';
        }
      };
      if (lap_out.empty())
        dump(out);
      else
        write_text(lap_out, dump);
    } else if (*synth) {
      out << "# effective configuration: "
          << nlohmann::json{{"command", command},
                            {"nodes", syn.num_nodes},
                            {"classes", syn.num_classes},
                            {"edges_per_class", syn.edges_per_class},
                            {"edge_size", syn.edge_size},
                            {"noise", syn.noise},
                            {"seed", syn.seed}}
                 .dump()
          << '\n';
      const fs::path manifest = save_dataset(generate_synthetic(syn), syn_dir);
      out << "manifest," << manifest.string() << '\n';
    } else if (*ic) {
      const Dataset data = load_dataset(ic_manifest);
      const DegreeVectors deg = compute_degrees(data.hypergraph);
      double avg_dv = 0.0, avg_de = 0.0, avg_neigh = 0.0;
      for (NodeId v = 0; v < data.num_nodes(); ++v) {
        avg_dv += static_cast<double>(data.hypergraph.incident_edges(v).size());
        avg_neigh += static_cast<double>(neighborhood(data.hypergraph, v).size());
      }
      for (auto d : deg.edge_degrees) avg_de += static_cast<double>(d);
      avg_dv /= static_cast<double>(data.num_nodes());
      avg_neigh /= static_cast<double>(data.num_nodes());
      avg_de /= static_cast<double>(data.hypergraph.num_edges());
      out << "# effective configuration: "
          << nlohmann::json{{"command", command}, {"manifest", ic_manifest}}.dump() << '\n'
          << "name," << data.name << '\n'
          << "nodes," << data.num_nodes() << '\n'
          << "edges," << data.hypergraph.num_edges() << '\n'
          << "features," << data.features.cols() << '\n'
          << "classes," << data.num_classes << '\n'
          << std::setprecision(4) << "avg_node_degree," << avg_dv << '\n'
          << "avg_edge_degree," << avg_de << '\n'
          << "avg_neighbourhood," << avg_neigh << '\n';
      for (const auto& w : data.warnings()) err << "warning: " << w << '\n';
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << command << ": " << e.what() << '\n';
    if (e.kind() == ErrorKind::UnknownParameter || e.kind() == ErrorKind::InvalidParameters ||
        e.kind() == ErrorKind::GammaOutOfRange || e.kind() == ErrorKind::InvalidProbability)
      return kExitUsage;
    return is_numeric(e.kind()) ? kExitNumeric : kExitData;
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace hgformer
