#include "hgformer/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace hgformer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, path.string());
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::FileNotFound, "cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

[[noreturn]] void malformed(const fs::path& path, std::size_t line, const std::string& why) {
  throw Error(ErrorKind::MalformedLine, path.string() + ":" + std::to_string(line) + ": " + why);
}

/// Calls fn(tokens, line_number) for each non-blank, non-comment line.
template <class Fn>
void for_each_record(const fs::path& path, Fn fn) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    for (std::string tok; ss >> tok;) tokens.push_back(tok);
    fn(tokens, number);
  }
}

template <class Num>
Num parse_number(const std::string& tok, const fs::path& path, std::size_t line) {
  Num v{};
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) malformed(path, line, "cannot parse '" + tok + "'");
  return v;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

DatasetManifest read_manifest(const fs::path& manifest_path) {
  std::ifstream in = open_input(manifest_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedLine, manifest_path.string() + ": " + e.what());
  }
  const fs::path base = manifest_path.parent_path();
  DatasetManifest m;
  try {
    m.name = j.value("name", manifest_path.stem().string());
    m.num_nodes = j.at("num_nodes").get<std::size_t>();
    m.num_classes = j.at("num_classes").get<int>();
    m.edges = resolve(base, j.at("edges").get<std::string>());
    m.features = resolve(base, j.at("features").get<std::string>());
    m.labels = resolve(base, j.at("labels").get<std::string>());
    if (j.contains("weights") && !j["weights"].is_null())
      m.weights = resolve(base, j["weights"].get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedLine, manifest_path.string() + ": " + e.what());
  }
  return m;
}

Dataset load_dataset(const fs::path& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);

  std::vector<std::vector<NodeId>> edges;
  for_each_record(m.edges, [&](const std::vector<std::string>& tok, std::size_t line) {
    std::vector<NodeId> e;
    for (const auto& t : tok) {
      const auto id = parse_number<std::uint64_t>(t, m.edges, line);
      if (id >= m.num_nodes)
        malformed(m.edges, line, "node id " + t + " >= num_nodes " + std::to_string(m.num_nodes));
      if (std::find(e.begin(), e.end(), id) != e.end())
        malformed(m.edges, line, "node id " + t + " repeated in hyperedge");
      e.push_back(static_cast<NodeId>(id));
    }
    if (e.size() < 2) malformed(m.edges, line, "hyperedge needs >= 2 nodes");
    edges.push_back(std::move(e));
  });

  std::optional<std::vector<double>> weights;
  if (m.weights) {
    weights.emplace();
    for_each_record(*m.weights, [&](const std::vector<std::string>& tok, std::size_t line) {
      if (tok.size() != 1) malformed(*m.weights, line, "expected one weight");
      weights->push_back(parse_number<double>(tok[0], *m.weights, line));
    });
    if (weights->size() != edges.size())
      throw Error(ErrorKind::ShapeMismatch, m.weights->string() + ": " +
                                                std::to_string(weights->size()) + " weights for " +
                                                std::to_string(edges.size()) + " edges");
  }

  std::vector<std::vector<double>> rows;
  for_each_record(m.features, [&](const std::vector<std::string>& tok, std::size_t line) {
    std::vector<double> r;
    for (const auto& t : tok) r.push_back(parse_number<double>(t, m.features, line));
    if (!rows.empty() && r.size() != rows.front().size())
      malformed(m.features, line, std::to_string(r.size()) + " columns, expected " +
                                      std::to_string(rows.front().size()));
    rows.push_back(std::move(r));
  });
  if (rows.size() != m.num_nodes)
    throw Error(ErrorKind::ShapeMismatch, m.features.string() + ": " + std::to_string(rows.size()) +
                                              " feature rows for num_nodes " +
                                              std::to_string(m.num_nodes));
  Matrix features(m.num_nodes, rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), features.row(i).begin());

  std::vector<int> labels(m.num_nodes, -1);
  std::size_t label_count = 0;
  for_each_record(m.labels, [&](const std::vector<std::string>& tok, std::size_t line) {
    if (tok.size() != 2) malformed(m.labels, line, "expected 'node_id<TAB>class_id'");
    const auto node = parse_number<std::uint64_t>(tok[0], m.labels, line);
    const auto cls = parse_number<int>(tok[1], m.labels, line);
    if (node >= m.num_nodes) malformed(m.labels, line, "node id " + tok[0] + " out of range");
    if (cls < 0 || cls >= m.num_classes) malformed(m.labels, line, "class " + tok[1] + " out of range");
    if (labels[node] != -1) malformed(m.labels, line, "node " + tok[0] + " labelled twice");
    labels[node] = cls;
    ++label_count;
  });
  if (label_count != m.num_nodes)
    throw Error(ErrorKind::ShapeMismatch, m.labels.string() + ": " + std::to_string(label_count) +
                                              " labels for num_nodes " +
                                              std::to_string(m.num_nodes));

  Dataset d{m.name, Hypergraph::from_edge_list(std::move(edges), m.num_nodes, std::move(weights)),
            std::move(features), std::move(labels), m.num_classes};
  d.validate();
  return d;
}

fs::path save_dataset(const Dataset& data, const fs::path& dir) {
  fs::create_directories(dir);
  {
    auto out = open_output(dir / "edges.txt");
    for (const auto& e : data.hypergraph.edges()) {
      for (std::size_t k = 0; k < e.size(); ++k) out << (k ? " " : "") << e[k];
      out << '\n';
    }
  }
  const bool unit = std::all_of(data.hypergraph.weights().begin(), data.hypergraph.weights().end(),
                                [](double w) { return w == 1.0; });
  if (!unit) {
    auto out = open_output(dir / "weights.txt");
    for (double w : data.hypergraph.weights()) out << w << '\n';
  }
  {
    auto out = open_output(dir / "features.tsv");
    for (std::size_t i = 0; i < data.features.rows(); ++i) {
      const auto row = data.features.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "\t" : "") << row[j];
      out << '\n';
    }
  }
  {
    auto out = open_output(dir / "labels.tsv");
    for (std::size_t i = 0; i < data.labels.size(); ++i) out << i << '\t' << data.labels[i] << '\n';
  }
  json j{{"name", data.name},
         {"num_nodes", data.num_nodes()},
         {"num_classes", data.num_classes},
         {"edges", "edges.txt"},
         {"features", "features.tsv"},
         {"labels", "labels.tsv"}};
  if (!unit) j["weights"] = "weights.txt";
  const fs::path manifest = dir / "manifest.json";
  open_output(manifest) << j.dump(2) << '\n';
  return manifest;
}

json config_to_json(const ModelConfig& c) {
  return json{{"gamma", c.gamma},
              {"num_layers", c.num_layers},
              {"num_heads", c.num_heads},
              {"d_h", c.d_h},
              {"d_k", c.d_k},
              {"d_q", c.d_q},
              {"dropout", c.dropout},
              {"use_residual", c.use_residual},
              {"num_classes", c.num_classes},
              {"feature_dim", c.feature_dim},
              {"ln_eps", c.ln_eps},
              {"lr", c.lr},
              {"weight_decay", c.weight_decay},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"precision", c.precision == Precision::Single ? "single" : "double"}};
}

void write_report_csv(const TrainReport& report, std::ostream& out) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "fold,accuracy\n";
  for (const auto& f : report.folds) out << f.fold_index << ',' << f.accuracy << '\n';
  out << "mean," << report.mean << '\n' << "std," << report.std << '\n';
  out.precision(old);
}

json report_to_json(const TrainReport& report) {
  json folds = json::array();
  for (const auto& f : report.folds)
    folds.push_back({{"fold", f.fold_index},
                     {"accuracy", f.accuracy},
                     {"non_finite", f.non_finite},
                     {"diagnostic", f.diagnostic},
                     {"seconds", f.seconds},
                     {"loss_trace", f.loss_trace}});
  return json{{"dataset", report.dataset},
              {"protocol", report.protocol},
              {"config", config_to_json(report.config)},
              {"folds", folds},
              {"mean", report.mean},
              {"std", report.std},
              {"seconds", report.seconds},
              {"warnings", report.warnings}};
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "value,mean,std\n";
  for (const auto& r : rows) out << r.value << ',' << r.mean << ',' << r.std << '\n';
  out.precision(old);
}

template <class T>
void save_checkpoint(const Params<T>& params, std::ostream& out) {
  const auto old = out.precision(std::numeric_limits<T>::max_digits10);
  for (const auto& [name, t] : params) {
    out << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) out << (i ? " " : "") << t.values()[i];
    out << '\n';
  }
  out.precision(old);
}

template <class T>
void load_checkpoint(Params<T>& params, std::istream& in) {
  std::string name;
  std::size_t rows = 0, cols = 0;
  while (in >> name >> rows >> cols) {
    auto it = params.find(name);
    if (it == params.end()) throw Error(ErrorKind::MalformedLine, "checkpoint: unknown parameter " + name);
    if (it->second.rows() != rows || it->second.cols() != cols)
      throw Error(ErrorKind::ShapeMismatch, "checkpoint: " + name + " is " +
                                                std::to_string(rows) + "x" + std::to_string(cols) +
                                                ", model has " + it->second.shape_string());
    auto dst = it->second.mutable_values();
    for (auto& v : dst) {
      double x;
      if (!(in >> x)) throw Error(ErrorKind::MalformedLine, "checkpoint: truncated values for " + name);
      v = T(x);
    }
  }
  if (!in.eof()) throw Error(ErrorKind::MalformedLine, "checkpoint: bad record header");
}

template void save_checkpoint<double>(const Params<double>&, std::ostream&);
template void save_checkpoint<float>(const Params<float>&, std::ostream&);
template void load_checkpoint<double>(Params<double>&, std::istream&);
template void load_checkpoint<float>(Params<float>&, std::istream&);

}  // namespace hgformer
