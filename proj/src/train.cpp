#include "hgformer/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

namespace hgformer {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int count_classes(std::span<const int> labels) {
  int c = 0;
  for (int y : labels) {
    if (y < 0) throw Error(ErrorKind::LabelOutOfRange, "negative label " + std::to_string(y));
    c = std::max(c, y + 1);
  }
  return c;
}

std::vector<std::vector<std::size_t>> members_by_class(std::span<const int> labels) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(count_classes(labels)));
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  return by_class;
}

template <class T>
Tensor<T> features_tensor(const Dataset& data) {
  return to_tensor<T>(data.features);
}

}  // namespace

std::vector<FoldSplit> make_folds(std::span<const int> labels, int k, std::uint64_t seed,
                                  std::vector<std::string>* warnings) {
  if (k < 2) throw Error(ErrorKind::InvalidParameters, "k must be >= 2");
  auto by_class = members_by_class(labels);
  std::size_t present = 0;
  for (const auto& m : by_class) present += m.empty() ? 0 : 1;
  if (present < 2)
    throw Error(ErrorKind::TooFewClasses, "stratified folds need >= 2 classes, got " +
                                              std::to_string(present));

  Rng rng(seed);
  const auto folds = static_cast<std::size_t>(k);
  std::vector<std::size_t> bin(labels.size());
  std::size_t offset = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& m = by_class[c];
    if (m.empty()) continue;
    if (warnings && m.size() < folds)
      warnings->push_back("class " + std::to_string(c) + " has " + std::to_string(m.size()) +
                          " members for " + std::to_string(k) + " folds");
    std::shuffle(m.begin(), m.end(), rng);
    for (std::size_t j = 0; j < m.size(); ++j) bin[m[j]] = (offset + j) % folds;
    offset = (offset + m.size()) % folds;
  }

  std::vector<FoldSplit> out(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    out[f].fold_index = static_cast<int>(f);
    out[f].train_mask.assign(labels.size(), false);
    out[f].test_mask.assign(labels.size(), false);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (bin[i] == f)
        out[f].test_mask[i] = true;
      else
        out[f].train_mask[i] = true;
    }
  }
  return out;
}

std::vector<FoldSplit> make_label_rate_splits(std::span<const int> labels, double rate, int repeats,
                                              std::uint64_t seed) {
  if (!(rate > 0.0 && rate < 1.0))
    throw Error(ErrorKind::InvalidParameters, "label rate must be in (0,1)");
  if (repeats < 1) throw Error(ErrorKind::InvalidParameters, "repeats must be >= 1");
  auto by_class = members_by_class(labels);
  Rng rng(seed);
  std::vector<FoldSplit> out;
  for (int r = 0; r < repeats; ++r) {
    FoldSplit s;
    s.fold_index = r;
    s.train_mask.assign(labels.size(), false);
    s.test_mask.assign(labels.size(), true);
    for (auto& m : by_class) {
      if (m.empty()) continue;
      std::shuffle(m.begin(), m.end(), rng);
      const auto take = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(rate * static_cast<double>(m.size()))));
      for (std::size_t j = 0; j < std::min(take, m.size()); ++j) {
        s.train_mask[m[j]] = true;
        s.test_mask[m[j]] = false;
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> TrainReport::accuracies() const {
  std::vector<double> out;
  for (const auto& f : folds) out.push_back(f.accuracy);
  return out;
}

bool TrainReport::any_non_finite() const {
  return std::any_of(folds.begin(), folds.end(), [](const FoldResult& f) { return f.non_finite; });
}

template <class T>
TrainedFold<T> train_one_fold(const Dataset& data, const FoldSplit& split, const ModelConfig& cfg) {
  data.validate();
  if (split.train_mask.size() != data.num_nodes() || split.test_mask.size() != data.num_nodes())
    throw Error(ErrorKind::ShapeMismatch, "fold masks do not match node count");
  ModelConfig c = cfg;
  c.num_classes = data.num_classes;
  c.feature_dim = static_cast<int>(data.features.cols());

  TrainedFold<T> out{Model<T>(c), {}, false, {}};
  const Tensor<T> x = features_tensor<T>(data);
  const Tensor<T> lap = to_tensor<T>(laplacian(data.hypergraph).values);
  AdamState<T> adam(AdamOptions{c.lr, c.weight_decay});
  Rng dropout_rng(c.seed ^ 0x9E3779B97F4A7C15ULL);

  out.loss_trace.reserve(static_cast<std::size_t>(c.epochs));
  for (int epoch = 0; epoch < c.epochs; ++epoch) {
    const Tensor<T> logits = out.model.forward(x, lap, true, dropout_rng);
    const Tensor<T> loss = softmax_cross_entropy(logits, data.labels, split.train_mask);
    const double value = static_cast<double>(loss.item());
    if (!std::isfinite(value)) {
      out.non_finite = true;
      out.diagnostic = "non-finite loss at epoch " + std::to_string(epoch);
      break;
    }
    out.loss_trace.push_back(value);
    backward(loss);
    adam_step(out.model.params(), adam);
  }
  return out;
}

double accuracy_from_logits(const Matrix& logits, std::span<const int> labels,
                            const std::vector<bool>& mask) {
  if (labels.size() != logits.rows() || mask.size() != logits.rows())
    throw Error(ErrorKind::ShapeMismatch, "accuracy: labels/mask do not match logits rows");
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    ++total;
    const auto row = logits.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[best]) best = j;
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  if (total == 0) throw Error(ErrorKind::EmptyMask, "accuracy: mask selects no nodes");
  return static_cast<double>(correct) / static_cast<double>(total);
}

template <class T>
double evaluate(const Model<T>& model, const Dataset& data, const std::vector<bool>& mask) {
  NoGradGuard guard;
  Rng unused(0);
  const Tensor<T> logits = model.forward(features_tensor<T>(data),
                                         to_tensor<T>(laplacian(data.hypergraph).values), false,
                                         unused);
  return accuracy_from_logits(to_matrix(logits), data.labels, mask);
}

namespace {

template <class T>
FoldResult run_fold(const Dataset& data, const FoldSplit& split, const ModelConfig& cfg) {
  const auto start = Clock::now();
  ModelConfig c = cfg;
  c.seed = cfg.seed + static_cast<std::uint64_t>(split.fold_index);
  TrainedFold<T> trained = train_one_fold<T>(data, split, c);
  FoldResult r;
  r.fold_index = split.fold_index;
  r.accuracy = evaluate(trained.model, data, split.test_mask);
  r.loss_trace = std::move(trained.loss_trace);
  r.non_finite = trained.non_finite;
  r.diagnostic = std::move(trained.diagnostic);
  r.seconds = seconds_since(start);
  return r;
}

}  // namespace

TrainReport cross_validate(const Dataset& data, const ModelConfig& cfg, const CvOptions& opts) {
  const auto start = Clock::now();
  data.validate();
  TrainReport report;
  report.dataset = data.name;
  report.config = cfg;
  report.config.num_classes = data.num_classes;
  report.config.feature_dim = static_cast<int>(data.features.cols());
  report.config.validate();

  std::vector<FoldSplit> splits;
  if (opts.label_rate) {
    report.protocol = "label-rate";
    splits = make_label_rate_splits(data.labels, *opts.label_rate, opts.folds, cfg.seed);
  } else {
    report.protocol = "kfold";
    splits = make_folds(data.labels, opts.folds, cfg.seed, &report.warnings);
  }

  report.folds.resize(splits.size());
  auto run = [&](std::size_t f) {
    report.folds[f] = report.config.precision == Precision::Single
                          ? run_fold<float>(data, splits[f], report.config)
                          : run_fold<double>(data, splits[f], report.config);
  };

  const auto threads = static_cast<std::size_t>(std::max(1, opts.threads));
  if (threads == 1) {
    for (std::size_t f = 0; f < splits.size(); ++f) run(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(splits.size());
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, splits.size()); ++t)
      pool.emplace_back([&] {
        for (std::size_t f = next++; f < splits.size(); f = next++) {
          try {
            run(f);
          } catch (...) {
            errors[f] = std::current_exception();
          }
        }
      });
    pool.clear();  // join
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  const auto acc = report.accuracies();
  report.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
  double var = 0.0;
  for (double a : acc) var += (a - report.mean) * (a - report.mean);
  report.std = std::sqrt(var / static_cast<double>(acc.size()));
  report.seconds = seconds_since(start);
  return report;
}

bool is_sweep_parameter(const std::string& name) {
  return name == "gamma" || name == "heads" || name == "layers" || name == "residual" ||
         name == "d_k";
}

ModelConfig with_parameter(ModelConfig cfg, const std::string& name, double value) {
  auto as_count = [&](const char* what) {
    if (value < 1.0 || value != std::floor(value))
      throw Error(ErrorKind::InvalidParameters,
                  std::string(what) + " must be a positive integer, got " + std::to_string(value));
    return static_cast<int>(value);
  };
  if (name == "gamma") {
    if (!(value >= 0.0 && value <= 1.0))
      throw Error(ErrorKind::GammaOutOfRange, "gamma " + std::to_string(value));
    cfg.gamma = value;
  } else if (name == "heads") {
    cfg.num_heads = as_count("heads");
  } else if (name == "layers") {
    cfg.num_layers = as_count("layers");
  } else if (name == "residual") {
    if (value != 0.0 && value != 1.0)
      throw Error(ErrorKind::InvalidParameters, "residual takes 0 or 1");
    cfg.use_residual = value != 0.0;
  } else if (name == "d_k") {
    cfg.d_k = cfg.d_q = as_count("d_k");
  } else {
    throw Error(ErrorKind::UnknownParameter,
                "'" + name + "' (expected gamma, heads, layers, residual or d_k)");
  }
  return cfg;
}

std::vector<SweepRow> sweep(const Dataset& data, const ModelConfig& base, const std::string& param,
                            std::vector<double> values, const CvOptions& opts) {
  if (!is_sweep_parameter(param))
    throw Error(ErrorKind::UnknownParameter,
                "'" + param + "' (expected gamma, heads, layers, residual or d_k)");
  std::sort(values.begin(), values.end());
  std::vector<ModelConfig> configs;
  for (double v : values) configs.push_back(with_parameter(base, param, v));  // validate up front

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const TrainReport r = cross_validate(data, configs[i], opts);
    rows.push_back({values[i], r.mean, r.std});
  }
  return rows;
}

template TrainedFold<double> train_one_fold<double>(const Dataset&, const FoldSplit&,
                                                    const ModelConfig&);
template TrainedFold<float> train_one_fold<float>(const Dataset&, const FoldSplit&,
                                                  const ModelConfig&);
template double evaluate<double>(const Model<double>&, const Dataset&, const std::vector<bool>&);
template double evaluate<float>(const Model<float>&, const Dataset&, const std::vector<bool>&);

}  // namespace hgformer
