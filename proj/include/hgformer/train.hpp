#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hgformer/dataset.hpp"
#include "hgformer/model.hpp"

namespace hgformer {

struct FoldSplit {
  int fold_index = 0;
  std::vector<bool> train_mask;
  std::vector<bool> test_mask;
};

/// Stratified k-fold partition. Each class is shuffled and dealt into k
/// bins (remainders rotate across classes); fold i tests on bin i of every
/// class and trains on everything else. Classes with fewer than k members
/// are reported through `warnings` when given.
std::vector<FoldSplit> make_folds(std::span<const int> labels, int k, std::uint64_t seed,
                                  std::vector<std::string>* warnings = nullptr);

/// `repeats` random stratified splits that train on a `rate` fraction of
/// each class (at least one node) and test on the rest.
std::vector<FoldSplit> make_label_rate_splits(std::span<const int> labels, double rate, int repeats,
                                              std::uint64_t seed);

struct FoldResult {
  int fold_index = 0;
  double accuracy = 0.0;
  std::vector<double> loss_trace;
  bool non_finite = false;
  std::string diagnostic;
  double seconds = 0.0;
};

struct TrainReport {
  std::string dataset;
  ModelConfig config;
  std::string protocol;  // "kfold" or "label-rate"
  std::vector<FoldResult> folds;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over folds
  double seconds = 0.0;
  std::vector<std::string> warnings;

  std::vector<double> accuracies() const;
  bool any_non_finite() const;
};

template <class T>
struct TrainedFold {
  Model<T> model;
  std::vector<double> loss_trace;
  bool non_finite = false;
  std::string diagnostic;
};

/// Full-batch training: every epoch runs the model on all nodes, takes the
/// cross-entropy over train-mask nodes and makes one Adam step. A
/// non-finite loss stops the fold early and is flagged.
template <class T>
TrainedFold<T> train_one_fold(const Dataset& data, const FoldSplit& split, const ModelConfig& cfg);

/// Argmax accuracy over mask rows; ties go to the lowest class index.
double accuracy_from_logits(const Matrix& logits, std::span<const int> labels,
                            const std::vector<bool>& mask);

/// Eval-mode accuracy (no dropout) of `model` on the masked nodes.
template <class T>
double evaluate(const Model<T>& model, const Dataset& data, const std::vector<bool>& mask);

struct CvOptions {
  int folds = 10;
  std::optional<double> label_rate;  // switches to label-rate splits
  int threads = 1;                   // folds trained concurrently
};

/// Trains and evaluates one model per fold. Fold f uses seed cfg.seed + f.
TrainReport cross_validate(const Dataset& data, const ModelConfig& cfg, const CvOptions& opts = {});

struct SweepRow {
  double value = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

/// Names accepted by sweep(): gamma, heads, layers, residual, d_k.
bool is_sweep_parameter(const std::string& name);

/// Applies `value` to the named field. d_k sets both key and value widths.
ModelConfig with_parameter(ModelConfig cfg, const std::string& name, double value);

/// One cross_validate per value; rows sorted by value.
std::vector<SweepRow> sweep(const Dataset& data, const ModelConfig& base, const std::string& param,
                            std::vector<double> values, const CvOptions& opts = {});

}  // namespace hgformer
