#ifndef ELR_TRAINING_H_
#define ELR_TRAINING_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "elr/corpus.h"
#include "elr/logic.h"
#include "elr/simfeatures.h"

namespace elr {

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 1e-2;
  double mu = 0.6;
  double alpha = 0.7;
  double penalty_lambda = 10.0;
  uint64_t seed = 0;

  // Throws ValidationError when a field is out of range.
  void validate() const;
  // key = value lines, one per field.
  std::string to_text() const;
  static TrainConfig from_text(const std::string &text);
  bool operator==(const TrainConfig &other) const = default;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;          // total loss at the end of the epoch
  double ranking_loss = 0.0;
  double residual_sum = 0.0;
};

struct Model {
  ScoringGraph graph;
  TrainConfig config;
  FeatureCatalog catalog;
  std::vector<EpochLog> log;
};

std::string model_to_json(const Model &model);
Model model_from_json(const std::string &text);
void save_model(const Model &model, const std::string &path);
Model load_model(const std::string &path);

// sum over negatives n and positives p of max(0, mu - (s_p - s_n)).
double margin_loss(std::span<const double> scores, std::span<const int> labels, double mu);

// Table row indices of every instance's candidates, in candidate order.
// Throws ValidationError on a coverage gap.
std::vector<std::vector<size_t>> index_rows(const FeatureTable &table, const Dataset &ds);

// Sum of per-mention margin losses plus lambda * graph.residual_sum().
double total_loss(const ScoringGraph &graph, const FeatureTable &table, const Dataset &ds,
                  const TrainConfig &config);

// Analytic d(total_loss)/d(param), aligned with graph.params().
std::vector<double> gradients(const ScoringGraph &graph, const FeatureTable &table,
                              const Dataset &ds, const TrainConfig &config);
std::map<std::string, double> gradient_map(const ScoringGraph &graph,
                                           const FeatureTable &table, const Dataset &ds,
                                           const TrainConfig &config);

// Per-mention gradient descent in a seeded order for config.epochs epochs.
// Each step descends on the mention's margin loss plus
// lambda * graph.residual_sum(). Only the slots in graph.trainable_mask()
// change.
Model train(const Dataset &ds, const FeatureTable &table, const ScoringGraph &graph,
            const TrainConfig &config, const FeatureCatalog &catalog = {});

struct SearchCell {
  TrainConfig config;
  double dev_f1 = 0.0;
  bool failed = false;
  std::string error;
};

struct SearchResult {
  TrainConfig best;
  std::vector<SearchCell> cells;
};

// Exhaustive search over mu x learning rate, selecting the best dev F1. Ties
// go to the lower learning rate, then the lower mu.
SearchResult hyperparameter_search(const ScoringGraph &graph, const Dataset &train_ds,
                                   const FeatureTable &train_table, const Dataset &dev_ds,
                                   const FeatureTable &dev_table, const TrainConfig &base,
                                   const std::vector<double> &mus,
                                   const std::vector<double> &learning_rates);

}  // namespace elr

#endif  // ELR_TRAINING_H_
