#ifndef ELR_EVAL_H_
#define ELR_EVAL_H_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "elr/corpus.h"
#include "elr/ruledsl.h"
#include "elr/simfeatures.h"
#include "elr/training.h"

namespace elr {

struct Prediction {
  std::string mention_id;
  // Descending score; ties keep candidate list order.
  std::vector<std::pair<std::string, double>> ranked;
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::map<int, double> recall_at;
  std::vector<std::pair<std::string, bool>> per_mention;

  std::string to_json() const;
  static EvalReport from_json(const std::string &text);
  // Fixed columns: precision,recall,f1 then one r@k column per k.
  std::string to_csv() const;
  bool operator==(const EvalReport &other) const = default;
};

std::vector<Prediction> link(const ScoringGraph &graph, const Dataset &ds,
                             const FeatureTable &table);
std::vector<Prediction> link(const Model &model, const Dataset &ds, const FeatureTable &table);

// Top-1 correctness. Precision over predicted mentions, recall over all
// mentions of ds.
EvalReport prf1(const std::vector<Prediction> &preds, const Dataset &ds);
std::map<int, double> recall_at_k(const std::vector<Prediction> &preds, const Dataset &ds,
                                  const std::vector<int> &ks);

EvalReport evaluate(const Model &model, const Dataset &ds, const FeatureTable &table,
                    const std::vector<int> &ks = {1, 5, 10, 64});

// Frozen-parameter evaluation on another dataset. Throws ValidationError
// listing model features absent from the table.
EvalReport transfer_eval(const Model &model, const Dataset &ds, const FeatureTable &table,
                         const std::vector<int> &ks = {1, 5, 10, 64});

struct AblationRow {
  std::vector<std::string> templates;
  EvalReport report;
  bool operator==(const AblationRow &other) const = default;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::string to_csv() const;
  std::string to_markdown() const;
};

// Trains one model per template subset (the disjunction of the subset) with
// identical config and evaluates it on the test split.
AblationTable ablation(const Dataset &train_ds, const FeatureTable &train_table,
                       const Dataset &test_ds, const FeatureTable &test_table,
                       const std::vector<std::vector<std::string>> &subsets,
                       const TrainConfig &config, const CompileOptions &compile_options = {},
                       const TemplateLibrary &library = builtin_templates());

struct WeightExport {
  std::string json;  // graph checkpoint with effective weights per node
  std::string dot;   // tree rendering with weighted edges
};

WeightExport export_weights(const Model &model);
std::string graph_to_dot(const ScoringGraph &graph);

}  // namespace elr

#endif  // ELR_EVAL_H_
