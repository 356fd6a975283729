#ifndef ELR_TESTS_SUPPORT_REFERENCE_H_
#define ELR_TESTS_SUPPORT_REFERENCE_H_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "elr/corpus.h"
#include "elr/logic.h"
#include "elr/simfeatures.h"
#include "elr/training.h"

namespace elr::testing {

// Straightforward re-implementation of graph scoring and the training
// objective, written from the operator definitions and read through the
// public accessors only. Also tracks how close every piecewise-linear
// quantity came to its kink.
class ReferenceScorer {
 public:
  explicit ReferenceScorer(const ScoringGraph &graph) : graph_(graph) {}

  double score(const std::map<std::string, double> &row);
  double total_loss(const FeatureTable &table, const Dataset &ds, const TrainConfig &config);

  // Smallest distance of any clamp, hinge or residual argument to its kink
  // since the last reset.
  double min_kink_distance() const { return min_kink_; }
  void reset_kinks() { min_kink_ = 1e300; }

 private:
  double node(int i, const std::map<std::string, double> &row);
  void touch(double v) { min_kink_ = std::min(min_kink_, std::abs(v)); }

  const ScoringGraph &graph_;
  double min_kink_ = 1e300;
};

// A random tree over `features` with And/Or/Not gates and thresholded or raw
// leaves, with randomized parameters.
ScoringGraph random_graph(std::mt19937_64 &rng, LogicMode mode,
                          const std::vector<std::string> &features, int max_depth = 3);

// Random problem: `mentions` instances with 2..max_candidates candidates,
// one or two positives, and uniform feature values for `features`.
struct RandomProblem {
  Dataset ds;
  FeatureTable table;
};
RandomProblem random_problem(std::mt19937_64 &rng, const std::vector<std::string> &features,
                             int mentions, int max_candidates);

}  // namespace elr::testing

#endif  // ELR_TESTS_SUPPORT_REFERENCE_H_
