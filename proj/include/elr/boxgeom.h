#ifndef ELR_BOXGEOM_H_
#define ELR_BOXGEOM_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "elr/corpus.h"

namespace elr {

// Axis-parallel box in embedding space. An empty box (from a disjoint
// intersection) keeps its crossed corners and reports empty().
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  size_t dim() const { return lower.size(); }
  bool empty() const;
  bool contains(std::span<const double> point) const;
  std::vector<double> center() const;
  bool operator==(const Box &other) const = default;
};

struct BoxParams {
  std::vector<double> psi;    // center translation
  std::vector<double> omega;  // side offset, >= 0
  double beta_box = 1.0;

  static BoxParams zeros(int dim, double beta_box = 1.0);
  bool operator==(const BoxParams &other) const = default;
};

Box box_of(const std::vector<std::vector<double>> &points);
// Translates the center by psi and widens every side by omega / 2.
Box neighborhood(const Box &box, const BoxParams &params);
Box intersect(const Box &a, const Box &b);
// 1 / (1 + L1(point, center(box))); 0 for an empty box.
double box_similarity(std::span<const double> point, const Box &box);

// beta_box * Sim_box + Sim_cos per candidate, min-max rescaled. The own
// candidate box is intersected with the neighborhood box of every peer in
// turn. Without peers the rescaled cosine scores are returned.
std::vector<double> joint_box_feature(const LabeledInstance &inst,
                                      const std::vector<std::vector<CandidateEntity>> &peers,
                                      const BoxParams &params,
                                      std::span<const double> cos_scores);
std::vector<double> joint_box_feature(const LabeledInstance &inst,
                                      const std::vector<CandidateEntity> &peer_candidates,
                                      const BoxParams &params,
                                      std::span<const double> cos_scores);

// Unrescaled combined scores; the quantity trained against.
std::vector<double> joint_box_raw_scores(
    const LabeledInstance &inst, const std::vector<std::vector<CandidateEntity>> &peers,
    const BoxParams &params, std::span<const double> cos_scores);

struct BoxTrainConfig {
  int epochs = 30;
  double learning_rate = 1e-2;
  double mu = 0.6;
  uint64_t seed = 0;
  // Column on each candidate holding Sim_cos; absent entries read 0.
  std::string cos_column = "bert";
  double init_beta_box = 1.0;
  double init_omega = 1.0;
};

struct BoxTrainResult {
  BoxParams params;
  std::vector<double> epoch_loss;
};

// Fits psi, omega and beta_box by gradient descent on the margin-ranking loss
// of joint_box_raw_scores. omega and beta_box go through softplus.
BoxTrainResult train_box_params(const Dataset &ds, const BoxTrainConfig &config);

// Peer candidate lists for `inst`: the candidates of every context mention
// that has an instance in `ds`.
std::vector<std::vector<CandidateEntity>> peer_candidates(const Dataset &ds,
                                                          const LabeledInstance &inst);

std::string box_params_to_json(const BoxParams &params);
BoxParams box_params_from_json(const std::string &text);

}  // namespace elr

#endif  // ELR_BOXGEOM_H_
