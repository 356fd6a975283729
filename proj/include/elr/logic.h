#ifndef ELR_LOGIC_H_
#define ELR_LOGIC_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace elr {

double sigmoid(double z);
// log(1 + e^x), evaluated without overflow.
double softplus(double x);
// Inverse of softplus for y > 0; -inf for y == 0.
double softplus_inverse(double y);

// Parameters of one weighted real-valued conjunction (or, through De Morgan,
// disjunction). Weights and slacks are stored raw and pass through softplus,
// so their effective values are non-negative by construction.
struct GateParams {
  std::vector<double> raw_weights;
  double bias = 1.0;
  std::vector<double> raw_slacks;
  double raw_slack_big = 0.0;

  // Initial raw slack. Softplus has no gradient at an effective slack of
  // exactly 0, so slacks start at softplus(0) = ln 2.
  static constexpr double kInitialSlackRaw = 0.0;

  // Unit weights, unit bias, slacks of ln 2.
  static GateParams defaults(size_t arity);
  // Exact effective values; a zero slack maps to raw -inf.
  static GateParams from_effective(const std::vector<double> &weights, double bias,
                                   const std::vector<double> &slacks, double slack_big);

  size_t arity() const { return raw_weights.size(); }
  std::vector<double> weights() const;
  std::vector<double> slacks() const;
  double slack_big() const { return softplus(raw_slack_big); }
};

struct ThresholdParams {
  double gamma = 0.0;
  double theta() const { return sigmoid(gamma); }
  static ThresholdParams from_theta(double theta);
};

// Real-valued logic operators on inputs in [0,1].
double lnn_and(std::span<const double> inputs, const GateParams &g);
double lnn_or(std::span<const double> inputs, const GateParams &g);
double lnn_not(double x);
double tnorm_and(std::span<const double> inputs);
double tnorm_or(std::span<const double> inputs);
// f * sigmoid(f - theta), theta = sigmoid(gamma).
double threshold_gate(double f, const ThresholdParams &t);

// Hinge residuals of the slack-relaxed conjunction constraints. Element 0 is
// the "all inputs true" constraint, element i+1 the "input i false" one.
// All zero iff the constraints hold.
std::vector<double> constraint_residuals(const GateParams &g, double alpha);

// Fixed weights of the manual scorer: sum_i rw_i * prod_j (fw_ij * f_ij).
struct ManualWeights {
  std::vector<double> rule_weights;
  // Flattened over rules in order.
  std::vector<double> feature_weights;
};

double manual_score(const std::vector<std::vector<double>> &rule_values,
                    const ManualWeights &mw);

enum class LogicMode { kLnn, kTnorm, kManual };
const char *logic_mode_name(LogicMode mode);
LogicMode logic_mode_from_name(const std::string &name);

enum class NodeKind { kAnd, kOr, kNot, kThreshold, kRaw };
const char *node_kind_name(NodeKind kind);

// Feed-forward scoring tree. Parameters of all nodes live in one flat vector
// so that gradients and optimizer steps operate on a single array.
//
// Gate layout at param_offset (arity n):
//   [0, n)        raw weights (LNN) or literal weights (manual)
//   n             bias
//   [n+1, 2n+1)   raw per-input slacks
//   2n+1          raw shared slack
// Learnable threshold leaves hold one raw gamma.
class ScoringGraph {
 public:
  struct Node {
    NodeKind kind;
    std::vector<int> children;
    std::string feature;       // leaves only
    int param_offset = -1;     // gates and learnable thresholds
    double fixed_theta = 0.0;  // thresholds without a learnable gamma
    std::string origin;        // rule the node was compiled from
  };

  ScoringGraph() = default;
  ScoringGraph(LogicMode mode, double alpha);

  LogicMode mode() const { return mode_; }
  double alpha() const { return alpha_; }

  int add_gate(NodeKind kind, std::vector<int> children, const GateParams &params);
  int add_not(int child);
  int add_threshold(const std::string &feature, const ThresholdParams &params);
  int add_fixed_threshold(const std::string &feature, double theta);
  int add_raw(const std::string &feature);
  void set_root(int node);
  void set_origin(int node, std::string origin) { nodes_.at(node).origin = std::move(origin); }

  int root() const { return root_; }
  const std::vector<Node> &nodes() const { return nodes_; }
  const Node &node(int i) const { return nodes_.at(i); }

  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }
  // Human-readable name per parameter slot, e.g. "n3.w0", "n5.gamma".
  std::vector<std::string> param_names() const;
  // Slots that training may update in the graph's mode.
  std::vector<bool> trainable_mask() const;

  GateParams gate(int node) const;
  void set_gate(int node, const GateParams &params);
  // Weights as used in evaluation: softplus of the raw slots, or the
  // literal slots in manual mode.
  std::vector<double> effective_weights(int node) const;
  ThresholdParams threshold(int node) const;
  void set_threshold(int node, const ThresholdParams &params);
  // Effective theta of any threshold leaf.
  double theta(int node) const;

  // Leaf features in first-appearance order, without duplicates.
  std::vector<std::string> leaf_features() const;
  // Every leaf feature, with repetition, in depth-first order.
  std::vector<std::string> leaf_multiset() const;
  int gate_count() const;

  // Sum of constraint residuals over all LNN gates; 0 in other modes.
  double residual_sum() const;

 private:
  friend class GraphEvaluator;
  LogicMode mode_ = LogicMode::kLnn;
  double alpha_ = 0.7;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::vector<double> params_;
};

// Binds leaf features of a graph to column positions of a feature vector and
// runs forward/backward passes. Reusable across rows; not thread-safe.
class GraphEvaluator {
 public:
  GraphEvaluator(const ScoringGraph &graph, const std::vector<std::string> &feature_names);

  double forward(std::span<const double> features);
  // Accumulates d(score)/d(param) * upstream into grad (size = params) for
  // the most recent forward().
  void backward(double upstream, std::span<double> grad) const;

 private:
  double eval_node(int i, std::span<const double> features);
  const ScoringGraph &graph_;
  std::vector<int> columns_;
  std::vector<double> values_;
  std::vector<double> pre_;   // pre-clamp gate value, or TL sigmoid
  std::vector<double> leaf_;  // threshold leaf input
};

// Score of one (mention, candidate) row given feature values by name.
double evaluate_graph(const ScoringGraph &graph, const std::map<std::string, double> &row);

// Adds d(residual_sum)/d(param) * scale into grad.
void residual_gradient(const ScoringGraph &graph, double scale, std::span<double> grad);

// JSON checkpoint of the tree: per node its kind, effective weights, bias,
// slacks and theta, plus the raw parameter vector for exact reload.
std::string graph_to_json(const ScoringGraph &graph, int indent = 2);
ScoringGraph graph_from_json(const std::string &text);

}  // namespace elr

#endif  // ELR_LOGIC_H_
