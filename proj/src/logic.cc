#include "elr/logic.h"

#include <cmath>
#include <limits>
#include <set>

#include "elr/error.h"
#include "serialization.h"

namespace elr {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  if (y < 0 || std::isnan(y)) throw ValidationError("softplus_inverse of a negative value");
  if (y == 0) return -std::numeric_limits<double>::infinity();
  return y + std::log(-std::expm1(-y));
}

GateParams GateParams::defaults(size_t arity) {
  GateParams g;
  g.raw_weights.assign(arity, softplus_inverse(1.0));
  g.bias = 1.0;
  g.raw_slacks.assign(arity, kInitialSlackRaw);
  g.raw_slack_big = kInitialSlackRaw;
  return g;
}

GateParams GateParams::from_effective(const std::vector<double> &weights, double bias,
                                      const std::vector<double> &slacks, double slack_big) {
  if (slacks.size() != weights.size()) throw ValidationError("one slack per weight required");
  GateParams g;
  for (double w : weights) g.raw_weights.push_back(softplus_inverse(w));
  g.bias = bias;
  for (double d : slacks) g.raw_slacks.push_back(softplus_inverse(d));
  g.raw_slack_big = softplus_inverse(slack_big);
  return g;
}

std::vector<double> GateParams::weights() const {
  std::vector<double> w;
  w.reserve(raw_weights.size());
  for (double r : raw_weights) w.push_back(softplus(r));
  return w;
}

std::vector<double> GateParams::slacks() const {
  std::vector<double> d;
  d.reserve(raw_slacks.size());
  for (double r : raw_slacks) d.push_back(softplus(r));
  return d;
}

ThresholdParams ThresholdParams::from_theta(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw ValidationError("theta must lie in (0,1)");
  return ThresholdParams{std::log(theta) - std::log1p(-theta)};
}

namespace {

double clamp01(double v) { return std::max(0.0, std::min(1.0, v)); }

void check_inputs(std::span<const double> inputs, const GateParams &g) {
  if (inputs.size() != g.arity()) {
    throw ValidationError("gate arity " + std::to_string(g.arity()) + " but " +
                          std::to_string(inputs.size()) + " inputs");
  }
  for (double x : inputs) {
    if (std::isnan(x)) throw NumericError("NaN gate input");
  }
}

}  // namespace

double lnn_and(std::span<const double> inputs, const GateParams &g) {
  check_inputs(inputs, g);
  double pre = g.bias;
  for (size_t i = 0; i < inputs.size(); ++i) pre -= softplus(g.raw_weights[i]) * (1.0 - inputs[i]);
  return clamp01(pre);
}

double lnn_or(std::span<const double> inputs, const GateParams &g) {
  check_inputs(inputs, g);
  std::vector<double> negated(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) negated[i] = 1.0 - inputs[i];
  return 1.0 - lnn_and(negated, g);
}

double lnn_not(double x) { return 1.0 - x; }

double tnorm_and(std::span<const double> inputs) {
  double p = 1.0;
  for (double x : inputs) p *= x;
  return p;
}

double tnorm_or(std::span<const double> inputs) {
  double p = 1.0;
  for (double x : inputs) p *= (1.0 - x);
  return 1.0 - p;
}

double threshold_gate(double f, const ThresholdParams &t) {
  return f * sigmoid(f - t.theta());
}

std::vector<double> constraint_residuals(const GateParams &g, double alpha) {
  if (!(alpha >= 0.5 && alpha <= 1.0)) throw ValidationError("alpha must lie in [1/2, 1]");
  auto w = g.weights();
  auto slack = g.slacks();
  double wsum = 0.0;
  for (double x : w) wsum += x;
  std::vector<double> r;
  r.reserve(w.size() + 1);
  r.push_back(std::max(0.0, alpha - (g.bias - (1.0 - alpha) * wsum + g.slack_big())));
  for (size_t i = 0; i < w.size(); ++i) {
    r.push_back(std::max(0.0, (g.bias - alpha * w[i]) - (1.0 - alpha + slack[i])));
  }
  return r;
}

double manual_score(const std::vector<std::vector<double>> &rule_values,
                    const ManualWeights &mw) {
  if (mw.rule_weights.size() != rule_values.size()) {
    throw ValidationError("one rule weight per rule required");
  }
  size_t total = 0;
  for (const auto &r : rule_values) total += r.size();
  if (mw.feature_weights.size() != total) {
    throw ValidationError("one feature weight per rule feature required");
  }
  double score = 0.0;
  size_t k = 0;
  for (size_t i = 0; i < rule_values.size(); ++i) {
    double prod = 1.0;
    for (double f : rule_values[i]) prod *= mw.feature_weights[k++] * f;
    score += mw.rule_weights[i] * prod;
  }
  return score;
}

const char *logic_mode_name(LogicMode mode) {
  switch (mode) {
    case LogicMode::kLnn: return "lnn";
    case LogicMode::kTnorm: return "tnorm";
    case LogicMode::kManual: return "manual";
  }
  return "?";
}

LogicMode logic_mode_from_name(const std::string &name) {
  if (name == "lnn") return LogicMode::kLnn;
  if (name == "tnorm") return LogicMode::kTnorm;
  if (name == "manual") return LogicMode::kManual;
  throw ValidationError("unknown mode " + name + " (expected lnn, tnorm or manual)");
}

const char *node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::kAnd: return "and";
    case NodeKind::kOr: return "or";
    case NodeKind::kNot: return "not";
    case NodeKind::kThreshold: return "threshold";
    case NodeKind::kRaw: return "raw";
  }
  return "?";
}

ScoringGraph::ScoringGraph(LogicMode mode, double alpha) : mode_(mode), alpha_(alpha) {
  if (!(alpha >= 0.5 && alpha <= 1.0)) throw ValidationError("alpha must lie in [1/2, 1]");
}

int ScoringGraph::add_gate(NodeKind kind, std::vector<int> children, const GateParams &params) {
  if (kind != NodeKind::kAnd && kind != NodeKind::kOr) {
    throw ValidationError("add_gate takes and/or");
  }
  if (children.empty()) throw ValidationError("gate without inputs");
  if (params.arity() != children.size() || params.raw_slacks.size() != children.size()) {
    throw ValidationError("gate parameter arity does not match its inputs");
  }
  for (int c : children) {
    if (c < 0 || c >= static_cast<int>(nodes_.size())) throw ValidationError("bad child index");
  }
  Node n{kind, std::move(children), "", static_cast<int>(params_.size()), 0.0, ""};
  params_.insert(params_.end(), params.raw_weights.begin(), params.raw_weights.end());
  params_.push_back(params.bias);
  params_.insert(params_.end(), params.raw_slacks.begin(), params.raw_slacks.end());
  params_.push_back(params.raw_slack_big);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int ScoringGraph::add_not(int child) {
  if (child < 0 || child >= static_cast<int>(nodes_.size())) throw ValidationError("bad child index");
  nodes_.push_back(Node{NodeKind::kNot, {child}, "", -1, 0.0, ""});
  return static_cast<int>(nodes_.size()) - 1;
}

int ScoringGraph::add_threshold(const std::string &feature, const ThresholdParams &params) {
  nodes_.push_back(Node{NodeKind::kThreshold, {}, feature, static_cast<int>(params_.size()),
                        0.0, ""});
  params_.push_back(params.gamma);
  return static_cast<int>(nodes_.size()) - 1;
}

int ScoringGraph::add_fixed_threshold(const std::string &feature, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ValidationError("theta must lie in [0,1]");
  nodes_.push_back(Node{NodeKind::kThreshold, {}, feature, -1, theta, ""});
  return static_cast<int>(nodes_.size()) - 1;
}

int ScoringGraph::add_raw(const std::string &feature) {
  nodes_.push_back(Node{NodeKind::kRaw, {}, feature, -1, 0.0, ""});
  return static_cast<int>(nodes_.size()) - 1;
}

void ScoringGraph::set_root(int node) {
  if (node < 0 || node >= static_cast<int>(nodes_.size())) throw ValidationError("bad root");
  root_ = node;
}

std::vector<std::string> ScoringGraph::param_names() const {
  std::vector<std::string> names(params_.size());
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const Node &n = nodes_[i];
    if (n.param_offset < 0) continue;
    std::string p = "n" + std::to_string(i) + ".";
    if (n.kind == NodeKind::kThreshold) {
      names[n.param_offset] = p + "gamma";
      continue;
    }
    size_t a = n.children.size();
    for (size_t k = 0; k < a; ++k) {
      names[n.param_offset + k] = p + "w" + std::to_string(k);
      names[n.param_offset + a + 1 + k] = p + "slack" + std::to_string(k);
    }
    names[n.param_offset + a] = p + "beta";
    names[n.param_offset + 2 * a + 1] = p + "slack_big";
  }
  return names;
}

std::vector<bool> ScoringGraph::trainable_mask() const {
  std::vector<bool> mask(params_.size(), false);
  if (mode_ == LogicMode::kManual) return mask;
  for (const Node &n : nodes_) {
    if (n.param_offset < 0) continue;
    if (n.kind == NodeKind::kThreshold) {
      mask[n.param_offset] = true;
    } else if (mode_ == LogicMode::kLnn) {
      for (size_t k = 0; k < 2 * n.children.size() + 2; ++k) mask[n.param_offset + k] = true;
    }
  }
  return mask;
}

GateParams ScoringGraph::gate(int node) const {
  const Node &n = nodes_.at(node);
  if (n.kind != NodeKind::kAnd && n.kind != NodeKind::kOr) {
    throw ValidationError("node " + std::to_string(node) + " is not a gate");
  }
  size_t a = n.children.size();
  auto base = params_.begin() + n.param_offset;
  GateParams g;
  g.raw_weights.assign(base, base + a);
  g.bias = base[a];
  g.raw_slacks.assign(base + a + 1, base + 2 * a + 1);
  g.raw_slack_big = base[2 * a + 1];
  return g;
}

void ScoringGraph::set_gate(int node, const GateParams &params) {
  GateParams current = gate(node);
  if (params.arity() != current.arity() || params.raw_slacks.size() != current.arity()) {
    throw ValidationError("gate parameter arity mismatch");
  }
  size_t a = current.arity();
  auto base = params_.begin() + nodes_[node].param_offset;
  std::copy(params.raw_weights.begin(), params.raw_weights.end(), base);
  base[a] = params.bias;
  std::copy(params.raw_slacks.begin(), params.raw_slacks.end(), base + a + 1);
  base[2 * a + 1] = params.raw_slack_big;
}

std::vector<double> ScoringGraph::effective_weights(int node) const {
  GateParams g = gate(node);
  return mode_ == LogicMode::kManual ? g.raw_weights : g.weights();
}

ThresholdParams ScoringGraph::threshold(int node) const {
  const Node &n = nodes_.at(node);
  if (n.kind != NodeKind::kThreshold || n.param_offset < 0) {
    throw ValidationError("node " + std::to_string(node) + " has no learnable threshold");
  }
  return ThresholdParams{params_[n.param_offset]};
}

void ScoringGraph::set_threshold(int node, const ThresholdParams &params) {
  threshold(node);
  params_[nodes_[node].param_offset] = params.gamma;
}

double ScoringGraph::theta(int node) const {
  const Node &n = nodes_.at(node);
  if (n.kind != NodeKind::kThreshold) throw ValidationError("not a threshold node");
  return n.param_offset < 0 ? n.fixed_theta : sigmoid(params_[n.param_offset]);
}

std::vector<std::string> ScoringGraph::leaf_features() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto &f : leaf_multiset()) {
    if (seen.insert(f).second) out.push_back(f);
  }
  return out;
}

std::vector<std::string> ScoringGraph::leaf_multiset() const {
  std::vector<std::string> out;
  if (root_ < 0) return out;
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    const Node &n = nodes_[i];
    if (n.kind == NodeKind::kThreshold || n.kind == NodeKind::kRaw) {
      out.push_back(n.feature);
    }
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

int ScoringGraph::gate_count() const {
  int n = 0;
  for (const Node &node : nodes_) n += (node.kind == NodeKind::kAnd || node.kind == NodeKind::kOr);
  return n;
}

double ScoringGraph::residual_sum() const {
  if (mode_ != LogicMode::kLnn) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind != NodeKind::kAnd && nodes_[i].kind != NodeKind::kOr) continue;
    for (double r : constraint_residuals(gate(static_cast<int>(i)), alpha_)) sum += r;
  }
  return sum;
}

GraphEvaluator::GraphEvaluator(const ScoringGraph &graph,
                               const std::vector<std::string> &feature_names)
    : graph_(graph),
      columns_(graph.nodes().size(), -1),
      values_(graph.nodes().size(), 0.0),
      pre_(graph.nodes().size(), 0.0),
      leaf_(graph.nodes().size(), 0.0) {
  if (graph.root() < 0) throw ValidationError("scoring graph has no root");
  for (size_t i = 0; i < graph.nodes().size(); ++i) {
    const auto &n = graph.nodes()[i];
    if (n.kind != NodeKind::kThreshold && n.kind != NodeKind::kRaw) continue;
    for (size_t c = 0; c < feature_names.size(); ++c) {
      if (feature_names[c] == n.feature) {
        columns_[i] = static_cast<int>(c);
        break;
      }
    }
    if (columns_[i] < 0) {
      throw ValidationError("missing feature " + n.feature + " for leaf n" + std::to_string(i));
    }
  }
}

double GraphEvaluator::forward(std::span<const double> features) {
  return eval_node(graph_.root(), features);
}

double GraphEvaluator::eval_node(int i, std::span<const double> features) {
  const auto &n = graph_.nodes_[i];
  const auto &p = graph_.params_;
  const LogicMode mode = graph_.mode_;
  double v = 0.0;
  switch (n.kind) {
    case NodeKind::kRaw:
      v = features[columns_[i]];
      break;
    case NodeKind::kThreshold: {
      double f = features[columns_[i]];
      double theta = n.param_offset < 0 ? n.fixed_theta : sigmoid(p[n.param_offset]);
      if (mode == LogicMode::kManual) {
        v = f > theta ? f : 0.0;
      } else {
        pre_[i] = sigmoid(f - theta);
        leaf_[i] = f;
        v = f * pre_[i];
      }
      break;
    }
    case NodeKind::kNot:
      v = 1.0 - eval_node(n.children[0], features);
      break;
    case NodeKind::kAnd:
    case NodeKind::kOr: {
      const bool is_and = n.kind == NodeKind::kAnd;
      const size_t a = n.children.size();
      const double *w = p.data() + n.param_offset;
      if (mode == LogicMode::kLnn) {
        double pre = w[a];
        for (size_t k = 0; k < a; ++k) {
          double x = eval_node(n.children[k], features);
          pre -= softplus(w[k]) * (is_and ? 1.0 - x : x);
        }
        pre_[i] = pre;
        v = is_and ? clamp01(pre) : 1.0 - clamp01(pre);
      } else if (mode == LogicMode::kTnorm) {
        double prod = 1.0;
        for (size_t k = 0; k < a; ++k) {
          double x = eval_node(n.children[k], features);
          prod *= is_and ? x : 1.0 - x;
        }
        v = is_and ? prod : 1.0 - prod;
      } else {
        v = is_and ? 1.0 : 0.0;
        for (size_t k = 0; k < a; ++k) {
          double x = eval_node(n.children[k], features);
          if (is_and) {
            v *= w[k] * x;
          } else {
            v += w[k] * x;
          }
        }
      }
      break;
    }
  }
  if (std::isnan(v)) throw NumericError("NaN at graph node n" + std::to_string(i));
  values_[i] = v;
  return v;
}

void GraphEvaluator::backward(double upstream, std::span<double> grad) const {
  if (graph_.mode_ == LogicMode::kManual) return;
  const auto &nodes = graph_.nodes_;
  const auto &p = graph_.params_;
  // (node, adjoint) work list; the graph is a tree so each node is visited once.
  std::vector<std::pair<int, double>> stack{{graph_.root_, upstream}};
  while (!stack.empty()) {
    auto [i, adj] = stack.back();
    stack.pop_back();
    if (adj == 0.0) continue;
    const auto &n = nodes[i];
    switch (n.kind) {
      case NodeKind::kRaw:
        break;
      case NodeKind::kThreshold: {
        if (n.param_offset < 0) break;
        double gamma = p[n.param_offset];
        double s = pre_[i];
        double f = leaf_[i];
        double sg = sigmoid(gamma);
        grad[n.param_offset] += adj * f * s * (1.0 - s) * -(sg * (1.0 - sg));
        break;
      }
      case NodeKind::kNot:
        stack.push_back({n.children[0], -adj});
        break;
      case NodeKind::kAnd:
      case NodeKind::kOr: {
        const bool is_and = n.kind == NodeKind::kAnd;
        const size_t a = n.children.size();
        const int off = n.param_offset;
        if (graph_.mode_ == LogicMode::kLnn) {
          double pre = pre_[i];
          if (!(pre > 0.0 && pre < 1.0)) break;
          double dpre = is_and ? adj : -adj;
          grad[off + a] += dpre;
          for (size_t k = 0; k < a; ++k) {
            double x = values_[n.children[k]];
            double term = is_and ? 1.0 - x : x;
            grad[off + k] -= dpre * term * sigmoid(p[off + k]);
            double w = softplus(p[off + k]);
            stack.push_back({n.children[k], is_and ? dpre * w : -dpre * w});
          }
        } else {
          for (size_t k = 0; k < a; ++k) {
            double others = 1.0;
            for (size_t q = 0; q < a; ++q) {
              if (q == k) continue;
              double x = values_[n.children[q]];
              others *= is_and ? x : 1.0 - x;
            }
            stack.push_back({n.children[k], adj * others});
          }
        }
        break;
      }
    }
  }
}

double evaluate_graph(const ScoringGraph &graph, const std::map<std::string, double> &row) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto &[k, v] : row) {
    names.push_back(k);
    values.push_back(v);
  }
  GraphEvaluator ev(graph, names);
  return ev.forward(values);
}

void residual_gradient(const ScoringGraph &graph, double scale, std::span<double> grad) {
  if (graph.mode() != LogicMode::kLnn) return;
  const double alpha = graph.alpha();
  auto p = graph.params();
  for (const auto &n : graph.nodes()) {
    if (n.kind != NodeKind::kAnd && n.kind != NodeKind::kOr) continue;
    const size_t a = n.children.size();
    const int off = n.param_offset;
    const double beta = p[off + a];
    double wsum = 0.0;
    for (size_t k = 0; k < a; ++k) wsum += softplus(p[off + k]);
    double r0 = alpha - (beta - (1.0 - alpha) * wsum + softplus(p[off + 2 * a + 1]));
    if (r0 > 0.0) {
      grad[off + a] -= scale;
      for (size_t k = 0; k < a; ++k) grad[off + k] += scale * (1.0 - alpha) * sigmoid(p[off + k]);
      grad[off + 2 * a + 1] -= scale * sigmoid(p[off + 2 * a + 1]);
    }
    for (size_t k = 0; k < a; ++k) {
      double ri = (beta - alpha * softplus(p[off + k])) - (1.0 - alpha + softplus(p[off + a + 1 + k]));
      if (ri > 0.0) {
        grad[off + a] += scale;
        grad[off + k] -= scale * alpha * sigmoid(p[off + k]);
        grad[off + a + 1 + k] -= scale * sigmoid(p[off + a + 1 + k]);
      }
    }
  }
}

namespace internal {

nlohmann::json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const nlohmann::json &j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ValidationError("expected a number in checkpoint");
}

nlohmann::json graph_to_json_value(const ScoringGraph &graph) {
  using nlohmann::json;
  json j;
  j["format"] = "elr-graph/1";
  j["mode"] = logic_mode_name(graph.mode());
  j["alpha"] = graph.alpha();
  j["root"] = graph.root();
  json nodes = json::array();
  for (size_t i = 0; i < graph.nodes().size(); ++i) {
    const auto &n = graph.nodes()[i];
    json jn;
    jn["id"] = i;
    jn["kind"] = node_kind_name(n.kind);
    if (!n.origin.empty()) jn["origin"] = n.origin;
    if (n.kind == NodeKind::kThreshold || n.kind == NodeKind::kRaw) jn["feature"] = n.feature;
    if (!n.children.empty()) jn["children"] = n.children;
    if (n.kind == NodeKind::kThreshold) {
      jn["learnable"] = n.param_offset >= 0;
      jn["theta"] = graph.theta(static_cast<int>(i));
      if (n.param_offset >= 0) jn["gamma"] = graph.params()[n.param_offset];
    }
    if (n.kind == NodeKind::kAnd || n.kind == NodeKind::kOr) {
      GateParams g = graph.gate(static_cast<int>(i));
      jn["weights"] = graph.effective_weights(static_cast<int>(i));
      jn["beta"] = g.bias;
      if (graph.mode() == LogicMode::kLnn) {
        jn["slacks"] = g.slacks();
        jn["slack_big"] = g.slack_big();
      }
    }
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  json raw = json::array();
  for (double v : graph.params()) raw.push_back(number_to_json(v));
  j["params"] = std::move(raw);
  return j;
}

ScoringGraph graph_from_json_value(const nlohmann::json &j) {
  try {
    if (j.value("format", "") != "elr-graph/1") throw ValidationError("not an elr graph checkpoint");
    ScoringGraph g(logic_mode_from_name(j.at("mode").get<std::string>()), j.at("alpha").get<double>());
    for (const auto &jn : j.at("nodes")) {
      std::string kind = jn.at("kind").get<std::string>();
      std::vector<int> children = jn.value("children", std::vector<int>{});
      int id;
      if (kind == "and" || kind == "or") {
        id = g.add_gate(kind == "and" ? NodeKind::kAnd : NodeKind::kOr, children,
                        GateParams::defaults(children.size()));
      } else if (kind == "not") {
        if (children.size() != 1) throw ValidationError("not node needs one child");
        id = g.add_not(children[0]);
      } else if (kind == "threshold") {
        std::string f = jn.at("feature").get<std::string>();
        id = jn.at("learnable").get<bool>() ? g.add_threshold(f, ThresholdParams{})
                                            : g.add_fixed_threshold(f, jn.at("theta").get<double>());
      } else if (kind == "raw") {
        id = g.add_raw(jn.at("feature").get<std::string>());
      } else {
        throw ValidationError("unknown node kind " + kind);
      }
      if (jn.contains("origin")) g.set_origin(id, jn["origin"].get<std::string>());
    }
    const auto &raw = j.at("params");
    auto params = g.mutable_params();
    if (raw.size() != params.size()) throw ValidationError("checkpoint parameter count mismatch");
    for (size_t i = 0; i < raw.size(); ++i) params[i] = number_from_json(raw[i]);
    g.set_root(j.at("root").get<int>());
    return g;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("bad graph checkpoint: ") + e.what());
  }
}

}  // namespace internal

std::string graph_to_json(const ScoringGraph &graph, int indent) {
  return internal::graph_to_json_value(graph).dump(indent);
}

ScoringGraph graph_from_json(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("bad graph checkpoint: ") + e.what());
  }
  return internal::graph_from_json_value(j);
}

}  // namespace elr
