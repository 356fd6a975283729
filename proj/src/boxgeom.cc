#include "elr/boxgeom.h"

#include <cmath>
#include <numeric>
#include <random>

#include "elr/error.h"
#include "elr/logic.h"
#include "elr/simfeatures.h"
#include "json.hpp"

namespace elr {

bool Box::empty() const {
  for (size_t k = 0; k < lower.size(); ++k) {
    if (lower[k] > upper[k]) return true;
  }
  return false;
}

bool Box::contains(std::span<const double> point) const {
  if (point.size() != dim()) return false;
  for (size_t k = 0; k < dim(); ++k) {
    if (point[k] < lower[k] || point[k] > upper[k]) return false;
  }
  return true;
}

std::vector<double> Box::center() const {
  std::vector<double> c(dim());
  for (size_t k = 0; k < dim(); ++k) c[k] = 0.5 * (lower[k] + upper[k]);
  return c;
}

BoxParams BoxParams::zeros(int dim, double beta_box) {
  return BoxParams{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0), beta_box};
}

Box box_of(const std::vector<std::vector<double>> &points) {
  if (points.empty()) throw ValidationError("box_of needs at least one point");
  Box b{points.front(), points.front()};
  for (const auto &p : points) {
    if (p.size() != b.dim()) throw ValidationError("box_of: dimension mismatch");
    for (size_t k = 0; k < p.size(); ++k) {
      b.lower[k] = std::min(b.lower[k], p[k]);
      b.upper[k] = std::max(b.upper[k], p[k]);
    }
  }
  return b;
}

Box neighborhood(const Box &box, const BoxParams &params) {
  if (params.psi.size() != box.dim() || params.omega.size() != box.dim()) {
    throw ValidationError("neighborhood: dimension mismatch");
  }
  Box out = box;
  for (size_t k = 0; k < box.dim(); ++k) {
    out.lower[k] = box.lower[k] + params.psi[k] - 0.5 * params.omega[k];
    out.upper[k] = box.upper[k] + params.psi[k] + 0.5 * params.omega[k];
  }
  return out;
}

Box intersect(const Box &a, const Box &b) {
  if (a.dim() != b.dim()) throw ValidationError("intersect: dimension mismatch");
  Box out = a;
  for (size_t k = 0; k < a.dim(); ++k) {
    out.lower[k] = std::max(a.lower[k], b.lower[k]);
    out.upper[k] = std::min(a.upper[k], b.upper[k]);
  }
  return out;
}

double box_similarity(std::span<const double> point, const Box &box) {
  if (point.size() != box.dim()) throw ValidationError("box_similarity: dimension mismatch");
  if (box.empty()) return 0.0;
  double dist = 0.0;
  for (size_t k = 0; k < box.dim(); ++k) {
    dist += std::abs(point[k] - 0.5 * (box.lower[k] + box.upper[k]));
  }
  return 1.0 / (1.0 + dist);
}

namespace {

std::vector<std::vector<double>> embeddings_of(const std::vector<CandidateEntity> &cands) {
  std::vector<std::vector<double>> out;
  out.reserve(cands.size());
  for (const auto &c : cands) {
    if (!c.embedding) throw ValidationError("candidate " + c.id + " has no embedding");
    out.push_back(*c.embedding);
  }
  return out;
}

// Own box, peer boxes, and the final intersection.
struct BoxChain {
  Box own;
  std::vector<Box> peers;
  Box joint;
};

BoxChain chain_for(const LabeledInstance &inst,
                   const std::vector<std::vector<CandidateEntity>> &peers,
                   const BoxParams &params) {
  BoxChain chain;
  chain.own = box_of(embeddings_of(inst.candidates));
  chain.joint = chain.own;
  for (const auto &peer : peers) {
    if (peer.empty()) continue;
    chain.peers.push_back(box_of(embeddings_of(peer)));
    chain.joint = intersect(chain.joint, neighborhood(chain.peers.back(), params));
  }
  return chain;
}

bool has_peers(const std::vector<std::vector<CandidateEntity>> &peers) {
  for (const auto &p : peers) {
    if (!p.empty()) return true;
  }
  return false;
}

}  // namespace

std::vector<double> joint_box_raw_scores(
    const LabeledInstance &inst, const std::vector<std::vector<CandidateEntity>> &peers,
    const BoxParams &params, std::span<const double> cos_scores) {
  if (cos_scores.size() != inst.candidates.size()) {
    throw ValidationError("cos_scores not aligned with candidates");
  }
  std::vector<double> out(cos_scores.begin(), cos_scores.end());
  if (!has_peers(peers)) return out;
  BoxChain chain = chain_for(inst, peers, params);
  for (size_t j = 0; j < inst.candidates.size(); ++j) {
    out[j] += params.beta_box * box_similarity(*inst.candidates[j].embedding, chain.joint);
  }
  return out;
}

std::vector<double> joint_box_feature(const LabeledInstance &inst,
                                      const std::vector<std::vector<CandidateEntity>> &peers,
                                      const BoxParams &params,
                                      std::span<const double> cos_scores) {
  if (inst.candidates.empty()) return {};
  return minmax_rescale(joint_box_raw_scores(inst, peers, params, cos_scores));
}

std::vector<double> joint_box_feature(const LabeledInstance &inst,
                                      const std::vector<CandidateEntity> &peer_candidates,
                                      const BoxParams &params,
                                      std::span<const double> cos_scores) {
  std::vector<std::vector<CandidateEntity>> peers;
  if (!peer_candidates.empty()) peers.push_back(peer_candidates);
  return joint_box_feature(inst, peers, params, cos_scores);
}

std::vector<std::vector<CandidateEntity>> peer_candidates(const Dataset &ds,
                                                          const LabeledInstance &inst) {
  std::vector<std::vector<CandidateEntity>> out;
  for (const auto &id : inst.mention.context_ids) {
    for (const auto &other : ds.instances) {
      if (other.mention.id == id) {
        out.push_back(other.candidates);
        break;
      }
    }
  }
  return out;
}

namespace {

struct BoxExample {
  const LabeledInstance *inst;
  std::vector<std::vector<CandidateEntity>> peers;
  std::vector<double> cos;
};

// Raw parameter layout: psi[d], raw_omega[d], raw_beta.
BoxParams unpack(std::span<const double> raw, size_t d) {
  BoxParams p;
  p.psi.assign(raw.begin(), raw.begin() + d);
  p.omega.resize(d);
  for (size_t k = 0; k < d; ++k) p.omega[k] = softplus(raw[d + k]);
  p.beta_box = softplus(raw[2 * d]);
  return p;
}

// Margin loss of one example; accumulates d(loss)/d(raw) into grad.
double example_loss_and_grad(const BoxExample &ex, std::span<const double> raw, size_t d,
                             double mu, std::span<double> grad) {
  BoxParams p = unpack(raw, d);
  const auto &cands = ex.inst->candidates;
  const size_t n = cands.size();
  BoxChain chain = chain_for(*ex.inst, ex.peers, p);
  std::vector<double> sim(n, 0.0), scores(n);
  for (size_t j = 0; j < n; ++j) {
    sim[j] = box_similarity(*cands[j].embedding, chain.joint);
    scores[j] = p.beta_box * sim[j] + ex.cos[j];
  }
  double loss = 0.0;
  std::vector<double> dscore(n, 0.0);
  for (size_t a = 0; a < n; ++a) {
    if (ex.inst->labels[a] != 1) continue;
    for (size_t b = 0; b < n; ++b) {
      if (b == a || ex.inst->labels[b] == 1) continue;
      double h = mu - (scores[a] - scores[b]);
      if (h > 0.0) {
        loss += h;
        dscore[a] -= 1.0;
        dscore[b] += 1.0;
      }
    }
  }
  if (chain.joint.empty()) return loss;

  // Which box supplies each bound of the joint box: -1 own, else peer index.
  std::vector<int> lo_src(d, -1), hi_src(d, -1);
  std::vector<double> lo = chain.own.lower, hi = chain.own.upper;
  for (size_t q = 0; q < chain.peers.size(); ++q) {
    Box nb = neighborhood(chain.peers[q], p);
    for (size_t k = 0; k < d; ++k) {
      if (nb.lower[k] > lo[k]) {
        lo[k] = nb.lower[k];
        lo_src[k] = static_cast<int>(q);
      }
      if (nb.upper[k] < hi[k]) {
        hi[k] = nb.upper[k];
        hi_src[k] = static_cast<int>(q);
      }
    }
  }
  std::vector<double> center = chain.joint.center();
  for (size_t j = 0; j < n; ++j) {
    if (dscore[j] == 0.0) continue;
    grad[2 * d] += dscore[j] * sim[j] * sigmoid(raw[2 * d]);
    double up = dscore[j] * p.beta_box * sim[j] * sim[j];
    const auto &e = *cands[j].embedding;
    for (size_t k = 0; k < d; ++k) {
      double diff = e[k] - center[k];
      double s = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
      double dc_dpsi = 0.5 * ((lo_src[k] >= 0) + (hi_src[k] >= 0));
      double dc_domega = 0.5 * (-0.5 * (lo_src[k] >= 0) + 0.5 * (hi_src[k] >= 0));
      grad[k] += up * s * dc_dpsi;
      grad[d + k] += up * s * dc_domega * sigmoid(raw[d + k]);
    }
  }
  return loss;
}

std::vector<BoxExample> box_examples(const Dataset &ds, const std::string &cos_column) {
  std::vector<BoxExample> out;
  for (const auto &inst : ds.instances) {
    BoxExample ex{&inst, peer_candidates(ds, inst), {}};
    for (const auto &c : inst.candidates) {
      if (!c.embedding) {
        throw ValidationError("train_box_params: candidate " + c.id + " has no embedding");
      }
      auto it = c.external_scores.find(cos_column);
      ex.cos.push_back(it == c.external_scores.end() ? 0.0 : it->second);
    }
    if (has_peers(ex.peers)) out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

BoxTrainResult train_box_params(const Dataset &ds, const BoxTrainConfig &config) {
  if (!ds.embedding_dim) throw ValidationError("train_box_params: dataset has no embeddings");
  if (config.epochs < 0) throw ValidationError("epochs must be >= 0");
  const size_t d = static_cast<size_t>(*ds.embedding_dim);
  auto examples = box_examples(ds, config.cos_column);

  std::vector<double> raw(2 * d + 1, 0.0);
  for (size_t k = 0; k < d; ++k) raw[d + k] = softplus_inverse(config.init_omega);
  raw[2 * d] = softplus_inverse(config.init_beta_box);

  BoxTrainResult result;
  std::mt19937_64 rng(config.seed);
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(raw.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    double epoch_loss = 0.0;
    for (size_t idx : order) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = example_loss_and_grad(examples[idx], raw, d, config.mu, grad);
      if (!std::isfinite(loss)) {
        throw NumericError("train_box_params: non-finite loss at mention " +
                           examples[idx].inst->mention.id);
      }
      epoch_loss += loss;
      for (size_t k = 0; k < raw.size(); ++k) raw[k] -= config.learning_rate * grad[k];
    }
    result.epoch_loss.push_back(epoch_loss);
  }
  if (config.epochs == 0) {
    BoxParams p = BoxParams::zeros(static_cast<int>(d), config.init_beta_box);
    std::fill(p.omega.begin(), p.omega.end(), config.init_omega);
    result.params = p;
  } else {
    result.params = unpack(raw, d);
  }
  return result;
}

std::string box_params_to_json(const BoxParams &params) {
  nlohmann::json j;
  j["psi"] = params.psi;
  j["omega"] = params.omega;
  j["beta_box"] = params.beta_box;
  return j.dump(2);
}

BoxParams box_params_from_json(const std::string &text) {
  try {
    auto j = nlohmann::json::parse(text);
    BoxParams p;
    p.psi = j.at("psi").get<std::vector<double>>();
    p.omega = j.at("omega").get<std::vector<double>>();
    p.beta_box = j.at("beta_box").get<double>();
    if (p.psi.size() != p.omega.size()) throw ValidationError("psi/omega size mismatch");
    for (double w : p.omega) {
      if (w < 0) throw ValidationError("omega must be non-negative");
    }
    return p;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("bad box parameters: ") + e.what());
  }
}

}  // namespace elr
