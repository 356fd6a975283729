#include "elr/corpus.h"

#include <cmath>
#include <future>
#include <semaphore>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "elr/error.h"
#include "elr/simfeatures.h"
#include "httplib.h"
#include "io_util.h"
#include "json.hpp"

namespace elr {
namespace {

using nlohmann::json;

json mention_to_json(const Mention &m) {
  json j;
  j["id"] = m.id;
  j["surface"] = m.surface;
  j["text_id"] = m.text_id;
  j["context_ids"] = m.context_ids;
  j["type"] = m.type ? json(*m.type) : json(nullptr);
  return j;
}

json candidate_to_json(const CandidateEntity &e) {
  json j;
  j["id"] = e.id;
  j["name"] = e.name;
  j["description"] = e.description ? json(*e.description) : json(nullptr);
  j["domains"] = e.domains;
  j["indegree"] = e.indegree;
  j["embedding"] = e.embedding ? json(*e.embedding) : json(nullptr);
  j["external_scores"] = e.external_scores;
  return j;
}

json instance_to_json(const LabeledInstance &inst) {
  json j;
  j["mention"] = mention_to_json(inst.mention);
  j["candidates"] = json::array();
  for (const auto &c : inst.candidates) j["candidates"].push_back(candidate_to_json(c));
  j["labels"] = inst.labels;
  return j;
}

std::optional<std::string> optional_string(const json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

Mention mention_from_json(const json &j) {
  Mention m;
  m.id = j.at("id").get<std::string>();
  m.surface = j.at("surface").get<std::string>();
  m.text_id = j.value("text_id", std::string());
  if (auto it = j.find("context_ids"); it != j.end() && !it->is_null()) {
    m.context_ids = it->get<std::vector<std::string>>();
  }
  m.type = optional_string(j, "type");
  if (m.surface.empty()) throw ValidationError("mention " + m.id + " has an empty surface");
  for (const auto &c : m.context_ids) {
    if (c == m.id) throw ValidationError("mention " + m.id + " lists itself as context");
  }
  return m;
}

CandidateEntity candidate_from_json(const json &j) {
  CandidateEntity e;
  e.id = j.at("id").get<std::string>();
  e.name = j.value("name", e.id);
  e.description = optional_string(j, "description");
  if (auto it = j.find("domains"); it != j.end() && !it->is_null()) {
    for (const auto &d : *it) e.domains.insert(d.get<std::string>());
  }
  e.indegree = j.value("indegree", int64_t{0});
  if (e.indegree < 0) throw ValidationError("candidate " + e.id + " has negative indegree");
  if (auto it = j.find("embedding"); it != j.end() && !it->is_null()) {
    e.embedding = it->get<std::vector<double>>();
  }
  if (auto it = j.find("external_scores"); it != j.end() && !it->is_null()) {
    for (const auto &[k, v] : it->items()) {
      double x = v.get<double>();
      if (!(x >= 0.0 && x <= 1.0)) {
        throw ValidationError("candidate " + e.id + " external score " + k +
                              " outside [0,1]");
      }
      e.external_scores[k] = x;
    }
  }
  return e;
}

LabeledInstance instance_from_json(const json &j) {
  LabeledInstance inst;
  inst.mention = mention_from_json(j.at("mention"));
  for (const auto &c : j.at("candidates")) inst.candidates.push_back(candidate_from_json(c));
  inst.labels = j.at("labels").get<std::vector<int>>();
  if (inst.labels.size() != inst.candidates.size()) {
    throw ValidationError("mention " + inst.mention.id + " has " +
                          std::to_string(inst.labels.size()) + " labels for " +
                          std::to_string(inst.candidates.size()) + " candidates");
  }
  for (int l : inst.labels) {
    if (l != 0 && l != 1) throw ValidationError("labels must be 0 or 1");
  }
  return inst;
}

struct ParsedUrl {
  std::string host;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string &url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ValidationError("endpoint needs a scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  ParsedUrl out;
  out.host = url.substr(0, slash);
  out.path = slash == std::string::npos ? "/" : url.substr(slash);
  return out;
}

bool denied(const std::string &id, const LookupConfig &config) {
  for (const auto &p : config.denylist_prefixes) {
    if (id.rfind(p, 0) == 0) return true;
  }
  for (const auto &s : config.denylist_suffixes) {
    if (id.size() >= s.size() && id.compare(id.size() - s.size(), s.size(), s) == 0) {
      return true;
    }
  }
  return false;
}

// Accepts plain strings or the single-element arrays some lookup services
// return for every field.
std::string first_string(const json &v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array() && !v.empty() && v.front().is_string()) return v.front().get<std::string>();
  return {};
}

std::vector<CandidateEntity> parse_lookup_body(const std::string &body, int k,
                                               const LookupConfig &config) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception &e) {
    throw NetworkError("parse error in lookup response: " + std::string(e.what()) +
                           "; body starts: " + body.substr(0, 120),
                       false);
  }
  const json *items = &doc;
  if (doc.is_object() && doc.contains("docs")) items = &doc["docs"];
  if (!items->is_array()) {
    throw NetworkError("parse error: lookup response is not an array; body starts: " +
                           body.substr(0, 120),
                       false);
  }
  std::vector<CandidateEntity> out;
  for (const auto &item : *items) {
    if (static_cast<int>(out.size()) >= k) break;
    if (!item.is_object()) continue;
    CandidateEntity e;
    e.id = first_string(item.contains("id") ? item["id"] : item.value("resource", json()));
    if (e.id.empty() || denied(e.id, config)) continue;
    e.name = item.contains("label") ? first_string(item["label"]) : e.id;
    if (auto it = item.find("typeName"); it != item.end() && it->is_array()) {
      for (const auto &t : *it) {
        if (t.is_string()) e.domains.insert(t.get<std::string>());
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

const Mention &Dataset::mention(const std::string &id) const {
  auto it = mentions.find(id);
  if (it != mentions.end()) return it->second;
  for (const auto &inst : instances) {
    if (inst.mention.id == id) return inst.mention;
  }
  throw ValidationError("unknown mention id " + id);
}

std::string LoadReport::summary() const {
  std::ostringstream ss;
  ss << "read " << lines << " records, kept " << kept << ", dropped "
     << dropped_empty_candidates << " empty-candidate, dropped " << dropped_all_negative
     << " all-negative";
  return ss.str();
}

Dataset parse_dataset(const std::string &content, const std::string &name,
                      LoadReport *report) {
  Dataset ds;
  ds.name = name;
  LoadReport local;
  auto lines = internal::split_lines(content);
  for (size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string &line = lines[ln];
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    LabeledInstance inst;
    try {
      inst = instance_from_json(json::parse(line));
    } catch (const json::exception &e) {
      throw ValidationError(name + ":" + std::to_string(ln + 1) + ": malformed record: " +
                            e.what());
    } catch (const ValidationError &e) {
      throw ValidationError(name + ":" + std::to_string(ln + 1) + ": " + e.what());
    }
    ++local.lines;
    if (ds.mentions.count(inst.mention.id)) {
      throw ValidationError(name + ":" + std::to_string(ln + 1) + ": duplicate mention id " +
                            inst.mention.id);
    }
    ds.mentions[inst.mention.id] = inst.mention;
    for (const auto &c : inst.candidates) {
      if (!c.embedding) continue;
      int d = static_cast<int>(c.embedding->size());
      if (!ds.embedding_dim) {
        ds.embedding_dim = d;
      } else if (*ds.embedding_dim != d) {
        throw ValidationError(name + ":" + std::to_string(ln + 1) +
                              ": embedding dimension mismatch for candidate " + c.id +
                              " (" + std::to_string(d) + " vs " +
                              std::to_string(*ds.embedding_dim) + ")");
      }
    }
    if (inst.candidates.empty()) {
      ++local.dropped_empty_candidates;
      continue;
    }
    bool any_positive = false;
    for (int l : inst.labels) any_positive |= (l == 1);
    if (!any_positive) {
      ++local.dropped_all_negative;
      continue;
    }
    ds.instances.push_back(std::move(inst));
  }
  local.kept = static_cast<int>(ds.instances.size());
  spdlog::debug("{}: {}", name, local.summary());
  if (report) *report = local;
  return ds;
}

Dataset load_dataset(const std::string &path, LoadReport *report) {
  return parse_dataset(internal::read_file(path), path, report);
}

std::string dump_dataset(const Dataset &ds) {
  std::string out;
  std::set<std::string> kept;
  for (const auto &inst : ds.instances) {
    kept.insert(inst.mention.id);
    out += instance_to_json(inst).dump();
    out += '\n';
  }
  std::set<std::string> referenced;
  for (const auto &inst : ds.instances) {
    for (const auto &c : inst.mention.context_ids) referenced.insert(c);
  }
  for (const auto &id : referenced) {
    if (kept.count(id)) continue;
    auto it = ds.mentions.find(id);
    if (it == ds.mentions.end()) continue;
    LabeledInstance stub;
    stub.mention = it->second;
    out += instance_to_json(stub).dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset &ds, const std::string &path) {
  internal::write_file_atomic(path, dump_dataset(ds));
}

Dataset merge_external_scores(const Dataset &ds,
                              const std::vector<std::pair<ScoreKey, double>> &rows,
                              const std::string &feature_name, MergeReport *report) {
  MergeReport local;
  for (const auto &inst : ds.instances) {
    for (const auto &c : inst.candidates) {
      if (c.external_scores.count(feature_name)) {
        throw ValidationError("external column " + feature_name +
                              " already present on candidate " + c.id);
      }
    }
  }
  std::map<std::string, size_t> by_mention;
  for (size_t i = 0; i < ds.instances.size(); ++i) by_mention[ds.instances[i].mention.id] = i;

  std::map<ScoreKey, double> scores;
  for (const auto &[key, value] : rows) {
    if (!std::isfinite(value)) {
      throw ValidationError("non-finite score for (" + key.first + ", " + key.second + ")");
    }
    if (!by_mention.count(key.first)) {
      ++local.unknown_mentions;
      continue;
    }
    auto [it, inserted] = scores.insert_or_assign(key, value);
    if (!inserted) {
      ++local.duplicate_keys;
      spdlog::warn("duplicate score for ({}, {}); keeping the last value", key.first,
                   key.second);
    }
  }
  if (local.unknown_mentions > 0) {
    spdlog::warn("{} score rows name unknown mentions", local.unknown_mentions);
  }

  Dataset out = ds;
  for (auto &inst : out.instances) {
    std::vector<double> values;
    values.reserve(inst.candidates.size());
    bool out_of_range = false;
    for (const auto &c : inst.candidates) {
      auto it = scores.find({inst.mention.id, c.id});
      double v = 0.0;
      if (it == scores.end()) {
        ++local.unmatched_candidates;
      } else {
        ++local.matched;
        v = it->second;
      }
      out_of_range |= (v < 0.0 || v > 1.0);
      values.push_back(v);
    }
    if (out_of_range) {
      values = minmax_rescale(values);
      ++local.rescaled_mentions;
    }
    for (size_t j = 0; j < inst.candidates.size(); ++j) {
      inst.candidates[j].external_scores[feature_name] = values[j];
    }
  }
  if (report) *report = local;
  return out;
}

Dataset merge_external_scores(const Dataset &ds, const std::string &scores_path,
                              const std::string &feature_name, MergeReport *report) {
  std::vector<std::pair<ScoreKey, double>> rows;
  auto lines = internal::split_lines(internal::read_file(scores_path));
  for (size_t ln = 0; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    auto fields = internal::split_csv_line(lines[ln]);
    if (fields.size() != 3) {
      throw ValidationError(scores_path + ":" + std::to_string(ln + 1) +
                            ": expected mention_id,candidate_id,score");
    }
    double v;
    try {
      v = internal::parse_double(fields[2]);
    } catch (const ValidationError &) {
      if (ln == 0) continue;  // header
      throw ValidationError(scores_path + ":" + std::to_string(ln + 1) + ": bad score '" +
                            fields[2] + "'");
    }
    rows.push_back({{fields[0], fields[1]}, v});
  }
  return merge_external_scores(ds, rows, feature_name, report);
}

std::map<std::string, std::vector<double>> load_embeddings(const std::string &path) {
  std::map<std::string, std::vector<double>> out;
  auto lines = internal::split_lines(internal::read_file(path));
  std::optional<size_t> dim;
  for (size_t ln = 0; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    try {
      auto j = json::parse(lines[ln]);
      auto vec = j.at("vec").get<std::vector<double>>();
      if (dim && *dim != vec.size()) {
        throw ValidationError("embedding dimension mismatch");
      }
      dim = vec.size();
      out[j.at("id").get<std::string>()] = std::move(vec);
    } catch (const json::exception &e) {
      throw ValidationError(path + ":" + std::to_string(ln + 1) + ": " + e.what());
    } catch (const ValidationError &e) {
      throw ValidationError(path + ":" + std::to_string(ln + 1) + ": " + e.what());
    }
  }
  return out;
}

Dataset attach_embeddings(const Dataset &ds,
                          const std::map<std::string, std::vector<double>> &vecs) {
  Dataset out = ds;
  for (auto &inst : out.instances) {
    for (auto &c : inst.candidates) {
      auto it = vecs.find(c.id);
      if (it == vecs.end()) continue;
      int d = static_cast<int>(it->second.size());
      if (out.embedding_dim && *out.embedding_dim != d) {
        throw ValidationError("embedding dimension mismatch for " + c.id);
      }
      out.embedding_dim = d;
      c.embedding = it->second;
    }
  }
  return out;
}

ValidationReport validate_dataset(const Dataset &ds) {
  ValidationReport r;
  std::set<std::string> ids;
  std::set<std::string> columns;
  for (const auto &inst : ds.instances) {
    for (const auto &c : inst.candidates) {
      for (const auto &[k, v] : c.external_scores) columns.insert(k);
    }
  }
  int with_desc = 0, with_emb = 0, with_domains = 0;
  std::map<std::string, int> column_counts;
  for (const auto &inst : ds.instances) {
    const auto &m = inst.mention;
    if (!ids.insert(m.id).second) r.violations.push_back("duplicate mention id " + m.id);
    if (m.surface.empty()) r.violations.push_back("mention " + m.id + ": empty surface");
    for (const auto &c : m.context_ids) {
      if (c == m.id) r.violations.push_back("mention " + m.id + ": context lists itself");
    }
    if (inst.candidates.empty()) {
      r.violations.push_back("mention " + m.id + ": no candidates");
    }
    if (inst.labels.size() != inst.candidates.size()) {
      r.violations.push_back("mention " + m.id + ": " + std::to_string(inst.labels.size()) +
                             " labels for " + std::to_string(inst.candidates.size()) +
                             " candidates");
    } else {
      bool any = false;
      for (int l : inst.labels) {
        if (l != 0 && l != 1) r.violations.push_back("mention " + m.id + ": label not 0/1");
        any |= (l == 1);
      }
      if (!any && !inst.candidates.empty()) {
        r.violations.push_back("mention " + m.id + ": no positive label");
      }
    }
    for (const auto &c : inst.candidates) {
      ++r.candidates;
      if (c.indegree < 0) r.violations.push_back("candidate " + c.id + ": negative indegree");
      if (c.description) ++with_desc;
      if (!c.domains.empty()) ++with_domains;
      if (c.embedding) {
        ++with_emb;
        if (ds.embedding_dim && static_cast<int>(c.embedding->size()) != *ds.embedding_dim) {
          r.violations.push_back("candidate " + c.id + ": embedding dimension " +
                                 std::to_string(c.embedding->size()));
        }
      }
      for (const auto &[k, v] : c.external_scores) {
        ++column_counts[k];
        if (!(v >= 0.0 && v <= 1.0)) {
          r.violations.push_back("candidate " + c.id + ": " + k + " outside [0,1]");
        }
      }
    }
  }
  auto frac = [&](int n) { return r.candidates == 0 ? 1.0 : double(n) / r.candidates; };
  r.coverage["description"] = frac(with_desc);
  r.coverage["embedding"] = frac(with_emb);
  r.coverage["domains"] = frac(with_domains);
  for (const auto &c : columns) r.coverage["external:" + c] = frac(column_counts[c]);
  return r;
}

std::vector<CandidateEntity> fetch_candidates(const std::string &endpoint,
                                              const std::string &surface, int k,
                                              const LookupConfig &config) {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (config.attempts < 1) throw ValidationError("attempts must be >= 1");
  ParsedUrl url = parse_url(endpoint);
  httplib::Params params{{"query", surface}, {"maxResults", std::to_string(k)}};
  httplib::Headers headers{{"Accept", "application/json"}};
  std::string last_error;
  auto delay = config.backoff;
  for (int attempt = 1; attempt <= config.attempts; ++attempt) {
    httplib::Client client(url.host);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    auto res = client.Get(url.path, params, headers);
    if (res && res->status == 200) return parse_lookup_body(res->body, k, config);
    if (res && res->status >= 400 && res->status < 500) {
      throw NetworkError("lookup returned HTTP " + std::to_string(res->status), false);
    }
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    spdlog::debug("lookup attempt {} for '{}' failed: {}", attempt, surface, last_error);
    if (attempt < config.attempts) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  throw NetworkError("lookup failed after " + std::to_string(config.attempts) +
                         " attempts: " + last_error,
                     true);
}

std::vector<std::vector<CandidateEntity>> fetch_candidates_batch(
    const std::string &endpoint, const std::vector<std::string> &surfaces, int k,
    const LookupConfig &config) {
  if (config.max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
  std::counting_semaphore<> slots(config.max_in_flight);
  std::vector<std::future<std::vector<CandidateEntity>>> futures;
  futures.reserve(surfaces.size());
  for (const auto &surface : surfaces) {
    futures.push_back(std::async(std::launch::async, [&, surface] {
      slots.acquire();
      try {
        auto out = fetch_candidates(endpoint, surface, k, config);
        slots.release();
        return out;
      } catch (...) {
        slots.release();
        throw;
      }
    }));
  }
  std::vector<std::vector<CandidateEntity>> out;
  out.reserve(futures.size());
  for (auto &f : futures) out.push_back(f.get());
  return out;
}

}  // namespace elr
