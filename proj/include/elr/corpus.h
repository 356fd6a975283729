#ifndef ELR_CORPUS_H_
#define ELR_CORPUS_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace elr {

// A text span to be linked. Mentions of the same short text reference each
// other through context_ids.
struct Mention {
  std::string id;
  std::string surface;
  std::string text_id;
  std::vector<std::string> context_ids;
  std::optional<std::string> type;
};

struct CandidateEntity {
  std::string id;
  std::string name;
  std::optional<std::string> description;
  std::set<std::string> domains;
  int64_t indegree = 0;
  std::optional<std::vector<double>> embedding;
  // Precomputed scores from external systems, each in [0,1].
  std::map<std::string, double> external_scores;
};

struct LabeledInstance {
  Mention mention;
  std::vector<CandidateEntity> candidates;
  std::vector<int> labels;
};

struct Dataset {
  std::string name;
  std::vector<LabeledInstance> instances;
  std::optional<int> embedding_dim;
  // Every mention seen at load time, including those whose instance was
  // dropped. Context features resolve context_ids through this map.
  std::map<std::string, Mention> mentions;

  // Returns the mention with the given id, from instances or the
  // context-only registry. Throws ValidationError if unknown.
  const Mention &mention(const std::string &id) const;
};

struct LoadReport {
  int lines = 0;
  int kept = 0;
  int dropped_empty_candidates = 0;
  int dropped_all_negative = 0;

  std::string summary() const;
};

// Reads a JSONL dataset. Instances with no candidates or no positive label
// are dropped and counted in `report`.
Dataset load_dataset(const std::string &path, LoadReport *report = nullptr);
Dataset parse_dataset(const std::string &content, const std::string &name,
                      LoadReport *report = nullptr);

// Canonical JSONL form. Mentions referenced only as context are written as
// candidate-less records so that a reload resolves them again.
std::string dump_dataset(const Dataset &ds);
void save_dataset(const Dataset &ds, const std::string &path);

struct MergeReport {
  int matched = 0;
  int unmatched_candidates = 0;  // candidates defaulted to 0.0
  int unknown_mentions = 0;      // score rows naming absent mentions
  int duplicate_keys = 0;
  int rescaled_mentions = 0;
};

// Reads `mention_id,candidate_id,score` rows (CSV, optional header) and stores
// them as external_scores[feature_name]. Per-mention values outside [0,1] are
// min-max rescaled over the mention's candidate list.
Dataset merge_external_scores(const Dataset &ds, const std::string &scores_path,
                              const std::string &feature_name,
                              MergeReport *report = nullptr);

using ScoreKey = std::pair<std::string, std::string>;
Dataset merge_external_scores(const Dataset &ds,
                              const std::vector<std::pair<ScoreKey, double>> &rows,
                              const std::string &feature_name,
                              MergeReport *report = nullptr);

// Embedding file: JSONL records {"id": ..., "vec": [...]}.
std::map<std::string, std::vector<double>> load_embeddings(const std::string &path);
Dataset attach_embeddings(const Dataset &ds,
                          const std::map<std::string, std::vector<double>> &vecs);

struct ValidationReport {
  std::vector<std::string> violations;
  int candidates = 0;
  // Fraction of candidates carrying each optional field / external column.
  std::map<std::string, double> coverage;

  bool ok() const { return violations.empty(); }
};

ValidationReport validate_dataset(const Dataset &ds);

struct LookupConfig {
  // Results whose id starts with any of these prefixes are not entities.
  std::vector<std::string> denylist_prefixes = {
      "http://dbpedia.org/resource/Category:",
      "http://dbpedia.org/resource/Template:",
      "http://dbpedia.org/resource/File:",
      "http://dbpedia.org/resource/Portal:",
  };
  // Ids ending with this marker are disambiguation pages.
  std::vector<std::string> denylist_suffixes = {"_(disambiguation)"};
  int attempts = 3;
  std::chrono::milliseconds backoff{200};
  std::chrono::milliseconds timeout{5000};
  int max_in_flight = 4;
};

// Queries a lookup-style endpoint: GET {endpoint}?query=..&maxResults=k and
// parses a JSON array of {id, label, typeName[]}.
std::vector<CandidateEntity> fetch_candidates(const std::string &endpoint,
                                              const std::string &surface, int k,
                                              const LookupConfig &config = {});

// Issues fetch_candidates for every surface, at most config.max_in_flight at
// a time. Results are returned in input order.
std::vector<std::vector<CandidateEntity>> fetch_candidates_batch(
    const std::string &endpoint, const std::vector<std::string> &surfaces, int k,
    const LookupConfig &config = {});

}  // namespace elr

#endif  // ELR_CORPUS_H_
