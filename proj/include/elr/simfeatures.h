#ifndef ELR_SIMFEATURES_H_
#define ELR_SIMFEATURES_H_

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "elr/boxgeom.h"
#include "elr/corpus.h"

namespace elr {

// String similarities. All return values in [0,1], and 1.0 for two empty
// strings.

// Character-set Jaccard over case-folded characters.
double char_jaccard(std::string_view a, std::string_view b);
// 1 - levenshtein(a, b) / max(|a|, |b|).
double lev_sim(std::string_view a, std::string_view b);
// Jaro-Winkler with prefix scale 0.1 and at most 4 prefix characters.
double jaro_winkler(std::string_view a, std::string_view b);
// Best lev_sim between the shorter string and every equal-length window of
// the longer one. Argument order does not matter.
double partial_ratio(std::string_view a, std::string_view b);

int levenshtein(std::string_view a, std::string_view b);

// (v - min) / (max - min). A constant input maps to all 1.0.
std::vector<double> minmax_rescale(std::span<const double> values);

// Summed partial_ratio of every context mention against the candidate's
// description, rescaled over the instance's candidates. Returns one value per
// candidate.
std::vector<double> context_scores(const LabeledInstance &inst,
                                   const std::map<std::string, Mention> &all_mentions);
double context_score(const LabeledInstance &inst, int candidate_index,
                     const std::map<std::string, Mention> &all_mentions);

// 1 iff the mention has a type and the candidate lists it among its domains.
double type_score(const Mention &m, const CandidateEntity &e);

// Min-max rescaled in-degrees over the candidate list.
std::vector<double> prominence_score(const LabeledInstance &inst);

enum class FeatureKind { kJacc, kLev, kJw, kPr, kCtx, kType, kProm, kExternal, kBox };

const char *feature_kind_name(FeatureKind kind);
FeatureKind feature_kind_from_name(const std::string &name);

struct FeatureSpec {
  FeatureKind kind = FeatureKind::kExternal;
  // External: the candidate's external_scores column. Box: the column
  // holding the cosine similarity that is combined with the box score.
  std::string source;
  BoxParams box;  // box features only; empty means zero offsets, beta_box 1
};

class FeatureCatalog {
 public:
  // jacc, lev, jw, pr, ctx, type, prom, box and the external columns spacy,
  // blink and bert.
  static FeatureCatalog defaults();

  void add(const std::string &name, FeatureSpec spec);
  bool contains(const std::string &name) const { return entries_.count(name) > 0; }
  const FeatureSpec &at(const std::string &name) const;
  const std::map<std::string, FeatureSpec> &entries() const { return entries_; }

  // Sub-catalog holding only `names`; throws on unknown names.
  FeatureCatalog restrict_to(const std::vector<std::string> &names) const;

  bool operator==(const FeatureCatalog &other) const;

 private:
  std::map<std::string, FeatureSpec> entries_;
};

class FeatureTable {
 public:
  struct Row {
    std::string mention_id;
    std::string candidate_id;
    std::vector<double> values;  // aligned with feature_names()
  };

  FeatureTable() = default;
  explicit FeatureTable(std::vector<std::string> feature_names);

  const std::vector<std::string> &feature_names() const { return names_; }
  const std::vector<Row> &rows() const { return rows_; }
  size_t size() const { return rows_.size(); }

  // Column index of `name`, or -1.
  int column(const std::string &name) const;
  void add_row(Row row);
  const Row *find(const std::string &mention_id, const std::string &candidate_id) const;
  // Throws ValidationError if the row or the feature is absent.
  double value(const std::string &mention_id, const std::string &candidate_id,
               const std::string &feature) const;
  std::map<std::string, double> row_map(const Row &row) const;

  bool operator==(const FeatureTable &other) const {
    return names_ == other.names_ && rows_.size() == other.rows_.size() &&
           std::equal(rows_.begin(), rows_.end(), other.rows_.begin(),
                      [](const Row &a, const Row &b) {
                        return a.mention_id == b.mention_id &&
                               a.candidate_id == b.candidate_id && a.values == b.values;
                      });
  }

 private:
  std::vector<std::string> names_;
  std::vector<Row> rows_;
  std::map<std::pair<std::string, std::string>, size_t> index_;
};

struct FeatureBuildOptions {
  int jobs = 1;
  // Collects warnings instead of logging them.
  std::vector<std::string> *warnings = nullptr;
  // Column order; empty means catalog name order.
  std::vector<std::string> columns;
};

// One row per (mention, candidate) in dataset order. Missing external
// columns read as 0.0 and produce a warning.
FeatureTable build_feature_table(const Dataset &ds, const FeatureCatalog &catalog,
                                 const FeatureBuildOptions &options = {});

// CSV with header mention_id,candidate_id,<features>; values use 17
// significant digits so a reload is exact.
std::string feature_table_to_csv(const FeatureTable &table);
FeatureTable feature_table_from_csv(const std::string &csv);
void save_feature_table(const FeatureTable &table, const std::string &path);
FeatureTable load_feature_table(const std::string &path);

}  // namespace elr

#endif  // ELR_SIMFEATURES_H_
