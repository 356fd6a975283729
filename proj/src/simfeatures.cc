#include "elr/simfeatures.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "elr/error.h"
#include "io_util.h"

namespace elr {

double char_jaccard(std::string_view a, std::string_view b) {
  std::set<char> sa, sb;
  for (char c : internal::lowercase(a)) sa.insert(c);
  for (char c : internal::lowercase(b)) sb.insert(c);
  if (sa.empty() && sb.empty()) return 1.0;
  size_t inter = 0;
  for (char c : sa) inter += sb.count(c);
  size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

int levenshtein(std::string_view a, std::string_view b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double lev_sim(std::string_view a, std::string_view b) {
  size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

double jaro_winkler(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  int la = static_cast<int>(a.size()), lb = static_cast<int>(b.size());
  int window = std::max(0, std::max(la, lb) / 2 - 1);
  std::vector<bool> ma(la, false), mb(lb, false);
  int matches = 0;
  for (int i = 0; i < la; ++i) {
    int lo = std::max(0, i - window), hi = std::min(lb - 1, i + window);
    for (int j = lo; j <= hi; ++j) {
      if (!mb[j] && a[i] == b[j]) {
        ma[i] = mb[j] = true;
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 0.0;
  int transpositions = 0;
  for (int i = 0, j = 0; i < la; ++i) {
    if (!ma[i]) continue;
    while (!mb[j]) ++j;
    if (a[i] != b[j]) ++transpositions;
    ++j;
  }
  double m = matches;
  double jaro = (m / la + m / lb + (m - transpositions / 2.0) / m) / 3.0;
  int prefix = 0;
  while (prefix < std::min({4, la, lb}) && a[prefix] == b[prefix]) ++prefix;
  return jaro + prefix * 0.1 * (1.0 - jaro);
}

double partial_ratio(std::string_view a, std::string_view b) {
  std::string_view shorter = a.size() <= b.size() ? a : b;
  std::string_view longer = a.size() <= b.size() ? b : a;
  if (shorter.empty()) return 1.0;
  double best = 0.0;
  for (size_t start = 0; start + shorter.size() <= longer.size(); ++start) {
    best = std::max(best, lev_sim(shorter, longer.substr(start, shorter.size())));
    if (best == 1.0) break;
  }
  return best;
}

std::vector<double> minmax_rescale(std::span<const double> values) {
  if (values.empty()) throw ValidationError("minmax_rescale of an empty vector");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("minmax_rescale of a non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<double> out(values.size(), 1.0);
  if (hi == lo) return out;
  for (size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
  return out;
}

std::vector<double> context_scores(const LabeledInstance &inst,
                                   const std::map<std::string, Mention> &all_mentions) {
  std::vector<std::string> context;
  for (const auto &id : inst.mention.context_ids) {
    auto it = all_mentions.find(id);
    if (it == all_mentions.end()) {
      throw ValidationError("mention " + inst.mention.id + ": unknown context id " + id);
    }
    context.push_back(internal::lowercase(it->second.surface));
  }
  std::vector<double> raw;
  raw.reserve(inst.candidates.size());
  for (const auto &c : inst.candidates) {
    double sum = 0.0;
    if (c.description) {
      std::string desc = internal::lowercase(*c.description);
      for (const auto &s : context) sum += partial_ratio(s, desc);
    }
    raw.push_back(sum);
  }
  if (raw.empty()) return raw;
  return minmax_rescale(raw);
}

double context_score(const LabeledInstance &inst, int candidate_index,
                     const std::map<std::string, Mention> &all_mentions) {
  if (candidate_index < 0 || candidate_index >= static_cast<int>(inst.candidates.size())) {
    throw ValidationError("candidate index out of range");
  }
  return context_scores(inst, all_mentions)[candidate_index];
}

double type_score(const Mention &m, const CandidateEntity &e) {
  return m.type && e.domains.count(*m.type) ? 1.0 : 0.0;
}

std::vector<double> prominence_score(const LabeledInstance &inst) {
  std::vector<double> deg;
  deg.reserve(inst.candidates.size());
  for (const auto &c : inst.candidates) deg.push_back(static_cast<double>(c.indegree));
  return minmax_rescale(deg);
}

const char *feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kJacc: return "jacc";
    case FeatureKind::kLev: return "lev";
    case FeatureKind::kJw: return "jw";
    case FeatureKind::kPr: return "pr";
    case FeatureKind::kCtx: return "ctx";
    case FeatureKind::kType: return "type";
    case FeatureKind::kProm: return "prom";
    case FeatureKind::kExternal: return "external";
    case FeatureKind::kBox: return "box";
  }
  return "?";
}

FeatureKind feature_kind_from_name(const std::string &name) {
  static const std::map<std::string, FeatureKind> kinds = {
      {"jacc", FeatureKind::kJacc}, {"lev", FeatureKind::kLev},
      {"jw", FeatureKind::kJw},     {"pr", FeatureKind::kPr},
      {"ctx", FeatureKind::kCtx},   {"type", FeatureKind::kType},
      {"prom", FeatureKind::kProm}, {"external", FeatureKind::kExternal},
      {"box", FeatureKind::kBox}};
  auto it = kinds.find(name);
  if (it == kinds.end()) throw ValidationError("unknown feature kind " + name);
  return it->second;
}

FeatureCatalog FeatureCatalog::defaults() {
  FeatureCatalog c;
  for (auto kind : {FeatureKind::kJacc, FeatureKind::kLev, FeatureKind::kJw, FeatureKind::kPr,
                    FeatureKind::kCtx, FeatureKind::kType, FeatureKind::kProm}) {
    c.add(feature_kind_name(kind), FeatureSpec{kind, "", {}});
  }
  for (const char *col : {"spacy", "blink", "bert"}) {
    c.add(col, FeatureSpec{FeatureKind::kExternal, col, {}});
  }
  c.add("box", FeatureSpec{FeatureKind::kBox, "bert", {}});
  return c;
}

void FeatureCatalog::add(const std::string &name, FeatureSpec spec) {
  if (entries_.count(name)) throw ValidationError("duplicate catalog entry " + name);
  if (spec.kind == FeatureKind::kExternal && spec.source.empty()) spec.source = name;
  entries_.emplace(name, std::move(spec));
}

const FeatureSpec &FeatureCatalog::at(const std::string &name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ValidationError("feature " + name + " not in catalog");
  return it->second;
}

FeatureCatalog FeatureCatalog::restrict_to(const std::vector<std::string> &names) const {
  FeatureCatalog out;
  for (const auto &n : names) {
    if (!out.contains(n)) out.add(n, at(n));
  }
  return out;
}

bool FeatureCatalog::operator==(const FeatureCatalog &other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (const auto &[name, spec] : entries_) {
    auto it = other.entries_.find(name);
    if (it == other.entries_.end()) return false;
    const auto &o = it->second;
    if (spec.kind != o.kind || spec.source != o.source || !(spec.box == o.box)) return false;
  }
  return true;
}

FeatureTable::FeatureTable(std::vector<std::string> feature_names)
    : names_(std::move(feature_names)) {}

int FeatureTable::column(const std::string &name) const {
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

void FeatureTable::add_row(Row row) {
  if (row.values.size() != names_.size()) {
    throw ValidationError("feature row width mismatch for (" + row.mention_id + ", " +
                          row.candidate_id + ")");
  }
  auto key = std::make_pair(row.mention_id, row.candidate_id);
  if (index_.count(key)) {
    throw ValidationError("duplicate feature row (" + row.mention_id + ", " +
                          row.candidate_id + ")");
  }
  index_[key] = rows_.size();
  rows_.push_back(std::move(row));
}

const FeatureTable::Row *FeatureTable::find(const std::string &mention_id,
                                            const std::string &candidate_id) const {
  auto it = index_.find({mention_id, candidate_id});
  return it == index_.end() ? nullptr : &rows_[it->second];
}

double FeatureTable::value(const std::string &mention_id, const std::string &candidate_id,
                           const std::string &feature) const {
  const Row *row = find(mention_id, candidate_id);
  if (!row) throw ValidationError("no feature row for (" + mention_id + ", " + candidate_id + ")");
  int col = column(feature);
  if (col < 0) throw ValidationError("feature table has no column " + feature);
  return row->values[col];
}

std::map<std::string, double> FeatureTable::row_map(const Row &row) const {
  std::map<std::string, double> out;
  for (size_t i = 0; i < names_.size(); ++i) out[names_[i]] = row.values[i];
  return out;
}

namespace {

std::vector<FeatureTable::Row> instance_rows(const Dataset &ds, const LabeledInstance &inst,
                                             const std::vector<std::string> &names,
                                             const FeatureCatalog &catalog,
                                             std::map<std::string, int> &missing) {
  const size_t n = inst.candidates.size();
  std::vector<std::vector<double>> columns;
  columns.reserve(names.size());
  std::string surface = internal::lowercase(inst.mention.surface);
  for (const auto &name : names) {
    const FeatureSpec &spec = catalog.at(name);
    std::vector<double> col(n, 0.0);
    switch (spec.kind) {
      case FeatureKind::kJacc:
        for (size_t j = 0; j < n; ++j) col[j] = char_jaccard(inst.mention.surface, inst.candidates[j].name);
        break;
      case FeatureKind::kLev:
        for (size_t j = 0; j < n; ++j) col[j] = lev_sim(surface, internal::lowercase(inst.candidates[j].name));
        break;
      case FeatureKind::kJw:
        for (size_t j = 0; j < n; ++j) col[j] = jaro_winkler(surface, internal::lowercase(inst.candidates[j].name));
        break;
      case FeatureKind::kPr:
        for (size_t j = 0; j < n; ++j) col[j] = partial_ratio(surface, internal::lowercase(inst.candidates[j].name));
        break;
      case FeatureKind::kCtx:
        col = context_scores(inst, ds.mentions);
        break;
      case FeatureKind::kType:
        for (size_t j = 0; j < n; ++j) col[j] = type_score(inst.mention, inst.candidates[j]);
        break;
      case FeatureKind::kProm:
        col = prominence_score(inst);
        break;
      case FeatureKind::kExternal:
        for (size_t j = 0; j < n; ++j) {
          const auto &scores = inst.candidates[j].external_scores;
          auto it = scores.find(spec.source);
          if (it == scores.end()) {
            ++missing[name];
          } else {
            col[j] = it->second;
          }
        }
        break;
      case FeatureKind::kBox: {
        std::vector<double> cos(n, 0.0);
        for (size_t j = 0; j < n; ++j) {
          const auto &scores = inst.candidates[j].external_scores;
          auto it = scores.find(spec.source);
          if (it != scores.end()) cos[j] = it->second;
        }
        BoxParams params = spec.box;
        if (params.psi.empty() && n > 0 && inst.candidates[0].embedding) {
          params = BoxParams::zeros(static_cast<int>(inst.candidates[0].embedding->size()));
        }
        col = joint_box_feature(inst, peer_candidates(ds, inst), params, cos);
        break;
      }
    }
    columns.push_back(std::move(col));
  }
  std::vector<FeatureTable::Row> rows;
  rows.reserve(n);
  for (size_t j = 0; j < n; ++j) {
    FeatureTable::Row row{inst.mention.id, inst.candidates[j].id, {}};
    row.values.reserve(names.size());
    for (const auto &col : columns) row.values.push_back(col[j]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

FeatureTable build_feature_table(const Dataset &ds, const FeatureCatalog &catalog,
                                 const FeatureBuildOptions &options) {
  std::vector<std::string> names;
  bool needs_box = false;
  for (const auto &[name, spec] : catalog.entries()) {
    names.push_back(name);
    needs_box |= spec.kind == FeatureKind::kBox;
  }
  if (!options.columns.empty()) {
    std::vector<std::string> sorted = options.columns;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != names) throw ValidationError("column order must list every catalog feature once");
    names = options.columns;
  }
  if (needs_box) {
    for (const auto &inst : ds.instances) {
      for (const auto &c : inst.candidates) {
        if (!c.embedding) {
          throw ValidationError("box feature requires embeddings; candidate " + c.id +
                                " of mention " + inst.mention.id + " has none");
        }
      }
    }
  }

  const size_t count = ds.instances.size();
  std::vector<std::vector<FeatureTable::Row>> per_instance(count);
  std::vector<std::map<std::string, int>> missing(count);
  int jobs = std::max(1, options.jobs);
  if (jobs == 1 || count < 2) {
    for (size_t i = 0; i < count; ++i) {
      per_instance[i] = instance_rows(ds, ds.instances[i], names, catalog, missing[i]);
    }
  } else {
    std::vector<std::future<void>> workers;
    size_t chunk = (count + jobs - 1) / jobs;
    for (size_t begin = 0; begin < count; begin += chunk) {
      size_t end = std::min(count, begin + chunk);
      workers.push_back(std::async(std::launch::async, [&, begin, end] {
        for (size_t i = begin; i < end; ++i) {
          per_instance[i] = instance_rows(ds, ds.instances[i], names, catalog, missing[i]);
        }
      }));
    }
    for (auto &w : workers) w.get();
  }

  FeatureTable table(names);
  for (auto &rows : per_instance) {
    for (auto &row : rows) table.add_row(std::move(row));
  }
  std::map<std::string, int> missing_total;
  for (const auto &m : missing) {
    for (const auto &[k, v] : m) missing_total[k] += v;
  }
  for (const auto &[name, n] : missing_total) {
    std::string msg = "external column " + name + " missing on " + std::to_string(n) +
                      " candidates; using 0.0";
    if (options.warnings) {
      options.warnings->push_back(msg);
    } else {
      spdlog::warn("{}", msg);
    }
  }
  return table;
}

std::string feature_table_to_csv(const FeatureTable &table) {
  std::string out = "mention_id,candidate_id";
  for (const auto &n : table.feature_names()) out += "," + internal::csv_field(n);
  out += "\n";
  for (const auto &row : table.rows()) {
    out += internal::csv_field(row.mention_id);
    out += ",";
    out += internal::csv_field(row.candidate_id);
    for (double v : row.values) {
      out += ",";
      out += internal::format_double(v);
    }
    out += "\n";
  }
  return out;
}

FeatureTable feature_table_from_csv(const std::string &csv) {
  auto lines = internal::split_lines(csv);
  if (lines.empty()) throw ValidationError("feature CSV is empty");
  auto header = internal::split_csv_line(lines[0]);
  if (header.size() < 2 || header[0] != "mention_id" || header[1] != "candidate_id") {
    throw ValidationError("feature CSV header must start with mention_id,candidate_id");
  }
  FeatureTable table(std::vector<std::string>(header.begin() + 2, header.end()));
  for (size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    auto fields = internal::split_csv_line(lines[ln]);
    if (fields.size() != header.size()) {
      throw ValidationError("feature CSV line " + std::to_string(ln + 1) + ": expected " +
                            std::to_string(header.size()) + " fields");
    }
    FeatureTable::Row row{fields[0], fields[1], {}};
    for (size_t i = 2; i < fields.size(); ++i) {
      row.values.push_back(internal::parse_double(fields[i]));
    }
    table.add_row(std::move(row));
  }
  return table;
}

void save_feature_table(const FeatureTable &table, const std::string &path) {
  internal::write_file_atomic(path, feature_table_to_csv(table));
}

FeatureTable load_feature_table(const std::string &path) {
  return feature_table_from_csv(internal::read_file(path));
}

}  // namespace elr
