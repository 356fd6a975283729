#ifndef ELR_SRC_SERIALIZATION_H_
#define ELR_SRC_SERIALIZATION_H_

#include "elr/logic.h"
#include "elr/simfeatures.h"
#include "json.hpp"

namespace elr::internal {

nlohmann::json graph_to_json_value(const ScoringGraph &graph);
ScoringGraph graph_from_json_value(const nlohmann::json &j);

nlohmann::json catalog_to_json_value(const FeatureCatalog &catalog);
FeatureCatalog catalog_from_json_value(const nlohmann::json &j);

// Non-finite doubles are written as the strings "inf", "-inf", "nan".
nlohmann::json number_to_json(double v);
double number_from_json(const nlohmann::json &j);

}  // namespace elr::internal

#endif  // ELR_SRC_SERIALIZATION_H_
