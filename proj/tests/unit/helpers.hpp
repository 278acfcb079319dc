#pragma once

#include <string>

#include "predcal/csv.hpp"
#include "predcal/design.hpp"
#include "predcal/types.hpp"

namespace testutil {

inline std::string data_path(const std::string& name) {
  return std::string(PREDCAL_TEST_DATA_DIR) + "/" + name;
}

inline predcal::ClusteredBinomial qb_dat1() {
  return predcal::load_binomial_csv(data_path("qb_dat1.csv"));
}

inline predcal::ClusteredCounts qp_dat1() {
  return predcal::load_counts_csv(data_path("qp_dat1.csv"));
}

inline predcal::ModelSpec c2_model() {
  return predcal::parse_formula("y_ijk~(1|a)+(1|b)+(1|a:b)");
}

inline predcal::MixedModelData c2_dat1() {
  return predcal::load_mixed_csv(data_path("c2_dat1.csv"), c2_model());
}

}  // namespace testutil
