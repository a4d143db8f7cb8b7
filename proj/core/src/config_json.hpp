#pragma once

#include "detail.hpp"
#include "pme/synthdata.hpp"

namespace pme::synthdata {

detail::json population_to_json(const PopulationConfig& config);
PopulationConfig population_from_json(const detail::json& j);

}  // namespace pme::synthdata
