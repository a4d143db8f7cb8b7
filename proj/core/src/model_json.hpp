#pragma once

#include "detail.hpp"
#include "pme/features.hpp"
#include "pme/neurofuzzy.hpp"

namespace pme::features {
detail::json pca_to_json(const PcaModel& model);
PcaModel pca_from_json(const detail::json& j, const std::string& context);
}  // namespace pme::features

namespace pme::neurofuzzy {
detail::json ts_to_json(const TsModel& model);
TsModel ts_from_json(const detail::json& j, const std::string& context);
}  // namespace pme::neurofuzzy
