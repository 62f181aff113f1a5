#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "robusttransport/adversary.hpp"
#include "robusttransport/filter.hpp"
#include "robusttransport/measures.hpp"
#include "robusttransport/wdro.hpp"

namespace rtr {

// CSV dataset format: header `w,x1,...,xd`; the weight column may be absent,
// in which case the measure is uniform. Values are written with 17 significant
// digits so round-trips are exact.
DiscreteMeasure read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const DiscreteMeasure& m);

nlohmann::json plan_to_json(const CorruptionPlan& plan);
CorruptionPlan plan_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const FilterReport& report);

nlohmann::json loss_to_json(const LossSpec& loss);
LossSpec loss_from_json(const nlohmann::json& j);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// 17-significant-digit text form used by every CSV writer.
std::string format_double(double v);

}  // namespace rtr
