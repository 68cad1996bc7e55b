#pragma once

#include "itr/data.hpp"
#include "itr/evaluation.hpp"
#include "itr/nuisance.hpp"
#include "itr/policy_dc.hpp"
#include "itr/selection.hpp"
#include "itr/transfer_weights.hpp"

#include "json.hpp"

#include <filesystem>

namespace itr::io {

using Json = nlohmann::ordered_json;

/// {"eta": [...], "canonicalized": true, "metadata": {...}}
Json rule_to_json(const LinearRule& rule, const Json& metadata = Json::object());
LinearRule rule_from_json(const Json& j);

Json nuisance_to_json(const NuisanceFit& fit);
NuisanceFit nuisance_from_json(const Json& j);

Json dc_report_to_json(const DcFitReport& report);
void write_trace_csv(const DcFitReport& report, const std::filesystem::path& path);

/// row_id,weight,method with 1-based row ids.
void write_weights_csv(const TransferWeights& w, const std::filesystem::path& path);
TransferWeights read_weights_csv(const std::filesystem::path& path);

Json balance_to_json(const EntropyBalanceFit& fit);
void write_balance_csv(const EntropyBalanceFit& fit, const std::filesystem::path& path);

Json selection_to_json(const SelectionReport& report);
void write_selection_csv(const SelectionReport& report, const std::filesystem::path& path);

Json probe_to_json(const ProbeResult& probe);

Json read_json(const std::filesystem::path& path);
void write_json(const Json& j, const std::filesystem::path& path);

}  // namespace itr::io
