#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "modfrag/adversarial.hpp"
#include "modfrag/circulation.hpp"
#include "modfrag/core_model.hpp"
#include "modfrag/pof.hpp"
#include "modfrag/regime.hpp"
#include "modfrag/splitting.hpp"
#include "modfrag/trips.hpp"

namespace modfrag::io {

using Json = nlohmann::ordered_json;

/// Parse errors become ValidationError with "path:line:column: message".
Json parse_json(const std::string& text, const std::string& source = "<input>");
Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// {"n": 2, "tau": [[0, 1], [2, 0]], "coords": [[x, y], ...]}; also accepts
/// the same object under a "graph" key.
StationGraph graph_from_json(const Json& j);
Json graph_to_json(const StationGraph& graph);

/// {"n": 2, "counts": [[0, 3], [5, 0]]}; also under a "demand" key.
DemandMatrix demand_from_json(const Json& j);
Json demand_to_json(const DemandMatrix& demand);

/// {"rho": 0.5}, {"firms": 3}, {"shares": [0.2, 0.8]},
/// {"rho_matrix": [[...]]} or {"matrices": [[[...]], ...]}; also under "shares".
MarketShares shares_from_json(const Json& j);
Json shares_to_json(const MarketShares& shares);

/// {"kappa": [[0, 1], [0, 0]]} or a bare matrix.
SplitIndicator kappa_from_json(const Json& j);

Json solution_to_json(const RebalanceSolution& solution);
Json label_to_json(const RegimeLabel& label);
Json estimate_to_json(const PofEstimate& estimate);
Json fit_to_json(const SlopeFit& fit);
Json adversarial_to_json(const AdversarialResult& result);
Json bruteforce_to_json(const BruteForceResult& result);
Json clustering_to_json(const StationClustering& clustering);
Json load_report_to_json(const LoadReport& report);

/// Keeps full precision and writes integers for integral values.
std::string dump(const Json& j);

}  // namespace modfrag::io
