#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "farsim/faultsim.hpp"
#include "farsim/fleet.hpp"
#include "farsim/numnet.hpp"
#include "farsim/resilience.hpp"

namespace farsim::jsonio {

// ordered_json keeps keys in schema order, so rewrites of the same data are
// byte-identical.
using json = nlohmann::ordered_json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json params_to_json(const NetworkParams& params);
NetworkParams params_from_json(const json& j);

json fault_map_to_json(const FaultMap& map);
FaultMap fault_map_from_json(const json& j);

json table_to_json(const ResilienceTable& table);
ResilienceTable table_from_json(const json& j);

json report_to_json(const FleetReport& report);
FleetReport report_from_json(const json& j);

// CSV companions for external plotting.
std::string resilience_csv(const ResilienceTable& table);
std::string report_csv(const FleetReport& report);
std::string comparison_csv(const PolicyComparison& cmp);

void save_text(const std::string& text, const std::string& path);
void save_json(const json& j, const std::string& path);
json load_json(const std::string& path);

// Shortest round-trip decimal form of a double (via std::to_chars).
std::string format_double(double v);

}  // namespace farsim::jsonio
