#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "convexnn/arrangements.hpp"
#include "convexnn/network.hpp"
#include "convexnn/solver_config.hpp"

namespace convexnn {

using json = nlohmann::json;

// {"n": ..., "patterns": ["0101...", ...], "witnesses": [[...], ...]}
json arrangement_to_json(const ArrangementSet& s);
ArrangementSet arrangement_from_json(const json& j);

// {"d": ..., "m": ..., "U": [d rows of m], "alpha": [...]}
json network_to_json(const TwoLayerReLUNet& net);
TwoLayerReLUNet network_from_json(const json& j);

json diagnostics_to_json(const SolverDiagnostics& d);
json certificate_to_json(const DualCertificate& c);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

// Shortest digit string that round-trips the double (17 significant digits).
std::string format_g17(double v);

// Header row then one row per entry, every float at 17 significant digits.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<Vector>& rows);

}  // namespace convexnn
