#include "convexnn/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace convexnn {

json arrangement_to_json(const ArrangementSet& s) {
    json j;
    j["n"] = s.n;
    json keys = json::array();
    for (const auto& p : s.patterns) keys.push_back(p.key());
    j["patterns"] = std::move(keys);
    json wit = json::array();
    for (const auto& w : s.witnesses) wit.push_back(w);
    j["witnesses"] = std::move(wit);
    return j;
}

ArrangementSet arrangement_from_json(const json& j) {
    ArrangementSet s;
    s.n = j.at("n").get<std::size_t>();
    for (const auto& key : j.at("patterns")) {
        s.patterns.push_back(ActivationPattern::from_key(key.get<std::string>()));
        if (s.patterns.back().mask.size() != s.n) {
            throw std::invalid_argument("arrangement json: pattern '" + key.get<std::string>() +
                                        "' does not have n = " + std::to_string(s.n) + " bits");
        }
    }
    for (const auto& w : j.at("witnesses")) s.witnesses.push_back(w.get<Vector>());
    if (s.witnesses.size() != s.patterns.size()) {
        throw std::invalid_argument("arrangement json: " + std::to_string(s.witnesses.size()) +
                                    " witnesses for " + std::to_string(s.patterns.size()) +
                                    " patterns");
    }
    return s;
}

json network_to_json(const TwoLayerReLUNet& net) {
    validate(net);
    json j;
    j["d"] = net.d;
    j["m"] = net.m;
    json rows = json::array();
    for (std::size_t k = 0; k < net.d; ++k) rows.push_back(net.u.row(k));
    j["U"] = std::move(rows);
    j["alpha"] = net.alpha;
    return j;
}

TwoLayerReLUNet network_from_json(const json& j) {
    TwoLayerReLUNet net;
    net.d = j.at("d").get<std::size_t>();
    net.m = j.at("m").get<std::size_t>();
    net.u = Matrix(net.d, net.m);
    const json& rows = j.at("U");
    if (rows.size() != net.d) {
        throw std::invalid_argument("network json: U has " + std::to_string(rows.size()) +
                                    " rows, expected " + std::to_string(net.d));
    }
    for (std::size_t k = 0; k < net.d; ++k) {
        Vector row = rows[k].get<Vector>();
        if (row.size() != net.m) {
            throw std::invalid_argument("network json: U row " + std::to_string(k) + " has " +
                                        std::to_string(row.size()) + " entries, expected " +
                                        std::to_string(net.m));
        }
        net.u.set_row(k, row);
    }
    net.alpha = j.at("alpha").get<Vector>();
    validate(net);
    return net;
}

json diagnostics_to_json(const SolverDiagnostics& d) {
    return json{{"iterations", d.iterations},
                {"primal_residual", d.primal_residual},
                {"dual_residual", d.dual_residual},
                {"objective_trace", d.objective_trace},
                {"converged", d.converged}};
}

json certificate_to_json(const DualCertificate& c) {
    return json{{"v_hat", c.v_hat},
                {"dual_value", c.dual_value},
                {"certified_gap", c.certified_gap},
                {"max_dual_constraint", c.max_dual_constraint},
                {"max_constraint_violation", c.max_constraint_violation},
                {"valid", c.valid}};
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return j;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<Vector>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out << ',';
        out << header[j];
    }
    out << '\n';
    for (const Vector& row : rows) {
        if (row.size() != header.size()) {
            throw std::invalid_argument("write_csv: row with " + std::to_string(row.size()) +
                                        " cells under a " + std::to_string(header.size()) +
                                        "-column header");
        }
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ',';
            out << format_g17(row[j]);
        }
        out << '\n';
    }
}

}  // namespace convexnn
