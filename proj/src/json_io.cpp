#include "farsim/json_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace farsim::jsonio {

namespace {

std::uint64_t u64_from_json(const json& j) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(j.get<std::int64_t>());
    throw IoError("expected a non-negative integer seed");
}

json train_cfg_to_json(const TrainConfig& cfg) {
    return {{"learning_rate", cfg.learning_rate},
            {"momentum", cfg.momentum},
            {"batch_size", cfg.batch_size},
            {"seed", cfg.seed}};
}

TrainConfig train_cfg_from_json(const json& j) {
    TrainConfig cfg;
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.momentum = j.at("momentum").get<double>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.seed = u64_from_json(j.at("seed"));
    return cfg;
}

std::string hash_to_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t hash_from_hex(const std::string& s) {
    if (s.size() < 3 || s[0] != '0' || s[1] != 'x') throw IoError("bad hash string: " + s);
    return std::stoull(s.substr(2), nullptr, 16);
}

}  // namespace

json params_to_json(const NetworkParams& params) {
    json layer_dims = json::array();
    if (!params.weights.empty()) {
        layer_dims.push_back(params.weights.front().rows());
        for (const Matrix& w : params.weights) layer_dims.push_back(w.cols());
    }
    json weights = json::array();
    for (const Matrix& w : params.weights) {
        json wj = json::array();
        for (int i = 0; i < w.rows(); ++i) {
            json row = json::array();
            for (int j = 0; j < w.cols(); ++j) row.push_back(w(i, j));
            wj.push_back(std::move(row));
        }
        weights.push_back(std::move(wj));
    }
    json biases = json::array();
    for (const auto& b : params.biases) biases.push_back(b);
    return {{"layer_dims", std::move(layer_dims)},
            {"weights", std::move(weights)},
            {"biases", std::move(biases)}};
}

NetworkParams params_from_json(const json& j) {
    NetworkParams params;
    const json& weights = j.at("weights");
    const json& biases = j.at("biases");
    if (weights.size() != biases.size()) throw IoError("params: weights/biases layer mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const json& wj = weights[l];
        const int rows = static_cast<int>(wj.size());
        if (rows == 0) throw IoError("params: empty weight matrix");
        const int cols = static_cast<int>(wj[0].size());
        Matrix w(rows, cols);
        for (int i = 0; i < rows; ++i) {
            if (static_cast<int>(wj[i].size()) != cols) throw IoError("params: ragged weight rows");
            for (int c = 0; c < cols; ++c) w(i, c) = wj[i][c].get<double>();
        }
        params.weights.push_back(std::move(w));
        params.biases.push_back(biases[l].get<std::vector<double>>());
        if (static_cast<int>(params.biases.back().size()) != cols)
            throw IoError("params: bias length mismatch");
    }
    const auto dims = j.at("layer_dims").get<std::vector<int>>();
    if (!params.weights.empty()) {
        std::vector<int> derived{params.weights.front().rows()};
        for (const Matrix& w : params.weights) derived.push_back(w.cols());
        if (dims != derived) throw IoError("params: layer_dims do not match weight shapes");
    }
    return params;
}

json fault_map_to_json(const FaultMap& map) {
    json faulty = json::array();
    for (const auto& [r, c] : map.faulty()) faulty.push_back(json::array({r, c}));
    return {{"rows", map.config().rows},
            {"cols", map.config().cols},
            {"seed", map.seed()},
            {"faulty", std::move(faulty)}};
}

FaultMap fault_map_from_json(const json& j) {
    ArrayConfig cfg{j.at("rows").get<int>(), j.at("cols").get<int>()};
    std::vector<std::pair<int, int>> coords;
    for (const json& rc : j.at("faulty")) {
        if (!rc.is_array() || rc.size() != 2) throw IoError("fault map: bad coordinate");
        coords.emplace_back(rc[0].get<int>(), rc[1].get<int>());
    }
    return FaultMap(cfg, std::move(coords), u64_from_json(j.at("seed")));
}

namespace {

json profile_cfg_to_json(const ProfileConfig& cfg) {
    return {{"fault_rates", cfg.fault_rates},
            {"repeats", cfg.repeats},
            {"max_epochs", cfg.max_epochs},
            {"accuracy_target", cfg.accuracy_target},
            {"train", train_cfg_to_json(cfg.train_cfg)},
            {"base_seed", cfg.base_seed},
            {"eval_split", "test"}};
}

ProfileConfig profile_cfg_from_json(const json& j) {
    ProfileConfig cfg;
    cfg.fault_rates = j.at("fault_rates").get<std::vector<double>>();
    cfg.repeats = j.at("repeats").get<int>();
    cfg.max_epochs = j.at("max_epochs").get<int>();
    cfg.accuracy_target = j.at("accuracy_target").get<double>();
    cfg.train_cfg = train_cfg_from_json(j.at("train"));
    cfg.base_seed = u64_from_json(j.at("base_seed"));
    return cfg;
}

}  // namespace

json table_to_json(const ResilienceTable& table) {
    json entries = json::array();
    for (const ResilienceEntry& e : table.entries) {
        json per_repeat = json::array();
        for (const auto& r : e.epochs_per_repeat) {
            if (r) per_repeat.push_back(*r);
            else per_repeat.push_back(nullptr);
        }
        json ej = {{"fault_rate", e.fault_rate}, {"epochs_per_repeat", std::move(per_repeat)}};
        ej["min"] = e.min_epochs ? json(*e.min_epochs) : json(nullptr);
        ej["mean"] = e.mean_epochs ? json(*e.mean_epochs) : json(nullptr);
        ej["max"] = e.max_epochs ? json(*e.max_epochs) : json(nullptr);
        ej["reachable"] = e.reachable;
        entries.push_back(std::move(ej));
    }
    return {{"accuracy_target", table.accuracy_target},
            {"array", {{"rows", table.array.rows}, {"cols", table.array.cols}}},
            {"spec_hash", hash_to_hex(table.spec_hash)},
            {"entries", std::move(entries)},
            {"profile_config", profile_cfg_to_json(table.config)}};
}

ResilienceTable table_from_json(const json& j) {
    ResilienceTable table;
    table.accuracy_target = j.at("accuracy_target").get<double>();
    table.array = {j.at("array").at("rows").get<int>(), j.at("array").at("cols").get<int>()};
    table.spec_hash = hash_from_hex(j.at("spec_hash").get<std::string>());
    table.config = profile_cfg_from_json(j.at("profile_config"));
    for (const json& ej : j.at("entries")) {
        ResilienceEntry e;
        e.fault_rate = ej.at("fault_rate").get<double>();
        for (const json& r : ej.at("epochs_per_repeat")) {
            if (r.is_null()) e.epochs_per_repeat.push_back(std::nullopt);
            else e.epochs_per_repeat.push_back(r.get<int>());
        }
        if (!ej.at("min").is_null()) e.min_epochs = ej.at("min").get<int>();
        if (!ej.at("mean").is_null()) e.mean_epochs = ej.at("mean").get<double>();
        if (!ej.at("max").is_null()) e.max_epochs = ej.at("max").get<int>();
        e.reachable = ej.at("reachable").get<bool>();
        table.entries.push_back(std::move(e));
    }
    return table;
}

json report_to_json(const FleetReport& report) {
    json chips = json::array();
    for (const ChipResult& r : report.chips) {
        json cj = {{"chip_id", r.chip_id}, {"fault_rate", r.fault_rate}};
        cj["budget_epochs"] = r.budget_epochs ? json(*r.budget_epochs) : json(nullptr);
        if (!r.failed_reason.empty()) cj["failed_reason"] = r.failed_reason;
        cj["final_accuracy"] = r.final_accuracy ? json(*r.final_accuracy) : json(nullptr);
        cj["meets_constraint"] = r.meets_constraint;
        chips.push_back(std::move(cj));
    }
    return {{"policy", report.policy.name()},
            {"accuracy_constraint", report.accuracy_constraint},
            {"chips", std::move(chips)},
            {"total_epochs", report.total_epochs},
            {"num_meeting", report.num_meeting},
            {"num_failed", report.num_failed}};
}

FleetReport report_from_json(const json& j) {
    FleetReport report;
    report.policy = Policy::parse(j.at("policy").get<std::string>());
    report.accuracy_constraint = j.at("accuracy_constraint").get<double>();
    for (const json& cj : j.at("chips")) {
        ChipResult r;
        r.chip_id = cj.at("chip_id").get<std::string>();
        r.fault_rate = cj.at("fault_rate").get<double>();
        if (!cj.at("budget_epochs").is_null()) r.budget_epochs = cj.at("budget_epochs").get<int>();
        if (cj.contains("failed_reason")) r.failed_reason = cj.at("failed_reason").get<std::string>();
        if (!cj.at("final_accuracy").is_null())
            r.final_accuracy = cj.at("final_accuracy").get<double>();
        r.meets_constraint = cj.at("meets_constraint").get<bool>();
        report.chips.push_back(std::move(r));
    }
    report.total_epochs = j.at("total_epochs").get<long long>();
    report.num_meeting = j.at("num_meeting").get<int>();
    report.num_failed = j.at("num_failed").get<int>();
    return report;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string resilience_csv(const ResilienceTable& table) {
    std::ostringstream out;
    out << "fault_rate,repeat,epochs\n";
    for (const ResilienceEntry& e : table.entries) {
        for (std::size_t k = 0; k < e.epochs_per_repeat.size(); ++k) {
            out << format_double(e.fault_rate) << ',' << k << ',';
            if (e.epochs_per_repeat[k]) out << *e.epochs_per_repeat[k];
            out << '\n';
        }
    }
    return out.str();
}

std::string report_csv(const FleetReport& report) {
    std::ostringstream out;
    out << "chip_id,fault_rate,policy,budget_epochs,final_accuracy,meets_constraint\n";
    const std::string policy = report.policy.name();
    for (const ChipResult& r : report.chips) {
        out << r.chip_id << ',' << format_double(r.fault_rate) << ',' << policy << ',';
        if (r.budget_epochs) out << *r.budget_epochs;
        else out << "FAILED:" << r.failed_reason;
        out << ',';
        if (r.final_accuracy) out << format_double(*r.final_accuracy);
        out << ',' << (r.meets_constraint ? "true" : "false") << '\n';
    }
    return out.str();
}

std::string comparison_csv(const PolicyComparison& cmp) {
    std::ostringstream out;
    out << "policy,total_epochs,num_meeting,num_failed\n";
    for (const auto& row : cmp.rows)
        out << row.policy << ',' << row.total_epochs << ',' << row.num_meeting << ','
            << row.num_failed << '\n';
    return out.str();
}

void save_text(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

void save_json(const json& j, const std::string& path) { save_text(j.dump(2) + "\n", path); }

json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw IoError("bad JSON in " + path + ": " + ex.what());
    }
    return j;
}

}  // namespace farsim::jsonio
