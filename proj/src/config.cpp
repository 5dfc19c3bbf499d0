#include "farsim/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "farsim/rng.hpp"

namespace farsim {

namespace {

using json = nlohmann::ordered_json;

void reject_unknown_keys(const json& obj, const std::string& ctx,
                         std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("config: unknown key \"" + key + "\" in " + ctx);
    }
}

const json& require(const json& obj, const std::string& ctx, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError("config: missing key \"" + std::string(key) + "\" in " + ctx);
    return *it;
}

template <typename T>
T get_as(const json& obj, const std::string& ctx, const char* key) {
    try {
        return require(obj, ctx, key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: bad value for \"" + std::string(key) + "\" in " + ctx);
    }
}

DatasetConfig parse_dataset(const json& j) {
    DatasetConfig ds;
    const std::string type = get_as<std::string>(j, "dataset", "type");
    if (type == "synthetic") {
        ds.type = DatasetConfig::Type::Synthetic;
        reject_unknown_keys(j, "dataset",
                            {"type", "classes", "features", "samples_per_class", "spread"});
        ds.classes = get_as<int>(j, "dataset", "classes");
        ds.features = get_as<int>(j, "dataset", "features");
        ds.samples_per_class = get_as<int>(j, "dataset", "samples_per_class");
        ds.spread = get_as<double>(j, "dataset", "spread");
    } else if (type == "idx") {
        ds.type = DatasetConfig::Type::Idx;
        reject_unknown_keys(j, "dataset", {"type", "train_images", "train_labels", "test_images",
                                           "test_labels", "normalize"});
        ds.train_images = get_as<std::string>(j, "dataset", "train_images");
        ds.train_labels = get_as<std::string>(j, "dataset", "train_labels");
        ds.test_images = get_as<std::string>(j, "dataset", "test_images");
        ds.test_labels = get_as<std::string>(j, "dataset", "test_labels");
        if (j.contains("normalize")) ds.normalize = get_as<bool>(j, "dataset", "normalize");
    } else {
        throw ConfigError("config: dataset type must be \"synthetic\" or \"idx\"");
    }
    return ds;
}

RateDistribution parse_rates(const json& j) {
    reject_unknown_keys(j, "fleet.rates", {"uniform", "list"});
    if (j.contains("uniform")) {
        const auto bounds = get_as<std::vector<double>>(j, "fleet.rates", "uniform");
        if (bounds.size() != 2) throw ConfigError("config: fleet.rates.uniform needs [lo, hi]");
        try {
            return RateDistribution::uniform(bounds[0], bounds[1]);
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(std::string("config: ") + ex.what());
        }
    }
    if (j.contains("list")) {
        try {
            return RateDistribution::explicit_rates(
                get_as<std::vector<double>>(j, "fleet.rates", "list"));
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(std::string("config: ") + ex.what());
        }
    }
    throw ConfigError("config: fleet.rates needs \"uniform\" or \"list\"");
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& origin) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("config: cannot parse " + origin + ": " + ex.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown_keys(j, "top level",
                        {"seed", "out_dir", "accuracy_constraint", "network", "train", "array",
                         "dataset", "profile", "fleet"});

    RunConfig cfg;
    cfg.seed = get_as<std::uint64_t>(j, "top level", "seed");
    if (j.contains("out_dir")) cfg.out_dir = get_as<std::string>(j, "top level", "out_dir");
    cfg.accuracy_constraint = get_as<double>(j, "top level", "accuracy_constraint");
    if (cfg.accuracy_constraint <= 0.0 || cfg.accuracy_constraint > 1.0)
        throw ConfigError("config: accuracy_constraint must be in (0, 1]");

    const json& net = require(j, "top level", "network");
    reject_unknown_keys(net, "network", {"layer_dims", "activation"});
    cfg.network.layer_dims = get_as<std::vector<int>>(net, "network", "layer_dims");
    if (net.contains("activation")) {
        const std::string act = get_as<std::string>(net, "network", "activation");
        if (act != "relu") throw ConfigError("config: only \"relu\" activation is supported");
    }
    try {
        cfg.network.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    }

    const json& train = require(j, "top level", "train");
    reject_unknown_keys(train, "train", {"learning_rate", "momentum", "batch_size", "epochs"});
    cfg.train.learning_rate = get_as<double>(train, "train", "learning_rate");
    cfg.train.momentum = get_as<double>(train, "train", "momentum");
    cfg.train.batch_size = get_as<int>(train, "train", "batch_size");
    cfg.pretrain_epochs = get_as<int>(train, "train", "epochs");
    if (cfg.pretrain_epochs < 0) throw ConfigError("config: train.epochs must be >= 0");

    const json& arr = require(j, "top level", "array");
    reject_unknown_keys(arr, "array", {"rows", "cols"});
    cfg.array.rows = get_as<int>(arr, "array", "rows");
    cfg.array.cols = get_as<int>(arr, "array", "cols");
    try {
        cfg.array.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    }

    cfg.dataset = parse_dataset(require(j, "top level", "dataset"));

    const json& prof = require(j, "top level", "profile");
    reject_unknown_keys(prof, "profile", {"fault_rates", "repeats", "max_epochs"});
    cfg.profile.fault_rates = get_as<std::vector<double>>(prof, "profile", "fault_rates");
    cfg.profile.repeats = get_as<int>(prof, "profile", "repeats");
    cfg.profile.max_epochs = get_as<int>(prof, "profile", "max_epochs");
    cfg.profile.accuracy_target = cfg.accuracy_constraint;
    cfg.profile.train_cfg = cfg.train;
    cfg.profile.base_seed = derive_seed(cfg.seed, "profile");
    try {
        cfg.profile.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    }

    const json& fleet = require(j, "top level", "fleet");
    reject_unknown_keys(fleet, "fleet", {"count", "rates", "policies"});
    cfg.fleet.count = get_as<int>(fleet, "fleet", "count");
    if (cfg.fleet.count < 1) throw ConfigError("config: fleet.count must be >= 1");
    cfg.fleet.rates = parse_rates(require(fleet, "fleet", "rates"));
    if (cfg.fleet.rates.kind == RateDistribution::Kind::Explicit &&
        static_cast<int>(cfg.fleet.rates.rates.size()) != cfg.fleet.count)
        throw ConfigError("config: fleet.rates.list length must equal fleet.count");
    if (fleet.contains("policies")) {
        for (const json& p : fleet.at("policies")) {
            try {
                cfg.fleet.policies.push_back(Policy::parse(p.get<std::string>()));
            } catch (const std::exception& ex) {
                throw ConfigError(std::string("config: ") + ex.what());
            }
        }
    } else {
        cfg.fleet.policies.push_back(Policy::reduce(Statistic::Max));
    }
    for (const Policy& p : cfg.fleet.policies)
        if (p.kind == Policy::Kind::Fixed && p.fixed_epochs > cfg.profile.max_epochs)
            throw ConfigError("config: fixed policy epochs exceed profile.max_epochs");

    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), path);
}

std::pair<Dataset, Dataset> build_datasets(const RunConfig& cfg) {
    if (cfg.dataset.type == DatasetConfig::Type::Synthetic) {
        auto pair = synth_clusters(cfg.dataset.classes, cfg.dataset.features,
                                   cfg.dataset.samples_per_class, cfg.dataset.spread,
                                   derive_seed(cfg.seed, "dataset"));
        if (pair.first.features() != cfg.network.input_dim())
            throw ConfigError("config: dataset features do not match network input dim");
        if (pair.first.num_classes != cfg.network.num_classes())
            throw ConfigError("config: dataset classes do not match network output dim");
        return pair;
    }
    Dataset train = load_idx(cfg.dataset.train_images, cfg.dataset.train_labels,
                             cfg.dataset.normalize);
    train.split = "train";
    Dataset test = load_idx(cfg.dataset.test_images, cfg.dataset.test_labels,
                            cfg.dataset.normalize);
    test.split = "test";
    // the two files may disagree on the label alphabet; use the union
    const int classes = std::max(train.num_classes, test.num_classes);
    train.num_classes = classes;
    test.num_classes = classes;
    if (train.features() != cfg.network.input_dim())
        throw ConfigError("config: dataset features do not match network input dim");
    if (classes > cfg.network.num_classes())
        throw ConfigError("config: dataset classes exceed network output dim");
    return {std::move(train), std::move(test)};
}

}  // namespace farsim
