#include "farsim/fleet.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "farsim/rng.hpp"

namespace farsim {

std::string Policy::name() const {
    if (kind == Kind::Reduce) return "reduce:" + to_string(statistic);
    return "fixed:" + std::to_string(fixed_epochs);
}

Policy Policy::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("policy: expected kind:arg, got " + text);
    const std::string kind = text.substr(0, colon);
    const std::string arg = text.substr(colon + 1);
    if (kind == "reduce") return Policy::reduce(statistic_from_string(arg));
    if (kind == "fixed") {
        std::size_t used = 0;
        const int epochs = std::stoi(arg, &used);
        if (used != arg.size() || epochs < 0)
            throw std::invalid_argument("policy: bad fixed epoch count: " + arg);
        return Policy::fixed(epochs);
    }
    throw std::invalid_argument("policy: unknown kind: " + kind);
}

RateDistribution RateDistribution::uniform(double lo, double hi) {
    if (lo < 0.0 || hi > 1.0 || lo > hi)
        throw std::invalid_argument("rate distribution: need 0 <= lo <= hi <= 1");
    RateDistribution d;
    d.kind = Kind::Uniform;
    d.lo = lo;
    d.hi = hi;
    return d;
}

RateDistribution RateDistribution::explicit_rates(std::vector<double> rates) {
    for (double r : rates)
        if (r < 0.0 || r > 1.0)
            throw std::invalid_argument("rate distribution: rates must be in [0, 1]");
    RateDistribution d;
    d.kind = Kind::Explicit;
    d.rates = std::move(rates);
    return d;
}

std::vector<ChipRecord> generate_fleet(const ArrayConfig& array, int count,
                                       const RateDistribution& dist, std::uint64_t seed) {
    array.validate();
    if (count < 1) throw std::invalid_argument("generate_fleet: count must be >= 1");
    if (dist.kind == RateDistribution::Kind::Explicit &&
        static_cast<int>(dist.rates.size()) != count)
        throw std::invalid_argument("generate_fleet: explicit rate list length must equal count");

    std::vector<ChipRecord> fleet;
    fleet.reserve(count);
    char id[32];
    for (int i = 0; i < count; ++i) {
        double rate;
        if (dist.kind == RateDistribution::Kind::Explicit) {
            rate = dist.rates[i];
        } else {
            Rng rng(derive_seed(seed, "chip-rate", static_cast<std::uint64_t>(i)));
            rate = dist.lo + (dist.hi - dist.lo) * rng.next_uniform();
        }
        const std::uint64_t map_seed = derive_seed(seed, "chip-map", static_cast<std::uint64_t>(i));
        std::snprintf(id, sizeof(id), "chip-%04d", i);
        fleet.push_back({id, generate_fault_map(array, rate, map_seed)});
    }
    return fleet;
}

FleetReport run_policy(const NetworkParams& pretrained, const NetworkSpec& spec,
                       const Dataset& train_data, const Dataset& test_data,
                       const std::vector<ChipRecord>& fleet, const Policy& policy,
                       const ResilienceTable* table, double constraint,
                       const TrainConfig& train_cfg) {
    spec.validate();
    if (policy.kind == Policy::Kind::Reduce) {
        if (!table) throw std::invalid_argument("run_policy: reduce policy requires a resilience table");
        if (table->accuracy_target != constraint)
            throw std::invalid_argument("run_policy: table accuracy target does not match the constraint");
        if (table->spec_hash != spec.hash())
            throw std::invalid_argument("run_policy: table was profiled for a different network");
        for (const ChipRecord& chip : fleet)
            if (!(chip.fault_map.config() == table->array))
                throw std::invalid_argument("run_policy: table array config does not match the fleet");
    }
    if (policy.kind == Policy::Kind::Fixed && policy.fixed_epochs < 0)
        throw std::invalid_argument("run_policy: fixed epochs must be >= 0");

    const int n = static_cast<int>(fleet.size());
    std::vector<ChipResult> results(n);
    std::string first_error;

#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            const ChipRecord& chip = fleet[i];
            ChipResult res;
            res.chip_id = chip.chip_id;
            res.fault_rate = fault_rate(chip.fault_map);

            int budget = 0;
            if (policy.kind == Policy::Kind::Reduce) {
                try {
                    budget = select_budget(*table, res.fault_rate, policy.statistic);
                } catch (const RateBeyondProfileError&) {
                    res.failed_reason = "RATE_BEYOND_PROFILE";
                } catch (const UnrecoverableError&) {
                    res.failed_reason = "UNRECOVERABLE";
                }
            } else {
                budget = policy.fixed_epochs;
            }

            if (res.failed_reason.empty()) {
                const MaskSet masks = derive_maskset(spec, chip.fault_map);
                TrainConfig tc = train_cfg;
                tc.seed = derive_seed(train_cfg.seed, "chip-train", static_cast<std::uint64_t>(i));
                auto trained = train_masked(pretrained, masks, train_data, test_data, budget, tc);
                res.budget_epochs = budget;
                res.final_accuracy = trained.second.accuracies.back();
                res.meets_constraint = *res.final_accuracy >= constraint;
            }
            results[i] = std::move(res);
        } catch (const std::exception& ex) {
#pragma omp critical
            if (first_error.empty()) first_error = ex.what();
        }
    }
    if (!first_error.empty()) throw std::runtime_error("run_policy: " + first_error);

    FleetReport report;
    report.policy = policy;
    report.accuracy_constraint = constraint;
    report.chips = std::move(results);
    for (const ChipResult& r : report.chips) {
        if (r.budget_epochs) report.total_epochs += *r.budget_epochs;
        if (r.meets_constraint) ++report.num_meeting;
        if (!r.failed_reason.empty()) ++report.num_failed;
    }
    return report;
}

PolicyComparison compare_policies(const std::vector<FleetReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("compare_policies: no reports");
    PolicyComparison cmp;
    for (const ChipResult& r : reports.front().chips) cmp.chip_ids.push_back(r.chip_id);
    const double constraint = reports.front().accuracy_constraint;

    for (const FleetReport& rep : reports) {
        if (rep.accuracy_constraint != constraint)
            throw std::invalid_argument("compare_policies: reports use different constraints");
        if (rep.chips.size() != cmp.chip_ids.size())
            throw std::invalid_argument("compare_policies: reports cover different fleets");
        std::vector<std::optional<double>> accs;
        for (std::size_t i = 0; i < rep.chips.size(); ++i) {
            if (rep.chips[i].chip_id != cmp.chip_ids[i])
                throw std::invalid_argument("compare_policies: reports cover different fleets");
            accs.push_back(rep.chips[i].final_accuracy);
        }
        cmp.rows.push_back({rep.policy.name(), rep.total_epochs, rep.num_meeting, rep.num_failed});
        cmp.accuracies.push_back(std::move(accs));
    }
    return cmp;
}

}  // namespace farsim
