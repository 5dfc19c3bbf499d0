#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "farsim/fleet.hpp"
#include "farsim/json_io.hpp"
#include "farsim/threads.hpp"
#include "test_util.hpp"

using namespace farsim;

namespace {

struct FleetFixture {
    NetworkSpec spec{{8, 16, 4}};
    Dataset train_data, test_data;
    NetworkParams pretrained;
    TrainConfig tc;
    ResilienceTable table;
    double constraint = 0.9;

    FleetFixture() {
        std::tie(train_data, test_data) = synth_clusters(4, 8, 50, 0.4, 123);
        tc.learning_rate = 0.15;
        tc.momentum = 0.9;
        tc.batch_size = 16;
        tc.seed = 5;
        auto pre = train(init_params(spec, 6), train_data, test_data, 12, tc);
        pretrained = std::move(pre.first);

        ProfileConfig pcfg;
        pcfg.fault_rates = {0.0, 0.1, 0.25};
        pcfg.repeats = 3;
        pcfg.max_epochs = 15;
        pcfg.accuracy_target = constraint;
        pcfg.train_cfg = tc;
        pcfg.base_seed = 777;
        table = profile(pretrained, spec, train_data, test_data, {6, 6}, pcfg);
    }
};

}  // namespace

TEST_CASE("generate_fleet produces unique deterministic chips") {
    const ArrayConfig array{8, 8};
    const auto fleet = generate_fleet(array, 100, RateDistribution::uniform(0.0, 0.3), 42);
    REQUIRE(fleet.size() == 100);
    std::set<std::string> ids;
    for (const auto& chip : fleet) {
        ids.insert(chip.chip_id);
        CHECK(chip.fault_map.config() == array);
        CHECK(fault_rate(chip.fault_map) <= 0.3 + 1.0 / 64);  // rounding slack
    }
    CHECK(ids.size() == 100);

    const auto again = generate_fleet(array, 100, RateDistribution::uniform(0.0, 0.3), 42);
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        CHECK(fleet[i].chip_id == again[i].chip_id);
        CHECK(fleet[i].fault_map == again[i].fault_map);
    }
}

TEST_CASE("generate_fleet explicit and degenerate distributions") {
    const ArrayConfig array{8, 8};
    SUBCASE("explicit zero rates give empty maps") {
        const auto fleet =
            generate_fleet(array, 5, RateDistribution::explicit_rates({0, 0, 0, 0, 0}), 1);
        REQUIRE(fleet.size() == 5);
        for (const auto& chip : fleet) CHECK(chip.fault_map.fault_count() == 0);
    }
    SUBCASE("degenerate uniform pins the count") {
        const auto fleet = generate_fleet(array, 6, RateDistribution::uniform(0.05, 0.05), 2);
        for (const auto& chip : fleet)
            CHECK(chip.fault_map.fault_count() == std::llround(0.05 * 64));
    }
    SUBCASE("explicit list length must match the count") {
        CHECK_THROWS_AS(generate_fleet(array, 3, RateDistribution::explicit_rates({0.1}), 1),
                        std::invalid_argument);
    }
    SUBCASE("invalid bounds are rejected") {
        CHECK_THROWS_AS(RateDistribution::uniform(0.4, 0.2), std::invalid_argument);
        CHECK_THROWS_AS(RateDistribution::uniform(-0.1, 0.2), std::invalid_argument);
        CHECK_THROWS_AS(RateDistribution::explicit_rates({1.5}), std::invalid_argument);
    }
}

TEST_CASE("run_policy on a zero-fault fleet spends nothing") {
    const FleetFixture fx;
    const auto fleet =
        generate_fleet({6, 6}, 4, RateDistribution::explicit_rates({0, 0, 0, 0}), 3);
    const FleetReport report =
        run_policy(fx.pretrained, fx.spec, fx.train_data, fx.test_data, fleet,
                   Policy::reduce(Statistic::Max), &fx.table, fx.constraint, fx.tc);
    CHECK(report.total_epochs == 0);
    CHECK(report.num_meeting == 4);
    CHECK(report.num_failed == 0);
    for (const auto& r : report.chips) {
        CHECK(r.budget_epochs == 0);
        CHECK(r.meets_constraint);
    }
}

TEST_CASE("fixed:0 reports the masked no-retrain accuracy") {
    const FleetFixture fx;
    const auto fleet = generate_fleet({6, 6}, 5, RateDistribution::uniform(0.05, 0.2), 9);
    const FleetReport report = run_policy(fx.pretrained, fx.spec, fx.train_data, fx.test_data,
                                          fleet, Policy::fixed(0), nullptr, fx.constraint, fx.tc);
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        const MaskSet masks = derive_maskset(fx.spec, fleet[i].fault_map);
        const double expected = evaluate(apply_mask(fx.pretrained, masks), fx.test_data);
        REQUIRE(report.chips[i].final_accuracy.has_value());
        CHECK(*report.chips[i].final_accuracy == expected);
        CHECK(report.chips[i].meets_constraint == (expected >= fx.constraint));
    }
    CHECK(report.total_epochs == 0);
}

TEST_CASE("run_policy accounting and schedule independence") {
    const FleetFixture fx;
    const auto fleet = generate_fleet({6, 6}, 8, RateDistribution::uniform(0.0, 0.25), 17);

    set_jobs(1);
    const FleetReport a =
        run_policy(fx.pretrained, fx.spec, fx.train_data, fx.test_data, fleet,
                   Policy::reduce(Statistic::Max), &fx.table, fx.constraint, fx.tc);
    set_jobs(4);
    const FleetReport b =
        run_policy(fx.pretrained, fx.spec, fx.train_data, fx.test_data, fleet,
                   Policy::reduce(Statistic::Max), &fx.table, fx.constraint, fx.tc);

    long long total = 0;
    int meeting = 0, failed = 0;
    for (std::size_t i = 0; i < a.chips.size(); ++i) {
        const auto& r = a.chips[i];
        if (r.budget_epochs) total += *r.budget_epochs;
        meeting += r.meets_constraint;
        failed += !r.failed_reason.empty();
        if (r.final_accuracy) CHECK(r.meets_constraint == (*r.final_accuracy >= fx.constraint));
        // identical under different thread counts
        CHECK(r.budget_epochs == b.chips[i].budget_epochs);
        CHECK(r.final_accuracy == b.chips[i].final_accuracy);
    }
    CHECK(a.total_epochs == total);
    CHECK(a.num_meeting == meeting);
    CHECK(a.num_failed == failed);
}

TEST_CASE("chips beyond the profiled range are rejected without training") {
    const FleetFixture fx;
    // 0.5 is far above the profiled max of 0.25
    const auto fleet = generate_fleet({6, 6}, 2, RateDistribution::explicit_rates({0.5, 0.1}), 5);
    const FleetReport report =
        run_policy(fx.pretrained, fx.spec, fx.train_data, fx.test_data, fleet,
                   Policy::reduce(Statistic::Max), &fx.table, fx.constraint, fx.tc);
    CHECK(report.num_failed == 1);
    CHECK(report.chips[0].failed_reason == "RATE_BEYOND_PROFILE");
    CHECK_FALSE(report.chips[0].budget_epochs.has_value());
    CHECK_FALSE(report.chips[0].final_accuracy.has_value());
    CHECK_FALSE(report.chips[0].meets_constraint);
    CHECK(report.chips[1].failed_reason.empty());
}

TEST_CASE("run_policy validates the table") {
    const FleetFixture fx;
    const auto fleet = generate_fleet({6, 6}, 2, RateDistribution::uniform(0.0, 0.1), 7);
    CHECK_THROWS_AS(run_policy(fx.pretrained, fx.spec, fx.train_data, fx.test_data, fleet,
                               Policy::reduce(Statistic::Max), nullptr, fx.constraint, fx.tc),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_policy(fx.pretrained, fx.spec, fx.train_data, fx.test_data, fleet,
                               Policy::reduce(Statistic::Max), &fx.table, 0.95, fx.tc),
                    std::invalid_argument);
    ResilienceTable wrong_array = fx.table;
    wrong_array.array = {5, 5};
    CHECK_THROWS_AS(run_policy(fx.pretrained, fx.spec, fx.train_data, fx.test_data, fleet,
                               Policy::reduce(Statistic::Max), &wrong_array, fx.constraint, fx.tc),
                    std::invalid_argument);
}

TEST_CASE("compare_policies lines up reports") {
    const FleetFixture fx;
    const auto fleet = generate_fleet({6, 6}, 3, RateDistribution::uniform(0.0, 0.2), 31);
    const FleetReport r1 =
        run_policy(fx.pretrained, fx.spec, fx.train_data, fx.test_data, fleet,
                   Policy::reduce(Statistic::Max), &fx.table, fx.constraint, fx.tc);
    const FleetReport r2 = run_policy(fx.pretrained, fx.spec, fx.train_data, fx.test_data, fleet,
                                      Policy::fixed(2), nullptr, fx.constraint, fx.tc);

    SUBCASE("single report echoes its totals") {
        const PolicyComparison cmp = compare_policies({r1});
        REQUIRE(cmp.rows.size() == 1);
        CHECK(cmp.rows[0].policy == "reduce:max");
        CHECK(cmp.rows[0].total_epochs == r1.total_epochs);
        CHECK(cmp.rows[0].num_meeting == r1.num_meeting);
        CHECK(cmp.rows[0].num_failed == r1.num_failed);
    }
    SUBCASE("identical reports give identical rows") {
        const PolicyComparison cmp = compare_policies({r1, r1});
        REQUIRE(cmp.rows.size() == 2);
        CHECK(cmp.rows[0].total_epochs == cmp.rows[1].total_epochs);
        CHECK(cmp.rows[0].num_meeting == cmp.rows[1].num_meeting);
    }
    SUBCASE("mismatched fleets are rejected") {
        FleetReport trimmed = r2;
        trimmed.chips.pop_back();
        CHECK_THROWS_AS(compare_policies({r1, trimmed}), std::invalid_argument);
        FleetReport renamed = r2;
        renamed.chips[0].chip_id = "chip-9999";
        CHECK_THROWS_AS(compare_policies({r1, renamed}), std::invalid_argument);
    }
    SUBCASE("accuracy lists follow the chip order") {
        const PolicyComparison cmp = compare_policies({r1, r2});
        REQUIRE(cmp.accuracies.size() == 2);
        REQUIRE(cmp.accuracies[0].size() == 3);
        CHECK(cmp.accuracies[0][0] == r1.chips[0].final_accuracy);
        CHECK(cmp.accuracies[1][2] == r2.chips[2].final_accuracy);
    }
}

TEST_CASE("max-statistic budgets are at least as robust as min on the seeded fleet") {
    const FleetFixture fx;
    const auto fleet = generate_fleet({6, 6}, 10, RateDistribution::uniform(0.0, 0.25), 61);
    const FleetReport rmin =
        run_policy(fx.pretrained, fx.spec, fx.train_data, fx.test_data, fleet,
                   Policy::reduce(Statistic::Min), &fx.table, fx.constraint, fx.tc);
    const FleetReport rmax =
        run_policy(fx.pretrained, fx.spec, fx.train_data, fx.test_data, fleet,
                   Policy::reduce(Statistic::Max), &fx.table, fx.constraint, fx.tc);
    CHECK(rmax.num_meeting >= rmin.num_meeting);
    CHECK(rmax.total_epochs >= rmin.total_epochs);
}

TEST_CASE("policy names parse and print") {
    CHECK(Policy::reduce(Statistic::Max).name() == "reduce:max");
    CHECK(Policy::fixed(5).name() == "fixed:5");
    CHECK(Policy::parse("reduce:mean").statistic == Statistic::Mean);
    CHECK(Policy::parse("fixed:12").fixed_epochs == 12);
    CHECK_THROWS_AS(Policy::parse("bogus:1"), std::invalid_argument);
    CHECK_THROWS_AS(Policy::parse("fixed:-2"), std::invalid_argument);
    CHECK_THROWS_AS(Policy::parse("reduce"), std::invalid_argument);
}

TEST_CASE("fleet report survives a JSON round trip") {
    const FleetFixture fx;
    const auto fleet = generate_fleet({6, 6}, 3, RateDistribution::explicit_rates({0.5, 0.1, 0.0}), 5);
    const FleetReport report =
        run_policy(fx.pretrained, fx.spec, fx.train_data, fx.test_data, fleet,
                   Policy::reduce(Statistic::Max), &fx.table, fx.constraint, fx.tc);
    const auto j = jsonio::report_to_json(report);
    const FleetReport back = jsonio::report_from_json(j);
    CHECK(back.policy.name() == report.policy.name());
    CHECK(back.total_epochs == report.total_epochs);
    CHECK(back.num_meeting == report.num_meeting);
    CHECK(back.num_failed == report.num_failed);
    REQUIRE(back.chips.size() == report.chips.size());
    for (std::size_t i = 0; i < back.chips.size(); ++i) {
        CHECK(back.chips[i].chip_id == report.chips[i].chip_id);
        CHECK(back.chips[i].fault_rate == report.chips[i].fault_rate);
        CHECK(back.chips[i].budget_epochs == report.chips[i].budget_epochs);
        CHECK(back.chips[i].failed_reason == report.chips[i].failed_reason);
        CHECK(back.chips[i].final_accuracy == report.chips[i].final_accuracy);
        CHECK(back.chips[i].meets_constraint == report.chips[i].meets_constraint);
    }
    CHECK(jsonio::report_to_json(back) == j);
}
