#include <doctest.h>

#include "trustfed/domain.hpp"
#include "trustfed/io.hpp"
#include "trustfed/rng.hpp"

using namespace trustfed;

namespace {

DeviceProfile sample_device() {
    DeviceProfile d;
    d.id = "c01";
    d.device_type = "phone";
    d.cpu = 1.5;
    d.memory = 2.0e9;
    d.diskspace = 32000.0;
    d.battery = 80.0;
    d.availability = 600.0;
    d.area = 2;
    d.avg_movements = 1.25;
    d.avg_finish_time = 90.0;
    return d;
}

bool has_violation(const std::vector<Violation>& v, const std::string& kind) {
    for (const auto& x : v)
        if (x.kind == kind) return true;
    return false;
}

} // namespace

TEST_CASE("validate_profile flags out-of-range fields") {
    DeviceProfile d = sample_device();
    LearningUtility u{1.0, 1.0e9, 5.0, 100.0};
    CHECK(validate_profile(d, u).empty());

    d.battery = 101.0;
    CHECK(has_violation(validate_profile(d, u), "battery-range"));

    d = sample_device();
    d.cpu = -1.0;
    CHECK(has_violation(validate_profile(d, u), "negative-resource"));
}

TEST_CASE("validate_population catches duplicate ids") {
    auto a = sample_device();
    auto b = sample_device();
    b.id = "c02";
    LearningUtility u;
    CHECK(validate_population({a, b}, {u, u}).empty());
    b.id = a.id;
    CHECK(has_violation(validate_population({a, b}, {u, u}), "duplicate-id"));
}

TEST_CASE("evicted ids can never rejoin") {
    PopulationRegistry registry;
    CHECK(!registry.admit("c01"));
    CHECK(registry.admit("c01").has_value()); // duplicate
    registry.evict("c01");
    const auto violation = registry.admit("c01");
    REQUIRE(violation.has_value());
    CHECK(violation->kind == "evicted-id");
    CHECK(!registry.admit("c02"));
}

TEST_CASE("objective weights enforce the sum-to-one contract") {
    CHECK_NOTHROW(ObjectiveWeights::make({0.2, 0.2, 0.2, 0.2, 0.2}));
    CHECK_NOTHROW(ObjectiveWeights::make({1.0, 0.0, 0.0, 0.0, 0.0}));
    CHECK_THROWS_AS(ObjectiveWeights::make({0.2, 0.2, 0.2, 0.2, 0.21}), Error);
    CHECK_THROWS_AS(ObjectiveWeights::make({0.5, 0.5, 0.5, -0.5, 0.0}), Error);
    // a 1e-10 drift is within tolerance
    CHECK_NOTHROW(ObjectiveWeights::make({0.2 + 1e-10, 0.2, 0.2, 0.2, 0.2}));
}

TEST_CASE("device profile round-trips through CSV and JSON") {
    SeedStream rng(31337);
    for (int trial = 0; trial < 50; ++trial) {
        DeviceProfile d = sample_device();
        d.id = "c" + std::to_string(trial);
        d.cpu = rng.uniform(0.0, 8.0);
        d.memory = rng.uniform(1e9, 2e10);
        d.battery = rng.uniform(0.0, 100.0);
        d.availability = rng.uniform(0.0, 4000.0);
        d.avg_movements = rng.uniform(0.0, 6.0);
        d.avg_finish_time = rng.uniform(10.0, 200.0);
        d.area = static_cast<int>(rng.uniform_int(6));

        const auto csv_devices = population_from_csv(population_to_csv({d}));
        REQUIRE(csv_devices.size() == 1);
        DeviceProfile via_csv = csv_devices[0];
        via_csv.joined_round = d.joined_round; // not part of the CSV schema
        CHECK(via_csv == d);

        CHECK(device_profile_from_json(device_profile_to_json(d)) == d);
    }
}

TEST_CASE("trust record round-trips through JSON") {
    TrustRecord r;
    r.success_count = 17;
    r.deployed_count = 20;
    r.accuracy_history = {0.41, 0.45, 0.4400000000000001};
    r.past_accuracy = {{3, 0.41}, {4, 0.45}};
    r.previous_neighbors = {"c02", "c07"};
    r.abnormal_counts = {0, 1, 0};
    r.group_common_neighbors = 2;
    r.contradiction_count = 1;
    r.trust = 0.8125;
    CHECK(trust_record_from_json(trust_record_to_json(r)) == r);

    CHECK(r.abnormal_count_window() == 1);
}

TEST_CASE("scenario validation flags bad ranges") {
    ScenarioConfig c;
    CHECK(validate_scenario(c).empty());
    c.dismissal_fraction = 1.5;
    CHECK(!validate_scenario(c).empty());
    c = ScenarioConfig{};
    c.population.skew = 0.0;
    CHECK(!validate_scenario(c).empty());
    c = ScenarioConfig{};
    c.malicious["c01"] = {MaliciousBehavior::Tag::label_flip, 2.0, 1};
    CHECK(!validate_scenario(c).empty());
}
