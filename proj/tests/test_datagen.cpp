#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "trustfed/datagen.hpp"

using namespace trustfed;

TEST_CASE("location to area partitions contiguously and covers every area") {
    std::map<int, int> counts;
    int previous = 0;
    for (int l = 0; l < 20; ++l) {
        const int a = location_to_area(l, 20, 6);
        CHECK(a >= previous); // contiguous, non-decreasing
        CHECK(a < 6);
        previous = a;
        ++counts[a];
    }
    CHECK(counts.size() == 6);
    for (const auto& [area, count] : counts) CHECK(std::abs(count - 3) <= 1); // nearly equal
}

TEST_CASE("default spec yields 50 clients with record counts in range") {
    PopulationSpec spec;
    spec.seed = 7;
    const GeneratedPopulation pop = generate_population(spec);
    CHECK(pop.devices.size() == 50);
    CHECK(pop.utilities.size() == 50);
    CHECK(pop.datasets.size() == 50);
    for (const auto& ds : pop.datasets) {
        CHECK(ds.records.size() >= 200);
        CHECK(ds.records.size() <= 1500);
        for (const auto& r : ds.records) {
            CHECK(r.label >= 0);
            CHECK(r.label < 20);
            REQUIRE(r.features.size() == kRecordFeatureDim);
            // area feature matches the location->area map
            const int area = location_to_area(r.label, 20, 6);
            CHECK(r.features[0] == doctest::Approx(area / 5.0));
        }
    }
    CHECK(validate_population(pop.devices, pop.utilities, spec.areas).empty());
}

TEST_CASE("generation is deterministic in the seed") {
    PopulationSpec spec;
    spec.seed = 1234;
    spec.clients = 12;
    const GeneratedPopulation a = generate_population(spec);
    const GeneratedPopulation b = generate_population(spec);
    REQUIRE(a.devices.size() == b.devices.size());
    for (std::size_t i = 0; i < a.devices.size(); ++i) {
        CHECK(a.devices[i] == b.devices[i]);
        CHECK(a.datasets[i].records == b.datasets[i].records);
    }

    spec.seed = 1235;
    const GeneratedPopulation c = generate_population(spec);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.devices.size() && !any_difference; ++i)
        any_difference = !(a.devices[i] == c.devices[i]);
    CHECK(any_difference);
}

TEST_CASE("tiny skew concentrates labels onto a few values") {
    PopulationSpec spec;
    spec.seed = 21;
    spec.skew = 0.01;
    const GeneratedPopulation pop = generate_population(spec);
    for (const auto& ds : pop.datasets) {
        std::map<int, long> freq;
        for (const auto& r : ds.records) ++freq[r.label];
        std::vector<long> counts;
        for (const auto& [label, count] : freq) counts.push_back(count);
        std::sort(counts.rbegin(), counts.rend());
        long top3 = 0;
        for (std::size_t i = 0; i < counts.size() && i < 3; ++i) top3 += counts[i];
        CHECK(static_cast<double>(top3) / ds.records.size() >= 0.8);
    }
}

TEST_CASE("record volume correlates with mobility") {
    PopulationSpec spec;
    spec.seed = 99;
    const GeneratedPopulation pop = generate_population(spec);
    std::vector<double> mv, rc;
    for (std::size_t i = 0; i < pop.devices.size(); ++i) {
        mv.push_back(pop.devices[i].avg_movements);
        rc.push_back(static_cast<double>(pop.datasets[i].records.size()));
    }
    const auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / v.size();
    };
    const double mu_m = mean(mv), mu_r = mean(rc);
    double cov = 0.0, var_m = 0.0, var_r = 0.0;
    for (std::size_t i = 0; i < mv.size(); ++i) {
        cov += (mv[i] - mu_m) * (rc[i] - mu_r);
        var_m += (mv[i] - mu_m) * (mv[i] - mu_m);
        var_r += (rc[i] - mu_r) * (rc[i] - mu_r);
    }
    const double pearson = cov / std::sqrt(var_m * var_r);
    CHECK(pearson >= 0.5);
}

TEST_CASE("invalid specs are rejected") {
    PopulationSpec spec;
    spec.skew = 0.0;
    CHECK_THROWS_AS(generate_population(spec), Error);
    spec = PopulationSpec{};
    spec.locations = 3;
    spec.areas = 6;
    CHECK_THROWS_AS(generate_population(spec), Error);
}

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

} // namespace

TEST_CASE("trace CSV ingestion") {
    const std::string header = "client_id,timestamp,location,area,day_of_week,duration,frequency\n";

    SUBCASE("well-formed rows group by client") {
        const std::string path = write_temp(
            "tf_ok.csv", header + "c01,7200,3,1,2,45.5,3.0\nc01,3600,5,1,4,30.0,2.0\n");
        const auto datasets = ingest_trace_csv(path, 20, 6);
        REQUIRE(datasets.size() == 1);
        CHECK(datasets[0].owner == "c01");
        REQUIRE(datasets[0].records.size() == 2);
        CHECK(datasets[0].records[0].label == 5); // sorted by timestamp
        CHECK(datasets[0].records[1].label == 3);
    }

    SUBCASE("location out of range names the line") {
        const std::string path =
            write_temp("tf_badloc.csv", header + "c01,3600,3,1,2,45.5,3.0\nc01,7200,25,1,2,1,1\n");
        try {
            ingest_trace_csv(path, 20, 6);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == "unknown-location");
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
    }

    SUBCASE("malformed row names the line") {
        const std::string path = write_temp("tf_badrow.csv", header + "c01,oops,3,1,2,45.5,3.0\n");
        try {
            ingest_trace_csv(path, 20, 6);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == "malformed-row");
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }

    SUBCASE("empty file with header gives an empty sequence") {
        const std::string path = write_temp("tf_empty.csv", header);
        CHECK(ingest_trace_csv(path, 20, 6).empty());
    }
}
