#include "trustfed/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "trustfed/rng.hpp"

namespace trustfed {

int location_to_area(int location, int locations, int areas) {
    // first (locations % areas) groups get one extra location
    const int base = locations / areas;
    const int extra = locations % areas;
    const int boundary = extra * (base + 1);
    if (location < boundary) return location / (base + 1);
    return extra + (location - boundary) / base;
}

std::vector<double> record_features(int location, int locations, int areas, int day_of_week,
                                    int hour, double duration, double frequency) {
    const int area = location_to_area(location, locations, areas);
    return {
        areas > 1 ? static_cast<double>(area) / (areas - 1) : 0.0,
        static_cast<double>(day_of_week) / 6.0,
        static_cast<double>(hour) / 23.0,
        std::clamp(duration / 120.0, 0.0, 1.0),
        std::clamp(frequency / 10.0, 0.0, 1.0),
    };
}

namespace {

struct LocationProfile {
    double duration_mean;
    double frequency_mean;
    int peak_hour;
    int preferred_dow;
};

std::vector<LocationProfile> make_location_profiles(const PopulationSpec& spec) {
    std::vector<LocationProfile> profiles(spec.locations);
    for (int l = 0; l < spec.locations; ++l) {
        SeedStream s = SeedStream::derive(
            {spec.seed, SeedStream::hash_part("location"), static_cast<std::uint64_t>(l)});
        profiles[l].duration_mean = 15.0 + 95.0 * s.uniform();
        profiles[l].frequency_mean = 1.0 + 8.0 * s.uniform();
        profiles[l].peak_hour = static_cast<int>(s.uniform_int(24));
        profiles[l].preferred_dow = static_cast<int>(s.uniform_int(7));
    }
    return profiles;
}

struct Archetype {
    const char* name;
    double cpu_lo, cpu_hi;
    double mem_lo, mem_hi;     // gigabytes
    double disk_lo, disk_hi;   // megabytes
    double battery_lo, battery_hi;
    double finish_lo, finish_hi; // seconds
};

constexpr Archetype kArchetypes[] = {
    {"phone", 1.0, 2.0, 2.0, 4.0, 16000.0, 64000.0, 20.0, 100.0, 60.0, 120.0},
    {"tablet", 2.0, 4.0, 4.0, 8.0, 32000.0, 128000.0, 30.0, 100.0, 40.0, 90.0},
    {"laptop", 4.0, 8.0, 8.0, 16.0, 128000.0, 512000.0, 40.0, 100.0, 20.0, 60.0},
};

constexpr double kGiB = 1024.0 * 1024.0 * 1024.0;

std::string client_name(int i) {
    std::ostringstream out;
    out << "c" << (i < 10 ? "0" : "") << i;
    return out.str();
}

} // namespace

GeneratedPopulation generate_population(const PopulationSpec& spec) {
    if (spec.clients < 1 || spec.areas < 1 || spec.locations < spec.areas ||
        spec.min_records < 1 || spec.max_records < spec.min_records || spec.skew <= 0.0 ||
        spec.mover_fraction < 0.0 || spec.mover_fraction > 1.0)
        throw Error("invalid-spec", "population spec out of range");

    GeneratedPopulation pop;
    const auto locations = make_location_profiles(spec);

    // pass 1: devices, movers, movement rates
    std::vector<double> movements(spec.clients);
    for (int i = 0; i < spec.clients; ++i) {
        SeedStream s = SeedStream::derive(
            {spec.seed, SeedStream::hash_part("client"), static_cast<std::uint64_t>(i)});
        const Archetype& arch = kArchetypes[s.uniform_int(3)];
        const bool mover = s.uniform() < spec.mover_fraction;

        DeviceProfile d;
        d.id = client_name(i);
        d.device_type = arch.name;
        d.cpu = s.uniform(arch.cpu_lo, arch.cpu_hi);
        d.memory = s.uniform(arch.mem_lo, arch.mem_hi) * kGiB;
        d.diskspace = s.uniform(arch.disk_lo, arch.disk_hi);
        d.battery = s.uniform(arch.battery_lo, arch.battery_hi);
        d.area = static_cast<int>(s.uniform_int(spec.areas));
        d.avg_movements = mover ? s.uniform(3.0, 6.0) : s.uniform(0.1, 2.0);
        d.availability = mover ? s.uniform(120.0, 1200.0) : s.uniform(400.0, 3600.0);
        d.avg_finish_time = s.uniform(arch.finish_lo, arch.finish_hi);
        movements[i] = d.avg_movements;
        pop.devices.push_back(d);

        LearningUtility u;
        u.cpu_cost = s.uniform(0.4, 1.2);
        u.memory_cost = s.uniform(0.4, 1.5) * kGiB;
        u.battery_cost = s.uniform(3.0, 12.0);
        u.diskspace_cost = s.uniform(100.0, 500.0);
        pop.utilities.push_back(u);
    }

    const double mv_min = *std::min_element(movements.begin(), movements.end());
    const double mv_max = *std::max_element(movements.begin(), movements.end());
    const double mv_span = mv_max > mv_min ? mv_max - mv_min : 1.0;

    // pass 2: datasets; record counts couple to mobility with weight 0.5
    for (int i = 0; i < spec.clients; ++i) {
        SeedStream s = SeedStream::derive(
            {spec.seed, SeedStream::hash_part("data"), static_cast<std::uint64_t>(i)});
        const double mv_norm = (movements[i] - mv_min) / mv_span;
        const double mix = 0.5 * mv_norm + 0.5 * s.uniform();
        const int count = spec.min_records +
                          static_cast<int>(std::lround(mix * (spec.max_records - spec.min_records)));

        // own-area locations carry most of the mass; Dirichlet(skew) over them
        // decides the within-area mixture, with a small uniform leak elsewhere
        std::vector<int> own;
        for (int l = 0; l < spec.locations; ++l)
            if (location_to_area(l, spec.locations, spec.areas) == pop.devices[i].area)
                own.push_back(l);
        std::vector<double> weights(spec.locations, 0.0);
        double own_sum = 0.0;
        for (int l : own) {
            weights[l] = s.gamma(spec.skew);
            own_sum += weights[l];
        }
        const double leak = 0.15;
        for (int l = 0; l < spec.locations; ++l) {
            const double own_part = own_sum > 0.0 ? (1.0 - leak) * weights[l] / own_sum : 0.0;
            weights[l] = own_part + leak / spec.locations;
        }

        ClientDataset ds;
        ds.owner = pop.devices[i].id;
        ds.records.reserve(count);
        for (int r = 0; r < count; ++r) {
            double pick = s.uniform();
            int loc = spec.locations - 1;
            for (int l = 0; l < spec.locations; ++l) {
                pick -= weights[l];
                if (pick <= 0.0) {
                    loc = l;
                    break;
                }
            }
            const LocationProfile& lp = locations[loc];
            const int dow = s.uniform() < 0.6 ? lp.preferred_dow
                                              : static_cast<int>(s.uniform_int(7));
            int hour = lp.peak_hour + static_cast<int>(std::lround(s.normal() * 2.5));
            hour = ((hour % 24) + 24) % 24;
            const double duration = lp.duration_mean * s.uniform(0.7, 1.3);
            const double frequency = lp.frequency_mean * s.uniform(0.7, 1.3);
            ds.records.push_back(
                {record_features(loc, spec.locations, spec.areas, dow, hour, duration, frequency),
                 loc});
        }
        pop.datasets.push_back(std::move(ds));
    }
    return pop;
}

std::vector<ClientDataset> ingest_trace_csv(const std::string& path, int locations, int areas) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw Error("malformed-row", "line 1: missing header");

    struct Row {
        double timestamp;
        Record record;
    };
    std::map<std::string, std::vector<Row>> grouped;
    std::vector<std::string> order; // first-seen client order

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 7)
            throw Error("malformed-row",
                        "line " + std::to_string(line_no) + ": expected 7 fields, got " +
                            std::to_string(fields.size()));
        try {
            const std::string client = fields[0];
            const double timestamp = std::stod(fields[1]);
            const int location = std::stoi(fields[2]);
            const int area = std::stoi(fields[3]);
            const int dow = std::stoi(fields[4]);
            const double duration = std::stod(fields[5]);
            const double frequency = std::stod(fields[6]);
            if (location < 0 || location >= locations)
                throw Error("unknown-location",
                            "line " + std::to_string(line_no) + ": location " + fields[2]);
            if (area < 0 || area >= areas)
                throw Error("unknown-area",
                            "line " + std::to_string(line_no) + ": area " + fields[3]);
            const int hour = static_cast<int>(std::fmod(timestamp / 3600.0, 24.0));
            Row row{timestamp,
                    {record_features(location, locations, areas, dow, hour, duration, frequency),
                     location}};
            if (!grouped.count(client)) order.push_back(client);
            grouped[client].push_back(std::move(row));
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw Error("malformed-row", "line " + std::to_string(line_no) + ": bad number");
        }
    }

    std::vector<ClientDataset> out;
    for (const auto& client : order) {
        auto& rows = grouped[client];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.timestamp < b.timestamp; });
        ClientDataset ds;
        ds.owner = client;
        for (auto& r : rows) ds.records.push_back(std::move(r.record));
        out.push_back(std::move(ds));
    }
    return out;
}

} // namespace trustfed
