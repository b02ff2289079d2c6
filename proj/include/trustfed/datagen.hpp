#pragma once

#include <string>
#include <vector>

#include "trustfed/domain.hpp"
#include "trustfed/model.hpp"

namespace trustfed {

struct GeneratedPopulation {
    std::vector<DeviceProfile> devices;
    std::vector<LearningUtility> utilities;
    std::vector<ClientDataset> datasets;
};

// Contiguous partition of locations into nearly equal area groups.
int location_to_area(int location, int locations, int areas);

// Record feature vector: [area, day-of-week, hour, visit duration, visit
// frequency], each scaled to roughly [0, 1]. The label is the location.
std::vector<double> record_features(int location, int locations, int areas, int day_of_week,
                                    int hour, double duration, double frequency);

constexpr int kRecordFeatureDim = 5;

// Synthetic population shaped like the experimental setup: archetyped device
// resources, a seeded mover subset, per-client non-IID label mixtures
// concentrated on own-area locations, and record counts coupled to mobility
// (mixing weight 0.5, which keeps the count/movement correlation above 0.5).
GeneratedPopulation generate_population(const PopulationSpec& spec);

// Reads externally supplied traces in the documented schema:
//   client_id,timestamp,location,area,day_of_week,duration,frequency
// Rows are grouped per client and sorted by timestamp; labels come from the
// location column. Errors name the offending line.
std::vector<ClientDataset> ingest_trace_csv(const std::string& path, int locations = 20,
                                            int areas = 6);

} // namespace trustfed
