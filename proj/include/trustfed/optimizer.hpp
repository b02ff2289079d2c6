#pragma once

#include <set>
#include <string>
#include <vector>

#include "trustfed/domain.hpp"
#include "trustfed/rng.hpp"

namespace trustfed {

struct Thresholds {
    double st_min_availability = 180.0;
    double max_trust_cutoff = 0.8;
    int max_high_trust_selected = 6;
    double max_movement_cutoff = 3.0;
    int max_high_movement_selected = 8;
    int min_selected = 0; // 0 = no minimum
};

// Everything the deployment decision needs for one round; devices, utilities,
// trust and cluster labels are aligned by index.
struct DeploymentContext {
    std::vector<DeviceProfile> devices;
    std::vector<LearningUtility> utilities;
    std::vector<double> trust;
    std::vector<int> accuracy_clusters;
    std::vector<long> deployed_counts; // optional; empty means all zero
    std::set<int> requested_areas;
    ObjectiveWeights weights;
    Thresholds thresholds;
};

// All five objectives normalized to [0, 1], higher is better.
struct ObjectiveVector {
    double f1 = 0.0; // deployment thrift: 1 - selected/n
    double f2 = 0.0; // mean trust of selected
    double f3 = 0.0; // accuracy-cluster coverage (RR)
    double f4 = 0.0; // area coverage and mobility (R)
    double f5 = 0.0; // requested-area service rate (RT)

    std::array<double, 5> as_array() const { return {f1, f2, f3, f4, f5}; }
};

double compute_RR(const SelectionVector& selection, const std::vector<int>& clusters);
double compute_R(const SelectionVector& selection, const std::vector<int>& areas,
                 const std::vector<double>& movements);
double compute_RT(const SelectionVector& selection, const std::vector<int>& areas,
                  const std::set<int>& requested);

ObjectiveVector evaluate_objectives(const SelectionVector& selection,
                                    const DeploymentContext& ctx);

double scalarize(const ObjectiveVector& f, const ObjectiveWeights& w);

enum class ConstraintKind {
    resource_cpu,
    resource_memory,
    resource_diskspace,
    resource_battery,
    availability,
    trust_cap,
    movement_cap,
    min_selected,
};

const char* to_string(ConstraintKind kind);

struct ConstraintViolation {
    ConstraintKind kind;
    std::string device_id; // empty for population-level caps
};

std::vector<ConstraintViolation> check_constraints(const SelectionVector& selection,
                                                   const DeploymentContext& ctx);

// Per-device feasibility: the container fits and the device stays long enough.
bool device_feasible(const DeploymentContext& ctx, std::size_t i);

struct RepairResult {
    SelectionVector selection;
    bool feasible = false;
};

// One full reparation pass: overloaded devices are swapped for capable
// same-area candidates, low-availability devices for frequent movers, then
// the high-movement and high-trust caps are enforced by swaps. Remaining
// violations flag the result infeasible instead of raising.
RepairResult repair(const SelectionVector& selection, const DeploymentContext& ctx,
                    SeedStream& rng);

// Pareto dominance: a >= b everywhere and a > b somewhere.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

struct ArchiveEntry {
    SelectionVector selection;
    ObjectiveVector objectives;
    double fitness = 0.0;
};

struct GaResult {
    std::vector<ArchiveEntry> pareto;
    SelectionVector chosen;
    ObjectiveVector chosen_objectives;
    double chosen_fitness = 0.0;
    int generations_run = 0;
};

// Multi-objective GA: random init + repair, Pareto archive, binary-tournament
// parents over population + archive, one-point crossover, 1/L bit mutation,
// repair of offspring, truncation survivor selection. Deterministic for a
// given (ctx, params, seed). Throws "no-feasible-solution" when not even the
// greedy seeds can be repaired to feasibility.
GaResult ga_optimize(const DeploymentContext& ctx, const GaParams& params,
                     std::uint64_t seed);

} // namespace trustfed
