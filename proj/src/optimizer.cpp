#include "trustfed/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trustfed {

double compute_RR(const SelectionVector& selection, const std::vector<int>& clusters) {
    std::set<int> all(clusters.begin(), clusters.end());
    if (all.empty()) return 0.0;
    std::set<int> picked;
    for (std::size_t i = 0; i < selection.size(); ++i)
        if (selection.selected(i)) picked.insert(clusters[i]);
    if (picked.empty()) return 0.0;
    return static_cast<double>(picked.size()) / static_cast<double>(all.size());
}

double compute_R(const SelectionVector& selection, const std::vector<int>& areas,
                 const std::vector<double>& movements) {
    std::set<int> all_areas(areas.begin(), areas.end());
    double max_movement = 0.0;
    for (double m : movements) max_movement = std::max(max_movement, m);

    std::set<int> picked_areas;
    double movement_sum = 0.0;
    long picked = 0;
    for (std::size_t i = 0; i < selection.size(); ++i) {
        if (!selection.selected(i)) continue;
        picked_areas.insert(areas[i]);
        movement_sum += movements[i];
        ++picked;
    }
    if (picked == 0) return 0.0;
    const double area_rate = all_areas.empty()
                                 ? 0.0
                                 : static_cast<double>(picked_areas.size()) / all_areas.size();
    const double mobility_rate =
        max_movement > 0.0 ? (movement_sum / picked) / max_movement : 0.0;
    return 0.5 * area_rate + 0.5 * mobility_rate;
}

double compute_RT(const SelectionVector& selection, const std::vector<int>& areas,
                  const std::set<int>& requested) {
    if (requested.empty()) return 1.0; // nothing asked for, nothing to miss
    long picked = 0, in_requested = 0;
    for (std::size_t i = 0; i < selection.size(); ++i) {
        if (!selection.selected(i)) continue;
        ++picked;
        if (requested.count(areas[i])) ++in_requested;
    }
    if (picked == 0) return 0.0;
    return static_cast<double>(in_requested) / static_cast<double>(picked);
}

namespace {

std::vector<int> device_areas(const DeploymentContext& ctx) {
    std::vector<int> areas;
    areas.reserve(ctx.devices.size());
    for (const auto& d : ctx.devices) areas.push_back(d.area);
    return areas;
}

std::vector<double> device_movements(const DeploymentContext& ctx) {
    std::vector<double> m;
    m.reserve(ctx.devices.size());
    for (const auto& d : ctx.devices) m.push_back(d.avg_movements);
    return m;
}

} // namespace

ObjectiveVector evaluate_objectives(const SelectionVector& selection,
                                    const DeploymentContext& ctx) {
    ObjectiveVector f;
    const std::size_t n = ctx.devices.size();
    const long picked = selection.count();
    f.f1 = n == 0 ? 1.0 : 1.0 - static_cast<double>(picked) / static_cast<double>(n);
    double trust_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (selection.selected(i)) trust_sum += ctx.trust[i];
    f.f2 = picked > 0 ? trust_sum / picked : 0.0;
    f.f3 = compute_RR(selection, ctx.accuracy_clusters);
    f.f4 = compute_R(selection, device_areas(ctx), device_movements(ctx));
    f.f5 = compute_RT(selection, device_areas(ctx), ctx.requested_areas);
    return f;
}

double scalarize(const ObjectiveVector& f, const ObjectiveWeights& w) {
    const auto v = f.as_array();
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
    return s;
}

const char* to_string(ConstraintKind kind) {
    switch (kind) {
        case ConstraintKind::resource_cpu: return "resource-cpu";
        case ConstraintKind::resource_memory: return "resource-memory";
        case ConstraintKind::resource_diskspace: return "resource-diskspace";
        case ConstraintKind::resource_battery: return "resource-battery";
        case ConstraintKind::availability: return "availability";
        case ConstraintKind::trust_cap: return "trust-cap";
        case ConstraintKind::movement_cap: return "movement-cap";
        case ConstraintKind::min_selected: return "min-selected";
    }
    return "?";
}

bool device_feasible(const DeploymentContext& ctx, std::size_t i) {
    const DeviceProfile& d = ctx.devices[i];
    const LearningUtility& u = ctx.utilities[i];
    return u.cpu_cost <= d.cpu && u.memory_cost <= d.memory &&
           u.diskspace_cost <= d.diskspace && u.battery_cost <= d.battery &&
           d.availability >= ctx.thresholds.st_min_availability;
}

namespace {

bool high_trust(const DeploymentContext& ctx, std::size_t i) {
    return ctx.trust[i] >= ctx.thresholds.max_trust_cutoff;
}

bool high_mover(const DeploymentContext& ctx, std::size_t i) {
    return ctx.devices[i].avg_movements >= ctx.thresholds.max_movement_cutoff;
}

} // namespace

std::vector<ConstraintViolation> check_constraints(const SelectionVector& selection,
                                                   const DeploymentContext& ctx) {
    std::vector<ConstraintViolation> out;
    long high_trust_count = 0, high_move_count = 0, picked = 0;
    for (std::size_t i = 0; i < selection.size(); ++i) {
        if (!selection.selected(i)) continue;
        ++picked;
        const DeviceProfile& d = ctx.devices[i];
        const LearningUtility& u = ctx.utilities[i];
        if (u.cpu_cost > d.cpu) out.push_back({ConstraintKind::resource_cpu, d.id});
        if (u.memory_cost > d.memory) out.push_back({ConstraintKind::resource_memory, d.id});
        if (u.diskspace_cost > d.diskspace)
            out.push_back({ConstraintKind::resource_diskspace, d.id});
        if (u.battery_cost > d.battery) out.push_back({ConstraintKind::resource_battery, d.id});
        if (d.availability < ctx.thresholds.st_min_availability)
            out.push_back({ConstraintKind::availability, d.id});
        if (high_trust(ctx, i)) ++high_trust_count;
        if (high_mover(ctx, i)) ++high_move_count;
    }
    if (high_trust_count > ctx.thresholds.max_high_trust_selected)
        out.push_back({ConstraintKind::trust_cap, ""});
    if (high_move_count > ctx.thresholds.max_high_movement_selected)
        out.push_back({ConstraintKind::movement_cap, ""});
    if (ctx.thresholds.min_selected > 0 && picked < ctx.thresholds.min_selected)
        out.push_back({ConstraintKind::min_selected, ""});
    return out;
}

namespace {

// Best unselected candidate under `accept`, ordered by `score` descending;
// exact score ties are broken by the rng stream.
template <typename Accept, typename Score>
int pick_candidate(const SelectionVector& sel, Accept accept, Score score, SeedStream& rng) {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    int ties = 0;
    for (std::size_t j = 0; j < sel.size(); ++j) {
        if (sel.selected(j) || !accept(j)) continue;
        const double s = score(j);
        if (s > best_score) {
            best = static_cast<int>(j);
            best_score = s;
            ties = 1;
        } else if (s == best_score) {
            ++ties;
            if (rng.uniform_int(ties) == 0) best = static_cast<int>(j);
        }
    }
    return best;
}

} // namespace

RepairResult repair(const SelectionVector& selection, const DeploymentContext& ctx,
                    SeedStream& rng) {
    SelectionVector sel = selection;
    const Thresholds& th = ctx.thresholds;

    // pass 1: per-device problems, in index order
    for (std::size_t i = 0; i < sel.size(); ++i) {
        if (!sel.selected(i)) continue;
        const DeviceProfile& d = ctx.devices[i];
        const LearningUtility& u = ctx.utilities[i];
        const bool overloaded = u.cpu_cost > d.cpu || u.memory_cost > d.memory ||
                                u.diskspace_cost > d.diskspace || u.battery_cost > d.battery;
        if (overloaded) {
            sel.bits[i] = 0;
            const int cand = pick_candidate(
                sel,
                [&](std::size_t j) { return ctx.devices[j].area == d.area && device_feasible(ctx, j); },
                [&](std::size_t j) { return ctx.trust[j]; }, rng);
            if (cand >= 0) sel.bits[cand] = 1;
        } else if (d.availability < th.st_min_availability) {
            sel.bits[i] = 0;
            const int cand = pick_candidate(
                sel, [&](std::size_t j) { return device_feasible(ctx, j); },
                [&](std::size_t j) { return ctx.devices[j].avg_movements; }, rng);
            if (cand >= 0) sel.bits[cand] = 1;
        }
    }

    // pass 2: high-movement cap, swap movers out for steadier devices
    auto count_if_selected = [&](auto pred) {
        long c = 0;
        for (std::size_t i = 0; i < sel.size(); ++i)
            if (sel.selected(i) && pred(i)) ++c;
        return c;
    };
    while (count_if_selected([&](std::size_t i) { return high_mover(ctx, i); }) >
           th.max_high_movement_selected) {
        int victim = -1;
        double victim_trust = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < sel.size(); ++i) {
            if (sel.selected(i) && high_mover(ctx, i) && ctx.trust[i] < victim_trust) {
                victim = static_cast<int>(i);
                victim_trust = ctx.trust[i];
            }
        }
        sel.bits[victim] = 0;
        const int cand = pick_candidate(
            sel,
            [&](std::size_t j) { return !high_mover(ctx, j) && device_feasible(ctx, j); },
            [&](std::size_t j) { return ctx.trust[j]; }, rng);
        if (cand >= 0) sel.bits[cand] = 1;
    }

    // pass 3: high-trust cap, swap the weakest capped member for the best
    // sub-cutoff candidate
    while (count_if_selected([&](std::size_t i) { return high_trust(ctx, i); }) >
           th.max_high_trust_selected) {
        int victim = -1;
        double victim_trust = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < sel.size(); ++i) {
            if (sel.selected(i) && high_trust(ctx, i) && ctx.trust[i] < victim_trust) {
                victim = static_cast<int>(i);
                victim_trust = ctx.trust[i];
            }
        }
        sel.bits[victim] = 0;
        const bool movers_capped =
            count_if_selected([&](std::size_t i) { return high_mover(ctx, i); }) >=
            th.max_high_movement_selected;
        const int cand = pick_candidate(
            sel,
            [&](std::size_t j) {
                return !high_trust(ctx, j) && device_feasible(ctx, j) &&
                       !(movers_capped && high_mover(ctx, j));
            },
            [&](std::size_t j) { return ctx.trust[j]; }, rng);
        if (cand >= 0) sel.bits[cand] = 1;
    }

    // pass 4: optional minimum-selection count
    if (th.min_selected > 0) {
        while (sel.count() < th.min_selected) {
            const bool movers_capped =
                count_if_selected([&](std::size_t i) { return high_mover(ctx, i); }) >=
                th.max_high_movement_selected;
            const bool trusted_capped =
                count_if_selected([&](std::size_t i) { return high_trust(ctx, i); }) >=
                th.max_high_trust_selected;
            const int cand = pick_candidate(
                sel,
                [&](std::size_t j) {
                    return device_feasible(ctx, j) && !(movers_capped && high_mover(ctx, j)) &&
                           !(trusted_capped && high_trust(ctx, j));
                },
                [&](std::size_t j) { return ctx.trust[j]; }, rng);
            if (cand < 0) break;
            sel.bits[cand] = 1;
        }
    }

    return {sel, check_constraints(sel, ctx).empty()};
}

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
    const auto va = a.as_array();
    const auto vb = b.as_array();
    bool strictly_better = false;
    for (std::size_t i = 0; i < va.size(); ++i) {
        if (va[i] < vb[i]) return false;
        if (va[i] > vb[i]) strictly_better = true;
    }
    return strictly_better;
}

namespace {

struct Individual {
    SelectionVector selection;
    ObjectiveVector objectives;
    double fitness = 0.0;
    bool feasible = false;
};

Individual make_individual(SelectionVector sel, bool feasible, const DeploymentContext& ctx) {
    Individual ind;
    ind.objectives = evaluate_objectives(sel, ctx);
    ind.fitness = scalarize(ind.objectives, ctx.weights);
    if (!feasible) ind.fitness -= 1.0; // infeasible survivors lose every tie
    ind.feasible = feasible;
    ind.selection = std::move(sel);
    return ind;
}

// ordering used for survivor truncation and the final choice:
// fitness desc, then fewer selected, then lexicographically smaller bits
bool better(const Individual& a, const Individual& b) {
    if (a.fitness != b.fitness) return a.fitness > b.fitness;
    const long ca = a.selection.count(), cb = b.selection.count();
    if (ca != cb) return ca < cb;
    return a.selection.bits < b.selection.bits;
}

bool archive_insert(std::vector<ArchiveEntry>& archive, const Individual& ind) {
    for (const auto& e : archive) {
        if (e.selection == ind.selection) return false;
        if (dominates(e.objectives, ind.objectives)) return false;
    }
    std::erase_if(archive, [&](const ArchiveEntry& e) {
        return dominates(ind.objectives, e.objectives);
    });
    archive.push_back({ind.selection, ind.objectives, ind.fitness});
    return true;
}

} // namespace

GaResult ga_optimize(const DeploymentContext& ctx, const GaParams& params,
                     std::uint64_t seed) {
    const std::size_t n = ctx.devices.size();
    const double mutation_prob = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;

    // step 1: does the problem have a solution at all?
    SeedStream seed_rng = SeedStream::derive({seed, SeedStream::hash_part("seeds")});
    std::vector<SelectionVector> greedy = {SelectionVector::zeros(n), SelectionVector::ones(n)};
    Individual feasible_seed;
    bool has_solution = false;
    for (auto& g : greedy) {
        const RepairResult r = repair(g, ctx, seed_rng);
        if (r.feasible) {
            feasible_seed = make_individual(r.selection, true, ctx);
            has_solution = true;
            break;
        }
    }
    if (!has_solution)
        throw Error("no-feasible-solution", "no repairable deployment exists");

    std::vector<Individual> population;
    population.reserve(params.population_size);
    population.push_back(feasible_seed);
    for (int i = 1; i < params.population_size; ++i) {
        SeedStream s = SeedStream::derive({seed, 0, static_cast<std::uint64_t>(i)});
        SelectionVector sel = SelectionVector::zeros(n);
        for (std::size_t j = 0; j < n; ++j) sel.bits[j] = s.bernoulli(0.5) ? 1 : 0;
        const RepairResult r = repair(sel, ctx, s);
        population.push_back(make_individual(r.selection, r.feasible, ctx));
    }

    std::vector<ArchiveEntry> archive;
    for (const auto& ind : population)
        if (ind.feasible) archive_insert(archive, ind);

    int stagnant = 0;
    int generations_run = 0;
    for (int gen = 1; gen <= params.generations; ++gen) {
        generations_run = gen;

        // parents come from the population plus the archive as of generation
        // start; the archive is upgraded only after the offspring batch
        auto fitness_at = [&](std::size_t idx) {
            return idx < population.size() ? population[idx].fitness
                                           : archive[idx - population.size()].fitness;
        };
        auto selection_at = [&](std::size_t idx) -> const SelectionVector& {
            return idx < population.size() ? population[idx].selection
                                           : archive[idx - population.size()].selection;
        };
        const std::size_t pool = population.size() + archive.size();
        auto tournament = [&](SeedStream& s) {
            const std::size_t a = s.uniform_int(pool);
            const std::size_t b = s.uniform_int(pool);
            return fitness_at(a) >= fitness_at(b) ? a : b;
        };

        std::vector<Individual> offspring;
        offspring.reserve(params.population_size);
        for (int i = 0; i < params.population_size; ++i) {
            SeedStream s = SeedStream::derive(
                {seed, static_cast<std::uint64_t>(gen), static_cast<std::uint64_t>(i)});
            SelectionVector child = selection_at(tournament(s));
            const SelectionVector& p2 = selection_at(tournament(s));
            if (n > 1 && s.uniform() < params.crossover_prob) {
                const std::size_t cut = 1 + s.uniform_int(n - 1);
                for (std::size_t j = cut; j < n; ++j) child.bits[j] = p2.bits[j];
            }
            for (std::size_t j = 0; j < n; ++j)
                if (s.uniform() < mutation_prob) child.bits[j] ^= 1;
            const RepairResult r = repair(child, ctx, s);
            offspring.push_back(make_individual(r.selection, r.feasible, ctx));
        }

        bool archive_changed = false;
        for (const auto& ind : offspring)
            if (ind.feasible && archive_insert(archive, ind)) archive_changed = true;

        if (params.survivor_policy == "generational") {
            population = std::move(offspring);
        } else {
            population.insert(population.end(), offspring.begin(), offspring.end());
            std::sort(population.begin(), population.end(), better);
            population.resize(params.population_size);
        }

        stagnant = archive_changed ? 0 : stagnant + 1;
        if (stagnant >= params.patience) break;
    }

    GaResult result;
    result.pareto = archive;
    result.generations_run = generations_run;
    const ArchiveEntry* best = nullptr;
    for (const auto& e : archive) {
        if (!best) {
            best = &e;
            continue;
        }
        if (e.fitness > best->fitness ||
            (e.fitness == best->fitness && e.selection.count() < best->selection.count()) ||
            (e.fitness == best->fitness && e.selection.count() == best->selection.count() &&
             e.selection.bits < best->selection.bits)) {
            best = &e;
        }
    }
    result.chosen = best->selection;
    result.chosen_objectives = best->objectives;
    result.chosen_fitness = best->fitness;
    return result;
}

} // namespace trustfed
