#pragma once

// 2D mobile-robot journey simulator: fixed-step kinematic integration of the
// robot/collider encounter, ground-truth labelling, dataset generation with a
// surrogate perception, and the controller-validation protocol (pre-bucketed
// collision / no-collision encounter pools drawn per the model's weights).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "markov.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "uncertainty.hpp"

namespace decsynth::sim {

struct SimConfig {
    double alpha = 0.5;             // steering gain
    double goal_x = 0.0, goal_y = 10.0;
    double goal_eps = 0.05;
    double x_lim = 10.0, y_lim = 10.0;
    double s_lim = 2.0;             // collider max speed
    double theta_dot_lim = std::numbers::pi / 4;
    double dt = 0.01;
    double robot_speed = 1.0;
    double slow_speed = 0.1;        // while correcting heading
    double heading_tol = std::numbers::pi / 36;
    double collision_drag = 0.1;    // speed factor while bodies overlap
    double max_sim_time = 100.0;
    uint64_t max_label_attempts = 1'000'000;
    uint64_t seed = 0;
};

// collider setup relative to the robot's start pose
struct EncounterState {
    double x_diff = 0.0;
    double y_diff = 0.0;
    double s = 0.0;
    double theta = 0.0;
    double theta_dot = 0.0;
};

struct EncounterOutcome {
    bool collision = false;
    double journey_time = 0.0;
    bool timed_out = false;
};

namespace detail {
inline double wrap_angle(double a) {
    while (a > std::numbers::pi) a -= 2 * std::numbers::pi;
    while (a < -std::numbers::pi) a += 2 * std::numbers::pi;
    return a;
}
} // namespace detail

// Fixed-step integration of robot and collider. Bodies are circles of radius
// 0.5; a collision is any step with centre distance < 1. While overlapping
// the robot grinds past at collision_drag of its speed, which is what makes
// collisions cost time downstream.
inline EncounterOutcome simulate_encounter(const SimConfig& cfg, const EncounterState& collider,
                                           bool collider_present = true) {
    double rx = 0.0, ry = 0.0;
    double heading = std::numbers::pi / 2;
    double cx = collider.x_diff, cy = collider.y_diff, ctheta = collider.theta;
    EncounterOutcome out;
    double t = 0.0;
    auto overlapping = [&]() {
        if (!collider_present) return false;
        double dx = rx - cx, dy = ry - cy;
        return dx * dx + dy * dy < 1.0;
    };
    if (overlapping()) out.collision = true;
    for (;;) {
        if (std::fabs(rx - cfg.goal_x) <= cfg.goal_eps && std::fabs(ry - cfg.goal_y) <= cfg.goal_eps) {
            out.journey_time = t;
            return out;
        }
        if (t >= cfg.max_sim_time) {
            out.journey_time = t;
            out.timed_out = true;
            return out;
        }
        // steer towards the goal in the robot's current frame
        double gx = cfg.goal_x - rx, gy = cfg.goal_y - ry;
        double vx = std::cos(heading), vy = std::sin(heading);
        double err = std::atan2(vx * gy - vy * gx, vx * gx + vy * gy);
        double omega = cfg.alpha * err;
        double speed = std::fabs(err) > cfg.heading_tol ? cfg.slow_speed : cfg.robot_speed;
        if (overlapping()) speed *= cfg.collision_drag;
        rx += std::cos(heading) * speed * cfg.dt;
        ry += std::sin(heading) * speed * cfg.dt;
        heading = detail::wrap_angle(heading + omega * cfg.dt);
        if (collider_present) {
            ctheta = detail::wrap_angle(ctheta + collider.theta_dot * cfg.dt);
            cx += collider.s * std::cos(ctheta) * cfg.dt;
            cy += collider.s * std::sin(ctheta) * cfg.dt;
        }
        t += cfg.dt;
        if (overlapping()) out.collision = true;
    }
}

inline double straight_travel_time(const SimConfig& cfg) {
    auto out = simulate_encounter(cfg, EncounterState{}, false);
    if (out.timed_out) fail("Timeout", "goal unreachable without a collider; check the configuration");
    return out.journey_time;
}

// ground truth: the class the encounter has when the robot commits to going
inline int label_oracle(const SimConfig& cfg, const EncounterState& collider) {
    auto out = simulate_encounter(cfg, collider);
    if (out.timed_out && !out.collision)
        fail("Timeout", "encounter simulation exceeded " + fmt_display(cfg.max_sim_time) + "s");
    return out.collision ? 2 : 1;
}

inline EncounterState sample_encounter(const SimConfig& cfg, Rng& rng) {
    EncounterState e;
    e.x_diff = rng.uniform(-cfg.x_lim, cfg.x_lim);
    e.y_diff = rng.uniform(0.0, cfg.y_lim);
    e.theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
    e.s = rng.uniform(0.0, cfg.s_lim);
    e.theta_dot = rng.uniform(-cfg.theta_dot_lim, cfg.theta_dot_lim);
    return e;
}

// Stochastic stand-in for the DNN plus online verifiers: emits (khat, v)
// with exactly the tensor's conditional probabilities.
struct SurrogatePerception {
    ConfusionTensor tensor;

    std::pair<int, uint32_t> sample(int true_class, Rng& rng) const {
        double u = rng.uniform();
        double acc = 0.0;
        int last_k = 1;
        uint32_t last_v = 0;
        for (int khat = 1; khat <= tensor.K(); ++khat)
            for (uint32_t v = 0; v < tensor.buckets(); ++v) {
                double p = tensor.probability(true_class, khat, v).value();
                if (p == 0.0) continue;
                acc += p;
                last_k = khat;
                last_v = v;
                if (u < acc) return {khat, v};
            }
        return {last_k, last_v};
    }
};

struct Dataset {
    uint32_t n_verifs = 0;
    std::vector<VerifiedSample> samples;                    // surrogate perception rows
    std::vector<std::pair<EncounterState, int>> encounters; // setup + true class
    uint64_t timeouts = 0;
};

inline Dataset generate_dataset(const SimConfig& cfg, size_t n_per_class,
                                const SurrogatePerception* surrogate = nullptr) {
    Dataset ds;
    ds.n_verifs = surrogate ? surrogate->tensor.n() : 0;
    Rng rng(cfg.seed);
    size_t have[3] = {0, 0, 0};
    uint64_t attempts = 0;
    while (have[1] < n_per_class || have[2] < n_per_class) {
        if (++attempts > cfg.max_label_attempts)
            fail("SamplingStall", "class balance not reached within " +
                                      std::to_string(cfg.max_label_attempts) + " attempts");
        auto e = sample_encounter(cfg, rng);
        auto outcome = simulate_encounter(cfg, e);
        if (outcome.timed_out && !outcome.collision) {
            ++ds.timeouts;
            continue;
        }
        int label = outcome.collision ? 2 : 1;
        if (have[label] >= n_per_class) continue;
        ++have[label];
        ds.encounters.emplace_back(e, label);
        if (surrogate) {
            auto [khat, v] = surrogate->sample(label, rng);
            ds.samples.push_back({label, khat, v});
        }
    }
    return ds;
}

// normalized dataset rows: y_diff and s in [0,1], the rest in [-1,1]
inline void write_encounters_csv(std::ostream& os, const SimConfig& cfg, const Dataset& ds) {
    os << "x_diff,y_diff,s,theta,theta_dot,label\n";
    for (const auto& [e, label] : ds.encounters) {
        os << fmt_double(e.x_diff / cfg.x_lim) << ',' << fmt_double(e.y_diff / cfg.y_lim) << ','
           << fmt_double(e.s / cfg.s_lim) << ',' << fmt_double(e.theta / std::numbers::pi) << ','
           << fmt_double(e.theta_dot / cfg.theta_dot_lim) << ',' << label << '\n';
    }
}

// ---------------------------------------------------------------------------
// controller validation against pre-bucketed encounter pools

struct PoolEntry {
    EncounterState state;
    double go_time = 0.0;
};

struct EncounterPools {
    std::vector<PoolEntry> clear;     // class 1
    std::vector<PoolEntry> collision; // class 2
    double p_occ_hat = 0.0;           // empirical on-collision-course rate
    double straight_time = 0.0;
    double mean_clear_time = 0.0;
    double mean_collision_time = 0.0;
    uint64_t timeouts = 0;
};

inline EncounterPools build_pools(const SimConfig& cfg, size_t per_class) {
    EncounterPools pools;
    pools.straight_time = straight_travel_time(cfg);
    Rng rng(derive_seed(cfg.seed, 0xBADCAFE));
    uint64_t attempts = 0, collision_seen = 0, labelled = 0;
    double clear_sum = 0.0, collision_sum = 0.0;
    while (pools.clear.size() < per_class || pools.collision.size() < per_class) {
        if (++attempts > cfg.max_label_attempts)
            fail("SamplingStall", "pool balance not reached within " +
                                      std::to_string(cfg.max_label_attempts) + " attempts");
        auto e = sample_encounter(cfg, rng);
        auto outcome = simulate_encounter(cfg, e);
        if (outcome.timed_out && !outcome.collision) {
            ++pools.timeouts;
            continue;
        }
        ++labelled;
        if (outcome.collision) ++collision_seen;
        if (outcome.collision && pools.collision.size() < per_class) {
            pools.collision.push_back({e, outcome.journey_time});
            collision_sum += outcome.journey_time;
        } else if (!outcome.collision && pools.clear.size() < per_class) {
            pools.clear.push_back({e, outcome.journey_time});
            clear_sum += outcome.journey_time;
        }
    }
    pools.p_occ_hat = static_cast<double>(collision_seen) / static_cast<double>(labelled);
    pools.mean_clear_time = clear_sum / static_cast<double>(pools.clear.size());
    pools.mean_collision_time = collision_sum / static_cast<double>(pools.collision.size());
    return pools;
}

struct ValidationResult {
    uint64_t journeys = 0;
    uint64_t waypoints_per_journey = 0;
    double mean_time = 0.0;          // per journey
    double collision_rate = 0.0;     // journeys with at least one collision
    double time_stderr = 0.0;
    double rate_stderr = 0.0;
    double mean_time_per_waypoint = 0.0;
    double collision_free_per_waypoint = 0.0; // per-hop collision-free frequency
    std::vector<double> journey_times;
    std::vector<uint32_t> journey_collisions;
};

// Decision table (khat, v) -> wait probability, extracted from a
// DNN-perception assignment whose decision targets are the boolean wait flag.
struct WaitPolicy {
    int K = 0;
    uint32_t buckets = 1;
    std::vector<double> wait; // [khat-1] * buckets + v

    static WaitPolicy from_assignment(const ControllerAssignment& assignment, int K, uint32_t n) {
        WaitPolicy policy;
        policy.K = K;
        policy.buckets = 1u << n;
        policy.wait.assign(static_cast<size_t>(K) * policy.buckets, -1.0);
        for (const auto& fam : assignment.families) {
            if (!fam.dnn) continue;
            for (const auto& mem : fam.members) {
                if (mem.target_key != "1") continue; // wait decision
                auto it = assignment.values.find(mem.param);
                if (it == assignment.values.end())
                    fail("MissingParameter", "no value for parameter '" + mem.param + "'");
                policy.wait[static_cast<size_t>(fam.khat - 1) * policy.buckets + fam.verdicts] =
                    it->second;
            }
        }
        for (double w : policy.wait)
            if (w < 0.0)
                fail("MissingParameter",
                     "assignment does not cover every (khat, v) wait decision");
        return policy;
    }

    double wait_probability(int khat, uint32_t v) const {
        return wait[static_cast<size_t>(khat - 1) * buckets + v];
    }
};

inline ValidationResult validate_controller(const SimConfig& cfg, const ControllerAssignment& assignment,
                                            const SurrogatePerception& surrogate, double p_collider,
                                            double wait_time, uint64_t n_journeys, uint64_t n_waypoints,
                                            const EncounterPools& pools, unsigned jobs = 1) {
    auto policy = WaitPolicy::from_assignment(assignment, surrogate.tensor.K(), surrogate.tensor.n());
    ValidationResult res;
    res.journeys = n_journeys;
    res.waypoints_per_journey = n_waypoints;
    res.journey_times.resize(n_journeys, 0.0);
    res.journey_collisions.resize(n_journeys, 0);

    parallel_for(n_journeys, jobs, [&](size_t j) {
        Rng rng(derive_seed(cfg.seed, j));
        double time = 0.0;
        uint32_t collisions = 0;
        for (uint64_t w = 0; w < n_waypoints; ++w) {
            for (uint64_t retry = 0;; ++retry) {
                if (retry > 1'000'000) fail("SamplingStall", "controller retries without bound");
                if (!rng.bernoulli(p_collider)) {
                    time += pools.straight_time;
                    break;
                }
                bool on_course = rng.bernoulli(pools.p_occ_hat);
                const auto& pool = on_course ? pools.collision : pools.clear;
                const PoolEntry& entry = pool[rng.below(pool.size())];
                auto [khat, v] = surrogate.sample(on_course ? 2 : 1, rng);
                if (rng.bernoulli(policy.wait_probability(khat, v))) {
                    time += wait_time;
                    continue; // fresh collider at the same waypoint
                }
                time += entry.go_time;
                if (on_course) ++collisions;
                break;
            }
        }
        res.journey_times[j] = time;
        res.journey_collisions[j] = collisions;
    });

    double time_sum = 0.0, time_sq = 0.0;
    uint64_t collided_journeys = 0, total_collisions = 0;
    for (uint64_t j = 0; j < n_journeys; ++j) {
        time_sum += res.journey_times[j];
        time_sq += res.journey_times[j] * res.journey_times[j];
        if (res.journey_collisions[j] > 0) ++collided_journeys;
        total_collisions += res.journey_collisions[j];
    }
    double nj = static_cast<double>(n_journeys);
    res.mean_time = time_sum / nj;
    res.collision_rate = static_cast<double>(collided_journeys) / nj;
    double time_var = std::max(0.0, time_sq / nj - res.mean_time * res.mean_time);
    res.time_stderr = std::sqrt(time_var / nj);
    res.rate_stderr = std::sqrt(std::max(0.0, res.collision_rate * (1 - res.collision_rate)) / nj);
    double hops = nj * static_cast<double>(n_waypoints);
    res.mean_time_per_waypoint = time_sum / hops;
    res.collision_free_per_waypoint = 1.0 - static_cast<double>(total_collisions) / hops;
    return res;
}

inline ValidationResult validate_controller(const SimConfig& cfg, const ControllerAssignment& assignment,
                                            const SurrogatePerception& surrogate, double p_collider,
                                            double wait_time, uint64_t n_journeys, uint64_t n_waypoints,
                                            unsigned jobs = 1) {
    auto pools = build_pools(cfg, 20'000);
    return validate_controller(cfg, assignment, surrogate, p_collider, wait_time, n_journeys,
                               n_waypoints, pools, jobs);
}

} // namespace decsynth::sim
