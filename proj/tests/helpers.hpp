#pragma once

#include <decsynth/markov.hpp>
#include <decsynth/model_lang.hpp>
#include <decsynth/rng.hpp>
#include <decsynth/uncertainty.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace helpers {

using namespace decsynth;

inline std::string models_path(const std::string& name) {
    const char* env = std::getenv("DECSYNTH_MODELS");
    return (env ? std::string(env) : std::string("models")) + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline lang::ModelAst robot_ast() { return lang::parse(read_file(models_path("robot.pm"))); }

inline ExplicitPDTMC robot_model(double p_collider = 0.5, double p_occ = 0.5,
                                 double t_travel = 9.95, double t_collide = 2.57,
                                 double t_wait = 5.0) {
    lang::BuildOptions opts;
    opts.const_overrides["p_collider"] = fmt_double(p_collider);
    opts.const_overrides["p_occ"] = fmt_double(p_occ);
    opts.const_overrides["time_travel"] = fmt_double(t_travel);
    opts.const_overrides["time_collide"] = fmt_double(t_collide);
    opts.const_overrides["time_wait"] = fmt_double(t_wait);
    return lang::build(robot_ast(), opts);
}

// n=1 fixture tensor; verified buckets are strictly more accurate
inline ConfusionTensor robot_tensor_n1() {
    ConfusionTensor t(2, 1);
    t.count(1, 1, 1) = 70;
    t.count(1, 1, 0) = 15;
    t.count(1, 2, 1) = 5;
    t.count(1, 2, 0) = 10;
    t.count(2, 1, 1) = 8;
    t.count(2, 1, 0) = 12;
    t.count(2, 2, 1) = 55;
    t.count(2, 2, 0) = 25;
    return t;
}

inline ConfusionTensor perfect_tensor(int K, uint32_t n) {
    ConfusionTensor t(K, n);
    uint32_t all_true = (1u << n) - 1;
    for (int k = 1; k <= K; ++k) t.count(k, k, all_true) = 1;
    return t;
}

// class-blind tensor: every true class shares the same bucket distribution
// (weights are integer counts over the K * 2^n buckets, khat-major)
inline ConfusionTensor class_blind_tensor(int K, uint32_t n, const std::vector<long long>& weights) {
    ConfusionTensor t(K, n);
    size_t ix = 0;
    for (int khat = 1; khat <= K; ++khat)
        for (uint32_t v = 0; v < (1u << n); ++v, ++ix)
            for (int k = 1; k <= K; ++k) t.count(k, khat, v) = weights.at(ix);
    return t;
}

// Random turn-structured perfect-perception model in explicit form: random
// t=1 system moves, random monitor distributions, one controller family per
// class shared across (z, c).
inline ExplicitPDTMC random_turn_structured(Rng& rng, int& K_out) {
    int Z = static_cast<int>(rng.range_int(1, 3));
    int K = static_cast<int>(rng.range_int(2, 3));
    int C = 2;
    K_out = K;
    ExplicitPDTMC m;
    auto id_of = [&](int z, int k, int t, int c) {
        return static_cast<StateId>(((z * K + (k - 1)) * 3 + (t - 1)) * C + c);
    };
    for (int z = 0; z < Z; ++z)
        for (int k = 1; k <= K; ++k)
            for (int t = 1; t <= 3; ++t)
                for (int c = 0; c < C; ++c) {
                    StateTuple st;
                    st.z = std::to_string(z);
                    st.k = k;
                    st.t = t;
                    st.c = std::to_string(c);
                    m.add_state(st);
                }
    m.env_classes = K;
    std::vector<std::vector<int>> fam(K + 1);
    for (int k = 1; k <= K; ++k)
        for (int c = 0; c < C; ++c)
            fam[k].push_back(m.intern_param("x" + std::to_string(k) + "_" + std::to_string(c)));
    for (int z = 0; z < Z; ++z)
        for (int k = 1; k <= K; ++k)
            for (int c = 0; c < C; ++c) {
                StateId s1 = id_of(z, k, 1, c);
                int outs = static_cast<int>(rng.range_int(1, 3));
                std::vector<long long> w(outs);
                long long total = 0;
                for (auto& x : w) {
                    x = rng.range_int(1, 5);
                    total += x;
                }
                for (int j = 0; j < outs; ++j) {
                    int z2 = static_cast<int>(rng.below(Z));
                    int t2 = rng.bernoulli(0.5) ? 1 : 2;
                    m.add_transition(s1, id_of(z2, k, t2, c),
                                     static_cast<double>(w[j]) / static_cast<double>(total));
                }
                StateId s2 = id_of(z, k, 2, c);
                std::vector<long long> kw(K);
                long long ktotal = 0;
                for (auto& x : kw) {
                    x = rng.range_int(1, 5);
                    ktotal += x;
                }
                for (int k2 = 1; k2 <= K; ++k2)
                    m.add_transition(s2, id_of(z, k2, 3, c),
                                     static_cast<double>(kw[k2 - 1]) / static_cast<double>(ktotal));
                StateId s3 = id_of(z, k, 3, c);
                for (int c2 = 0; c2 < C; ++c2) m.add_transition(s3, id_of(z, k, 1, c2), 1.0, fam[k][c2]);
            }
    for (StateId s = 0; s < m.num_states(); ++s)
        if (rng.bernoulli(0.3)) m.add_label("goal", s);
    auto& r = m.reward_structure("cost");
    for (StateId s = 0; s < m.num_states(); ++s)
        if (rng.bernoulli(0.5)) r.state_rewards[s] = static_cast<double>(rng.range_int(0, 6)) / 2.0;
    m.finalize();
    return m;
}

inline ConfusionTensor random_tensor(Rng& rng, int K, uint32_t n) {
    ConfusionTensor t(K, n);
    for (int k = 1; k <= K; ++k) {
        long long placed = 0;
        for (int pred = 1; pred <= K; ++pred)
            for (uint32_t v = 0; v < (1u << n); ++v) {
                long long c = rng.bernoulli(0.25) ? 0 : rng.range_int(1, 40);
                t.count(k, pred, v) = c;
                placed += c;
            }
        if (placed == 0) t.count(k, k, (1u << n) - 1) = 1;
    }
    return t;
}

// Random fully-instantiated model with <= max_states states, small
// out-degree (keeps the path-enumeration oracle cheap), labels "a"/"b" and a
// reward structure "cost". Probabilities are ratios of small integers.
inline ExplicitPDTMC random_instantiated_model(Rng& rng, int max_states = 8) {
    ExplicitPDTMC m;
    int n = static_cast<int>(rng.range_int(2, max_states));
    for (int i = 0; i < n; ++i) m.add_state(StateTuple{});
    for (StateId s = 0; s < static_cast<StateId>(n); ++s) {
        int outs = static_cast<int>(rng.range_int(1, 3));
        std::vector<long long> w(outs);
        long long total = 0;
        for (auto& x : w) {
            x = rng.range_int(1, 6);
            total += x;
        }
        for (int j = 0; j < outs; ++j)
            m.add_transition(s, static_cast<StateId>(rng.below(n)),
                             static_cast<double>(w[j]) / static_cast<double>(total));
    }
    for (StateId s = 0; s < static_cast<StateId>(n); ++s) {
        if (rng.bernoulli(0.4)) m.add_label("a", s);
        if (rng.bernoulli(0.3)) m.add_label("b", s);
    }
    if (!m.labels.count("b")) m.add_label("b", static_cast<StateId>(rng.below(n)));
    if (!m.labels.count("a")) m.add_label("a", 0);
    auto& r = m.reward_structure("cost");
    for (StateId s = 0; s < static_cast<StateId>(n); ++s) {
        if (rng.bernoulli(0.6)) r.state_rewards[s] = static_cast<double>(rng.range_int(0, 8)) / 2.0;
        for (const auto& e : m.transitions[s])
            if (rng.bernoulli(0.4))
                r.trans_rewards[RewardStructure::edge_key(s, e.target)] =
                    static_cast<double>(rng.range_int(1, 6)) / 4.0;
    }
    m.finalize();
    return m;
}

inline ControllerAssignment assignment_of(const ExplicitPDTMC& model,
                                          const std::map<std::string, double>& values) {
    ControllerAssignment a = model.assignment_shell();
    a.values = values;
    return a;
}

// Uniform random point on each family's simplex (grid-free).
inline ControllerAssignment random_assignment(const ExplicitPDTMC& model, Rng& rng) {
    ControllerAssignment a = model.assignment_shell();
    for (const auto& fam : a.families) {
        double total = 0.0;
        std::vector<double> raw;
        for (size_t i = 0; i < fam.members.size(); ++i) {
            raw.push_back(-std::log(1.0 - rng.uniform() + 1e-300));
            total += raw.back();
        }
        for (size_t i = 0; i < fam.members.size(); ++i) a.values[fam.members[i].param] = raw[i] / total;
    }
    return a;
}

} // namespace helpers
