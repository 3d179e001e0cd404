#pragma once

// Stage-3 controller synthesis: exhaustive discretized search and an
// NSGA-II-style evolutionary search over the controller-parameter simplex
// families, plus the IGD and HV front-quality indicators.

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "markov.hpp"
#include "parallel.hpp"
#include "pctl.hpp"
#include "rng.hpp"
#include "text.hpp"

namespace decsynth::synth {

struct Objective {
    bool maximise = false;
    pctl::PctlQuery query;
};

struct Requirements {
    std::vector<pctl::PctlQuery> constraints;
    std::vector<Objective> objectives;
};

inline Requirements parse_requirements(std::string_view text) {
    Requirements reqs;
    size_t lineno = 0;
    for (auto raw : split(text, '\n')) {
        ++lineno;
        auto line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        auto colon = line.find(':');
        if (colon == std::string_view::npos)
            fail("SyntaxError", "requirements line " + std::to_string(lineno) +
                                    " lacks a constraint:/minimise:/maximise: prefix");
        auto prefix = trim(line.substr(0, colon));
        auto body = line.substr(colon + 1);
        if (prefix == "constraint") {
            auto q = pctl::parse_query(body);
            if (q.cmp == pctl::Cmp::query)
                fail("SyntaxError", "constraints need a comparison bound (line " +
                                        std::to_string(lineno) + ")");
            reqs.constraints.push_back(std::move(q));
        } else if (prefix == "minimise" || prefix == "minimize" || prefix == "maximise" ||
                   prefix == "maximize") {
            auto q = pctl::parse_query(body);
            if (q.cmp != pctl::Cmp::query)
                fail("SyntaxError", "objectives must be quantitative '=?' queries (line " +
                                        std::to_string(lineno) + ")");
            reqs.objectives.push_back({prefix[2] == 'x', std::move(q)});
        } else {
            fail("SyntaxError", "unknown requirements prefix '" + std::string(prefix) + "'");
        }
    }
    return reqs;
}

inline Requirements read_requirements_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail("IoError", "cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_requirements(ss.str());
}

struct CandidateResult {
    std::vector<double> values;            // canonical parameter order
    std::vector<double> objective_values;  // native orientation
    std::vector<double> constraint_values;
    bool feasible = true;
    double violation = 0.0;
};

struct ObjectiveMeta {
    std::string query;
    bool maximise = false;
    bool is_probability = false;
};

struct GaSettings {
    int population = 100;
    uint64_t max_evaluations = 10000;
    uint64_t seed = 0;
    double sbx_eta = 15.0;
    double mutation_eta = 20.0;
    double crossover_rate = 0.9;
    double mutation_rate = -1.0; // -1 = 1/genes
};

struct ParetoFront {
    std::vector<std::string> param_names; // canonical order (family-major)
    std::vector<ObjectiveMeta> objectives;
    std::vector<CandidateResult> members;
    std::string method;
    uint64_t seed = 0;
    double grid_step = 0.0;
    bool deterministic = false;
    GaSettings ga;
    uint64_t evaluated = 0;
    bool infeasible_all = false;
    std::vector<CandidateResult> all_candidates; // optional, kept when requested
};

// ---------------------------------------------------------------------------
// candidate evaluation

namespace detail {

// Canonical parameter order: families in model order, members in family
// order. Every search method and every serialized artifact uses it.
inline std::vector<int> canonical_params(const ExplicitPDTMC& model) {
    std::vector<int> order;
    for (const auto& fam : model.families)
        for (int m : fam.members) order.push_back(m);
    if (order.size() != model.params.size())
        fail("SimplexViolation", "model parameters are not organized into simplex families");
    return order;
}

struct Evaluator {
    const ExplicitPDTMC& model;
    const Requirements& reqs;
    std::vector<int> order;               // canonical param order
    std::vector<std::string> names;
    std::map<std::vector<double>, CandidateResult> cache;

    Evaluator(const ExplicitPDTMC& m, const Requirements& r) : model(m), reqs(r) {
        order = canonical_params(m);
        for (int ix : order) names.push_back(m.params[ix].name);
        if (reqs.objectives.empty()) fail("SyntaxError", "at least one objective is required");
    }

    CandidateResult evaluate_uncached(const std::vector<double>& values) const {
        ControllerAssignment a;
        for (size_t i = 0; i < values.size(); ++i) a.values[names[i]] = values[i];
        auto inst = model.instantiate(a);
        CandidateResult res;
        res.values = values;
        for (const auto& c : reqs.constraints) {
            double v = pctl::pmc(c, inst);
            res.constraint_values.push_back(v);
            bool ok = pctl::compare(v, c.cmp, c.threshold);
            if (!ok) {
                res.feasible = false;
                double gap = 0.0;
                switch (c.cmp) {
                    case pctl::Cmp::le:
                    case pctl::Cmp::lt: gap = v - c.threshold; break;
                    case pctl::Cmp::ge:
                    case pctl::Cmp::gt: gap = c.threshold - v; break;
                    case pctl::Cmp::query: break;
                }
                if (std::isinf(gap) || std::isnan(gap)) gap = 1e18;
                res.violation += std::max(gap, 1e-12);
            }
        }
        for (const auto& o : reqs.objectives) res.objective_values.push_back(pctl::pmc(o.query, inst));
        return res;
    }

    // batch evaluation with deterministic slot order; cache shared across batches
    std::vector<CandidateResult> evaluate_batch(const std::vector<std::vector<double>>& batch,
                                                unsigned jobs) {
        std::vector<CandidateResult> out(batch.size());
        std::vector<size_t> misses;
        for (size_t i = 0; i < batch.size(); ++i) {
            auto it = cache.find(batch[i]);
            if (it != cache.end()) out[i] = it->second;
            else misses.push_back(i);
        }
        std::vector<CandidateResult> fresh(misses.size());
        parallel_for(misses.size(), jobs,
                     [&](size_t j) { fresh[j] = evaluate_uncached(batch[misses[j]]); });
        for (size_t j = 0; j < misses.size(); ++j) {
            out[misses[j]] = fresh[j];
            cache.emplace(batch[misses[j]], fresh[j]);
        }
        return out;
    }

    std::vector<ObjectiveMeta> objective_meta() const {
        std::vector<ObjectiveMeta> meta;
        for (const auto& o : reqs.objectives)
            meta.push_back({o.query.source, o.maximise,
                            o.query.kind == pctl::PctlQuery::Kind::prob});
        return meta;
    }
};

// dominance in native orientation: maximise objectives compare reversed
inline bool dominates(const CandidateResult& a, const CandidateResult& b,
                      const std::vector<ObjectiveMeta>& meta) {
    bool strict = false;
    for (size_t i = 0; i < meta.size(); ++i) {
        double x = meta[i].maximise ? -a.objective_values[i] : a.objective_values[i];
        double y = meta[i].maximise ? -b.objective_values[i] : b.objective_values[i];
        if (x > y) return false;
        if (x < y) strict = true;
    }
    return strict;
}

inline std::vector<CandidateResult> nondominated(std::vector<CandidateResult> pool,
                                                 const std::vector<ObjectiveMeta>& meta) {
    // de-duplicate by assignment
    std::sort(pool.begin(), pool.end(),
              [](const CandidateResult& a, const CandidateResult& b) { return a.values < b.values; });
    pool.erase(std::unique(pool.begin(), pool.end(),
                           [](const CandidateResult& a, const CandidateResult& b) {
                               return a.values == b.values;
                           }),
               pool.end());
    std::vector<CandidateResult> front;
    if (meta.size() == 2) {
        // sweep in minimize orientation
        auto key = [&](const CandidateResult& c) {
            return std::make_pair(meta[0].maximise ? -c.objective_values[0] : c.objective_values[0],
                                  meta[1].maximise ? -c.objective_values[1] : c.objective_values[1]);
        };
        std::stable_sort(pool.begin(), pool.end(), [&](const CandidateResult& a, const CandidateResult& b) {
            return key(a) < key(b);
        });
        double best = std::numeric_limits<double>::infinity();
        size_t i = 0;
        while (i < pool.size()) {
            size_t j = i;
            double group_min = std::numeric_limits<double>::infinity();
            while (j < pool.size() && key(pool[j]).first == key(pool[i]).first) {
                group_min = std::min(group_min, key(pool[j]).second);
                ++j;
            }
            if (group_min < best) {
                for (size_t t = i; t < j; ++t)
                    if (key(pool[t]).second == group_min) front.push_back(pool[t]);
                best = group_min;
            }
            i = j;
        }
    } else {
        for (size_t i = 0; i < pool.size(); ++i) {
            bool dominated = false;
            for (size_t j = 0; j < pool.size() && !dominated; ++j)
                if (j != i && dominates(pool[j], pool[i], meta)) dominated = true;
            if (!dominated) front.push_back(pool[i]);
        }
    }
    std::sort(front.begin(), front.end(), [](const CandidateResult& a, const CandidateResult& b) {
        if (a.objective_values != b.objective_values) return a.objective_values < b.objective_values;
        return a.values < b.values;
    });
    return front;
}

// compositions of `slots` values stepping by 1/steps, in lexicographic order
inline void compositions(int steps, int slots, std::vector<std::vector<double>>& out) {
    std::vector<int> acc(slots, 0);
    std::function<void(int, int)> rec = [&](int slot, int remaining) {
        if (slot == slots - 1) {
            acc[slot] = remaining;
            std::vector<double> v(slots);
            for (int i = 0; i < slots; ++i) v[i] = static_cast<double>(acc[i]) / steps;
            out.push_back(std::move(v));
            return;
        }
        for (int take = 0; take <= remaining; ++take) {
            acc[slot] = take;
            rec(slot + 1, remaining - take);
        }
    };
    rec(0, steps);
}

} // namespace detail

struct SearchOptions {
    uint64_t budget = 100'000'000; // candidate cap
    unsigned jobs = 1;
    bool keep_all = false;
};

inline ParetoFront grid_search(const ExplicitPDTMC& model, const Requirements& reqs, double step,
                               bool deterministic, const SearchOptions& opts = {}) {
    if (!(step > 0.0 && step <= 1.0)) fail("RangeError", "step must lie in (0,1]");
    double inv = 1.0 / step;
    int steps = static_cast<int>(std::llround(inv));
    if (std::fabs(inv - steps) > 1e-9) fail("RangeError", "1/step must be integral");

    detail::Evaluator ev(model, reqs);
    // per-family candidate value vectors
    std::vector<std::vector<std::vector<double>>> family_values;
    for (const auto& fam : model.families) {
        std::vector<std::vector<double>> vals;
        int slots = static_cast<int>(fam.members.size());
        if (deterministic) {
            for (int i = 0; i < slots; ++i) {
                std::vector<double> v(slots, 0.0);
                v[i] = 1.0;
                vals.push_back(std::move(v));
            }
        } else {
            detail::compositions(steps, slots, vals);
        }
        family_values.push_back(std::move(vals));
    }
    unsigned __int128 total = 1;
    for (const auto& fv : family_values) {
        total *= fv.size();
        if (total > opts.budget)
            fail("BudgetExceeded", "grid would evaluate more than " + std::to_string(opts.budget) +
                                       " candidates");
    }

    std::vector<std::vector<double>> batch;
    std::vector<size_t> odometer(family_values.size(), 0);
    for (;;) {
        std::vector<double> values;
        for (size_t f = 0; f < family_values.size(); ++f)
            for (double v : family_values[f][odometer[f]]) values.push_back(v);
        batch.push_back(std::move(values));
        size_t d = 0;
        for (; d < odometer.size(); ++d) {
            if (++odometer[d] < family_values[d].size()) break;
            odometer[d] = 0;
        }
        if (d == odometer.size() || odometer.empty()) break;
    }

    auto results = ev.evaluate_batch(batch, opts.jobs);

    ParetoFront front;
    front.param_names = ev.names;
    front.objectives = ev.objective_meta();
    front.method = "grid";
    front.grid_step = step;
    front.deterministic = deterministic;
    front.evaluated = results.size();
    std::vector<CandidateResult> feasible;
    for (auto& r : results)
        if (r.feasible) feasible.push_back(r);
    front.infeasible_all = feasible.empty();
    front.members = detail::nondominated(std::move(feasible), front.objectives);
    if (opts.keep_all) front.all_candidates = std::move(results);
    return front;
}

// ---------------------------------------------------------------------------
// NSGA-II-style evolutionary search

namespace detail {

struct GaIndividual {
    std::vector<double> genome; // probabilistic: raw genes; deterministic: category per family
    CandidateResult result;
    int rank = 0;
    double crowding = 0.0;
};

inline std::vector<double> decode_genome(const ExplicitPDTMC& model, const std::vector<double>& genome,
                                         bool deterministic) {
    std::vector<double> values;
    size_t g = 0;
    for (const auto& fam : model.families) {
        size_t slots = fam.members.size();
        if (deterministic) {
            int pick = std::min<int>(static_cast<int>(genome[g++]), static_cast<int>(slots) - 1);
            for (size_t i = 0; i < slots; ++i) values.push_back(i == static_cast<size_t>(pick) ? 1.0 : 0.0);
        } else {
            double sum = 0.0;
            std::vector<double> raw(slots);
            for (size_t i = 0; i < slots; ++i) {
                raw[i] = std::clamp(genome[g++], 0.0, 1.0);
                sum += raw[i];
            }
            if (sum <= 0.0) {
                for (size_t i = 0; i < slots; ++i) values.push_back(1.0 / slots);
            } else {
                for (size_t i = 0; i < slots; ++i) values.push_back(raw[i] / sum);
            }
        }
    }
    return values;
}

// constrained-domination (feasible beats infeasible, infeasible ranked by
// total violation, feasible by Pareto dominance)
inline bool constrained_dominates(const CandidateResult& a, const CandidateResult& b,
                                  const std::vector<ObjectiveMeta>& meta) {
    if (a.feasible != b.feasible) return a.feasible;
    if (!a.feasible) return a.violation < b.violation;
    return dominates(a, b, meta);
}

inline void rank_population(std::vector<GaIndividual>& pop, const std::vector<ObjectiveMeta>& meta) {
    size_t n = pop.size();
    std::vector<std::vector<int>> dominated_by(n);
    std::vector<int> count(n, 0);
    std::vector<int> current;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (constrained_dominates(pop[i].result, pop[j].result, meta)) dominated_by[i].push_back(static_cast<int>(j));
            else if (constrained_dominates(pop[j].result, pop[i].result, meta)) ++count[i];
        }
    for (size_t i = 0; i < n; ++i)
        if (count[i] == 0) {
            pop[i].rank = 0;
            current.push_back(static_cast<int>(i));
        }
    int rank = 0;
    while (!current.empty()) {
        std::vector<int> next;
        for (int i : current)
            for (int j : dominated_by[i])
                if (--count[j] == 0) {
                    pop[j].rank = rank + 1;
                    next.push_back(j);
                }
        ++rank;
        current = std::move(next);
    }
    // crowding distance per rank
    std::map<int, std::vector<int>> by_rank;
    for (size_t i = 0; i < n; ++i) {
        pop[i].crowding = 0.0;
        by_rank[pop[i].rank].push_back(static_cast<int>(i));
    }
    for (auto& [r, ids] : by_rank) {
        for (size_t m = 0; m < meta.size(); ++m) {
            std::sort(ids.begin(), ids.end(), [&](int a, int b) {
                return pop[a].result.objective_values[m] < pop[b].result.objective_values[m];
            });
            double lo = pop[ids.front()].result.objective_values[m];
            double hi = pop[ids.back()].result.objective_values[m];
            pop[ids.front()].crowding = std::numeric_limits<double>::infinity();
            pop[ids.back()].crowding = std::numeric_limits<double>::infinity();
            if (hi - lo <= 0.0 || std::isinf(hi - lo)) continue;
            for (size_t t = 1; t + 1 < ids.size(); ++t)
                pop[ids[t]].crowding += (pop[ids[t + 1]].result.objective_values[m] -
                                         pop[ids[t - 1]].result.objective_values[m]) /
                                        (hi - lo);
        }
    }
}

inline bool crowded_less(const GaIndividual& a, const GaIndividual& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.crowding > b.crowding;
}

} // namespace detail

inline ParetoFront evolutionary_search(const ExplicitPDTMC& model, const Requirements& reqs,
                                       const GaSettings& settings, bool deterministic,
                                       const SearchOptions& opts = {}) {
    if (settings.population < 4 || settings.population % 2 != 0)
        fail("RangeError", "population must be even and at least 4");
    if (settings.max_evaluations < static_cast<uint64_t>(settings.population))
        fail("RangeError", "max_evaluations must cover the initial population");

    detail::Evaluator ev(model, reqs);
    auto meta = ev.objective_meta();
    size_t genes = 0;
    std::vector<size_t> family_sizes;
    for (const auto& fam : model.families) family_sizes.push_back(fam.members.size());
    genes = deterministic ? family_sizes.size() : ev.names.size();
    if (genes == 0) fail("SimplexViolation", "model has no controller parameters to synthesize");
    double pm = settings.mutation_rate > 0 ? settings.mutation_rate : 1.0 / static_cast<double>(genes);

    Rng rng(settings.seed);
    auto random_genome = [&]() {
        std::vector<double> g(genes);
        if (deterministic) {
            for (size_t f = 0; f < family_sizes.size(); ++f)
                g[f] = static_cast<double>(rng.below(family_sizes[f]));
        } else {
            for (auto& x : g) x = rng.uniform();
        }
        return g;
    };

    using detail::GaIndividual;
    std::vector<GaIndividual> pop(settings.population);
    std::vector<std::vector<double>> batch;
    for (auto& ind : pop) {
        ind.genome = random_genome();
        batch.push_back(detail::decode_genome(model, ind.genome, deterministic));
    }
    auto results = ev.evaluate_batch(batch, opts.jobs);
    uint64_t evaluations = results.size();
    std::vector<CandidateResult> archive;
    for (size_t i = 0; i < pop.size(); ++i) {
        pop[i].result = results[i];
        if (results[i].feasible) archive.push_back(results[i]);
    }
    detail::rank_population(pop, meta);

    auto tournament = [&]() -> const GaIndividual& {
        const GaIndividual& a = pop[rng.below(pop.size())];
        const GaIndividual& b = pop[rng.below(pop.size())];
        return detail::crowded_less(a, b) ? a : b;
    };

    while (evaluations + static_cast<uint64_t>(settings.population) <= settings.max_evaluations) {
        std::vector<GaIndividual> children(settings.population);
        for (int c = 0; c < settings.population; c += 2) {
            std::vector<double> g1 = tournament().genome;
            std::vector<double> g2 = tournament().genome;
            if (deterministic) {
                if (rng.uniform() < settings.crossover_rate)
                    for (size_t g = 0; g < genes; ++g)
                        if (rng.bernoulli(0.5)) std::swap(g1[g], g2[g]);
                for (auto* gp : {&g1, &g2})
                    for (size_t f = 0; f < family_sizes.size(); ++f)
                        if (rng.uniform() < pm) (*gp)[f] = static_cast<double>(rng.below(family_sizes[f]));
            } else {
                if (rng.uniform() < settings.crossover_rate) {
                    for (size_t g = 0; g < genes; ++g) {
                        if (!rng.bernoulli(0.5)) continue;
                        double y1 = g1[g], y2 = g2[g];
                        double u = rng.uniform();
                        double beta = u <= 0.5 ? std::pow(2.0 * u, 1.0 / (settings.sbx_eta + 1.0))
                                               : std::pow(1.0 / (2.0 * (1.0 - u)),
                                                          1.0 / (settings.sbx_eta + 1.0));
                        g1[g] = std::clamp(0.5 * ((1 + beta) * y1 + (1 - beta) * y2), 0.0, 1.0);
                        g2[g] = std::clamp(0.5 * ((1 - beta) * y1 + (1 + beta) * y2), 0.0, 1.0);
                    }
                }
                for (auto* gp : {&g1, &g2})
                    for (size_t g = 0; g < genes; ++g) {
                        if (rng.uniform() >= pm) continue;
                        double y = (*gp)[g];
                        double u = rng.uniform();
                        double delta = u < 0.5
                                           ? std::pow(2.0 * u, 1.0 / (settings.mutation_eta + 1.0)) - 1.0
                                           : 1.0 - std::pow(2.0 * (1.0 - u),
                                                            1.0 / (settings.mutation_eta + 1.0));
                        (*gp)[g] = std::clamp(y + delta, 0.0, 1.0);
                    }
            }
            children[c].genome = std::move(g1);
            children[c + 1].genome = std::move(g2);
        }
        batch.clear();
        for (auto& ind : children) batch.push_back(detail::decode_genome(model, ind.genome, deterministic));
        results = ev.evaluate_batch(batch, opts.jobs);
        evaluations += results.size();
        for (size_t i = 0; i < children.size(); ++i) {
            children[i].result = results[i];
            if (results[i].feasible) archive.push_back(results[i]);
        }
        for (auto& c : children) pop.push_back(std::move(c));
        detail::rank_population(pop, meta);
        std::stable_sort(pop.begin(), pop.end(), detail::crowded_less);
        pop.resize(settings.population);
        detail::rank_population(pop, meta);
    }

    ParetoFront front;
    front.param_names = ev.names;
    front.objectives = meta;
    front.method = "ga";
    front.seed = settings.seed;
    front.deterministic = deterministic;
    front.ga = settings;
    front.evaluated = evaluations;
    front.infeasible_all = archive.empty();
    front.members = detail::nondominated(std::move(archive), meta);
    if (opts.keep_all) {
        for (const auto& ind : pop) front.all_candidates.push_back(ind.result);
    }
    return front;
}

// ---------------------------------------------------------------------------
// Pareto front quality indicators

namespace detail {

inline void require_compatible(const ParetoFront& front, const ParetoFront& reference) {
    if (front.members.empty() || reference.members.empty())
        fail("EmptyFront", "IGD/HV need non-empty fronts");
    if (front.objectives.size() != reference.objectives.size())
        fail("ArityMismatch", "fronts have different objective arity");
    for (size_t i = 0; i < front.objectives.size(); ++i)
        if (front.objectives[i].maximise != reference.objectives[i].maximise)
            fail("ArityMismatch", "fronts disagree on objective orientation");
}

// complement probabilities, negate rewards: every objective minimized
inline std::vector<std::vector<double>> minimized_points(const ParetoFront& f) {
    std::vector<std::vector<double>> pts;
    for (const auto& m : f.members) {
        std::vector<double> p;
        for (size_t i = 0; i < f.objectives.size(); ++i) {
            double v = m.objective_values[i];
            if (f.objectives[i].maximise) v = f.objectives[i].is_probability ? 1.0 - v : -v;
            p.push_back(v);
        }
        pts.push_back(std::move(p));
    }
    return pts;
}

} // namespace detail

// mean distance from each reference point to its nearest front point
inline double igd(const ParetoFront& front, const ParetoFront& reference) {
    detail::require_compatible(front, reference);
    double total = 0.0;
    for (const auto& r : reference.members) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& f : front.members) {
            double d2 = 0.0;
            for (size_t i = 0; i < front.objectives.size(); ++i) {
                double d = f.objective_values[i] - r.objective_values[i];
                d2 += d * d;
            }
            best = std::min(best, d2);
        }
        total += std::sqrt(best);
    }
    return total / static_cast<double>(reference.members.size());
}

// Hypervolume against a nadir built from the reference extrema scaled by
// `scale`. Exact sweep for two objectives, seeded Monte-Carlo beyond that.
inline double hv(const ParetoFront& front, const ParetoFront& reference, double scale) {
    detail::require_compatible(front, reference);
    auto pts = detail::minimized_points(front);
    auto ref = detail::minimized_points(reference);
    size_t d = front.objectives.size();
    for (const auto& p : pts)
        for (double x : p)
            if (x < 0.0)
                fail("NonMinimizedOrientation",
                     "converted objective is negative; HV needs non-negative minimized objectives");
    for (const auto& p : ref)
        for (double x : p)
            if (x < 0.0) fail("NonMinimizedOrientation", "reference has negative converted objectives");

    std::vector<double> nadir(d, 0.0);
    for (const auto& p : ref)
        for (size_t i = 0; i < d; ++i) nadir[i] = std::max(nadir[i], p[i]);
    for (auto& x : nadir) x *= scale;

    // clip into the nadir box
    for (auto& p : pts)
        for (size_t i = 0; i < d; ++i) p[i] = std::min(p[i], nadir[i]);

    if (d == 1) {
        double best = nadir[0];
        for (const auto& p : pts) best = std::min(best, p[0]);
        return std::max(0.0, nadir[0] - best);
    }
    if (d == 2) {
        std::sort(pts.begin(), pts.end());
        double volume = 0.0;
        double prev_y = nadir[1];
        for (const auto& p : pts) {
            if (p[1] < prev_y) {
                volume += (nadir[0] - p[0]) * (prev_y - p[1]);
                prev_y = p[1];
            }
        }
        return volume;
    }
    // Monte-Carlo estimate over the [lower, nadir] box
    std::vector<double> lower(d, std::numeric_limits<double>::infinity());
    for (const auto& p : pts)
        for (size_t i = 0; i < d; ++i) lower[i] = std::min(lower[i], p[i]);
    double box = 1.0;
    for (size_t i = 0; i < d; ++i) box *= std::max(0.0, nadir[i] - lower[i]);
    if (box <= 0.0) return 0.0;
    Rng rng(0x9E3779B97F4A7C15ULL);
    const int samples = 1'000'000;
    int hit = 0;
    std::vector<double> u(d);
    for (int s = 0; s < samples; ++s) {
        for (size_t i = 0; i < d; ++i) u[i] = lower[i] + (nadir[i] - lower[i]) * rng.uniform();
        for (const auto& p : pts) {
            bool dom = true;
            for (size_t i = 0; i < d && dom; ++i) dom = p[i] <= u[i];
            if (dom) {
                ++hit;
                break;
            }
        }
    }
    return box * static_cast<double>(hit) / samples;
}

// ---------------------------------------------------------------------------
// serialization: run-artifact JSON and the CSV exchange format

inline nlohmann::json front_to_json(const ParetoFront& front) {
    nlohmann::json j;
    j["method"] = front.method;
    j["seed"] = front.seed;
    j["deterministic"] = front.deterministic;
    if (front.method == "grid") j["step"] = front.grid_step;
    if (front.method == "ga") {
        j["ga"] = {{"population", front.ga.population},
                   {"max_evaluations", front.ga.max_evaluations},
                   {"sbx_eta", front.ga.sbx_eta},
                   {"mutation_eta", front.ga.mutation_eta},
                   {"crossover_rate", front.ga.crossover_rate},
                   {"mutation_rate", front.ga.mutation_rate}};
    }
    j["evaluated"] = front.evaluated;
    j["infeasible_all"] = front.infeasible_all;
    j["param_names"] = front.param_names;
    nlohmann::json objs = nlohmann::json::array();
    for (const auto& o : front.objectives)
        objs.push_back({{"query", o.query},
                        {"direction", o.maximise ? "maximise" : "minimise"},
                        {"kind", o.is_probability ? "probability" : "reward"}});
    j["objectives"] = objs;
    auto member_json = [&](const CandidateResult& m) {
        nlohmann::json e;
        e["objectives"] = m.objective_values;
        e["constraints"] = m.constraint_values;
        e["feasible"] = m.feasible;
        nlohmann::json params = nlohmann::json::object();
        for (size_t i = 0; i < front.param_names.size(); ++i) params[front.param_names[i]] = m.values[i];
        e["params"] = params;
        return e;
    };
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : front.members) members.push_back(member_json(m));
    j["front"] = members;
    if (!front.all_candidates.empty()) {
        nlohmann::json all = nlohmann::json::array();
        for (const auto& m : front.all_candidates) all.push_back(member_json(m));
        j["candidates"] = all;
    }
    return j;
}

inline ParetoFront front_from_json(const nlohmann::json& j) {
    ParetoFront front;
    front.method = j.value("method", "");
    front.seed = j.value("seed", 0ull);
    front.deterministic = j.value("deterministic", false);
    front.grid_step = j.value("step", 0.0);
    front.evaluated = j.value("evaluated", 0ull);
    front.infeasible_all = j.value("infeasible_all", false);
    front.param_names = j.at("param_names").get<std::vector<std::string>>();
    for (const auto& o : j.at("objectives"))
        front.objectives.push_back({o.at("query").get<std::string>(),
                                    o.at("direction").get<std::string>() == "maximise",
                                    o.at("kind").get<std::string>() == "probability"});
    for (const auto& e : j.at("front")) {
        CandidateResult m;
        m.objective_values = e.at("objectives").get<std::vector<double>>();
        if (e.contains("constraints")) m.constraint_values = e.at("constraints").get<std::vector<double>>();
        m.feasible = e.value("feasible", true);
        for (const auto& name : front.param_names) m.values.push_back(e.at("params").at(name).get<double>());
        front.members.push_back(std::move(m));
    }
    return front;
}

inline std::string front_to_csv(const ParetoFront& front) {
    std::ostringstream os;
    for (const auto& m : front.members) {
        for (size_t i = 0; i < m.objective_values.size(); ++i)
            os << (i ? "," : "") << fmt_double(m.objective_values[i]);
        for (size_t i = 0; i < front.param_names.size(); ++i)
            os << ',' << front.param_names[i] << '=' << fmt_double(m.values[i]);
        os << '\n';
    }
    return os.str();
}

// CSV fronts carry no objective metadata; callers supply it (usually from the
// JSON artifact on the other side of the comparison).
inline ParetoFront front_from_csv(const std::string& text, std::vector<ObjectiveMeta> objectives) {
    ParetoFront front;
    front.objectives = std::move(objectives);
    bool first = true;
    for (auto line : split(text, '\n')) {
        auto sv = trim(line);
        if (sv.empty()) continue;
        CandidateResult m;
        std::map<std::string, double> params;
        for (auto cell : split(sv, ',')) {
            auto eq = cell.find('=');
            if (eq == std::string_view::npos) {
                double v;
                if (!parse_double(trim(cell), v)) fail("FormatError", "bad objective value in front CSV");
                m.objective_values.push_back(v);
            } else {
                double v;
                if (!parse_double(trim(cell.substr(eq + 1)), v))
                    fail("FormatError", "bad parameter value in front CSV");
                params[std::string(trim(cell.substr(0, eq)))] = v;
            }
        }
        if (first) {
            for (const auto& [name, v] : params) front.param_names.push_back(name);
            first = false;
        }
        for (const auto& name : front.param_names) m.values.push_back(params.at(name));
        if (m.objective_values.size() != front.objectives.size())
            fail("ArityMismatch", "front CSV row has wrong objective arity");
        front.members.push_back(std::move(m));
    }
    return front;
}

} // namespace decsynth::synth
