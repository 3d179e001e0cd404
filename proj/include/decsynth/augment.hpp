#pragma once

// Stage-2c model augmentation: lifts a perfect-perception pDTMC to its
// DNN-perception counterpart. States gain the predicted class khat and the
// verification-outcome vector v; t=1 steps keep (khat,v) fixed, t=2 steps
// fan out over every (khat',v') bucket weighted by p_{k' khat' v'}, and t=3
// steps get fresh controller parameters that depend on (khat,v) but not on
// the true class k. Labels and rewards lift along the base-state projection.

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "errors.hpp"
#include "markov.hpp"
#include "model_lang.hpp"
#include "pctl.hpp"
#include "uncertainty.hpp"

namespace decsynth {

struct AugmentationSpec {
    ConfusionTensor tensor;
    std::string controller_param_prefix; // prepended to every generated name
    bool deterministic = false;          // controller class intended for synthesis
    uint64_t state_cap = kStateCapDefault;
};

// Generated parameter names: `<prefix><perfect-name>_v<bits>`, with `_k<khat>`
// inserted when the originating family is shared across classes. Fixed so
// synthesized assignments stay portable across runs.
inline std::string fresh_param_name(const std::string& prefix, const std::string& orig, int family_k,
                                    int khat, uint32_t verdicts, uint32_t n) {
    std::string bits;
    for (uint32_t i = 0; i < n; ++i) bits += ((verdicts >> i) & 1u) ? '1' : '0';
    std::string name = prefix + orig;
    if (family_k == 0) name += "_k" + std::to_string(khat);
    return name + "_v" + bits;
}

inline ExplicitPDTMC augment(const ExplicitPDTMC& model, const AugmentationSpec& spec) {
    const ConfusionTensor& tensor = spec.tensor;
    if (model.augmented) fail("ArityMismatch", "model is already DNN-perception augmented");
    if (model.env_classes <= 0)
        fail("MissingRoles", "model carries no environment class annotation; build it from a "
                             "role-annotated source");
    if (tensor.K() != model.env_classes)
        fail("ArityMismatch", "tensor has K=" + std::to_string(tensor.K()) + " but model has K=" +
                                  std::to_string(model.env_classes));
    {
        auto frame = check_turn_structure(model);
        if (!frame.empty())
            fail("TurnStructure", "perfect-perception model violates the turn frame conditions:\n" +
                                      frame.to_string());
    }

    const int K = tensor.K();
    const uint32_t n = tensor.n();
    const uint32_t nbuckets = 1u << n;

    // controller family lookup: context-exact first, then per-class, then shared
    std::map<std::tuple<std::string, std::string, int>, int> family_by_context;
    std::vector<std::vector<int>> families_of_class(K + 1);
    for (StateId s = 0; s < model.num_states(); ++s) {
        if (model.states[s].t != 3) continue;
        int fid = -1;
        for (const auto& e : model.transitions[s])
            if (e.param >= 0) fid = model.params[e.param].family;
        if (fid < 0) continue;
        family_by_context.emplace(
            std::make_tuple(model.states[s].z, model.states[s].c, model.states[s].k), fid);
    }
    for (size_t f = 0; f < model.families.size(); ++f) {
        int k = model.families[f].k;
        if (k >= 1 && k <= K) families_of_class[k].push_back(static_cast<int>(f));
        if (k == 0)
            for (int kk = 1; kk <= K; ++kk) families_of_class[kk].push_back(static_cast<int>(f));
    }
    auto family_for = [&](const StateTuple& base, int khat) -> int {
        auto it = family_by_context.find(std::make_tuple(base.z, base.c, khat));
        if (it != family_by_context.end()) return it->second;
        if (families_of_class[khat].size() == 1) return families_of_class[khat][0];
        return -1;
    };

    ExplicitPDTMC out;
    out.env_classes = K;
    out.n_verifs = n;
    out.augmented = true;

    struct Key {
        StateId base;
        int khat;
        uint32_t verdicts;
        bool operator<(const Key& o) const {
            return std::tie(base, khat, verdicts) < std::tie(o.base, o.khat, o.verdicts);
        }
    };
    std::map<Key, StateId> ids;
    std::vector<Key> keys;
    auto intern = [&](StateId base, int khat, uint32_t verdicts) {
        Key key{base, khat, verdicts};
        auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        if (out.num_states() >= spec.state_cap)
            fail("StateExplosion", "state cap of " + std::to_string(spec.state_cap) + " exceeded");
        StateTuple st = model.states[base];
        st.augmented = true;
        st.khat = khat;
        st.verdicts = verdicts;
        StateId id = out.add_state(std::move(st));
        ids.emplace(key, id);
        keys.push_back(key);
        return id;
    };

    // initial state: khat0 = k0, all verdicts true
    const uint32_t all_true = nbuckets - 1;
    std::deque<StateId> queue;
    queue.push_back(intern(model.initial, model.states[model.initial].k, all_true));
    out.initial = 0;

    std::map<std::string, std::string> perfect_of; // fresh name -> perfect name
    std::vector<char> expanded;

    while (!queue.empty()) {
        StateId id = queue.front();
        queue.pop_front();
        if (id < expanded.size() && expanded[id]) continue;
        if (expanded.size() <= id) expanded.resize(id + 1, 0);
        expanded[id] = 1;
        Key key = keys[id];
        const StateTuple& base = model.states[key.base];
        const auto& row = model.transitions[key.base];

        bool has_params = false;
        for (const auto& e : row) has_params |= e.param >= 0;

        auto push = [&](StateId aug_target) {
            if (expanded.size() <= aug_target || !expanded[aug_target]) queue.push_back(aug_target);
        };

        if (base.t == 2) {
            // perception step: fan out over the (khat', v') buckets
            for (const auto& e : row) {
                int k_next = model.states[e.target].k;
                for (int khat = 1; khat <= K; ++khat)
                    for (uint32_t v = 0; v < nbuckets; ++v) {
                        double p = tensor.probability(k_next, khat, v).value();
                        if (p == 0.0) continue;
                        StateId dst = intern(e.target, khat, v);
                        int param = -1;
                        if (e.param >= 0) param = out.intern_param(model.params[e.param].name);
                        out.add_transition(id, dst, e.coeff * p, param);
                        push(dst);
                    }
            }
        } else if (base.t == 3 && has_params) {
            // controller step: fresh parameters keyed by (khat, v)
            int fid = family_for(base, key.khat);
            for (const auto& e : row) {
                if (e.param < 0)
                    fail("MalformedController", "t=3 state mixes parameter and constant entries");
                const std::string& target_key = model.states[e.target].c;
                std::string fresh;
                if (fid >= 0) {
                    const auto& fam = model.families[fid];
                    int member = -1;
                    for (int m : fam.members)
                        if (model.params[m].target_key == target_key) member = m;
                    if (member < 0)
                        fail("MalformedController",
                             "controller family for class " + std::to_string(key.khat) +
                                 " has no decision targeting c=" + target_key);
                    fresh = fresh_param_name(spec.controller_param_prefix, model.params[member].name,
                                             fam.k, key.khat, key.verdicts, n);
                    perfect_of[fresh] = model.params[member].name;
                } else {
                    std::string tk = target_key;
                    for (auto& ch : tk)
                        if (ch == ',') ch = '_';
                    fresh = fresh_param_name(spec.controller_param_prefix,
                                             "x_k" + std::to_string(key.khat) + "_c" + tk, 0,
                                             key.khat, key.verdicts, n);
                }
                StateId dst = intern(e.target, key.khat, key.verdicts);
                out.add_transition(id, dst, 1.0, out.intern_param(fresh));
                push(dst);
            }
        } else {
            // t=1 (and constant t=3) steps copy weights, holding (khat, v)
            for (const auto& e : row) {
                StateId dst = intern(e.target, key.khat, key.verdicts);
                int param = -1;
                if (e.param >= 0) param = out.intern_param(model.params[e.param].name);
                out.add_transition(id, dst, e.coeff, param);
                push(dst);
            }
        }
    }

    // labels lift along the base projection
    for (const auto& [name, base_ids] : model.labels) {
        auto& ids_out = out.labels[name];
        for (StateId id = 0; id < out.num_states(); ++id)
            if (std::binary_search(base_ids.begin(), base_ids.end(), keys[id].base)) ids_out.push_back(id);
    }
    // rewards lift along base states and base edges
    for (const auto& r : model.rewards) {
        auto& ro = out.reward_structure(r.name);
        for (StateId id = 0; id < out.num_states(); ++id) {
            double sr = r.state_reward(keys[id].base);
            if (sr != 0.0) ro.state_rewards[id] = sr;
        }
        for (StateId id = 0; id < out.num_states(); ++id)
            for (const auto& e : out.transitions[id]) {
                double tr = r.trans_reward(keys[id].base, keys[e.target].base);
                if (tr != 0.0) ro.trans_rewards[RewardStructure::edge_key(id, e.target)] = tr;
            }
    }

    out.finalize();
    for (auto& p : out.params) {
        auto it = perfect_of.find(p.name);
        if (it != perfect_of.end()) p.perfect_name = it->second;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Eq.-(25)-style fold: collapse a DNN-perception assignment onto the
// perfect-perception parameters, x_{zkcc'} = sum_{khat,v} p_{k khat v} *
// x_{z khat v c c'}.

inline ControllerAssignment fold_controller(const ControllerAssignment& dnn_assignment,
                                            const ConfusionTensor& tensor) {
    std::map<std::pair<int, uint32_t>, const AssignmentFamily*> bucket_family;
    for (const auto& fam : dnn_assignment.families) {
        if (!fam.dnn) continue;
        auto key = std::make_pair(fam.khat, fam.verdicts);
        if (bucket_family.count(key))
            fail("FoldAmbiguous", "multiple controller families share bucket (khat=" +
                                      std::to_string(fam.khat) + ", v=" +
                                      verdict_bits_key(fam.verdicts, fam.n_verifs) + ")");
        bucket_family.emplace(key, &fam);
    }
    if (bucket_family.empty()) fail("FoldAmbiguous", "assignment has no DNN controller families");

    ControllerAssignment out;
    out.kind = ControllerAssignment::Kind::perfect;

    // perfect families are recovered from the khat linkage: the families of
    // bucket (khat, v) all fold onto the class-khat perfect family
    std::map<int, const AssignmentFamily*> class_rep;
    for (const auto& [key, fam] : bucket_family) class_rep.emplace(key.first, fam);

    for (const auto& [k, rep] : class_rep) {
        AssignmentFamily pf;
        pf.dnn = false;
        pf.k = k;
        pf.z_key = rep->z_key;
        pf.c_key = rep->c_key;
        for (const auto& member : rep->members) {
            if (member.perfect_param.empty())
                fail("FoldAmbiguous", "parameter '" + member.param +
                                          "' carries no perfect-perception origin; cannot fold");
            double value = 0.0;
            for (int khat = 1; khat <= tensor.K(); ++khat)
                for (uint32_t v = 0; v < tensor.buckets(); ++v) {
                    double p = tensor.probability(k, khat, v).value();
                    if (p == 0.0) continue;
                    auto it = bucket_family.find(std::make_pair(khat, v));
                    if (it == bucket_family.end())
                        fail("FoldAmbiguous", "no controller family for reachable bucket (khat=" +
                                                  std::to_string(khat) + ", v=" +
                                                  verdict_bits_key(v, tensor.n()) + ")");
                    const AssignmentFamily* bf = it->second;
                    const AssignmentFamily::Member* match = nullptr;
                    for (const auto& m : bf->members)
                        if (m.target_key == member.target_key) match = &m;
                    if (!match)
                        fail("FoldAmbiguous", "bucket (khat=" + std::to_string(khat) +
                                                  ") lacks a decision targeting c=" + member.target_key);
                    auto vit = dnn_assignment.values.find(match->param);
                    if (vit == dnn_assignment.values.end())
                        fail("MissingParameter", "no value for parameter '" + match->param + "'");
                    value += p * vit->second;
                }
            out.values[member.perfect_param] = value;
            pf.members.push_back({member.perfect_param, member.target_key, ""});
        }
        out.families.push_back(std::move(pf));
    }
    return out;
}

// Theorem-2-style structural check: the outgoing parameter names of t=3
// states must agree across states that differ only in the true class k.
inline ValidationReport check_decision_k_independence(const ExplicitPDTMC& augmented) {
    ValidationReport report;
    std::map<std::tuple<std::string, int, uint32_t, std::string>, std::pair<StateId, std::vector<std::string>>>
        seen;
    for (StateId s = 0; s < augmented.num_states(); ++s) {
        const auto& st = augmented.states[s];
        if (st.t != 3 || !st.augmented) continue;
        std::vector<std::string> names;
        for (const auto& e : augmented.transitions[s])
            if (e.param >= 0) names.push_back(augmented.params[e.param].name);
        std::sort(names.begin(), names.end());
        auto key = std::make_tuple(st.z, st.khat, st.verdicts, st.c);
        auto it = seen.find(key);
        if (it == seen.end()) {
            seen.emplace(key, std::make_pair(s, std::move(names)));
        } else if (it->second.second != names) {
            report.items.push_back({Violation::Kind::param_structure, it->second.first, s, 0.0,
                                    "decision parameters differ across true-class variants"});
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Theorem-3-style executable equivalence check

struct EquivalenceEntry {
    std::string query;
    double augmented_value = 0.0;
    double folded_value = 0.0;
    double gap = 0.0;
};

struct EquivalenceReport {
    std::vector<EquivalenceEntry> entries;
    double max_gap = 0.0;

    bool within(double tolerance) const { return max_gap <= tolerance; }
};

inline EquivalenceReport check_equivalence(const ExplicitPDTMC& perfect, const ExplicitPDTMC& augmented,
                                           const ControllerAssignment& dnn_assignment,
                                           const ConfusionTensor& tensor,
                                           const std::vector<pctl::PctlQuery>& queries) {
    EquivalenceReport report;
    auto folded = fold_controller(dnn_assignment, tensor);
    auto inst_aug = augmented.instantiate(dnn_assignment);
    auto inst_perfect = perfect.instantiate(folded);
    for (const auto& q : queries) {
        EquivalenceEntry entry;
        entry.query = q.source;
        entry.augmented_value = pctl::pmc(q, inst_aug);
        entry.folded_value = pctl::pmc(q, inst_perfect);
        if (std::isinf(entry.augmented_value) && std::isinf(entry.folded_value)) entry.gap = 0.0;
        else entry.gap = std::fabs(entry.augmented_value - entry.folded_value);
        report.max_gap = std::max(report.max_gap, entry.gap);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

// ---------------------------------------------------------------------------
// AST-level emitter: regenerates a DNN-perception .pm source for human
// inspection. Requires the paper-shaped module structure: an environment
// module whose branches pin the next class as a constant, and controller
// commands whose guards carry a `k = <literal>` conjunct with bare-parameter
// branch probabilities. The explicit-state augment() above stays the source
// of truth.

namespace detail_emit {

inline std::optional<long long> const_eval_int(const lang::ExprPtr& e,
                                               const std::map<std::string, long long>& consts) {
    using lang::Expr;
    if (!e) return std::nullopt;
    switch (e->op) {
        case Expr::Op::lit_int: return e->ival;
        case Expr::Op::ident: {
            auto it = consts.find(e->name);
            if (it != consts.end()) return it->second;
            return std::nullopt;
        }
        case Expr::Op::neg: {
            auto v = const_eval_int(e->a, consts);
            return v ? std::optional<long long>(-*v) : std::nullopt;
        }
        default: return std::nullopt;
    }
}

// rewrites guard by dropping a single `k = <lit>` conjunct; returns the class
inline lang::ExprPtr strip_class_literal(const lang::ExprPtr& guard, const std::string& k_name,
                                         long long& class_out, bool& found) {
    using lang::Expr;
    if (!guard) return guard;
    if (guard->op == Expr::Op::and_) {
        auto a = strip_class_literal(guard->a, k_name, class_out, found);
        auto b = strip_class_literal(guard->b, k_name, class_out, found);
        if (!a) return b;
        if (!b) return a;
        if (a == guard->a && b == guard->b) return guard;
        Expr e{Expr::Op::and_, guard->pos};
        e.a = a;
        e.b = b;
        return std::make_shared<Expr>(std::move(e));
    }
    if (guard->op == Expr::Op::eq && !found) {
        const auto& lhs = guard->a;
        const auto& rhs = guard->b;
        if (lhs->op == Expr::Op::ident && lhs->name == k_name && rhs->op == Expr::Op::lit_int) {
            class_out = rhs->ival;
            found = true;
            return nullptr;
        }
    }
    return guard;
}

inline lang::ExprPtr lit_int(long long v) {
    lang::Expr e{lang::Expr::Op::lit_int, {}};
    e.ival = v;
    return std::make_shared<lang::Expr>(std::move(e));
}
inline lang::ExprPtr lit_double(double v) {
    lang::Expr e{lang::Expr::Op::lit_double, {}};
    e.dval = v;
    return std::make_shared<lang::Expr>(std::move(e));
}
inline lang::ExprPtr ident(const std::string& name) {
    lang::Expr e{lang::Expr::Op::ident, {}};
    e.name = name;
    return std::make_shared<lang::Expr>(std::move(e));
}
inline lang::ExprPtr conj(lang::ExprPtr a, lang::ExprPtr b) {
    if (!a) return b;
    if (!b) return a;
    lang::Expr e{lang::Expr::Op::and_, {}};
    e.a = std::move(a);
    e.b = std::move(b);
    return std::make_shared<lang::Expr>(std::move(e));
}
inline lang::ExprPtr equals(lang::ExprPtr a, lang::ExprPtr b) {
    lang::Expr e{lang::Expr::Op::eq, {}};
    e.a = std::move(a);
    e.b = std::move(b);
    return std::make_shared<lang::Expr>(std::move(e));
}
inline lang::ExprPtr lit_bool(bool v) {
    lang::Expr e{lang::Expr::Op::lit_bool, {}};
    e.bval = v;
    return std::make_shared<lang::Expr>(std::move(e));
}
inline lang::ExprPtr negate(lang::ExprPtr a) {
    lang::Expr e{lang::Expr::Op::not_, {}};
    e.a = std::move(a);
    return std::make_shared<lang::Expr>(std::move(e));
}

inline lang::ExprPtr verdict_guard(uint32_t verdicts, uint32_t n) {
    lang::ExprPtr g;
    for (uint32_t i = 0; i < n; ++i) {
        lang::ExprPtr bit = ident("v" + std::to_string(i + 1));
        if (!((verdicts >> i) & 1u)) bit = negate(bit);
        g = conj(g, bit);
    }
    return g;
}

} // namespace detail_emit

inline lang::ModelAst emit_dnn_ast(const lang::ModelAst& ast, const ConfusionTensor& tensor,
                                   const std::string& prefix = "") {
    using namespace detail_emit;
    using lang::Expr;
    using lang::Role;

    const int K = tensor.K();
    const uint32_t n = tensor.n();
    const uint32_t nbuckets = 1u << n;

    // constants usable in k-assignments
    std::map<std::string, long long> int_consts;
    for (const auto& c : ast.constants)
        if (c.value)
            if (auto v = const_eval_int(c.value, int_consts)) int_consts[c.name] = *v;

    const lang::ModuleAst* env = nullptr;
    const lang::ModuleAst* controller = nullptr;
    for (const auto& mod : ast.modules) {
        if (mod.role == Role::environment) env = &mod;
        if (mod.role == Role::controller) controller = &mod;
    }
    if (!env || !controller || env->vars.size() != 1)
        fail("MissingRoles", "pm emission needs environment and controller role annotations");
    const std::string k_name = env->vars[0].name;
    long long k_init = env->vars[0].init ? const_eval_int(env->vars[0].init, int_consts).value_or(1) : 1;

    lang::ModelAst out;
    out.constants = ast.constants;
    out.formulas = ast.formulas;
    out.reward_blocks = ast.reward_blocks;
    out.labels = ast.labels;

    for (const auto& mod : ast.modules) {
        if (mod.role == Role::environment) {
            lang::ModuleAst em;
            em.name = mod.name + "WithDNNPerception";
            em.role = Role::environment;
            em.vars = mod.vars;
            // khat tracks the prediction, v1..vn the online verification bits
            lang::VarDecl khat;
            khat.name = "khat";
            khat.lo = lit_int(1);
            khat.hi = lit_int(K);
            khat.init = lit_int(k_init);
            em.vars.push_back(khat);
            for (uint32_t i = 1; i <= n; ++i) {
                lang::VarDecl vd;
                vd.name = "v" + std::to_string(i);
                vd.is_bool = true;
                vd.init = lit_bool(true);
                em.vars.push_back(vd);
            }
            for (const auto& cmd : mod.commands) {
                lang::Command nc;
                nc.action = cmd.action;
                nc.guard = cmd.guard;
                nc.pos = cmd.pos;
                for (const auto& br : cmd.branches) {
                    // the next true class must be statically known
                    std::optional<long long> k_next;
                    for (const auto& [var, rhs] : br.assigns)
                        if (var == k_name) k_next = const_eval_int(rhs, int_consts);
                    if (!k_next) {
                        long long pinned = 0;
                        bool found = false;
                        strip_class_literal(cmd.guard, k_name, pinned, found);
                        if (found) k_next = pinned;
                    }
                    if (!k_next)
                        fail("MalformedController",
                             "pm emission requires monitor branches to pin the next class");
                    for (int khat_next = 1; khat_next <= K; ++khat_next)
                        for (uint32_t v = 0; v < nbuckets; ++v) {
                            double p = tensor.probability(static_cast<int>(*k_next), khat_next, v).value();
                            if (p == 0.0) continue;
                            lang::Command::Branch nb;
                            nb.pos = br.pos;
                            if (br.prob) {
                                Expr mul{Expr::Op::mul, br.pos};
                                mul.a = br.prob;
                                mul.b = lit_double(p);
                                nb.prob = std::make_shared<Expr>(std::move(mul));
                            } else {
                                nb.prob = lit_double(p);
                            }
                            nb.assigns = br.assigns;
                            nb.assigns.emplace_back("khat", lit_int(khat_next));
                            for (uint32_t i = 0; i < n; ++i)
                                nb.assigns.emplace_back("v" + std::to_string(i + 1),
                                                        lit_bool(((v >> i) & 1u) != 0));
                            nc.branches.push_back(std::move(nb));
                        }
                }
                em.commands.push_back(std::move(nc));
            }
            out.modules.push_back(std::move(em));
        } else if (mod.role == Role::controller) {
            lang::ModuleAst cm;
            cm.name = "DNNPerceptionController";
            cm.role = Role::controller;
            cm.vars = mod.vars;
            for (const auto& cmd : mod.commands) {
                long long klit = 0;
                bool found = false;
                auto stripped = strip_class_literal(cmd.guard, k_name, klit, found);
                if (!found)
                    fail("MalformedController",
                         "pm emission requires controller guards to carry a k=<class> conjunct");
                for (uint32_t v = 0; v < nbuckets; ++v) {
                    lang::Command nc;
                    nc.action = cmd.action;
                    nc.pos = cmd.pos;
                    nc.guard = conj(conj(stripped, equals(ident("khat"), lit_int(klit))),
                                    verdict_guard(v, n));
                    if (!nc.guard) nc.guard = lit_bool(true);
                    for (const auto& br : cmd.branches) {
                        if (!br.prob || br.prob->op != Expr::Op::ident)
                            fail("MalformedController",
                                 "pm emission requires bare parameter names in controller branches");
                        std::string fresh = fresh_param_name(prefix, br.prob->name, static_cast<int>(klit),
                                                             static_cast<int>(klit), v, n);
                        lang::Command::Branch nb;
                        nb.pos = br.pos;
                        nb.prob = ident(fresh);
                        if (std::find(out.declared_params.begin(), out.declared_params.end(), fresh) ==
                            out.declared_params.end())
                            out.declared_params.push_back(fresh);
                        nb.assigns = br.assigns;
                        nc.branches.push_back(std::move(nb));
                    }
                    cm.commands.push_back(std::move(nc));
                }
            }
            out.modules.push_back(std::move(cm));
        } else {
            out.modules.push_back(mod);
        }
    }
    return out;
}

inline std::string emit_dnn_pm(const lang::ModelAst& ast, const ConfusionTensor& tensor,
                               const std::string& prefix = "") {
    return lang::pretty_print(emit_dnn_ast(ast, tensor, prefix));
}

} // namespace decsynth
