#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "text.hpp"

namespace decsynth {

inline constexpr double kStochasticTol = 1e-9;
inline constexpr uint64_t kStateCapDefault = 10'000'000;

using StateId = uint32_t;

// State tuple (z,k,t,c), optionally extended with the DNN prediction khat and
// the verification-outcome bits v. z and c are canonical valuation keys
// (module variable values joined by ','; "-" when empty).
struct StateTuple {
    std::string z = "-";
    int k = 1;
    int t = 1;
    std::string c = "-";
    bool augmented = false;
    int khat = 0;            // predicted class, augmented states only
    uint32_t verdicts = 0;   // bit i-1 = outcome of verif_i

    bool operator==(const StateTuple& o) const {
        return z == o.z && k == o.k && t == o.t && c == o.c && augmented == o.augmented &&
               khat == o.khat && verdicts == o.verdicts;
    }
};

struct StateTupleHash {
    size_t operator()(const StateTuple& s) const {
        size_t h = std::hash<std::string>{}(s.z);
        h = h * 1315423911u ^ std::hash<std::string>{}(s.c);
        h = h * 1315423911u ^ static_cast<size_t>(s.k * 131 + s.t * 31 + s.khat * 7 + s.verdicts * 2 + s.augmented);
        return h;
    }
};

// weight = coeff            (param < 0)
//        = coeff * x_param  (param >= 0)
struct TransitionEntry {
    StateId target = 0;
    double coeff = 0.0;
    int32_t param = -1;
};

struct RewardStructure {
    std::string name;
    std::unordered_map<StateId, double> state_rewards;
    std::unordered_map<uint64_t, double> trans_rewards; // key = src<<32 | dst

    static uint64_t edge_key(StateId src, StateId dst) {
        return (static_cast<uint64_t>(src) << 32) | dst;
    }
    double state_reward(StateId s) const {
        auto it = state_rewards.find(s);
        return it == state_rewards.end() ? 0.0 : it->second;
    }
    double trans_reward(StateId src, StateId dst) const {
        auto it = trans_rewards.find(edge_key(src, dst));
        return it == trans_rewards.end() ? 0.0 : it->second;
    }
};

struct ParamInfo {
    std::string name;
    int family = -1;
    std::string target_key;   // c' valuation of this parameter's decision
    std::string perfect_name; // originating perfect-perception parameter (augmented models)
};

// Simplex family: the parameters of one controller decision, one member per
// reachable configuration target; their values must sum to 1.
struct ParamFamily {
    std::vector<int> members;  // param indices in target order
    int k = 0;                 // hosting true class; 0 when shared across classes
    int khat = 0;              // DNN families only
    uint32_t verdicts = 0;     //
    bool dnn = false;
    std::string z_key, c_key;  // first hosting decision context
    bool conflict = false;     // inconsistent co-occurrence, reported by validate()
};

struct Violation {
    enum class Kind {
        row_sum,
        negative_weight,
        dangling_target,
        param_structure,
        duplicate_edge,
        frame_t1,
        frame_t2,
        frame_t3,
        bad_turn_flag,
    };
    Kind kind;
    StateId state = 0;
    StateId other = 0;
    double deviation = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> items;

    bool empty() const { return items.empty(); }

    std::string to_string() const {
        std::ostringstream os;
        for (const auto& v : items) {
            switch (v.kind) {
                case Violation::Kind::row_sum: os << "row-sum"; break;
                case Violation::Kind::negative_weight: os << "negative-weight"; break;
                case Violation::Kind::dangling_target: os << "dangling-target"; break;
                case Violation::Kind::param_structure: os << "param-structure"; break;
                case Violation::Kind::duplicate_edge: os << "duplicate-edge"; break;
                case Violation::Kind::frame_t1: os << "frame-t1"; break;
                case Violation::Kind::frame_t2: os << "frame-t2"; break;
                case Violation::Kind::frame_t3: os << "frame-t3"; break;
                case Violation::Kind::bad_turn_flag: os << "bad-turn-flag"; break;
            }
            os << " state=" << v.state;
            if (v.other != v.state) os << " other=" << v.other;
            if (v.deviation != 0.0) os << " deviation=" << v.deviation;
            if (!v.detail.empty()) os << " (" << v.detail << ")";
            os << '\n';
        }
        return os.str();
    }
};

// A controller instantiation plus the family structure needed to check the
// simplex constraints and to fold DNN decisions back onto perfect-perception
// parameters.
struct AssignmentFamily {
    bool dnn = false;
    int k = 0;
    int khat = 0;
    uint32_t verdicts = 0;
    uint32_t n_verifs = 0;
    std::string z_key, c_key;
    struct Member {
        std::string param;
        std::string target_key;
        std::string perfect_param; // empty unless dnn
    };
    std::vector<Member> members;
};

struct ControllerAssignment {
    enum class Kind { perfect, dnn };
    Kind kind = Kind::perfect;
    std::map<std::string, double> values;
    std::vector<AssignmentFamily> families;

    bool deterministic() const {
        for (const auto& [name, v] : values)
            if (v != 0.0 && v != 1.0) return false;
        return true;
    }
};

// Explicit-state reward-augmented parametric DTMC. Immutable once finalized;
// share freely across threads.
class ExplicitPDTMC {
public:
    std::vector<StateTuple> states;
    StateId initial = 0;
    std::vector<std::vector<TransitionEntry>> transitions;
    std::map<std::string, std::vector<StateId>> labels; // ids kept sorted
    std::vector<RewardStructure> rewards;
    std::vector<ParamInfo> params;
    std::vector<ParamFamily> families;
    int env_classes = 0;  // K; 0 when the model carries no environment role
    uint32_t n_verifs = 0; // verdict arity of augmented models
    bool augmented = false;

    size_t num_states() const { return states.size(); }

    size_t num_transitions() const {
        size_t n = 0;
        for (const auto& row : transitions) n += row.size();
        return n;
    }

    StateId add_state(StateTuple tuple) {
        states.push_back(std::move(tuple));
        transitions.emplace_back();
        return static_cast<StateId>(states.size() - 1);
    }

    int param_index(const std::string& name) const {
        auto it = param_ix_.find(name);
        return it == param_ix_.end() ? -1 : it->second;
    }

    int intern_param(const std::string& name) {
        auto it = param_ix_.find(name);
        if (it != param_ix_.end()) return it->second;
        int ix = static_cast<int>(params.size());
        params.push_back(ParamInfo{name, -1, "", ""});
        param_ix_.emplace(name, ix);
        return ix;
    }

    // Duplicate (target,param) pairs merge by summing coefficients.
    void add_transition(StateId src, StateId dst, double coeff, int param = -1) {
        auto& row = transitions[src];
        for (auto& e : row) {
            if (e.target == dst && e.param == param) {
                e.coeff += coeff;
                return;
            }
        }
        row.push_back(TransitionEntry{dst, coeff, param});
    }

    void add_label(const std::string& name, StateId s) { labels[name].push_back(s); }

    RewardStructure& reward_structure(const std::string& name) {
        for (auto& r : rewards)
            if (r.name == name) return r;
        rewards.push_back(RewardStructure{name, {}, {}});
        return rewards.back();
    }

    const RewardStructure* find_reward(const std::string& name) const {
        for (const auto& r : rewards)
            if (r.name == name) return &r;
        return nullptr;
    }

    bool has_label(const std::string& name) const { return labels.count(name) != 0; }

    bool state_has_label(const std::string& name, StateId s) const {
        auto it = labels.find(name);
        if (it == labels.end()) return false;
        return std::binary_search(it->second.begin(), it->second.end(), s);
    }

    // Sorts label id lists and derives parameter family structure from row
    // co-occurrence. Call once after construction; load() and the builders do.
    void finalize() {
        for (auto& [name, ids] : labels) {
            std::sort(ids.begin(), ids.end());
            ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        }
        rebuild_param_index();
        infer_families();
    }

    ValidationReport validate() const;
    ExplicitPDTMC instantiate(const ControllerAssignment& assignment) const;
    std::vector<StateId> reachable() const;
    ControllerAssignment assignment_shell() const;

    void save(std::ostream& os) const;
    static ExplicitPDTMC load(std::istream& is);
    void save_file(const std::string& path) const {
        std::ofstream os(path);
        if (!os) fail("IoError", "cannot write " + path);
        save(os);
    }
    static ExplicitPDTMC load_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) fail("IoError", "cannot read " + path);
        return load(is);
    }
    std::string to_text() const {
        std::ostringstream os;
        save(os);
        return os.str();
    }

private:
    std::unordered_map<std::string, int> param_ix_;

    void rebuild_param_index() {
        param_ix_.clear();
        for (size_t i = 0; i < params.size(); ++i) param_ix_.emplace(params[i].name, static_cast<int>(i));
    }

    void infer_families();
};

inline void ExplicitPDTMC::infer_families() {
    families.clear();
    for (auto& p : params) p.family = -1;
    std::map<std::vector<int>, int> seen; // row param set (sorted) -> family
    for (StateId s = 0; s < states.size(); ++s) {
        std::vector<int> row_params;
        for (const auto& e : transitions[s])
            if (e.param >= 0) row_params.push_back(e.param);
        if (row_params.empty()) continue;
        std::vector<int> key = row_params;
        std::sort(key.begin(), key.end());
        auto it = seen.find(key);
        if (it == seen.end()) {
            ParamFamily fam;
            fam.members = row_params; // entry order of the defining row
            fam.k = states[s].augmented ? 0 : states[s].k;
            fam.khat = states[s].khat;
            fam.verdicts = states[s].verdicts;
            fam.dnn = states[s].augmented;
            fam.z_key = states[s].z;
            fam.c_key = states[s].c;
            int fid = static_cast<int>(families.size());
            for (const auto& e : transitions[s]) {
                if (e.param < 0) continue;
                if (params[e.param].family >= 0 && params[e.param].family != fid)
                    families[params[e.param].family].conflict = true;
                params[e.param].family = fid;
                params[e.param].target_key = states[e.target].c;
            }
            families.push_back(std::move(fam));
            seen.emplace(std::move(key), fid);
        } else {
            ParamFamily& fam = families[it->second];
            if (!states[s].augmented && fam.k != 0 && fam.k != states[s].k) fam.k = 0;
        }
    }
    // rows that disagree with their family's member set mark it conflicted
    for (StateId s = 0; s < states.size(); ++s) {
        int fam = -1;
        bool mixed = false;
        size_t nparams = 0;
        for (const auto& e : transitions[s]) {
            if (e.param < 0) continue;
            ++nparams;
            int f = params[e.param].family;
            if (fam == -1) fam = f;
            else if (f != fam) mixed = true;
        }
        if (fam >= 0 && (mixed || nparams != families[fam].members.size()))
            families[fam].conflict = true;
    }
}

inline ValidationReport ExplicitPDTMC::validate() const {
    ValidationReport report;
    const size_t n = states.size();
    for (StateId s = 0; s < n; ++s) {
        const auto& row = transitions[s];
        double const_sum = 0.0;
        bool has_param = false, has_const = false;
        std::set<StateId> targets_seen;
        std::vector<int> row_params;
        for (const auto& e : row) {
            if (e.target >= n)
                report.items.push_back({Violation::Kind::dangling_target, s, e.target, 0.0,
                                        "target beyond state count"});
            if (!(e.coeff >= 0.0) || !std::isfinite(e.coeff))
                report.items.push_back({Violation::Kind::negative_weight, s, e.target, e.coeff,
                                        "weight constant negative or non-finite"});
            if (!targets_seen.insert(e.target).second)
                report.items.push_back({Violation::Kind::duplicate_edge, s, e.target, 0.0,
                                        "two entries share (source,target)"});
            if (e.param >= 0) {
                has_param = true;
                row_params.push_back(e.param);
            } else {
                has_const = true;
                const_sum += e.coeff;
            }
        }
        if (!has_param) {
            if (std::fabs(const_sum - 1.0) > kStochasticTol)
                report.items.push_back({Violation::Kind::row_sum, s, s, const_sum - 1.0, ""});
        } else {
            // structural simplex check: exactly the members of one family,
            // each once, unit coefficients, no constant entries mixed in
            if (has_const) {
                report.items.push_back({Violation::Kind::param_structure, s, s, 0.0,
                                        "row mixes constant and parameter entries"});
                continue;
            }
            for (const auto& e : row)
                if (e.param >= 0 && std::fabs(e.coeff - 1.0) > kStochasticTol)
                    report.items.push_back({Violation::Kind::param_structure, s, e.target,
                                            e.coeff - 1.0, "parameter coefficient differs from 1"});
            int fam = params[row_params[0]].family;
            bool same_family = true;
            for (int p : row_params)
                if (params[p].family != fam) same_family = false;
            std::vector<int> sorted_row = row_params;
            std::sort(sorted_row.begin(), sorted_row.end());
            std::vector<int> sorted_fam;
            if (fam >= 0) {
                sorted_fam = families[fam].members;
                std::sort(sorted_fam.begin(), sorted_fam.end());
            }
            if (!same_family || fam < 0 || sorted_row != sorted_fam || families[fam].conflict)
                report.items.push_back({Violation::Kind::param_structure, s, s, 0.0,
                                        "row is not exactly one parameter per target of a single family"});
        }
    }
    return report;
}

inline ExplicitPDTMC ExplicitPDTMC::instantiate(const ControllerAssignment& assignment) const {
    for (const auto& p : params)
        if (!assignment.values.count(p.name))
            fail("MissingParameter", "no value for parameter '" + p.name + "'");
    for (size_t f = 0; f < families.size(); ++f) {
        double sum = 0.0;
        for (int m : families[f].members) sum += assignment.values.at(params[m].name);
        if (std::fabs(sum - 1.0) > kStochasticTol)
            fail("SimplexViolation", "family of '" + params[families[f].members[0]].name +
                                         "' sums to " + fmt_display(sum));
    }
    for (const auto& [name, v] : assignment.values)
        if (!(v >= 0.0 && v <= 1.0))
            fail("SimplexViolation", "parameter '" + name + "' outside [0,1]");

    ExplicitPDTMC out;
    out.states = states;
    out.initial = initial;
    out.labels = labels;
    out.rewards = rewards;
    out.env_classes = env_classes;
    out.n_verifs = n_verifs;
    out.augmented = augmented;
    out.transitions.resize(states.size());
    for (StateId s = 0; s < states.size(); ++s)
        for (const auto& e : transitions[s]) {
            double w = e.coeff;
            if (e.param >= 0) w *= assignment.values.at(params[e.param].name);
            if (w != 0.0) out.add_transition(s, e.target, w);
        }
    out.finalize();
    return out;
}

inline std::vector<StateId> ExplicitPDTMC::reachable() const {
    std::vector<char> seen(states.size(), 0);
    std::vector<StateId> queue{initial}, out;
    if (states.empty()) return out;
    seen[initial] = 1;
    while (!queue.empty()) {
        StateId s = queue.back();
        queue.pop_back();
        out.push_back(s);
        for (const auto& e : transitions[s]) {
            if (e.target >= states.size()) continue;
            if ((e.coeff != 0.0 || e.param >= 0) && !seen[e.target]) {
                seen[e.target] = 1;
                queue.push_back(e.target);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline ControllerAssignment ExplicitPDTMC::assignment_shell() const {
    ControllerAssignment a;
    a.kind = augmented ? ControllerAssignment::Kind::dnn : ControllerAssignment::Kind::perfect;
    for (const auto& fam : families) {
        AssignmentFamily af;
        af.dnn = fam.dnn;
        af.k = fam.k;
        af.khat = fam.khat;
        af.verdicts = fam.verdicts;
        af.n_verifs = n_verifs;
        af.z_key = fam.z_key;
        af.c_key = fam.c_key;
        for (int m : fam.members)
            af.members.push_back({params[m].name, params[m].target_key, params[m].perfect_name});
        a.families.push_back(std::move(af));
    }
    return a;
}

// ---------------------------------------------------------------------------
// serialized explicit model format

inline std::string verdict_bits(uint32_t mask, uint32_t n) {
    if (n == 0) return "-";
    std::string s(n, '0');
    for (uint32_t i = 0; i < n; ++i)
        if (mask & (1u << i)) s[i] = '1';
    return s;
}

inline uint32_t parse_verdict_bits(std::string_view s, uint32_t& n) {
    if (s == "-") {
        n = 0;
        return 0;
    }
    uint32_t mask = 0;
    n = static_cast<uint32_t>(s.size());
    for (uint32_t i = 0; i < n; ++i) {
        if (s[i] == '1') mask |= 1u << i;
        else if (s[i] != '0') fail("FormatError", "bad verdict bits '" + std::string(s) + "'");
    }
    return mask;
}

inline void ExplicitPDTMC::save(std::ostream& os) const {
    os << "pdtmc " << states.size() << ' ' << num_transitions() << ' ' << params.size() << '\n';
    for (StateId s = 0; s < states.size(); ++s) {
        const auto& st = states[s];
        os << "state " << s << " z=" << st.z << " k=" << st.k << " t=" << st.t << " c=" << st.c;
        if (st.augmented) os << " khat=" << st.khat << " v=" << verdict_bits(st.verdicts, n_verifs);
        os << '\n';
    }
    os << "init " << initial << '\n';
    for (StateId s = 0; s < states.size(); ++s)
        for (const auto& e : transitions[s]) {
            os << "trans " << s << ' ' << e.target << ' ' << fmt_double(e.coeff);
            if (e.param >= 0) os << '*' << params[e.param].name;
            os << '\n';
        }
    for (const auto& [name, ids] : labels) {
        os << "label " << name;
        for (StateId s : ids) os << ' ' << s;
        os << '\n';
    }
    for (const auto& r : rewards) {
        std::vector<StateId> sids;
        for (const auto& [s, v] : r.state_rewards) sids.push_back(s);
        std::sort(sids.begin(), sids.end());
        for (StateId s : sids)
            os << "reward " << r.name << " state " << s << ' ' << fmt_double(r.state_rewards.at(s)) << '\n';
        std::vector<uint64_t> eids;
        for (const auto& [e, v] : r.trans_rewards) eids.push_back(e);
        std::sort(eids.begin(), eids.end());
        for (uint64_t e : eids)
            os << "reward " << r.name << " trans " << (e >> 32) << ' ' << (e & 0xffffffffu) << ' '
               << fmt_double(r.trans_rewards.at(e)) << '\n';
    }
}

inline ExplicitPDTMC ExplicitPDTMC::load(std::istream& is) {
    ExplicitPDTMC m;
    std::string line;
    size_t declared_states = 0, declared_trans = 0, declared_params = 0;
    bool header = false;
    size_t lineno = 0;
    auto bad = [&](const std::string& what) {
        fail("FormatError", what + " at line " + std::to_string(lineno));
    };
    while (std::getline(is, line)) {
        ++lineno;
        auto toks = tokens(line);
        if (toks.empty()) continue;
        if (toks[0] == "pdtmc") {
            if (toks.size() != 4) bad("malformed header");
            long long a, b, c;
            if (!parse_ll(toks[1], a) || !parse_ll(toks[2], b) || !parse_ll(toks[3], c)) bad("malformed header");
            declared_states = a;
            declared_trans = b;
            declared_params = c;
            m.states.reserve(declared_states);
            header = true;
        } else if (toks[0] == "state") {
            if (!header) bad("state before header");
            long long id;
            if (toks.size() < 6 || !parse_ll(toks[1], id)) bad("malformed state line");
            if (static_cast<size_t>(id) != m.states.size()) bad("state ids must be dense and ordered");
            StateTuple st;
            for (size_t i = 2; i < toks.size(); ++i) {
                auto kv = split(toks[i], '=');
                if (kv.size() != 2) bad("malformed state field");
                long long v;
                if (kv[0] == "z") st.z = std::string(kv[1]);
                else if (kv[0] == "c") st.c = std::string(kv[1]);
                else if (kv[0] == "k" && parse_ll(kv[1], v)) st.k = static_cast<int>(v);
                else if (kv[0] == "t" && parse_ll(kv[1], v)) st.t = static_cast<int>(v);
                else if (kv[0] == "khat" && parse_ll(kv[1], v)) {
                    st.khat = static_cast<int>(v);
                    st.augmented = true;
                } else if (kv[0] == "v") {
                    uint32_t n = 0;
                    st.verdicts = parse_verdict_bits(kv[1], n);
                    st.augmented = true;
                    if (m.states.empty()) m.n_verifs = n;
                    else if (n != m.n_verifs) bad("inconsistent verdict arity");
                } else bad("unknown state field '" + std::string(kv[0]) + "'");
            }
            if (st.augmented) m.augmented = true;
            m.add_state(std::move(st));
        } else if (toks[0] == "init") {
            long long id;
            if (toks.size() != 2 || !parse_ll(toks[1], id)) bad("malformed init line");
            m.initial = static_cast<StateId>(id);
        } else if (toks[0] == "trans") {
            long long src, dst;
            if (toks.size() != 4 || !parse_ll(toks[1], src) || !parse_ll(toks[2], dst)) bad("malformed trans line");
            std::string_view w = toks[3];
            int param = -1;
            double coeff = 0.0;
            size_t star = w.find('*');
            std::string_view num = star == std::string_view::npos ? w : w.substr(0, star);
            if (!parse_double(num, coeff)) bad("malformed weight");
            if (star != std::string_view::npos)
                param = m.intern_param(std::string(w.substr(star + 1)));
            if (static_cast<size_t>(src) >= m.states.size()) bad("trans source out of range");
            m.add_transition(static_cast<StateId>(src), static_cast<StateId>(dst), coeff, param);
        } else if (toks[0] == "label") {
            if (toks.size() < 2) bad("malformed label line");
            auto& ids = m.labels[std::string(toks[1])];
            for (size_t i = 2; i < toks.size(); ++i) {
                long long id;
                if (!parse_ll(toks[i], id)) bad("malformed label id");
                ids.push_back(static_cast<StateId>(id));
            }
        } else if (toks[0] == "reward") {
            if (toks.size() < 4) bad("malformed reward line");
            auto& r = m.reward_structure(std::string(toks[1]));
            if (toks[2] == "state") {
                long long id;
                double v;
                if (toks.size() != 5 || !parse_ll(toks[3], id) || !parse_double(toks[4], v)) bad("malformed state reward");
                r.state_rewards[static_cast<StateId>(id)] += v;
            } else if (toks[2] == "trans") {
                long long src, dst;
                double v;
                if (toks.size() != 6 || !parse_ll(toks[3], src) || !parse_ll(toks[4], dst) ||
                    !parse_double(toks[5], v))
                    bad("malformed transition reward");
                r.trans_rewards[RewardStructure::edge_key(static_cast<StateId>(src),
                                                          static_cast<StateId>(dst))] += v;
            } else bad("unknown reward kind");
        } else bad("unknown directive '" + std::string(toks[0]) + "'");
    }
    if (!header) fail("FormatError", "missing pdtmc header");
    if (m.states.size() != declared_states)
        fail("FormatError", "header declares " + std::to_string(declared_states) + " states, found " +
                                std::to_string(m.states.size()));
    if (m.num_transitions() != declared_trans)
        fail("FormatError", "header declares " + std::to_string(declared_trans) + " transitions, found " +
                                std::to_string(m.num_transitions()));
    if (m.params.size() != declared_params)
        fail("FormatError", "header declares " + std::to_string(declared_params) + " parameters, found " +
                                std::to_string(m.params.size()));
    if (m.initial >= m.states.size() && !m.states.empty()) fail("FormatError", "initial state out of range");
    // recover K from environment classes seen in tuples
    int kmax = 0;
    for (const auto& st : m.states) kmax = std::max(kmax, std::max(st.k, st.khat));
    m.env_classes = kmax;
    m.finalize();
    return m;
}

// Eq.-style frame-condition check: at t=1 only z may move (t'<3), at t=2 only
// the environment (and perception) components move (t'=3), at t=3 only the
// configuration moves (t'=1). Augmented states additionally pin (khat,v) at
// t=1/t=3 and allow them to move at t=2.
inline ValidationReport check_turn_structure(const ExplicitPDTMC& m) {
    ValidationReport report;
    for (StateId s = 0; s < m.states.size(); ++s) {
        const auto& a = m.states[s];
        if (a.t < 1 || a.t > 3) {
            report.items.push_back({Violation::Kind::bad_turn_flag, s, s, 0.0, "t outside {1,2,3}"});
            continue;
        }
        for (const auto& e : m.transitions[s]) {
            if (e.coeff == 0.0) continue;
            if (e.target >= m.states.size()) continue;
            const auto& b = m.states[e.target];
            if (a.augmented != b.augmented) {
                report.items.push_back({Violation::Kind::param_structure, s, e.target, 0.0,
                                        "mixed augmented and plain states"});
                continue;
            }
            switch (a.t) {
                case 1:
                    if (b.k != a.k || b.c != a.c || b.t >= 3 ||
                        (a.augmented && (b.khat != a.khat || b.verdicts != a.verdicts)))
                        report.items.push_back({Violation::Kind::frame_t1, s, e.target, 0.0,
                                                "t=1 step must fix k, c (and khat, v) with t'<3"});
                    break;
                case 2:
                    if (b.z != a.z || b.c != a.c || b.t != 3)
                        report.items.push_back({Violation::Kind::frame_t2, s, e.target, 0.0,
                                                "t=2 step must fix z, c with t'=3"});
                    break;
                case 3:
                    if (b.z != a.z || b.k != a.k || b.t != 1 ||
                        (a.augmented && (b.khat != a.khat || b.verdicts != a.verdicts)))
                        report.items.push_back({Violation::Kind::frame_t3, s, e.target, 0.0,
                                                "t=3 step must fix z, k (and khat, v) with t'=1"});
                    break;
            }
        }
    }
    return report;
}

} // namespace decsynth
