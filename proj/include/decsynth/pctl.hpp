#pragma once

#include <cctype>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "markov.hpp"

namespace decsynth::pctl {

enum class Cmp { ge, gt, lt, le, query };

inline std::string cmp_text(Cmp c) {
    switch (c) {
        case Cmp::ge: return ">=";
        case Cmp::gt: return ">";
        case Cmp::lt: return "<";
        case Cmp::le: return "<=";
        case Cmp::query: return "=?";
    }
    return "?";
}

struct StateFormula;
using FormulaPtr = std::shared_ptr<const StateFormula>;

enum class PathKind { next, until, bounded_until };

struct PathFormula {
    PathKind kind = PathKind::next;
    FormulaPtr lhs; // until only
    FormulaPtr rhs;
    long long bound = 0; // bounded_until
};

struct StateFormula {
    enum class Kind { truth, atom, conj, disj, neg, implies, prob };
    Kind kind = Kind::truth;
    std::string atom;
    FormulaPtr a, b;
    // nested probability operator (always carries a comparison bound)
    std::shared_ptr<const PathFormula> path;
    Cmp cmp = Cmp::ge;
    double threshold = 0.0;
};

enum class RewardKind { cumulative, reach };

// Parsed P- or R-query of the supported PCTL fragment.
struct PctlQuery {
    enum class Kind { prob, reward };
    Kind kind = Kind::prob;
    Cmp cmp = Cmp::query;
    double threshold = 0.0;
    PathFormula path;           // prob queries
    std::string reward_name;    // reward queries
    RewardKind reward_kind = RewardKind::cumulative;
    long long bound = 0;        // C<=k
    FormulaPtr target;          // F phi
    std::string source;         // original text, for artifacts and messages
};

// ---------------------------------------------------------------------------
// parser

namespace detail {

struct Lexer {
    std::string_view src;
    size_t pos = 0;

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }
    bool eof() {
        skip_ws();
        return pos >= src.size();
    }
    bool peek(std::string_view tok) {
        skip_ws();
        return src.substr(pos, tok.size()) == tok;
    }
    bool accept(std::string_view tok) {
        if (!peek(tok)) return false;
        pos += tok.size();
        return true;
    }
    void expect(std::string_view tok) {
        if (!accept(tok))
            fail("SyntaxError", "expected '" + std::string(tok) + "' at position " + std::to_string(pos) +
                                    " in PCTL query");
    }
    std::string quoted_atom() {
        skip_ws();
        if (pos >= src.size() || src[pos] != '"') fail("SyntaxError", "expected quoted atomic proposition");
        size_t end = src.find('"', pos + 1);
        if (end == std::string_view::npos) fail("SyntaxError", "unterminated atomic proposition");
        std::string out(src.substr(pos + 1, end - pos - 1));
        pos = end + 1;
        return out;
    }
    double number() {
        skip_ws();
        size_t start = pos;
        while (pos < src.size() &&
               (std::isdigit(static_cast<unsigned char>(src[pos])) || src[pos] == '.' || src[pos] == 'e' ||
                src[pos] == 'E' || src[pos] == '+' || src[pos] == '-'))
            ++pos;
        double v;
        if (pos == start || !parse_double(src.substr(start, pos - start), v))
            fail("SyntaxError", "expected number at position " + std::to_string(start));
        return v;
    }
    long long integer() {
        double v = number();
        long long i = static_cast<long long>(v);
        if (static_cast<double>(i) != v) fail("SyntaxError", "expected integer bound");
        return i;
    }
};

inline Cmp parse_cmp(Lexer& lx) {
    if (lx.accept("=?")) return Cmp::query;
    if (lx.accept(">=")) return Cmp::ge;
    if (lx.accept("<=")) return Cmp::le;
    if (lx.accept(">")) return Cmp::gt;
    if (lx.accept("<")) return Cmp::lt;
    fail("SyntaxError", "expected comparison or =? at position " + std::to_string(lx.pos));
}

FormulaPtr parse_formula(Lexer& lx);
PathFormula parse_path(Lexer& lx);

inline FormulaPtr parse_primary(Lexer& lx) {
    auto node = std::make_shared<StateFormula>();
    if (lx.accept("(")) {
        auto inner = parse_formula(lx);
        lx.expect(")");
        return inner;
    }
    if (lx.accept("!")) {
        node->kind = StateFormula::Kind::neg;
        node->a = parse_primary(lx);
        return node;
    }
    if (lx.accept("true")) {
        node->kind = StateFormula::Kind::truth;
        return node;
    }
    if (lx.peek("\"")) {
        node->kind = StateFormula::Kind::atom;
        node->atom = lx.quoted_atom();
        return node;
    }
    if (lx.accept("P")) {
        node->kind = StateFormula::Kind::prob;
        node->cmp = parse_cmp(lx);
        if (node->cmp == Cmp::query)
            fail("SyntaxError", "nested P operator requires a comparison bound, not =?");
        node->threshold = lx.number();
        if (node->threshold < 0.0 || node->threshold > 1.0)
            fail("SyntaxError", "probability bound outside [0,1]");
        lx.expect("[");
        node->path = std::make_shared<PathFormula>(parse_path(lx));
        lx.expect("]");
        return node;
    }
    fail("SyntaxError", "expected state formula at position " + std::to_string(lx.pos));
}

inline FormulaPtr parse_conj(Lexer& lx) {
    auto lhs = parse_primary(lx);
    while (lx.accept("&")) {
        auto node = std::make_shared<StateFormula>();
        node->kind = StateFormula::Kind::conj;
        node->a = lhs;
        node->b = parse_primary(lx);
        lhs = node;
    }
    return lhs;
}

inline FormulaPtr parse_disj(Lexer& lx) {
    auto lhs = parse_conj(lx);
    while (lx.accept("|")) {
        auto node = std::make_shared<StateFormula>();
        node->kind = StateFormula::Kind::disj;
        node->a = lhs;
        node->b = parse_conj(lx);
        lhs = node;
    }
    return lhs;
}

// disjunction and implication are accepted as derived sugar over Eq-style
// not/and
inline FormulaPtr parse_formula(Lexer& lx) {
    auto lhs = parse_disj(lx);
    if (lx.accept("=>")) {
        auto node = std::make_shared<StateFormula>();
        node->kind = StateFormula::Kind::implies;
        node->a = lhs;
        node->b = parse_formula(lx);
        return node;
    }
    return lhs;
}

inline PathFormula parse_path(Lexer& lx) {
    PathFormula pf;
    if (lx.accept("X")) {
        pf.kind = PathKind::next;
        pf.rhs = parse_formula(lx);
        return pf;
    }
    pf.lhs = parse_formula(lx);
    lx.expect("U");
    if (lx.accept("<=")) {
        pf.kind = PathKind::bounded_until;
        pf.bound = lx.integer();
        if (pf.bound < 1) fail("SyntaxError", "bounded until requires k >= 1");
    } else {
        pf.kind = PathKind::until;
    }
    pf.rhs = parse_formula(lx);
    return pf;
}

} // namespace detail

inline PctlQuery parse_query(std::string_view text) {
    detail::Lexer lx{text, 0};
    PctlQuery q;
    q.source = std::string(trim(text));
    if (lx.accept("P")) {
        q.kind = PctlQuery::Kind::prob;
        q.cmp = detail::parse_cmp(lx);
        if (q.cmp != Cmp::query) {
            q.threshold = lx.number();
            if (q.threshold < 0.0 || q.threshold > 1.0)
                fail("SyntaxError", "probability bound outside [0,1]");
        }
        lx.expect("[");
        q.path = detail::parse_path(lx);
        lx.expect("]");
    } else if (lx.accept("R")) {
        q.kind = PctlQuery::Kind::reward;
        lx.expect("{");
        q.reward_name = lx.quoted_atom();
        lx.expect("}");
        q.cmp = detail::parse_cmp(lx);
        if (q.cmp != Cmp::query) {
            q.threshold = lx.number();
            if (q.threshold < 0.0) fail("SyntaxError", "reward bound must be non-negative");
        }
        lx.expect("[");
        if (lx.accept("C")) {
            lx.expect("<=");
            q.reward_kind = RewardKind::cumulative;
            q.bound = lx.integer();
            if (q.bound < 1) fail("SyntaxError", "cumulative reward requires k >= 1");
        } else if (lx.accept("F")) {
            q.reward_kind = RewardKind::reach;
            q.target = detail::parse_formula(lx);
        } else {
            fail("SyntaxError", "expected C<=k or F inside reward query");
        }
        lx.expect("]");
    } else {
        fail("UnknownOperator", "query must start with P or R");
    }
    if (!lx.eof()) fail("SyntaxError", "trailing input after query");
    return q;
}

// ---------------------------------------------------------------------------
// quantitative checking

namespace detail {

struct Checker {
    const ExplicitPDTMC& m;
    size_t n;
    std::vector<std::vector<TransitionEntry>> pred; // reversed edges

    explicit Checker(const ExplicitPDTMC& model) : m(model), n(model.num_states()) {
        for (StateId s = 0; s < n; ++s)
            for (const auto& e : m.transitions[s]) {
                if (e.param >= 0)
                    fail("SolverFailure", "model still contains parameter '" + m.params[e.param].name +
                                              "'; instantiate it first");
            }
        pred.resize(n);
        for (StateId s = 0; s < n; ++s)
            for (const auto& e : m.transitions[s])
                if (e.coeff > 0.0) pred[e.target].push_back({s, e.coeff, -1});
    }

    std::vector<char> sat(const FormulaPtr& f) const {
        std::vector<char> out(n, 0);
        switch (f->kind) {
            case StateFormula::Kind::truth:
                std::fill(out.begin(), out.end(), 1);
                break;
            case StateFormula::Kind::atom: {
                auto it = m.labels.find(f->atom);
                if (it == m.labels.end()) fail("UnknownLabel", "no label '" + f->atom + "' in model");
                for (StateId s : it->second)
                    if (s < n) out[s] = 1;
                break;
            }
            case StateFormula::Kind::conj: {
                auto a = sat(f->a), b = sat(f->b);
                for (size_t i = 0; i < n; ++i) out[i] = a[i] && b[i];
                break;
            }
            case StateFormula::Kind::disj: {
                auto a = sat(f->a), b = sat(f->b);
                for (size_t i = 0; i < n; ++i) out[i] = a[i] || b[i];
                break;
            }
            case StateFormula::Kind::implies: {
                auto a = sat(f->a), b = sat(f->b);
                for (size_t i = 0; i < n; ++i) out[i] = !a[i] || b[i];
                break;
            }
            case StateFormula::Kind::neg: {
                auto a = sat(f->a);
                for (size_t i = 0; i < n; ++i) out[i] = !a[i];
                break;
            }
            case StateFormula::Kind::prob: {
                auto probs = path_probabilities(*f->path);
                for (size_t i = 0; i < n; ++i) out[i] = compare(probs[i], f->cmp, f->threshold);
                break;
            }
        }
        return out;
    }

    static bool compare(double v, Cmp cmp, double threshold) {
        switch (cmp) {
            case Cmp::ge: return v >= threshold;
            case Cmp::gt: return v > threshold;
            case Cmp::lt: return v < threshold;
            case Cmp::le: return v <= threshold;
            case Cmp::query: return false;
        }
        return false;
    }

    std::vector<double> path_probabilities(const PathFormula& pf) const {
        switch (pf.kind) {
            case PathKind::next: {
                auto target = sat(pf.rhs);
                std::vector<double> out(n, 0.0);
                for (StateId s = 0; s < n; ++s) {
                    double acc = 0.0;
                    for (const auto& e : m.transitions[s]) acc += target[e.target] ? e.coeff : 0.0;
                    out[s] = clamp01(acc);
                }
                return out;
            }
            case PathKind::bounded_until: {
                auto a = sat(pf.lhs), b = sat(pf.rhs);
                std::vector<double> v(n, 0.0), next_v(n, 0.0);
                for (size_t i = 0; i < n; ++i) v[i] = b[i] ? 1.0 : 0.0;
                for (long long step = 0; step < pf.bound; ++step) {
                    for (StateId s = 0; s < n; ++s) {
                        if (b[s]) next_v[s] = 1.0;
                        else if (!a[s]) next_v[s] = 0.0;
                        else {
                            double acc = 0.0;
                            for (const auto& e : m.transitions[s]) acc += e.coeff * v[e.target];
                            next_v[s] = acc;
                        }
                    }
                    v.swap(next_v);
                }
                for (auto& x : v) x = clamp01(x);
                return v;
            }
            case PathKind::until: return until_probabilities(sat(pf.lhs), sat(pf.rhs));
        }
        return {};
    }

    // backward reachability of `targets` through states satisfying `through`
    std::vector<char> back_reach(const std::vector<char>& through, const std::vector<char>& targets) const {
        std::vector<char> seen(n, 0);
        std::vector<StateId> stack;
        for (StateId s = 0; s < n; ++s)
            if (targets[s]) {
                seen[s] = 1;
                stack.push_back(s);
            }
        while (!stack.empty()) {
            StateId s = stack.back();
            stack.pop_back();
            for (const auto& p : pred[s]) {
                StateId q = p.target;
                if (!seen[q] && through[q] && !targets[q]) {
                    seen[q] = 1;
                    stack.push_back(q);
                }
            }
        }
        return seen;
    }

    std::vector<double> until_probabilities(const std::vector<char>& a, const std::vector<char>& b) const {
        // prob0: cannot reach b through a at all
        auto can_reach = back_reach(a, b);
        std::vector<char> prob0(n, 0);
        for (size_t i = 0; i < n; ++i) prob0[i] = !can_reach[i];
        // prob1: complement of states that can reach prob0 through a\b
        std::vector<char> through(n, 0);
        for (size_t i = 0; i < n; ++i) through[i] = a[i] && !b[i];
        auto reaches_zero = back_reach(through, prob0);
        std::vector<char> prob1(n, 0);
        for (size_t i = 0; i < n; ++i) prob1[i] = !reaches_zero[i];

        std::vector<double> out(n, 0.0);
        std::vector<StateId> unknown;
        std::vector<int> index(n, -1);
        for (StateId s = 0; s < n; ++s) {
            if (prob1[s]) out[s] = 1.0;
            else if (prob0[s]) out[s] = 0.0;
            else {
                index[s] = static_cast<int>(unknown.size());
                unknown.push_back(s);
            }
        }
        if (unknown.empty()) return out;

        // x = Ax + r over the unknown block
        SparseSystem sys(unknown.size());
        for (size_t i = 0; i < unknown.size(); ++i) {
            StateId s = unknown[i];
            for (const auto& e : m.transitions[s]) {
                if (index[e.target] >= 0) sys.add(i, index[e.target], e.coeff);
                else if (prob1[e.target]) sys.rhs[i] += e.coeff;
            }
        }
        auto x = sys.solve();
        for (size_t i = 0; i < unknown.size(); ++i) out[unknown[i]] = clamp01(x[i]);
        return out;
    }

    std::vector<double> cumulative_rewards(const RewardStructure& r, long long k) const {
        std::vector<double> v(n, 0.0), next_v(n, 0.0);
        for (long long step = 0; step < k; ++step) {
            for (StateId s = 0; s < n; ++s) {
                double acc = r.state_reward(s);
                for (const auto& e : m.transitions[s])
                    acc += e.coeff * (r.trans_reward(s, e.target) + v[e.target]);
                next_v[s] = acc;
            }
            v.swap(next_v);
        }
        return v;
    }

    std::vector<double> reach_rewards(const RewardStructure& r, const std::vector<char>& b) const {
        std::vector<char> truth(n, 1);
        auto can_reach = back_reach(truth, b);
        std::vector<char> prob0(n, 0);
        for (size_t i = 0; i < n; ++i) prob0[i] = !can_reach[i];
        std::vector<char> through(n, 0);
        for (size_t i = 0; i < n; ++i) through[i] = !b[i];
        auto reaches_zero = back_reach(through, prob0);

        const double inf = std::numeric_limits<double>::infinity();
        std::vector<double> out(n, inf);
        std::vector<StateId> unknown;
        std::vector<int> index(n, -1);
        for (StateId s = 0; s < n; ++s) {
            if (b[s]) out[s] = 0.0;
            else if (!reaches_zero[s]) {
                index[s] = static_cast<int>(unknown.size());
                unknown.push_back(s);
            }
        }
        if (unknown.empty()) return out;

        SparseSystem sys(unknown.size());
        for (size_t i = 0; i < unknown.size(); ++i) {
            StateId s = unknown[i];
            double base = r.state_reward(s);
            for (const auto& e : m.transitions[s]) {
                base += e.coeff * r.trans_reward(s, e.target);
                if (index[e.target] >= 0) sys.add(i, index[e.target], e.coeff);
            }
            sys.rhs[i] += base;
        }
        auto x = sys.solve();
        for (size_t i = 0; i < unknown.size(); ++i) out[unknown[i]] = std::max(0.0, x[i]);
        return out;
    }

    static double clamp01(double v) { return v < 0.0 ? 0.0 : v; }

    // Linear system x = Ax + rhs. Gaussian elimination with partial pivoting
    // up to 20k unknowns, Gauss-Seidel beyond that.
    struct SparseSystem {
        size_t n;
        std::vector<std::vector<std::pair<int, double>>> rows;
        std::vector<double> rhs;

        explicit SparseSystem(size_t size) : n(size), rows(size), rhs(size, 0.0) {}

        void add(size_t row, int col, double coeff) { rows[row].emplace_back(col, coeff); }

        std::vector<double> solve() const {
            if (n <= 20000) return solve_dense();
            return solve_gauss_seidel();
        }

        std::vector<double> solve_dense() const {
            std::vector<double> mat(n * n, 0.0);
            std::vector<double> b = rhs;
            for (size_t i = 0; i < n; ++i) {
                mat[i * n + i] = 1.0;
                for (const auto& [j, c] : rows[i]) mat[i * n + j] -= c;
            }
            std::vector<int> perm(n);
            for (size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
            for (size_t col = 0; col < n; ++col) {
                size_t pivot = col;
                double best = std::fabs(mat[perm[col] * n + col]);
                for (size_t r = col + 1; r < n; ++r) {
                    double v = std::fabs(mat[perm[r] * n + col]);
                    if (v > best) {
                        best = v;
                        pivot = r;
                    }
                }
                if (best < 1e-12) fail("SolverFailure", "singular linear system");
                std::swap(perm[col], perm[pivot]);
                double diag = mat[perm[col] * n + col];
                for (size_t r = col + 1; r < n; ++r) {
                    double factor = mat[perm[r] * n + col] / diag;
                    if (factor == 0.0) continue;
                    mat[perm[r] * n + col] = 0.0;
                    for (size_t j = col + 1; j < n; ++j) mat[perm[r] * n + j] -= factor * mat[perm[col] * n + j];
                    b[perm[r]] -= factor * b[perm[col]];
                }
            }
            std::vector<double> x(n, 0.0);
            for (size_t ri = n; ri-- > 0;) {
                double acc = b[perm[ri]];
                for (size_t j = ri + 1; j < n; ++j) acc -= mat[perm[ri] * n + j] * x[j];
                x[ri] = acc / mat[perm[ri] * n + ri];
            }
            return x;
        }

        std::vector<double> solve_gauss_seidel() const {
            std::vector<double> x(n, 0.0);
            std::vector<double> diag(n, 1.0);
            for (size_t i = 0; i < n; ++i)
                for (const auto& [j, c] : rows[i])
                    if (static_cast<size_t>(j) == i) diag[i] -= c;
            const long long max_sweeps = 1'000'000;
            for (long long sweep = 0; sweep < max_sweeps; ++sweep) {
                double residual = 0.0;
                for (size_t i = 0; i < n; ++i) {
                    double acc = rhs[i];
                    for (const auto& [j, c] : rows[i])
                        if (static_cast<size_t>(j) != i) acc += c * x[j];
                    if (std::fabs(diag[i]) < 1e-300) fail("SolverFailure", "zero diagonal in Gauss-Seidel");
                    double nx = acc / diag[i];
                    residual = std::max(residual, std::fabs(nx - x[i]));
                    x[i] = nx;
                }
                if (residual <= 1e-12) return x;
            }
            fail("SolverFailure", "Gauss-Seidel did not reach residual 1e-12 within 1e6 sweeps");
        }
    };
};

} // namespace detail

// Quantitative value of the query at the initial state. The model must be
// fully instantiated. R[F phi] yields +inf when the target is reached with
// probability < 1 from s0.
inline double pmc(const PctlQuery& q, const ExplicitPDTMC& model) {
    detail::Checker chk(model);
    if (q.kind == PctlQuery::Kind::prob) {
        auto v = chk.path_probabilities(q.path);
        return v[model.initial];
    }
    const RewardStructure* r = model.find_reward(q.reward_name);
    if (!r) fail("UnknownRewardStructure", "no reward structure '" + q.reward_name + "' in model");
    if (q.reward_kind == RewardKind::cumulative) {
        auto v = chk.cumulative_rewards(*r, q.bound);
        return v[model.initial];
    }
    auto v = chk.reach_rewards(*r, chk.sat(q.target));
    return v[model.initial];
}

inline bool compare(double value, Cmp cmp, double threshold) {
    return detail::Checker::compare(value, cmp, threshold);
}

// Constraint check: pmc value compared against the query's bound, exactly.
inline bool satisfies(const PctlQuery& q, const ExplicitPDTMC& model) {
    if (q.cmp == Cmp::query)
        fail("UnknownOperator", "satisfies() needs a comparison bound, got '=?': " + q.source);
    double v = pmc(q, model);
    return detail::Checker::compare(v, q.cmp, q.threshold);
}

} // namespace decsynth::pctl
