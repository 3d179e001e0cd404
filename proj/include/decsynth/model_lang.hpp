#pragma once

// Parser and state-space builder for the PRISM-style modelling subset used by
// the case-study models: constants, formulas, modules with guarded
// probabilistic commands, synchronisation over shared action labels, reward
// blocks and label definitions. docs/model-language.md carries the grammar.

#include <cctype>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "markov.hpp"

namespace decsynth::lang {

struct SourcePos {
    int line = 0, col = 0;
    std::string str() const { return std::to_string(line) + ":" + std::to_string(col); }
};

[[noreturn]] inline void fail_at(const std::string& code, SourcePos pos, const std::string& msg) {
    fail(code, msg + " (at " + pos.str() + ")");
}

// ---------------------------------------------------------------------------
// expressions

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Op {
        lit_int, lit_double, lit_bool, ident,
        add, sub, mul, divide,
        eq, ne, lt, le, gt, ge,
        and_, or_, not_, neg, ternary,
    };
    Op op;
    SourcePos pos;
    long long ival = 0;
    double dval = 0.0;
    bool bval = false;
    std::string name;
    ExprPtr a, b, c;
};

struct Value {
    enum class Type { int_, double_, bool_ };
    Type type = Type::int_;
    long long i = 0;
    double d = 0.0;
    bool b = false;

    static Value of_int(long long v) { return {Type::int_, v, 0.0, false}; }
    static Value of_double(double v) { return {Type::double_, 0, v, false}; }
    static Value of_bool(bool v) { return {Type::bool_, 0, 0.0, v}; }

    double as_double() const { return type == Type::double_ ? d : (type == Type::int_ ? static_cast<double>(i) : (b ? 1.0 : 0.0)); }
    bool is_numeric() const { return type != Type::bool_; }
};

struct Command {
    std::string action; // empty = unlabeled
    ExprPtr guard;
    struct Branch {
        ExprPtr prob; // null = probability 1
        std::vector<std::pair<std::string, ExprPtr>> assigns;
        SourcePos pos;
    };
    std::vector<Branch> branches;
    SourcePos pos;
};

enum class Role { plain, managed, environment, controller, turn };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::plain: return "plain";
        case Role::managed: return "managed";
        case Role::environment: return "environment";
        case Role::controller: return "controller";
        case Role::turn: return "turn";
    }
    return "plain";
}

struct VarDecl {
    std::string name;
    bool is_bool = false;
    ExprPtr lo, hi;  // integer ranges
    ExprPtr init;    // null = lower bound / false
    SourcePos pos;
};

struct ModuleAst {
    std::string name;
    Role role = Role::plain;
    std::vector<VarDecl> vars;
    std::vector<Command> commands;
    SourcePos pos;
};

struct ConstDecl {
    enum class Type { int_, double_, bool_ };
    std::string name;
    Type type = Type::double_;
    ExprPtr value; // null = must be supplied via BuildOptions
    SourcePos pos;
};

struct FormulaDecl {
    std::string name;
    ExprPtr value;
    SourcePos pos;
};

struct RewardItem {
    bool transition = false;
    std::string action; // transition items only
    ExprPtr guard, value;
    SourcePos pos;
};

struct RewardBlock {
    std::string name;
    std::vector<RewardItem> items;
};

struct LabelDecl {
    std::string name;
    ExprPtr value;
    SourcePos pos;
};

struct ModelAst {
    std::vector<ConstDecl> constants;
    std::vector<FormulaDecl> formulas;
    std::vector<ModuleAst> modules;
    std::vector<RewardBlock> reward_blocks;
    std::vector<LabelDecl> labels;
    std::vector<std::string> declared_params; // from @controller-params annotations
};

struct BuildOptions {
    std::map<std::string, std::string> const_overrides; // name -> literal
    std::set<std::string> parameters;                   // names left symbolic
    uint64_t state_cap = kStateCapDefault;
};

// ---------------------------------------------------------------------------
// lexer

namespace detail {

struct Token {
    enum class Kind { ident, number, string_, punct, eof };
    Kind kind = Kind::eof;
    std::string text;
    SourcePos pos;
};

struct Lexer {
    std::string_view src;
    size_t pos = 0;
    int line = 1, col = 1;
    Token current;
    // structured comments waiting to attach to the next module
    std::optional<Role> pending_role;
    std::vector<std::string> pending_params;

    explicit Lexer(std::string_view s) : src(s) { advance(); }

    SourcePos here() const { return {line, col}; }

    void bump(char ch) {
        if (ch == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        ++pos;
    }

    void handle_comment(const std::string& body) {
        std::string_view sv = trim(body);
        if (starts_with(sv, "@role:")) {
            std::string_view r = trim(sv.substr(6));
            if (r == "managed") pending_role = Role::managed;
            else if (r == "environment") pending_role = Role::environment;
            else if (r == "controller") pending_role = Role::controller;
            else if (r == "turn") pending_role = Role::turn;
            else if (r == "plain") pending_role = Role::plain;
            else fail_at("SyntaxError", here(), "unknown role '" + std::string(r) + "'");
        } else if (starts_with(sv, "@controller-params:")) {
            for (auto part : split(sv.substr(19), ',')) {
                auto t = trim(part);
                if (!t.empty()) pending_params.emplace_back(t);
            }
        }
    }

    void skip_ws_and_comments() {
        for (;;) {
            while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) bump(src[pos]);
            if (pos + 1 < src.size() && src[pos] == '/' && src[pos + 1] == '/') {
                std::string body;
                while (pos < src.size() && src[pos] != '\n') {
                    body += src[pos];
                    bump(src[pos]);
                }
                handle_comment(body.substr(2));
                continue;
            }
            return;
        }
    }

    void advance() {
        skip_ws_and_comments();
        current.pos = here();
        if (pos >= src.size()) {
            current.kind = Token::Kind::eof;
            current.text.clear();
            return;
        }
        char ch = src[pos];
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::string text;
            while (pos < src.size() && (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) {
                text += src[pos];
                bump(src[pos]);
            }
            current.kind = Token::Kind::ident;
            current.text = std::move(text);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(ch)) ||
            (ch == '.' && pos + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[pos + 1])))) {
            std::string text;
            bool saw_exp = false;
            while (pos < src.size()) {
                char c = src[pos];
                if (c == '.' && pos + 1 < src.size() && src[pos + 1] == '.') break; // range operator
                if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                    text += c;
                    bump(c);
                } else if ((c == 'e' || c == 'E') && !saw_exp) {
                    // only part of the number when followed by digit or sign+digit
                    size_t next = pos + 1;
                    if (next < src.size() && (src[next] == '+' || src[next] == '-')) ++next;
                    if (next < src.size() && std::isdigit(static_cast<unsigned char>(src[next]))) {
                        saw_exp = true;
                        while (pos < next) {
                            text += src[pos];
                            bump(src[pos]);
                        }
                    } else break;
                } else break;
            }
            current.kind = Token::Kind::number;
            current.text = std::move(text);
            return;
        }
        if (ch == '"') {
            bump(ch);
            std::string text;
            while (pos < src.size() && src[pos] != '"') {
                text += src[pos];
                bump(src[pos]);
            }
            if (pos >= src.size()) fail_at("SyntaxError", here(), "unterminated string");
            bump('"');
            current.kind = Token::Kind::string_;
            current.text = std::move(text);
            return;
        }
        // multi-char punctuation first
        static const char* two[] = {"..", "->", "<=", ">=", "!=", "=>", "&&", "||"};
        for (const char* t : two) {
            if (src.substr(pos, 2) == t) {
                current.kind = Token::Kind::punct;
                current.text = t;
                bump(src[pos]);
                bump(src[pos]);
                return;
            }
        }
        current.kind = Token::Kind::punct;
        current.text = std::string(1, ch);
        bump(ch);
    }

    bool accept_punct(std::string_view p) {
        if (current.kind == Token::Kind::punct && current.text == p) {
            advance();
            return true;
        }
        return false;
    }
    void expect_punct(std::string_view p) {
        if (!accept_punct(p))
            fail_at("SyntaxError", current.pos,
                    "expected '" + std::string(p) + "', found '" + current.text + "'");
    }
    bool accept_kw(std::string_view kw) {
        if (current.kind == Token::Kind::ident && current.text == kw) {
            advance();
            return true;
        }
        return false;
    }
    void expect_kw(std::string_view kw) {
        if (!accept_kw(kw))
            fail_at("SyntaxError", current.pos,
                    "expected '" + std::string(kw) + "', found '" + current.text + "'");
    }
    std::string expect_ident() {
        if (current.kind != Token::Kind::ident)
            fail_at("SyntaxError", current.pos, "expected identifier, found '" + current.text + "'");
        std::string t = current.text;
        advance();
        return t;
    }
    std::string expect_string() {
        if (current.kind != Token::Kind::string_)
            fail_at("SyntaxError", current.pos, "expected quoted string");
        std::string t = current.text;
        advance();
        return t;
    }

    // Decides whether the upcoming branch starts with a probability
    // expression (terminated by ':' at depth 0) or is a bare update. Scans a
    // copy of the lexer; ':' inside ternaries does not count, '+' or ';' at
    // depth 0 ends the branch, a tick means we are inside an update already.
    bool branch_has_probability() const {
        Lexer probe = *this;
        int depth = 0, ternary = 0;
        for (int guard = 0; guard < 4096; ++guard) {
            const Token& t = probe.current;
            if (t.kind == Token::Kind::eof) return false;
            if (t.kind == Token::Kind::punct) {
                if (t.text == "(") ++depth;
                else if (t.text == ")") --depth;
                else if (t.text == "?") ++ternary;
                else if (t.text == ":") {
                    if (ternary > 0) --ternary;
                    else return true;
                } else if (t.text == "'") return false;
                else if (depth == 0 && (t.text == "+" || t.text == ";")) return false;
            }
            probe.advance();
        }
        return false;
    }
};

// precedence-climbing expression parser
struct ExprParser {
    Lexer& lx;

    ExprPtr make(Expr e) { return std::make_shared<Expr>(std::move(e)); }

    ExprPtr primary() {
        SourcePos pos = lx.current.pos;
        if (lx.accept_punct("(")) {
            auto e = ternary();
            lx.expect_punct(")");
            return e;
        }
        if (lx.accept_punct("!")) {
            Expr e{Expr::Op::not_, pos};
            e.a = primary();
            return make(std::move(e));
        }
        if (lx.accept_punct("-")) {
            Expr e{Expr::Op::neg, pos};
            e.a = primary();
            return make(std::move(e));
        }
        if (lx.current.kind == Token::Kind::number) {
            std::string text = lx.current.text;
            lx.advance();
            Expr e{Expr::Op::lit_int, pos};
            if (text.find_first_of(".eE") != std::string::npos) {
                e.op = Expr::Op::lit_double;
                parse_double(text, e.dval);
            } else {
                parse_ll(text, e.ival);
            }
            return make(std::move(e));
        }
        if (lx.current.kind == Token::Kind::ident) {
            if (lx.accept_kw("true")) {
                Expr e{Expr::Op::lit_bool, pos};
                e.bval = true;
                return make(std::move(e));
            }
            if (lx.accept_kw("false")) {
                Expr e{Expr::Op::lit_bool, pos};
                e.bval = false;
                return make(std::move(e));
            }
            Expr e{Expr::Op::ident, pos};
            e.name = lx.expect_ident();
            return make(std::move(e));
        }
        fail_at("SyntaxError", pos, "expected expression, found '" + lx.current.text + "'");
    }

    ExprPtr multiplicative() {
        auto lhs = primary();
        for (;;) {
            SourcePos pos = lx.current.pos;
            Expr::Op op;
            if (lx.accept_punct("*")) op = Expr::Op::mul;
            else if (lx.accept_punct("/")) op = Expr::Op::divide;
            else return lhs;
            Expr e{op, pos};
            e.a = lhs;
            e.b = primary();
            lhs = make(std::move(e));
        }
    }

    ExprPtr additive() {
        auto lhs = multiplicative();
        for (;;) {
            SourcePos pos = lx.current.pos;
            Expr::Op op;
            if (lx.accept_punct("+")) op = Expr::Op::add;
            else if (lx.accept_punct("-")) op = Expr::Op::sub;
            else return lhs;
            Expr e{op, pos};
            e.a = lhs;
            e.b = multiplicative();
            lhs = make(std::move(e));
        }
    }

    ExprPtr comparison() {
        auto lhs = additive();
        SourcePos pos = lx.current.pos;
        Expr::Op op;
        if (lx.accept_punct("<=")) op = Expr::Op::le;
        else if (lx.accept_punct(">=")) op = Expr::Op::ge;
        else if (lx.accept_punct("!=")) op = Expr::Op::ne;
        else if (lx.accept_punct("<")) op = Expr::Op::lt;
        else if (lx.accept_punct(">")) op = Expr::Op::gt;
        else if (lx.accept_punct("=")) op = Expr::Op::eq;
        else return lhs;
        Expr e{op, pos};
        e.a = lhs;
        e.b = additive();
        return make(std::move(e));
    }

    ExprPtr conjunction() {
        auto lhs = comparison();
        for (;;) {
            SourcePos pos = lx.current.pos;
            if (!lx.accept_punct("&") && !lx.accept_punct("&&")) return lhs;
            Expr e{Expr::Op::and_, pos};
            e.a = lhs;
            e.b = comparison();
            lhs = make(std::move(e));
        }
    }

    ExprPtr disjunction() {
        auto lhs = conjunction();
        for (;;) {
            SourcePos pos = lx.current.pos;
            if (!lx.accept_punct("|") && !lx.accept_punct("||")) return lhs;
            Expr e{Expr::Op::or_, pos};
            e.a = lhs;
            e.b = conjunction();
            lhs = make(std::move(e));
        }
    }

    ExprPtr ternary() {
        auto cond = disjunction();
        SourcePos pos = lx.current.pos;
        if (!lx.accept_punct("?")) return cond;
        Expr e{Expr::Op::ternary, pos};
        e.a = cond;
        e.b = ternary();
        lx.expect_punct(":");
        e.c = ternary();
        return make(std::move(e));
    }
};

} // namespace detail

// ---------------------------------------------------------------------------
// parse

inline ModelAst parse(std::string_view source) {
    detail::Lexer lx(source);
    detail::ExprParser ep{lx};
    ModelAst ast;

    auto take_annotations = [&](ModuleAst& mod) {
        if (lx.pending_role) {
            mod.role = *lx.pending_role;
            lx.pending_role.reset();
        }
        for (auto& p : lx.pending_params) ast.declared_params.push_back(p);
        lx.pending_params.clear();
    };

    // optional model-type keyword
    if (lx.current.kind == detail::Token::Kind::ident &&
        (lx.current.text == "dtmc" || lx.current.text == "pdtmc" || lx.current.text == "probabilistic"))
        lx.advance();

    while (lx.current.kind != detail::Token::Kind::eof) {
        SourcePos pos = lx.current.pos;
        if (lx.accept_kw("const")) {
            ConstDecl cd;
            cd.pos = pos;
            if (lx.accept_kw("int")) cd.type = ConstDecl::Type::int_;
            else if (lx.accept_kw("double")) cd.type = ConstDecl::Type::double_;
            else if (lx.accept_kw("bool")) cd.type = ConstDecl::Type::bool_;
            cd.name = lx.expect_ident();
            if (lx.accept_punct("=")) cd.value = ep.ternary();
            lx.expect_punct(";");
            ast.constants.push_back(std::move(cd));
        } else if (lx.accept_kw("formula")) {
            FormulaDecl fd;
            fd.pos = pos;
            fd.name = lx.expect_ident();
            lx.expect_punct("=");
            fd.value = ep.ternary();
            lx.expect_punct(";");
            ast.formulas.push_back(std::move(fd));
        } else if (lx.accept_kw("module")) {
            ModuleAst mod;
            mod.pos = pos;
            take_annotations(mod);
            mod.name = lx.expect_ident();
            while (!lx.accept_kw("endmodule")) {
                if (lx.current.kind == detail::Token::Kind::eof)
                    fail_at("SyntaxError", lx.current.pos, "unterminated module '" + mod.name + "'");
                if (lx.current.kind == detail::Token::Kind::punct && lx.current.text == "[") {
                    // command
                    Command cmd;
                    cmd.pos = lx.current.pos;
                    lx.expect_punct("[");
                    if (lx.current.kind == detail::Token::Kind::ident) cmd.action = lx.expect_ident();
                    lx.expect_punct("]");
                    cmd.guard = ep.ternary();
                    lx.expect_punct("->");
                    for (;;) {
                        Command::Branch br;
                        br.pos = lx.current.pos;
                        if (lx.branch_has_probability()) {
                            br.prob = ep.ternary();
                            lx.expect_punct(":");
                        }
                        if (lx.accept_kw("true")) {
                            // no-op update
                        } else {
                            for (;;) {
                                lx.expect_punct("(");
                                std::string var = lx.expect_ident();
                                lx.expect_punct("'");
                                lx.expect_punct("=");
                                auto rhs = ep.ternary();
                                lx.expect_punct(")");
                                br.assigns.emplace_back(var, rhs);
                                if (!lx.accept_punct("&")) break;
                            }
                        }
                        cmd.branches.push_back(std::move(br));
                        if (!lx.accept_punct("+")) break;
                    }
                    lx.expect_punct(";");
                    mod.commands.push_back(std::move(cmd));
                } else {
                    // variable declaration
                    VarDecl vd;
                    vd.pos = lx.current.pos;
                    vd.name = lx.expect_ident();
                    lx.expect_punct(":");
                    if (lx.accept_kw("bool")) {
                        vd.is_bool = true;
                    } else {
                        lx.expect_punct("[");
                        vd.lo = ep.ternary();
                        lx.expect_punct("..");
                        vd.hi = ep.ternary();
                        lx.expect_punct("]");
                    }
                    if (lx.accept_kw("init")) vd.init = ep.ternary();
                    lx.expect_punct(";");
                    mod.vars.push_back(std::move(vd));
                }
            }
            ast.modules.push_back(std::move(mod));
        } else if (lx.accept_kw("rewards")) {
            RewardBlock rb;
            rb.name = lx.expect_string();
            while (!lx.accept_kw("endrewards")) {
                if (lx.current.kind == detail::Token::Kind::eof)
                    fail_at("SyntaxError", lx.current.pos, "unterminated rewards block '" + rb.name + "'");
                RewardItem item;
                item.pos = lx.current.pos;
                if (lx.accept_punct("[")) {
                    item.transition = true;
                    if (lx.current.kind == detail::Token::Kind::ident) item.action = lx.expect_ident();
                    lx.expect_punct("]");
                }
                item.guard = ep.ternary();
                lx.expect_punct(":");
                item.value = ep.ternary();
                lx.expect_punct(";");
                rb.items.push_back(std::move(item));
            }
            ast.reward_blocks.push_back(std::move(rb));
        } else if (lx.accept_kw("label")) {
            LabelDecl ld;
            ld.pos = pos;
            ld.name = lx.expect_string();
            lx.expect_punct("=");
            ld.value = ep.ternary();
            lx.expect_punct(";");
            ast.labels.push_back(std::move(ld));
        } else {
            fail_at("SyntaxError", pos, "unexpected '" + lx.current.text + "' at top level");
        }
    }

    // --- static semantic checks ---
    std::set<std::string> names;
    auto declare = [&](const std::string& n, SourcePos p) {
        if (!names.insert(n).second) fail_at("DuplicateIdentifier", p, "duplicate identifier '" + n + "'");
    };
    for (const auto& c : ast.constants) declare(c.name, c.pos);
    for (const auto& f : ast.formulas) declare(f.name, f.pos);
    std::set<std::string> module_names;
    for (const auto& mod : ast.modules) {
        if (!module_names.insert(mod.name).second)
            fail_at("DuplicateIdentifier", mod.pos, "duplicate module '" + mod.name + "'");
        for (const auto& v : mod.vars) declare(v.name, v.pos); // module-local names are globally unique
    }
    for (const auto& p : ast.declared_params)
        if (names.count(p))
            fail("DuplicateIdentifier", "controller parameter '" + p + "' collides with a declared name");

    // formula cycle detection (DFS over formula references)
    std::map<std::string, const FormulaDecl*> fmap;
    for (const auto& f : ast.formulas) fmap[f.name] = &f;
    std::map<std::string, int> mark; // 0 unseen, 1 active, 2 done
    std::function<void(const ExprPtr&)> scan = [&](const ExprPtr& e) {
        if (!e) return;
        if (e->op == Expr::Op::ident) {
            auto it = fmap.find(e->name);
            if (it != fmap.end()) {
                int& m = mark[e->name];
                if (m == 1) fail_at("UnboundIdentifier", e->pos, "cyclic formula '" + e->name + "'");
                if (m == 0) {
                    m = 1;
                    scan(it->second->value);
                    m = 2;
                }
            }
        }
        scan(e->a);
        scan(e->b);
        scan(e->c);
    };
    for (const auto& f : ast.formulas) {
        if (mark[f.name] == 0) {
            mark[f.name] = 1;
            scan(f.value);
            mark[f.name] = 2;
        }
    }

    // unresolved identifiers: anything that is not a constant, formula,
    // variable or annotated controller parameter. Bare names in probability
    // position may additionally be declared via BuildOptions, so identifier
    // checks for those happen at build time.
    std::set<std::string> known = names;
    for (const auto& p : ast.declared_params) known.insert(p);
    std::function<void(const ExprPtr&)> check_bound = [&](const ExprPtr& e) {
        if (!e) return;
        if (e->op == Expr::Op::ident && !known.count(e->name))
            fail_at("UnboundIdentifier", e->pos, "unknown identifier '" + e->name + "'");
        check_bound(e->a);
        check_bound(e->b);
        check_bound(e->c);
    };
    for (const auto& c : ast.constants) check_bound(c.value);
    for (const auto& f : ast.formulas) check_bound(f.value);
    for (const auto& mod : ast.modules) {
        for (const auto& v : mod.vars) {
            check_bound(v.lo);
            check_bound(v.hi);
            check_bound(v.init);
        }
        for (const auto& cmd : mod.commands) {
            check_bound(cmd.guard);
            for (const auto& br : cmd.branches) {
                // probability expressions checked at build time (may name parameters)
                for (const auto& [var, rhs] : br.assigns) {
                    if (!known.count(var))
                        fail_at("UnboundIdentifier", br.pos, "assignment to unknown variable '" + var + "'");
                    check_bound(rhs);
                }
            }
        }
    }
    for (const auto& rb : ast.reward_blocks)
        for (const auto& item : rb.items) {
            check_bound(item.guard);
            check_bound(item.value);
        }
    for (const auto& l : ast.labels) check_bound(l.value);

    // literal variable ranges are validated immediately; ranges built from
    // constants are re-checked at build time after overrides
    auto literal_int = [](const ExprPtr& e) -> std::optional<long long> {
        if (!e) return std::nullopt;
        if (e->op == Expr::Op::lit_int) return e->ival;
        if (e->op == Expr::Op::neg && e->a->op == Expr::Op::lit_int) return -e->a->ival;
        return std::nullopt;
    };
    for (const auto& mod : ast.modules)
        for (const auto& v : mod.vars) {
            if (v.is_bool) continue;
            auto lo = literal_int(v.lo), hi = literal_int(v.hi);
            if (lo && hi && *lo > *hi)
                fail_at("RangeError", v.pos, "empty range for variable '" + v.name + "'");
        }

    // updates assign only the owning module's variables
    for (const auto& mod : ast.modules) {
        std::set<std::string> own;
        for (const auto& v : mod.vars) own.insert(v.name);
        for (const auto& cmd : mod.commands)
            for (const auto& br : cmd.branches)
                for (const auto& [var, rhs] : br.assigns)
                    if (!own.count(var))
                        fail_at("UnboundIdentifier", br.pos,
                                "module '" + mod.name + "' updates foreign variable '" + var + "'");
    }

    return ast;
}

// ---------------------------------------------------------------------------
// pretty printer (canonical form; parse(pretty_print(ast)) is structurally
// identical to ast)

namespace detail {

inline void print_expr(std::ostream& os, const ExprPtr& e);

inline void print_binary(std::ostream& os, const char* op, const ExprPtr& a, const ExprPtr& b) {
    os << '(';
    print_expr(os, a);
    os << op;
    print_expr(os, b);
    os << ')';
}

inline void print_expr(std::ostream& os, const ExprPtr& e) {
    switch (e->op) {
        case Expr::Op::lit_int: os << e->ival; break;
        case Expr::Op::lit_double: os << fmt_double(e->dval); break;
        case Expr::Op::lit_bool: os << (e->bval ? "true" : "false"); break;
        case Expr::Op::ident: os << e->name; break;
        case Expr::Op::add: print_binary(os, "+", e->a, e->b); break;
        case Expr::Op::sub: print_binary(os, "-", e->a, e->b); break;
        case Expr::Op::mul: print_binary(os, "*", e->a, e->b); break;
        case Expr::Op::divide: print_binary(os, "/", e->a, e->b); break;
        case Expr::Op::eq: print_binary(os, "=", e->a, e->b); break;
        case Expr::Op::ne: print_binary(os, "!=", e->a, e->b); break;
        case Expr::Op::lt: print_binary(os, "<", e->a, e->b); break;
        case Expr::Op::le: print_binary(os, "<=", e->a, e->b); break;
        case Expr::Op::gt: print_binary(os, ">", e->a, e->b); break;
        case Expr::Op::ge: print_binary(os, ">=", e->a, e->b); break;
        case Expr::Op::and_: print_binary(os, "&", e->a, e->b); break;
        case Expr::Op::or_: print_binary(os, "|", e->a, e->b); break;
        case Expr::Op::not_:
            os << "!";
            print_expr(os, e->a);
            break;
        case Expr::Op::neg:
            os << "-";
            print_expr(os, e->a);
            break;
        case Expr::Op::ternary:
            os << '(';
            print_expr(os, e->a);
            os << '?';
            print_expr(os, e->b);
            os << ':';
            print_expr(os, e->c);
            os << ')';
            break;
    }
}

} // namespace detail

inline std::string pretty_print(const ModelAst& ast) {
    std::ostringstream os;
    os << "pdtmc\n\n";
    for (const auto& c : ast.constants) {
        os << "const ";
        switch (c.type) {
            case ConstDecl::Type::int_: os << "int "; break;
            case ConstDecl::Type::double_: os << "double "; break;
            case ConstDecl::Type::bool_: os << "bool "; break;
        }
        os << c.name;
        if (c.value) {
            os << " = ";
            detail::print_expr(os, c.value);
        }
        os << ";\n";
    }
    for (const auto& f : ast.formulas) {
        os << "formula " << f.name << " = ";
        detail::print_expr(os, f.value);
        os << ";\n";
    }
    bool params_emitted = false;
    for (const auto& mod : ast.modules) {
        os << '\n';
        if (mod.role != Role::plain) os << "// @role: " << role_name(mod.role) << '\n';
        if (!params_emitted && mod.role == Role::controller && !ast.declared_params.empty()) {
            os << "// @controller-params: ";
            for (size_t i = 0; i < ast.declared_params.size(); ++i)
                os << (i ? ", " : "") << ast.declared_params[i];
            os << '\n';
            params_emitted = true;
        }
        os << "module " << mod.name << '\n';
        for (const auto& v : mod.vars) {
            os << "  " << v.name << " : ";
            if (v.is_bool) os << "bool";
            else {
                os << '[';
                detail::print_expr(os, v.lo);
                os << " .. ";
                detail::print_expr(os, v.hi);
                os << ']';
            }
            if (v.init) {
                os << " init ";
                detail::print_expr(os, v.init);
            }
            os << ";\n";
        }
        for (const auto& cmd : mod.commands) {
            os << "  [" << cmd.action << "] ";
            detail::print_expr(os, cmd.guard);
            os << " -> ";
            for (size_t i = 0; i < cmd.branches.size(); ++i) {
                const auto& br = cmd.branches[i];
                if (i) os << " + ";
                if (br.prob) {
                    detail::print_expr(os, br.prob);
                    os << ':';
                }
                if (br.assigns.empty()) os << "true";
                for (size_t j = 0; j < br.assigns.size(); ++j) {
                    if (j) os << '&';
                    os << '(' << br.assigns[j].first << "'=";
                    detail::print_expr(os, br.assigns[j].second);
                    os << ')';
                }
            }
            os << ";\n";
        }
        os << "endmodule\n";
    }
    if (!params_emitted && !ast.declared_params.empty()) {
        os << "\n// @controller-params: ";
        for (size_t i = 0; i < ast.declared_params.size(); ++i)
            os << (i ? ", " : "") << ast.declared_params[i];
        os << '\n';
    }
    for (const auto& rb : ast.reward_blocks) {
        os << "\nrewards \"" << rb.name << "\"\n";
        for (const auto& item : rb.items) {
            os << "  ";
            if (item.transition) os << '[' << item.action << "] ";
            detail::print_expr(os, item.guard);
            os << " : ";
            detail::print_expr(os, item.value);
            os << ";\n";
        }
        os << "endrewards\n";
    }
    if (!ast.labels.empty()) os << '\n';
    for (const auto& l : ast.labels) {
        os << "label \"" << l.name << "\" = ";
        detail::print_expr(os, l.value);
        os << ";\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// build

namespace detail {

struct VarInfo {
    std::string name;
    bool is_bool = false;
    long long lo = 0, hi = 0;
    long long init = 0;
    int module = 0;
    Role role = Role::plain;
};

struct Evaluator {
    const std::vector<VarInfo>& vars;
    const std::unordered_map<std::string, int>& var_ix;
    const std::unordered_map<std::string, Value>& consts;
    const std::map<std::string, const FormulaDecl*>& formulas;
    const std::vector<long long>* valuation = nullptr; // null = constants only
    int depth = 0;

    Value eval(const ExprPtr& e) {
        switch (e->op) {
            case Expr::Op::lit_int: return Value::of_int(e->ival);
            case Expr::Op::lit_double: return Value::of_double(e->dval);
            case Expr::Op::lit_bool: return Value::of_bool(e->bval);
            case Expr::Op::ident: {
                auto cit = consts.find(e->name);
                if (cit != consts.end()) return cit->second;
                auto fit = formulas.find(e->name);
                if (fit != formulas.end()) {
                    if (++depth > 64) fail_at("UnboundIdentifier", e->pos, "formula recursion too deep");
                    Value v = eval(fit->second->value);
                    --depth;
                    return v;
                }
                auto vit = var_ix.find(e->name);
                if (vit != var_ix.end()) {
                    if (!valuation)
                        fail_at("UnboundIdentifier", e->pos,
                                "variable '" + e->name + "' used in a constant-only context");
                    const VarInfo& vi = vars[vit->second];
                    long long raw = (*valuation)[vit->second];
                    return vi.is_bool ? Value::of_bool(raw != 0) : Value::of_int(raw);
                }
                fail_at("UnboundIdentifier", e->pos, "unknown identifier '" + e->name + "'");
            }
            case Expr::Op::add: return arith(e, [](double x, double y) { return x + y; }, [](long long x, long long y) { return x + y; });
            case Expr::Op::sub: return arith(e, [](double x, double y) { return x - y; }, [](long long x, long long y) { return x - y; });
            case Expr::Op::mul: return arith(e, [](double x, double y) { return x * y; }, [](long long x, long long y) { return x * y; });
            case Expr::Op::divide: {
                Value a = eval(e->a), b = eval(e->b);
                require_numeric(e, a, b);
                if (b.as_double() == 0.0) fail_at("RangeError", e->pos, "division by zero");
                return Value::of_double(a.as_double() / b.as_double());
            }
            case Expr::Op::eq: return compare(e, [](double c) { return c == 0.0; });
            case Expr::Op::ne: return compare(e, [](double c) { return c != 0.0; });
            case Expr::Op::lt: return compare(e, [](double c) { return c < 0.0; });
            case Expr::Op::le: return compare(e, [](double c) { return c <= 0.0; });
            case Expr::Op::gt: return compare(e, [](double c) { return c > 0.0; });
            case Expr::Op::ge: return compare(e, [](double c) { return c >= 0.0; });
            case Expr::Op::and_: return Value::of_bool(truth(e->a) && truth(e->b));
            case Expr::Op::or_: return Value::of_bool(truth(e->a) || truth(e->b));
            case Expr::Op::not_: return Value::of_bool(!truth(e->a));
            case Expr::Op::neg: {
                Value a = eval(e->a);
                if (!a.is_numeric()) fail_at("RangeError", e->pos, "negating a boolean");
                if (a.type == Value::Type::int_) return Value::of_int(-a.i);
                return Value::of_double(-a.d);
            }
            case Expr::Op::ternary: return truth(e->a) ? eval(e->b) : eval(e->c);
        }
        fail_at("SyntaxError", e->pos, "unreachable expression kind");
    }

    bool truth(const ExprPtr& e) {
        Value v = eval(e);
        if (v.type != Value::Type::bool_)
            fail_at("RangeError", e->pos, "expected a boolean expression");
        return v.b;
    }

    template <class FD, class FI>
    Value arith(const ExprPtr& e, FD fd, FI fi) {
        Value a = eval(e->a), b = eval(e->b);
        require_numeric(e, a, b);
        if (a.type == Value::Type::int_ && b.type == Value::Type::int_) return Value::of_int(fi(a.i, b.i));
        return Value::of_double(fd(a.as_double(), b.as_double()));
    }

    template <class F>
    Value compare(const ExprPtr& e, F f) {
        Value a = eval(e->a), b = eval(e->b);
        if (a.type == Value::Type::bool_ || b.type == Value::Type::bool_) {
            if (a.type != Value::Type::bool_ || b.type != Value::Type::bool_)
                fail_at("RangeError", e->pos, "comparing boolean against number");
            if (e->op == Expr::Op::eq) return Value::of_bool(a.b == b.b);
            if (e->op == Expr::Op::ne) return Value::of_bool(a.b != b.b);
            fail_at("RangeError", e->pos, "ordering comparison on booleans");
        }
        return Value::of_bool(f(a.as_double() - b.as_double()));
    }

    void require_numeric(const ExprPtr& e, const Value& a, const Value& b) {
        if (!a.is_numeric() || !b.is_numeric())
            fail_at("RangeError", e->pos, "arithmetic on boolean operands");
    }
};

inline std::string key_of(const std::vector<long long>& valuation, const std::vector<int>& var_ids) {
    if (var_ids.empty()) return "-";
    std::string out;
    for (size_t i = 0; i < var_ids.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(valuation[var_ids[i]]);
    }
    return out;
}

} // namespace detail

inline ExplicitPDTMC build(const ModelAst& ast, const BuildOptions& opts) {
    using detail::Evaluator;
    using detail::VarInfo;

    // resolve constants (overrides first)
    std::unordered_map<std::string, Value> consts;
    std::map<std::string, const FormulaDecl*> formulas;
    for (const auto& f : ast.formulas) formulas[f.name] = &f;
    std::vector<VarInfo> vars;
    std::unordered_map<std::string, int> var_ix;
    Evaluator const_eval{vars, var_ix, consts, formulas, nullptr};

    for (const auto& c : ast.constants) {
        auto ov = opts.const_overrides.find(c.name);
        Value v;
        if (ov != opts.const_overrides.end()) {
            const std::string& lit = ov->second;
            if (c.type == ConstDecl::Type::bool_) v = Value::of_bool(lit == "true" || lit == "1");
            else if (c.type == ConstDecl::Type::int_) {
                long long x = 0;
                if (!parse_ll(lit, x)) fail("RangeError", "override for '" + c.name + "' is not an integer");
                v = Value::of_int(x);
            } else {
                double x = 0;
                if (!parse_double(lit, x)) fail("RangeError", "override for '" + c.name + "' is not a number");
                v = Value::of_double(x);
            }
        } else if (c.value) {
            v = const_eval.eval(c.value);
            if (c.type == ConstDecl::Type::int_ && v.type == Value::Type::double_)
                fail_at("RangeError", c.pos, "constant '" + c.name + "' declared int but valued double");
        } else {
            fail("UnboundIdentifier",
                 "constant '" + c.name + "' has no value; supply one with --const " + c.name + "=...");
        }
        consts[c.name] = v;
    }
    for (const auto& [name, lit] : opts.const_overrides) {
        bool declared = false;
        for (const auto& c : ast.constants) declared |= c.name == name;
        if (!declared) fail("UnboundIdentifier", "override targets undeclared constant '" + name + "'");
    }

    // parameters: CLI-declared plus annotation-declared
    std::set<std::string> params = opts.parameters;
    for (const auto& p : ast.declared_params) params.insert(p);

    // variable table in declaration order
    for (size_t mi = 0; mi < ast.modules.size(); ++mi) {
        for (const auto& v : ast.modules[mi].vars) {
            VarInfo info;
            info.name = v.name;
            info.is_bool = v.is_bool;
            info.module = static_cast<int>(mi);
            info.role = ast.modules[mi].role;
            if (!v.is_bool) {
                Value lo = const_eval.eval(v.lo), hi = const_eval.eval(v.hi);
                if (lo.type != Value::Type::int_ || hi.type != Value::Type::int_)
                    fail_at("RangeError", v.pos, "variable bounds must be integers");
                info.lo = lo.i;
                info.hi = hi.i;
                if (info.lo > info.hi)
                    fail_at("RangeError", v.pos, "empty range for variable '" + v.name + "'");
            } else {
                info.lo = 0;
                info.hi = 1;
            }
            if (v.init) {
                Value iv = const_eval.eval(v.init);
                info.init = v.is_bool ? (iv.b ? 1 : 0) : iv.i;
            } else {
                info.init = info.lo;
            }
            if (info.init < info.lo || info.init > info.hi)
                fail_at("RangeError", v.pos, "initial value outside range for '" + v.name + "'");
            var_ix[v.name] = static_cast<int>(vars.size());
            vars.push_back(info);
        }
    }

    // role projections; environment modules may carry the DNN-perception
    // variables khat and v1..vn, which map onto the augmented tuple fields
    std::vector<int> z_vars, c_vars;
    int k_var = -1, t_var = -1, khat_var = -1;
    std::vector<std::pair<int, int>> verdict_vars; // (verifier index, var index)
    auto verdict_index = [](const std::string& name) -> int {
        if (name.size() < 2 || name[0] != 'v') return -1;
        for (size_t i = 1; i < name.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(name[i]))) return -1;
        return std::stoi(name.substr(1));
    };
    for (size_t i = 0; i < vars.size(); ++i) {
        switch (vars[i].role) {
            case Role::managed:
            case Role::plain: z_vars.push_back(static_cast<int>(i)); break;
            case Role::controller: c_vars.push_back(static_cast<int>(i)); break;
            case Role::environment: {
                int vix = verdict_index(vars[i].name);
                if (vars[i].name == "khat") {
                    khat_var = static_cast<int>(i);
                } else if (vix >= 1 && vars[i].is_bool) {
                    verdict_vars.emplace_back(vix, static_cast<int>(i));
                } else {
                    if (k_var >= 0) fail("MissingRoles", "more than one environment class variable");
                    k_var = static_cast<int>(i);
                }
                break;
            }
            case Role::turn:
                if (t_var >= 0) fail("MissingRoles", "more than one turn variable");
                t_var = static_cast<int>(i);
                break;
        }
    }
    std::sort(verdict_vars.begin(), verdict_vars.end());
    for (size_t i = 0; i < verdict_vars.size(); ++i)
        if (verdict_vars[i].first != static_cast<int>(i) + 1)
            fail("MissingRoles", "verification variables must be named v1..vn without gaps");
    if (k_var >= 0 && vars[k_var].lo != 1)
        fail("RangeError", "environment variable must range over [1..K]");
    if (t_var >= 0 && (vars[t_var].lo != 1 || vars[t_var].hi != 3))
        fail("RangeError", "turn variable must range over [1..3]");

    // action alphabet in first-appearance order; participating modules per action
    std::vector<std::string> actions;
    std::map<std::string, std::vector<int>> action_modules;
    for (size_t mi = 0; mi < ast.modules.size(); ++mi) {
        std::set<std::string> seen;
        for (const auto& cmd : ast.modules[mi].commands) {
            if (cmd.action.empty()) continue;
            if (!action_modules.count(cmd.action)) actions.push_back(cmd.action);
            if (seen.insert(cmd.action).second) action_modules[cmd.action].push_back(static_cast<int>(mi));
        }
    }

    ExplicitPDTMC model;
    model.env_classes = k_var >= 0 ? static_cast<int>(vars[k_var].hi) : 0;
    if (khat_var >= 0) {
        model.augmented = true;
        model.n_verifs = static_cast<uint32_t>(verdict_vars.size());
    }

    std::unordered_map<std::string, StateId> state_ids;
    std::vector<std::vector<long long>> valuations;
    auto valuation_key = [&](const std::vector<long long>& val) {
        std::string key;
        for (long long v : val) {
            key += std::to_string(v);
            key += ',';
        }
        return key;
    };
    auto tuple_of = [&](const std::vector<long long>& val) {
        StateTuple st;
        st.z = detail::key_of(val, z_vars);
        st.c = detail::key_of(val, c_vars);
        st.k = k_var >= 0 ? static_cast<int>(val[k_var]) : 1;
        st.t = t_var >= 0 ? static_cast<int>(val[t_var]) : 1;
        if (khat_var >= 0) {
            st.augmented = true;
            st.khat = static_cast<int>(val[khat_var]);
            for (size_t i = 0; i < verdict_vars.size(); ++i)
                if (val[verdict_vars[i].second]) st.verdicts |= 1u << i;
        }
        return st;
    };
    auto intern_state = [&](const std::vector<long long>& val) {
        auto key = valuation_key(val);
        auto it = state_ids.find(key);
        if (it != state_ids.end()) return it->second;
        if (model.num_states() >= opts.state_cap)
            fail("StateExplosion", "state cap of " + std::to_string(opts.state_cap) + " exceeded");
        StateId id = model.add_state(tuple_of(val));
        state_ids.emplace(std::move(key), id);
        valuations.push_back(val);
        return id;
    };

    std::vector<long long> init_val(vars.size());
    for (size_t i = 0; i < vars.size(); ++i) init_val[i] = vars[i].init;
    model.initial = intern_state(init_val);

    // one firing = one probability-distribution alternative at a state
    struct BranchOut {
        double coeff = 1.0;
        int param = -1;
        std::vector<long long> target;
        std::string action;
    };

    auto eval_prob = [&](const ExprPtr& prob, SourcePos pos) -> std::pair<double, int> {
        if (!prob) return {1.0, -1};
        if (prob->op == Expr::Op::ident && params.count(prob->name))
            return {1.0, model.intern_param(prob->name)};
        Evaluator const_only{vars, var_ix, consts, formulas, nullptr};
        Value v = const_only.eval(prob); // raises on variable references
        if (!v.is_numeric())
            fail_at("RangeError", pos, "probability expression is not numeric");
        double p = v.as_double();
        if (p < 0.0 || !std::isfinite(p))
            fail_at("RangeError", pos, "probability expression is negative or non-finite");
        return {p, -1};
    };

    auto apply_branch = [&](const std::vector<long long>& val, const Command::Branch& br,
                            std::vector<long long>& out) {
        out = val;
        Evaluator state_eval{vars, var_ix, consts, formulas, &val};
        for (const auto& [var, rhs] : br.assigns) {
            int ix = var_ix.at(var);
            Value v = state_eval.eval(rhs);
            long long raw;
            if (vars[ix].is_bool) {
                if (v.type != Value::Type::bool_)
                    fail_at("RangeError", br.pos, "assigning non-boolean to '" + var + "'");
                raw = v.b ? 1 : 0;
            } else {
                if (v.type != Value::Type::int_)
                    fail_at("RangeError", br.pos, "assigning non-integer to '" + var + "'");
                raw = v.i;
            }
            if (raw < vars[ix].lo || raw > vars[ix].hi)
                fail_at("RangeError", br.pos,
                        "update drives '" + var + "' to " + std::to_string(raw) + ", outside its range");
            out[ix] = raw;
        }
    };

    // reward machinery: per-edge weighted accumulation so merged edges carry
    // the probability-weighted transition reward
    struct EdgeAcc {
        double weight_sum = 0.0;
        double weighted_reward = 0.0;
    };
    std::vector<std::map<uint64_t, EdgeAcc>> edge_acc(ast.reward_blocks.size());

    std::vector<StateId> worklist{model.initial};
    std::vector<char> expanded;
    while (!worklist.empty()) {
        StateId sid = worklist.back();
        worklist.pop_back();
        if (sid < expanded.size() && expanded[sid]) continue;
        if (expanded.size() <= sid) expanded.resize(sid + 1, 0);
        expanded[sid] = 1;
        const auto val = valuations[sid];
        Evaluator state_eval{vars, var_ix, consts, formulas, &val};

        std::vector<std::vector<BranchOut>> firings;

        // synchronized actions
        for (const auto& action : actions) {
            const auto& mods = action_modules[action];
            std::vector<std::vector<const Command*>> enabled(mods.size());
            bool blocked = false;
            for (size_t i = 0; i < mods.size() && !blocked; ++i) {
                for (const auto& cmd : ast.modules[mods[i]].commands)
                    if (cmd.action == action && state_eval.truth(cmd.guard))
                        enabled[i].push_back(&cmd);
                if (enabled[i].empty()) blocked = true;
            }
            if (blocked) continue;
            // cross product of enabled commands, then of their branches
            std::vector<size_t> pick(mods.size(), 0);
            for (;;) {
                std::vector<BranchOut> alt{BranchOut{1.0, -1, val, action}};
                for (size_t i = 0; i < mods.size(); ++i) {
                    const Command* cmd = enabled[i][pick[i]];
                    std::vector<BranchOut> next;
                    for (const auto& br : cmd->branches) {
                        auto [p, param] = eval_prob(br.prob, br.pos);
                        for (const auto& base : alt) {
                            if (param >= 0 && base.param >= 0)
                                fail_at("RangeError", br.pos,
                                        "synchronisation would multiply two parameters");
                            BranchOut bo;
                            bo.coeff = base.coeff * p;
                            bo.param = param >= 0 ? param : base.param;
                            bo.action = action;
                            apply_branch(base.target, br, bo.target);
                            next.push_back(std::move(bo));
                        }
                    }
                    alt = std::move(next);
                }
                firings.push_back(std::move(alt));
                size_t d = 0;
                for (; d < pick.size(); ++d) {
                    if (++pick[d] < enabled[d].size()) break;
                    pick[d] = 0;
                }
                if (d == pick.size()) break;
            }
        }

        // unlabeled commands interleave: each enabled one is its own firing
        for (const auto& mod : ast.modules) {
            for (const auto& cmd : mod.commands) {
                if (!cmd.action.empty()) continue;
                if (!state_eval.truth(cmd.guard)) continue;
                std::vector<BranchOut> alt;
                for (const auto& br : cmd.branches) {
                    auto [p, param] = eval_prob(br.prob, br.pos);
                    BranchOut bo;
                    bo.coeff = p;
                    bo.param = param;
                    apply_branch(val, br, bo.target);
                    alt.push_back(std::move(bo));
                }
                firings.push_back(std::move(alt));
            }
        }

        if (firings.empty()) {
            const auto& st = model.states[sid];
            fail("CompositionDeadlock", "no enabled command in state (z=" + st.z + ", k=" +
                                            std::to_string(st.k) + ", t=" + std::to_string(st.t) +
                                            ", c=" + st.c + ")");
        }

        double const_sum = 0.0;
        bool has_param = false;
        for (const auto& alt : firings) {
            for (const auto& bo : alt) {
                if (bo.param >= 0) has_param = true;
                else const_sum += bo.coeff;
                if (bo.coeff == 0.0 && bo.param < 0) continue;
                StateId dst = intern_state(bo.target);
                if (expanded.size() <= dst || !expanded[dst]) worklist.push_back(dst);
                model.add_transition(sid, dst, bo.coeff, bo.param);
                // transition rewards: all matching items of the firing's action,
                // averaged by branch weight when edges merge
                for (size_t rb = 0; rb < ast.reward_blocks.size(); ++rb) {
                    double reward = 0.0;
                    for (const auto& item : ast.reward_blocks[rb].items) {
                        if (!item.transition || item.action != bo.action) continue;
                        if (!state_eval.truth(item.guard)) continue;
                        reward += state_eval.eval(item.value).as_double();
                    }
                    auto& acc = edge_acc[rb][RewardStructure::edge_key(sid, dst)];
                    acc.weight_sum += bo.coeff;
                    acc.weighted_reward += bo.coeff * reward;
                }
            }
        }
        if (!has_param && std::fabs(const_sum - 1.0) > kStochasticTol) {
            const auto& st = model.states[sid];
            fail("RowSumError", "outgoing probabilities sum to " + fmt_display(const_sum) +
                                    " in state (z=" + st.z + ", k=" + std::to_string(st.k) + ", t=" +
                                    std::to_string(st.t) + ", c=" + st.c + ")");
        }
    }

    // labels
    for (const auto& l : ast.labels) {
        for (StateId s = 0; s < model.num_states(); ++s) {
            Evaluator state_eval{vars, var_ix, consts, formulas, &valuations[s]};
            if (state_eval.truth(l.value)) model.add_label(l.name, s);
        }
        if (!model.labels.count(l.name)) model.labels[l.name] = {};
    }

    // rewards: state items per state, transition items from the accumulators
    for (size_t rb = 0; rb < ast.reward_blocks.size(); ++rb) {
        auto& structure = model.reward_structure(ast.reward_blocks[rb].name);
        for (StateId s = 0; s < model.num_states(); ++s) {
            Evaluator state_eval{vars, var_ix, consts, formulas, &valuations[s]};
            double total = 0.0;
            for (const auto& item : ast.reward_blocks[rb].items) {
                if (item.transition) continue;
                if (!state_eval.truth(item.guard)) continue;
                total += state_eval.eval(item.value).as_double();
            }
            if (total != 0.0) structure.state_rewards[s] = total;
        }
        for (const auto& [edge, acc] : edge_acc[rb]) {
            double r = acc.weight_sum > 0.0 ? acc.weighted_reward / acc.weight_sum : 0.0;
            if (r != 0.0) structure.trans_rewards[edge] = r;
        }
    }

    model.finalize();
    return model;
}

inline ExplicitPDTMC build_file(const std::string& path, const BuildOptions& opts) {
    std::ifstream is(path);
    if (!is) fail("IoError", "cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return build(parse(ss.str()), opts);
}

} // namespace decsynth::lang
