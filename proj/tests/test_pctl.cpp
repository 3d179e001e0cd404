#include <catch2/catch_amalgamated.hpp>

#include <decsynth/markov.hpp>
#include <decsynth/pctl.hpp>
#include <decsynth/rng.hpp>

#include "helpers.hpp"
#include "oracle.hpp"

using namespace decsynth;
using pctl::parse_query;
using pctl::pmc;
using pctl::satisfies;

namespace {

ExplicitPDTMC branch_model() {
    // s0 -> 0.3 a, 0.7 b; a, b absorbing
    ExplicitPDTMC m;
    for (int i = 0; i < 3; ++i) m.add_state(StateTuple{});
    m.add_transition(0, 1, 0.3);
    m.add_transition(0, 2, 0.7);
    m.add_transition(1, 1, 1.0);
    m.add_transition(2, 2, 1.0);
    m.add_label("goal", 1);
    m.finalize();
    return m;
}

ExplicitPDTMC chain_to_done() {
    ExplicitPDTMC m;
    for (int i = 0; i < 3; ++i) m.add_state(StateTuple{});
    m.add_transition(0, 1, 0.5);
    m.add_transition(0, 0, 0.5);
    m.add_transition(1, 2, 1.0);
    m.add_transition(2, 2, 1.0);
    m.add_label("done", 2);
    auto& r = m.reward_structure("time");
    r.state_rewards[0] = 1.0;
    r.trans_rewards[RewardStructure::edge_key(1, 2)] = 3.0;
    m.finalize();
    return m;
}

} // namespace

TEST_CASE("parse_query handles the case-study shapes", "[pctl]") {
    auto c1 = parse_query("P>=0.75 [ !\"collision\" U \"done\" ]");
    CHECK(c1.kind == pctl::PctlQuery::Kind::prob);
    CHECK(c1.cmp == pctl::Cmp::ge);
    CHECK(c1.threshold == 0.75);
    CHECK(c1.path.kind == pctl::PathKind::until);

    auto sc1 = parse_query("R{\"risk\"}<=100 [ C<=2000 ]");
    CHECK(sc1.kind == pctl::PctlQuery::Kind::reward);
    CHECK(sc1.reward_name == "risk");
    CHECK(sc1.bound == 2000);

    auto q = parse_query("P=? [ X true ]");
    CHECK(q.cmp == pctl::Cmp::query);
}

TEST_CASE("P=?[X true] is 1 on any model", "[pctl]") {
    auto m = branch_model();
    CHECK_THAT(pmc(parse_query("P=? [ X true ]"), m), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("almost-sure reachability yields exactly 1", "[pctl]") {
    auto m = chain_to_done();
    CHECK(pmc(parse_query("P=? [ true U \"done\" ]"), m) == 1.0);
}

TEST_CASE("single-step branch probability", "[pctl]") {
    auto m = branch_model();
    CHECK_THAT(pmc(parse_query("P=? [ true U \"goal\" ]"), m), Catch::Matchers::WithinAbs(0.3, 1e-12));
    CHECK_THAT(pmc(parse_query("P=? [ X \"goal\" ]"), m), Catch::Matchers::WithinAbs(0.3, 1e-12));
}

TEST_CASE("prob0 states yield exactly 0", "[pctl]") {
    auto m = branch_model();
    auto v = pmc(parse_query("P=? [ \"goal\" U \"goal\" ]"), m);
    CHECK(v == 0.0); // s0 does not satisfy goal and cannot move through goal-states
}

TEST_CASE("satisfies compares the computed value against the bound", "[pctl]") {
    auto m = branch_model();
    CHECK(satisfies(parse_query("P>=0.25 [ true U \"goal\" ]"), m));
    CHECK_FALSE(satisfies(parse_query("P>=0.31 [ true U \"goal\" ]"), m));
    CHECK(satisfies(parse_query("P<=0.3 [ true U \"goal\" ]"), m));
}

TEST_CASE("reward with zero bound threshold is unsatisfiable on positive-reward models", "[pctl]") {
    auto m = chain_to_done();
    CHECK_FALSE(satisfies(parse_query("R{\"time\"}<=0 [ F \"done\" ]"), m));
}

TEST_CASE("reach reward solves the expected value", "[pctl]") {
    auto m = chain_to_done();
    // E[time] = expected 1-per-step at s0 (geometric, mean 2) + 3 on the final edge
    CHECK_THAT(pmc(parse_query("R{\"time\"}=? [ F \"done\" ]"), m), Catch::Matchers::WithinAbs(5.0, 1e-9));
}

TEST_CASE("reach reward is +inf when the target is not almost-sure", "[pctl]") {
    auto m = branch_model();
    m.reward_structure("steps").state_rewards[0] = 1.0;
    m.finalize();
    CHECK(std::isinf(pmc(parse_query("R{\"steps\"}=? [ F \"goal\" ]"), m)));
}

TEST_CASE("unknown labels and reward structures are rejected", "[pctl]") {
    auto m = branch_model();
    CHECK_THROWS_WITH(pmc(parse_query("P=? [ true U \"nope\" ]"), m),
                      Catch::Matchers::ContainsSubstring("UnknownLabel"));
    CHECK_THROWS_WITH(pmc(parse_query("R{\"nope\"}=? [ C<=5 ]"), m),
                      Catch::Matchers::ContainsSubstring("UnknownRewardStructure"));
}

TEST_CASE("syntax errors carry positions, bad operators are rejected", "[pctl]") {
    CHECK_THROWS_WITH(parse_query("Q=? [ X true ]"), Catch::Matchers::ContainsSubstring("UnknownOperator"));
    CHECK_THROWS_WITH(parse_query("P=? [ true U ]"), Catch::Matchers::ContainsSubstring("SyntaxError"));
    CHECK_THROWS_WITH(parse_query("P=? [ true U<=0 \"done\" ]"),
                      Catch::Matchers::ContainsSubstring("k >= 1"));
    CHECK_THROWS_WITH(parse_query("P>=1.5 [ X true ]"), Catch::Matchers::ContainsSubstring("outside"));
}

TEST_CASE("nested probability operators inside state formulas", "[pctl]") {
    auto m = branch_model();
    // states with P>=1[X "goal"]: exactly the goal state itself (self-loop)
    double v = pmc(parse_query("P=? [ true U P>=1 [ X \"goal\" ] ]"), m);
    CHECK_THAT(v, Catch::Matchers::WithinAbs(0.3, 1e-12));
    CHECK_THROWS_WITH(parse_query("P=? [ true U P=? [ X \"goal\" ] ]"),
                      Catch::Matchers::ContainsSubstring("comparison bound"));
}

TEST_CASE("derived sugar: disjunction and implication", "[pctl]") {
    auto m = branch_model();
    m.add_label("other", 2);
    m.finalize();
    double v = pmc(parse_query("P=? [ true U (\"goal\" | \"other\") ]"), m);
    CHECK_THAT(v, Catch::Matchers::WithinAbs(1.0, 1e-12));
    double w = pmc(parse_query("P=? [ (\"goal\" => \"other\") U \"goal\" ]"), m);
    CHECK_THAT(w, Catch::Matchers::WithinAbs(0.3, 1e-12));
}

TEST_CASE("bounded until matches exhaustive path enumeration", "[pctl][oracle]") {
    Rng rng(20240811);
    for (int iter = 0; iter < 40; ++iter) {
        auto m = helpers::random_instantiated_model(rng, 6);
        auto a = oracle::label_set(m, "a");
        auto b = oracle::label_set(m, "b");
        for (long long k : {1, 3, 8}) {
            double expect = oracle::bounded_until_paths(m, a, b, k, m.initial);
            double got = pmc(parse_query("P=? [ \"a\" U<=" + std::to_string(k) + " \"b\" ]"), m);
            REQUIRE_THAT(got, Catch::Matchers::WithinAbs(expect, 1e-9));
        }
    }
}

TEST_CASE("cumulative reward matches exhaustive path enumeration", "[pctl][oracle]") {
    Rng rng(7);
    for (int iter = 0; iter < 30; ++iter) {
        auto m = helpers::random_instantiated_model(rng, 6);
        const auto* r = m.find_reward("cost");
        REQUIRE(r != nullptr);
        for (long long k : {1, 4, 7}) {
            double expect = oracle::cumulative_paths(m, *r, k, m.initial);
            double got = pmc(parse_query("R{\"cost\"}=? [ C<=" + std::to_string(k) + " ]"), m);
            REQUIRE_THAT(got, Catch::Matchers::WithinAbs(expect, 1e-9));
        }
    }
}

TEST_CASE("bounded until is monotone in k and converges to unbounded until", "[pctl][property]") {
    Rng rng(99);
    for (int iter = 0; iter < 15; ++iter) {
        auto m = helpers::random_instantiated_model(rng, 6);
        double unbounded = pmc(parse_query("P=? [ \"a\" U \"b\" ]"), m);
        double prev = -1.0;
        double at_k = 0.0;
        for (long long k = 1; k <= 64; k *= 2) {
            at_k = pmc(parse_query("P=? [ \"a\" U<=" + std::to_string(k) + " \"b\" ]"), m);
            REQUIRE(at_k >= prev - 1e-12);
            REQUIRE(at_k <= unbounded + 1e-9);
            prev = at_k;
        }
        REQUIRE_THAT(at_k, Catch::Matchers::WithinAbs(unbounded, 1e-5));
    }
}

TEST_CASE("cumulative reward is non-decreasing in k", "[pctl][property]") {
    Rng rng(123);
    auto m = helpers::random_instantiated_model(rng, 6);
    double prev = 0.0;
    for (long long k = 1; k <= 32; k *= 2) {
        double v = pmc(parse_query("R{\"cost\"}=? [ C<=" + std::to_string(k) + " ]"), m);
        REQUIRE(v >= prev - 1e-12);
        prev = v;
    }
}

TEST_CASE("unbounded until agrees with value iteration", "[pctl][oracle]") {
    Rng rng(5150);
    for (int iter = 0; iter < 30; ++iter) {
        auto m = helpers::random_instantiated_model(rng, 8);
        auto a = oracle::label_set(m, "a");
        auto b = oracle::label_set(m, "b");
        double expect = oracle::until_value_iteration(m, a, b)[m.initial];
        double got = pmc(parse_query("P=? [ \"a\" U \"b\" ]"), m);
        REQUIRE_THAT(got, Catch::Matchers::WithinAbs(expect, 1e-9));
        REQUIRE(got >= 0.0);
        REQUIRE(got <= 1.0 + 1e-9);
    }
}

TEST_CASE("reach reward agrees with value iteration including infinities", "[pctl][oracle]") {
    Rng rng(31337);
    int infinite_seen = 0;
    for (int iter = 0; iter < 40; ++iter) {
        auto m = helpers::random_instantiated_model(rng, 7);
        const auto* r = m.find_reward("cost");
        auto b = oracle::label_set(m, "b");
        double expect = oracle::reach_reward_value_iteration(m, *r, b, m.initial);
        double got = pmc(parse_query("R{\"cost\"}=? [ F \"b\" ]"), m);
        if (std::isinf(expect)) {
            ++infinite_seen;
            REQUIRE(std::isinf(got));
        } else {
            REQUIRE_THAT(got, Catch::Matchers::WithinAbs(expect, 1e-7));
        }
    }
    CHECK(infinite_seen > 0);
}
