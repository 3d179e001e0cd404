#include <catch2/catch_amalgamated.hpp>

#include <decsynth/augment.hpp>
#include <decsynth/model_lang.hpp>
#include <decsynth/synth.hpp>

#include "helpers.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace decsynth;
using synth::GaSettings;
using synth::ParetoFront;
using synth::Requirements;
using synth::SearchOptions;

namespace {

std::string models_dir() {
    const char* env = std::getenv("DECSYNTH_MODELS");
    return env ? env : "models";
}

ExplicitPDTMC robot_model(double p_collider = 0.5, double p_occ = 0.4) {
    std::ifstream is(models_dir() + "/robot.pm");
    REQUIRE(is.good());
    std::ostringstream ss;
    ss << is.rdbuf();
    lang::BuildOptions opts;
    opts.const_overrides["p_collider"] = fmt_double(p_collider);
    opts.const_overrides["p_occ"] = fmt_double(p_occ);
    return lang::build(lang::parse(ss.str()), opts);
}

Requirements robot_requirements(double threshold = 0.75) {
    return synth::parse_requirements(
        "constraint: P>=" + fmt_display(threshold) +
        " [ !\"collision\" U \"done\" ]\n"
        "maximise: P=? [ !\"collision\" U \"done\" ]\n"
        "minimise: R{\"time\"}=? [ F \"done\" ]\n");
}

ConfusionTensor tensor_n1() {
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

ConfusionTensor tensor_n0() {
    ConfusionTensor t(2, 0);
    t.count(1, 1, 0) = 85;
    t.count(1, 2, 0) = 15;
    t.count(2, 1, 0) = 20;
    t.count(2, 2, 0) = 80;
    return t;
}

ExplicitPDTMC augmented_robot(const ConfusionTensor& t) {
    AugmentationSpec spec;
    spec.tensor = t;
    return augment(robot_model(), spec);
}

ParetoFront make_front(std::vector<std::vector<double>> objective_vectors,
                       std::vector<synth::ObjectiveMeta> meta) {
    ParetoFront f;
    f.objectives = std::move(meta);
    for (auto& v : objective_vectors) {
        synth::CandidateResult m;
        m.objective_values = std::move(v);
        f.members.push_back(std::move(m));
    }
    return f;
}

std::vector<synth::ObjectiveMeta> two_min() {
    return {{"o1", false, false}, {"o2", false, false}};
}

} // namespace

TEST_CASE("requirements files parse into constraints and objectives", "[synth]") {
    auto reqs = synth::parse_requirements(
        "# robot requirements\n"
        "constraint: P>=0.75 [ !\"collision\" U \"done\" ]\n"
        "maximise: P=? [ !\"collision\" U \"done\" ]\n"
        "minimise: R{\"time\"}=? [ F \"done\" ]\n");
    REQUIRE(reqs.constraints.size() == 1);
    REQUIRE(reqs.objectives.size() == 2);
    CHECK(reqs.objectives[0].maximise);
    CHECK_FALSE(reqs.objectives[1].maximise);
    CHECK_THROWS_WITH(synth::parse_requirements("constraint: P=? [ X true ]\n"),
                      Catch::Matchers::ContainsSubstring("comparison bound"));
    CHECK_THROWS_WITH(synth::parse_requirements("minimise: P>=0.5 [ X true ]\n"),
                      Catch::Matchers::ContainsSubstring("quantitative"));
}

TEST_CASE("grid over the DNN-perception robot model evaluates 11^4 candidates", "[synth]") {
    auto aug = augmented_robot(tensor_n1());
    auto front = synth::grid_search(aug, robot_requirements(), 0.1, false, SearchOptions{});
    CHECK(front.evaluated == 14641);
    CHECK_FALSE(front.members.empty());
    CHECK_FALSE(front.infeasible_all);
    // dominance soundness re-scan
    for (size_t i = 0; i < front.members.size(); ++i)
        for (size_t j = 0; j < front.members.size(); ++j)
            if (i != j)
                REQUIRE_FALSE(synth::detail::dominates(front.members[i], front.members[j],
                                                       front.objectives));
}

TEST_CASE("deterministic grids enumerate one-hot decisions only", "[synth]") {
    auto aug = augmented_robot(tensor_n1());
    auto front = synth::grid_search(aug, robot_requirements(), 0.5, true, SearchOptions{});
    CHECK(front.evaluated == 16); // 2^4 one-hot combinations
    for (const auto& m : front.members)
        for (double v : m.values) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("single-objective grids keep the best candidates including ties", "[synth]") {
    auto m = robot_model();
    auto reqs = synth::parse_requirements("maximise: P=? [ !\"collision\" U \"done\" ]\n");
    auto front = synth::grid_search(m, reqs, 0.5, false, SearchOptions{});
    REQUIRE_FALSE(front.members.empty());
    double best = front.members[0].objective_values[0];
    for (const auto& mem : front.members) CHECK(mem.objective_values[0] == best);
    // safety is maximal exactly when x2wait = 1, independently of x1; ties kept
    CHECK(front.members.size() == 3); // x1wait in {0, .5, 1} with x2wait = 1
}

TEST_CASE("infeasible-all is reported distinctly", "[synth]") {
    auto m = robot_model();
    auto reqs = synth::parse_requirements(
        "constraint: R{\"time\"}<=0.001 [ C<=10 ]\n"
        "minimise: R{\"time\"}=? [ C<=10 ]\n");
    auto front = synth::grid_search(m, reqs, 0.5, false, SearchOptions{});
    CHECK(front.infeasible_all);
    CHECK(front.members.empty());
}

TEST_CASE("budget overruns abort before evaluation", "[synth]") {
    auto aug = augmented_robot(tensor_n1());
    SearchOptions opts;
    opts.budget = 100;
    CHECK_THROWS_WITH(synth::grid_search(aug, robot_requirements(), 0.1, false, opts),
                      Catch::Matchers::ContainsSubstring("BudgetExceeded"));
}

TEST_CASE("grid step validation", "[synth]") {
    auto m = robot_model();
    CHECK_THROWS_WITH(synth::grid_search(m, robot_requirements(), 0.3, false, SearchOptions{}),
                      Catch::Matchers::ContainsSubstring("integral"));
    CHECK_THROWS_WITH(synth::grid_search(m, robot_requirements(), 0.0, false, SearchOptions{}),
                      Catch::Matchers::ContainsSubstring("step"));
}

TEST_CASE("grid completeness: every feasible grid point is on or dominated by the front",
          "[synth][property]") {
    auto m = robot_model();
    SearchOptions opts;
    opts.keep_all = true;
    auto front = synth::grid_search(m, robot_requirements(), 0.25, false, opts);
    REQUIRE_FALSE(front.all_candidates.empty());
    for (const auto& cand : front.all_candidates) {
        if (!cand.feasible) continue;
        bool on_front = false, dominated = false;
        for (const auto& fm : front.members) {
            if (fm.values == cand.values) on_front = true;
            if (synth::detail::dominates(fm, cand, front.objectives)) dominated = true;
        }
        REQUIRE((on_front || dominated));
    }
}

TEST_CASE("seed determinism: serialized fronts are byte-identical", "[synth]") {
    auto aug = augmented_robot(tensor_n0());
    GaSettings settings;
    settings.population = 20;
    settings.max_evaluations = 400;
    settings.seed = 7;
    auto a = synth::evolutionary_search(aug, robot_requirements(), settings, false, SearchOptions{});
    auto b = synth::evolutionary_search(aug, robot_requirements(), settings, false, SearchOptions{});
    CHECK(synth::front_to_json(a).dump() == synth::front_to_json(b).dump());
    settings.seed = 8;
    auto c = synth::evolutionary_search(aug, robot_requirements(), settings, false, SearchOptions{});
    CHECK(synth::front_to_json(a).dump() != synth::front_to_json(c).dump());
}

TEST_CASE("GA settings are validated", "[synth]") {
    auto m = robot_model();
    GaSettings bad;
    bad.population = 5;
    CHECK_THROWS_WITH(synth::evolutionary_search(m, robot_requirements(), bad, false, SearchOptions{}),
                      Catch::Matchers::ContainsSubstring("population"));
    bad.population = 8;
    bad.max_evaluations = 4;
    CHECK_THROWS_WITH(synth::evolutionary_search(m, robot_requirements(), bad, false, SearchOptions{}),
                      Catch::Matchers::ContainsSubstring("max_evaluations"));
}

TEST_CASE("deterministic GA front is a subset of the exhaustive deterministic grid front",
          "[synth][oracle]") {
    auto aug = augmented_robot(tensor_n1());
    auto reqs = robot_requirements();
    auto grid = synth::grid_search(aug, reqs, 1.0, true, SearchOptions{});
    GaSettings settings;
    settings.population = 16;
    settings.max_evaluations = 480;
    settings.seed = 11;
    auto ga = synth::evolutionary_search(aug, reqs, settings, true, SearchOptions{});
    REQUIRE_FALSE(ga.members.empty());
    for (const auto& m : ga.members) {
        bool found = false;
        for (const auto& g : grid.members) found |= g.values == m.values;
        REQUIRE(found);
    }
    double hv_grid = synth::hv(grid, grid, 1.5);
    double hv_ga = synth::hv(ga, grid, 1.5);
    CHECK(hv_ga >= 0.95 * hv_grid);
}

TEST_CASE("igd of a front against itself is zero", "[synth]") {
    auto f = make_front({{0.5, 1.0}, {0.7, 0.5}}, two_min());
    CHECK(synth::igd(f, f) == 0.0);
}

TEST_CASE("igd matches the hand computation", "[synth]") {
    auto ref = make_front({{0.0, 0.0}, {2.0, 2.0}}, two_min());
    auto f = make_front({{1.0, 1.0}}, two_min());
    CHECK_THAT(synth::igd(f, ref), Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-12));
}

TEST_CASE("igd and hv reject empty or mismatched fronts", "[synth]") {
    auto f = make_front({{1.0, 1.0}}, two_min());
    ParetoFront empty;
    empty.objectives = two_min();
    CHECK_THROWS_WITH(synth::igd(f, empty), Catch::Matchers::ContainsSubstring("EmptyFront"));
    CHECK_THROWS_WITH(synth::hv(empty, f, 1.5), Catch::Matchers::ContainsSubstring("EmptyFront"));
    auto three = make_front({{1.0, 1.0, 1.0}}, {{"a", false, false}, {"b", false, false}, {"c", false, false}});
    CHECK_THROWS_WITH(synth::igd(f, three), Catch::Matchers::ContainsSubstring("ArityMismatch"));
}

TEST_CASE("hv of a single point against a unit nadir", "[synth]") {
    auto ref = make_front({{1.0, 1.0}}, two_min());
    auto f = make_front({{0.0, 0.0}}, two_min());
    CHECK_THAT(synth::hv(f, ref, 1.0), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("hv staircase sweep matches the hand computation", "[synth]") {
    auto ref = make_front({{2.0, 2.0}}, two_min());
    auto f = make_front({{0.0, 1.0}, {1.0, 0.0}}, two_min());
    CHECK_THAT(synth::hv(f, ref, 1.0), Catch::Matchers::WithinAbs(3.0, 1e-12));
}

TEST_CASE("hv converts maximise-probability objectives by complement", "[synth]") {
    std::vector<synth::ObjectiveMeta> meta{{"p", true, true}, {"r", false, false}};
    auto ref = make_front({{0.0, 2.0}}, meta); // converted: (1, 2)
    auto f = make_front({{1.0, 1.0}}, meta);   // converted: (0, 1)
    CHECK_THAT(synth::hv(f, ref, 1.0), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("hv rejects orientations it cannot convert", "[synth]") {
    std::vector<synth::ObjectiveMeta> meta{{"r", true, false}, {"r2", false, false}};
    auto ref = make_front({{1.0, 2.0}}, meta); // negated reward becomes -1
    CHECK_THROWS_WITH(synth::hv(ref, ref, 1.5),
                      Catch::Matchers::ContainsSubstring("NonMinimizedOrientation"));
}

TEST_CASE("monte-carlo hv agrees with the exact sweep on a 3-objective product front", "[synth]") {
    std::vector<synth::ObjectiveMeta> meta{{"a", false, false}, {"b", false, false}, {"c", false, false}};
    // single point: exact volume (1-x)(1-y)(1-z)
    auto ref = make_front({{1.0, 1.0, 1.0}}, meta);
    auto f = make_front({{0.25, 0.5, 0.125}}, meta);
    double exact = 0.75 * 0.5 * 0.875;
    CHECK_THAT(synth::hv(f, ref, 1.0), Catch::Matchers::WithinAbs(exact, 5e-3));
}

TEST_CASE("adding a verification method never worsens the deterministic front", "[synth][property]") {
    // verified buckets strictly more accurate in the n=1 fixture
    auto aug0 = augmented_robot(marginalize(tensor_n1()));
    auto aug1 = augmented_robot(tensor_n1());
    auto reqs = robot_requirements();
    auto f0 = synth::grid_search(aug0, reqs, 0.1, false, SearchOptions{});
    auto f1 = synth::grid_search(aug1, reqs, 0.1, false, SearchOptions{});
    auto perfect = synth::grid_search(robot_model(), reqs, 0.1, false, SearchOptions{});
    double hv0 = synth::hv(f0, perfect, 1.5);
    double hv1 = synth::hv(f1, perfect, 1.5);
    CHECK(hv1 >= hv0 - 1e-9);
    CHECK(synth::igd(f1, perfect) <= synth::igd(f0, perfect) + 1e-9);
}

TEST_CASE("front JSON and CSV round-trip", "[synth]") {
    auto aug = augmented_robot(tensor_n0());
    auto front = synth::grid_search(aug, robot_requirements(), 0.5, false, SearchOptions{});
    auto j = synth::front_to_json(front);
    auto back = synth::front_from_json(j);
    REQUIRE(back.members.size() == front.members.size());
    CHECK(synth::front_to_json(back).dump() == j.dump());

    auto csv = synth::front_to_csv(front);
    auto from_csv = synth::front_from_csv(csv, front.objectives);
    REQUIRE(from_csv.members.size() == front.members.size());
    for (size_t i = 0; i < front.members.size(); ++i)
        CHECK(from_csv.members[i].objective_values == front.members[i].objective_values);
    // indicator computations agree across the two encodings
    CHECK(synth::igd(from_csv, front) == 0.0);
}
