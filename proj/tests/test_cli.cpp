#include <catch2/catch_amalgamated.hpp>

#include <decsynth/cli_app.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace decsynth;
namespace fs = std::filesystem;

namespace {

std::string models_dir() {
    const char* env = std::getenv("DECSYNTH_MODELS");
    return env ? env : "models";
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("decsynth_test_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(std::vector<std::string> args) { return cli::run(std::move(args)); }

void write(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    os << content;
}

const char* kSamplesCsv =
    "true,pred,v1\n"
    "1,1,1\n1,1,1\n1,1,0\n1,2,0\n"
    "2,2,1\n2,2,0\n2,1,0\n2,2,1\n";

} // namespace

TEST_CASE("pipeline: quantify, build, augment, synth, check, pareto", "[cli]") {
    TempDir tmp;
    write(tmp.file("samples.csv"), kSamplesCsv);

    REQUIRE(run_cli({"quantify", "--input", tmp.file("samples.csv"), "--out", tmp.file("tensor.json")}) ==
            0);
    auto tensor_json = nlohmann::json::parse(cli::slurp(tmp.file("tensor.json")));
    CHECK(tensor_json["classes"] == 2);
    CHECK(tensor_json["verification_methods"] == 1);
    CHECK(tensor_json.contains("manifest"));

    REQUIRE(run_cli({"build", "--model", models_dir() + "/robot.pm", "--const", "p_collider=0.5",
                     "--const", "p_occ=0.4", "--out", tmp.file("robot.txt")}) == 0);
    CHECK(fs::exists(tmp.file("robot.txt.manifest.json")));

    REQUIRE(run_cli({"augment", "--model", tmp.file("robot.txt"), "--tensor", tmp.file("tensor.json"),
                     "--out", tmp.file("aug.txt"), "--source", models_dir() + "/robot.pm", "--emit-pm",
                     tmp.file("aug.pm")}) == 0);
    CHECK(fs::exists(tmp.file("aug.pm")));

    write(tmp.file("reqs.txt"),
          "constraint: P>=0.7 [ !\"collision\" U \"done\" ]\n"
          "maximise: P=? [ !\"collision\" U \"done\" ]\n"
          "minimise: R{\"time\"}=? [ F \"done\" ]\n");
    REQUIRE(run_cli({"synth", "--model", tmp.file("aug.txt"), "--requirements", tmp.file("reqs.txt"),
                     "--method", "grid", "--step", "0.5", "--out", tmp.file("front.json"), "--csv",
                     tmp.file("front.csv")}) == 0);
    auto front_json = nlohmann::json::parse(cli::slurp(tmp.file("front.json")));
    CHECK(front_json["evaluated"] == 81); // 3^4 compositions at step 0.5
    CHECK(front_json["front"].size() >= 1);

    REQUIRE(run_cli({"pareto", "--front", tmp.file("front.json"), "--reference", tmp.file("front.csv"),
                     "--hv-scale", "1.5", "--out", tmp.file("scores.json")}) == 0);
    auto scores = nlohmann::json::parse(cli::slurp(tmp.file("scores.json")));
    CHECK(scores["igd"] == 0.0); // front vs itself through the CSV encoding

    // synth can score against a reference in the same run
    REQUIRE(run_cli({"synth", "--model", tmp.file("aug.txt"), "--requirements", tmp.file("reqs.txt"),
                     "--method", "grid", "--step", "0.5", "--reference", tmp.file("front.json"),
                     "--out", tmp.file("front2.json"), "--force"}) == 0);
    auto front2 = nlohmann::json::parse(cli::slurp(tmp.file("front2.json")));
    CHECK(front2["igd"] == 0.0);
    CHECK(front2["hv"].get<double>() > 0.0);
}

TEST_CASE("check prints quantitative values", "[cli]") {
    TempDir tmp;
    REQUIRE(run_cli({"build", "--model", models_dir() + "/robot.pm", "--out", tmp.file("robot.txt")}) ==
            0);
    // parametric model needs an assignment for check
    CHECK(run_cli({"check", "--model", tmp.file("robot.txt"), "--query", "P=? [ X true ]"}) == 1);
    write(tmp.file("assign.json"),
          R"({"x1wait": 0.0, "x1go": 1.0, "x2wait": 1.0, "x2go": 0.0})");
    CHECK(run_cli({"check", "--model", tmp.file("robot.txt"), "--query", "P=? [ X true ]",
                   "--assignment", tmp.file("assign.json")}) == 0);
    CHECK(run_cli({"check", "--model", tmp.file("robot.txt"), "--query",
                   "P>=0.9 [ !\"collision\" U \"done\" ]", "--assignment",
                   tmp.file("assign.json")}) == 0);
}

TEST_CASE("usage errors exit with 2, domain errors with 1", "[cli]") {
    TempDir tmp;
    CHECK(run_cli({"no-such-subcommand"}) == 2);
    CHECK(run_cli({"build"}) == 2); // missing required options
    // parse error inside a file -> domain error
    write(tmp.file("bad.pm"), "module M\n x : [0..1]\n");
    CHECK(run_cli({"build", "--model", tmp.file("bad.pm"), "--out", tmp.file("out.txt")}) == 1);
}

TEST_CASE("manifest drift is refused without --force", "[cli]") {
    TempDir tmp;
    write(tmp.file("samples.csv"), kSamplesCsv);
    REQUIRE(run_cli({"quantify", "--input", tmp.file("samples.csv"), "--out", tmp.file("t.json")}) == 0);
    // same inputs: fine
    REQUIRE(run_cli({"quantify", "--input", tmp.file("samples.csv"), "--out", tmp.file("t.json")}) == 0);
    // changed input, same output path: refused
    write(tmp.file("samples.csv"), std::string(kSamplesCsv) + "1,1,1\n");
    CHECK(run_cli({"quantify", "--input", tmp.file("samples.csv"), "--out", tmp.file("t.json")}) == 1);
    CHECK(run_cli({"--force", "quantify", "--input", tmp.file("samples.csv"), "--out",
                   tmp.file("t.json")}) == 0);
}

TEST_CASE("all artifact formats round-trip through their readers", "[cli]") {
    TempDir tmp;
    write(tmp.file("samples.csv"), kSamplesCsv);
    REQUIRE(run_cli({"quantify", "--input", tmp.file("samples.csv"), "--out", tmp.file("t.json")}) == 0);
    REQUIRE(run_cli({"build", "--model", models_dir() + "/robot.pm", "--out", tmp.file("m.txt")}) == 0);
    REQUIRE(run_cli({"augment", "--model", tmp.file("m.txt"), "--tensor", tmp.file("t.json"), "--out",
                     tmp.file("a.txt")}) == 0);
    write(tmp.file("reqs.txt"), "maximise: P=? [ !\"collision\" U \"done\" ]\n"
                                "minimise: R{\"time\"}=? [ F \"done\" ]\n");
    REQUIRE(run_cli({"synth", "--model", tmp.file("a.txt"), "--requirements", tmp.file("reqs.txt"),
                     "--method", "grid", "--step", "1", "--deterministic", "--out", tmp.file("f.json"),
                     "--csv", tmp.file("f.csv")}) == 0);

    // 1. tensor JSON
    auto tensor = tensor_from_json(nlohmann::json::parse(cli::slurp(tmp.file("t.json"))));
    CHECK(tensor.K() == 2);
    // 2. explicit model text
    {
        std::istringstream is(cli::slurp(tmp.file("m.txt")));
        auto m = ExplicitPDTMC::load(is);
        CHECK(m.num_states() > 0);
    }
    // 3. augmented model text
    {
        std::istringstream is(cli::slurp(tmp.file("a.txt")));
        auto m = ExplicitPDTMC::load(is);
        CHECK(m.augmented);
        // 4 + 5. front JSON and front CSV
        auto front = synth::front_from_json(nlohmann::json::parse(cli::slurp(tmp.file("f.json"))));
        auto csv_front = synth::front_from_csv(cli::slurp(tmp.file("f.csv")), front.objectives);
        REQUIRE(front.members.size() == csv_front.members.size());
    }
}

TEST_CASE("sim dataset and sim validate write their artifacts", "[cli]") {
    TempDir tmp;
    write(tmp.file("samples.csv"), kSamplesCsv);
    REQUIRE(run_cli({"quantify", "--input", tmp.file("samples.csv"), "--out", tmp.file("t.json")}) == 0);
    REQUIRE(run_cli({"sim", "dataset", "--per-class", "20", "--tensor", tmp.file("t.json"),
                     "--features", tmp.file("features.csv"), "--samples", tmp.file("rows.csv"),
                     "--seed", "3"}) == 0);
    auto feature_text = cli::slurp(tmp.file("features.csv"));
    CHECK(feature_text.rfind("x_diff,", 0) == 0);
    {
        std::istringstream is(cli::slurp(tmp.file("rows.csv")));
        uint32_t n = 0;
        auto rows = read_samples_csv(is, n);
        CHECK(n == 1);
        CHECK(rows.size() == 40);
    }

    REQUIRE(run_cli({"build", "--model", models_dir() + "/robot.pm", "--out", tmp.file("m.txt")}) == 0);
    REQUIRE(run_cli({"augment", "--model", tmp.file("m.txt"), "--tensor", tmp.file("t.json"), "--out",
                     tmp.file("a.txt")}) == 0);
    nlohmann::json values = nlohmann::json::object();
    for (const auto& name : {"x1wait_v0", "x1wait_v1", "x2wait_v0", "x2wait_v1"}) values[name] = 0.0;
    for (const auto& name : {"x1go_v0", "x1go_v1", "x2go_v0", "x2go_v1"}) values[name] = 1.0;
    write(tmp.file("values.json"), values.dump());
    REQUIRE(run_cli({"sim", "validate", "--model", tmp.file("a.txt"), "--tensor", tmp.file("t.json"),
                     "--values", tmp.file("values.json"), "--p-collider", "0.4", "--journeys", "50",
                     "--waypoints", "5", "--pool-size", "200", "--seed", "9", "--out",
                     tmp.file("val.json")}) == 0);
    auto val = nlohmann::json::parse(cli::slurp(tmp.file("val.json")));
    CHECK(val["journeys"] == 50);
    CHECK(val["mean_time"].get<double>() > 0.0);
    CHECK(val.contains("manifest"));
}

TEST_CASE("seed falls back to DECSYNTH_SEED", "[cli]") {
    TempDir tmp;
    write(tmp.file("samples.csv"), kSamplesCsv);
    REQUIRE(run_cli({"quantify", "--input", tmp.file("samples.csv"), "--out", tmp.file("t.json")}) == 0);
    REQUIRE(run_cli({"build", "--model", models_dir() + "/robot.pm", "--out", tmp.file("m.txt")}) == 0);
    REQUIRE(run_cli({"augment", "--model", tmp.file("m.txt"), "--tensor", tmp.file("t.json"), "--out",
                     tmp.file("a.txt")}) == 0);
    write(tmp.file("reqs.txt"), "maximise: P=? [ !\"collision\" U \"done\" ]\n");
    setenv("DECSYNTH_SEED", "31337", 1);
    REQUIRE(run_cli({"synth", "--model", tmp.file("a.txt"), "--requirements", tmp.file("reqs.txt"),
                     "--method", "ga", "--population", "8", "--max-evals", "64", "--out",
                     tmp.file("f.json")}) == 0);
    unsetenv("DECSYNTH_SEED");
    auto front = nlohmann::json::parse(cli::slurp(tmp.file("f.json")));
    CHECK(front["seed"] == 31337);
}
