#pragma once

// decsynth command line: quantify -> build -> augment -> check/synth ->
// pareto -> sim. Every artifact embeds (or sits next to) a run manifest with
// content hashes of its inputs; re-running onto an existing artifact with
// changed inputs is refused without --force.

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "augment.hpp"
#include "markov.hpp"
#include "model_lang.hpp"
#include "pctl.hpp"
#include "robot_sim.hpp"
#include "synth.hpp"
#include "uncertainty.hpp"

namespace decsynth::cli {

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

inline std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail("IoError", "cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline void spit(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail("IoError", "cannot write " + path);
    os << content;
}

inline uint64_t seed_or_env(uint64_t seed, bool seed_given) {
    if (seed_given) return seed;
    if (const char* env = std::getenv("DECSYNTH_SEED")) {
        long long v = 0;
        if (parse_ll(env, v)) return static_cast<uint64_t>(v);
    }
    return seed;
}

// ---------------------------------------------------------------------------
// run manifests

struct Manifest {
    std::string subcommand;
    nlohmann::json inputs = nlohmann::json::object(); // path -> sha256
    nlohmann::json options = nlohmann::json::object();
    uint64_t seed = 0;

    void add_input(const std::string& path, const std::string& content) {
        inputs[path] = sha256_hex(content);
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"tool", "decsynth"}, {"version", kToolVersion},
                              {"subcommand", subcommand}, {"inputs", inputs},
                              {"options", options},     {"seed", seed}};
    }
};

inline bool file_exists(const std::string& path) {
    std::ifstream is(path);
    return is.good();
}

// Inspects an existing artifact (embedded manifest or `.manifest.json`
// sidecar) and refuses to overwrite it when the recorded input hashes differ.
inline void refuse_on_drift(const std::string& out_path, const Manifest& manifest, bool force) {
    if (force) return;
    nlohmann::json previous;
    if (file_exists(out_path)) {
        try {
            auto j = nlohmann::json::parse(slurp(out_path));
            if (j.contains("manifest")) previous = j["manifest"];
        } catch (...) {
        }
    }
    if (previous.is_null() && file_exists(out_path + ".manifest.json")) {
        try {
            previous = nlohmann::json::parse(slurp(out_path + ".manifest.json"));
        } catch (...) {
        }
    }
    if (previous.is_null()) return;
    if (previous.value("inputs", nlohmann::json::object()) != manifest.inputs)
        fail("InputDrift", out_path + " was produced from different inputs; pass --force to replace it");
}

inline void write_json_artifact(const std::string& path, nlohmann::json body, const Manifest& manifest,
                                bool force) {
    refuse_on_drift(path, manifest, force);
    body["manifest"] = manifest.to_json();
    spit(path, body.dump(2) + "\n");
}

inline void write_text_artifact(const std::string& path, const std::string& content,
                                const Manifest& manifest, bool force) {
    refuse_on_drift(path, manifest, force);
    spit(path, content);
    spit(path + ".manifest.json", manifest.to_json().dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// shared pieces

inline ControllerAssignment assignment_from_values(const ExplicitPDTMC& model,
                                                   const nlohmann::json& values) {
    ControllerAssignment a = model.assignment_shell();
    for (const auto& [name, v] : values.items()) a.values[name] = v.get<double>();
    return a;
}

inline synth::ParetoFront load_front(const std::string& path,
                                     const std::vector<synth::ObjectiveMeta>* fallback_meta) {
    std::string text = slurp(path);
    if (!text.empty() && text.find_first_not_of(" \t\r\n") != std::string::npos &&
        text[text.find_first_not_of(" \t\r\n")] == '{') {
        return synth::front_from_json(nlohmann::json::parse(text));
    }
    if (!fallback_meta)
        fail("FormatError", path + " is a CSV front; pair it with a JSON front that carries "
                                   "objective metadata");
    return synth::front_from_csv(text, *fallback_meta);
}

inline lang::BuildOptions build_options(const std::vector<std::string>& consts,
                                        const std::vector<std::string>& params, uint64_t cap) {
    lang::BuildOptions opts;
    for (const auto& c : consts) {
        auto eq = c.find('=');
        if (eq == std::string::npos) fail("RangeError", "--const expects name=value, got '" + c + "'");
        opts.const_overrides[c.substr(0, eq)] = c.substr(eq + 1);
    }
    for (const auto& p : params) opts.parameters.insert(p);
    opts.state_cap = cap;
    return opts;
}

// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args) {
    CLI::App app{"DNN-perception discrete-event controller synthesis toolkit"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    bool force = false;
    app.add_flag("--force", force, "overwrite artifacts even when input hashes drifted");

    // ---- quantify ----------------------------------------------------------
    auto* quantify = app.add_subcommand("quantify", "verification-labelled CSV -> confusion tensor JSON");
    std::string q_input, q_out;
    int q_classes = 0;
    bool q_marginalize = false;
    quantify->add_option("--input", q_input, "samples CSV (true,pred,v1..vn)")->required();
    quantify->add_option("--classes", q_classes, "number of classes K (default: largest label seen)");
    quantify->add_flag("--marginalize", q_marginalize, "drop verification outcomes (n=0 tensor)");
    quantify->add_option("--out", q_out, "tensor JSON path")->required();

    // ---- build -------------------------------------------------------------
    auto* build = app.add_subcommand("build", ".pm model -> explicit pdtmc text");
    std::string b_model, b_out;
    std::vector<std::string> b_consts, b_params;
    uint64_t b_cap = kStateCapDefault;
    build->add_option("--model", b_model, ".pm source")->required();
    build->add_option("--const", b_consts, "constant override name=value")->take_all();
    build->add_option("--param", b_params, "declare a symbolic parameter")->take_all();
    build->add_option("--cap", b_cap, "state-count cap");
    build->add_option("--out", b_out, "explicit model path")->required();

    // ---- augment -----------------------------------------------------------
    auto* aug_cmd = app.add_subcommand("augment", "explicit model + tensor -> DNN-perception model");
    std::string a_model, a_tensor, a_out, a_prefix, a_source, a_emit_pm;
    bool a_deterministic = false;
    uint64_t a_cap = kStateCapDefault;
    aug_cmd->add_option("--model", a_model, "perfect-perception explicit model")->required();
    aug_cmd->add_option("--tensor", a_tensor, "confusion tensor JSON")->required();
    aug_cmd->add_option("--prefix", a_prefix, "prefix for generated parameter names");
    aug_cmd->add_flag("--deterministic", a_deterministic, "controller class intended for synthesis");
    aug_cmd->add_option("--cap", a_cap, "state-count cap");
    aug_cmd->add_option("--out", a_out, "augmented explicit model path")->required();
    aug_cmd->add_option("--source", a_source, ".pm source of the perfect model (for --emit-pm)");
    aug_cmd->add_option("--emit-pm", a_emit_pm, "also emit a DNN-perception .pm for inspection");

    // ---- check -------------------------------------------------------------
    auto* check = app.add_subcommand("check", "evaluate a PCTL query on a model");
    std::string c_model, c_query, c_values;
    check->add_option("--model", c_model, "explicit model")->required();
    check->add_option("--query", c_query, "PCTL query text")->required();
    check->add_option("--assignment", c_values, "JSON {param: value} for parametric models");

    // ---- synth -------------------------------------------------------------
    auto* synth_cmd = app.add_subcommand("synth", "synthesize Pareto-optimal controllers");
    std::string s_model, s_reqs, s_out, s_csv, s_method = "grid";
    double s_step = 0.1;
    int s_population = 100;
    uint64_t s_max_evals = 10000, s_budget = 100'000'000, s_seed = 0;
    bool s_deterministic = false, s_all = false;
    unsigned s_jobs = default_jobs();
    double s_sbx_eta = 15.0, s_mut_eta = 20.0, s_crossover = 0.9, s_mut_rate = -1.0;
    bool s_seed_given = false;
    synth_cmd->add_option("--model", s_model, "explicit (augmented) model")->required();
    synth_cmd->add_option("--requirements", s_reqs, "requirements file")->required();
    synth_cmd->add_option("--method", s_method, "grid | ga")->check(CLI::IsMember({"grid", "ga"}));
    synth_cmd->add_option("--step", s_step, "grid step (1/step integral)");
    synth_cmd->add_option("--population", s_population, "GA population size");
    synth_cmd->add_option("--max-evals", s_max_evals, "GA evaluation budget");
    synth_cmd->add_option("--seed", s_seed, "GA seed (or DECSYNTH_SEED)")
        ->each([&](const std::string&) { s_seed_given = true; });
    synth_cmd->add_flag("--deterministic", s_deterministic, "one-hot controllers only");
    synth_cmd->add_option("--budget", s_budget, "candidate cap");
    synth_cmd->add_option("--jobs", s_jobs, "parallel evaluation workers");
    synth_cmd->add_flag("--all-candidates", s_all, "record every evaluated candidate");
    synth_cmd->add_option("--sbx-eta", s_sbx_eta, "SBX distribution index");
    synth_cmd->add_option("--mutation-eta", s_mut_eta, "polynomial mutation index");
    synth_cmd->add_option("--crossover-rate", s_crossover, "crossover probability");
    synth_cmd->add_option("--mutation-rate", s_mut_rate, "per-gene mutation rate (default 1/genes)");
    synth_cmd->add_option("--out", s_out, "front JSON artifact")->required();
    synth_cmd->add_option("--csv", s_csv, "also write the CSV exchange front");
    std::string s_reference;
    double s_hv_scale = 1.5;
    synth_cmd->add_option("--reference", s_reference, "score IGD/HV against this front");
    synth_cmd->add_option("--hv-scale", s_hv_scale, "nadir scale for --reference scoring");

    // ---- pareto ------------------------------------------------------------
    auto* pareto = app.add_subcommand("pareto", "score a front against a reference (IGD / HV)");
    std::string p_front, p_reference, p_out;
    double p_scale = 1.5;
    pareto->add_option("--front", p_front, "front JSON or CSV")->required();
    pareto->add_option("--reference", p_reference, "reference front JSON or CSV")->required();
    pareto->add_option("--hv-scale", p_scale, "nadir scaling factor (1.5 robot study, 1.75 SafeSCAD)");
    pareto->add_option("--out", p_out, "write scores JSON");

    // ---- sim ---------------------------------------------------------------
    auto* sim_cmd = app.add_subcommand("sim", "robot journey simulator");
    sim_cmd->require_subcommand(1);
    sim::SimConfig base_cfg;

    auto* dataset = sim_cmd->add_subcommand("dataset", "generate a verification-labelled dataset");
    size_t d_per_class = 6000;
    std::string d_tensor, d_features, d_samples;
    uint64_t d_seed = 0;
    bool d_seed_given = false;
    dataset->add_option("--per-class", d_per_class, "instances per class");
    dataset->add_option("--tensor", d_tensor, "surrogate tensor JSON (enables sample output)");
    dataset->add_option("--features", d_features, "normalized encounter CSV path")->required();
    dataset->add_option("--samples", d_samples, "verified-sample CSV path (needs --tensor)");
    dataset->add_option("--seed", d_seed, "simulation seed")
        ->each([&](const std::string&) { d_seed_given = true; });

    auto* validate = sim_cmd->add_subcommand("validate", "validate a synthesized controller");
    std::string v_model, v_tensor, v_front, v_values, v_out;
    int v_member = 0;
    double v_p_collider = 0.5, v_wait_time = 5.0;
    uint64_t v_journeys = 1000, v_waypoints = 100, v_seed = 0;
    size_t v_pool = 20000;
    unsigned v_jobs = default_jobs();
    bool v_seed_given = false;
    validate->add_option("--model", v_model, "augmented explicit model (parameter families)")->required();
    validate->add_option("--tensor", v_tensor, "surrogate tensor JSON")->required();
    validate->add_option("--front", v_front, "front JSON holding the controller");
    validate->add_option("--member", v_member, "front member index");
    validate->add_option("--values", v_values, "JSON {param: value} controller assignment");
    validate->add_option("--p-collider", v_p_collider, "collider presence probability");
    validate->add_option("--wait-time", v_wait_time, "time added per wait decision");
    validate->add_option("--journeys", v_journeys, "number of journeys");
    validate->add_option("--waypoints", v_waypoints, "waypoints per journey");
    validate->add_option("--pool-size", v_pool, "encounter pool size per class");
    validate->add_option("--jobs", v_jobs, "parallel journey workers");
    validate->add_option("--seed", v_seed, "simulation seed")
        ->each([&](const std::string&) { v_seed_given = true; });
    validate->add_option("--out", v_out, "validation result JSON")->required();

    try {
        std::vector<const char*> argv;
        argv.push_back("decsynth");
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*quantify) {
            std::string csv = slurp(q_input);
            std::istringstream is(csv);
            uint32_t n = 0;
            auto rows = read_samples_csv(is, n);
            int K = q_classes;
            if (K <= 0)
                for (const auto& r : rows) K = std::max({K, r.true_label, r.pred_label});
            auto tensor = ingest(rows, K, n);
            if (q_marginalize) tensor = marginalize(tensor);
            Manifest m;
            m.subcommand = "quantify";
            m.add_input(q_input, csv);
            m.options = {{"classes", K}, {"marginalize", q_marginalize}};
            auto body = tensor_to_json(tensor);
            body["accuracy"] = [&] {
                auto rep = accuracy_report(tensor);
                nlohmann::json a;
                a["overall"] = rep.overall.value();
                nlohmann::json per_class = nlohmann::json::array();
                for (const auto& r : rep.per_class) per_class.push_back(r.value());
                a["per_class"] = per_class;
                nlohmann::json buckets = nlohmann::json::object();
                for (const auto& b : rep.buckets) {
                    nlohmann::json e;
                    e["accuracy"] = b.accuracy.den == 0 ? 0.0 : b.accuracy.value();
                    nlohmann::json pc = nlohmann::json::array();
                    for (const auto& r : b.per_class) pc.push_back(r.den == 0 ? 0.0 : r.value());
                    e["per_class"] = pc;
                    buckets[verdict_bits_key(b.v, tensor.n())] = e;
                }
                a["per_outcome"] = buckets;
                return a;
            }();
            write_json_artifact(q_out, body, m, force);
        } else if (*build) {
            std::string source = slurp(b_model);
            auto model = lang::build(lang::parse(source), build_options(b_consts, b_params, b_cap));
            Manifest m;
            m.subcommand = "build";
            m.add_input(b_model, source);
            m.options = {{"const", b_consts}, {"param", b_params}};
            write_text_artifact(b_out, model.to_text(), m, force);
        } else if (*aug_cmd) {
            std::string model_text = slurp(a_model);
            std::istringstream is(model_text);
            auto model = ExplicitPDTMC::load(is);
            std::string tensor_text = slurp(a_tensor);
            AugmentationSpec spec;
            spec.tensor = tensor_from_json(nlohmann::json::parse(tensor_text));
            spec.controller_param_prefix = a_prefix;
            spec.deterministic = a_deterministic;
            spec.state_cap = a_cap;
            auto augmented = augment(model, spec);
            Manifest m;
            m.subcommand = "augment";
            m.add_input(a_model, model_text);
            m.add_input(a_tensor, tensor_text);
            m.options = {{"prefix", a_prefix}, {"deterministic", a_deterministic}};
            write_text_artifact(a_out, augmented.to_text(), m, force);
            if (!a_emit_pm.empty()) {
                if (a_source.empty())
                    fail("RangeError", "--emit-pm needs --source with the perfect-perception .pm");
                auto ast = lang::parse(slurp(a_source));
                write_text_artifact(a_emit_pm, emit_dnn_pm(ast, spec.tensor, a_prefix), m, force);
            }
        } else if (*check) {
            std::istringstream is(slurp(c_model));
            auto model = ExplicitPDTMC::load(is);
            auto query = pctl::parse_query(c_query);
            ExplicitPDTMC target = model;
            if (!model.params.empty()) {
                if (c_values.empty())
                    fail("MissingParameter", "model is parametric; provide --assignment");
                target = model.instantiate(
                    assignment_from_values(model, nlohmann::json::parse(slurp(c_values))));
            }
            if (query.cmp == pctl::Cmp::query) {
                std::cout << fmt_display(pctl::pmc(query, target)) << '\n';
            } else {
                std::cout << (pctl::satisfies(query, target) ? "true" : "false") << '\n';
            }
        } else if (*synth_cmd) {
            std::string model_text = slurp(s_model);
            std::istringstream is(model_text);
            auto model = ExplicitPDTMC::load(is);
            std::string reqs_text = slurp(s_reqs);
            auto reqs = synth::parse_requirements(reqs_text);
            synth::SearchOptions opts;
            opts.budget = s_budget;
            opts.jobs = s_jobs;
            opts.keep_all = s_all;
            synth::ParetoFront front;
            uint64_t seed = seed_or_env(s_seed, s_seed_given);
            if (s_method == "grid") {
                front = synth::grid_search(model, reqs, s_step, s_deterministic, opts);
            } else {
                synth::GaSettings settings;
                settings.population = s_population;
                settings.max_evaluations = s_max_evals;
                settings.seed = seed;
                settings.sbx_eta = s_sbx_eta;
                settings.mutation_eta = s_mut_eta;
                settings.crossover_rate = s_crossover;
                settings.mutation_rate = s_mut_rate;
                front = synth::evolutionary_search(model, reqs, settings, s_deterministic, opts);
            }
            Manifest m;
            m.subcommand = "synth";
            m.add_input(s_model, model_text);
            m.add_input(s_reqs, reqs_text);
            m.options = {{"method", s_method},
                         {"step", s_step},
                         {"population", s_population},
                         {"max_evals", s_max_evals},
                         {"deterministic", s_deterministic}};
            m.seed = seed;
            auto body = synth::front_to_json(front);
            if (!s_reference.empty()) {
                m.add_input(s_reference, slurp(s_reference));
                if (!front.members.empty()) {
                    auto ref = load_front(s_reference, &front.objectives);
                    body["igd"] = synth::igd(front, ref);
                    body["hv"] = synth::hv(front, ref, s_hv_scale);
                    body["hv_scale"] = s_hv_scale;
                }
            }
            write_json_artifact(s_out, body, m, force);
            if (!s_csv.empty()) write_text_artifact(s_csv, synth::front_to_csv(front), m, force);
            if (front.infeasible_all)
                std::cerr << "warning: no candidate satisfies the constraints; front is empty\n";
            std::cout << "evaluated " << front.evaluated << " candidates, front size "
                      << front.members.size() << '\n';
        } else if (*pareto) {
            // at least one side must be a JSON artifact carrying objective metadata
            synth::ParetoFront front, reference;
            std::string ftext = slurp(p_front);
            auto is_json = [](const std::string& t) {
                auto pos = t.find_first_not_of(" \t\r\n");
                return pos != std::string::npos && t[pos] == '{';
            };
            if (is_json(ftext)) {
                front = synth::front_from_json(nlohmann::json::parse(ftext));
                reference = load_front(p_reference, &front.objectives);
            } else {
                reference = load_front(p_reference, nullptr);
                front = synth::front_from_csv(ftext, reference.objectives);
            }
            double igd_value = synth::igd(front, reference);
            double hv_value = synth::hv(front, reference, p_scale);
            double hv_reference = synth::hv(reference, reference, p_scale);
            nlohmann::json body{{"igd", igd_value},
                                {"hv", hv_value},
                                {"hv_reference", hv_reference},
                                {"hv_scale", p_scale}};
            std::cout << "igd " << fmt_display(igd_value) << "\nhv " << fmt_display(hv_value) << '\n';
            if (!p_out.empty()) {
                Manifest m;
                m.subcommand = "pareto";
                m.add_input(p_front, ftext);
                m.add_input(p_reference, slurp(p_reference));
                m.options = {{"hv_scale", p_scale}};
                write_json_artifact(p_out, body, m, force);
            }
        } else if (*dataset) {
            sim::SimConfig cfg = base_cfg;
            cfg.seed = seed_or_env(d_seed, d_seed_given);
            sim::SurrogatePerception surrogate;
            bool have_surrogate = !d_tensor.empty();
            std::string tensor_text;
            if (have_surrogate) {
                tensor_text = slurp(d_tensor);
                surrogate.tensor = tensor_from_json(nlohmann::json::parse(tensor_text));
            }
            auto ds = sim::generate_dataset(cfg, d_per_class, have_surrogate ? &surrogate : nullptr);
            Manifest m;
            m.subcommand = "sim dataset";
            if (have_surrogate) m.add_input(d_tensor, tensor_text);
            m.options = {{"per_class", d_per_class}};
            m.seed = cfg.seed;
            std::ostringstream feat;
            sim::write_encounters_csv(feat, cfg, ds);
            write_text_artifact(d_features, feat.str(), m, force);
            if (!d_samples.empty()) {
                if (!have_surrogate) fail("RangeError", "--samples needs --tensor");
                std::ostringstream rows;
                write_samples_csv(rows, ds.samples, ds.n_verifs);
                write_text_artifact(d_samples, rows.str(), m, force);
            }
            if (ds.timeouts > 0)
                std::cerr << "warning: " << ds.timeouts << " encounters timed out and were resampled\n";
        } else if (*validate) {
            std::string model_text = slurp(v_model);
            std::istringstream is(model_text);
            auto model = ExplicitPDTMC::load(is);
            std::string tensor_text = slurp(v_tensor);
            sim::SurrogatePerception surrogate{tensor_from_json(nlohmann::json::parse(tensor_text))};
            ControllerAssignment assignment = model.assignment_shell();
            Manifest m;
            m.subcommand = "sim validate";
            m.add_input(v_model, model_text);
            m.add_input(v_tensor, tensor_text);
            if (!v_front.empty()) {
                std::string front_text = slurp(v_front);
                auto front = synth::front_from_json(nlohmann::json::parse(front_text));
                if (v_member < 0 || static_cast<size_t>(v_member) >= front.members.size())
                    fail("RangeError", "--member outside the front");
                for (size_t i = 0; i < front.param_names.size(); ++i)
                    assignment.values[front.param_names[i]] = front.members[v_member].values[i];
                m.add_input(v_front, front_text);
            } else if (!v_values.empty()) {
                std::string values_text = slurp(v_values);
                auto parsed = nlohmann::json::parse(values_text);
                for (const auto& [name, v] : parsed.items()) assignment.values[name] = v.get<double>();
                m.add_input(v_values, values_text);
            } else {
                fail("MissingParameter", "provide --front/--member or --values");
            }
            sim::SimConfig cfg = base_cfg;
            cfg.seed = seed_or_env(v_seed, v_seed_given);
            auto pools = sim::build_pools(cfg, v_pool);
            auto res = sim::validate_controller(cfg, assignment, surrogate, v_p_collider, v_wait_time,
                                                v_journeys, v_waypoints, pools, v_jobs);
            m.options = {{"p_collider", v_p_collider}, {"wait_time", v_wait_time},
                         {"journeys", v_journeys},     {"waypoints", v_waypoints},
                         {"pool_size", v_pool}};
            m.seed = cfg.seed;
            nlohmann::json body;
            nlohmann::json values = nlohmann::json::object();
            for (const auto& [name, v] : assignment.values) values[name] = v;
            body["assignment"] = values;
            body["journeys"] = res.journeys;
            body["waypoints"] = res.waypoints_per_journey;
            body["mean_time"] = res.mean_time;
            body["collision_rate"] = res.collision_rate;
            body["time_stderr"] = res.time_stderr;
            body["rate_stderr"] = res.rate_stderr;
            body["mean_time_per_waypoint"] = res.mean_time_per_waypoint;
            body["collision_free_per_waypoint"] = res.collision_free_per_waypoint;
            body["pools"] = {{"p_occ", pools.p_occ_hat},
                             {"straight_time", pools.straight_time},
                             {"mean_collision_time", pools.mean_collision_time}};
            write_json_artifact(v_out, body, m, force);
            std::cout << "mean_time " << fmt_display(res.mean_time) << "\ncollision_rate "
                      << fmt_display(res.collision_rate) << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

} // namespace decsynth::cli
