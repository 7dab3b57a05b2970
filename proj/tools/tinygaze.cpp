// tinygaze: command-line front end wiring synthesis, evaluation, ablation,
// latency benchmarking, and gradient checking into reproducible runs.
//
// Exit codes: 0 success, 1 runtime/data error, 2 usage/config error.

#include "CLI11.hpp"
#include "json.hpp"

#include "tinygaze/bench.hpp"
#include "tinygaze/evalharness.hpp"
#include "tinygaze/ingest.hpp"
#include "tinygaze/models.hpp"
#include "tinygaze/preprocess.hpp"
#include "tinygaze/synthgen.hpp"
#include "tinygaze/util.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace tinygaze;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string default_out_dir() {
    const char* env = std::getenv("TINYGAZE_OUT");
    return (env && *env) ? std::string(env) : std::string("tinygaze-out");
}

// Every artifact directory gets a run.json recording the resolved config, the
// seed, and a content hash per data artifact, so reruns can be diffed byte
// for byte.
struct RunRecorder {
    fs::path dir;
    json config;
    json artifacts = json::object();

    explicit RunRecorder(const std::string& out, std::string command, json cfg)
        : dir(out), config(std::move(cfg)) {
        config["command"] = std::move(command);
        fs::create_directories(dir);
    }

    void write(const std::string& name, const std::string& content) {
        const fs::path path = dir / name;
        write_text_file(path.string(), content);
        artifacts[name] = hex64(fnv1a64(content));
    }

    void finish() {
        json run;
        run["config"] = config;
        run["artifacts"] = artifacts;
        write_text_file((dir / "run.json").string(), run.dump(2) + "\n");
    }
};

// Resolved-config echo placed at the head of every text report.
std::string config_banner(const json& cfg) {
    std::string out = "# resolved config\n";
    for (const auto& [key, value] : cfg.items()) out += "#   " + key + " = " + value.dump() + "\n";
    return out;
}

struct PlanFlags {
    int subjects = 4;
    int reps = 3;
    double alpha_min = 0.3;
    double alpha_max = 0.95;
    double noise = 0.1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--subjects", subjects, "number of synthetic subjects");
        cmd->add_option("--reps", reps, "repetitions per (gesture, stage)");
        cmd->add_option("--alpha-min", alpha_min, "minimum head-motion share across subjects");
        cmd->add_option("--alpha-max", alpha_max, "maximum head-motion share across subjects");
        cmd->add_option("--noise", noise, "angular noise sigma in degrees");
    }

    synthgen::SessionPlan plan() const {
        synthgen::SessionPlan p;
        p.subjects = subjects;
        p.repetitions = reps;
        p.alpha_min = alpha_min;
        p.alpha_max = alpha_max;
        p.noise_sigma_deg = noise;
        return p;
    }

    json to_json() const {
        return {{"subjects", subjects},
                {"reps", reps},
                {"alpha_min", alpha_min},
                {"alpha_max", alpha_max},
                {"noise_sigma_deg", noise}};
    }
};

struct EvalFlags {
    std::string input;  // log file; empty means synthesize
    std::string task = "gesture";
    std::string model = "tinyhar";
    std::string modality = "eye_head";
    std::string domain = "resampled";
    std::size_t window = 32;
    std::size_t resample_len = 64;
    double overlap_train = 0.5;
    double overlap_test = 0.9;
    int folds = 4;
    std::size_t epochs = 40;
    std::size_t patience = 8;
    double lr = 1e-3;
    std::size_t batch = 32;
    int jobs = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--input", input, "session log file (default: synthesize a session)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--task", task, "classification task")
            ->check(CLI::IsMember({"gesture", "userid"}));
        cmd->add_option("--model", model, "model architecture")
            ->check(CLI::IsMember({"tinyhar", "deepconvlstm", "sahar"}));
        cmd->add_option("--modality", modality, "input channel subset")
            ->check(CLI::IsMember({"head", "eyes", "left_eye", "right_eye", "eye_head"}));
        cmd->add_option("--domain", domain, "windowing domain")
            ->check(CLI::IsMember({"resampled", "raw"}));
        cmd->add_option("--window,-W", window, "window length in frames");
        cmd->add_option("--resample-len", resample_len, "resampled trial length");
        cmd->add_option("--overlap-train", overlap_train, "train window overlap fraction");
        cmd->add_option("--overlap-test", overlap_test, "test window overlap fraction");
        cmd->add_option("--folds", folds, "k for the stratified user-id split");
        cmd->add_option("--epochs", epochs, "max training epochs per fold");
        cmd->add_option("--patience", patience, "early-stop patience in epochs");
        cmd->add_option("--lr", lr, "Adam learning rate");
        cmd->add_option("--batch", batch, "training batch size");
        cmd->add_option("--jobs", jobs, "fold-level parallelism")->check(CLI::PositiveNumber);
    }

    eval::RunOptions options() const {
        eval::RunOptions opts;
        opts.prep.window_len = window;
        opts.prep.resample_len = resample_len;
        opts.prep.modality = *modality_from_name(modality);
        opts.prep.domain = domain == "raw" ? preprocess::WindowDomain::Raw
                                           : preprocess::WindowDomain::Resampled;
        opts.overlap_train = overlap_train;
        opts.overlap_test = overlap_test;
        opts.train.max_epochs = epochs;
        opts.train.patience = patience;
        opts.train.lr = lr;
        opts.train.batch = batch;
        opts.jobs = jobs;
        return opts;
    }

    json to_json() const {
        return {{"input", input},        {"task", task},
                {"model", model},        {"modality", modality},
                {"domain", domain},      {"window", window},
                {"resample_len", resample_len},
                {"overlap_train", overlap_train},
                {"overlap_test", overlap_test},
                {"folds", folds},        {"epochs", epochs},
                {"patience", patience},  {"lr", lr},
                {"batch", batch},        {"jobs", jobs}};
    }
};

std::vector<GestureTrial> load_trials(const std::string& input, const PlanFlags& plan,
                                      std::uint64_t seed) {
    std::string log_text;
    if (input.empty()) {
        log_text = synthgen::generate_session(plan.plan(), seed).log_text;
    } else {
        log_text = read_text_file(input);
    }
    auto raw = ingest::parse_log(log_text);
    auto sync = ingest::synchronize(raw);
    auto seg = ingest::segment_trials(sync.frames, raw.events);
    if (!seg.errors.empty()) {
        std::string msg = "segmentation reported " + std::to_string(seg.errors.size()) +
                          " error(s); first: " + seg.errors.front();
        throw std::runtime_error(msg);
    }
    if (seg.trials.empty()) throw std::runtime_error("no trials found in the input log");
    return seg.trials;
}

int cmd_simulate(const PlanFlags& flags, std::uint64_t seed, const std::string& out) {
    json cfg = flags.to_json();
    cfg["seed"] = seed;
    RunRecorder rec(out, "simulate", cfg);

    auto session = synthgen::generate_session(flags.plan(), seed);
    rec.write("session.log", session.log_text);
    rec.write("manifest.txt", session.manifest_text);
    rec.finish();

    std::cout << "wrote " << (rec.dir / "session.log").string() << " ("
              << session.manifest.size() << " trials)\n";
    return kExitOk;
}

int cmd_eval(const EvalFlags& flags, const PlanFlags& plan, std::uint64_t seed,
             const std::string& out) {
    json cfg = flags.to_json();
    cfg["seed"] = seed;
    if (flags.input.empty()) cfg["plan"] = plan.to_json();
    RunRecorder rec(out, "eval", cfg);

    auto trials = load_trials(flags.input, plan, seed);

    models::ModelSpec spec;
    spec.kind = *models::model_from_name(flags.model);
    spec.width = flags.window;
    spec.dim = static_cast<std::size_t>(modality_dim(*modality_from_name(flags.modality)));
    spec.seed = seed;

    eval::SplitPlan split;
    eval::Task task;
    if (flags.task == "gesture") {
        task = eval::Task::GestureRecognition;
        split = eval::loso_splits(trials, task);
    } else {
        task = eval::Task::UserIdentification;
        split = eval::stratified_kfold_by_trial(trials, flags.folds, seed, task);
    }
    eval::audit_no_leakage(split);

    auto opts = flags.options();
    opts.train.seed = seed;
    eval::EvalReport rep = eval::run_task(trials, spec, split, opts);

    const std::string banner = config_banner(cfg);
    rec.write("report.txt", banner + rep.to_text());
    rec.write("report.csv", rep.to_csv());
    rec.write("confusion.csv", rep.confusion_csv());
    rec.finish();

    std::cout << rep.to_text();
    std::cout << "macro F1: " << fmt_double(rep.mean_macro_f1) << "\n";
    return kExitOk;
}

int cmd_ablate(const EvalFlags& flags, const PlanFlags& plan, std::uint64_t seed,
               const std::string& out) {
    json cfg = flags.to_json();
    cfg["seed"] = seed;
    if (flags.input.empty()) cfg["plan"] = plan.to_json();
    RunRecorder rec(out, "ablate", cfg);

    auto trials = load_trials(flags.input, plan, seed);

    models::ModelSpec spec;
    spec.kind = *models::model_from_name(flags.model);
    spec.width = flags.window;
    spec.seed = seed;

    auto opts = flags.options();
    opts.train.seed = seed;
    eval::AblationTable table = eval::run_modality_ablation(trials, spec, opts);

    rec.write("ablation.txt", config_banner(cfg) + table.to_text());
    rec.write("ablation.csv", table.to_csv());
    rec.finish();

    std::cout << table.to_text();
    return kExitOk;
}

int cmd_bench(const std::string& model, bool all, std::size_t batch, std::size_t iterations,
              std::size_t classes, std::uint64_t seed, const std::string& out) {
    json cfg = {{"model", all ? "all" : model}, {"batch", batch},
                {"iterations", iterations},    {"classes", classes},
                {"seed", seed}};
    RunRecorder rec(out, "bench", cfg);

    std::vector<models::ModelKind> kinds;
    if (all) {
        kinds = {models::ModelKind::TinyHAR, models::ModelKind::DeepConvLSTM,
                 models::ModelKind::SAHAR};
    } else {
        kinds = {*models::model_from_name(model)};
    }
    bench::BenchTable table = bench::bench_suite(kinds, 32, 48, classes, batch, iterations, seed);

    // timing artifacts are exempt from the byte-identical rerun guarantee
    rec.write("bench.txt", config_banner(cfg) + table.to_text());
    rec.write("bench.csv", table.to_csv());
    rec.write("bench.json", table.to_json());
    rec.finish();

    std::cout << table.to_text();
    return kExitOk;
}

int cmd_gradcheck(const std::string& model, std::uint64_t seed) {
    std::vector<models::ModelKind> kinds;
    if (model == "all") {
        kinds = {models::ModelKind::TinyHAR, models::ModelKind::DeepConvLSTM,
                 models::ModelKind::SAHAR};
    } else {
        kinds = {*models::model_from_name(model)};
    }

    bool all_pass = true;
    for (auto kind : kinds) {
        models::ModelSpec spec;
        spec.kind = kind;
        spec.seed = seed;
        auto graph = models::build_model(spec);
        net::Tensor x({2, spec.width, spec.dim});
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
        std::normal_distribution<double> dist(0.0, 1.0);
        for (auto& v : x.data) v = dist(rng);
        double err = net::gradient_check(graph, x, {0, static_cast<int>(spec.classes) - 1});
        bool pass = err < 1e-4;
        all_pass = all_pass && pass;
        std::cout << models::model_name(kind) << ": max relative error " << fmt_double(err)
                  << " -> " << (pass ? "PASS" : "FAIL") << "\n";
    }
    return all_pass ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gaze-gesture pipeline toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // --seed/--out may appear after the subcommand name
    app.set_config("--config", "", "read defaults from a TOML/INI config file");
    app.failure_message(CLI::FailureMessage::help);

    std::uint64_t seed = 7;
    std::string out = default_out_dir();
    app.add_option("--seed", seed, "master random seed")->capture_default_str();
    app.add_option("--out", out, "output directory (also via TINYGAZE_OUT)")
        ->capture_default_str();

    PlanFlags plan;
    EvalFlags evalf, ablatef;

    auto* sim = app.add_subcommand("simulate", "synthesize a session log + manifest");
    plan.attach(sim);

    auto* ev = app.add_subcommand("eval", "train and evaluate one model/task");
    evalf.attach(ev);
    plan.attach(ev);

    auto* ab = app.add_subcommand("ablate", "LOSO gesture macro F1 across all five modalities");
    ablatef.attach(ab);
    plan.attach(ab);

    auto* be = app.add_subcommand("bench", "per-window inference latency table");
    std::string bench_model = "tinyhar";
    bool bench_all = false;
    std::size_t bench_batch = 1, bench_iters = 200, bench_classes = 5;
    be->add_option("--model", bench_model, "model architecture")
        ->check(CLI::IsMember({"tinyhar", "deepconvlstm", "sahar"}));
    be->add_flag("--all", bench_all, "benchmark all three models");
    be->add_option("--batch", bench_batch, "inference batch size")->check(CLI::PositiveNumber);
    be->add_option("--iters", bench_iters, "timed iterations per model");
    be->add_option("--classes", bench_classes, "classifier output width");

    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
    std::string gc_model = "all";
    gc->add_option("--model", gc_model, "model architecture or 'all'")
        ->check(CLI::IsMember({"tinyhar", "deepconvlstm", "sahar", "all"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        // config sanity that CLI11 validators cannot express
        if (sim->parsed() || (ev->parsed() && evalf.input.empty()) ||
            (ab->parsed() && ablatef.input.empty())) {
            if (plan.subjects < 1 || plan.reps < 1) {
                std::cerr << "error: --subjects and --reps must be >= 1\n";
                return kExitUsage;
            }
            if (!(plan.alpha_min <= plan.alpha_max)) {
                std::cerr << "error: --alpha-min must not exceed --alpha-max\n";
                return kExitUsage;
            }
        }
        if (ev->parsed() && evalf.task == "userid" && evalf.folds < 2) {
            std::cerr << "error: --folds must be >= 2\n";
            return kExitUsage;
        }

        if (sim->parsed()) return cmd_simulate(plan, seed, out);
        if (ev->parsed()) return cmd_eval(evalf, plan, seed, out);
        if (ab->parsed()) return cmd_ablate(ablatef, plan, seed, out);
        if (be->parsed())
            return cmd_bench(bench_model, bench_all, bench_batch, bench_iters, bench_classes,
                             seed, out);  // single-threaded by design
        if (gc->parsed()) return cmd_gradcheck(gc_model, seed);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
