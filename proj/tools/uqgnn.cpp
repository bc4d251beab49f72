// uqgnn: dataset synthesis, training, accuracy-rejection curves, OOD protocols and
// the oracle self-check. Exit codes: 0 ok, 1 failure, 2 usage or missing input,
// 3 protocol error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cuqgnn/eval/report_csv.hpp"
#include "cuqgnn/eval/verify.hpp"
#include "cuqgnn/graphcore/generators.hpp"
#include "cuqgnn/models/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace cuq;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitProtocol = 3;

// Written next to checkpoints so `arc` can rebuild the same preprocessing and splits.
constexpr const char* kPipelineFile = "pipeline.txt";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UsageError("cannot write " + path.string());
    return os;
}

PipelineConfig read_pipeline(const std::optional<std::string>& config_path) {
    PipelineConfig cfg;
    if (config_path) cfg.apply(read_flat_config(*config_path));
    return cfg;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
    std::string generator = "sbm";
    std::string out;
    std::uint64_t seed = 0;
    std::size_t n = 200;
    int k = 4;
    double p_in = 0.1, p_out = 0.01, class_sep = 2.0, within_class_bias = 0.8;
    std::size_t feature_dim = 16, m_attach = 2;
};

int run_synth(const SynthArgs& a) {
    Graph g;
    if (a.generator == "sbm") {
        SbmParams p;
        p.n = a.n;
        p.k_classes = a.k;
        p.p_in = a.p_in;
        p.p_out = a.p_out;
        p.feature_dim = a.feature_dim;
        p.class_sep = a.class_sep;
        p.seed = a.seed;
        g = gen_sbm(p);
    } else {
        BarabasiAlbertParams p;
        p.n = a.n;
        p.m_attach = a.m_attach;
        p.feature_dim = a.feature_dim;
        p.k_classes = a.k;
        p.class_sep = a.class_sep;
        p.within_class_bias = a.within_class_bias;
        p.seed = a.seed;
        g = gen_barabasi_albert(p);
    }
    write_dataset(g, a.out);
    std::cout << "wrote " << a.generator << " graph: " << g.n_nodes() << " nodes, " << g.n_edges() << " edges, "
              << g.n_classes() << " classes -> " << a.out << '\n';
    return 0;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    std::string dataset, model, out;
    std::optional<std::string> config;
    std::uint64_t seed = 0;
};

std::string checkpoint_name(ModelKind kind, std::size_t repeat) {
    return std::string(model_kind_name(kind)) + ".split" + std::to_string(repeat) + ".ckpt";
}

std::vector<Split> splits_for(const Graph& g, const fs::path& dataset, const SplitSpec& spec) {
    if (auto fixed = load_split(dataset, g.n_nodes())) return {*fixed};
    return make_splits(g, spec);
}

int run_train(const TrainArgs& a) {
    PipelineConfig cfg = read_pipeline(a.config);
    cfg.model.kind = parse_model_kind(a.model);
    cfg.train.seed = a.seed;
    cfg.split.seed = a.seed;
    const Graph g = detail::prepared_graph(load_dataset(a.dataset), cfg);
    const std::vector<Split> splits = splits_for(g, a.dataset, cfg.split);
    std::vector<TrainResult> results(splits.size());
    parallel_for(splits.size(), [&](std::size_t r) { results[r] = detail::train_repeat(cfg, g, splits[r], r); });

    const fs::path out(a.out);
    fs::create_directories(out);
    for (std::size_t r = 0; r < results.size(); ++r) {
        const fs::path ckpt = out / checkpoint_name(cfg.model.kind, r);
        save_checkpoint(results[r].model, ckpt);
        std::ofstream hist = open_output(out / (std::string(model_kind_name(cfg.model.kind)) + ".split" + std::to_string(r) + ".history.csv"));
        write_history_csv(hist, results[r].history);
        std::cout << model_kind_name(cfg.model.kind) << " split " << r << ": " << results[r].history.size()
                  << " epochs, best val acc " << results[r].best_val_acc << " -> " << ckpt.string() << '\n';
    }
    std::ofstream pipe = open_output(out / kPipelineFile);
    pipe << "data.standardize = " << (cfg.standardize ? "true" : "false") << '\n'
         << "split.train = " << detail::format_double(cfg.split.train) << '\n'
         << "split.val = " << detail::format_double(cfg.split.val) << '\n'
         << "split.test = " << detail::format_double(cfg.split.test) << '\n'
         << "split.stratified = " << (cfg.split.stratified ? "true" : "false") << '\n'
         << "split.repeats = " << cfg.split.n_repeats << '\n'
         << "split.seed = " << cfg.split.seed << '\n';
    return 0;
}

// ---- arc ------------------------------------------------------------------

struct ArcArgs {
    std::string dataset, checkpoints, out, measure = "eu_pc";
    std::uint64_t splits_seed = 0;
    std::size_t mc_samples = kDefaultMixtureSamples;
};

int run_arc(const ArcArgs& a) {
    const fs::path dir(a.checkpoints);
    PipelineConfig cfg;
    if (fs::exists(dir / kPipelineFile)) {
        cfg.apply(read_flat_config(dir / kPipelineFile));
        if (cfg.split.seed != a.splits_seed)
            std::cerr << "warning: checkpoints were trained on splits from seed " << cfg.split.seed << ", evaluating seed "
                      << a.splits_seed << "; test nodes may overlap training nodes\n";
    }
    cfg.split.seed = a.splits_seed;
    const Measure wanted = parse_measure(a.measure);

    const std::regex pattern(R"(([a-z_]+)\.split([0-9]+)\.ckpt)");
    std::map<std::string, std::vector<std::pair<std::size_t, fs::path>>> by_model;
    std::size_t max_repeat = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (!std::regex_match(name, m, pattern)) continue;
        const std::size_t r = std::stoul(m[2]);
        by_model[m[1]].emplace_back(r, entry.path());
        max_repeat = std::max(max_repeat, r);
    }
    if (by_model.empty()) throw UsageError("no checkpoints (<model>.splitN.ckpt) in " + dir.string());
    cfg.split.n_repeats = std::max(cfg.split.n_repeats, max_repeat + 1);

    const Graph g = detail::prepared_graph(load_dataset(a.dataset), cfg);
    const std::vector<Split> splits = splits_for(g, a.dataset, cfg.split);
    const std::vector<double> grid = arc_grid();
    std::vector<std::pair<std::string, ArcSummary>> columns;
    for (auto& [name, files] : by_model) {
        std::sort(files.begin(), files.end());
        std::vector<ArcCurve> curves;
        for (const auto& [r, path] : files) {
            if (r >= splits.size()) throw UsageError(path.string() + " refers to a split the dataset does not define");
            const Model model = load_checkpoint(path);
            const NodeBeliefs b = predict(model, g);
            const auto supported = b.supported_measures();
            Measure m = wanted;
            if (std::find(supported.begin(), supported.end(), m) == supported.end()) {
                std::cerr << "note: " << name << " reports tu only; using tu for its column\n";
                m = Measure::TU;
            }
            const std::vector<std::size_t>& test = splits[r].test;
            std::vector<bool> correct;
            for (std::size_t i : test) correct.push_back(b.predicted(i) == static_cast<std::size_t>(g.label(i)));
            curves.push_back(arc_curve(b.uncertainties(test, m, a.mc_samples), correct, grid));
        }
        columns.emplace_back(name, summarize_arc(curves));
        std::cout << name << ": " << curves.size() << " split(s), accuracy at p=0 " << columns.back().second.mean.front()
                  << '\n';
    }
    std::ofstream os = open_output(a.out);
    write_arc_csv(os, columns);
    return 0;
}

// ---- ood ------------------------------------------------------------------

struct OodArgs {
    std::string mode, dataset, out, noise_mode = "replace";
    std::vector<std::string> models;
    std::optional<std::string> config;
    std::uint64_t seed = 0;
    double fraction = 0.1;
    std::vector<int> leave_out;
};

int run_ood(const OodArgs& a) {
    PipelineConfig cfg = read_pipeline(a.config);
    cfg.train.seed = a.seed;
    cfg.split.seed = a.seed;
    const Graph g = load_dataset(a.dataset);
    std::vector<EvalReport> reports;
    for (const std::string& name : a.models) {
        cfg.model.kind = parse_model_kind(name);
        reports.push_back(a.mode == "leave-out" ? ood_leave_out(g, a.leave_out, cfg)
                                                : ood_feature_noise(g, a.fraction, cfg, a.seed, parse_noise_mode(a.noise_mode)));
        const EvalReport& r = reports.back();
        std::cout << name << ": id acc " << r.accuracy().mean;
        for (Measure m : r.measures) std::cout << ", " << measure_name(m) << " auroc " << r.auroc(m).mean;
        std::cout << '\n';
    }
    std::ofstream os = open_output(a.out);
    write_ood_csv(os, reports);
    return 0;
}

// ---- verify ---------------------------------------------------------------

int run_verify(bool quick) {
    VerifyOptions o;
    if (quick) {
        o.mc_samples = 20000;
        o.z_limit = 4.5;
    }
    bool ok = true;
    for (const VerifyResult& r : verify_all(o)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        ok = ok && r.passed;
    }
    return ok ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph node classification with calibrated uncertainty"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic dataset bundle");
    s->add_option("--generator", synth.generator, "sbm or ba")->check(CLI::IsMember({"sbm", "ba"}))->required();
    s->add_option("--out", synth.out, "Output directory")->required();
    s->add_option("--seed", synth.seed);
    s->add_option("--n", synth.n, "Node count");
    s->add_option("--k", synth.k, "Class count");
    s->add_option("--p-in", synth.p_in, "SBM within-block edge probability");
    s->add_option("--p-out", synth.p_out, "SBM between-block edge probability");
    s->add_option("--class-sep", synth.class_sep, "Distance between class feature means");
    s->add_option("--feature-dim", synth.feature_dim);
    s->add_option("--m-attach", synth.m_attach, "BA edges per new node");
    s->add_option("--within-class-bias", synth.within_class_bias, "BA same-class attachment probability");

    TrainArgs train_args;
    auto* t = app.add_subcommand("train", "Train one model per split repeat");
    t->add_option("--dataset", train_args.dataset)->check(CLI::ExistingDirectory)->required();
    t->add_option("--model", train_args.model)->required();
    t->add_option("--config", train_args.config, "Flat key = value settings")->check(CLI::ExistingFile);
    t->add_option("--seed", train_args.seed, "Seeds both the splits and the training run");
    t->add_option("--out", train_args.out, "Output directory")->required();

    ArcArgs arc;
    auto* r = app.add_subcommand("arc", "Accuracy-rejection curves from trained checkpoints");
    r->add_option("--dataset", arc.dataset)->check(CLI::ExistingDirectory)->required();
    r->add_option("--checkpoints", arc.checkpoints)->check(CLI::ExistingDirectory)->required();
    r->add_option("--splits-seed", arc.splits_seed)->required();
    r->add_option("--measure", arc.measure, "tu, au, eu, eu_pc or eu_so");
    r->add_option("--mc-samples", arc.mc_samples, "Draws for mixture differential entropy");
    r->add_option("--out", arc.out, "Output CSV")->required();

    OodArgs ood;
    auto* o = app.add_subcommand("ood", "Out-of-distribution detection protocols");
    o->add_option("--mode", ood.mode)->check(CLI::IsMember({"leave-out", "noise"}))->required();
    o->add_option("--dataset", ood.dataset)->check(CLI::ExistingDirectory)->required();
    o->add_option("--model", ood.models, "Model kind (repeatable)")->required();
    o->add_option("--config", ood.config)->check(CLI::ExistingFile);
    o->add_option("--seed", ood.seed);
    o->add_option("--fraction", ood.fraction, "Share of test nodes perturbed (noise mode)");
    o->add_option("--noise-mode", ood.noise_mode)->check(CLI::IsMember({"replace", "add"}));
    o->add_option("--leave-out", ood.leave_out, "Held-out classes (default: the last)")->delimiter(',');
    o->add_option("--out", ood.out, "Output CSV")->required();

    bool quick = false;
    auto* v = app.add_subcommand("verify", "Run the oracle suites");
    v->add_flag("--quick", quick, "Fewer Monte-Carlo draws");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (s->parsed()) return run_synth(synth);
        if (t->parsed()) return run_train(train_args);
        if (r->parsed()) return run_arc(arc);
        if (o->parsed()) return run_ood(ood);
        if (v->parsed()) return run_verify(quick);
    } catch (const ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << '\n';
        return kExitProtocol;
    } catch (const SplitError& e) {
        std::cerr << "protocol error: " << e.what() << '\n';
        return kExitProtocol;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
