#include "iotid/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iotid/bytes.hpp"
#include "iotid/errors.hpp"
#include "iotid/evaluation.hpp"
#include "iotid/explain.hpp"
#include "iotid/models.hpp"
#include "iotid/pipeline.hpp"
#include "iotid/representation.hpp"
#include "iotid/sentinel.hpp"
#include "iotid/synth.hpp"

namespace iotid::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Audit trail: which inputs (by content hash) and settings produced an output.
void write_run_meta(const fs::path& dir, const std::string& command, std::uint64_t seed,
                    const std::vector<std::string>& inputs, const json& params) {
    json j;
    j["command"] = command;
    j["seed"] = seed;
    j["params"] = params;
    json in = json::object();
    for (const auto& p : inputs) {
        try {
            in[p] = hex64(fnv1a64(read_file(p)));
        } catch (const Error&) {
            in[p] = "unreadable";
        }
    }
    j["inputs"] = in;
    fs::path d = dir.empty() ? fs::path(".") : dir;
    fs::create_directories(d);
    std::ofstream f(d / "run_meta.json");
    f << j.dump(2) << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream f(path);
    if (!f) throw IoFailure("cannot write " + path.string());
    f << text;
}

// ---- commands ----

struct CommonOpts {
    std::uint64_t seed = 1;
    double split = 0.8;
};

int cmd_generate(const std::string& out_dir, int setups, int devices, std::uint64_t seed) {
    auto profiles = default_profiles();
    if (devices < 1 || devices > static_cast<int>(profiles.size()))
        throw BadConfig("device count must be 1.." + std::to_string(profiles.size()));
    profiles.resize(devices);
    auto entries = generate_corpus(profiles, setups, seed, out_dir);
    std::cout << "wrote " << entries.size() << " captures for " << devices << " device types under "
              << out_dir << "\n";
    write_run_meta(out_dir, "generate", seed, {},
                   json{{"setups", setups}, {"devices", devices}});
    return 0;
}

int cmd_ingest(const std::string& manifest_path, const std::string& out_path,
               const std::string& granularity, std::size_t limit, const CommonOpts& opts,
               const std::string& sanitize_log_path) {
    auto entries = read_manifest(manifest_path);
    std::unique_ptr<std::ofstream> log;
    if (!sanitize_log_path.empty()) {
        log = std::make_unique<std::ofstream>(sanitize_log_path);
        if (!*log) throw IoFailure("cannot write " + sanitize_log_path);
    }
    auto res = ingest_manifest(entries,
                               granularity == "setup" ? Granularity::Setup : Granularity::Session,
                               opts.seed, limit, manifest_path, log.get());
    write_sample_cache(out_path, res.cache);
    write_cache_meta(out_path + ".meta.json", res.cache, res.origins);
    std::cout << res.cache.labels.size() << " samples, " << res.cache.classes.size()
              << " classes (" << granularity << " granularity)\n";
    for (const auto& [label, n] : res.counts) std::cout << "  " << label << ": " << n << "\n";
    write_run_meta(fs::path(out_path).parent_path(), "ingest", opts.seed, {manifest_path},
                   json{{"granularity", granularity}, {"limit", limit}, {"out", out_path}});
    return 0;
}

int cmd_train(const std::string& model_kind, const std::string& cache_path,
              const std::string& manifest_path, const std::string& out_path, TrainConfig cfg,
              const CommonOpts& opts, bool no_weights, const std::string& history_path,
              int trees, int max_packets) {
    cfg.seed = opts.seed;
    if (model_kind == "baseline") {
        if (manifest_path.empty()) throw BadConfig("baseline training needs --manifest");
        auto entries = read_manifest(manifest_path);
        auto fps = load_fingerprints(entries, opts.seed, manifest_path);
        std::vector<std::string> labels;
        for (const auto& lf : fps) labels.push_back(lf.fp.label);
        auto [tr_idx, te_idx] = split_indices(labels, opts.split, opts.seed);
        std::vector<Fingerprint> train_fps;
        for (int i : tr_idx) train_fps.push_back(fps[i].fp);
        ForestParams params;
        params.n_trees = trees;
        BaselineClassifier clf = train_baseline(train_fps, params, max_packets, opts.seed);
        write_text(out_path, classifier_to_json(clf));
        std::cout << "trained per-type forests for " << clf.types.size() << " types on "
                  << train_fps.size() << " fingerprints\n";
        write_run_meta(fs::path(out_path).parent_path(), "train", opts.seed, {manifest_path},
                       json{{"model", model_kind}, {"trees", trees}, {"max_packets", max_packets},
                            {"split", opts.split}, {"out", out_path}});
        return 0;
    }

    if (cache_path.empty()) throw BadConfig("nn training needs --cache");
    NnDataset ds = load_nn_dataset(cache_path, opts.split, opts.seed);
    if (!no_weights) cfg.class_weights = ds.weights;
    int n = static_cast<int>(ds.classes.size());
    TrainingHistory history;
    if (model_kind == "cnn") {
        CnnModel model = build_cnn(n, opts.seed);
        history = train(model, ds.train, ds.test, cfg);
        save_model(model, out_path);
    } else if (model_kind == "lstm") {
        LstmGeometry geo;
        geo.n_classes = n;
        LstmModel model(geo, opts.seed, cfg.dropout);
        history = train(model, ds.train, ds.test, cfg);
        save_model(model, out_path);
    } else {
        throw BadConfig("unknown model kind: " + model_kind);
    }
    if (!history_path.empty()) write_text(history_path, history_csv(history));
    const EpochStats& last = history.epochs.back();
    std::cout << model_kind << ": " << history.epochs.size() << " epochs, final train acc "
              << last.train_acc << ", test acc " << last.test_acc << "\n";
    write_run_meta(fs::path(out_path).parent_path(), "train", opts.seed, {cache_path},
                   json{{"model", model_kind}, {"epochs", cfg.epochs}, {"batch", cfg.batch},
                        {"lr", cfg.lr}, {"chunk", cfg.tbptt_chunk}, {"dropout", cfg.dropout},
                        {"weighted", !no_weights}, {"split", opts.split}, {"out", out_path}});
    return 0;
}

enum class ModelKind { Cnn, Lstm, Baseline };

ModelKind kind_of_model_file(const std::string& path) {
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json") return ModelKind::Baseline;
    return checkpoint_is_cnn(path) ? ModelKind::Cnn : ModelKind::Lstm;
}

int cmd_eval(const std::string& model_file, const std::string& cache_path,
             const std::string& manifest_path, const std::string& out_dir,
             const CommonOpts& opts) {
    std::vector<std::string> truths, preds;
    std::string method;
    ModelKind kind = kind_of_model_file(model_file);
    if (kind == ModelKind::Baseline) {
        if (manifest_path.empty()) throw BadConfig("baseline evaluation needs --manifest");
        Bytes raw = read_file(model_file);
        BaselineClassifier clf =
            classifier_from_json(std::string(reinterpret_cast<const char*>(raw.data()), raw.size()));
        auto entries = read_manifest(manifest_path);
        auto fps = load_fingerprints(entries, opts.seed, manifest_path);
        std::vector<std::string> labels;
        for (const auto& lf : fps) labels.push_back(lf.fp.label);
        auto [tr_idx, te_idx] = split_indices(labels, opts.split, opts.seed);
        for (int i : te_idx) {
            truths.push_back(fps[i].fp.label);
            preds.push_back(baseline_predict(clf, fps[i].fp));
        }
        method = "baseline";
    } else {
        if (cache_path.empty()) throw BadConfig("nn evaluation needs --cache");
        NnDataset ds = load_nn_dataset(cache_path, opts.split, opts.seed);
        truths = ds.test_labels;
        if (kind == ModelKind::Cnn) {
            CnnModel model = load_cnn(model_file);
            if (model.geo.n_classes != static_cast<int>(ds.classes.size()))
                throw BadConfig("model class count does not match cache");
            for (const auto& s : ds.test) preds.push_back(ds.classes[predict(model, s.x).first]);
            method = "cnn";
        } else {
            LstmModel model = load_lstm(model_file);
            if (model.geo.n_classes != static_cast<int>(ds.classes.size()))
                throw BadConfig("model class count does not match cache");
            for (const auto& s : ds.test) preds.push_back(ds.classes[predict(model, s.x).first]);
            method = "lstm";
        }
    }

    MetricsReport report = compute_metrics(truths, preds);
    std::set<std::string> class_set(truths.begin(), truths.end());
    class_set.insert(preds.begin(), preds.end());
    ConfusionMatrix cm = confusion(truths, preds, {class_set.begin(), class_set.end()});
    std::cout << method << ": accuracy " << report.accuracy << ", macro precision "
              << report.macro_precision << ", macro recall " << report.macro_recall << " over "
              << report.sample_count << " samples\n";
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text(fs::path(out_dir) / "metrics.json", metrics_json(report));
        write_text(fs::path(out_dir) / "confusion.csv", confusion_csv(cm));
        write_text(fs::path(out_dir) / "confusion_normalized.csv", confusion_normalized_csv(cm));
        write_run_meta(out_dir, "eval", opts.seed,
                       {model_file, cache_path.empty() ? manifest_path : cache_path},
                       json{{"model_file", model_file}, {"split", opts.split}});
    }
    return 0;
}

int cmd_bench(const std::string& cache_path, const std::string& manifest_path,
              const std::string& cnn_file, const std::string& lstm_file,
              const std::string& baseline_file, const std::string& out_file, int samples, int reps,
              const CommonOpts& opts) {
    std::vector<LatencyReport> reports;
    std::size_t n = static_cast<std::size_t>(std::max(samples, 100));

    if (!cnn_file.empty() || !lstm_file.empty()) {
        if (cache_path.empty()) throw BadConfig("nn benchmarks need --cache");
        NnDataset ds = load_nn_dataset(cache_path, opts.split, opts.seed);
        if (ds.test.empty()) throw EmptyDataset("no test samples");
        if (!cnn_file.empty()) {
            CnnModel model = load_cnn(cnn_file);
            reports.push_back(benchmark_inference(
                "cnn", [&](std::size_t i) { predict(model, ds.test[i % ds.test.size()].x); }, n,
                reps));
        }
        if (!lstm_file.empty()) {
            LstmModel model = load_lstm(lstm_file);
            reports.push_back(benchmark_inference(
                "lstm", [&](std::size_t i) { predict(model, ds.test[i % ds.test.size()].x); }, n,
                reps));
        }
    }
    if (!baseline_file.empty()) {
        if (manifest_path.empty()) throw BadConfig("baseline benchmark needs --manifest");
        Bytes raw = read_file(baseline_file);
        BaselineClassifier clf =
            classifier_from_json(std::string(reinterpret_cast<const char*>(raw.data()), raw.size()));
        auto entries = read_manifest(manifest_path);
        auto fps = load_fingerprints(entries, opts.seed, manifest_path);
        reports.push_back(benchmark_inference(
            "baseline", [&](std::size_t i) { baseline_predict(clf, fps[i % fps.size()].fp); }, n,
            reps));
    }
    if (reports.empty()) throw BadConfig("nothing to benchmark, pass at least one model");

    for (const auto& r : reports)
        std::cout << r.method << ": " << r.mean_ms << " ms/sample (std " << r.std_ms << ", n " << r.n
                  << ")\n";
    if (!out_file.empty()) write_text(out_file, latency_json(reports));
    return 0;
}

int cmd_explain(const std::string& model_file, const std::string& cache_path,
                const std::string& out_dir, int n_targets, int n_background, int draws,
                const CommonOpts& opts) {
    NnDataset ds = load_nn_dataset(cache_path, opts.split, opts.seed);
    if (ds.train.empty() || ds.test.empty()) throw EmptyDataset("explain needs a split dataset");

    std::vector<nn::Vec> background;
    for (int i = 0; i < n_background && i < static_cast<int>(ds.train.size()); ++i)
        background.push_back(ds.train[i].x);

    std::unique_ptr<CnnModel> cnn;
    std::unique_ptr<LstmModel> lstm;
    std::unique_ptr<DifferentiableModel> model;
    if (kind_of_model_file(model_file) == ModelKind::Cnn) {
        cnn = std::make_unique<CnnModel>(load_cnn(model_file));
        model = std::make_unique<CnnExplainAdapter>(*cnn);
    } else {
        lstm = std::make_unique<LstmModel>(load_lstm(model_file));
        model = std::make_unique<LstmExplainAdapter>(*lstm);
    }

    std::vector<AttributionMap> maps;
    int limit = std::min<int>(n_targets, static_cast<int>(ds.test.size()));
    for (int i = 0; i < limit; ++i) {
        AttributionMap m = expected_gradients(*model, ds.test[i].x, background, draws,
                                              opts.seed + static_cast<std::uint64_t>(i));
        m.origin = "test#" + std::to_string(i);
        maps.push_back(std::move(m));
    }
    ImportanceSummary summary = aggregate_importance(maps);
    importance_report(summary, out_dir);
    std::cout << summary.model_tag << ": strongest byte " << summary.max_index << " (score "
              << summary.max_value << ", corpus mean " << summary.mean_value << "), "
              << summary.peak_rows.size() << " peak rows of " << summary.row_means.size() << "\n";
    write_run_meta(out_dir, "explain", opts.seed, {model_file, cache_path},
                   json{{"targets", limit}, {"background", static_cast<int>(background.size())},
                        {"draws", draws}});
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"IoT device-type identification from traffic captures"};
    app.require_subcommand(1);
    app.set_config("--config");

    CommonOpts opts;

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize a labeled capture corpus");
    std::string gen_out = "data";
    int gen_setups = 20, gen_devices = 8;
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--setups", gen_setups, "captures per device type")->check(CLI::PositiveNumber);
    gen->add_option("--devices", gen_devices, "number of device profiles");
    gen->add_option("--seed", opts.seed, "master seed");

    // ingest
    auto* ing = app.add_subcommand("ingest", "pcaps to training samples");
    std::string ing_manifest, ing_out = "samples.bin", ing_gran = "session", ing_sanlog;
    std::size_t ing_limit = 784;
    ing->add_option("--manifest", ing_manifest, "capture manifest json")->required();
    ing->add_option("--out", ing_out, "sample cache path");
    ing->add_option("--granularity", ing_gran, "session or setup")
        ->check(CLI::IsMember({"session", "setup"}));
    ing->add_option("--limit", ing_limit, "bytes per sample");
    ing->add_option("--seed", opts.seed, "sanitizer seed");
    ing->add_option("--sanitize-log", ing_sanlog, "write address replacement audit here");

    // train
    auto* tr = app.add_subcommand("train", "fit a model");
    std::string tr_model, tr_cache, tr_manifest, tr_out = "model.bin", tr_history;
    TrainConfig cfg;
    bool tr_noweights = false;
    int tr_trees = 100, tr_maxpk = 32;
    tr->add_option("--model", tr_model, "cnn, lstm or baseline")
        ->required()
        ->check(CLI::IsMember({"cnn", "lstm", "baseline"}));
    tr->add_option("--cache", tr_cache, "sample cache (cnn/lstm)");
    tr->add_option("--manifest", tr_manifest, "capture manifest (baseline)");
    tr->add_option("--out", tr_out, "model output path");
    tr->add_option("--epochs", cfg.epochs, "training epochs")->check(CLI::PositiveNumber);
    tr->add_option("--batch", cfg.batch, "mini-batch size")->check(CLI::PositiveNumber);
    tr->add_option("--lr", cfg.lr, "learning rate");
    tr->add_option("--chunk", cfg.tbptt_chunk, "truncated-backprop chunk length (lstm)");
    tr->add_option("--dropout", cfg.dropout, "recurrent head dropout rate");
    tr->add_flag("--no-class-weights", tr_noweights, "train unweighted");
    tr->add_option("--history", tr_history, "write per-epoch csv here");
    tr->add_option("--trees", tr_trees, "forest size (baseline)");
    tr->add_option("--max-packets", tr_maxpk, "fingerprint columns fed to forests (baseline)");
    tr->add_option("--split", opts.split, "train fraction")->check(CLI::Range(0.01, 0.99));
    tr->add_option("--seed", opts.seed, "seed");

    // eval
    auto* ev = app.add_subcommand("eval", "score a model on the held-out split");
    std::string ev_model, ev_cache, ev_manifest, ev_out;
    ev->add_option("--model-file", ev_model, "trained model path")->required();
    ev->add_option("--cache", ev_cache, "sample cache (cnn/lstm)");
    ev->add_option("--manifest", ev_manifest, "capture manifest (baseline)");
    ev->add_option("--out-dir", ev_out, "write metrics and confusion matrices here");
    ev->add_option("--split", opts.split, "train fraction")->check(CLI::Range(0.01, 0.99));
    ev->add_option("--seed", opts.seed, "seed");

    // bench
    auto* be = app.add_subcommand("bench", "per-sample identification latency");
    std::string be_cache, be_manifest, be_cnn, be_lstm, be_baseline, be_out;
    int be_samples = 100, be_reps = 3;
    be->add_option("--cache", be_cache, "sample cache (cnn/lstm)");
    be->add_option("--manifest", be_manifest, "capture manifest (baseline)");
    be->add_option("--cnn", be_cnn, "cnn checkpoint");
    be->add_option("--lstm", be_lstm, "lstm checkpoint");
    be->add_option("--baseline", be_baseline, "baseline model json");
    be->add_option("--out", be_out, "latency report json");
    be->add_option("--samples", be_samples, "distinct samples (min 100)");
    be->add_option("--reps", be_reps, "measured passes")->check(CLI::PositiveNumber);
    be->add_option("--split", opts.split, "train fraction")->check(CLI::Range(0.01, 0.99));
    be->add_option("--seed", opts.seed, "seed");

    // explain
    auto* ex = app.add_subcommand("explain", "input attribution report");
    std::string ex_model, ex_cache, ex_out = "explain";
    int ex_targets = 16, ex_background = 64, ex_draws = 256;
    ex->add_option("--model-file", ex_model, "trained cnn/lstm checkpoint")->required();
    ex->add_option("--cache", ex_cache, "sample cache")->required();
    ex->add_option("--out-dir", ex_out, "report directory");
    ex->add_option("--samples", ex_targets, "test samples to attribute")->check(CLI::PositiveNumber);
    ex->add_option("--background", ex_background, "background pool size")->check(CLI::PositiveNumber);
    ex->add_option("--draws", ex_draws, "Monte-Carlo draws per sample")->check(CLI::PositiveNumber);
    ex->add_option("--split", opts.split, "train fraction")->check(CLI::Range(0.01, 0.99));
    ex->add_option("--seed", opts.seed, "seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_out, gen_setups, gen_devices, opts.seed);
        if (ing->parsed())
            return cmd_ingest(ing_manifest, ing_out, ing_gran, ing_limit, opts, ing_sanlog);
        if (tr->parsed())
            return cmd_train(tr_model, tr_cache, tr_manifest, tr_out, cfg, opts, tr_noweights,
                             tr_history, tr_trees, tr_maxpk);
        if (ev->parsed()) return cmd_eval(ev_model, ev_cache, ev_manifest, ev_out, opts);
        if (be->parsed())
            return cmd_bench(be_cache, be_manifest, be_cnn, be_lstm, be_baseline, be_out, be_samples,
                             be_reps, opts);
        if (ex->parsed())
            return cmd_explain(ex_model, ex_cache, ex_out, ex_targets, ex_background, ex_draws, opts);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace iotid::cli
