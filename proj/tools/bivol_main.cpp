// bivol: bladder-volume estimation from lower-abdomen bio-impedance.
//
// Subcommands:
//   simulate  generate synthetic sessions (filling/voiding) or a labeled
//             window corpus, with optional injected artefacts
//   run       execute the four-stage pipeline on a session
//   train     train an artefact classifier on a labeled feature CSV
//   eval      score a model (or given predictions) against labels
//
// Exit codes: 0 success, 2 usage, 3 data/schema, 4 numerical failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bivol/classify.hpp"
#include "bivol/errors.hpp"
#include "bivol/estimate.hpp"
#include "bivol/evaluate.hpp"
#include "bivol/io.hpp"
#include "bivol/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(const bivol::Error& e) {
    switch (e.code()) {
        case bivol::ErrorCode::UnknownFeatureSet:
        case bivol::ErrorCode::InvalidArgument:
            return 2;
        case bivol::ErrorCode::NoConvergence:
        case bivol::ErrorCode::DivergedLoss:
        case bivol::ErrorCode::NumericalDegenerate:
            return 4;
        default:
            return 3;
    }
}

// Configuration precedence: flags > config file > defaults. The config file
// is a flat JSON object keyed by long option name (without dashes).
class ConfigFile {
public:
    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw bivol::Error(bivol::ErrorCode::IoFailure,
                               "cannot open config " + path);
        try {
            in >> doc_;
        } catch (const json::exception& e) {
            throw bivol::Error(bivol::ErrorCode::SchemaError,
                               std::string("bad config JSON: ") + e.what());
        }
    }

    template <typename T>
    void apply(const CLI::Option* opt, const char* key, T& value) const {
        if (opt != nullptr && opt->count() > 0) return;  // flag wins
        if (!doc_.contains(key)) return;
        try {
            value = doc_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw bivol::Error(bivol::ErrorCode::SchemaError,
                               std::string("bad config value for ") + key +
                                   ": " + e.what());
        }
    }

private:
    json doc_;
};

struct Timing {
    using clock = std::chrono::steady_clock;
    clock::time_point start = clock::now();

    double lap() {
        const auto now = clock::now();
        const double ms =
            std::chrono::duration<double, std::milli>(now - start).count();
        start = now;
        return ms;
    }
};

bivol::ArtefactSpec parse_artefact_flag(const std::string& s) {
    // kind:start:end:magnitude
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 4)
        throw bivol::Error(bivol::ErrorCode::InvalidArgument,
                           "--artefact expects kind:start:end:mag, got " + s);
    bivol::ArtefactSpec spec;
    spec.kind = bivol::artefact_kind_from_string(parts[0]);
    spec.t_start = bivol::parse_double(parts[1]);
    spec.t_end = bivol::parse_double(parts[2]);
    spec.magnitude = bivol::parse_double(parts[3]);
    return spec;
}

struct SimulateOpts {
    std::string kind, out = "sim_out", config;
    uint64_t seed = 1;
    double rate = 45.0, duration_min = 14.0, volume = 500.0, duration_s = 45.0,
           delta = 0.05, mu0 = 700.0, noise_sd = 0.2, peak_frac = 0.5,
           window_len = -1.0;
    double confounder_onset = -1.0, confounder_drift = 1.4;
    std::vector<std::string> artefacts;
    int per_class = 500;
};

void add_simulate(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "simulate", "generate a synthetic session or labeled corpus");
    auto opts = std::make_shared<SimulateOpts>();

    cmd->add_option("--kind", opts->kind, "filling|voiding|corpus")->required();
    cmd->add_option("--out", opts->out, "output directory");
    cmd->add_option("--seed", opts->seed, "random seed");
    cmd->add_option("--config", opts->config, "JSON config file");
    cmd->add_option("--rate", opts->rate, "filling rate, ml/min");
    cmd->add_option("--duration", opts->duration_min, "filling duration, min");
    cmd->add_option("--volume", opts->volume, "voided volume, ml");
    cmd->add_option("--duration-s", opts->duration_s, "voiding duration, s");
    cmd->add_option("--delta", opts->delta, "sensitivity, ohm/ml");
    cmd->add_option("--mu0", opts->mu0, "baseline BI, ohm");
    cmd->add_option("--noise-sd", opts->noise_sd, "BI noise sd, ohm");
    cmd->add_option("--peak-frac", opts->peak_frac,
                    "voiding flow peak position (fraction of duration)");
    cmd->add_option("--window-len", opts->window_len,
                    "analysis window length override, s");
    cmd->add_option("--confounder-onset", opts->confounder_onset,
                    "confounder onset volume, ml (filling only)");
    cmd->add_option("--confounder-drift", opts->confounder_drift,
                    "confounder drift, ohm/min");
    cmd->add_option("--artefact", opts->artefacts,
                    "injected artefact kind:start:end:mag (repeatable); kinds: "
                    "noise, drift+, drift-");
    cmd->add_option("--per-class", opts->per_class,
                    "corpus windows per class (kind=corpus)");

    cmd->callback([opts, cmd] {
        ConfigFile cfgfile;
        if (!opts->config.empty()) cfgfile.load(opts->config);
        cfgfile.apply(cmd->get_option("--seed"), "seed", opts->seed);
        cfgfile.apply(cmd->get_option("--delta"), "delta", opts->delta);
        cfgfile.apply(cmd->get_option("--noise-sd"), "noise_sd", opts->noise_sd);
        cfgfile.apply(cmd->get_option("--window-len"), "window_len",
                      opts->window_len);

        const fs::path out(opts->out);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec)
            throw bivol::Error(bivol::ErrorCode::IoFailure,
                               "cannot create " + out.string());

        if (opts->kind == "corpus") {
            bivol::CorpusOptions copt;
            copt.per_class = opts->per_class;
            copt.noise_sd_ohm = opts->noise_sd;
            const auto corpus = bivol::gen_labeled_corpus(copt, opts->seed);
            bivol::write_feature_csv(out / "features.csv", corpus);
            std::cout << "wrote " << (out / "features.csv").string() << " ("
                      << corpus.rows.size() << " windows)\n";
            return;
        }

        bivol::SimResult sim;
        if (opts->kind == "filling") {
            bivol::FillingProfile p;
            p.rate_ml_per_min = opts->rate;
            p.duration_min = opts->duration_min;
            p.delta_ohm_per_ml = opts->delta;
            p.mu0_ohm = opts->mu0;
            p.noise_sd_ohm = opts->noise_sd;
            if (opts->confounder_onset >= 0.0)
                p.confounder = bivol::Confounder{opts->confounder_onset,
                                                 opts->confounder_drift};
            sim = bivol::gen_filling(p, opts->seed);
        } else if (opts->kind == "voiding") {
            bivol::VoidingProfile p;
            p.voided_volume_ml = opts->volume;
            p.duration_s = opts->duration_s;
            p.delta_ohm_per_ml = opts->delta;
            p.mu0_ohm = opts->mu0;
            p.noise_sd_ohm = opts->noise_sd;
            p.peak_frac = opts->peak_frac;
            sim = bivol::gen_voiding(p, opts->seed);
        } else {
            throw CLI::ValidationError("--kind", "expected filling|voiding|corpus");
        }
        if (opts->window_len > 0.0) sim.rec.meta.window_len = opts->window_len;

        std::vector<bivol::ArtefactSpec> specs;
        for (const auto& a : opts->artefacts)
            specs.push_back(parse_artefact_flag(a));
        std::vector<bivol::ArtefactLabel> labels;
        if (specs.empty()) {
            labels = bivol::derive_trend_labels(sim.rec, opts->noise_sd);
        } else {
            auto injected = bivol::inject_artefacts(sim.rec, specs,
                                                    opts->noise_sd, opts->seed + 1);
            sim.rec = std::move(injected.rec);
            labels = std::move(injected.labels);
        }

        bivol::write_session_csv(out / "session.csv", sim.rec);
        bivol::write_meta_json(out / "meta.json", sim.rec.meta);
        bivol::write_trace_csv(out / "truth.csv", sim.truth);
        bivol::write_labels_csv(out / "labels.csv", labels);
        std::cout << "wrote session.csv meta.json truth.csv labels.csv under "
                  << out.string() << '\n';
    });
}

struct RunOpts {
    std::string session, meta, labels, model, out = "run_out", config;
    std::string suppress = "on";
    double v_rate0 = 1.0, q0 = 20.0, lowess_span = 0.3, delta = -1.0;
    int lowess_iters = 5;
};

void add_run(CLI::App& app) {
    auto* cmd = app.add_subcommand("run", "run the estimation pipeline");
    auto opts = std::make_shared<RunOpts>();

    cmd->add_option("--session", opts->session, "session CSV")->required();
    cmd->add_option("--meta", opts->meta, "meta JSON")->required();
    cmd->add_option("--labels", opts->labels, "per-window labels CSV");
    cmd->add_option("--model", opts->model, "trained model JSON");
    cmd->add_option("--out", opts->out, "output directory");
    cmd->add_option("--config", opts->config, "JSON config file");
    cmd->add_option("--suppress", opts->suppress, "on|off artefact gating");
    cmd->add_option("--v-rate0", opts->v_rate0,
                    "assumed filling rate at init, ml/min");
    cmd->add_option("--q0", opts->q0, "assumed voiding flow at init, ml/s");
    cmd->add_option("--lowess-span", opts->lowess_span, "LOWESS span fraction");
    cmd->add_option("--lowess-iters", opts->lowess_iters,
                    "LOWESS robustness iterations");
    cmd->add_option("--delta", opts->delta, "sensitivity override, ohm/ml");

    cmd->callback([opts, cmd] {
        ConfigFile cfgfile;
        if (!opts->config.empty()) cfgfile.load(opts->config);
        cfgfile.apply(cmd->get_option("--v-rate0"), "v_rate0", opts->v_rate0);
        cfgfile.apply(cmd->get_option("--q0"), "q0", opts->q0);
        cfgfile.apply(cmd->get_option("--lowess-span"), "lowess_span",
                      opts->lowess_span);
        cfgfile.apply(cmd->get_option("--lowess-iters"), "lowess_iters",
                      opts->lowess_iters);
        cfgfile.apply(cmd->get_option("--suppress"), "suppress", opts->suppress);
        cfgfile.apply(cmd->get_option("--delta"), "delta", opts->delta);

        if (opts->labels.empty() == opts->model.empty())
            throw CLI::ValidationError("--labels/--model",
                                       "exactly one of the two must be given");
        if (opts->suppress != "on" && opts->suppress != "off")
            throw CLI::ValidationError("--suppress", "expected on|off");

        Timing timing;
        auto rec = bivol::read_session(opts->session, opts->meta);
        if (opts->delta > 0.0) rec.meta.delta = opts->delta;
        if (!(rec.meta.delta > bivol::kDeltaMin &&
              rec.meta.delta < bivol::kDeltaMax))
            throw bivol::Error(bivol::ErrorCode::SchemaError,
                               "delta outside the sanity band");
        const double t_load = timing.lap();

        bivol::PipelineConfig cfg;
        cfg.lowess.span_frac = opts->lowess_span;
        cfg.lowess.robust_iters = opts->lowess_iters;
        cfg.v_rate0_ml_per_min = opts->v_rate0;
        cfg.q0_ml_per_s = opts->q0;
        cfg.suppress = opts->suppress == "on";
        const bivol::SensitivityModel sens{rec.meta.delta};

        bivol::SessionRun run;
        if (!opts->labels.empty()) {
            const auto labels = bivol::read_labels_csv(opts->labels);
            run = bivol::run_session(rec, labels, sens, rec.meta.context, cfg);
        } else {
            const auto model = bivol::load_model(opts->model);
            run = bivol::run_session(rec, model, sens, rec.meta.context, cfg);
        }
        const double t_run = timing.lap();

        const fs::path out(opts->out);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec)
            throw bivol::Error(bivol::ErrorCode::IoFailure,
                               "cannot create " + out.string());
        bivol::write_steps_csv(out / "steps.csv", run.steps);

        json summary;
        summary["windows"] = run.steps.size();
        summary["endpoint_ml"] = run.endpoint_ml();
        summary["clamp_events"] = run.clamp_events;
        summary["suppress"] = cfg.suppress;
        if (rec.meta.ground_truth) {
            const auto pairs = bivol::pair_with_truth(
                run.steps, *rec.meta.ground_truth, rec.meta.context);
            summary["truth_endpoint_ml"] = pairs.back().second;
            summary["endpoint_error_ml"] = pairs.back().first - pairs.back().second;
        }
        bivol::write_text_file(out / "summary.json", summary.dump(2) + "\n");
        // timing goes to stderr so data outputs stay byte-reproducible
        std::cerr << "timing_ms load=" << t_load << " pipeline=" << t_run << '\n';
        std::cout << "endpoint " << bivol::format_double(run.endpoint_ml())
                  << " ml over " << run.steps.size() << " windows\n";
    });
}

struct TrainOpts {
    std::string features, out = "train_out", model = "svm", config;
    int feature_set = 1, kfold = 10, epochs = 500, batch = 32;
    double gamma = 0.1, C = 100.0, lr = 0.01;
    uint64_t seed = 1;
    std::vector<double> grid_gamma, grid_c;
};

void add_train(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "train an artefact classifier");
    auto opts = std::make_shared<TrainOpts>();

    cmd->add_option("--features", opts->features, "labeled feature CSV")
        ->required();
    cmd->add_option("--out", opts->out, "output directory");
    cmd->add_option("--model", opts->model, "svm|mlp");
    cmd->add_option("--feature-set", opts->feature_set, "feature set id 1..5");
    cmd->add_option("--kfold", opts->kfold, "cross-validation folds");
    cmd->add_option("--gamma", opts->gamma, "SVM RBF gamma");
    cmd->add_option("--C", opts->C, "SVM C");
    cmd->add_option("--epochs", opts->epochs, "MLP epochs");
    cmd->add_option("--lr", opts->lr, "MLP learning rate");
    cmd->add_option("--batch", opts->batch, "MLP batch size");
    cmd->add_option("--seed", opts->seed, "random seed");
    cmd->add_option("--config", opts->config, "JSON config file");
    cmd->add_option("--grid-gamma", opts->grid_gamma,
                    "gamma grid for SVM search (overrides --gamma)");
    cmd->add_option("--grid-c", opts->grid_c, "C grid for SVM search");

    cmd->callback([opts, cmd] {
        ConfigFile cfgfile;
        if (!opts->config.empty()) cfgfile.load(opts->config);
        cfgfile.apply(cmd->get_option("--feature-set"), "feature_set",
                      opts->feature_set);
        cfgfile.apply(cmd->get_option("--kfold"), "kfold", opts->kfold);
        cfgfile.apply(cmd->get_option("--gamma"), "gamma", opts->gamma);
        cfgfile.apply(cmd->get_option("--C"), "C", opts->C);
        cfgfile.apply(cmd->get_option("--epochs"), "epochs", opts->epochs);
        cfgfile.apply(cmd->get_option("--lr"), "lr", opts->lr);
        cfgfile.apply(cmd->get_option("--seed"), "seed", opts->seed);

        if (opts->model != "svm" && opts->model != "mlp")
            throw CLI::ValidationError("--model", "expected svm|mlp");

        const auto matrix = bivol::read_feature_csv(opts->features);
        auto ds = bivol::make_dataset(matrix, opts->feature_set);

        const fs::path out(opts->out);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec)
            throw bivol::Error(bivol::ErrorCode::IoFailure,
                               "cannot create " + out.string());

        bivol::AnyModel model;
        bivol::ClassifierMetrics metrics;
        if (opts->model == "svm") {
            bivol::SvmConfig cfg;
            cfg.gamma = opts->gamma;
            cfg.C = opts->C;
            if (!opts->grid_gamma.empty() && !opts->grid_c.empty()) {
                const auto best = bivol::grid_search_svm(
                    ds, opts->grid_gamma, opts->grid_c, opts->kfold, opts->seed);
                cfg.gamma = best.gamma;
                cfg.C = best.C;
                std::cout << "grid search picked gamma="
                          << bivol::format_double(best.gamma)
                          << " C=" << bivol::format_double(best.C) << '\n';
            }
            metrics = bivol::kfold_cv(ds, opts->kfold,
                                      bivol::svm_trainer(cfg, opts->seed),
                                      opts->seed);
            auto m = bivol::train_svm(ds, cfg, opts->seed);
            m.feature_set_id = opts->feature_set;
            model = std::move(m);
        } else {
            bivol::MlpConfig cfg;
            cfg.epochs = opts->epochs;
            cfg.lr = opts->lr;
            cfg.batch_size = opts->batch;
            metrics = bivol::kfold_cv(ds, opts->kfold,
                                      bivol::mlp_trainer(cfg, opts->seed),
                                      opts->seed);
            auto m = bivol::train_mlp(ds, cfg, opts->seed).model;
            m.feature_set_id = opts->feature_set;
            model = std::move(m);
        }

        bivol::save_model(out / "model.json", model);
        bivol::write_text_file(out / "metrics.csv", metrics.to_csv());
        bivol::write_text_file(out / "metrics.txt", metrics.to_text());
        std::cout << "cv accuracy "
                  << bivol::format_double(metrics.overall_accuracy) << " over "
                  << opts->kfold << " folds; model written to "
                  << (out / "model.json").string() << '\n';
    });
}

struct EvalOpts {
    std::string features, model, predictions, out = "eval_out";
};

void add_eval(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "eval", "evaluate a model or prediction file against labels");
    auto opts = std::make_shared<EvalOpts>();

    cmd->add_option("--features", opts->features, "labeled feature CSV")
        ->required();
    cmd->add_option("--model", opts->model, "trained model JSON");
    cmd->add_option("--predictions", opts->predictions,
                    "labels CSV with predicted labels");
    cmd->add_option("--out", opts->out, "output directory");

    cmd->callback([opts] {
        if (opts->model.empty() == opts->predictions.empty())
            throw CLI::ValidationError("--model/--predictions",
                                       "exactly one of the two must be given");
        const auto matrix = bivol::read_feature_csv(opts->features);
        if (!matrix.labeled())
            throw bivol::Error(bivol::ErrorCode::SchemaError,
                               "feature CSV has no label column");

        std::vector<int> y_pred;
        std::vector<std::array<double, bivol::kNumClasses>> scores;
        if (!opts->model.empty()) {
            const auto model = bivol::load_model(opts->model);
            const auto& fs_set =
                bivol::feature_set(bivol::model_feature_set_id(model));
            for (const auto& row : matrix.rows) {
                const auto x = bivol::project(row, fs_set);
                const auto pred = bivol::predict(model, x);
                y_pred.push_back(bivol::label_code(pred.label));
                scores.push_back(pred.scores);
            }
        } else {
            const auto labels = bivol::read_labels_csv(opts->predictions);
            if (labels.size() != matrix.labels.size())
                throw bivol::Error(bivol::ErrorCode::DimensionMismatch,
                                   "prediction count != label count");
            for (const auto l : labels) y_pred.push_back(bivol::label_code(l));
        }

        const auto metrics = bivol::compute_metrics(matrix.labels, y_pred, scores);
        const fs::path out(opts->out);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec)
            throw bivol::Error(bivol::ErrorCode::IoFailure,
                               "cannot create " + out.string());
        bivol::write_text_file(out / "metrics.csv", metrics.to_csv());
        bivol::write_text_file(out / "metrics.txt", metrics.to_text());
        std::cout << "accuracy "
                  << bivol::format_double(metrics.overall_accuracy) << " on "
                  << metrics.n << " windows\n";
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bladder volume estimation from bio-impedance"};
    app.require_subcommand(1);
    add_simulate(app);
    add_run(app);
    add_train(app);
    add_eval(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help path
        app.exit(e);
        return 2;
    } catch (const bivol::Error& e) {
        std::cerr << "error [" << bivol::error_code_name(e.code())
                  << "]: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
