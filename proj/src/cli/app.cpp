#include "lwinnn/cli/app.hpp"

#include "lwinnn/cli/commands.hpp"
#include "lwinnn/errors.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace lwinnn::cli {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Local-window nearest-neighbour anomaly detection over pre-extracted feature bundles", "lwinnn"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::size_t threads = 0;
    bool force = false;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    auto* threads_opt = app.add_option("--threads", threads, "worker threads, 0 = auto (env LWINN_THREADS)");
    app.add_flag("--force", force, "overwrite a bank built with a different embedding config");
    app.add_option("--set", overrides, "override one config key, e.g. --set window_size=5");
    std::size_t max_train = 0;
    auto* max_train_opt = app.add_option("--max-train-samples", max_train, "use only the first N train entries");
    bool max_after_blur = false;
    app.add_flag("--max-after-blur", max_after_blur, "image score = max of the blurred pixel map");

    FitOptions fit;
    auto* fit_cmd = app.add_subcommand("fit", "embed the train split and write a bank file");
    fit_cmd->add_option("--train", fit.train_manifest, "train manifest")->required();
    fit_cmd->add_option("--bank", fit.bank, "output bank file")->required();

    ScoreOptions score;
    auto* score_cmd = app.add_subcommand("score", "score a test split against a bank");
    score_cmd->add_option("--test", score.test_manifest, "test manifest")->required();
    score_cmd->add_option("--bank", score.bank, "bank file from fit")->required()->check(CLI::ExistingFile);
    score_cmd->add_option("--out", score.out_dir, "output directory")->required();

    EvalOptions eval;
    std::string curves;
    auto* eval_cmd = app.add_subcommand("eval", "image AUROC and pixel AUPRO from a scores index");
    eval_cmd->add_option("--scores", eval.scores_index, "scores.tsv written by score")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--report", eval.report, "report output path")->required();
    eval_cmd->add_option("--curves", curves, "curve table output path (default <report>.curves.tsv)");

    AblateOptions ablate;
    std::string sweep_file;
    std::vector<std::string> vary;
    auto* ablate_cmd = app.add_subcommand("ablate", "evaluate a grid of configurations");
    ablate_cmd->add_option("--train", ablate.train_manifest, "train manifest")->required();
    ablate_cmd->add_option("--test", ablate.test_manifest, "test manifest")->required();
    ablate_cmd->add_option("--sweep", sweep_file, "sweep file: key = v1 v2 ... per line")->check(CLI::ExistingFile);
    ablate_cmd->add_option("--vary", vary, "inline sweep axis, e.g. --vary 'window_size=1 3 5 7'");
    ablate_cmd->add_option("--table", ablate.table, "output table (TSV)")->required();

    HeatmapOptions heatmap;
    std::string image;
    auto* heatmap_cmd = app.add_subcommand("heatmap", "render a pixel map as a colour PNG");
    heatmap_cmd->add_option("--map", heatmap.map, "map file written by score")->required()->check(CLI::ExistingFile);
    heatmap_cmd->add_option("--image", image, "original image PNG to blend under the heatmap");
    heatmap_cmd->add_option("--out", heatmap.out, "output PNG")->required();
    heatmap_cmd->add_option("--alpha", heatmap.alpha, "heatmap opacity when blending")->check(CLI::Range(0.0, 1.0));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("--set expects key=value, got \"" + o + "\"");
            }
            apply_setting(cfg, o.substr(0, eq), o.substr(eq + 1));
        }
        if (*max_train_opt) {
            cfg.max_train_samples = max_train;
        }
        if (max_after_blur) {
            cfg.max_after_blur = true;
        }
        const std::size_t env_threads = threads_from_environment(threads, static_cast<bool>(*threads_opt));
        if (*threads_opt || env_threads != 0) {
            cfg.threads = env_threads;
        }

        if (*fit_cmd) {
            fit.force = force;
            return cmd_fit(fit, cfg, out, err);
        }
        if (*score_cmd) {
            return cmd_score(score, cfg, out, err);
        }
        if (*eval_cmd) {
            if (!curves.empty()) {
                eval.curves = curves;
            }
            return cmd_eval(eval, cfg, out, err);
        }
        if (*ablate_cmd) {
            std::string text;
            if (!sweep_file.empty()) {
                std::ifstream in(sweep_file);
                std::ostringstream ss;
                ss << in.rdbuf();
                text = ss.str() + "\n";
            }
            for (const auto& v : vary) {
                text += v + "\n";
            }
            ablate.sweep = parse_sweep(text);
            if (ablate.sweep.empty()) {
                throw ConfigError("ablate needs at least one sweep axis (--sweep or --vary)");
            }
            return cmd_ablate(ablate, cfg, out, err);
        }
        if (*heatmap_cmd) {
            if (!image.empty()) {
                heatmap.image = image;
            }
            return cmd_heatmap(heatmap, out, err);
        }
    } catch (const MetricError& e) {
        err << "error: " << e.what() << '\n';
        return kExitMetric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

} // namespace lwinnn::cli
