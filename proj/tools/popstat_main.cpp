#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "popstat/acceptance.hpp"
#include "popstat/errors.hpp"
#include "popstat/pipeline.hpp"

// Exit codes: 0 success, 1 acceptance-check failure, 2 usage/config error,
// 3 data error.

namespace {

struct Options {
    std::string config;
    std::string out;
    std::string method;
    std::string variant;
    std::string attribute;
    std::string criterion;
    std::optional<std::uint64_t> seed;
    std::optional<int> k;
    std::optional<double> spd_dist_m;
    std::optional<double> spd_time_s;
    std::vector<std::string> pings;
};

popstat::PipelineConfig resolve_config(const Options& opt) {
    popstat::PipelineConfig cfg =
        opt.config.empty() ? popstat::PipelineConfig{} : popstat::load_config(opt.config);
    if (opt.seed) cfg.seed = *opt.seed;
    if (!opt.out.empty()) cfg.out_dir = opt.out;
    if (opt.k) {
        if (*opt.k < 1) throw popstat::ConfigError("--k must be >= 1");
        cfg.k_resamples = *opt.k;
    }
    if (opt.spd_dist_m) {
        if (*opt.spd_dist_m <= 0.0) throw popstat::ConfigError("--spd-dist-m must be positive");
        cfg.spd_dist_m = *opt.spd_dist_m;
    }
    if (opt.spd_time_s) {
        if (*opt.spd_time_s <= 0.0) throw popstat::ConfigError("--spd-time-s must be positive");
        cfg.spd_time_s = *opt.spd_time_s;
    }
    if (!opt.pings.empty()) cfg.ping_files = opt.pings;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"per-neighbourhood population statistics from biased location samples"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opt.config, "JSON config file (defaults are built in)");
        cmd->add_option("--seed", opt.seed, "global seed (overrides config)");
        cmd->add_option("--out", opt.out, "output directory (default runs/out)");
        cmd->add_option("--k", opt.k, "number of sample draws (default 5)");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate city, truth and k biased samples");
    add_common(synth);
    CLI::App* ingest =
        app.add_subcommand("ingest", "pings -> stay-points -> attributes -> homes");
    add_common(ingest);
    ingest->add_option("--pings", opt.pings, "ping CSV file(s) (overrides config)");
    ingest->add_option("--spd-dist-m", opt.spd_dist_m, "stay-point distance threshold (m)");
    ingest->add_option("--spd-time-s", opt.spd_time_s, "stay-point time threshold (s)");
    CLI::App* estimate = app.add_subcommand("estimate", "initial per-cell estimates");
    add_common(estimate);
    estimate->add_option("--method", opt.method, "oblivious | debiased | debiased-ratio");
    CLI::App* train = app.add_subcommand("train", "fit regressors on initial estimates");
    add_common(train);
    train->add_option("--variant", opt.variant, "label source and weighting: O | D | OW | DW");
    train->add_option("--attribute", opt.attribute, "duration | distance | visits");
    CLI::App* evaluate = app.add_subcommand("evaluate", "error report over all methods");
    add_common(evaluate);
    CLI::App* repro = app.add_subcommand("repro", "run the acceptance suite from scratch");
    add_common(repro);
    repro->add_option("--criterion", opt.criterion, "run a single criterion (1..12)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const popstat::PipelineConfig cfg = resolve_config(opt);
        if (synth->parsed()) {
            popstat::cmd_synth(cfg);
        } else if (ingest->parsed()) {
            popstat::cmd_ingest(cfg);
        } else if (estimate->parsed()) {
            popstat::cmd_estimate(cfg, opt.method);
        } else if (train->parsed()) {
            popstat::cmd_train(cfg, opt.variant, opt.attribute);
        } else if (evaluate->parsed()) {
            popstat::cmd_evaluate(cfg);
        } else if (repro->parsed()) {
            const auto results =
                popstat::run_acceptance(opt.criterion, cfg.out_dir + "/acceptance");
            bool all = true;
            for (const auto& r : results) {
                std::printf("[%s] %2d %-26s %s\n", r.pass ? "PASS" : "FAIL", r.id,
                            r.name.c_str(), r.detail.c_str());
                all = all && r.pass;
            }
            return all ? 0 : 1;
        }
        return 0;
    } catch (const popstat::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const popstat::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
