#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popstat/mlp.hpp"
#include "popstat/synth.hpp"

// End-to-end orchestration: config file handling, the pipeline stages behind
// the CLI subcommands, and the run manifest (checksums + timings).

namespace popstat {

struct PipelineConfig {
    std::uint64_t seed = 42;
    std::string out_dir = "runs/out";
    int k_resamples = 5;

    // ingest
    std::vector<std::string> ping_files;
    std::string city_file; // defaults to <out_dir>/city.json
    double spd_dist_m = 200.0;
    double spd_time_s = 1800.0;

    GenConfig synth; // synth.seed is overridden by the global seed

    std::vector<std::string> methods{"oblivious", "debiased"};

    // learner stages: one model per (variant x attribute x draw)
    std::vector<std::string> variants{"OW"};
    std::vector<std::string> attributes{"duration", "distance", "visits"};
    TrainConfig train; // weighted & seed are resolved per variant/draw

    std::string resolved_city_file() const {
        return city_file.empty() ? out_dir + "/city.json" : city_file;
    }
};

/// Built-in defaults, overridden by any fields present in the JSON file.
PipelineConfig load_config(const std::string& path);
PipelineConfig config_from_json_text(const std::string& text, const std::string& ctx);
std::string config_to_json(const PipelineConfig& cfg);

/// Label source 'O'/'D' and weighting from a variant tag (O, D, OW, DW).
struct VariantSpec {
    std::string label_method; // oblivious | debiased
    bool weighted = false;
};
VariantSpec parse_variant(const std::string& variant);

// stages
void cmd_synth(const PipelineConfig& cfg);
void cmd_ingest(const PipelineConfig& cfg);
void cmd_estimate(const PipelineConfig& cfg, const std::string& method_filter = "");
void cmd_train(const PipelineConfig& cfg, const std::string& variant_filter = "",
               const std::string& attribute_filter = "");
void cmd_evaluate(const PipelineConfig& cfg);

/// FNV-1a 64 of a file's bytes, as fixed-width hex.
std::string file_checksum(const std::string& path);

/// Merge artifacts + stage timing into <out_dir>/manifest.json.
void update_manifest(const PipelineConfig& cfg, const std::string& stage,
                     const std::vector<std::string>& artifacts, std::int64_t elapsed_ms);

} // namespace popstat
