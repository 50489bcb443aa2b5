#include "popstat/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "popstat/csv.hpp"
#include "popstat/errors.hpp"
#include "popstat/eval.hpp"
#include "popstat/features.hpp"
#include "popstat/learner.hpp"

namespace popstat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class StageTimer {
  public:
    StageTimer() : start_(std::chrono::steady_clock::now()) {}
    std::int64_t ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

void genconfig_from_json(const json& j, GenConfig& g) {
    auto opt = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    if (j.contains("origin_lat")) g.origin.lat = j.at("origin_lat").get<double>();
    if (j.contains("origin_lon")) g.origin.lon = j.at("origin_lon").get<double>();
    opt("cell_size_m", g.cell_size_m);
    opt("rows", g.rows);
    opt("cols", g.cols);
    opt("population_mean", g.population_mean);
    opt("population_spread", g.population_spread);
    opt("income_mean", g.income_mean);
    opt("income_spread", g.income_spread);
    if (j.contains("age_concentration"))
        g.age_concentration = j.at("age_concentration").get<std::array<double, 3>>();
    opt("k_categories", g.k_categories);
    opt("poi_min", g.poi_min);
    opt("poi_max", g.poi_max);
    opt("poi_mix_concentration", g.poi_mix_concentration);
    opt("duration_mean_s", g.duration_mean_s);
    opt("duration_spread_s", g.duration_spread_s);
    opt("distance_mean_m", g.distance_mean_m);
    opt("distance_spread_m", g.distance_spread_m);
    opt("visits_mean", g.visits_mean);
    opt("visits_spread", g.visits_spread);
    opt("home_regular_p", g.home_regular_p);
    opt("home_duration_scale", g.home_duration_scale);
    opt("base_ratio", g.base_ratio);
    opt("income_slope", g.income_slope);
    if (j.contains("age_slopes")) g.age_slopes = j.at("age_slopes").get<std::array<double, 3>>();
}

json genconfig_to_json(const GenConfig& g) {
    return json{{"origin_lat", g.origin.lat},
                {"origin_lon", g.origin.lon},
                {"cell_size_m", g.cell_size_m},
                {"rows", g.rows},
                {"cols", g.cols},
                {"population_mean", g.population_mean},
                {"population_spread", g.population_spread},
                {"income_mean", g.income_mean},
                {"income_spread", g.income_spread},
                {"age_concentration", g.age_concentration},
                {"k_categories", g.k_categories},
                {"poi_min", g.poi_min},
                {"poi_max", g.poi_max},
                {"poi_mix_concentration", g.poi_mix_concentration},
                {"duration_mean_s", g.duration_mean_s},
                {"duration_spread_s", g.duration_spread_s},
                {"distance_mean_m", g.distance_mean_m},
                {"distance_spread_m", g.distance_spread_m},
                {"visits_mean", g.visits_mean},
                {"visits_spread", g.visits_spread},
                {"home_regular_p", g.home_regular_p},
                {"home_duration_scale", g.home_duration_scale},
                {"base_ratio", g.base_ratio},
                {"income_slope", g.income_slope},
                {"age_slopes", g.age_slopes}};
}

std::string sample_path(const PipelineConfig& cfg, int i) {
    return cfg.out_dir + "/samples/sample_" + fmt_int(i) + ".csv";
}
std::string profile_path(const PipelineConfig& cfg, int i) {
    return cfg.out_dir + "/samples/profile_" + fmt_int(i) + ".csv";
}
std::string estimates_path(const PipelineConfig& cfg, const std::string& method,
                           const std::string& attr, int i) {
    return cfg.out_dir + "/estimates/" + method + "_" + attr + "_" + fmt_int(i) + ".csv";
}
std::string model_path(const PipelineConfig& cfg, const std::string& variant,
                       const std::string& attr, int i) {
    return cfg.out_dir + "/models/" + variant + "_" + attr + "_" + fmt_int(i) + ".json";
}
std::string trace_path(const PipelineConfig& cfg, const std::string& variant,
                       const std::string& attr, int i) {
    return cfg.out_dir + "/traces/" + variant + "_" + attr + "_" + fmt_int(i) + ".csv";
}

EstimateTable estimate_one(const std::string& method, Attribute attr, const Dataset& obs,
                           const SamplingProfile& profile, const TruthTable& tt,
                           const CityGrid& grid) {
    if (method == "oblivious") {
        if (attr == Attribute::Visits)
            return oblivious_count(obs, profile.total_true(), profile.total_observed(), grid);
        return oblivious_avg(obs, grid, attr);
    }
    if (method == "debiased") {
        if (attr == Attribute::Visits) return debiased_count(obs, profile, grid);
        return debiased_avg(obs, profile, grid, attr, tt);
    }
    if (method == "debiased-ratio") {
        if (attr == Attribute::Visits) return debiased_count(obs, profile, grid);
        return debiased_avg(obs, profile, grid, attr, tt, /*ratio_variant=*/true);
    }
    throw ConfigError("unknown estimation method: " + method);
}

} // namespace

VariantSpec parse_variant(const std::string& variant) {
    if (variant == "O") return {"oblivious", false};
    if (variant == "OW") return {"oblivious", true};
    if (variant == "D") return {"debiased", false};
    if (variant == "DW") return {"debiased", true};
    throw ConfigError("unknown variant '" + variant + "' (expected O, D, OW or DW)");
}

PipelineConfig config_from_json_text(const std::string& text, const std::string& ctx) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
    PipelineConfig cfg;
    try {
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("k_resamples")) cfg.k_resamples = j.at("k_resamples").get<int>();
        if (j.contains("ping_files"))
            cfg.ping_files = j.at("ping_files").get<std::vector<std::string>>();
        if (j.contains("city_file")) cfg.city_file = j.at("city_file").get<std::string>();
        if (j.contains("spd_dist_m")) cfg.spd_dist_m = j.at("spd_dist_m").get<double>();
        if (j.contains("spd_time_s")) cfg.spd_time_s = j.at("spd_time_s").get<double>();
        if (j.contains("synth")) genconfig_from_json(j.at("synth"), cfg.synth);
        if (j.contains("methods")) cfg.methods = j.at("methods").get<std::vector<std::string>>();
        if (j.contains("variants")) cfg.variants = j.at("variants").get<std::vector<std::string>>();
        if (j.contains("attributes"))
            cfg.attributes = j.at("attributes").get<std::vector<std::string>>();
        if (j.contains("train")) {
            const auto& t = j.at("train");
            if (t.contains("epochs")) cfg.train.epochs = t.at("epochs").get<int>();
            if (t.contains("lr")) cfg.train.lr = t.at("lr").get<double>();
            if (t.contains("batch")) cfg.train.batch = t.at("batch").get<int>();
            if (t.contains("validation_fraction"))
                cfg.train.validation_fraction = t.at("validation_fraction").get<double>();
            if (t.contains("patience")) cfg.train.patience = t.at("patience").get<int>();
            if (t.contains("standardize_targets"))
                cfg.train.standardize_targets = t.at("standardize_targets").get<bool>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
    if (cfg.k_resamples < 1) throw ConfigError(ctx + ": k_resamples must be >= 1");
    if (cfg.spd_dist_m <= 0.0 || cfg.spd_time_s <= 0.0)
        throw ConfigError(ctx + ": SPD thresholds must be positive");
    if (cfg.methods.empty()) throw ConfigError(ctx + ": methods must be non-empty");
    if (cfg.attributes.empty()) throw ConfigError(ctx + ": attributes must be non-empty");
    for (const auto& v : cfg.variants) parse_variant(v);
    for (const auto& a : cfg.attributes) attribute_from_name(a);
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_text(text, path);
}

std::string config_to_json(const PipelineConfig& cfg) {
    json j{{"seed", cfg.seed},
           {"out_dir", cfg.out_dir},
           {"k_resamples", cfg.k_resamples},
           {"ping_files", cfg.ping_files},
           {"city_file", cfg.city_file},
           {"spd_dist_m", cfg.spd_dist_m},
           {"spd_time_s", cfg.spd_time_s},
           {"synth", genconfig_to_json(cfg.synth)},
           {"methods", cfg.methods},
           {"variants", cfg.variants},
           {"attributes", cfg.attributes},
           {"train",
            {{"epochs", cfg.train.epochs},
             {"lr", cfg.train.lr},
             {"batch", cfg.train.batch},
             {"validation_fraction", cfg.train.validation_fraction},
             {"patience", cfg.train.patience},
             {"standardize_targets", cfg.train.standardize_targets}}}};
    return j.dump(1);
}

static std::string hex64(std::uint64_t h) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", (unsigned long long)h);
    return hex;
}

std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open for checksum");
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    return hex64(h);
}

void update_manifest(const PipelineConfig& cfg, const std::string& stage,
                     const std::vector<std::string>& artifacts, std::int64_t elapsed_ms) {
    const std::string path = cfg.out_dir + "/manifest.json";
    json j;
    if (fs::exists(path)) {
        std::ifstream in(path);
        try {
            in >> j;
        } catch (const json::exception&) {
            j = json::object(); // manifest is regenerable bookkeeping
        }
    }
    j["config_hash"] = hex64(fnv1a64(config_to_json(cfg)));
    j["seed"] = cfg.seed;
    if (!j.contains("artifacts")) j["artifacts"] = json::object();
    for (const auto& a : artifacts) {
        const std::string rel = fs::relative(a, cfg.out_dir).string();
        j["artifacts"][rel] = file_checksum(a);
    }
    if (!j.contains("stages")) j["stages"] = json::object();
    j["stages"][stage] = {{"elapsed_ms", elapsed_ms}};
    std::ofstream out(path);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << j.dump(1) << '\n';
}

void cmd_synth(const PipelineConfig& cfg) {
    StageTimer timer;
    GenConfig gen = cfg.synth;
    gen.seed = cfg.seed;
    fs::create_directories(cfg.out_dir + "/samples");

    const CityModel city = generate_city(gen);
    const Dataset truth = generate_population(city, gen);
    const std::vector<double> targets = sampling_targets(city, gen);
    const auto draws =
        resample_k(truth, city.grid.cell_count(), targets, cfg.k_resamples, derive_seed(cfg.seed, "draws"));

    std::vector<std::string> artifacts;
    write_city_json(cfg.resolved_city_file(), city);
    artifacts.push_back(cfg.resolved_city_file());
    write_dataset_csv(cfg.out_dir + "/truth.csv", truth);
    artifacts.push_back(cfg.out_dir + "/truth.csv");
    for (int i = 0; i < cfg.k_resamples; ++i) {
        write_dataset_csv(sample_path(cfg, i), draws[i].observed);
        write_profile_csv(profile_path(cfg, i), draws[i].profile);
        artifacts.push_back(sample_path(cfg, i));
        artifacts.push_back(profile_path(cfg, i));
    }
    update_manifest(cfg, "synth", artifacts, timer.ms());
    std::cout << "synth: " << truth.size() << " users, " << cfg.k_resamples
              << " draws -> " << cfg.out_dir << "\n";
}

void cmd_ingest(const PipelineConfig& cfg) {
    StageTimer timer;
    if (cfg.ping_files.empty()) throw ConfigError("ingest: no ping_files configured");
    const CityModel city = read_city_json(cfg.resolved_city_file());
    fs::create_directories(cfg.out_dir);

    std::map<std::string, std::vector<RawPing>> pings;
    for (const auto& f : cfg.ping_files)
        for (auto& [user, ps] : parse_pings(f)) {
            auto& dst = pings[user];
            dst.insert(dst.end(), ps.begin(), ps.end());
        }
    for (auto& [user, ps] : pings)
        std::stable_sort(ps.begin(), ps.end(),
                         [](const RawPing& a, const RawPing& b) { return a.timestamp < b.timestamp; });

    const IngestResult res = build_dataset(pings, city.grid, cfg.spd_dist_m, cfg.spd_time_s);
    const std::string out = cfg.out_dir + "/ingested.csv";
    write_dataset_csv(out, res.dataset);
    const std::string summary_path = cfg.out_dir + "/ingest_summary.json";
    {
        json s{{"users_kept", res.dataset.size()},
               {"users_dropped", res.dropped_users},
               {"spd_dist_m", cfg.spd_dist_m},
               {"spd_time_s", cfg.spd_time_s}};
        std::ofstream sf(summary_path);
        if (!sf) throw DataError(summary_path + ": cannot open for writing");
        sf << s.dump(1) << '\n';
    }
    update_manifest(cfg, "ingest", {out, summary_path}, timer.ms());
    std::cout << "ingest: " << res.dataset.size() << " users kept, " << res.dropped_users
              << " dropped (no in-grid home)";
    if (res.dataset.empty()) std::cout << " [warning: empty dataset]";
    std::cout << "\n";
}

void cmd_estimate(const PipelineConfig& cfg, const std::string& method_filter) {
    StageTimer timer;
    const CityModel city = read_city_json(cfg.resolved_city_file());
    const Dataset truth = read_dataset_csv(cfg.out_dir + "/truth.csv");
    const TruthTable tt = truth_stats(truth, city.grid);
    fs::create_directories(cfg.out_dir + "/estimates");

    std::vector<std::string> methods = cfg.methods;
    if (!method_filter.empty()) methods = {method_filter};

    std::vector<std::string> artifacts;
    for (int i = 0; i < cfg.k_resamples; ++i) {
        const Dataset obs = read_dataset_csv(sample_path(cfg, i));
        const SamplingProfile profile = read_profile_csv(profile_path(cfg, i));
        for (const auto& method : methods)
            for (Attribute attr : {Attribute::Visits, Attribute::Duration, Attribute::Distance}) {
                const EstimateTable t = estimate_one(method, attr, obs, profile, tt, city.grid);
                const std::string path = estimates_path(cfg, method, attribute_name(attr), i);
                write_estimates_csv(path, t);
                artifacts.push_back(path);
            }
    }
    update_manifest(cfg, "estimate", artifacts, timer.ms());
    std::cout << "estimate: " << artifacts.size() << " tables -> " << cfg.out_dir
              << "/estimates\n";
}

void cmd_train(const PipelineConfig& cfg, const std::string& variant_filter,
               const std::string& attribute_filter) {
    StageTimer timer;
    const CityModel city = read_city_json(cfg.resolved_city_file());
    const FeatureScaler scaler = fit_scaler(city);
    const Eigen::MatrixXd features = feature_matrix(city, scaler);
    fs::create_directories(cfg.out_dir + "/models");
    fs::create_directories(cfg.out_dir + "/traces");
    fs::create_directories(cfg.out_dir + "/estimates");

    write_features_csv(cfg.out_dir + "/features.csv", features);
    write_scaler_json(cfg.out_dir + "/features_meta.json", city.k_categories, scaler);
    std::vector<std::string> artifacts{cfg.out_dir + "/features.csv",
                                       cfg.out_dir + "/features_meta.json"};

    std::vector<std::string> variants = cfg.variants;
    if (!variant_filter.empty()) variants = {variant_filter};
    std::vector<std::string> attributes = cfg.attributes;
    if (!attribute_filter.empty()) attributes = {attribute_filter};

    for (const auto& variant : variants) {
        const VariantSpec spec = parse_variant(variant);
        for (const auto& attr : attributes) {
            attribute_from_name(attr);
            for (int i = 0; i < cfg.k_resamples; ++i) {
                const std::string label_path = estimates_path(cfg, spec.label_method, attr, i);
                if (!fs::exists(label_path))
                    throw DataError("train: label table missing: " + label_path +
                                    " (run `estimate` first)");
                const EstimateTable labels = read_estimates_csv(label_path);
                TrainConfig tc = cfg.train;
                tc.weighted = spec.weighted;
                tc.seed = derive_seed(cfg.seed, "train." + variant + "." + attr, i);
                const LearnedModel model = train_model(features, labels, tc);

                write_model_json(model_path(cfg, variant, attr, i), model);
                write_trace_csv(trace_path(cfg, variant, attr, i), model.train_loss);
                const EstimateTable pred =
                    predict_all(model, features, labels.support, "learned-" + variant);
                const std::string pred_path = estimates_path(cfg, "learned-" + variant, attr, i);
                write_estimates_csv(pred_path, pred);
                artifacts.push_back(model_path(cfg, variant, attr, i));
                artifacts.push_back(trace_path(cfg, variant, attr, i));
                artifacts.push_back(pred_path);
            }
        }
    }
    update_manifest(cfg, "train", artifacts, timer.ms());
    std::cout << "train: " << variants.size() << " variant(s) x " << attributes.size()
              << " attribute(s) x " << cfg.k_resamples << " draws\n";
}

void cmd_evaluate(const PipelineConfig& cfg) {
    StageTimer timer;
    const CityModel city = read_city_json(cfg.resolved_city_file());
    const Dataset truth = read_dataset_csv(cfg.out_dir + "/truth.csv");
    const TruthTable tt = truth_stats(truth, city.grid);
    fs::create_directories(cfg.out_dir + "/eval");

    // methods actually present on disk
    std::vector<std::string> methods = cfg.methods;
    for (const auto& v : cfg.variants)
        if (fs::exists(estimates_path(cfg, "learned-" + v, cfg.attributes.front(), 0)))
            methods.push_back("learned-" + v);

    // per-draw buckets + observed datasets are shared across methods
    std::vector<QuantileBuckets> buckets;
    std::vector<SamplingProfile> profiles;
    for (int i = 0; i < cfg.k_resamples; ++i) {
        const Dataset obs = read_dataset_csv(sample_path(cfg, i));
        buckets.push_back(quantile_buckets(truth, obs, city.grid));
        profiles.push_back(read_profile_csv(profile_path(cfg, i)));
    }

    json report;
    report["k"] = cfg.k_resamples;
    report["seed"] = cfg.seed;
    report["metadata"] = {
        {"variance_normalization", "per-cell min-max, population variance"},
        {"bucket_convention", "nearest-rank quantile cuts at p=0.2,0.4,0.6,0.8"},
        {"relative_error", "mean |truth-est|/|truth| over defined nonzero-truth cells"}};

    const VarianceTable vt = variance_analysis(truth, city.grid);
    const char* attr_names[3] = {"visits", "duration", "distance"};
    json jvar;
    for (int a = 0; a < 3; ++a) {
        jvar[attr_names[a]] =
            vt.value[a] ? json(*vt.value[a]) : json(nullptr);
        jvar["cells_used"][attr_names[a]] = vt.cells_used[a];
    }
    report["variance"] = jvar;

    // demographic correlations against realized user sampling ratios, per run
    {
        const char* demo_names[4] = {"age_child", "age_adult", "age_senior", "median_income"};
        std::array<std::vector<double>, 4> rs;
        for (int i = 0; i < cfg.k_resamples; ++i) {
            std::vector<double> ratio;
            std::array<std::vector<double>, 4> demo;
            for (int mu = 0; mu < city.grid.cell_count(); ++mu) {
                if (profiles[i].true_users[mu] == 0) continue;
                ratio.push_back(profiles[i].ratio(mu));
                for (int a = 0; a < 3; ++a) demo[a].push_back(city.cells[mu].age_fractions[a]);
                demo[3].push_back(city.cells[mu].median_income);
            }
            for (int d = 0; d < 4; ++d) {
                try {
                    rs[d].push_back(pearson(demo[d], ratio));
                } catch (const DataError&) {
                    // constant column in this draw: correlation undefined
                }
            }
        }
        json jc;
        for (int d = 0; d < 4; ++d) {
            if (rs[d].empty()) {
                jc[demo_names[d]] = nullptr;
                continue;
            }
            const RunStats st = aggregate_runs(rs[d]);
            jc[demo_names[d]] = {{"mean", st.mean}, {"sd", st.sd}, {"runs", rs[d].size()}};
        }
        report["correlations"] = jc;
    }

    CsvWriter overall_csv(cfg.out_dir + "/eval/overall.csv",
                          {"method", "attribute", "mean_rel_error", "sd_rel_error",
                           "excluded_mean"});
    CsvWriter buckets_csv(cfg.out_dir + "/eval/buckets.csv",
                          {"method", "attribute", "bucket", "mean_rel_error", "sd_rel_error",
                           "runs_defined"});
    CsvWriter variance_csv(cfg.out_dir + "/eval/variance.csv",
                           {"attribute", "mean_normalized_variance", "cells_used"});
    CsvWriter correlations_csv(cfg.out_dir + "/eval/correlations.csv",
                               {"demographic", "pearson_mean", "pearson_sd", "runs_defined"});

    for (int a = 0; a < 3; ++a)
        variance_csv.row({attr_names[a], vt.value[a] ? fmt_double(*vt.value[a]) : "",
                          fmt_int(vt.cells_used[a])});
    {
        const char* demo_names[4] = {"age_child", "age_adult", "age_senior", "median_income"};
        for (int d = 0; d < 4; ++d) {
            const auto& jc = report["correlations"][demo_names[d]];
            if (jc.is_null())
                correlations_csv.row({demo_names[d], "", "", "0"});
            else
                correlations_csv.row({demo_names[d], fmt_double(jc["mean"].get<double>()),
                                      fmt_double(jc["sd"].get<double>()),
                                      fmt_int(jc["runs"].get<std::int64_t>())});
        }
    }

    json jmethods;
    for (const auto& method : methods) {
        json jm;
        for (const auto& attr_name : cfg.attributes) {
            const Attribute attr = attribute_from_name(attr_name);
            const auto truth_col = truth_values(tt, attr);
            std::vector<double> overall_runs;
            std::vector<double> excluded_runs;
            std::array<std::vector<double>, 5> bucket_runs;
            for (int i = 0; i < cfg.k_resamples; ++i) {
                const std::string path = estimates_path(cfg, method, attr_name, i);
                if (!fs::exists(path))
                    throw DataError("evaluate: missing estimate table " + path);
                const EstimateTable et = read_estimates_csv(path);
                if (et.cell_count() != tt.cell_count())
                    throw DataError("evaluate: cell sets misaligned in " + path);
                const RelativeErrorResult re = relative_error(truth_col, et.value);
                if (!std::isnan(re.overall)) overall_runs.push_back(re.overall);
                excluded_runs.push_back((double)re.excluded);
                const auto be = per_bucket_error(re.per_cell, buckets[i]);
                for (int b = 0; b < 5; ++b)
                    if (be[b]) bucket_runs[b].push_back(*be[b]);
            }
            json ja;
            if (!overall_runs.empty()) {
                const RunStats st = aggregate_runs(overall_runs);
                ja["overall"] = {{"mean", st.mean}, {"sd", st.sd}, {"per_run", overall_runs}};
            } else {
                ja["overall"] = nullptr;
            }
            ja["excluded_mean"] = aggregate_runs(excluded_runs).mean;
            json jb = json::array();
            for (int b = 0; b < 5; ++b) {
                if (bucket_runs[b].empty()) {
                    jb.push_back(nullptr);
                    continue;
                }
                const RunStats st = aggregate_runs(bucket_runs[b]);
                jb.push_back({{"mean", st.mean},
                              {"sd", st.sd},
                              {"runs_defined", bucket_runs[b].size()}});
            }
            ja["buckets"] = std::move(jb);
            jm[attr_name] = std::move(ja);

            // flat CSVs
            const auto& jo = jm[attr_name]["overall"];
            overall_csv.row({method, attr_name,
                             jo.is_null() ? "" : fmt_double(jo["mean"].get<double>()),
                             jo.is_null() ? "" : fmt_double(jo["sd"].get<double>()),
                             fmt_double(jm[attr_name]["excluded_mean"].get<double>())});
            for (int b = 0; b < 5; ++b) {
                const auto& jbb = jm[attr_name]["buckets"][b];
                buckets_csv.row({method, attr_name, fmt_int(b),
                                 jbb.is_null() ? "" : fmt_double(jbb["mean"].get<double>()),
                                 jbb.is_null() ? "" : fmt_double(jbb["sd"].get<double>()),
                                 jbb.is_null() ? "0" : fmt_int(jbb["runs_defined"].get<std::int64_t>())});
            }
        }
        jmethods[method] = std::move(jm);
    }
    report["methods"] = std::move(jmethods);

    overall_csv.close();
    buckets_csv.close();
    variance_csv.close();
    correlations_csv.close();

    const std::string report_path = cfg.out_dir + "/eval/report.json";
    {
        std::ofstream out(report_path);
        if (!out) throw DataError(report_path + ": cannot open for writing");
        out << report.dump(1) << '\n';
    }
    update_manifest(cfg, "evaluate",
                    {report_path, cfg.out_dir + "/eval/overall.csv",
                     cfg.out_dir + "/eval/buckets.csv", cfg.out_dir + "/eval/variance.csv",
                     cfg.out_dir + "/eval/correlations.csv"},
                    timer.ms());
    std::cout << "evaluate: report -> " << report_path << "\n";
}

} // namespace popstat
