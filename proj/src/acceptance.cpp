#include "popstat/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "popstat/csv.hpp"
#include "popstat/errors.hpp"
#include "popstat/estimators.hpp"
#include "popstat/eval.hpp"
#include "popstat/features.hpp"
#include "popstat/learner.hpp"
#include "popstat/mlp.hpp"
#include "popstat/pipeline.hpp"
#include "popstat/synth.hpp"

// The whole suite is pinned: one root seed, frozen generator configs, and the
// tolerances written into the criteria. Reruns are byte-for-byte repeatable.

#ifndef POPSTAT_GOLDEN_DIR_DEFAULT
#define POPSTAT_GOLDEN_DIR_DEFAULT ""
#endif

namespace popstat {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kSeed = 9131;

// pinned tolerances / budgets
constexpr int kResamples = 200;          // R for the Monte Carlo criteria
constexpr double kCoverage = 0.95;       // share of cells within 3 SE
constexpr double kObliviousBiasFloor = 0.10;
constexpr double kEq1Tol = 0.05;
constexpr double kGainFactor = 0.6;
constexpr int kGainSeeds = 5;
constexpr int kGainSeedsNeeded = 4;
// Early stop for the learner lab: long training memorizes the noisy per-cell
// labels (the overfitting-curve criterion shows exactly that), so the learned
// estimator is evaluated at the short-budget fit.
constexpr int kLearnEpochs = 10;
constexpr double kSpreadFactor = 0.5;
constexpr int kOverfitEpochs = 2500;
constexpr double kOverfitRise = 1.10;
constexpr double kGradTol = 1e-4;
constexpr std::int64_t kMcBudgetMs = 120000;
constexpr std::int64_t kSeedBudgetMs = 300000;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

class Timer {
  public:
    std::int64_t ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// The pipeline stages narrate to stdout; keep criterion output one line each.
class QuietCout {
  public:
    QuietCout() : old_(std::cout.rdbuf(sink_.rdbuf())) {}
    ~QuietCout() { std::cout.rdbuf(old_); }

  private:
    std::ostringstream sink_;
    std::streambuf* old_;
};

// ---------------------------------------------------------------- fixtures

// Heterogeneous income-driven sampling over the default 25-cell, ~5k-user lab.
GenConfig mc_config() {
    GenConfig g;
    g.seed = derive_seed(kSeed, "mc.city");
    g.base_ratio = 0.15;
    g.income_slope = 0.05;
    return g;
}

// Trade-off lab: income-biased sampling with a thin observed sample, high
// per-visit duration spread, and a low away-visit count spread. COUNT picks up
// a large home-regularity bias (worth debiasing) while both AVG statistics are
// noise-dominated, so inverse-probability weights only add variance there.
GenConfig pattern_config() {
    GenConfig g;
    g.seed = derive_seed(kSeed, "pattern.city");
    g.base_ratio = 0.10;
    g.income_slope = 0.05;
    g.home_regular_p = 0.50;
    for (auto& v : g.duration_spread_s) v *= 3.0;
    g.visits_spread = 0.5;
    return g;
}

// Learner lab: mean stay duration per cell is a near-linear function of the
// POI-category mix (the planted category->duration signal), while a very thin,
// age-skewed sample makes the per-cell labels noisy. Many cells make the
// smooth component cheap to fit and per-cell noise expensive to memorize, so
// an early-stopped fit beats the raw labels by a wide margin.
GenConfig learn_config(int i) {
    GenConfig g;
    g.seed = derive_seed(kSeed, "learn.city", (std::uint64_t)i);
    g.rows = 32;
    g.cols = 32;
    g.population_mean = 80.0;
    g.population_spread = 16.0;
    g.base_ratio = 0.045;
    g.age_slopes = {-0.03, 0.03, -0.03};
    return g;
}

// Few observed users per cell -> noisy labels for the overfitting curve.
GenConfig overfit_config() {
    GenConfig g;
    g.seed = derive_seed(kSeed, "overfit.city");
    g.base_ratio = 0.03;
    return g;
}

struct Lab {
    CityModel city;
    Dataset truth;
    TruthTable tt;
    std::vector<double> targets;
};

Lab make_lab(const GenConfig& g) {
    Lab lab;
    lab.city = generate_city(g);
    lab.truth = generate_population(lab.city, g);
    lab.tt = truth_stats(lab.truth, lab.city.grid);
    lab.targets = sampling_targets(lab.city, g);
    return lab;
}

struct McShared {
    Lab lab;
    std::vector<BiasVarianceReport> reports; // ObliviousCount, DebiasedCount, DebiasedAvgDuration
    std::int64_t elapsed_ms = 0;
    int top_cell = 0;
    int bottom_cell = 0;
};

struct LearnRun {
    double obl_err = 0.0;
    double ow_err = 0.0;
    std::array<std::optional<double>, 5> obl_bucket{};
    std::array<std::optional<double>, 5> ow_bucket{};
    std::int64_t elapsed_ms = 0;
};

struct Ctx {
    std::string work_dir;
    std::optional<McShared> mc;
    std::optional<Lab> pattern;
    std::optional<std::vector<LearnRun>> learn;

    McShared& get_mc() {
        if (!mc) {
            Timer t;
            McShared m;
            m.lab = make_lab(mc_config());
            std::vector<std::uint64_t> seeds(kResamples);
            for (int i = 0; i < kResamples; ++i)
                seeds[i] = derive_seed(kSeed, "mc.draw", (std::uint64_t)i);
            m.reports = monte_carlo_bias_variance(
                m.lab.truth, m.lab.city.grid, m.lab.targets,
                {EstimatorId::ObliviousCount, EstimatorId::DebiasedCount,
                 EstimatorId::DebiasedAvgDuration},
                seeds);
            m.top_cell = (int)(std::max_element(m.lab.targets.begin(), m.lab.targets.end()) -
                               m.lab.targets.begin());
            m.bottom_cell = (int)(std::min_element(m.lab.targets.begin(), m.lab.targets.end()) -
                                  m.lab.targets.begin());
            m.elapsed_ms = t.ms();
            mc = std::move(m);
        }
        return *mc;
    }

    Lab& get_pattern() {
        if (!pattern) pattern = make_lab(pattern_config());
        return *pattern;
    }

    std::vector<LearnRun>& get_learn() {
        if (!learn) {
            std::vector<LearnRun> runs;
            for (int i = 0; i < kGainSeeds; ++i) {
                Timer t;
                const GenConfig g = learn_config(i);
                const Lab lab = make_lab(g);
                const SampleDraw draw =
                    biased_sample(lab.truth, lab.city.grid.cell_count(), lab.targets,
                                  derive_seed(g.seed, "draw"));
                const EstimateTable obl =
                    oblivious_avg(draw.observed, lab.city.grid, Attribute::Duration);
                const Eigen::MatrixXd F = feature_matrix(lab.city, fit_scaler(lab.city));
                TrainConfig tc;
                tc.weighted = true;
                tc.epochs = kLearnEpochs;
                tc.seed = derive_seed(g.seed, "train");
                const LearnedModel model = train_model(F, obl, tc);
                const EstimateTable ow = predict_all(model, F, obl.support, "learned-OW");

                const auto truth_col = truth_values(lab.tt, Attribute::Duration);
                const RelativeErrorResult re_obl = relative_error(truth_col, obl.value);
                const RelativeErrorResult re_ow = relative_error(truth_col, ow.value);
                const QuantileBuckets qb =
                    quantile_buckets(lab.truth, draw.observed, lab.city.grid);

                LearnRun run;
                run.obl_err = re_obl.overall;
                run.ow_err = re_ow.overall;
                run.obl_bucket = per_bucket_error(re_obl.per_cell, qb);
                run.ow_bucket = per_bucket_error(re_ow.per_cell, qb);
                run.elapsed_ms = t.ms();
                runs.push_back(run);
            }
            learn = std::move(runs);
        }
        return *learn;
    }
};

// ---------------------------------------------------------------- criteria

CriterionResult ac1(Ctx& ctx) {
    const McShared& mc = ctx.get_mc();
    const BiasVarianceReport& deb = mc.reports[1];
    int defined = 0, within = 0;
    for (std::size_t c = 0; c < deb.bias.size(); ++c) {
        if (std::isnan(deb.bias[c])) continue;
        ++defined;
        const double se = std::sqrt(std::max(deb.variance[c], 0.0) / kResamples);
        if (std::abs(deb.bias[c]) <= 3.0 * se) ++within;
    }
    const double frac = defined > 0 ? (double)within / defined : 0.0;

    const BiasVarianceReport& obl = mc.reports[0];
    auto rel_bias = [&](int cell) {
        const double c = (double)mc.lab.tt.c[cell];
        return c > 0.0 ? std::abs(obl.bias[cell]) / c : 0.0;
    };
    const double top = rel_bias(mc.top_cell), bottom = rel_bias(mc.bottom_cell);

    CriterionResult r{1, "lemma1-count-unbiasedness", false, ""};
    r.pass = frac >= kCoverage && top > kObliviousBiasFloor && bottom > kObliviousBiasFloor &&
             mc.elapsed_ms < kMcBudgetMs;
    r.detail = "debiased within 3SE " + fmt_int(within) + "/" + fmt_int(defined) +
               "; oblivious |bias|/c top=" + num(top) + " bottom=" + num(bottom) + "; " +
               fmt_int(mc.elapsed_ms) + " ms";
    return r;
}

CriterionResult ac2(Ctx& ctx) {
    const McShared& mc = ctx.get_mc();
    const BiasVarianceReport& rep = mc.reports[2]; // debiased AVG duration, known c
    int defined = 0, within = 0;
    for (std::size_t c = 0; c < rep.bias.size(); ++c) {
        if (std::isnan(rep.bias[c])) continue;
        ++defined;
        const double se = std::sqrt(std::max(rep.variance[c], 0.0) / kResamples);
        if (std::abs(rep.bias[c]) <= 3.0 * se) ++within;
    }
    const double frac = defined > 0 ? (double)within / defined : 0.0;
    CriterionResult r{2, "lemma2-avg-unbiasedness", false, ""};
    r.pass = frac >= kCoverage && mc.elapsed_ms < kMcBudgetMs;
    r.detail = "within 3SE " + fmt_int(within) + "/" + fmt_int(defined) + "; " +
               fmt_int(mc.elapsed_ms) + " ms";
    return r;
}

CriterionResult ac3(Ctx& ctx) {
    const McShared& mc = ctx.get_mc();
    double worst = 0.0;
    int cells = 0;
    bool ok = true;
    for (const auto& rep : mc.reports) {
        for (std::size_t c = 0; c < rep.mse.size(); ++c) {
            if (std::isnan(rep.mse[c])) continue;
            ++cells;
            const double d = std::abs(rep.mse[c] - (rep.bias[c] * rep.bias[c] + rep.variance[c]));
            if (rep.mse[c] == 0.0) {
                if (d != 0.0) ok = false;
                continue;
            }
            const double ratio = d / rep.mse[c];
            worst = std::max(worst, ratio);
            if (ratio > kEq1Tol) ok = false;
        }
    }
    CriterionResult r{3, "mse-decomposition", ok, ""};
    r.detail = "worst |mse-(bias^2+var)|/mse = " + num(worst) + " over " + fmt_int(cells) +
               " cells x " + fmt_int((std::int64_t)mc.reports.size()) + " estimators";
    return r;
}

CriterionResult ac4(Ctx&) {
    GenConfig g;
    g.seed = derive_seed(kSeed, "collapse.city");
    CityModel city = generate_city(g);
    for (auto& cell : city.cells)
        if (cell.population % 2 != 0) ++cell.population; // even N at s=1/2 -> n = N/2 exactly
    const Dataset truth = generate_population(city, g);
    const std::vector<double> targets(city.grid.cell_count(), 0.5);
    const SampleDraw draw =
        biased_sample(truth, city.grid.cell_count(), targets, derive_seed(kSeed, "collapse.draw"));

    for (int mu = 0; mu < draw.profile.cell_count(); ++mu)
        if (draw.profile.observed_users[mu] * 2 != draw.profile.true_users[mu])
            return {4, "uniform-ratio-collapse", false,
                    "cell " + fmt_int(mu) + ": n != N/2 (fixture broken)"};

    const EstimateTable deb = debiased_count(draw.observed, draw.profile, city.grid);
    const EstimateTable obl = oblivious_count(draw.observed, draw.profile.total_true(),
                                              draw.profile.total_observed(), city.grid);
    int mismatches = 0;
    for (int mu = 0; mu < deb.cell_count(); ++mu) {
        const bool same = deb.value[mu].has_value() == obl.value[mu].has_value() &&
                          (!deb.value[mu] || *deb.value[mu] == *obl.value[mu]);
        if (!same) ++mismatches;
    }
    CriterionResult r{4, "uniform-ratio-collapse", mismatches == 0, ""};
    r.detail = mismatches == 0
                   ? "bitwise equal on " + fmt_int(deb.cell_count()) + " cells"
                   : fmt_int(mismatches) + " cells differ";
    return r;
}

CriterionResult ac5(Ctx& ctx) {
    const Lab& lab = ctx.get_pattern();
    const int cells = lab.city.grid.cell_count();
    const auto draws = resample_k(lab.truth, cells, lab.targets, 5, derive_seed(kSeed, "ac5.draws"));

    const std::array<Attribute, 3> attrs{Attribute::Visits, Attribute::Duration,
                                         Attribute::Distance};
    double err[2][3] = {};
    for (const auto& draw : draws) {
        for (int a = 0; a < 3; ++a) {
            const auto truth_col = truth_values(lab.tt, attrs[a]);
            const EstimateTable obl =
                attrs[a] == Attribute::Visits
                    ? oblivious_count(draw.observed, draw.profile.total_true(),
                                      draw.profile.total_observed(), lab.city.grid)
                    : oblivious_avg(draw.observed, lab.city.grid, attrs[a]);
            const EstimateTable deb =
                attrs[a] == Attribute::Visits
                    ? debiased_count(draw.observed, draw.profile, lab.city.grid)
                    : debiased_avg(draw.observed, draw.profile, lab.city.grid, attrs[a], lab.tt);
            err[0][a] += relative_error(truth_col, obl.value).overall / (double)draws.size();
            err[1][a] += relative_error(truth_col, deb.value).overall / (double)draws.size();
        }
    }
    const bool pass = err[1][1] >= err[0][1] && err[1][2] >= err[0][2] && err[1][0] < err[0][0];
    CriterionResult r{5, "bias-variance-tradeoff", pass, ""};
    r.detail = "count obl=" + num(err[0][0]) + " deb=" + num(err[1][0]) +
               "; dur obl=" + num(err[0][1]) + " deb=" + num(err[1][1]) +
               "; dist obl=" + num(err[0][2]) + " deb=" + num(err[1][2]);
    return r;
}

CriterionResult ac6(Ctx& ctx) {
    const auto& runs = ctx.get_learn();
    int hits = 0;
    bool on_budget = true;
    std::string ratios;
    for (const auto& run : runs) {
        const double ratio = run.obl_err > 0.0 ? run.ow_err / run.obl_err : 1.0;
        if (ratio <= kGainFactor) ++hits;
        if (run.elapsed_ms >= kSeedBudgetMs) on_budget = false;
        if (!ratios.empty()) ratios += " ";
        ratios += num(ratio);
    }
    CriterionResult r{6, "learned-estimator-gain", hits >= kGainSeedsNeeded && on_budget, ""};
    r.detail = "ow/oblivious error ratios [" + ratios + "], " + fmt_int(hits) + "/" +
               fmt_int((std::int64_t)runs.size()) + " <= " + num(kGainFactor) +
               (on_budget ? "" : "; seed budget exceeded");
    return r;
}

CriterionResult ac7(Ctx& ctx) {
    const auto& runs = ctx.get_learn();
    auto spread = [&](bool learned) -> std::optional<double> {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        int defined = 0;
        for (int b = 0; b < 5; ++b) {
            double sum = 0.0;
            int n = 0;
            for (const auto& run : runs) {
                const auto& v = learned ? run.ow_bucket[b] : run.obl_bucket[b];
                if (v) {
                    sum += *v;
                    ++n;
                }
            }
            if (n == 0) continue;
            const double mean = sum / n;
            lo = std::min(lo, mean);
            hi = std::max(hi, mean);
            ++defined;
        }
        if (defined < 2) return std::nullopt;
        return hi - lo;
    };
    const auto obl = spread(false), ow = spread(true);
    CriterionResult r{7, "flat-error-profile", false, ""};
    if (!obl || !ow) {
        r.detail = "fewer than 2 defined buckets";
        return r;
    }
    r.pass = *ow <= kSpreadFactor * *obl;
    r.detail = "bucket spread ow=" + num(*ow) + " vs oblivious=" + num(*obl) + " (factor " +
               num(*obl > 0.0 ? *ow / *obl : 0.0) + ")";
    return r;
}

CriterionResult ac8(Ctx& ctx) {
    const Lab& lab = ctx.get_pattern();
    const VarianceTable vt = variance_analysis(lab.truth, lab.city.grid);
    CriterionResult r{8, "variance-ordering", false, ""};
    if (!vt.value[0] || !vt.value[1] || !vt.value[2]) {
        r.detail = "undefined variance entry";
        return r;
    }
    r.pass = *vt.value[0] < *vt.value[1] && *vt.value[0] < *vt.value[2];
    r.detail = "visits=" + num(*vt.value[0]) + " duration=" + num(*vt.value[1]) +
               " distance=" + num(*vt.value[2]);
    return r;
}

CriterionResult ac9(Ctx&) {
    const Lab lab = make_lab(overfit_config());
    const SampleDraw draw = biased_sample(lab.truth, lab.city.grid.cell_count(), lab.targets,
                                          derive_seed(kSeed, "overfit.draw"));
    const EstimateTable labels = oblivious_avg(draw.observed, lab.city.grid, Attribute::Duration);
    const Eigen::MatrixXd F = feature_matrix(lab.city, fit_scaler(lab.city));
    const TrainingSet ts = make_training_set(F, labels);

    TrainData ev;
    const auto truth_col = truth_values(lab.tt, Attribute::Duration);
    std::vector<int> ev_cells;
    for (int mu = 0; mu < (int)truth_col.size(); ++mu)
        if (truth_col[mu]) ev_cells.push_back(mu);
    ev.X.resize((std::int64_t)ev_cells.size(), F.cols());
    ev.y.resize((std::int64_t)ev_cells.size());
    for (std::size_t i = 0; i < ev_cells.size(); ++i) {
        ev.X.row((std::int64_t)i) = F.row(ev_cells[i]);
        ev.y((std::int64_t)i) = *truth_col[ev_cells[i]];
    }

    TrainConfig tc;
    tc.epochs = kOverfitEpochs;
    tc.seed = derive_seed(kSeed, "overfit.train");
    const Mlp net = mlp_init(derive_seed(kSeed, "overfit.init"), (int)F.cols());
    const TrainResult res = train(net, TrainData{ts.X, ts.y, ts.w}, tc, &ev);

    const auto it = std::min_element(res.eval_metric.begin(), res.eval_metric.end());
    const std::size_t imin = (std::size_t)(it - res.eval_metric.begin());
    const double minv = *it, last = res.eval_metric.back();
    CriterionResult r{9, "overfitting-curve", false, ""};
    r.pass = imin + 1 < res.eval_metric.size() && last >= kOverfitRise * minv;
    r.detail = "test-MSE min " + num(minv) + " at epoch " + fmt_int((std::int64_t)imin + 1) +
               ", final " + num(last) + " (x" + num(minv > 0.0 ? last / minv : 0.0) + ")";
    return r;
}

CriterionResult ac10(Ctx&) {
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        Rng rng(derive_seed(kSeed, "grad.data", (std::uint64_t)i));
        Eigen::MatrixXd X(8, 7);
        Eigen::VectorXd y(8), w(8);
        for (int r0 = 0; r0 < 8; ++r0) {
            for (int c = 0; c < 7; ++c) X(r0, c) = rng.normal();
            y(r0) = rng.normal();
            w(r0) = rng.uniform();
        }
        const Mlp m = mlp_init(derive_seed(kSeed, "grad.init", (std::uint64_t)i), 7);
        const LossMode mode = i % 2 == 0 ? LossMode::Weighted : LossMode::Unweighted;
        worst = std::max(worst, mlp_gradient_check(m, X, y, w, mode, 1500));
    }
    CriterionResult r{10, "gradient-oracle", worst < kGradTol, ""};
    r.detail = "max relative deviation " + num(worst) + " over 10 instances";
    return r;
}

PipelineConfig mini_pipeline_config(const std::string& out_dir) {
    PipelineConfig cfg;
    cfg.seed = derive_seed(kSeed, "repro");
    cfg.out_dir = out_dir;
    cfg.k_resamples = 2;
    cfg.synth.rows = 5;
    cfg.synth.cols = 5;
    cfg.synth.population_mean = 40.0;
    cfg.synth.population_spread = 8.0;
    cfg.synth.base_ratio = 0.25;
    cfg.synth.income_slope = 0.04;
    cfg.train.epochs = 40;
    return cfg;
}

void run_mini_pipeline(const PipelineConfig& cfg) {
    QuietCout quiet;
    fs::remove_all(cfg.out_dir);
    cmd_synth(cfg);
    cmd_estimate(cfg, "");
    cmd_train(cfg, "", "");
    cmd_evaluate(cfg);
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CriterionResult ac11(Ctx& ctx) {
    const std::string a = ctx.work_dir + "/ac11_a", b = ctx.work_dir + "/ac11_b";
    run_mini_pipeline(mini_pipeline_config(a));
    run_mini_pipeline(mini_pipeline_config(b));
    const std::string ra = read_bytes(a + "/eval/report.json");
    const std::string rb = read_bytes(b + "/eval/report.json");
    CriterionResult r{11, "deterministic-report", ra == rb, ""};
    r.detail = r.pass ? "two runs byte-identical (" + fmt_int((std::int64_t)ra.size()) + " bytes)"
                      : "reports differ";
    return r;
}

// ------------------------------------------------------------- AC12 oracles

struct Oracle {
    std::string name;
    std::function<bool(Ctx&, std::string&)> run;
};

constexpr GeoPoint kO{40.0, -100.0};

StayPoint mk_sp(std::optional<int> cell, double dur, std::optional<double> dist = std::nullopt) {
    StayPoint sp;
    sp.centroid = kO;
    sp.arrive_t = 0;
    sp.leave_t = (std::int64_t)dur;
    sp.duration_s = dur;
    sp.dist_from_prev_m = dist;
    sp.cell = cell;
    return sp;
}

UserSequence mk_user(std::string id, int home, std::vector<StayPoint> sps) {
    UserSequence u;
    u.user_id = std::move(id);
    u.home = home;
    u.staypoints = std::move(sps);
    return u;
}

Mlp toy_chain_mlp() {
    Mlp m;
    for (int l = 0; l < 4; ++l) {
        m.w.push_back(Mlp::Mat::Constant(1, 1, 2.0));
        m.b.push_back(Mlp::Vec::Constant(1, 0.5));
    }
    return m;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::vector<Oracle> derived_oracles() {
    std::vector<Oracle> v;
    auto add = [&](std::string name, std::function<bool(Ctx&, std::string&)> f) {
        v.push_back({std::move(name), std::move(f)});
    };

    add("project-lat-step", [](Ctx&, std::string& why) {
        const LocalPoint p = project({40.01, -100.0}, kO);
        if (p.x != 0.0 || !close(p.y, 1111.949266445587, 1e-6)) {
            why = "got (" + num(p.x) + ", " + num(p.y) + ")";
            return false;
        }
        return true;
    });
    add("project-lon-step-lat60", [](Ctx&, std::string& why) {
        const LocalPoint p = project({60.0, -99.99}, {60.0, -100.0});
        if (!close(p.x, 555.9746332227935, 1e-6) || p.y != 0.0) {
            why = "got (" + num(p.x) + ", " + num(p.y) + ")";
            return false;
        }
        return true;
    });
    add("euclid-3-4-5", [](Ctx&, std::string& why) {
        const double d = euclid({1.0, 1.0}, {4.0, 5.0});
        if (!close(d, 5.0, 1e-12)) {
            why = "got " + num(d);
            return false;
        }
        return true;
    });
    add("locate-interior", [](Ctx&, std::string& why) {
        const CityGrid grid{kO, 100.0, 2, 2};
        const int c = locate({150.0, 50.0}, grid);
        if (c != 1) {
            why = "got " + fmt_int(c);
            return false;
        }
        return true;
    });
    add("locate-maximal-edge", [](Ctx&, std::string& why) {
        const CityGrid grid{kO, 100.0, 2, 2};
        const int c = locate({100.0, 100.0}, grid);
        if (c != 3) {
            why = "got " + fmt_int(c);
            return false;
        }
        return true;
    });
    add("parse-pings-sorted", [](Ctx& ctx, std::string& why) {
        const std::string path = ctx.work_dir + "/ac12_pings.csv";
        {
            std::ofstream f(path);
            f << "user_id,lat,lon,timestamp\n";
            f << "u1,40.0,-100.0,300\nu1,40.0,-100.0,100\nu1,40.0,-100.0,200\n";
        }
        const auto groups = parse_pings(path);
        if (groups.size() != 1) {
            why = fmt_int((std::int64_t)groups.size()) + " groups";
            return false;
        }
        const auto& ps = groups.begin()->second;
        if (ps.size() != 3 || ps[0].timestamp != 100 || ps[1].timestamp != 200 ||
            ps[2].timestamp != 300) {
            why = "not sorted ascending";
            return false;
        }
        return true;
    });
    add("spd-two-ping-stay", [](Ctx&, std::string& why) {
        std::vector<RawPing> pings{{"u", {40.0, -100.0}, 0}, {"u", {40.00009, -100.0}, 2000}};
        const auto sps = detect_staypoints(pings, 200.0, 1800.0);
        if (sps.size() != 1 || sps[0].duration_s != 2000.0) {
            why = fmt_int((std::int64_t)sps.size()) + " stay-points";
            return false;
        }
        return true;
    });
    add("home-argmax-duration", [](Ctx&, std::string& why) {
        const CityGrid grid{kO, 100.0, 2, 5};
        const UserSequence u = mk_user("u", 0, {mk_sp(2, 5000.0), mk_sp(9, 4000.0)});
        const int h = assign_home(u, grid);
        if (h != 2) {
            why = "got " + fmt_int(h);
            return false;
        }
        return true;
    });
    add("truth-mean-duration", [](Ctx&, std::string& why) {
        const CityGrid grid{kO, 100.0, 1, 1};
        Dataset d{mk_user("u", 0, {mk_sp(0, 100.0), mk_sp(0, 300.0)})};
        const TruthTable tt = truth_stats(d, grid);
        const auto y = tt.value(Attribute::Duration, 0);
        if (tt.c[0] != 2 || !y || *y != 200.0) {
            why = "c=" + fmt_int(tt.c[0]) + " y=" + (y ? num(*y) : "absent");
            return false;
        }
        return true;
    });
    add("oblivious-avg-mean", [](Ctx&, std::string& why) {
        const CityGrid grid{kO, 100.0, 1, 1};
        Dataset obs{mk_user("u", 0, {mk_sp(0, 100.0), mk_sp(0, 200.0), mk_sp(0, 600.0)})};
        const auto t = oblivious_avg(obs, grid, Attribute::Duration);
        if (!t.value[0] || *t.value[0] != 300.0) {
            why = t.value[0] ? num(*t.value[0]) : "absent";
            return false;
        }
        return true;
    });
    add("oblivious-count-scale", [](Ctx&, std::string& why) {
        const CityGrid grid{kO, 100.0, 1, 1};
        std::vector<StayPoint> sps(7, mk_sp(0, 10.0));
        Dataset obs{mk_user("u", 0, std::move(sps))};
        const auto t = oblivious_count(obs, 100, 10, grid);
        if (!t.value[0] || *t.value[0] != 70.0) {
            why = t.value[0] ? num(*t.value[0]) : "absent";
            return false;
        }
        return true;
    });
    add("debiased-count-weights", [](Ctx&, std::string& why) {
        const CityGrid grid{kO, 100.0, 1, 2};
        Dataset obs{
            mk_user("a", 0, {mk_sp(0, 10.0), mk_sp(0, 10.0), mk_sp(0, 10.0)}),
            mk_user("b", 1, {mk_sp(0, 10.0), mk_sp(0, 10.0), mk_sp(0, 10.0), mk_sp(0, 10.0)})};
        SamplingProfile p;
        p.true_users = {100, 50};
        p.observed_users = {10, 25};
        const auto t = debiased_count(obs, p, grid);
        if (!t.value[0] || *t.value[0] != 38.0) {
            why = t.value[0] ? num(*t.value[0]) : "absent";
            return false;
        }
        return true;
    });
    add("debiased-avg-known-c", [](Ctx&, std::string& why) {
        const CityGrid grid{kO, 100.0, 1, 1};
        Dataset obs{mk_user("a", 0, {mk_sp(0, 100.0), mk_sp(0, 200.0)})};
        SamplingProfile p;
        p.true_users = {10};
        p.observed_users = {2};
        TruthTable tt;
        tt.c = {15};
        tt.t_dur = {0.0};
        tt.t_dist = {0.0};
        const auto t = debiased_avg(obs, p, grid, Attribute::Duration, tt);
        if (!t.value[0] || *t.value[0] != 100.0) {
            why = t.value[0] ? num(*t.value[0]) : "absent";
            return false;
        }
        return true;
    });
    add("mc-lemma1-20-cells", [](Ctx&, std::string& why) {
        GenConfig g;
        g.seed = derive_seed(kSeed, "ac12.mc.city");
        g.rows = 4;
        g.cols = 5;
        g.population_mean = 100.0;
        g.population_spread = 20.0;
        g.base_ratio = 0.2;
        g.income_slope = 0.06;
        const Lab lab = make_lab(g);
        std::vector<std::uint64_t> seeds(kResamples);
        for (int i = 0; i < kResamples; ++i)
            seeds[i] = derive_seed(kSeed, "ac12.mc.draw", (std::uint64_t)i);
        const auto reports = monte_carlo_bias_variance(lab.truth, lab.city.grid, lab.targets,
                                                       {EstimatorId::DebiasedCount}, seeds);
        for (std::size_t c = 0; c < reports[0].bias.size(); ++c) {
            if (std::isnan(reports[0].bias[c])) continue;
            const double se = std::sqrt(std::max(reports[0].variance[c], 0.0) / kResamples);
            if (std::abs(reports[0].bias[c]) > 3.0 * se) {
                why = "cell " + fmt_int((std::int64_t)c) + " outside 3 SE";
                return false;
            }
        }
        return true;
    });
    add("poi-histogram", [](Ctx&, std::string& why) {
        std::vector<Poi> pois{{{0, 0}, 0}, {{0, 0}, 0}, {{0, 0}, 1}, {{0, 0}, 2}};
        const Eigen::VectorXd h = poi_distribution(pois, 3);
        if (h.size() != 3 || h(0) != 0.5 || h(1) != 0.25 || h(2) != 0.25) {
            why = "got [" + num(h(0)) + " " + num(h(1)) + " " + num(h(2)) + "]";
            return false;
        }
        return true;
    });
    add("income-z-score", [](Ctx&, std::string& why) {
        CityModel city;
        city.grid = CityGrid{kO, 100.0, 1, 2};
        city.k_categories = 1;
        city.cells.resize(2);
        city.cells[0].population = 10;
        city.cells[1].population = 10;
        city.cells[0].median_income = 10.0;
        city.cells[1].median_income = 30.0;
        const FeatureScaler s = fit_scaler(city);
        const Eigen::VectorXd f0 = cell_features(city.cells[0], 1, s);
        const Eigen::VectorXd f1 = cell_features(city.cells[1], 1, s);
        const double z0 = f0(f0.size() - 1), z1 = f1(f1.size() - 1);
        if (z0 != -1.0 || z1 != 1.0) {
            why = "z = (" + num(z0) + ", " + num(z1) + ")";
            return false;
        }
        return true;
    });
    add("mlp-forward-chain", [](Ctx&, std::string& why) {
        const Mlp m = toy_chain_mlp();
        Eigen::VectorXd x(1);
        x << 1.0;
        const double out = mlp_forward(m, x);
        if (out != 23.5) {
            why = "got " + num(out);
            return false;
        }
        return true;
    });
    add("mlp-forward-continuity", [](Ctx&, std::string& why) {
        const Mlp m = mlp_init(derive_seed(kSeed, "ac12.cont"), 7);
        Rng rng(derive_seed(kSeed, "ac12.cont.x"));
        Eigen::VectorXd x(7);
        for (int i = 0; i < 7; ++i) x(i) = rng.normal();
        Eigen::VectorXd x2 = x;
        x2(0) += 1e-9;
        const double d = std::abs(mlp_forward(m, x2) - mlp_forward(m, x));
        if (d > 1e-6) {
            why = "moved " + num(d);
            return false;
        }
        return true;
    });
    add("weighted-loss-mask", [](Ctx&, std::string& why) {
        const Mlp m = toy_chain_mlp();
        Eigen::MatrixXd X(2, 1);
        X << 1.0, 0.0; // forward values 23.5 and 7.5
        Eigen::VectorXd y(2), w(2);
        y << 22.5, 4.5; // residuals 1 and 3
        w << 1.0, 0.0;
        const double loss = mlp_loss(m, X, y, w, LossMode::Weighted);
        if (loss != 0.5) {
            why = "got " + num(loss);
            return false;
        }
        return true;
    });
    add("single-row-memorization", [](Ctx&, std::string& why) {
        Rng rng(derive_seed(kSeed, "ac12.mem.x"));
        TrainData d;
        d.X.resize(1, 7);
        for (int i = 0; i < 7; ++i) d.X(0, i) = rng.normal();
        d.y.resize(1);
        d.y << 3.7;
        d.w = Eigen::VectorXd::Ones(1);
        TrainConfig tc;
        tc.epochs = 2000;
        tc.seed = derive_seed(kSeed, "ac12.mem.train");
        const TrainResult r =
            train(mlp_init(derive_seed(kSeed, "ac12.mem.init"), 7), d, tc, nullptr);
        if (r.train_loss.back() >= 1e-6) {
            why = "final loss " + num(r.train_loss.back());
            return false;
        }
        return true;
    });
    add("gradient-reference-model", [](Ctx&, std::string& why) {
        Rng rng(derive_seed(kSeed, "ac12.grad.x"));
        Eigen::MatrixXd X(8, 7);
        Eigen::VectorXd y(8), w(8);
        for (int r0 = 0; r0 < 8; ++r0) {
            for (int c = 0; c < 7; ++c) X(r0, c) = rng.normal();
            y(r0) = rng.normal();
            w(r0) = rng.uniform();
        }
        const Mlp m = mlp_init(derive_seed(kSeed, "ac12.grad.init"), 7);
        const double dev = mlp_gradient_check(m, X, y, w, LossMode::Weighted, 1500);
        if (dev >= 1e-4) {
            why = "deviation " + num(dev);
            return false;
        }
        return true;
    });
    add("relative-error-mean", [](Ctx&, std::string& why) {
        std::vector<std::optional<double>> truth{2.0, 4.0}, est{3.0, 2.0};
        const auto r = relative_error(truth, est);
        if (r.overall != 0.5 || r.excluded != 0) {
            why = "overall " + num(r.overall);
            return false;
        }
        return true;
    });
    add("quantile-buckets-sort-oracle", [](Ctx&, std::string& why) {
        const CityGrid grid{kO, 100.0, 2, 5};
        Dataset truth, obs;
        for (int mu = 0; mu < 10; ++mu) {
            std::vector<StayPoint> all(10, mk_sp(mu, 10.0));
            std::vector<StayPoint> kept(all.begin(), all.begin() + (mu + 1)); // ratio (mu+1)/10
            truth.push_back(mk_user("u" + fmt_int(mu), mu, std::move(all)));
            obs.push_back(mk_user("u" + fmt_int(mu), mu, std::move(kept)));
        }
        const QuantileBuckets qb = quantile_buckets(truth, obs, grid);
        for (int b = 0; b < 5; ++b)
            if (qb.sizes[b] != 2) {
                why = "sizes not {2,2,2,2,2}";
                return false;
            }
        for (int mu = 0; mu < 10; ++mu)
            if (qb.bucket[mu] != mu / 2) { // distinct sorted ratios land pairwise
                why = "cell " + fmt_int(mu) + " in bucket " + fmt_int(qb.bucket[mu]);
                return false;
            }
        return true;
    });
    add("bucket-error-monotone", [](Ctx&, std::string& why) {
        QuantileBuckets qb;
        qb.bucket = {0, 0, 1, 1, 2, 2, 3, 3, 4, 4};
        qb.ratio.assign(10, 0.5);
        qb.sizes = {2, 2, 2, 2, 2};
        std::vector<std::optional<double>> errs;
        for (int i = 0; i < 10; ++i) errs.push_back(0.1 * (1 + i / 2));
        const auto means = per_bucket_error(errs, qb);
        for (int b = 0; b < 5; ++b) {
            if (!means[b] || !close(*means[b], 0.1 * (b + 1), 1e-12)) {
                why = "bucket " + fmt_int(b);
                return false;
            }
            if (b > 0 && !(*means[b] > *means[b - 1])) {
                why = "not monotone";
                return false;
            }
        }
        return true;
    });
    add("minmax-variance", [](Ctx&, std::string& why) {
        const CityGrid grid{kO, 100.0, 1, 1};
        Dataset d{mk_user("a", 0, {mk_sp(0, 0.0)}), mk_user("b", 0, {mk_sp(0, 10.0)})};
        const VarianceTable vt = variance_analysis(d, grid);
        if (!vt.value[1] || *vt.value[1] != 0.25) {
            why = vt.value[1] ? num(*vt.value[1]) : "absent";
            return false;
        }
        return true;
    });
    add("pearson-closed-form", [](Ctx&, std::string& why) {
        const double r = pearson({1.0, 2.0, 3.0}, {1.0, 2.0, 4.0});
        if (!close(r, 0.9819805060619657, 1e-9)) {
            why = "got " + num(r);
            return false;
        }
        return true;
    });
    add("aggregate-runs", [](Ctx&, std::string& why) {
        const RunStats st = aggregate_runs({0.2, 0.4});
        if (!close(st.mean, 0.3, 1e-12) || !close(st.sd, 0.1414213562373095, 1e-9)) {
            why = "mean " + num(st.mean) + " sd " + num(st.sd);
            return false;
        }
        return true;
    });
    add("ingest-stationary-cluster", [](Ctx& ctx, std::string& why) {
        QuietCout quiet;
        PipelineConfig cfg;
        cfg.out_dir = ctx.work_dir + "/ac12_ingest";
        fs::remove_all(cfg.out_dir);
        fs::create_directories(cfg.out_dir);
        GenConfig g;
        g.seed = derive_seed(kSeed, "ac12.ingest.city");
        g.rows = 2;
        g.cols = 2;
        g.cell_size_m = 1000.0;
        g.population_mean = 5.0;
        g.population_spread = 0.0;
        write_city_json(cfg.resolved_city_file(), generate_city(g));
        const std::string pings = cfg.out_dir + "/pings.csv";
        {
            std::ofstream f(pings);
            f << "user_id,lat,lon,timestamp\n";
            f << "u1,40.001,-99.999,1000\n";
            f << "u1,40.00101,-99.999,2000\n";
            f << "u1,40.001,-99.99901,3000\n";
        }
        cfg.ping_files = {pings};
        cmd_ingest(cfg);
        const Dataset d = read_dataset_csv(cfg.out_dir + "/ingested.csv");
        if (d.size() != 1 || d[0].staypoints.size() != 1) {
            why = fmt_int((std::int64_t)d.size()) + " users";
            return false;
        }
        return true;
    });
    add("evaluate-golden-layout", [](Ctx& ctx, std::string& why) {
        std::string golden = POPSTAT_GOLDEN_DIR_DEFAULT;
        if (const char* env = std::getenv("POPSTAT_GOLDEN_DIR")) golden = env;
        if (golden.empty()) {
            why = "no golden directory configured";
            return false;
        }
        PipelineConfig cfg;
        cfg.seed = derive_seed(kSeed, "golden");
        cfg.out_dir = ctx.work_dir + "/ac12_golden";
        cfg.k_resamples = 2;
        cfg.synth.rows = 3;
        cfg.synth.cols = 3;
        cfg.synth.population_mean = 25.0;
        cfg.synth.population_spread = 5.0;
        cfg.synth.base_ratio = 0.3;
        cfg.synth.income_slope = 0.05;
        cfg.train.epochs = 25;
        run_mini_pipeline(cfg);
        const std::array<const char*, 5> files{"report.json", "overall.csv", "buckets.csv",
                                               "variance.csv", "correlations.csv"};
        if (std::getenv("POPSTAT_UPDATE_GOLDEN") != nullptr) {
            fs::create_directories(golden);
            for (const char* f : files)
                fs::copy_file(cfg.out_dir + "/eval/" + f, golden + "/" + f,
                              fs::copy_options::overwrite_existing);
            return true;
        }
        for (const char* f : files) {
            const std::string want = golden + "/" + f;
            if (!fs::exists(want)) {
                why = std::string(f) + " golden missing";
                return false;
            }
            if (read_bytes(want) != read_bytes(cfg.out_dir + "/eval/" + f)) {
                why = std::string(f) + " differs from golden";
                return false;
            }
        }
        return true;
    });
    return v;
}

CriterionResult ac12(Ctx& ctx) {
    const auto oracles = derived_oracles();
    int passed = 0;
    std::string first_fail;
    for (const auto& o : oracles) {
        std::string why;
        bool ok = false;
        try {
            ok = o.run(ctx, why);
        } catch (const std::exception& e) {
            why = e.what();
        }
        if (ok) {
            ++passed;
        } else if (first_fail.empty()) {
            first_fail = o.name + (why.empty() ? "" : " (" + why + ")");
        }
    }
    CriterionResult r{12, "derived-example-oracles", passed == (int)oracles.size(), ""};
    r.detail = fmt_int(passed) + "/" + fmt_int((std::int64_t)oracles.size()) + " oracles";
    if (!first_fail.empty()) r.detail += "; first failure: " + first_fail;
    return r;
}

} // namespace

std::vector<CriterionResult> run_acceptance(const std::string& criterion_filter,
                                            const std::string& work_dir) {
    fs::create_directories(work_dir);
    Ctx ctx;
    ctx.work_dir = work_dir;

    using Fn = CriterionResult (*)(Ctx&);
    const std::array<Fn, 12> fns{ac1, ac2, ac3, ac4, ac5, ac6,
                                 ac7, ac8, ac9, ac10, ac11, ac12};
    std::vector<CriterionResult> out;
    for (int i = 0; i < 12; ++i) {
        if (!criterion_filter.empty() && criterion_filter != fmt_int(i + 1)) continue;
        CriterionResult r;
        try {
            r = fns[(std::size_t)i](ctx);
        } catch (const std::exception& e) {
            r = {i + 1, "criterion-" + fmt_int(i + 1), false, std::string("error: ") + e.what()};
        }
        out.push_back(std::move(r));
    }
    if (out.empty())
        throw ConfigError("unknown acceptance criterion '" + criterion_filter +
                          "' (expected 1..12)");
    return out;
}

} // namespace popstat
