#include "popstat/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "popstat/csv.hpp"
#include "popstat/errors.hpp"
#include "popstat/synth.hpp"

namespace popstat {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

/// Attribute of one stay-point; distance is undefined on first stay-points.
std::optional<double> attr_value(const StayPoint& sp, Attribute a) {
    switch (a) {
        case Attribute::Visits: return 1.0;
        case Attribute::Duration: return sp.duration_s;
        case Attribute::Distance: return sp.dist_from_prev_m;
    }
    return std::nullopt;
}

std::vector<std::int64_t> observed_counts(const Dataset& obs, int n_cells) {
    std::vector<std::int64_t> c(n_cells, 0);
    for (const auto& u : obs)
        for (const auto& sp : u.staypoints)
            if (sp.cell) ++c[*sp.cell];
    return c;
}

} // namespace

std::string attribute_name(Attribute a) {
    switch (a) {
        case Attribute::Visits: return "visits";
        case Attribute::Duration: return "duration";
        case Attribute::Distance: return "distance";
    }
    return "?";
}

Attribute attribute_from_name(const std::string& s) {
    if (s == "visits") return Attribute::Visits;
    if (s == "duration") return Attribute::Duration;
    if (s == "distance") return Attribute::Distance;
    throw ConfigError("unknown attribute: " + s);
}

void validate_query(const Query& q, int cell_count) {
    if (q.agg == Agg::Count && q.attribute != Attribute::Visits)
        throw ConfigError("COUNT queries pair only with the visits attribute");
    if (q.agg == Agg::Avg && q.attribute == Attribute::Visits)
        throw ConfigError("AVG queries pair with duration or distance");
    if (q.cell < 0 || q.cell >= cell_count) throw ConfigError("query cell out of range");
}

std::optional<double> TruthTable::value(Attribute a, int cell) const {
    if (a == Attribute::Visits) return (double)c[cell];
    if (c[cell] == 0) return std::nullopt;
    const double t = a == Attribute::Duration ? t_dur[cell] : t_dist[cell];
    return t / (double)c[cell];
}

TruthTable truth_stats(const Dataset& data, const CityGrid& grid) {
    TruthTable t;
    const int n = grid.cell_count();
    t.c.assign(n, 0);
    t.t_dur.assign(n, 0.0);
    t.t_dist.assign(n, 0.0);
    for (const auto& u : data)
        for (const auto& sp : u.staypoints) {
            if (!sp.cell) continue;
            ++t.c[*sp.cell];
            t.t_dur[*sp.cell] += sp.duration_s;
            if (sp.dist_from_prev_m) t.t_dist[*sp.cell] += *sp.dist_from_prev_m;
        }
    return t;
}

EstimateTable oblivious_avg(const Dataset& obs, const CityGrid& grid, Attribute attr) {
    if (attr == Attribute::Visits) throw ConfigError("oblivious_avg: AVG does not apply to visits");
    const int n = grid.cell_count();
    EstimateTable out;
    out.method = "oblivious";
    out.attribute = attribute_name(attr);
    out.support = observed_counts(obs, n);
    out.flags.assign(n, "");
    std::vector<double> sum(n, 0.0);
    for (const auto& u : obs)
        for (const auto& sp : u.staypoints) {
            if (!sp.cell) continue;
            if (auto v = attr_value(sp, attr)) sum[*sp.cell] += *v;
        }
    out.value.resize(n);
    for (int mu = 0; mu < n; ++mu)
        out.value[mu] = out.support[mu] > 0
                            ? std::optional<double>(sum[mu] / (double)out.support[mu])
                            : std::nullopt;
    return out;
}

EstimateTable oblivious_count(const Dataset& obs, std::int64_t total_population,
                              std::int64_t observed_users, const CityGrid& grid) {
    if (observed_users <= 0) throw DataError("oblivious_count: no observed users (n = 0)");
    const double scale = (double)total_population / (double)observed_users;
    const int n = grid.cell_count();
    EstimateTable out;
    out.method = "oblivious";
    out.attribute = "visits";
    out.support = observed_counts(obs, n);
    out.flags.assign(n, "");
    out.value.resize(n);
    for (int mu = 0; mu < n; ++mu) out.value[mu] = scale * (double)out.support[mu];
    return out;
}

namespace {

/// Shared inverse-probability weighting pass: per-cell weighted sums of an
/// attribute, plus the skipped-home-cell bookkeeping.
struct WeightedSums {
    std::vector<double> sum;
    std::vector<std::int64_t> support;
    std::vector<int> skipped;
};

WeightedSums ipw_sums(const Dataset& obs, const SamplingProfile& profile, const CityGrid& grid,
                      Attribute attr) {
    const int n = grid.cell_count();
    if (profile.cell_count() != n)
        throw ProfileError("debiasing: profile covers " + fmt_int(profile.cell_count()) +
                           " cells, grid has " + fmt_int(n));
    WeightedSums w;
    w.sum.assign(n, 0.0);
    w.support.assign(n, 0);
    std::set<int> skipped;
    for (const auto& u : obs) {
        if (!u.home) throw ProfileError("debiasing: user " + u.user_id + " has no home cell");
        const int h = *u.home;
        if (h < 0 || h >= n)
            throw ProfileError("debiasing: home cell " + fmt_int(h) + " of user " + u.user_id +
                               " not covered by the profile");
        if (profile.observed_users[h] == 0) {
            skipped.insert(h);
            continue;
        }
        const double weight =
            (double)profile.true_users[h] / (double)profile.observed_users[h];
        for (const auto& sp : u.staypoints) {
            if (!sp.cell) continue;
            ++w.support[*sp.cell];
            if (auto v = attr_value(sp, attr)) w.sum[*sp.cell] += weight * *v;
        }
    }
    w.skipped.assign(skipped.begin(), skipped.end());
    return w;
}

} // namespace

EstimateTable debiased_count(const Dataset& obs, const SamplingProfile& profile,
                             const CityGrid& grid) {
    auto w = ipw_sums(obs, profile, grid, Attribute::Visits);
    EstimateTable out;
    out.method = "debiased";
    out.attribute = "visits";
    out.value.assign(w.sum.begin(), w.sum.end());
    out.support = std::move(w.support);
    out.flags.assign(grid.cell_count(), "");
    out.skipped_home_cells = std::move(w.skipped);
    return out;
}

EstimateTable debiased_avg(const Dataset& obs, const SamplingProfile& profile,
                           const CityGrid& grid, Attribute attr, const TruthTable& c_known,
                           bool ratio_variant) {
    if (attr == Attribute::Visits) throw ConfigError("debiased_avg: AVG does not apply to visits");
    const int n = grid.cell_count();
    if (c_known.cell_count() != n) throw DataError("debiased_avg: truth table size mismatch");
    auto w = ipw_sums(obs, profile, grid, attr);

    EstimateTable out;
    out.method = ratio_variant ? "debiased-ratio" : "debiased";
    out.attribute = attribute_name(attr);
    out.support = std::move(w.support);
    out.flags.assign(n, "");
    out.skipped_home_cells = std::move(w.skipped);
    out.value.resize(n);

    std::vector<double> denom(n, 0.0);
    if (ratio_variant) {
        auto chat = ipw_sums(obs, profile, grid, Attribute::Visits);
        denom = std::move(chat.sum);
    } else {
        for (int mu = 0; mu < n; ++mu) denom[mu] = (double)c_known.c[mu];
    }
    for (int mu = 0; mu < n; ++mu) {
        if (denom[mu] <= 0.0) {
            out.value[mu] = std::nullopt;
            continue;
        }
        out.value[mu] = w.sum[mu] / denom[mu];
        if (out.support[mu] == 0) out.flags[mu] = "low_support";
    }
    return out;
}

std::string estimator_name(EstimatorId id) {
    switch (id) {
        case EstimatorId::ObliviousCount: return "oblivious_count";
        case EstimatorId::ObliviousAvgDuration: return "oblivious_avg_duration";
        case EstimatorId::ObliviousAvgDistance: return "oblivious_avg_distance";
        case EstimatorId::DebiasedCount: return "debiased_count";
        case EstimatorId::DebiasedAvgDuration: return "debiased_avg_duration";
        case EstimatorId::DebiasedAvgDistance: return "debiased_avg_distance";
        case EstimatorId::TruthCount: return "truth_count";
    }
    return "?";
}

std::vector<BiasVarianceReport> monte_carlo_bias_variance(
    const Dataset& truth, const CityGrid& grid, const std::vector<double>& targets,
    const std::vector<EstimatorId>& ids, const std::vector<std::uint64_t>& seeds) {
    if (seeds.size() < 2) throw ConfigError("monte_carlo_bias_variance: need R >= 2 draws");
    const int n = grid.cell_count();
    const auto R = seeds.size();
    const TruthTable tt = truth_stats(truth, grid);
    const std::int64_t N = (std::int64_t)truth.size();

    // values[id][cell] = per-draw estimates (NaN = excluded)
    std::vector<std::vector<std::vector<double>>> values(
        ids.size(), std::vector<std::vector<double>>(n));

    for (std::size_t r = 0; r < R; ++r) {
        const SampleDraw draw = biased_sample(truth, n, targets, seeds[r]);
        const auto obs_users = (std::int64_t)draw.observed.size();
        for (std::size_t e = 0; e < ids.size(); ++e) {
            std::optional<EstimateTable> table;
            switch (ids[e]) {
                case EstimatorId::ObliviousCount:
                    if (obs_users > 0) table = oblivious_count(draw.observed, N, obs_users, grid);
                    break;
                case EstimatorId::ObliviousAvgDuration:
                    table = oblivious_avg(draw.observed, grid, Attribute::Duration);
                    break;
                case EstimatorId::ObliviousAvgDistance:
                    table = oblivious_avg(draw.observed, grid, Attribute::Distance);
                    break;
                case EstimatorId::DebiasedCount:
                    table = debiased_count(draw.observed, draw.profile, grid);
                    break;
                case EstimatorId::DebiasedAvgDuration:
                    table = debiased_avg(draw.observed, draw.profile, grid, Attribute::Duration, tt);
                    break;
                case EstimatorId::DebiasedAvgDistance:
                    table = debiased_avg(draw.observed, draw.profile, grid, Attribute::Distance, tt);
                    break;
                case EstimatorId::TruthCount: break; // handled below
            }
            for (int mu = 0; mu < n; ++mu) {
                double v = kNan;
                if (ids[e] == EstimatorId::TruthCount)
                    v = (double)tt.c[mu];
                else if (table && (*table).value[mu])
                    v = *(*table).value[mu];
                values[e][mu].push_back(v);
            }
        }
    }

    std::vector<BiasVarianceReport> reports;
    for (std::size_t e = 0; e < ids.size(); ++e) {
        BiasVarianceReport rep;
        rep.estimator = estimator_name(ids[e]);
        rep.bias.assign(n, kNan);
        rep.variance.assign(n, kNan);
        rep.mse.assign(n, kNan);
        rep.excluded_draws.assign(n, 0);
        const Attribute attr = ids[e] == EstimatorId::ObliviousAvgDuration ||
                                       ids[e] == EstimatorId::DebiasedAvgDuration
                                   ? Attribute::Duration
                               : ids[e] == EstimatorId::ObliviousAvgDistance ||
                                       ids[e] == EstimatorId::DebiasedAvgDistance
                                   ? Attribute::Distance
                                   : Attribute::Visits;
        for (int mu = 0; mu < n; ++mu) {
            std::vector<double> xs;
            xs.reserve(R);
            for (double v : values[e][mu])
                if (std::isnan(v))
                    ++rep.excluded_draws[mu];
                else
                    xs.push_back(v);
            const auto theta_opt = tt.value(attr, mu);
            if (!theta_opt || xs.size() < 2) continue;
            const double theta = *theta_opt;
            const double m = (double)xs.size();
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= m;
            double var = 0.0, mse = 0.0;
            for (double x : xs) {
                var += (x - mean) * (x - mean);
                mse += (x - theta) * (x - theta);
            }
            rep.bias[mu] = mean - theta;
            rep.variance[mu] = var / (m - 1.0);
            rep.mse[mu] = mse / m;
        }
        reports.push_back(std::move(rep));
    }
    return reports;
}

void write_estimates_csv(const std::string& path, const EstimateTable& t) {
    CsvWriter w(path, {"cell_id", "method", "attribute", "estimate", "support_count", "flags"});
    for (int mu = 0; mu < t.cell_count(); ++mu)
        w.row({fmt_int(mu), t.method, t.attribute, t.value[mu] ? fmt_double(*t.value[mu]) : "",
               fmt_int(t.support[mu]), t.flags[mu]});
}

EstimateTable read_estimates_csv(const std::string& path) {
    CsvReader reader(path, {"cell_id", "method", "attribute", "estimate", "support_count", "flags"});
    EstimateTable t;
    std::int64_t expect = 0;
    while (auto row = reader.next()) {
        if (parse_int((*row)[0], reader.where()) != expect)
            throw ParseError(reader.where() + ": cell ids must be dense from 0");
        if (expect == 0) {
            t.method = (*row)[1];
            t.attribute = (*row)[2];
        } else if (t.method != (*row)[1] || t.attribute != (*row)[2]) {
            throw ParseError(reader.where() + ": mixed method/attribute in one table");
        }
        t.value.push_back((*row)[3].empty()
                              ? std::nullopt
                              : std::optional<double>(parse_double((*row)[3], reader.where())));
        t.support.push_back(parse_int((*row)[4], reader.where()));
        t.flags.push_back((*row)[5]);
        ++expect;
    }
    return t;
}

void write_bias_variance_csv(const std::string& path,
                             const std::vector<BiasVarianceReport>& reports) {
    CsvWriter w(path, {"cell_id", "estimator", "bias", "variance", "mse", "excluded_draws"});
    for (const auto& rep : reports)
        for (std::size_t mu = 0; mu < rep.bias.size(); ++mu)
            w.row({fmt_int((std::int64_t)mu), rep.estimator,
                   std::isnan(rep.bias[mu]) ? "" : fmt_double(rep.bias[mu]),
                   std::isnan(rep.variance[mu]) ? "" : fmt_double(rep.variance[mu]),
                   std::isnan(rep.mse[mu]) ? "" : fmt_double(rep.mse[mu]),
                   fmt_int(rep.excluded_draws[mu])});
}

} // namespace popstat
