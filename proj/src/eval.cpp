#include "popstat/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "popstat/errors.hpp"

namespace popstat {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

RelativeErrorResult relative_error(const std::vector<std::optional<double>>& truth,
                                   const std::vector<std::optional<double>>& est) {
    if (truth.size() != est.size())
        throw DataError("relative_error: cell sets are not aligned");
    RelativeErrorResult r;
    r.per_cell.resize(truth.size());
    double sum = 0.0;
    int included = 0;
    for (std::size_t mu = 0; mu < truth.size(); ++mu) {
        if (!truth[mu] || *truth[mu] == 0.0 || !est[mu]) {
            ++r.excluded;
            continue;
        }
        r.per_cell[mu] = std::abs(*truth[mu] - *est[mu]) / std::abs(*truth[mu]);
        sum += *r.per_cell[mu];
        ++included;
    }
    r.overall = included > 0 ? sum / included : kNan;
    return r;
}

std::vector<std::optional<double>> truth_values(const TruthTable& t, Attribute a) {
    std::vector<std::optional<double>> v(t.cell_count());
    for (int mu = 0; mu < t.cell_count(); ++mu) v[mu] = t.value(a, mu);
    return v;
}

QuantileBuckets quantile_buckets(const Dataset& truth, const Dataset& observed,
                                 const CityGrid& grid) {
    const int n = grid.cell_count();
    std::vector<std::int64_t> L(n, 0), l(n, 0);
    for (const auto& u : truth)
        for (const auto& sp : u.staypoints)
            if (sp.cell) ++L[*sp.cell];
    for (const auto& u : observed)
        for (const auto& sp : u.staypoints)
            if (sp.cell) ++l[*sp.cell];

    QuantileBuckets qb;
    qb.ratio.resize(n);
    qb.bucket.assign(n, -1);
    std::vector<double> included;
    for (int mu = 0; mu < n; ++mu)
        if (L[mu] > 0) {
            qb.ratio[mu] = (double)l[mu] / (double)L[mu];
            included.push_back(*qb.ratio[mu]);
        }
    if (included.empty()) return qb;

    std::sort(included.begin(), included.end());
    const auto m = (std::int64_t)included.size();
    for (int b = 0; b < 4; ++b) {
        // nearest-rank at p = (b+1)/5: ceil(p*m) in exact integer arithmetic,
        // so an integral p*m never rounds up to the next rank
        auto rank = ((std::int64_t)(b + 1) * m + 4) / 5;
        rank = std::clamp<std::int64_t>(rank, 1, m);
        qb.cuts[b] = included[rank - 1];
    }
    for (int mu = 0; mu < n; ++mu) {
        if (!qb.ratio[mu]) continue;
        int b = 4;
        for (int c = 0; c < 4; ++c)
            if (*qb.ratio[mu] <= qb.cuts[c]) {
                b = c;
                break;
            }
        qb.bucket[mu] = b;
        ++qb.sizes[b];
    }
    return qb;
}

std::array<std::optional<double>, 5> per_bucket_error(
    const std::vector<std::optional<double>>& per_cell_errors, const QuantileBuckets& buckets) {
    if (per_cell_errors.size() != buckets.bucket.size())
        throw DataError("per_bucket_error: cell sets are not aligned");
    std::array<double, 5> sum{};
    std::array<int, 5> cnt{};
    for (std::size_t mu = 0; mu < per_cell_errors.size(); ++mu) {
        const int b = buckets.bucket[mu];
        if (b < 0 || !per_cell_errors[mu]) continue;
        sum[b] += *per_cell_errors[mu];
        ++cnt[b];
    }
    std::array<std::optional<double>, 5> out;
    for (int b = 0; b < 5; ++b)
        if (cnt[b] > 0) out[b] = sum[b] / cnt[b];
    return out;
}

VarianceTable variance_analysis(const Dataset& truth, const CityGrid& grid) {
    const int n = grid.cell_count();
    struct UserAgg {
        std::int64_t visits = 0;
        double dur_sum = 0.0;
        double dist_sum = 0.0;
        std::int64_t dist_cnt = 0;
    };
    // per cell: per-user aggregates, in dataset (user_id) order
    std::vector<std::vector<UserAgg>> cells(n);
    for (const auto& u : truth) {
        std::map<int, UserAgg> mine;
        for (const auto& sp : u.staypoints) {
            if (!sp.cell) continue;
            auto& a = mine[*sp.cell];
            ++a.visits;
            a.dur_sum += sp.duration_s;
            if (sp.dist_from_prev_m) {
                a.dist_sum += *sp.dist_from_prev_m;
                ++a.dist_cnt;
            }
        }
        for (const auto& [mu, agg] : mine) cells[mu].push_back(agg);
    }

    // per-cell variance of min-max-normalized per-user values
    auto cell_variance = [](std::vector<double>& vals) -> std::optional<double> {
        if (vals.size() < 2) return std::nullopt;
        const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
        const double range = *hi - *lo;
        if (range == 0.0) return 0.0;
        double mean = 0.0;
        for (double& v : vals) {
            v = (v - *lo) / range;
            mean += v;
        }
        mean /= (double)vals.size();
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        return var / (double)vals.size(); // population variance within the cell
    };

    VarianceTable out;
    std::array<double, 3> sum{};
    for (int mu = 0; mu < n; ++mu) {
        std::vector<double> visits, durations, distances;
        for (const auto& a : cells[mu]) {
            visits.push_back((double)a.visits);
            durations.push_back(a.dur_sum / (double)a.visits);
            if (a.dist_cnt > 0) distances.push_back(a.dist_sum / (double)a.dist_cnt);
        }
        const std::array<std::vector<double>*, 3> lists{&visits, &durations, &distances};
        for (int a = 0; a < 3; ++a)
            if (auto v = cell_variance(*lists[a])) {
                sum[a] += *v;
                ++out.cells_used[a];
            }
    }
    for (int a = 0; a < 3; ++a)
        if (out.cells_used[a] > 0) out.value[a] = sum[a] / out.cells_used[a];
    return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DataError("pearson: length mismatch");
    const auto n = (double)x.size();
    if (x.size() < 2) throw DataError("pearson: need at least 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DataError("pearson: correlation undefined for constant input");
    return sxy / std::sqrt(sxx * syy);
}

RunStats aggregate_runs(const std::vector<double>& xs) {
    if (xs.empty()) throw DataError("aggregate_runs: no runs");
    RunStats s;
    for (double x : xs) s.mean += x;
    s.mean /= (double)xs.size();
    if (xs.size() > 1) {
        double acc = 0.0;
        for (double x : xs) acc += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(acc / (double)(xs.size() - 1));
    }
    return s;
}

} // namespace popstat
