#include "popstat/synth.hpp"

#include <algorithm>
#include <cmath>

#include "popstat/errors.hpp"
#include "popstat/rng.hpp"

namespace popstat {

namespace {

constexpr std::int64_t kEpoch = 1600000000; // timeline anchor for synthetic stays

// Marsaglia-Tsang, with the usual shape<1 boost.
double gamma_draw(Rng& rng, double shape) {
    if (shape < 1.0)
        return gamma_draw(rng, shape + 1.0) * std::pow(rng.uniform(), 1.0 / shape);
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        const double x = rng.normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

template <typename InIt, typename OutIt>
void dirichlet(Rng& rng, InIt alpha_begin, InIt alpha_end, OutIt out) {
    double sum = 0.0;
    OutIt o = out;
    for (InIt a = alpha_begin; a != alpha_end; ++a, ++o) {
        *o = gamma_draw(rng, *a);
        sum += *o;
    }
    for (InIt a = alpha_begin; a != alpha_end; ++a, ++out) *out /= sum;
}

int categorical(Rng& rng, const std::vector<double>& weights) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return (int)i;
    }
    return (int)weights.size() - 1; // fp slack on the last bin
}

double cat_param(const std::vector<double>& v, int c) {
    if (v.empty()) throw ConfigError("per-category parameter list is empty");
    return c < (int)v.size() ? v[c] : v.back();
}

void validate(const GenConfig& cfg) {
    if (cfg.rows < 1 || cfg.cols < 1) throw ConfigError("GenConfig: grid must have cells");
    if (cfg.cell_size_m <= 0.0) throw ConfigError("GenConfig: cell_size_m must be positive");
    if (cfg.k_categories < 1) throw ConfigError("GenConfig: k_categories must be >= 1");
    if (cfg.poi_min < 1 || cfg.poi_max < cfg.poi_min)
        throw ConfigError("GenConfig: need 1 <= poi_min <= poi_max");
    if (cfg.poi_mix_concentration <= 0.0)
        throw ConfigError("GenConfig: poi_mix_concentration must be positive");
    if (cfg.population_spread < 0 || cfg.income_spread < 0 || cfg.visits_spread < 0)
        throw ConfigError("GenConfig: spreads must be >= 0");
    for (double a : cfg.age_concentration)
        if (a <= 0.0) throw ConfigError("GenConfig: age_concentration must be positive");
    auto check_nonneg = [](const std::vector<double>& v, const char* name) {
        for (double x : v)
            if (x < 0.0) throw ConfigError(std::string("GenConfig: ") + name + " must be >= 0");
    };
    check_nonneg(cfg.duration_spread_s, "duration_spread_s");
    check_nonneg(cfg.distance_spread_m, "distance_spread_m");
    if (cfg.duration_mean_s.empty() || cfg.distance_mean_m.empty())
        throw ConfigError("GenConfig: per-category means must not be empty");
    if (cfg.base_ratio <= 0.0 || cfg.base_ratio > 1.0)
        throw ConfigError("GenConfig: base_ratio must be in (0, 1]");
    if (cfg.home_duration_scale <= 0.0)
        throw ConfigError("GenConfig: home_duration_scale must be positive");
}

} // namespace

std::int64_t round_half_even(double x) {
    const double f = std::floor(x);
    const double diff = x - f;
    const auto lo = static_cast<std::int64_t>(f);
    if (diff > 0.5) return lo + 1;
    if (diff < 0.5) return lo;
    return lo % 2 == 0 ? lo : lo + 1;
}

CityModel generate_city(const GenConfig& cfg) {
    validate(cfg);
    CityModel city;
    city.grid = CityGrid{cfg.origin, cfg.cell_size_m, cfg.rows, cfg.cols};
    city.k_categories = cfg.k_categories;
    const int n_cells = city.grid.cell_count();
    city.cells.resize(n_cells);
    for (int mu = 0; mu < n_cells; ++mu) {
        Rng rng(derive_seed(cfg.seed, "city.cell", (std::uint64_t)mu));
        CityCell& cell = city.cells[mu];
        cell.population =
            std::max<std::int64_t>(0, llround(rng.normal(cfg.population_mean, cfg.population_spread)));
        cell.median_income = std::max(0.0, rng.normal(cfg.income_mean, cfg.income_spread));
        dirichlet(rng, cfg.age_concentration.begin(), cfg.age_concentration.end(),
                  cell.age_fractions.begin());

        std::vector<double> mix_alpha(cfg.k_categories, cfg.poi_mix_concentration);
        std::vector<double> mix(cfg.k_categories);
        dirichlet(rng, mix_alpha.begin(), mix_alpha.end(), mix.begin());
        const int n_pois =
            cfg.poi_min + (int)rng.bounded((std::uint64_t)(cfg.poi_max - cfg.poi_min + 1));
        const LocalPoint o = city.grid.cell_origin(mu);
        for (int p = 0; p < n_pois; ++p) {
            Poi poi;
            poi.location = {o.x + rng.uniform() * cfg.cell_size_m,
                            o.y + rng.uniform() * cfg.cell_size_m};
            poi.category = categorical(rng, mix);
            cell.pois.push_back(poi);
        }
    }
    return city;
}

Dataset generate_population(const CityModel& city, const GenConfig& cfg) {
    validate(cfg);
    std::vector<int> poi_cells; // visitable destinations
    for (int mu = 0; mu < (int)city.cells.size(); ++mu)
        if (!city.cells[mu].pois.empty()) poi_cells.push_back(mu);
    if (poi_cells.empty()) throw DataError("generate_population: city has no POIs");

    Dataset data;
    std::uint64_t user_index = 0;
    char idbuf[16];
    for (int mu = 0; mu < (int)city.cells.size(); ++mu) {
        const auto& home_pois = city.cells[mu].pois;
        for (std::int64_t r = 0; r < city.cells[mu].population; ++r, ++user_index) {
            Rng rng(derive_seed(cfg.seed, "user", user_index));
            UserSequence seq;
            std::snprintf(idbuf, sizeof idbuf, "u%06llu", (unsigned long long)user_index);
            seq.user_id = idbuf;
            seq.home = mu;

            const int fav = home_pois.empty() ? -1 : (int)rng.bounded(home_pois.size());
            int extra_home = 0;
            if (cfg.home_regular_p > 0.0 && cfg.home_regular_p < 1.0)
                while (extra_home < 64 && rng.uniform() < 1.0 - cfg.home_regular_p) ++extra_home;
            const int away =
                (int)std::max<std::int64_t>(0, llround(rng.normal(cfg.visits_mean, cfg.visits_spread)));

            // visit plan: first stay at home, remaining home/away visits shuffled
            std::vector<int> plan(extra_home, 0);
            plan.insert(plan.end(), away, 1);
            rng.shuffle(plan);
            if (fav >= 0) plan.insert(plan.begin(), 0);
            if (plan.empty()) plan.push_back(1); // POI-less home cell: still one visit somewhere

            std::int64_t t = kEpoch + (std::int64_t)rng.bounded(30 * 86400);
            const Poi* prev = nullptr;
            for (int kind : plan) {
                const Poi* poi;
                if (kind == 0) {
                    poi = &home_pois[fav];
                } else {
                    const int dest = poi_cells[rng.bounded(poi_cells.size())];
                    const auto& pois = city.cells[dest].pois;
                    poi = &pois[rng.bounded(pois.size())];
                    if (prev != nullptr) {
                        // steer toward the category's planted hop length
                        const double target = rng.normal(cat_param(cfg.distance_mean_m, poi->category),
                                                         cat_param(cfg.distance_spread_m, poi->category));
                        double best = std::abs(euclid(prev->location, poi->location) - target);
                        for (const auto& cand : pois) {
                            if (cand.category != poi->category) continue;
                            const double d = std::abs(euclid(prev->location, cand.location) - target);
                            if (d < best) {
                                best = d;
                                poi = &cand;
                            }
                        }
                    }
                }
                const int c = poi->category;
                const double dscale = kind == 0 ? cfg.home_duration_scale : 1.0;
                const auto dur = std::max<std::int64_t>(
                    1, llround(rng.normal(dscale * cat_param(cfg.duration_mean_s, c),
                                          dscale * cat_param(cfg.duration_spread_s, c))));
                StayPoint sp;
                sp.centroid = unproject(poi->location, city.grid.origin);
                sp.arrive_t = t;
                sp.leave_t = t + dur;
                seq.staypoints.push_back(sp);
                t = sp.leave_t + 600 + (std::int64_t)rng.bounded(28800);
                prev = poi;
            }
            seq.staypoints = derive_attributes(std::move(seq.staypoints), city.grid);
            data.push_back(std::move(seq));
        }
    }
    return data;
}

std::vector<double> sampling_targets(const CityModel& city, const GenConfig& cfg) {
    const int n = (int)city.cells.size();
    double mean = 0.0;
    for (const auto& c : city.cells) mean += c.median_income;
    mean /= n;
    double var = 0.0;
    for (const auto& c : city.cells) var += (c.median_income - mean) * (c.median_income - mean);
    const double sd = std::sqrt(var / n);

    std::vector<double> s(n);
    for (int mu = 0; mu < n; ++mu) {
        const auto& c = city.cells[mu];
        const double z = sd > 0.0 ? (c.median_income - mean) / sd : 0.0;
        double v = cfg.base_ratio + cfg.income_slope * z;
        for (int g = 0; g < 3; ++g) v += cfg.age_slopes[g] * c.age_fractions[g];
        s[mu] = std::clamp(v, kMinSamplingRatio, 1.0);
    }
    return s;
}

SampleDraw biased_sample(const Dataset& truth, int cell_count,
                         const std::vector<double>& targets, std::uint64_t seed) {
    if ((int)targets.size() != cell_count)
        throw ConfigError("biased_sample: targets size does not match cell count");
    for (double s : targets)
        if (s < 0.0 || s > 1.0) throw ConfigError("biased_sample: target ratio outside [0,1]");

    std::vector<std::vector<std::size_t>> pool(cell_count);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!truth[i].home) throw DataError("biased_sample: user without home: " + truth[i].user_id);
        const int h = *truth[i].home;
        if (h < 0 || h >= cell_count)
            throw DataError("biased_sample: home cell out of range for " + truth[i].user_id);
        pool[h].push_back(i);
    }

    SampleDraw draw;
    draw.profile.true_users.assign(cell_count, 0);
    draw.profile.observed_users.assign(cell_count, 0);
    std::vector<char> chosen(truth.size(), 0);
    for (int mu = 0; mu < cell_count; ++mu) {
        const auto N = (std::int64_t)pool[mu].size();
        draw.profile.true_users[mu] = N;
        const std::int64_t m = std::min<std::int64_t>(N, round_half_even(targets[mu] * (double)N));
        draw.profile.observed_users[mu] = m;
        if (m == 0) continue;
        Rng rng(derive_seed(seed, "sample.cell", (std::uint64_t)mu));
        for (std::size_t idx : rng.sample_indices(pool[mu].size(), (std::size_t)m))
            chosen[pool[mu][idx]] = 1;
    }
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (chosen[i]) draw.observed.push_back(truth[i]);
    return draw;
}

std::vector<SampleDraw> resample_k(const Dataset& truth, int cell_count,
                                   const std::vector<double>& targets, int k,
                                   std::uint64_t base_seed) {
    if (k < 1) throw ConfigError("resample_k: k must be >= 1");
    std::vector<SampleDraw> draws;
    draws.reserve(k);
    for (int i = 0; i < k; ++i)
        draws.push_back(biased_sample(truth, cell_count, targets, derive_seed(base_seed, "resample", i)));
    return draws;
}

} // namespace popstat
