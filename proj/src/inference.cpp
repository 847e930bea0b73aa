#include "capstat/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "capstat/errors.hpp"
#include "capstat/linalg.hpp"
#include "capstat/rng.hpp"
#include "capstat/special.hpp"

namespace capstat {

namespace {

constexpr double kZ975 = 1.959963984540054;

struct Moments {
    double mean = 0.0;
    double var = 0.0;  // sample variance, n-1
    std::size_t n = 0;
};

Moments moments(std::span<const double> v) {
    Moments m;
    m.n = v.size();
    if (m.n == 0) return m;
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(m.n);
    if (m.n >= 2) {
        double ss = 0.0;
        for (double x : v) ss += (x - m.mean) * (x - m.mean);
        m.var = ss / static_cast<double>(m.n - 1);
    }
    return m;
}

}  // namespace

MatchingSpec MatchingSpec::defaults() {
    MatchingSpec spec;
    spec.covariates = {
        {Field::runtime, Stat::mean},
        {Field::utilization, Stat::mean},
        {Field::utilization, Stat::p50},
    };
    return spec;
}

TestResult welch_t_test(std::span<const double> capped, std::span<const double> uncapped) {
    if (capped.size() < 2 || uncapped.size() < 2) {
        throw InsufficientData("welch_t_test needs n >= 2 per group (got " +
                               std::to_string(capped.size()) + " and " +
                               std::to_string(uncapped.size()) + ")");
    }
    Moments m1 = moments(capped);
    Moments m0 = moments(uncapped);
    double a = m1.var / static_cast<double>(m1.n);
    double b = m0.var / static_cast<double>(m0.n);
    TestResult res;
    if (a + b == 0.0) {
        if (m1.mean == m0.mean) {
            throw DegenerateTest("both groups constant with equal means");
        }
        // Constant groups with different means: infinitely strong evidence.
        res.statistic = m1.mean < m0.mean ? -std::numeric_limits<double>::infinity()
                                          : std::numeric_limits<double>::infinity();
        res.dof = static_cast<double>(m1.n + m0.n - 2);
        res.p_value = m1.mean < m0.mean ? 0.0 : 1.0;
        res.significant_at = TestResult::verdicts(res.p_value);
        return res;
    }
    res.statistic = (m1.mean - m0.mean) / std::sqrt(a + b);
    double denom = a * a / static_cast<double>(m1.n - 1) + b * b / static_cast<double>(m0.n - 1);
    res.dof = (a + b) * (a + b) / denom;
    res.p_value = student_t_cdf(res.statistic, *res.dof);
    res.significant_at = TestResult::verdicts(res.p_value);
    return res;
}

namespace {

struct RankedPool {
    std::vector<std::int64_t> doubled_ranks;  // 2 * midrank, integer even with ties
    std::vector<char> is_capped;              // aligned with doubled_ranks
    std::int64_t tie_cubes = 0;               // sum of t^3 - t over tie groups
    bool all_tied = false;
};

RankedPool midrank(std::span<const double> capped, std::span<const double> uncapped) {
    std::vector<std::pair<double, char>> pooled;
    pooled.reserve(capped.size() + uncapped.size());
    for (double v : capped) pooled.emplace_back(v, 1);
    for (double v : uncapped) pooled.emplace_back(v, 0);
    std::sort(pooled.begin(), pooled.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    RankedPool out;
    std::size_t n = pooled.size();
    out.doubled_ranks.resize(n);
    out.is_capped.resize(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && pooled[j].first == pooled[i].first) ++j;
        // ranks i+1 .. j (1-based); midrank doubled = (i+1) + j
        std::int64_t doubled = static_cast<std::int64_t>(i + 1 + j);
        std::int64_t t = static_cast<std::int64_t>(j - i);
        out.tie_cubes += t * t * t - t;
        for (std::size_t r = i; r < j; ++r) {
            out.doubled_ranks[r] = doubled;
            out.is_capped[r] = pooled[r].second;
        }
        i = j;
    }
    out.all_tied = pooled.front().first == pooled.back().first;
    return out;
}

double binomial_coefficient(std::size_t n, std::size_t k) {
    // Exact for n <= 20 in 64-bit integer arithmetic.
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    std::uint64_t num = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        num = num * (n - k + i) / i;
    }
    return static_cast<double>(num);
}

// Exact P(sum of doubled ranks of the capped subset <= observed) over all
// equally likely assignments of n1 of the n pooled ranks, by counting with a
// subset-sum table.
double exact_rank_tail(const std::vector<std::int64_t>& doubled, std::size_t n1,
                       std::int64_t observed_doubled_sum) {
    std::size_t n = doubled.size();
    std::int64_t total = std::accumulate(doubled.begin(), doubled.end(), std::int64_t{0});
    std::vector<std::vector<std::uint64_t>> ways(
        n1 + 1, std::vector<std::uint64_t>(static_cast<std::size_t>(total) + 1, 0));
    ways[0][0] = 1;
    for (std::size_t item = 0; item < n; ++item) {
        std::int64_t d = doubled[item];
        for (std::size_t k = std::min(item + 1, n1); k >= 1; --k) {
            for (std::int64_t s = total; s >= d; --s) {
                std::uint64_t add = ways[k - 1][static_cast<std::size_t>(s - d)];
                if (add) ways[k][static_cast<std::size_t>(s)] += add;
            }
        }
    }
    std::uint64_t favorable = 0;
    for (std::int64_t s = 0; s <= std::min(observed_doubled_sum, total); ++s) {
        favorable += ways[n1][static_cast<std::size_t>(s)];
    }
    return static_cast<double>(favorable) / binomial_coefficient(n, n1);
}

}  // namespace

double mann_whitney_exact_p(std::span<const double> capped, std::span<const double> uncapped) {
    RankedPool pool = midrank(capped, uncapped);
    if (pool.all_tied) return 0.5;
    std::int64_t r1_doubled = 0;
    for (std::size_t i = 0; i < pool.doubled_ranks.size(); ++i) {
        if (pool.is_capped[i]) r1_doubled += pool.doubled_ranks[i];
    }
    return exact_rank_tail(pool.doubled_ranks, capped.size(), r1_doubled);
}

TestResult mann_whitney_u(std::span<const double> capped, std::span<const double> uncapped) {
    std::size_t n1 = capped.size();
    std::size_t n0 = uncapped.size();
    if (n1 < 2 || n0 < 2) {
        throw InsufficientData("mann_whitney_u needs n >= 2 per group (got " +
                               std::to_string(n1) + " and " + std::to_string(n0) + ")");
    }
    std::size_t n = n1 + n0;
    RankedPool pool = midrank(capped, uncapped);
    std::int64_t r1_doubled = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (pool.is_capped[i]) r1_doubled += pool.doubled_ranks[i];
    }
    // U1 = R1 - n1(n1+1)/2, kept doubled to stay integral under midranks.
    std::int64_t u_doubled = r1_doubled - static_cast<std::int64_t>(n1 * (n1 + 1));

    TestResult res;
    res.statistic = static_cast<double>(u_doubled) / 2.0;
    if (pool.all_tied) {
        res.p_value = 0.5;
        res.significant_at = TestResult::verdicts(res.p_value);
        return res;
    }
    if (n <= 20) {
        res.p_value = exact_rank_tail(pool.doubled_ranks, n1, r1_doubled);
    } else {
        double mean_u = 0.5 * static_cast<double>(n1) * static_cast<double>(n0);
        double nn = static_cast<double>(n);
        double tie_term =
            static_cast<double>(pool.tie_cubes) / (nn * (nn - 1.0));
        double var_u = (static_cast<double>(n1) * static_cast<double>(n0) / 12.0) *
                       ((nn + 1.0) - tie_term);
        if (var_u <= 0.0) {
            res.p_value = 0.5;
        } else {
            double u = static_cast<double>(u_doubled) / 2.0;
            double z = (u - mean_u + 0.5) / std::sqrt(var_u);
            res.p_value = normal_cdf(z);
        }
    }
    res.significant_at = TestResult::verdicts(res.p_value);
    return res;
}

namespace {

double require_value(const JobRecord& rec, const Selector& sel) {
    std::optional<double> v = select_value(rec, sel);
    if (!v) {
        throw SchemaError("record '" + rec.job_id + "' lacks " + selector_name(sel) +
                          " (summary-lite dataset?)");
    }
    return *v;
}

}  // namespace

AteEstimate ols_ate(const std::vector<JobRecord>& records, const Selector& outcome,
                    SeType se_type) {
    std::size_t n = records.size();
    std::vector<double> y(n);
    std::vector<double> t(n);
    std::size_t n1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = require_value(records[i], outcome);
        t[i] = records[i].capped ? 1.0 : 0.0;
        n1 += records[i].capped ? 1 : 0;
    }
    std::size_t n0 = n - n1;
    if (n1 < 2 || n0 < 2) {
        throw InsufficientData("ols_ate needs n >= 2 per group (treated " + std::to_string(n1) +
                               ", control " + std::to_string(n0) + ")");
    }
    bool constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });
    if (constant) throw DegenerateRegression("outcome has zero total variance");

    // Normal equations for Y = b0 + b1 T.
    double sum_y = std::accumulate(y.begin(), y.end(), 0.0);
    double sum_y1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (t[i] == 1.0) sum_y1 += y[i];
    }
    auto beta = solve_linear_system({static_cast<double>(n), static_cast<double>(n1),
                                     static_cast<double>(n1), static_cast<double>(n1)},
                                    {sum_y, sum_y1}, 2);
    if (!beta) throw DegenerateRegression("singular design");
    double b0 = (*beta)[0];
    double b1 = (*beta)[1];

    // Sandwich / classical variance of b1. bread = (X'X)^-1.
    double det = static_cast<double>(n1) * static_cast<double>(n0);
    double rss = 0.0;
    double rss1 = 0.0;  // sum of squared residuals in the treated group
    for (std::size_t i = 0; i < n; ++i) {
        double e = y[i] - (b0 + b1 * t[i]);
        rss += e * e;
        if (t[i] == 1.0) rss1 += e * e;
    }
    double nf = static_cast<double>(n);
    double var_b1;
    if (se_type == SeType::hc1) {
        // bread * meat * bread, row (2,2); meat = [[rss, rss1],[rss1, rss1]].
        double inv10 = -static_cast<double>(n1) / det;
        double inv11 = nf / det;
        var_b1 = inv10 * (rss * inv10 + rss1 * inv11) + inv11 * (rss1 * inv10 + rss1 * inv11);
        var_b1 *= nf / (nf - 2.0);
    } else {
        double s2 = rss / (nf - 2.0);
        var_b1 = s2 * nf / det;
    }
    double se = std::sqrt(std::max(var_b1, 0.0));

    AteEstimate est;
    est.estimate = b1;
    est.method = AteMethod::ols;
    est.n_treated = n1;
    est.n_control = n0;
    est.std_error = se;
    est.se_type = se_type == SeType::hc1 ? "hc1" : "classical";
    if (se > 0.0) {
        est.p_value = 2.0 * (1.0 - normal_cdf(std::fabs(b1) / se));
    } else {
        est.p_value = b1 == 0.0 ? 1.0 : 0.0;
    }
    est.ci95 = std::make_pair(b1 - kZ975 * se, b1 + kZ975 * se);
    return est;
}

namespace matching_detail {

std::vector<std::vector<std::size_t>> nearest_opposite(const std::vector<double>& x,
                                                       std::size_t n_cols,
                                                       const std::vector<char>& treated,
                                                       const std::vector<std::size_t>& order,
                                                       int k, Exec exec) {
    std::size_t n = treated.size();
    std::vector<std::vector<std::size_t>> matches(n);

    auto match_one = [&](std::size_t i) {
        // Best-k candidates ordered by (distance^2, tie-break order).
        std::vector<std::pair<double, std::size_t>> best;  // (dist2, j)
        best.reserve(static_cast<std::size_t>(k) + 1);
        const double* xi = &x[i * n_cols];
        for (std::size_t j = 0; j < n; ++j) {
            if (treated[j] == treated[i]) continue;
            const double* xj = &x[j * n_cols];
            double d2 = 0.0;
            for (std::size_t c = 0; c < n_cols; ++c) {
                double d = xi[c] - xj[c];
                d2 += d * d;
            }
            auto worse = [&](const std::pair<double, std::size_t>& cand,
                             const std::pair<double, std::size_t>& incumbent) {
                if (cand.first != incumbent.first) return cand.first > incumbent.first;
                return order[cand.second] > order[incumbent.second];
            };
            std::pair<double, std::size_t> cand{d2, j};
            if (best.size() < static_cast<std::size_t>(k)) {
                best.push_back(cand);
                std::sort(best.begin(), best.end(),
                          [&](const auto& a, const auto& b) { return worse(b, a); });
            } else if (worse(best.back(), cand)) {
                best.back() = cand;
                std::sort(best.begin(), best.end(),
                          [&](const auto& a, const auto& b) { return worse(b, a); });
            }
        }
        matches[i].reserve(best.size());
        for (auto& [d2, j] : best) matches[i].push_back(j);
    };

    if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            match_one(static_cast<std::size_t>(i));
        }
#else
        for (std::size_t i = 0; i < n; ++i) match_one(i);
#endif
    } else {
        for (std::size_t i = 0; i < n; ++i) match_one(i);
    }
    return matches;
}

}  // namespace matching_detail

namespace {

struct MatchingData {
    std::vector<double> y;
    std::vector<double> x;  // n x p, standardized when requested
    std::vector<char> treated;
    std::vector<std::size_t> order;  // tie-break rank: position after sorting by job_id
    std::size_t n1 = 0;
    std::size_t n0 = 0;
    std::size_t p = 0;
};

void validate_matching_spec(const MatchingSpec& spec, const Selector& outcome) {
    if (spec.covariates.empty()) throw ConfigError("matching requires at least one covariate");
    if (spec.k < 1) throw ConfigError("matching requires k >= 1");
    for (const Selector& cov : spec.covariates) {
        if (cov == outcome) {
            throw ConfigError("covariate " + selector_name(cov) +
                              " equals the outcome being estimated");
        }
    }
    if (!spec.with_replacement) {
        throw ConfigError("only matching with replacement is implemented");
    }
}

MatchingData extract(const std::vector<const JobRecord*>& records, const Selector& outcome,
                     const MatchingSpec& spec) {
    std::size_t n = records.size();
    std::size_t p = spec.covariates.size();
    MatchingData d;
    d.p = p;
    d.y.resize(n);
    d.x.resize(n * p);
    d.treated.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const JobRecord& rec = *records[i];
        d.y[i] = require_value(rec, outcome);
        d.treated[i] = rec.capped ? 1 : 0;
        for (std::size_t c = 0; c < p; ++c) {
            d.x[i * p + c] = require_value(rec, spec.covariates[c]);
        }
        d.n1 += rec.capped ? 1 : 0;
    }
    d.n0 = n - d.n1;
    if (d.n1 < 2 || d.n0 < 2) {
        throw InsufficientData("matching needs n >= 2 per group (treated " + std::to_string(d.n1) +
                               ", control " + std::to_string(d.n0) + ")");
    }
    if (spec.standardize) {
        for (std::size_t c = 0; c < p; ++c) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += d.x[i * p + c];
            mean /= static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double dv = d.x[i * p + c] - mean;
                ss += dv * dv;
            }
            double sd = std::sqrt(ss / static_cast<double>(n - 1));
            if (sd == 0.0) {
                throw ConstantCovariate(selector_name(spec.covariates[c]) +
                                        " is constant; cannot standardize");
            }
            for (std::size_t i = 0; i < n; ++i) d.x[i * p + c] = (d.x[i * p + c] - mean) / sd;
        }
    }
    // Tie-break rank: stable sort of indices by job_id keeps original index as
    // the secondary key for duplicated ids (bootstrap resamples).
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return records[a]->job_id < records[b]->job_id;
    });
    d.order.resize(n);
    for (std::size_t r = 0; r < n; ++r) d.order[idx[r]] = r;
    return d;
}

// Within-group linear outcome fits for the bias adjustment. Returns fitted
// value closures as coefficient vectors [intercept, slopes...].
std::pair<std::vector<double>, std::vector<double>> fit_outcome_models(const MatchingData& d) {
    std::size_t p = d.p;
    std::size_t min_rows = p + 2;
    if (d.n1 < min_rows || d.n0 < min_rows) {
        throw InsufficientData("bias adjustment needs n >= covariates + 2 per group");
    }
    auto fit_group = [&](char group) {
        std::vector<double> xg;
        std::vector<double> yg;
        for (std::size_t i = 0; i < d.treated.size(); ++i) {
            if (d.treated[i] != group) continue;
            xg.push_back(1.0);
            for (std::size_t c = 0; c < p; ++c) xg.push_back(d.x[i * p + c]);
            yg.push_back(d.y[i]);
        }
        auto coef = least_squares(xg, yg, yg.size(), p + 1);
        if (!coef) {
            throw SingularOutcomeModel(std::string("rank-deficient design in the ") +
                                       (group ? "treated" : "control") + " group");
        }
        return *coef;
    };
    return {fit_group(0), fit_group(1)};
}

double predict(const std::vector<double>& coef, const double* x, std::size_t p) {
    double v = coef[0];
    for (std::size_t c = 0; c < p; ++c) v += coef[c + 1] * x[c];
    return v;
}

double compute_matching_estimate(const MatchingData& d, const MatchingSpec& spec, Exec exec) {
    auto matches =
        matching_detail::nearest_opposite(d.x, d.p, d.treated, d.order, spec.k, exec);

    std::vector<double> coef_control, coef_treated;
    if (spec.bias_adjust) {
        std::tie(coef_control, coef_treated) = fit_outcome_models(d);
    }

    std::size_t n = d.y.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sign = d.treated[i] ? 1.0 : -1.0;
        double y_match = 0.0;
        double adjust = 0.0;
        const std::vector<double>* coef = nullptr;
        if (spec.bias_adjust) {
            // Matches come from the group opposite to i.
            coef = d.treated[i] ? &coef_control : &coef_treated;
        }
        for (std::size_t j : matches[i]) {
            y_match += d.y[j];
            if (coef) {
                adjust += predict(*coef, &d.x[i * d.p], d.p) - predict(*coef, &d.x[j * d.p], d.p);
            }
        }
        double m = static_cast<double>(matches[i].size());
        y_match /= m;
        adjust /= m;
        acc += sign * (d.y[i] - y_match - adjust);
    }
    return acc / static_cast<double>(n);
}

}  // namespace

AteEstimate matching_ate(const std::vector<JobRecord>& records, const Selector& outcome,
                         const MatchingSpec& spec, Exec exec) {
    validate_matching_spec(spec, outcome);
    std::vector<const JobRecord*> ptrs(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) ptrs[i] = &records[i];

    MatchingData data = extract(ptrs, outcome, spec);
    AteEstimate est;
    est.estimate = compute_matching_estimate(data, spec, exec);
    est.method = spec.bias_adjust ? AteMethod::matching_bias_adjusted : AteMethod::matching;
    est.n_treated = data.n1;
    est.n_control = data.n0;

    if (spec.bootstrap_replicates > 0) {
        int b_total = spec.bootstrap_replicates;
        std::vector<double> reps(static_cast<std::size_t>(b_total));
        std::vector<char> valid(static_cast<std::size_t>(b_total), 0);
        Rng root(spec.bootstrap_seed);
        std::size_t n = records.size();

        auto run_replicate = [&](int b) {
            Rng r = root.substream(static_cast<std::uint64_t>(b));
            std::vector<const JobRecord*> sample(n);
            for (std::size_t i = 0; i < n; ++i) {
                sample[i] = &records[static_cast<std::size_t>(r.uniform() * static_cast<double>(n))];
            }
            try {
                MatchingData rd = extract(sample, outcome, spec);
                reps[static_cast<std::size_t>(b)] =
                    compute_matching_estimate(rd, spec, Exec::serial);
                valid[static_cast<std::size_t>(b)] = 1;
            } catch (const Error&) {
                // Degenerate resample (collapsed group or constant covariate); skipped.
            }
        };

        if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
            for (int b = 0; b < b_total; ++b) run_replicate(b);
#else
            for (int b = 0; b < b_total; ++b) run_replicate(b);
#endif
        } else {
            for (int b = 0; b < b_total; ++b) run_replicate(b);
        }

        std::vector<double> ok;
        ok.reserve(static_cast<std::size_t>(b_total));
        for (int b = 0; b < b_total; ++b) {
            if (valid[static_cast<std::size_t>(b)]) ok.push_back(reps[static_cast<std::size_t>(b)]);
        }
        if (ok.size() < static_cast<std::size_t>(std::max(10, b_total / 2))) {
            throw InsufficientData("too many degenerate bootstrap replicates (" +
                                   std::to_string(ok.size()) + "/" + std::to_string(b_total) +
                                   " valid)");
        }
        Moments m = moments(ok);
        double se = std::sqrt(m.var);
        est.std_error = se;
        est.se_type = "bootstrap";
        if (se > 0.0) {
            est.p_value = 2.0 * (1.0 - normal_cdf(std::fabs(est.estimate) / se));
        } else {
            est.p_value = est.estimate == 0.0 ? 1.0 : 0.0;
        }
        est.ci95 = std::make_pair(est.estimate - kZ975 * se, est.estimate + kZ975 * se);
    }
    return est;
}

AteEstimate bias_adjusted_matching_ate(const std::vector<JobRecord>& records,
                                       const Selector& outcome, MatchingSpec spec, Exec exec) {
    spec.bias_adjust = true;
    return matching_ate(records, outcome, spec, exec);
}

Cohort filter_efficient(const std::vector<JobRecord>& records, double threshold_pct) {
    Cohort out;
    out.label = "efficient";
    for (const JobRecord& rec : records) {
        if (rec.utilization.mean > threshold_pct) out.records.push_back(rec);
    }
    return out;
}

}  // namespace capstat
