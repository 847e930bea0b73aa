#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oracle {

namespace {

double t_pdf(double x, double nu) {
    double ln = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                0.5 * std::log(nu * M_PI) - 0.5 * (nu + 1.0) * std::log1p(x * x / nu);
    return std::exp(ln);
}

template <typename F>
double adaptive_simpson(F f, double a, double b, double fa, double fm, double fb, double whole,
                        double eps, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * eps) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

template <typename F>
double integrate(F f, double a, double b, double eps) {
    double fa = f(a);
    double fb = f(b);
    double fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, eps, 48);
}

}  // namespace

double t_cdf(double t, double nu) {
    if (t == 0.0) return 0.5;
    // Integrate the density from 0 to t after x = tan(theta); the interval is
    // finite so there is no tail truncation at all.
    auto g = [nu](double theta) {
        double x = std::tan(theta);
        return t_pdf(x, nu) * (1.0 + x * x);
    };
    double theta_t = std::atan(t);
    if (t > 0.0) return 0.5 + integrate(g, 0.0, theta_t, 1e-12);
    return 0.5 - integrate(g, theta_t, 0.0, 1e-12);
}

double mwu_exact(std::span<const double> capped, std::span<const double> uncapped) {
    std::vector<double> pooled(capped.begin(), capped.end());
    pooled.insert(pooled.end(), uncapped.begin(), uncapped.end());
    std::size_t n = pooled.size();
    std::size_t n1 = capped.size();

    // Doubled midranks of the pooled sample.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return pooled[a] < pooled[b];
    });
    std::vector<long long> doubled(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && pooled[idx[j]] == pooled[idx[i]]) ++j;
        for (std::size_t r = i; r < j; ++r) doubled[idx[r]] = static_cast<long long>(i + 1 + j);
        i = j;
    }
    if (pooled[idx.front()] == pooled[idx.back()]) return 0.5;  // degenerate full tie

    long long observed = 0;
    for (std::size_t c = 0; c < n1; ++c) observed += doubled[c];

    // Enumerate all n-choose-n1 label assignments.
    unsigned long long favorable = 0;
    unsigned long long total = 0;
    std::vector<std::size_t> comb(n1);
    std::iota(comb.begin(), comb.end(), 0);
    while (true) {
        long long sum = 0;
        for (std::size_t c : comb) sum += doubled[c];
        ++total;
        if (sum <= observed) ++favorable;
        // next combination
        std::size_t pos = n1;
        while (pos > 0) {
            --pos;
            if (comb[pos] != pos + n - n1) break;
            if (pos == 0) {
                return static_cast<double>(favorable) / static_cast<double>(total);
            }
        }
        ++comb[pos];
        for (std::size_t c = pos + 1; c < n1; ++c) comb[c] = comb[c - 1] + 1;
    }
}

double matching_estimate(const std::vector<capstat::JobRecord>& records,
                         const capstat::Selector& outcome,
                         const std::vector<capstat::Selector>& covariates, int k) {
    std::size_t n = records.size();
    std::size_t p = covariates.size();
    std::vector<double> y(n);
    std::vector<double> x(n * p);
    std::vector<bool> treated(n);
    for (std::size_t r = 0; r < n; ++r) {
        y[r] = *capstat::select_value(records[r], outcome);
        treated[r] = records[r].capped;
        for (std::size_t c = 0; c < p; ++c) {
            x[r * p + c] = *capstat::select_value(records[r], covariates[c]);
        }
    }
    for (std::size_t c = 0; c < p; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += x[r * p + c];
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) ss += (x[r * p + c] - mean) * (x[r * p + c] - mean);
        double sd = std::sqrt(ss / static_cast<double>(n - 1));
        if (sd == 0.0) throw std::runtime_error("oracle: constant covariate");
        for (std::size_t r = 0; r < n; ++r) x[r * p + c] = (x[r * p + c] - mean) / sd;
    }
    // Tie-break rank by job_id (stable on duplicates).
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return records[a].job_id < records[b].job_id;
    });
    std::vector<std::size_t> order(n);
    for (std::size_t r = 0; r < n; ++r) order[idx[r]] = r;

    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // All opposite-group candidates, fully sorted by (distance, order).
        std::vector<std::pair<double, std::size_t>> cands;
        for (std::size_t j = 0; j < n; ++j) {
            if (treated[j] == treated[i]) continue;
            double d2 = 0.0;
            for (std::size_t c = 0; c < p; ++c) {
                double d = x[i * p + c] - x[j * p + c];
                d2 += d * d;
            }
            cands.emplace_back(d2, j);
        }
        std::sort(cands.begin(), cands.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return order[a.second] < order[b.second];
        });
        std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), cands.size());
        double y_match = 0.0;
        for (std::size_t c = 0; c < take; ++c) y_match += y[cands[c].second];
        y_match /= static_cast<double>(take);
        acc += (treated[i] ? 1.0 : -1.0) * (y[i] - y_match);
    }
    return acc / static_cast<double>(n);
}

}  // namespace oracle
