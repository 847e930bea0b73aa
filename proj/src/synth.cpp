#include "capstat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "capstat/errors.hpp"
#include "capstat/rng.hpp"
#include "capstat/special.hpp"

namespace capstat {

namespace {

// Latent-score correlations tying utilization -> power -> temperature, so a
// utilization-keyed assignment mechanism confounds both outcomes.
constexpr double kRhoUtilPower = 0.6;
constexpr double kRhoPowerTemp = 0.7;

// Within-job sd hyperparameters (log-normal, median/sigma), drawn
// independently of the job's level so the treated/control sd ratio identifies
// variance_shrink_under_cap exactly.
constexpr double kSdMedianUtil = 8.0, kSdSigmaUtil = 0.6;
constexpr double kSdMedianPower = 12.0, kSdSigmaPower = 0.5;
constexpr double kSdMedianTemp = 4.0, kSdSigmaTemp = 0.5;

// Near-zero utilization mixture component (idle / IO-bound jobs).
constexpr double kZeroBetaA = 0.05;
constexpr double kZeroBetaB = 2.0;
constexpr double kBodyConcentration = 2.8;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

struct BetaMixture {
    double w = 0.0;       // weight of the near-zero component
    double body_a = 1.0;
    double body_b = 1.0;

    static BetaMixture from(const BaselineDist& d) {
        BetaMixture m;
        m.w = d.scale;
        double target_mean = d.location / 100.0;
        double zero_mean = kZeroBetaA / (kZeroBetaA + kZeroBetaB);
        double body_mean = (target_mean - m.w * zero_mean) / (1.0 - m.w);
        if (!(body_mean > 0.0 && body_mean < 1.0)) {
            throw ConfigError("beta_mixture location/scale yield body mean outside (0,1)");
        }
        m.body_a = body_mean * kBodyConcentration;
        m.body_b = (1.0 - body_mean) * kBodyConcentration;
        return m;
    }

    double cdf(double x) const {
        return w * regularized_incomplete_beta(kZeroBetaA, kZeroBetaB, x) +
               (1.0 - w) * regularized_incomplete_beta(body_a, body_b, x);
    }
};

// Monotone quantile lookup for the utilization mixture: the CDF is tabulated
// on a uniform 4097-knot grid of [0,1] and inverted by linear interpolation.
class UtilQuantile {
public:
    explicit UtilQuantile(const BetaMixture& mix) {
        cdf_.resize(kKnots + 1);
        for (std::size_t i = 0; i <= kKnots; ++i) {
            double x = static_cast<double>(i) / kKnots;
            cdf_[i] = mix.cdf(x);
        }
        cdf_.front() = 0.0;
        cdf_.back() = 1.0;
        for (std::size_t i = 1; i <= kKnots; ++i) cdf_[i] = std::max(cdf_[i], cdf_[i - 1]);
    }

    double operator()(double u) const {
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.begin()) return 0.0;
        if (it == cdf_.end()) return 1.0;
        std::size_t hi = static_cast<std::size_t>(it - cdf_.begin());
        double f_lo = cdf_[hi - 1];
        double f_hi = cdf_[hi];
        double frac = f_hi > f_lo ? (u - f_lo) / (f_hi - f_lo) : 0.0;
        return (static_cast<double>(hi - 1) + frac) / kKnots;
    }

private:
    static constexpr std::size_t kKnots = 4096;
    std::vector<double> cdf_;
};

}  // namespace

SynthConfig SynthConfig::defaults() {
    SynthConfig c;
    c.runtime = {BaselineDist::Family::lognormal, std::log(145.36), 1.679};
    c.utilization = {BaselineDist::Family::beta_mixture, 31.79, 0.33};
    c.power = {BaselineDist::Family::lognormal, std::log(53.99), 0.712};
    c.temperature = {BaselineDist::Family::truncated_normal, 39.66, 10.14};
    return c;
}

void SynthConfig::validate() const {
    if (n_jobs < 4) throw ConfigError("n_jobs must be >= 4 (got " + std::to_string(n_jobs) + ")");
    if (!(cap_fraction > 0.0 && cap_fraction < 1.0)) {
        throw ConfigError("cap_fraction must lie in (0,1)");
    }
    if (!(variance_shrink_under_cap > 0.0 && variance_shrink_under_cap <= 1.0)) {
        throw ConfigError("variance_shrink_under_cap must lie in (0,1]");
    }
    auto check_dist = [](const BaselineDist& d, const char* name, bool is_util) {
        if (!(d.scale > 0.0)) {
            throw ConfigError(std::string(name) + ": scale must be > 0");
        }
        if (d.family == BaselineDist::Family::beta_mixture) {
            if (!is_util) {
                throw ConfigError(std::string(name) +
                                  ": beta_mixture is only valid for utilization");
            }
            if (!(d.scale < 1.0)) {
                throw ConfigError("utilization: mixture weight (scale) must lie in (0,1)");
            }
            BetaMixture::from(d);  // validates derived shapes
        }
    };
    check_dist(runtime, "runtime", false);
    check_dist(utilization, "utilization", true);
    check_dist(power, "power", false);
    check_dist(temperature, "temperature", false);
    if (!std::isfinite(true_ate_power_w) || !std::isfinite(true_ate_temp_c) ||
        !std::isfinite(selection_bias_strength) || !std::isfinite(ate_utilization_interaction)) {
        throw ConfigError("effect parameters must be finite");
    }
}

namespace {

// Percentile-shaped summary of a within-job Normal(mean, sd) time series of n
// samples; extremes sit at the 1/(2n) tail quantile. Clamping to the field's
// physical range is monotone, so the percentile ordering invariant holds.
StatSummary summary_from_moments(double mean, double sd, std::size_t n, double lo, double hi) {
    StatSummary s;
    s.n = n;
    auto clamp = [&](double v) { return std::min(std::max(v, lo), hi); };
    if (n >= 2) s.sd = sd;
    if (sd <= 0.0) {
        double v = clamp(mean);
        s.mean = s.min = s.p25 = s.p50 = s.p75 = s.max = v;
        s.p10 = s.p90 = v;
        return s;
    }
    double q_ext = std::min(0.5 / static_cast<double>(n), 0.10);
    double z_ext = normal_quantile(q_ext);
    static const double z10 = normal_quantile(0.10);
    static const double z25 = normal_quantile(0.25);
    s.mean = clamp(mean);
    s.min = clamp(mean + sd * z_ext);
    s.p10 = clamp(mean + sd * z10);
    s.p25 = clamp(mean + sd * z25);
    s.p50 = clamp(mean);
    s.p75 = clamp(mean - sd * z25);
    s.p90 = clamp(mean - sd * z10);
    s.max = clamp(mean - sd * z_ext);
    return s;
}

struct FieldDraw {
    double value = 0.0;  // between-job level
};

double draw_from_family(const BaselineDist& d, double z, const UtilQuantile* util_q) {
    switch (d.family) {
        case BaselineDist::Family::lognormal:
            return std::exp(d.location + d.scale * z);
        case BaselineDist::Family::truncated_normal: {
            double lo = d.location - 4.0 * d.scale;
            double hi = d.location + 4.0 * d.scale;
            return std::min(std::max(d.location + d.scale * z, lo), hi);
        }
        case BaselineDist::Family::beta_mixture:
            return 100.0 * (*util_q)(normal_cdf(z));
    }
    return d.location;
}

}  // namespace

SynthCohorts generate_cohorts(const SynthConfig& config, Exec exec) {
    config.validate();

    const UtilQuantile util_q{BetaMixture::from(config.utilization)};
    const double rho_up = kRhoUtilPower;
    const double rho_pt = kRhoPowerTemp;
    const double treat_logit = logit(config.cap_fraction);
    const double util_center = config.utilization.location;

    std::size_t n = config.n_jobs;
    std::vector<JobRecord> records(n);
    std::vector<char> treated_flag(n);
    Rng root(config.seed);

    auto make_job = [&](std::size_t i) {
        Rng r = root.substream(i);
        // Fixed draw order; every branch consumes the same stream prefix.
        double z_u = r.normal();
        double e_p = r.normal();
        double e_t = r.normal();
        double z_r = r.normal();
        double z_su = r.normal();
        double z_sp = r.normal();
        double z_st = r.normal();
        double u_treat = r.uniform();

        double util = draw_from_family(config.utilization, z_u, &util_q);
        double z_p = rho_up * z_u + std::sqrt(1.0 - rho_up * rho_up) * e_p;
        double power_mean = draw_from_family(config.power, z_p, nullptr);
        double z_t = rho_pt * z_p + std::sqrt(1.0 - rho_pt * rho_pt) * e_t;
        double temp_mean = draw_from_family(config.temperature, z_t, nullptr);
        double runtime = draw_from_family(config.runtime, z_r, nullptr);

        double sd_u = std::exp(std::log(kSdMedianUtil) + kSdSigmaUtil * z_su);
        double sd_p = std::exp(std::log(kSdMedianPower) + kSdSigmaPower * z_sp);
        double sd_t = std::exp(std::log(kSdMedianTemp) + kSdSigmaTemp * z_st);

        double p_treat = config.selection_bias_strength == 0.0
                             ? config.cap_fraction
                             : logistic(treat_logit + config.selection_bias_strength * z_u);
        bool treated = u_treat < p_treat;

        if (treated) {
            double eff = 1.0;
            if (config.ate_utilization_interaction != 0.0) {
                eff = std::max(
                    0.0, 1.0 + config.ate_utilization_interaction * (util - util_center) / 100.0);
            }
            power_mean += config.true_ate_power_w * eff;
            temp_mean += config.true_ate_temp_c * eff;
            sd_p *= config.variance_shrink_under_cap;
            sd_t *= config.variance_shrink_under_cap;
        }
        power_mean = std::max(power_mean, 1.0);

        std::size_t n_samples = static_cast<std::size_t>(
            std::max<long long>(2, std::llround(runtime * 60000.0 / kDefaultPollIntervalMs)));

        JobRecord rec;
        char buf[24];
        std::snprintf(buf, sizeof buf, "job-%06zu", i);
        rec.job_id = buf;
        rec.capped = treated;
        rec.runtime_min = runtime;
        rec.utilization = summary_from_moments(util, sd_u, n_samples, 0.0, 100.0);
        rec.temperature = summary_from_moments(temp_mean, sd_t, n_samples, -49.0, 1e9);
        rec.power = summary_from_moments(power_mean, sd_p, n_samples, 0.5, 1e9);
        records[i] = std::move(rec);
        treated_flag[i] = treated;
    };

    if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            make_job(static_cast<std::size_t>(i));
        }
#else
        for (std::size_t i = 0; i < n; ++i) make_job(i);
#endif
    } else {
        for (std::size_t i = 0; i < n; ++i) make_job(i);
    }

    SynthCohorts out;
    out.treated.label = "capped";
    out.control.label = "uncapped";
    for (std::size_t i = 0; i < n; ++i) {
        (treated_flag[i] ? out.treated : out.control).records.push_back(std::move(records[i]));
    }
    out.truth.true_ate_power_w = config.true_ate_power_w;
    out.truth.true_ate_temp_c = config.true_ate_temp_c;
    out.truth.covariate_dependent_assignment = config.selection_bias_strength != 0.0;
    return out;
}

SampleSeries generate_raw_series(const SynthConfig& config, const JobRecord& tmpl,
                                 double poll_interval_ms) {
    config.validate();
    if (!(poll_interval_ms >= 1.0)) throw ConfigError("poll interval must be >= 1 ms");
    if (!(tmpl.runtime_min > 0.0)) throw ConfigError("template runtime must be > 0");

    // Substream keyed on the job id so series are reproducible per job.
    std::uint64_t key = 1469598103934665603ULL;  // FNV-1a
    for (char ch : tmpl.job_id) {
        key ^= static_cast<unsigned char>(ch);
        key *= 1099511628211ULL;
    }
    Rng r = Rng(config.seed).substream(key);

    auto n_samples = static_cast<std::size_t>(
        std::max<long long>(2, std::llround(tmpl.runtime_min * 60000.0 / poll_interval_ms)));

    SampleSeries series;
    series.job_id = tmpl.job_id;
    series.gpu_index = 0;
    series.samples.resize(n_samples);
    double sd_u = tmpl.utilization.sd.value_or(0.0);
    double sd_t = tmpl.temperature.sd.value_or(0.0);
    double sd_p = tmpl.power.sd.value_or(0.0);
    for (std::size_t i = 0; i < n_samples; ++i) {
        Sample& s = series.samples[i];
        s.t_ms = std::llround(static_cast<double>(i) * poll_interval_ms);
        s.util_pct = std::clamp(r.normal(tmpl.utilization.mean, sd_u), 0.0, 100.0);
        s.temp_c = std::max(r.normal(tmpl.temperature.mean, sd_t), -49.0);
        s.power_w = std::max(r.normal(tmpl.power.mean, sd_p), 0.1);
    }
    return series;
}

namespace {

using nlohmann::json;

BaselineDist::Family family_from_name(const std::string& name) {
    if (name == "lognormal") return BaselineDist::Family::lognormal;
    if (name == "truncated_normal") return BaselineDist::Family::truncated_normal;
    if (name == "beta_mixture") return BaselineDist::Family::beta_mixture;
    throw ConfigError("unknown distribution family '" + name + "'");
}

std::string family_name(BaselineDist::Family f) {
    switch (f) {
        case BaselineDist::Family::lognormal: return "lognormal";
        case BaselineDist::Family::truncated_normal: return "truncated_normal";
        case BaselineDist::Family::beta_mixture: return "beta_mixture";
    }
    return "lognormal";
}

BaselineDist baseline_from_json(const json& j, const std::string& name) {
    BaselineDist d;
    for (auto& [key, value] : j.items()) {
        if (key == "family") {
            d.family = family_from_name(value.get<std::string>());
        } else if (key == "location") {
            d.location = value.get<double>();
        } else if (key == "scale") {
            d.scale = value.get<double>();
        } else {
            throw ConfigError("unknown key '" + key + "' in baselines." + name);
        }
    }
    return d;
}

}  // namespace

SynthConfig parse_synth_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    SynthConfig c = SynthConfig::defaults();
    try {
        for (auto& [key, value] : j.items()) {
            if (key == "n_jobs") {
                c.n_jobs = value.get<std::size_t>();
            } else if (key == "cap_fraction") {
                c.cap_fraction = value.get<double>();
            } else if (key == "true_ate_power_w") {
                c.true_ate_power_w = value.get<double>();
            } else if (key == "true_ate_temp_c") {
                c.true_ate_temp_c = value.get<double>();
            } else if (key == "selection_bias_strength") {
                c.selection_bias_strength = value.get<double>();
            } else if (key == "variance_shrink_under_cap") {
                c.variance_shrink_under_cap = value.get<double>();
            } else if (key == "ate_utilization_interaction") {
                c.ate_utilization_interaction = value.get<double>();
            } else if (key == "seed") {
                c.seed = value.get<std::uint64_t>();
            } else if (key == "baselines") {
                for (auto& [field, dist] : value.items()) {
                    if (field == "runtime") {
                        c.runtime = baseline_from_json(dist, field);
                    } else if (field == "utilization") {
                        c.utilization = baseline_from_json(dist, field);
                    } else if (field == "power") {
                        c.power = baseline_from_json(dist, field);
                    } else if (field == "temperature") {
                        c.temperature = baseline_from_json(dist, field);
                    } else {
                        throw ConfigError("unknown baseline field '" + field + "'");
                    }
                }
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    c.validate();
    return c;
}

std::string synth_config_to_json(const SynthConfig& c) {
    auto dist = [](const BaselineDist& d) {
        return json{{"family", family_name(d.family)},
                    {"location", d.location},
                    {"scale", d.scale}};
    };
    json j{{"n_jobs", c.n_jobs},
           {"cap_fraction", c.cap_fraction},
           {"true_ate_power_w", c.true_ate_power_w},
           {"true_ate_temp_c", c.true_ate_temp_c},
           {"selection_bias_strength", c.selection_bias_strength},
           {"variance_shrink_under_cap", c.variance_shrink_under_cap},
           {"ate_utilization_interaction", c.ate_utilization_interaction},
           {"seed", c.seed},
           {"baselines",
            json{{"runtime", dist(c.runtime)},
                 {"utilization", dist(c.utilization)},
                 {"power", dist(c.power)},
                 {"temperature", dist(c.temperature)}}}};
    return j.dump(2) + "\n";
}

std::string ground_truth_to_json(const GroundTruth& truth) {
    json j{{"true_ate_power_w", truth.true_ate_power_w},
           {"true_ate_temp_c", truth.true_ate_temp_c},
           {"assignment_mechanism",
            truth.covariate_dependent_assignment ? "covariate-dependent" : "randomized"}};
    return j.dump(2) + "\n";
}

GroundTruth parse_ground_truth(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("ground truth sidecar is not valid JSON: ") + e.what());
    }
    GroundTruth t;
    try {
        t.true_ate_power_w = j.at("true_ate_power_w").get<double>();
        t.true_ate_temp_c = j.at("true_ate_temp_c").get<double>();
        t.covariate_dependent_assignment =
            j.at("assignment_mechanism").get<std::string>() == "covariate-dependent";
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad ground truth sidecar: ") + e.what());
    }
    return t;
}

}  // namespace capstat
