#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spinquant/errors.hpp"
#include "spinquant/types.hpp"

namespace spinquant {

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

/// Velocity traces interpolated onto one uniform grid covering the
/// intersection of their time supports. aligned[r][c] is run r at times[c].
struct AlignedTraces {
    std::vector<double> times;
    std::vector<std::vector<double>> values;
};

namespace detail {

inline double interp_velocity(const VelocityTrace& tr, double t) {
    const auto& ts = tr.times;
    if (t <= ts.front()) return tr.velocities.front();
    if (t >= ts.back()) return tr.velocities.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
    const std::size_t lo = hi - 1;
    const double u = (t - ts[lo]) / (ts[hi] - ts[lo]);
    return tr.velocities[lo] + u * (tr.velocities[hi] - tr.velocities[lo]);
}

} // namespace detail

inline AlignedTraces resample_common(const std::vector<VelocityTrace>& traces, double grid_hz) {
    if (traces.size() < 2)
        throw value_error("resample_common: need at least 2 traces");
    if (!(grid_hz > 0.0))
        throw value_error("resample_common: grid_hz must be positive");
    double start = -1e300, end = 1e300;
    for (const auto& tr : traces) {
        if (tr.size() < 2)
            throw value_error("resample_common: trace with fewer than 2 samples");
        start = std::max(start, tr.times.front());
        end = std::min(end, tr.times.back());
    }
    if (!(end > start))
        throw alignment_error("resample_common: traces share no common time support");

    const auto count = static_cast<std::size_t>(std::floor((end - start) * grid_hz + 1e-9)) + 1;
    AlignedTraces out;
    out.times.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        out.times[i] = start + static_cast<double>(i) / grid_hz;
    for (const auto& tr : traces) {
        std::vector<double> row(count);
        for (std::size_t i = 0; i < count; ++i) row[i] = detail::interp_velocity(tr, out.times[i]);
        out.values.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dispersion statistics
// ---------------------------------------------------------------------------

/// Mean trace over runs and the RMS of the per-sample deviations from it.
inline std::pair<VelocityTrace, double> intra_dispersion(const AlignedTraces& aligned) {
    const std::size_t rows = aligned.values.size();
    const std::size_t cols = aligned.times.size();
    if (rows < 2)
        throw value_error("intra_dispersion: need at least 2 runs");

    std::vector<double> mean(cols, 0.0);
    for (const auto& row : aligned.values)
        for (std::size_t c = 0; c < cols; ++c) mean[c] += row[c];
    for (double& m : mean) m /= static_cast<double>(rows);

    double ss = 0.0;
    for (const auto& row : aligned.values)
        for (std::size_t c = 0; c < cols; ++c) {
            const double d = row[c] - mean[c];
            ss += d * d;
        }
    const double rms = std::sqrt(ss / static_cast<double>(rows * cols));
    return {VelocityTrace(aligned.times, std::move(mean)), rms};
}

struct InterStats {
    double rms = 0.0;
    double mean = 0.0;
    double std_dev = 0.0; // population convention
};

/// Statistics of d(t) = meanA(t) - meanB(t) on the common grid.
inline InterStats inter_difference(const VelocityTrace& mean_a, const VelocityTrace& mean_b,
                                   double grid_hz = 10.0) {
    const AlignedTraces ab = resample_common({mean_a, mean_b}, grid_hz);
    const std::size_t n = ab.times.size();
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = ab.values[0][i] - ab.values[1][i];
        sum += d;
        sum2 += d * d;
    }
    InterStats s;
    s.mean = sum / static_cast<double>(n);
    s.rms = std::sqrt(sum2 / static_cast<double>(n));
    const double var = sum2 / static_cast<double>(n) - s.mean * s.mean;
    s.std_dev = std::sqrt(std::max(var, 0.0));
    return s;
}

// ---------------------------------------------------------------------------
// One-way ANOVA
// ---------------------------------------------------------------------------

namespace detail {

/// Continued-fraction core of the regularized incomplete beta (modified
/// Lentz iteration).
inline double beta_cf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 3e-16, fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw numeric_error("incomplete beta continued fraction did not converge");
}

} // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double inc_beta_reg(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw value_error("inc_beta_reg: a and b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0))
        return bt * detail::beta_cf(a, b, x) / a;
    return 1.0 - bt * detail::beta_cf(b, a, 1.0 - x) / b;
}

struct AnovaResult {
    double f_stat = 0.0;
    double p_value = 1.0;
    bool degenerate = false; // zero within-group variance with unequal means
};

/// Classical one-way F test: between-group over within-group mean squares,
/// p from the F distribution via the regularized incomplete beta.
inline AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2)
        throw value_error("one_way_anova: need at least 2 groups");
    std::size_t total = 0;
    double grand_sum = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2)
            throw value_error("one_way_anova: every group needs at least 2 samples");
        total += g.size();
        for (double x : g) grand_sum += x;
    }
    const double grand_mean = grand_sum / static_cast<double>(total);

    double ss_between = 0.0, ss_within = 0.0;
    for (const auto& g : groups) {
        double gsum = 0.0;
        for (double x : g) gsum += x;
        const double gmean = gsum / static_cast<double>(g.size());
        ss_between += static_cast<double>(g.size()) * (gmean - grand_mean) * (gmean - grand_mean);
        for (double x : g) ss_within += (x - gmean) * (x - gmean);
    }

    const double df1 = static_cast<double>(groups.size()) - 1.0;
    const double df2 = static_cast<double>(total) - static_cast<double>(groups.size());

    AnovaResult r;
    if (ss_between == 0.0) {
        r.f_stat = 0.0;
        r.p_value = 1.0;
        return r;
    }
    if (ss_within == 0.0) {
        r.f_stat = std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        r.degenerate = true;
        return r;
    }
    r.f_stat = (ss_between / df1) / (ss_within / df2);
    r.p_value = inc_beta_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * r.f_stat));
    return r;
}

// ---------------------------------------------------------------------------
// Consistency report
// ---------------------------------------------------------------------------

/// Agreement statistics for repeated runs, optionally compared against a
/// second group (e.g. another modality preset). All velocities in Hz.
struct ConsistencyReport {
    VelocityTrace mean_trace;          // mean over every supplied run
    double intra_rms = 0.0;            // group A dispersion
    std::optional<double> intra_rms_b; // group B dispersion
    std::optional<InterStats> inter;   // meanA - meanB statistics
    double max_velocity = 0.0;         // max of mean_trace
    std::optional<AnovaResult> anova;  // group A vs group B
    std::string anova_mode;            // "per_sample" or "per_run_mean"
    double grid_hz = 10.0;
};

struct ReportOptions {
    double grid_hz = 10.0;
    bool anova_per_run_mean = false; // false: pool per-time samples per group
};

inline ConsistencyReport build_report(const std::vector<VelocityTrace>& group_a,
                                      const std::vector<VelocityTrace>& group_b = {},
                                      const ReportOptions& opt = {}) {
    if (group_a.size() < 2)
        throw value_error("build_report: group A needs at least 2 traces");

    ConsistencyReport rep;
    rep.grid_hz = opt.grid_hz;
    rep.anova_mode = opt.anova_per_run_mean ? "per_run_mean" : "per_sample";

    const AlignedTraces a = resample_common(group_a, opt.grid_hz);
    auto [mean_a, rms_a] = intra_dispersion(a);
    rep.intra_rms = rms_a;

    if (group_b.empty()) {
        rep.mean_trace = mean_a;
        rep.max_velocity = rep.mean_trace.max_velocity();
        return rep;
    }
    if (group_b.size() < 2)
        throw value_error("build_report: group B needs at least 2 traces");

    const AlignedTraces b = resample_common(group_b, opt.grid_hz);
    auto [mean_b, rms_b] = intra_dispersion(b);
    rep.intra_rms_b = rms_b;
    rep.inter = inter_difference(mean_a, mean_b, opt.grid_hz);

    // Grand mean across every run of both groups, on the joint common grid.
    std::vector<VelocityTrace> all = group_a;
    all.insert(all.end(), group_b.begin(), group_b.end());
    const AlignedTraces joint = resample_common(all, opt.grid_hz);
    auto [grand_mean, grand_rms] = intra_dispersion(joint);
    (void)grand_rms;
    rep.mean_trace = grand_mean;
    rep.max_velocity = rep.mean_trace.max_velocity();

    // ANOVA observations per group: either every per-time sample of every
    // run on the joint grid, or one time-averaged mean per run.
    std::vector<std::vector<double>> obs(2);
    const std::size_t na = group_a.size();
    for (std::size_t r = 0; r < joint.values.size(); ++r) {
        auto& dst = obs[r < na ? 0 : 1];
        if (opt.anova_per_run_mean) {
            double s = 0.0;
            for (double v : joint.values[r]) s += v;
            dst.push_back(s / static_cast<double>(joint.times.size()));
        } else {
            dst.insert(dst.end(), joint.values[r].begin(), joint.values[r].end());
        }
    }
    if (obs[0].size() >= 2 && obs[1].size() >= 2)
        rep.anova = one_way_anova(obs);
    return rep;
}

inline nlohmann::ordered_json report_to_json(const ConsistencyReport& rep) {
    nlohmann::ordered_json j;
    j["grid_hz"] = rep.grid_hz;
    j["std_convention"] = "population";
    j["intra_rms_hz"] = rep.intra_rms;
    if (rep.intra_rms_b)
        j["intra_rms_b_hz"] = *rep.intra_rms_b;
    if (rep.inter) {
        j["inter_rms_hz"] = rep.inter->rms;
        j["inter_mean_hz"] = rep.inter->mean;
        j["inter_std_hz"] = rep.inter->std_dev;
    }
    j["max_velocity_hz"] = rep.max_velocity;
    if (rep.anova) {
        j["anova_mode"] = rep.anova_mode;
        j["anova_F"] = std::isfinite(rep.anova->f_stat)
                           ? nlohmann::ordered_json(rep.anova->f_stat)
                           : nlohmann::ordered_json("inf");
        j["anova_p"] = rep.anova->p_value;
        j["anova_degenerate"] = rep.anova->degenerate;
    }
    nlohmann::ordered_json trace = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < rep.mean_trace.size(); ++i)
        trace.push_back({rep.mean_trace.times[i], rep.mean_trace.velocities[i]});
    j["mean_trace"] = std::move(trace);
    return j;
}

/// Fixed-width text table with one row of the headline statistics.
inline std::string report_table(const ConsistencyReport& rep) {
    const auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };
    std::string out;
    out += "          RMS A   RMS B   RMS A-B   av +/- std A-B   max vel.\n";
    out += "  value   " + fmt(rep.intra_rms);
    out += "    " + (rep.intra_rms_b ? fmt(*rep.intra_rms_b) : std::string("-"));
    out += "    " + (rep.inter ? fmt(rep.inter->rms) : std::string("-"));
    out += "      " +
           (rep.inter ? fmt(rep.inter->mean) + " +/- " + fmt(rep.inter->std_dev)
                      : std::string("-"));
    out += "    " + fmt(rep.max_velocity) + "\n";
    if (rep.anova) {
        char buf[96];
        if (std::isfinite(rep.anova->f_stat))
            std::snprintf(buf, sizeof(buf), "  anova (%s): F = %.4g, p = %.4g\n",
                          rep.anova_mode.c_str(), rep.anova->f_stat, rep.anova->p_value);
        else
            std::snprintf(buf, sizeof(buf), "  anova (%s): F = inf, p = 0 (degenerate)\n",
                          rep.anova_mode.c_str());
        out += buf;
    }
    return out;
}

} // namespace spinquant
