#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "distributions.hpp"
#include "error.hpp"
#include "instance.hpp"
#include "simulator.hpp"

namespace blindq {

inline constexpr double kZ95 = 1.959963984540054;

enum class Functional { P, N, I, W, T };

inline std::string_view functional_name(Functional f) {
    switch (f) {
        case Functional::P: return "P";
        case Functional::N: return "N";
        case Functional::I: return "I";
        case Functional::W: return "W";
        case Functional::T: return "T";
    }
    return "?";
}

struct MomentEstimate {
    Functional functional;
    double order;
    double point;
    double ci_halfwidth;  // 95%
    std::size_t cycles_used;
    // Set when `order` exceeds the supremum of finite moment orders of the
    // size law: the sample moment is finite but estimates nothing.
    bool beyond_moment_order = false;

    double lo() const { return point - ci_halfwidth; }
    double hi() const { return point + ci_halfwidth; }
    bool covers(double value) const { return lo() <= value && value <= hi(); }
    double relative_error(double value) const { return std::abs(point - value) / std::abs(value); }
};

// Regenerative ratio estimator sum(cycle sojourn sums) / sum(N) with a
// delta-method interval over i.i.d. cycles.
inline MomentEstimate regen_mean_sojourn(const SimResult& result) {
    const auto& cycles = result.cycles;
    std::size_t n = cycles.size();
    if (n < 2) throw InsufficientDataError("regenerative estimate needs at least 2 cycles");
    double sum_y = 0.0, sum_n = 0.0;
    for (const CycleStats& c : cycles) {
        sum_y += c.sum_sojourn;
        sum_n += static_cast<double>(c.record.n);
    }
    double ratio = sum_y / sum_n;
    double ss = 0.0;
    for (const CycleStats& c : cycles) {
        double d = c.sum_sojourn - ratio * static_cast<double>(c.record.n);
        ss += d * d;
    }
    double dn = static_cast<double>(n);
    double sigma = std::sqrt(ss / (dn - 1.0));
    double mean_n = sum_n / dn;
    return MomentEstimate{Functional::T, 1.0, ratio, kZ95 * sigma / (mean_n * std::sqrt(dn)), n};
}

// Sample mean of x^kappa with a CLT interval.
inline MomentEstimate functional_moment(std::span<const double> values, Functional functional,
                                        double kappa, double moment_order = kInf) {
    if (!(kappa >= 1.0)) throw ParameterError("moment order must be >= 1");
    if (values.empty()) throw InsufficientDataError("no samples for moment estimate");
    std::size_t n = values.size();
    double sum = 0.0;
    for (double x : values) sum += std::pow(x, kappa);
    double mean = sum / static_cast<double>(n);
    double hw = kInf;
    if (n >= 2) {
        double ss = 0.0;
        for (double x : values) {
            double d = std::pow(x, kappa) - mean;
            ss += d * d;
        }
        hw = kZ95 * std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    return MomentEstimate{functional, kappa, mean, hw, n, kappa > moment_order};
}

// P, N or I of each cycle; the first cycle has no I and is skipped for it.
inline std::vector<double> cycle_values(std::span<const CycleRecord> cycles, Functional f) {
    std::vector<double> out;
    out.reserve(cycles.size());
    for (const CycleRecord& c : cycles) {
        switch (f) {
            case Functional::P: out.push_back(c.busy); break;
            case Functional::N: out.push_back(static_cast<double>(c.n)); break;
            case Functional::I:
                if (c.idle) out.push_back(*c.idle);
                break;
            default: throw ParameterError("cycle_values supports P, N and I only");
        }
    }
    return out;
}

inline std::vector<CycleRecord> records(const SimResult& result) {
    std::vector<CycleRecord> out;
    out.reserve(result.cycles.size());
    for (const CycleStats& c : result.cycles) out.push_back(c.record);
    return out;
}

inline MomentEstimate functional_moment(std::span<const CycleRecord> cycles, Functional f, double kappa,
                                        double moment_order = kInf) {
    auto values = cycle_values(cycles, f);
    return functional_moment(values, f, kappa, moment_order);
}

struct IdleCountCheck {
    double lhs;           // mean I
    double rhs;           // mu * mean N
    double gap;           // lhs - rhs
    double gap_ci;        // 95% half-width of the gap
    double relative_gap;  // gap / lhs
    std::size_t pairs;

    bool covers_zero() const { return std::abs(gap) <= gap_ci; }
};

// E[I] = mu E[N]. Each busy period is paired with the idle period that
// follows it, so the pairs are i.i.d.
inline IdleCountCheck check_IN_identity(std::span<const CycleRecord> cycles, double mu) {
    if (cycles.size() < 2) throw InsufficientDataError("identity check needs at least 2 cycles");
    std::size_t m = cycles.size() - 1;
    double sum_i = 0.0, sum_n = 0.0;
    std::vector<double> diffs;
    diffs.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        if (!cycles[k + 1].idle) throw InsufficientDataError("cycle without idle record");
        double idle = *cycles[k + 1].idle;
        double count = static_cast<double>(cycles[k].n);
        sum_i += idle;
        sum_n += count;
        diffs.push_back(idle - mu * count);
    }
    double dm = static_cast<double>(m);
    double lhs = sum_i / dm;
    double rhs = mu * sum_n / dm;
    double gap = lhs - rhs;
    double ci = kInf;
    if (m >= 2) {
        double mean_d = 0.0;
        for (double d : diffs) mean_d += d;
        mean_d /= dm;
        double ss = 0.0;
        for (double d : diffs) ss += (d - mean_d) * (d - mean_d);
        ci = kZ95 * std::sqrt(ss / (dm - 1.0) / dm);
    }
    return IdleCountCheck{lhs, rhs, gap, ci, gap / lhs, m};
}

struct NetputWalk {
    std::vector<double> partial_sums;  // S_0 = 0, S_m = sum_{i<=m} (B_i - A_i)
    std::vector<double> workload;      // W at each arrival, excluding the arriving job
};

// A_i is the gap between releases i and i+1.
inline NetputWalk lindley_walk(const Instance& inst) {
    NetputWalk walk;
    auto jobs = inst.jobs();
    if (jobs.empty()) {
        walk.partial_sums.push_back(0.0);
        return walk;
    }
    walk.partial_sums.reserve(jobs.size());
    walk.workload.reserve(jobs.size());
    walk.partial_sums.push_back(0.0);
    walk.workload.push_back(0.0);
    for (std::size_t i = 0; i + 1 < jobs.size(); ++i) {
        double netput = jobs[i].size - (jobs[i + 1].release - jobs[i].release);
        walk.partial_sums.push_back(walk.partial_sums.back() + netput);
        walk.workload.push_back(std::max(walk.workload.back() + netput, 0.0));
    }
    return walk;
}

struct AnalysisParams {
    double alpha = kInf;  // finite-moment order of the size law
    double s = 1.5;
    double zeta = 15.0;
    double rho = 0.5;

    double threshold() const { return std::pow(1.0 - rho, -zeta); }

    void validate() const {
        if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("analysis: rho must lie in (0,1)");
        if (!(alpha > 1.0)) throw ParameterError("analysis: moment order alpha must exceed 1");
        double s_min = std::isinf(alpha) ? 1.0 : alpha / (alpha - 1.0);
        if (!(s > s_min && s < 2.0))
            throw ParameterError("analysis: s must lie in (alpha/(alpha-1), 2)");
        if (!(zeta > (4.0 + 2.0 * s) / (2.0 - s)))
            throw ParameterError("analysis: zeta must exceed (4+2s)/(2-s)");
    }
};

struct TailSplit {
    double small;
    double large;
    double threshold;  // N0
    std::size_t large_cycles;
};

// Per-job sojourn contributions of cycles with N <= N0 and N > N0.
inline TailSplit tail_split(const SimResult& result, const AnalysisParams& params) {
    params.validate();
    if (result.cycles.empty()) throw InsufficientDataError("tail split needs cycles");
    double n0 = params.threshold();
    double small = 0.0, large = 0.0, total_n = 0.0;
    std::size_t large_cycles = 0;
    for (const CycleStats& c : result.cycles) {
        double n = static_cast<double>(c.record.n);
        total_n += n;
        if (n <= n0) {
            small += c.sum_sojourn;
        } else {
            large += c.sum_sojourn;
            ++large_cycles;
        }
    }
    return TailSplit{small / total_n, large / total_n, n0, large_cycles};
}

struct HolderDiagnostic {
    double bound;
    double p_order;       // s/(s-1)
    double outer_power;   // (s-1)/s
    double tail_power;    // (2-s)/(2s)
    MomentEstimate p_moment;
    MomentEstimate n_second;
    MomentEstimate n_mean;
    bool beyond_moment_order;
};

// Plug-in value of E[P^{s/(s-1)}]^{(s-1)/s} E[N^2]^{1/2} E[N]^{(2-s)/(2s)-1} / N0^{(2-s)/(2s)},
// an upper bound on the large-cycle contribution.
inline HolderDiagnostic holder_diagnostic(const SimResult& result, const AnalysisParams& params) {
    params.validate();
    if (result.cycles.size() < 2) throw InsufficientDataError("holder diagnostic needs at least 2 cycles");
    auto cycles = records(result);
    double s = params.s;
    double q = s / (s - 1.0);
    double outer = (s - 1.0) / s;
    double tail = (2.0 - s) / (2.0 * s);
    auto p = functional_moment(std::span<const CycleRecord>(cycles), Functional::P, q, params.alpha);
    auto n2 = functional_moment(std::span<const CycleRecord>(cycles), Functional::N, 2.0, params.alpha);
    auto n1 = functional_moment(std::span<const CycleRecord>(cycles), Functional::N, 1.0, params.alpha);
    double bound = std::pow(p.point, outer) * std::sqrt(n2.point) * std::pow(n1.point, tail - 1.0) /
                   std::pow(params.threshold(), tail);
    return HolderDiagnostic{bound, q, outer, tail, p, n2, n1,
                            p.beyond_moment_order || n2.beyond_moment_order};
}

struct FitPoint {
    double rho;
    double value;
};

struct ExponentFit {
    double slope;
    double intercept;
    double slope_se;
    std::size_t points;
};

// Least squares of log(value) on log(1 - rho).
inline ExponentFit exponent_fit(std::span<const FitPoint> points) {
    if (points.size() < 3) throw InsufficientDataError("exponent fit needs at least 3 points");
    std::vector<double> xs, ys;
    for (const FitPoint& p : points) {
        if (!(p.rho > 0.0 && p.rho < 1.0) || !(p.value > 0.0))
            throw ParameterError("exponent fit needs rho in (0,1) and positive values");
        xs.push_back(std::log(1.0 - p.rho));
        ys.push_back(std::log(p.value));
    }
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (points[i].rho == points[j].rho) throw ParameterError("exponent fit needs distinct rho");
    double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    double slope = sxy / sxx;
    double intercept = my - slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double r = ys[i] - intercept - slope * xs[i];
        sse += r * r;
    }
    double se = std::sqrt(sse / (n - 2.0) / sxx);
    return ExponentFit{slope, intercept, se, xs.size()};
}

struct RatioRow {
    double rho;
    double policy_mean;
    double srpt_mean;
    double ratio;
    double normalized;  // ratio / log(1/(1-rho))
};

inline std::vector<RatioRow> ratio_curve(std::span<const FitPoint> policy, std::span<const FitPoint> srpt) {
    if (policy.size() != srpt.size()) throw ParameterError("ratio curve: grids differ in length");
    std::vector<RatioRow> rows;
    for (std::size_t i = 0; i < policy.size(); ++i) {
        if (policy[i].rho != srpt[i].rho) throw ParameterError("ratio curve: grids differ");
        double ratio = policy[i].value / srpt[i].value;
        double norm = std::log(1.0 / (1.0 - policy[i].rho));
        rows.push_back({policy[i].rho, policy[i].value, srpt[i].value, ratio, ratio / norm});
    }
    return rows;
}

}  // namespace blindq
