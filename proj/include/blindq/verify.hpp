#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "distributions.hpp"
#include "estimators.hpp"
#include "instance.hpp"
#include "policies.hpp"
#include "random.hpp"
#include "simulator.hpp"
#include "sweep.hpp"

namespace blindq {

enum class Profile { quick, full };

struct VerifyOptions {
    Profile profile = Profile::full;
    std::uint64_t seed = 1;
    // Multiplies every tolerance; values below 1 tighten the suite.
    double tolerance_scale = 1.0;
    unsigned jobs = 1;
    std::vector<int> only;  // empty: all criteria

    bool selected(int id) const {
        return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
    }
    bool full() const { return profile == Profile::full; }
};

struct CriterionResult {
    int id;
    std::string name;
    bool pass;
    std::string detail;
    nlohmann::ordered_json data;
};

// Random small instance for property checks: 1..max_jobs jobs, exponential
// gaps with a random mean, sizes from a random light- or heavy-tailed law.
inline Instance random_small_instance(RandomStream& rng, std::size_t max_jobs) {
    std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_jobs));
    n = std::min(n, max_jobs);
    double gap_mean = 0.2 + 2.0 * rng.uniform();
    int family = static_cast<int>(rng.uniform() * 4.0);
    DistributionSpec size_law = exponential_with_mean(1.0);
    switch (family) {
        case 0: size_law = exponential_with_mean(0.5 + 2.0 * rng.uniform()); break;
        case 1: size_law = Uniform{0.05, 0.05 + 3.0 * rng.uniform()}; break;
        case 2: size_law = Pareto{1.2 + rng.uniform()}; break;
        default: size_law = Hyperexponential{{0.8, 0.2}, {2.0, 0.2}}; break;
    }
    DistributionSpec gap = exponential_with_mean(gap_mean);
    std::vector<double> releases, sizes;
    double t = rng.uniform() * gap_mean;
    for (std::size_t i = 0; i < n; ++i) {
        releases.push_back(t);
        sizes.push_back(sample(size_law, rng));
        t += sample(gap, rng);
    }
    return Instance(releases, sizes);
}

// Highest queue first, FCFS inside each queue: the ids must increase.
inline bool order_preserved(const std::vector<QueueView>& queues) {
    JobId last = 0;
    for (auto q = queues.rbegin(); q != queues.rend(); ++q) {
        for (JobId id : q->jobs) {
            if (id <= last) return false;
            last = id;
        }
    }
    return true;
}

namespace detail {

inline std::string fmt(double x, int precision = 6) {
    std::ostringstream os;
    os.precision(precision);
    os << x;
    return os.str();
}

inline Instance mm1(double rho, std::size_t cycles, std::uint64_t seed) {
    return generate(exponential_with_mean(1.0 / rho), exponential_with_mean(1.0), cycles, seed);
}

}  // namespace detail

inline CriterionResult criterion_blind_sojourn(const VerifyOptions& o) {
    const std::size_t cycles = 200000;
    const double tol = 0.02 * o.tolerance_scale;
    const PolicyKind blind[] = {PolicyKind::fifo, PolicyKind::ps,   PolicyKind::fb,
                                PolicyKind::mlf,  PolicyKind::rmlf, PolicyKind::ermlf};
    const double loads[] = {0.5, 0.8};
    std::vector<std::optional<MomentEstimate>> est(12);
    std::vector<Instance> insts(2);
    for (std::size_t i = 0; i < 2; ++i) insts[i] = detail::mm1(loads[i], cycles, derive_seed(o.seed, 1, i));
    parallel_for(12, o.jobs, [&](std::size_t t) {
        est[t] = regen_mean_sojourn(simulate(insts[t / 6], blind[t % 6], derive_seed(o.seed, 1, t)));
    });
    bool pass = true;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    std::string worst;
    double worst_err = -1.0;
    for (std::size_t t = 0; t < 12; ++t) {
        double rho = loads[t / 6];
        double target = 1.0 / (1.0 - rho);
        const MomentEstimate& e = *est[t];
        double err = e.relative_error(target);
        bool ok = e.covers(target) && err <= tol;
        pass = pass && ok;
        if (err > worst_err) {
            worst_err = err;
            worst = std::string(policy_name(blind[t % 6])) + "@" + detail::fmt(rho, 2);
        }
        rows.push_back({{"policy", policy_name(blind[t % 6])},
                        {"rho", rho},
                        {"target", target},
                        {"point", e.point},
                        {"ci", e.ci_halfwidth},
                        {"covers", e.covers(target)},
                        {"relative_error", err},
                        {"pass", ok}});
    }
    return {1, "blind-policy M/M/1 mean sojourn = E[B]/(1-rho)", pass,
            "worst relative error " + detail::fmt(worst_err, 3) + " (" + worst + "), tolerance " + detail::fmt(tol),
            rows};
}

inline CriterionResult criterion_srpt_heavy_traffic(const VerifyOptions& o) {
    const double rho = 0.9;
    const double target = 10.0 / (1.0 + std::log(10.0));
    const double tol = 0.10 * o.tolerance_scale;
    Instance inst = detail::mm1(rho, 200000, derive_seed(o.seed, 2, 0));
    MomentEstimate e = regen_mean_sojourn(simulate(inst, PolicyKind::srpt, derive_seed(o.seed, 2, 0)));
    double err = e.relative_error(target);
    bool pass = err <= tol;
    return {2, "SRPT M/M/1 at rho=0.9 vs heavy-traffic formula", pass,
            "E[T_srpt]=" + detail::fmt(e.point) + " +- " + detail::fmt(e.ci_halfwidth, 3) + ", formula " +
                detail::fmt(target) + ", relative error " + detail::fmt(err, 3) + ", tolerance " + detail::fmt(tol),
            {{"rho", rho}, {"target", target}, {"point", e.point}, {"ci", e.ci_halfwidth}, {"relative_error", err}}};
}

inline CriterionResult criterion_busy_period_moments(const VerifyOptions& o) {
    const std::size_t cycles = 1000000;
    Instance a = detail::mm1(0.8, cycles, derive_seed(o.seed, 3, 0));
    auto ca = busy_periods(a);
    MomentEstimate p1 = functional_moment(std::span<const CycleRecord>(ca), Functional::P, 1.0);
    Instance b = detail::mm1(0.5, cycles, derive_seed(o.seed, 3, 1));
    auto cb = busy_periods(b);
    MomentEstimate p2 = functional_moment(std::span<const CycleRecord>(cb), Functional::P, 2.0);
    double e1 = p1.relative_error(5.0), e2 = p2.relative_error(16.0);
    double t1 = 0.02 * o.tolerance_scale, t2 = 0.10 * o.tolerance_scale;
    bool pass = e1 <= t1 && e2 <= t2;
    return {3, "M/M/1 busy-period moments E[P], E[P^2]", pass,
            "E[P]@0.8=" + detail::fmt(p1.point) + " (err " + detail::fmt(e1, 3) + "), E[P^2]@0.5=" +
                detail::fmt(p2.point) + " (err " + detail::fmt(e2, 3) + ")",
            {{"E[P]", {{"rho", 0.8}, {"target", 5.0}, {"point", p1.point}, {"ci", p1.ci_halfwidth}, {"relative_error", e1}}},
             {"E[P^2]", {{"rho", 0.5}, {"target", 16.0}, {"point", p2.point}, {"ci", p2.ci_halfwidth}, {"relative_error", e2}}}}};
}

inline CriterionResult criterion_arrivals_per_cycle(const VerifyOptions& o) {
    const std::size_t cycles = 200000;
    const double tol = 0.02 * o.tolerance_scale;
    const DistributionSpec sizes = Hyperexponential{{0.5, 0.5}, {2.0, 1.0 / 1.5}};  // mean 1
    bool pass = true;
    nlohmann::ordered_json data;
    std::string summary;
    std::size_t k = 0;
    for (double rho : {0.5, 0.8}) {
        Instance inst = generate(exponential_with_mean(1.0 / rho), sizes, cycles, derive_seed(o.seed, 4, k++));
        auto cyc = busy_periods(inst);
        MomentEstimate n = functional_moment(std::span<const CycleRecord>(cyc), Functional::N, 1.0);
        double target = 1.0 / (1.0 - rho);
        double err = n.relative_error(target);
        pass = pass && err <= tol;
        data["E[N]@" + detail::fmt(rho, 2)] = {{"target", target}, {"point", n.point}, {"ci", n.ci_halfwidth}, {"relative_error", err}};
        summary += "E[N]@" + detail::fmt(rho, 2) + "=" + detail::fmt(n.point) + " ";
    }
    DistributionSpec arrival = Uniform{0.25, 2.25};
    DistributionSpec size = exponential_with_mean(1.0);
    Load load = system_load(arrival, size);
    Instance g = generate(arrival, size, cycles, derive_seed(o.seed, 4, k));
    auto cyc = busy_periods(g);
    IdleCountCheck check = check_IN_identity(cyc, load.mu);
    bool covers = std::abs(check.gap) <= check.gap_ci * o.tolerance_scale;
    pass = pass && covers;
    data["identity"] = {{"lhs", check.lhs}, {"rhs", check.rhs}, {"gap", check.gap}, {"gap_ci", check.gap_ci}, {"covers_zero", covers}};
    summary += "E[I]-mu*E[N]=" + detail::fmt(check.gap, 3) + " +- " + detail::fmt(check.gap_ci, 3);
    return {4, "E[N]=1/(1-rho) for M/G/1 and E[I]=mu*E[N] for GI/GI/1", pass, summary, data};
}

inline CriterionResult criterion_exponent_recovery(const VerifyOptions& o) {
    const std::size_t cycles = o.full() ? 500000 : 200000;
    const double loads[] = {0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<FitPoint> p2(5), n2(5);
    parallel_for(5, o.jobs, [&](std::size_t i) {
        auto cyc = busy_periods(detail::mm1(loads[i], cycles, derive_seed(o.seed, 5, i)));
        std::span<const CycleRecord> view(cyc);
        p2[i] = {loads[i], functional_moment(view, Functional::P, 2.0).point};
        n2[i] = {loads[i], functional_moment(view, Functional::N, 2.0).point};
    });
    ExponentFit fp = exponent_fit(p2), fn = exponent_fit(n2);
    double lo = -3.0 - 0.3 * o.tolerance_scale, hi = -3.0 + 0.3 * o.tolerance_scale;
    bool pass = fp.slope >= lo && fp.slope <= hi && fn.slope >= lo && fn.slope <= hi;
    return {5, "heavy-traffic exponents of E[P^2] and E[N^2]", pass,
            "slope E[P^2]=" + detail::fmt(fp.slope, 4) + ", slope E[N^2]=" + detail::fmt(fn.slope, 4) + ", band [" +
                detail::fmt(lo, 3) + "," + detail::fmt(hi, 3) + "]",
            {{"P2_slope", fp.slope}, {"P2_se", fp.slope_se}, {"N2_slope", fn.slope}, {"N2_se", fn.slope_se}}};
}

inline CriterionResult criterion_srpt_optimality(const VerifyOptions& o) {
    const std::size_t instances = o.full() ? 1000 : 200;
    RandomStream rng = make_stream(derive_seed(o.seed, 6, 0), 0);
    // Identical schedules reached through different event splits can differ
    // in the last bits of the summed completion times.
    const double roundoff = 1e-12;
    std::size_t violations = 0, checks = 0;
    double max_excess = 0.0;
    for (std::size_t k = 0; k < instances; ++k) {
        Instance inst = random_small_instance(rng, 20);
        for (std::uint64_t s = 0; s < 5; ++s) {
            std::uint64_t seed = derive_seed(o.seed, 6, k * 5 + s + 1);
            double srpt = simulate(inst, PolicyKind::srpt, seed).total_flow();
            for (PolicyKind p : kAllPolicies) {
                if (p == PolicyKind::srpt) continue;
                ++checks;
                double other = simulate(inst, p, seed).total_flow();
                double excess = (srpt - other) / std::max(1.0, other);
                max_excess = std::max(max_excess, excess);
                if (excess > roundoff) ++violations;
            }
        }
    }
    RandomStream rng4 = make_stream(derive_seed(o.seed, 6, 1), 0);
    std::size_t mismatches = 0;
    double max_gap = 0.0;
    const double tol = 1e-9 * o.tolerance_scale;
    for (std::size_t k = 0; k < instances; ++k) {
        Instance inst = random_small_instance(rng4, kBruteForceMaxJobs);
        double gap = std::abs(simulate(inst, PolicyKind::srpt, 0).total_flow() - brute_force_min_flow(inst));
        max_gap = std::max(max_gap, gap);
        if (!(gap <= tol)) ++mismatches;
    }
    bool pass = violations == 0 && mismatches == 0;
    return {6, "SRPT path-wise optimality and brute-force agreement", pass,
            std::to_string(violations) + "/" + std::to_string(checks) + " dominance violations (max relative excess " +
                detail::fmt(max_excess, 3) + "), " +
                std::to_string(mismatches) + "/" + std::to_string(instances) + " oracle mismatches (max gap " +
                detail::fmt(max_gap, 3) + ")",
            {{"violations", violations}, {"checks", checks}, {"max_relative_excess", max_excess}, {"oracle_mismatches", mismatches}, {"max_gap", max_gap}}};
}

inline bool busy_matches(const SimResult& r, std::span<const CycleRecord> cycles, double tol) {
    if (r.busy.size() != cycles.size()) return false;
    for (std::size_t i = 0; i < cycles.size(); ++i) {
        if (!(std::abs(r.busy[i].start - cycles[i].start) <= tol) || !(std::abs(r.busy[i].end - cycles[i].end) <= tol))
            return false;
    }
    return true;
}

inline CriterionResult criterion_work_conservation(const VerifyOptions& o) {
    RandomStream rng = make_stream(derive_seed(o.seed, 7, 0), 0);
    const double tol = 1e-9 * o.tolerance_scale;
    std::size_t failures = 0, runs = 0;
    for (std::size_t k = 0; k < 100; ++k) {
        Instance inst = random_small_instance(rng, 60);
        auto cycles = busy_periods(inst);
        for (PolicyKind p : kAllPolicies) {
            ++runs;
            if (!busy_matches(simulate(inst, p, derive_seed(o.seed, 7, k + 1)), cycles, tol)) ++failures;
        }
    }
    return {7, "work conservation: busy intervals equal workload busy periods", failures == 0,
            std::to_string(failures) + "/" + std::to_string(runs) + " runs with mismatched busy intervals",
            {{"failures", failures}, {"runs", runs}}};
}

// Instance whose smallest job lies in (0, 2).
inline Instance random_coupling_instance(RandomStream& rng) {
    std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 40.0);
    double min_size = std::exp(std::log(1e-3) + rng.uniform() * (std::log(2.0) - std::log(1e-3)));
    min_size = std::min(min_size, 1.999);
    double gap_mean = min_size * (0.3 + 3.0 * rng.uniform());
    double spread = 0.5 + 5.0 * rng.uniform();
    std::size_t smallest = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
    std::vector<double> releases, sizes;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        releases.push_back(t);
        double extra = -std::log(rng.uniform_open()) * spread;
        sizes.push_back(i == smallest ? min_size : min_size * (1.0 + extra));
        t += -std::log(rng.uniform_open()) * gap_mean;
        if (!(t > releases.back())) t = std::nextafter(releases.back(), kInf);
    }
    return Instance(releases, sizes);
}

inline CriterionResult criterion_scaling_coupling(const VerifyOptions& o) {
    const std::size_t instances = o.full() ? 200 : 50;
    const double tol = 1e-9 * o.tolerance_scale;
    RandomStream rng = make_stream(derive_seed(o.seed, 8, 0), 0);
    std::size_t failures = 0;
    double max_rel = 0.0;
    for (std::size_t k = 0; k < instances; ++k) {
        Instance original = random_coupling_instance(rng);
        int g = scaling_exponent(original);
        Instance shrunk = scale(original, std::ldexp(1.0, -g));
        std::uint64_t seed = derive_seed(o.seed, 8, k + 1);
        SimResult e = simulate(original, PolicyKind::ermlf, seed);
        SimResult r = simulate(shrunk, PolicyKind::rmlf, seed);
        bool ok = true;
        for (std::size_t j = 0; j < original.size(); ++j) {
            double expect = std::ldexp(r.jobs[j].sojourn, g);
            double rel = std::abs(e.jobs[j].sojourn - expect) / std::abs(e.jobs[j].sojourn);
            max_rel = std::max(max_rel, rel);
            ok = ok && rel <= tol;
        }
        if (!ok) ++failures;
    }
    return {8, "eRMLF on I equals 2^g x RMLF on 2^{-g} I (coupled factors)", failures == 0,
            std::to_string(failures) + "/" + std::to_string(instances) + " instances mismatched, max relative gap " +
                detail::fmt(max_rel, 3),
            {{"failures", failures}, {"instances", instances}, {"max_relative_gap", max_rel}}};
}

inline CriterionResult criterion_order_preservation(const VerifyOptions& o) {
    const std::size_t trajectories = o.full() ? 10000 : 2000;
    RandomStream rng = make_stream(derive_seed(o.seed, 9, 0), 0);
    std::size_t violations = 0, states = 0;
    auto check = [&](double, const auto& policy) {
        if constexpr (QueuePolicy<std::decay_t<decltype(policy)>>) {
            ++states;
            if (!order_preserved(policy.snapshot())) ++violations;
        }
    };
    for (std::size_t k = 0; k < trajectories; ++k) {
        Instance inst = random_small_instance(rng, 30);
        std::uint64_t seed = derive_seed(o.seed, 9, k + 1);
        simulate(inst, k % 2 == 0 ? PolicyKind::rmlf : PolicyKind::ermlf, seed, check);
    }
    return {9, "RMLF/eRMLF preserve release order across queues", violations == 0,
            std::to_string(violations) + " violating states out of " + std::to_string(states) + " in " +
                std::to_string(trajectories) + " trajectories",
            {{"violations", violations}, {"states", states}, {"trajectories", trajectories}}};
}

// Criteria 10 and 11 share one M/M/1 sweep of eRMLF and SRPT.
inline std::vector<CriterionResult> criteria_ratio_sweep(const VerifyOptions& o) {
    SweepConfig cfg;
    cfg.arrival = exponential_with_mean(1.0);
    cfg.size = exponential_with_mean(1.0);
    cfg.r_grid = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    cfg.policies = {PolicyKind::ermlf, PolicyKind::srpt};
    cfg.cycles = o.full() ? 200000 : 100000;
    cfg.seed = derive_seed(o.seed, 10, 0);
    cfg.kappas = {1.0};
    SweepReport rep = run_sweep(cfg, o.jobs);

    double base = rep.ratios.front().normalized;
    double worst = base;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const RatioRow& r : rep.ratios) {
        worst = std::max(worst, r.normalized);
        rows.push_back({{"rho", r.rho}, {"mean_ermlf", r.policy_mean}, {"mean_srpt", r.srpt_mean},
                        {"ratio", r.ratio}, {"normalized", r.normalized}});
    }
    bool bounded = worst <= base * (1.0 + o.tolerance_scale);
    bool below = true;
    double max_gap = 0.0;
    nlohmann::ordered_json tails = nlohmann::ordered_json::array();
    for (const auto& p : rep.points) {
        below = below && p.split.large < p.holder.bound;
        double sum = p.split.small + p.split.large;
        max_gap = std::max(max_gap, std::abs(sum - p.sojourn.point) / p.sojourn.point);
        tails.push_back({{"rho", p.rho}, {"policy", policy_name(p.policy)}, {"large", p.split.large},
                         {"bound", p.holder.bound}, {"small", p.split.small}, {"regen", p.sojourn.point}});
    }
    CriterionResult c10{10, "normalized eRMLF/SRPT ratio bounded; large-cycle part below Hoelder bound",
                        bounded && below,
                        "max normalized ratio " + detail::fmt(worst, 4) + " vs limit " +
                            detail::fmt(base * (1.0 + o.tolerance_scale), 4) + " (value at rho=0.5 " +
                            detail::fmt(base, 4) + ")" + (below ? ", large < bound everywhere" : ", large >= bound somewhere"),
                        {{"ratios", rows}, {"tails", tails}}};
    CriterionResult c11{11, "small + large reconstruct the regenerative mean", max_gap <= 1e-12 * o.tolerance_scale,
                        "max relative gap " + detail::fmt(max_gap, 3), {{"max_relative_gap", max_gap}}};
    return {c10, c11};
}

inline std::vector<CriterionResult> run_verification(const VerifyOptions& o,
                                                     const std::function<void(const CriterionResult&)>& report = {}) {
    std::vector<CriterionResult> out;
    auto add = [&](CriterionResult r) {
        if (report) report(r);
        out.push_back(std::move(r));
    };
    if (o.selected(1)) add(criterion_blind_sojourn(o));
    if (o.selected(2)) add(criterion_srpt_heavy_traffic(o));
    if (o.selected(3)) add(criterion_busy_period_moments(o));
    if (o.selected(4)) add(criterion_arrivals_per_cycle(o));
    if (o.selected(5)) add(criterion_exponent_recovery(o));
    if (o.selected(6)) add(criterion_srpt_optimality(o));
    if (o.selected(7)) add(criterion_work_conservation(o));
    if (o.selected(8)) add(criterion_scaling_coupling(o));
    if (o.selected(9)) add(criterion_order_preservation(o));
    if (o.selected(10) || o.selected(11)) {
        for (auto& r : criteria_ratio_sweep(o)) {
            if (o.selected(r.id)) add(std::move(r));
        }
    }
    return out;
}

inline nlohmann::ordered_json to_json(const CriterionResult& r) {
    return {{"criterion", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"data", r.data}};
}

}  // namespace blindq
