#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "instance.hpp"
#include "policies.hpp"
#include "random.hpp"

namespace blindq {

// Events closer than this (time units) are treated as simultaneous and
// processed in the order completion < target hit < arrival.
inline constexpr double kEventSnap = 1e-9;

struct JobOutcome {
    double completion;
    double sojourn;
};

struct BusyInterval {
    double start;
    double end;
};

struct CycleStats {
    CycleRecord record;
    double sum_sojourn;
};

struct SimResult {
    std::string policy;
    std::uint64_t seed = 0;
    std::vector<JobOutcome> jobs;  // index = id - 1
    std::vector<CycleStats> cycles;
    std::vector<BusyInterval> busy;  // intervals the server actually worked
    std::optional<InstanceMeta> meta;

    double total_flow() const {
        double t = 0.0;
        for (const JobOutcome& j : jobs) t += j.sojourn;
        return t;
    }
};

// Earliest internal event (completion or threshold) under `allocation`, as a
// time offset from now. `remaining` and `attained` are indexed by job id.
inline double next_internal_event(std::span<const Allocation> allocation,
                                  std::span<const double> remaining, std::span<const double> attained) {
    double dt = kInf;
    for (const Allocation& a : allocation) {
        if (a.rate <= 0.0) continue;
        dt = std::min(dt, remaining[a.id] / a.rate);
        if (a.threshold < kInf) dt = std::min(dt, (a.threshold - attained[a.id]) / a.rate);
    }
    return dt;
}

struct NoObserver {
    template <class Policy>
    void operator()(double, const Policy&) const noexcept {}
};

namespace detail {

template <class Policy, class Observer>
SimResult run(const Instance& inst, Policy& policy, Observer&& observe) {
    const std::size_t n = inst.size();
    std::span<const Job> jobs = inst.jobs();
    std::vector<double> attained(n + 1, 0.0);
    std::vector<double> remaining(n + 1, 0.0);
    SimResult result;
    result.jobs.assign(n, JobOutcome{0.0, 0.0});
    result.meta = inst.meta();

    std::vector<Allocation> alloc;
    std::vector<JobId> completing, hitting;
    std::size_t next = 0;  // index of the next release
    std::size_t active = 0;
    std::size_t done = 0;
    double now = 0.0;

    auto admit = [&](const Job& j) {
        now = j.release;
        remaining[j.id] = j.size;
        if (active++ == 0) result.busy.push_back({now, now});
        if constexpr (Policy::clairvoyant) {
            policy.admit(j.id, j.release, j.size, attained);
        } else {
            policy.admit(j.id, j.release, std::span<const double>(attained));
        }
        observe(now, std::as_const(policy));
    };

    while (done < n) {
        if (active == 0) {
            admit(jobs[next++]);
            continue;
        }
        policy.allocate(attained, alloc);
        if (alloc.empty()) throw ConsistencyError("policy idles while work is present");
        double rate_sum = 0.0;
        for (const Allocation& a : alloc) rate_sum += a.rate;
        if (rate_sum > 1.0 + 1e-12) throw ConsistencyError("allocation exceeds unit speed");

        double internal = next_internal_event(alloc, remaining, attained);
        double to_arrival = next < n ? jobs[next].release - now : kInf;
        double step = std::min(internal, to_arrival);
        if (!std::isfinite(step)) throw ConsistencyError("no next event");

        completing.clear();
        hitting.clear();
        for (const Allocation& a : alloc) {
            if (a.rate <= 0.0) continue;
            double dc = remaining[a.id] / a.rate;
            double dh = a.threshold < kInf ? (a.threshold - attained[a.id]) / a.rate : kInf;
            if (dc <= step + kEventSnap) {
                attained[a.id] += remaining[a.id];
                remaining[a.id] = 0.0;
                completing.push_back(a.id);
            } else if (dh <= step + kEventSnap) {
                remaining[a.id] -= a.threshold - attained[a.id];
                attained[a.id] = a.threshold;
                hitting.push_back(a.id);
            } else {
                double w = a.rate * step;
                attained[a.id] += w;
                remaining[a.id] -= w;
            }
        }
        now += step;

        std::sort(completing.begin(), completing.end());
        for (JobId id : completing) {
            policy.on_completion(id);
            const Job& j = jobs[id - 1];
            result.jobs[id - 1] = JobOutcome{now, now - j.release};
            ++done;
            if (--active == 0) result.busy.back().end = now;
        }
        std::sort(hitting.begin(), hitting.end());
        for (JobId id : hitting) policy.on_threshold(id, attained);
        if (!completing.empty() || !hitting.empty()) observe(now, std::as_const(policy));

        if (next < n && jobs[next].release - now <= kEventSnap) admit(jobs[next++]);
    }

    auto cycles = busy_periods(inst);
    result.cycles.reserve(cycles.size());
    for (const CycleRecord& c : cycles) {
        double sum = 0.0;
        for (JobId id = c.first_job; id <= c.last_job; ++id) sum += result.jobs[id - 1].sojourn;
        result.cycles.push_back({c, sum});
    }
    return result;
}

}  // namespace detail

// Runs `kind` on `inst`. Policy randomness comes from substream 2 of `seed`.
template <class Observer = NoObserver>
SimResult simulate(const Instance& inst, PolicyKind kind, std::uint64_t seed, Observer&& observe = {}) {
    RandomStream stream = make_stream(seed, Substream::policy);
    SimResult r;
    switch (kind) {
        case PolicyKind::srpt: {
            SrptPolicy p;
            r = detail::run(inst, p, observe);
            break;
        }
        case PolicyKind::fifo: {
            FifoPolicy p;
            r = detail::run(inst, p, observe);
            break;
        }
        case PolicyKind::ps: {
            SharingPolicy p(ShareKind::ps);
            r = detail::run(inst, p, observe);
            break;
        }
        case PolicyKind::fb: {
            SharingPolicy p(ShareKind::fb);
            r = detail::run(inst, p, observe);
            break;
        }
        case PolicyKind::mlf: {
            RmlfPolicy p(stream, true);
            r = detail::run(inst, p, observe);
            break;
        }
        case PolicyKind::rmlf: {
            RmlfPolicy p(stream);
            r = detail::run(inst, p, observe);
            break;
        }
        case PolicyKind::ermlf: {
            ErmlfPolicy p(stream);
            r = detail::run(inst, p, observe);
            break;
        }
    }
    r.policy = std::string(policy_name(kind));
    r.seed = seed;
    return r;
}

// Runs an already constructed policy object (used to drive custom streams).
template <class Policy, class Observer = NoObserver>
SimResult simulate_with(const Instance& inst, Policy& policy, Observer&& observe = {}) {
    return detail::run(inst, policy, observe);
}

// ---------------------------------------------------------------------------
// Minimum total flow time by exhaustive search. At every release or
// completion epoch each available job is tried as the one to run until the
// next epoch.

inline constexpr std::size_t kBruteForceMaxJobs = 4;

namespace detail {

inline void min_flow_search(std::span<const Job> jobs, std::vector<double>& remaining, double now,
                            std::size_t next, double flow_so_far, double& best) {
    if (flow_so_far >= best) return;
    std::size_t n = jobs.size();
    bool any = false;
    for (std::size_t i = 0; i < next; ++i) any = any || remaining[i] > 0.0;
    if (!any) {
        if (next == n) {
            best = std::min(best, flow_so_far);
            return;
        }
        min_flow_search(jobs, remaining, jobs[next].release, next + 1, flow_so_far, best);
        return;
    }
    double horizon = next < n ? jobs[next].release - now : kInf;
    for (std::size_t i = 0; i < next; ++i) {
        if (remaining[i] <= 0.0) continue;
        double saved = remaining[i];
        if (saved <= horizon) {
            remaining[i] = 0.0;
            double t = now + saved;
            double flow = flow_so_far + (t - jobs[i].release);
            min_flow_search(jobs, remaining, t, next, flow, best);
        } else {
            remaining[i] = saved - horizon;
            min_flow_search(jobs, remaining, jobs[next].release, next + 1, flow_so_far, best);
        }
        remaining[i] = saved;
    }
}

}  // namespace detail

inline double brute_force_min_flow(const Instance& inst) {
    if (inst.size() > kBruteForceMaxJobs)
        throw SizeError("brute_force_min_flow supports at most " + std::to_string(kBruteForceMaxJobs) +
                        " jobs");
    if (inst.empty()) return 0.0;
    std::vector<double> remaining;
    for (const Job& j : inst.jobs()) remaining.push_back(j.size);
    double best = kInf;
    detail::min_flow_search(inst.jobs(), remaining, inst.jobs().front().release, 1, 0.0, best);
    return best;
}

// ---------------------------------------------------------------------------
// Export

inline void write_jobs_csv(const Instance& inst, const SimResult& r, std::ostream& out) {
    out << "id,release,size,completion,sojourn\n";
    for (const Job& j : inst.jobs()) {
        const JobOutcome& o = r.jobs[j.id - 1];
        out << j.id << ',' << format_double(j.release) << ',' << format_double(j.size) << ','
            << format_double(o.completion) << ',' << format_double(o.sojourn) << '\n';
    }
}

inline void write_sim_cycles_csv(const SimResult& r, std::ostream& out) {
    out << "cycle,N,P,I,sum_sojourn\n";
    for (std::size_t k = 0; k < r.cycles.size(); ++k) {
        const CycleStats& c = r.cycles[k];
        out << k + 1 << ',' << c.record.n << ',' << format_double(c.record.busy) << ','
            << (c.record.idle ? format_double(*c.record.idle) : std::string()) << ','
            << format_double(c.sum_sojourn) << '\n';
    }
}

inline nlohmann::ordered_json summary_json(const SimResult& r) {
    nlohmann::ordered_json j;
    std::size_t n = r.jobs.size();
    double total = r.total_flow();
    double max_sojourn = 0.0;
    for (const JobOutcome& o : r.jobs) max_sojourn = std::max(max_sojourn, o.sojourn);
    j["policy"] = r.policy;
    j["seed"] = r.seed;
    j["jobs"] = n;
    j["cycles"] = r.cycles.size();
    j["total_flow"] = total;
    j["mean_sojourn"] = n ? total / static_cast<double>(n) : 0.0;
    j["max_sojourn"] = max_sojourn;
    if (r.meta) {
        j["rho"] = r.meta->rho;
        j["arrival"] = r.meta->arrival;
        j["size"] = r.meta->size;
    }
    return j;
}

}  // namespace blindq
