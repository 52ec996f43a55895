#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "distributions.hpp"
#include "error.hpp"
#include "instance.hpp"
#include "random.hpp"

namespace blindq {

enum class PolicyKind { srpt, fifo, ps, fb, mlf, rmlf, ermlf };

inline constexpr PolicyKind kAllPolicies[] = {PolicyKind::srpt, PolicyKind::fifo, PolicyKind::ps,
                                              PolicyKind::fb,   PolicyKind::mlf,  PolicyKind::rmlf,
                                              PolicyKind::ermlf};

inline std::string_view policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::srpt: return "srpt";
        case PolicyKind::fifo: return "fifo";
        case PolicyKind::ps: return "ps";
        case PolicyKind::fb: return "fb";
        case PolicyKind::mlf: return "mlf";
        case PolicyKind::rmlf: return "rmlf";
        case PolicyKind::ermlf: return "ermlf";
    }
    return "?";
}

inline PolicyKind parse_policy(std::string_view name) {
    for (PolicyKind k : kAllPolicies) {
        if (policy_name(k) == name) return k;
    }
    throw ParameterError("unknown policy '" + std::string(name) +
                         "' (expected srpt|fifo|ps|fb|mlf|rmlf|ermlf)");
}

// ---------------------------------------------------------------------------
// Randomized targets

inline constexpr double kTheta = 12.0;

struct BetaFactor {
    JobId j;
    double beta;    // +inf for j = 1
    double factor;  // max{1, 2 - beta}, always in [1, 2]
};

// Inverse of P(beta <= x) = 1 - exp(-theta x ln j) at u in [0, 1).
inline BetaFactor beta_from_uniform(JobId j, double u) {
    if (j == 0) throw ParameterError("job index must be >= 1");
    double rate = kTheta * std::log(static_cast<double>(j));
    double beta = rate > 0.0 ? -std::log1p(-u) / rate : kInf;
    return BetaFactor{j, beta, std::max(1.0, 2.0 - beta)};
}

// Consumes exactly one draw from `stream`, also for j = 1.
inline BetaFactor draw_beta(JobId j, RandomStream& stream) {
    return beta_from_uniform(j, stream.uniform());
}

inline double mlf_target(int level, const BetaFactor& f) { return std::ldexp(f.factor, level); }

// ---------------------------------------------------------------------------
// Pure decision rules

struct SrptEntry {
    JobId id;
    double remaining;
    double release;
};

inline std::optional<JobId> srpt_decision(std::span<const SrptEntry> active) {
    if (active.empty()) return std::nullopt;
    auto best = std::min_element(active.begin(), active.end(), [](const SrptEntry& a, const SrptEntry& b) {
        return std::tie(a.remaining, a.release, a.id) < std::tie(b.remaining, b.release, b.id);
    });
    return best->id;
}

struct FifoEntry {
    JobId id;
    double release;
};

inline std::optional<JobId> fifo_decision(std::span<const FifoEntry> active) {
    if (active.empty()) return std::nullopt;
    auto first = std::min_element(active.begin(), active.end(), [](const FifoEntry& a, const FifoEntry& b) {
        return std::tie(a.release, a.id) < std::tie(b.release, b.id);
    });
    return first->id;
}

enum class ShareKind { ps, fb };

struct ShareEntry {
    JobId id;
    double attained;
};

struct Rate {
    JobId id;
    double rate;
};

// PS: 1/k to each job. FB: 1/|M| to each job of the least-attained set M,
// 0 to the rest. Output follows input order.
inline std::vector<Rate> share_rates(ShareKind kind, std::span<const ShareEntry> active) {
    if (active.empty()) throw ParameterError("share_rates needs at least one active job");
    std::vector<Rate> out;
    out.reserve(active.size());
    if (kind == ShareKind::ps) {
        double r = 1.0 / static_cast<double>(active.size());
        for (const ShareEntry& e : active) out.push_back({e.id, r});
        return out;
    }
    double least = active.front().attained;
    for (const ShareEntry& e : active) least = std::min(least, e.attained);
    auto members = std::count_if(active.begin(), active.end(),
                                 [&](const ShareEntry& e) { return e.attained == least; });
    double r = 1.0 / static_cast<double>(members);
    for (const ShareEntry& e : active) out.push_back({e.id, e.attained == least ? r : 0.0});
    return out;
}

// ---------------------------------------------------------------------------
// Stateful policies driven by the simulator.
//
// Every policy implements
//   admit(id, release, attained)          (clairvoyant ones also get the size)
//   allocate(attained, out)               service rates until the next event
//   on_threshold(id, attained)            a job reached its Allocation::threshold
//   on_completion(id)
// `attained` is indexed by job id and is the only job information blind
// policies see.

struct Allocation {
    JobId id;
    double rate;
    double threshold;  // attained service at which on_threshold fires; kInf for none
};

using AttainedView = std::span<const double>;

class SrptPolicy {
public:
    static constexpr bool clairvoyant = true;

    void admit(JobId id, double release, double size, AttainedView attained) {
        if (sizes_.size() <= id) {
            sizes_.resize(id + 1, 0.0);
            releases_.resize(id + 1, 0.0);
        }
        sizes_[id] = size;
        releases_[id] = release;
        Key incoming{size, release, id};
        if (!current_) {
            current_ = id;
            return;
        }
        Key running{sizes_[*current_] - attained[*current_], releases_[*current_], *current_};
        if (incoming < running) {
            waiting_.push(running);
            current_ = id;
        } else {
            waiting_.push(incoming);
        }
    }

    void allocate(AttainedView, std::vector<Allocation>& out) const {
        out.clear();
        if (current_) out.push_back({*current_, 1.0, kInf});
    }

    void on_threshold(JobId, AttainedView) { throw ConsistencyError("srpt has no thresholds"); }

    void on_completion(JobId id) {
        if (current_ != id) throw ConsistencyError("srpt completion of a job it was not serving");
        current_.reset();
        if (!waiting_.empty()) {
            current_ = std::get<2>(waiting_.top());
            waiting_.pop();
        }
    }

private:
    using Key = std::tuple<double, double, JobId>;  // remaining, release, id
    std::vector<double> sizes_;
    std::vector<double> releases_;
    std::optional<JobId> current_;
    std::priority_queue<Key, std::vector<Key>, std::greater<>> waiting_;
};

class FifoPolicy {
public:
    static constexpr bool clairvoyant = false;

    void admit(JobId id, double, AttainedView) { queue_.push_back(id); }

    void allocate(AttainedView, std::vector<Allocation>& out) const {
        out.clear();
        if (!queue_.empty()) out.push_back({queue_.front(), 1.0, kInf});
    }

    void on_threshold(JobId, AttainedView) { throw ConsistencyError("fifo has no thresholds"); }

    void on_completion(JobId id) {
        if (queue_.empty() || queue_.front() != id)
            throw ConsistencyError("fifo completion out of order");
        queue_.pop_front();
    }

private:
    std::deque<JobId> queue_;
};

class SharingPolicy {
public:
    static constexpr bool clairvoyant = false;

    explicit SharingPolicy(ShareKind kind) : kind_(kind) {}

    void admit(JobId id, double, AttainedView) { active_.push_back(id); }

    void allocate(AttainedView attained, std::vector<Allocation>& out) {
        out.clear();
        if (active_.empty()) return;
        entries_.clear();
        for (JobId id : active_) entries_.push_back({id, attained[id]});
        auto rates = share_rates(kind_, entries_);
        // FB: the least-attained set runs until it catches up with the next
        // attained level among the others.
        double next_level = kInf;
        if (kind_ == ShareKind::fb) {
            for (std::size_t i = 0; i < rates.size(); ++i) {
                if (rates[i].rate == 0.0) next_level = std::min(next_level, entries_[i].attained);
            }
        }
        for (const Rate& r : rates) {
            if (r.rate > 0.0) out.push_back({r.id, r.rate, next_level});
        }
    }

    void on_threshold(JobId, AttainedView) {
        if (kind_ != ShareKind::fb) throw ConsistencyError("ps has no thresholds");
    }

    void on_completion(JobId id) {
        auto it = std::find(active_.begin(), active_.end(), id);
        if (it == active_.end()) throw ConsistencyError("completion of unknown job");
        active_.erase(it);
    }

private:
    ShareKind kind_;
    std::vector<JobId> active_;
    std::vector<ShareEntry> entries_;
};

// One queue of an MLF-family policy, lowest first. `level` is empty for the
// eRMLF new-job queue.
struct QueueView {
    std::optional<int> level;
    std::vector<JobId> jobs;
};

struct MlfJobState {
    int level = 0;
    double target = 0.0;
    BetaFactor factor{0, 0.0, 1.0};
    bool in_star = false;
};

// RMLF, or deterministic MLF when `deterministic` (every factor is 2 and no
// randomness is consumed). Queues Q0, Q1, ... with FCFS order inside each;
// the front of the lowest non-empty queue runs until its target 2^i * factor.
class RmlfPolicy {
public:
    static constexpr bool clairvoyant = false;

    RmlfPolicy(RandomStream stream, bool deterministic = false)
        : stream_(stream), deterministic_(deterministic) {}

    void admit(JobId id, double, AttainedView) {
        BetaFactor f = deterministic_ ? BetaFactor{id, 0.0, 2.0} : draw_beta(id, stream_);
        state(id) = MlfJobState{0, mlf_target(0, f), f, false};
        queue(0).push_back(id);
    }

    void allocate(AttainedView, std::vector<Allocation>& out) const {
        out.clear();
        if (auto id = served()) out.push_back({*id, 1.0, jobs_[*id].target});
    }

    std::optional<JobId> served() const {
        for (const auto& q : queues_) {
            if (!q.empty()) return q.front();
        }
        return std::nullopt;
    }

    void on_threshold(JobId id, AttainedView attained) {
        if (served() != id) throw ConsistencyError("rmlf target hit by a job that is not running");
        MlfJobState& s = jobs_[id];
        if (attained[id] != s.target) throw ConsistencyError("rmlf target hit before reaching target");
        queues_[s.level].pop_front();
        ++s.level;
        s.target = mlf_target(s.level, s.factor);
        queue(s.level).push_back(id);
    }

    void on_completion(JobId id) {
        if (served() != id) throw ConsistencyError("rmlf completion of a job that is not running");
        queues_[jobs_[id].level].pop_front();
    }

    const MlfJobState& job_state(JobId id) const { return jobs_.at(id); }

    std::vector<QueueView> snapshot() const {
        std::vector<QueueView> out;
        for (std::size_t i = 0; i < queues_.size(); ++i) {
            if (!queues_[i].empty())
                out.push_back({static_cast<int>(i), {queues_[i].begin(), queues_[i].end()}});
        }
        return out;
    }

private:
    MlfJobState& state(JobId id) {
        if (jobs_.size() <= id) jobs_.resize(id + 1);
        return jobs_[id];
    }
    std::deque<JobId>& queue(int level) {
        if (queues_.size() <= static_cast<std::size_t>(level)) queues_.resize(level + 1);
        return queues_[level];
    }

    RandomStream stream_;
    bool deterministic_;
    std::vector<std::deque<JobId>> queues_;
    std::vector<MlfJobState> jobs_;
};

// Policies that expose their queue structure.
template <class P>
concept QueuePolicy = requires(const P& p) {
    { p.snapshot() } -> std::same_as<std::vector<QueueView>>;
};

struct ErmlfRequeue {
    int level;
    double target;
};

// Destination of a new-job-queue occupant whose attained service equals its
// initial target: level log2(attained / factor) + 1 with doubled target.
inline ErmlfRequeue ermlf_requeue_on_target(double attained, const BetaFactor& f) {
    int exponent = 0;
    double mantissa = std::frexp(attained / f.factor, &exponent);
    if (mantissa != 0.5)
        throw ConsistencyError("ermlf requeue: attained service is not 2^z times the factor");
    int level = exponent;  // (exponent - 1) + 1
    return ErmlfRequeue{level, 2.0 * attained};
}

// Lowest z with attained <= 2^z * factor.
inline int ermlf_natural_level(double attained, const BetaFactor& f) {
    if (!(attained > 0.0)) throw ConsistencyError("ermlf: new-job queue occupant has no service");
    int z = static_cast<int>(std::ceil(std::log2(attained / f.factor)));
    while (mlf_target(z - 1, f) >= attained) --z;
    while (mlf_target(z, f) < attained) ++z;
    return z;
}

struct ErmlfArrival {
    double initial_target;
    int backing_level;                // initial target is 2^backing_level * factor
    std::optional<JobId> displaced;   // previous new-job-queue occupant, if any
    int displaced_level = 0;
    double displaced_target = 0.0;
};

// eRMLF: queues Q_z for every integer z plus a new-job queue Q* below all of
// them. Each arrival takes Q* and runs at once; the previous occupant drops to
// the queue matching its attained service.
class ErmlfPolicy {
public:
    static constexpr bool clairvoyant = false;

    explicit ErmlfPolicy(RandomStream stream) : stream_(stream) {}

    void admit(JobId id, double, AttainedView attained) {
        BetaFactor f = draw_beta(id, stream_);
        ErmlfArrival a = initial_target(f, attained);
        state(id) = MlfJobState{a.backing_level, a.initial_target, f, true};
        star_ = id;
    }

    // Applies the arrival-time bookkeeping for a job with factor `f` and
    // returns the chosen initial target. Leaves Q* empty; admit() fills it.
    ErmlfArrival initial_target(const BetaFactor& f, AttainedView attained) {
        ErmlfArrival a{};
        if (star_) {
            JobId prev = *star_;
            MlfJobState& s = jobs_[prev];
            int z = ermlf_natural_level(attained[prev], s.factor);
            s.in_star = false;
            s.level = z;
            s.target = mlf_target(z, s.factor);
            queues_[z].push_back(prev);
            star_.reset();
            a.displaced = prev;
            a.displaced_level = z;
            a.displaced_target = s.target;
        }
        if (queues_.empty()) {
            a.backing_level = 0;
        } else {
            a.backing_level = queues_.begin()->first - 1;
        }
        a.initial_target = mlf_target(a.backing_level, f);
        return a;
    }

    std::optional<JobId> served() const {
        if (star_) return star_;
        if (!queues_.empty()) return queues_.begin()->second.front();
        return std::nullopt;
    }

    void allocate(AttainedView, std::vector<Allocation>& out) const {
        out.clear();
        if (auto id = served()) out.push_back({*id, 1.0, jobs_[*id].target});
    }

    void on_threshold(JobId id, AttainedView attained) {
        if (served() != id) throw ConsistencyError("ermlf target hit by a job that is not running");
        MlfJobState& s = jobs_[id];
        if (attained[id] != s.target) throw ConsistencyError("ermlf target hit before reaching target");
        if (s.in_star) {
            ErmlfRequeue r = ermlf_requeue_on_target(attained[id], s.factor);
            if (r.level != s.level + 1) throw ConsistencyError("ermlf requeue level mismatch");
            star_.reset();
            s.in_star = false;
            s.level = r.level;
            s.target = r.target;
        } else {
            pop_front(s.level);
            ++s.level;
            s.target = mlf_target(s.level, s.factor);
        }
        queues_[s.level].push_back(id);
    }

    void on_completion(JobId id) {
        if (served() != id) throw ConsistencyError("ermlf completion of a job that is not running");
        MlfJobState& s = jobs_[id];
        if (s.in_star) {
            star_.reset();
            s.in_star = false;
        } else {
            pop_front(s.level);
        }
    }

    std::optional<JobId> star() const { return star_; }
    const MlfJobState& job_state(JobId id) const { return jobs_.at(id); }

    std::vector<QueueView> snapshot() const {
        std::vector<QueueView> out;
        if (star_) out.push_back({std::nullopt, {*star_}});
        for (const auto& [level, q] : queues_) out.push_back({level, {q.begin(), q.end()}});
        return out;
    }

private:
    MlfJobState& state(JobId id) {
        if (jobs_.size() <= id) jobs_.resize(id + 1);
        return jobs_[id];
    }
    void pop_front(int level) {
        auto it = queues_.find(level);
        it->second.pop_front();
        if (it->second.empty()) queues_.erase(it);
    }

    RandomStream stream_;
    std::optional<JobId> star_;
    std::map<int, std::deque<JobId>> queues_;  // non-empty queues only
    std::vector<MlfJobState> jobs_;
};

}  // namespace blindq
