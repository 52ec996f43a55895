#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "distributions.hpp"
#include "error.hpp"
#include "random.hpp"

namespace blindq {

// Absolute tolerance (work units) for deciding that the workload has
// drained before the next release.
inline constexpr double kClosureTolerance = 1e-9;

using JobId = std::size_t;

struct Job {
    JobId id;  // 1-based, release order
    double release;
    double size;
};

struct InstanceMeta {
    double rho;
    double mu;
    double size_moment_order;
    std::string arrival;
    std::string size;
};

class Instance {
public:
    Instance() = default;

    // Builds jobs 1..n from parallel release/size lists and validates them.
    Instance(std::span<const double> releases, std::span<const double> sizes,
             std::optional<InstanceMeta> meta = std::nullopt)
        : meta_(std::move(meta)) {
        if (releases.size() != sizes.size())
            throw ParameterError("release and size lists differ in length");
        jobs_.reserve(releases.size());
        for (std::size_t i = 0; i < releases.size(); ++i) {
            check_job(i, releases[i], sizes[i]);
            jobs_.push_back(Job{i + 1, releases[i], sizes[i]});
        }
    }

    std::span<const Job> jobs() const noexcept { return jobs_; }
    std::size_t size() const noexcept { return jobs_.size(); }
    bool empty() const noexcept { return jobs_.empty(); }
    const Job& job(JobId id) const { return jobs_.at(id - 1); }
    const std::optional<InstanceMeta>& meta() const noexcept { return meta_; }

    double min_size() const {
        if (jobs_.empty()) throw EmptyInstanceError("instance has no jobs");
        double m = jobs_.front().size;
        for (const Job& j : jobs_) m = std::min(m, j.size);
        return m;
    }

    friend bool operator==(const Instance& a, const Instance& b) {
        if (a.jobs_.size() != b.jobs_.size()) return false;
        for (std::size_t i = 0; i < a.jobs_.size(); ++i) {
            if (a.jobs_[i].release != b.jobs_[i].release || a.jobs_[i].size != b.jobs_[i].size)
                return false;
        }
        return true;
    }

private:
    friend class InstanceBuilder;

    void check_job(std::size_t index, double release, double size) const {
        if (!std::isfinite(release) || release < 0.0)
            throw ParameterError("job " + std::to_string(index + 1) + ": release must be >= 0");
        if (index > 0 && !(release > jobs_.back().release))
            throw ParameterError("job " + std::to_string(index + 1) +
                                 ": releases must be strictly increasing");
        if (!std::isfinite(size) || !(size > 0.0))
            throw ParameterError("job " + std::to_string(index + 1) + ": size must be > 0");
    }

    std::vector<Job> jobs_;
    std::optional<InstanceMeta> meta_;
};

// Incremental construction with the same validation as the list constructor.
class InstanceBuilder {
public:
    void add(double release, double size) {
        inst_.check_job(inst_.jobs_.size(), release, size);
        inst_.jobs_.push_back(Job{inst_.jobs_.size() + 1, release, size});
    }
    void reserve(std::size_t n) { inst_.jobs_.reserve(n); }
    void set_meta(InstanceMeta meta) { inst_.meta_ = std::move(meta); }
    std::size_t size() const noexcept { return inst_.jobs_.size(); }
    Instance build() && { return std::move(inst_); }

private:
    Instance inst_;
};

struct CycleRecord {
    JobId first_job;
    JobId last_job;
    std::size_t n;
    double busy;                 // P
    std::optional<double> idle;  // I preceding the cycle; absent for the first
    double start;
    double end;
};

// Busy periods of the workload process: jumps by the job size at each
// release, drains at unit speed. Independent of the scheduling policy.
inline std::vector<CycleRecord> busy_periods(const Instance& inst) {
    std::vector<CycleRecord> cycles;
    double end = 0.0;
    for (const Job& j : inst.jobs()) {
        if (cycles.empty() || j.release >= end - kClosureTolerance) {
            std::optional<double> idle;
            if (!cycles.empty()) {
                cycles.back().busy = end - cycles.back().start;
                cycles.back().end = end;
                idle = j.release - end;
            }
            cycles.push_back(CycleRecord{j.id, j.id, 0, 0.0, idle, j.release, 0.0});
            end = j.release;
        }
        CycleRecord& c = cycles.back();
        c.last_job = j.id;
        ++c.n;
        end += j.size;
    }
    if (!cycles.empty()) {
        cycles.back().busy = end - cycles.back().start;
        cycles.back().end = end;
    }
    return cycles;
}

// Jobs with release 0, A_1, A_1+A_2, ... until exactly `target_cycles` busy
// periods have closed; the release that would open the next one is dropped.
inline Instance generate(const DistributionSpec& arrival, const DistributionSpec& size,
                         std::size_t target_cycles, RandomStream arrival_stream,
                         RandomStream size_stream) {
    Load load = system_load(arrival, size);
    InstanceBuilder builder;
    builder.set_meta(InstanceMeta{load.rho, load.mu, moments(size).moment_order,
                                  to_string(arrival), to_string(size)});
    if (target_cycles == 0) return std::move(builder).build();

    builder.reserve(static_cast<std::size_t>(static_cast<double>(target_cycles) /
                                             std::max(1e-3, 1.0 - load.rho)));
    std::size_t opened = 0;
    double release = 0.0;
    double end = 0.0;
    while (true) {
        if (opened == 0 || release >= end - kClosureTolerance) {
            if (opened == target_cycles) break;
            ++opened;
            end = release;
        }
        double b = sample(size, size_stream);
        builder.add(release, b);
        end += b;
        release += sample(arrival, arrival_stream);
    }
    return std::move(builder).build();
}

inline Instance generate(const DistributionSpec& arrival, const DistributionSpec& size,
                         std::size_t target_cycles, std::uint64_t seed) {
    return generate(arrival, size, target_cycles, make_stream(seed, Substream::interarrival),
                    make_stream(seed, Substream::size));
}

// g = floor(log2(min size)) - 1, so that 2^{-g} * min size >= 2.
inline int scaling_exponent(const Instance& inst) {
    return std::ilogb(inst.min_size()) - 1;
}

inline Instance scale(const Instance& inst, double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor))
        throw ParameterError("scale factor must be > 0");
    std::vector<double> releases, sizes;
    releases.reserve(inst.size());
    sizes.reserve(inst.size());
    for (const Job& j : inst.jobs()) {
        releases.push_back(j.release * factor);
        sizes.push_back(j.size * factor);
    }
    return Instance(releases, sizes, inst.meta());
}

// ---------------------------------------------------------------------------
// Text format:
//   # blindq-instance v1
//   <release> <size>
//   ...
// Blank lines and further '#' lines are ignored.

inline constexpr std::string_view kInstanceHeader = "# blindq-instance v1";

inline std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

inline Instance parse_instance(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    InstanceBuilder builder;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header) {
            if (line != kInstanceHeader)
                throw ParseError("expected header '" + std::string(kInstanceHeader) + "'", lineno);
            header = true;
            continue;
        }
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        std::istringstream fields(line);
        std::string rs, ss, extra;
        if (!(fields >> rs >> ss) || (fields >> extra))
            throw ParseError("expected '<release> <size>'", lineno);
        double r = 0.0, s = 0.0;
        auto rr = std::from_chars(rs.data(), rs.data() + rs.size(), r);
        auto sr = std::from_chars(ss.data(), ss.data() + ss.size(), s);
        if (rr.ec != std::errc() || rr.ptr != rs.data() + rs.size() || sr.ec != std::errc() ||
            sr.ptr != ss.data() + ss.size())
            throw ParseError("malformed number", lineno);
        try {
            builder.add(r, s);
        } catch (const ParameterError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    if (!header) throw ParseError("empty instance file: missing header", lineno);
    return std::move(builder).build();
}

inline Instance parse_instance(const std::string& text) {
    std::istringstream in(text);
    return parse_instance(in);
}

inline void serialize(const Instance& inst, std::ostream& out) {
    out << kInstanceHeader << '\n';
    for (const Job& j : inst.jobs()) out << format_double(j.release) << ' ' << format_double(j.size) << '\n';
}

inline std::string serialize(const Instance& inst) {
    std::ostringstream os;
    serialize(inst, os);
    return os.str();
}

inline void write_cycles_csv(std::span<const CycleRecord> cycles, std::ostream& out) {
    out << "cycle_index,N,P,I,start,end\n";
    for (std::size_t k = 0; k < cycles.size(); ++k) {
        const CycleRecord& c = cycles[k];
        out << k + 1 << ',' << c.n << ',' << format_double(c.busy) << ','
            << (c.idle ? format_double(*c.idle) : std::string()) << ',' << format_double(c.start)
            << ',' << format_double(c.end) << '\n';
    }
}

}  // namespace blindq
