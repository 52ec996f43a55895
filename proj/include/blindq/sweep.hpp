#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "distributions.hpp"
#include "estimators.hpp"
#include "instance.hpp"
#include "policies.hpp"
#include "random.hpp"
#include "simulator.hpp"

namespace blindq {

// Runs body(i) for i in [0, count) on up to `jobs` threads. The first
// exception thrown by any task is rethrown after all threads join.
template <class Body>
void parallel_for(std::size_t count, unsigned jobs, Body&& body) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < jobs; ++t) {
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    if (error) std::rethrow_exception(error);
}

// BLINDQ_JOBS if set, otherwise the hardware concurrency.
inline unsigned default_jobs() {
    if (const char* env = std::getenv("BLINDQ_JOBS")) {
        int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct SweepConfig {
    DistributionSpec arrival = exponential_with_mean(1.0);
    DistributionSpec size = exponential_with_mean(1.0);
    std::vector<double> r_grid;
    std::vector<PolicyKind> policies;
    std::size_t cycles = 10000;
    std::uint64_t seed = 1;
    std::vector<double> kappas{1.0, 2.0};
    double s = 1.5;
    double zeta = 15.0;

    void validate() const {
        blindq::validate(arrival);
        blindq::validate(size);
        if (r_grid.empty()) throw ParameterError("sweep: r_grid is empty");
        for (std::size_t i = 0; i < r_grid.size(); ++i) {
            if (!(r_grid[i] > 0.0 && r_grid[i] < 1.0)) throw ParameterError("sweep: r_grid values must lie in (0,1)");
            if (i > 0 && !(r_grid[i] > r_grid[i - 1]))
                throw ParameterError("sweep: r_grid must be strictly increasing");
        }
        if (policies.empty()) throw ParameterError("sweep: policies is empty");
        if (cycles < 100) throw ParameterError("sweep: cycles must be >= 100");
        if (kappas.empty()) throw ParameterError("sweep: kappas is empty");
        for (double k : kappas)
            if (!(k >= 1.0)) throw ParameterError("sweep: kappas must be >= 1");
        for (double r : r_grid) {
            Load load = system_load(scaled(arrival, r), size);
            analysis(load.rho).validate();
        }
    }

    AnalysisParams analysis(double rho) const {
        return AnalysisParams{moments(size).moment_order, s, zeta, rho};
    }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto b = item.find_first_not_of(" \t");
        auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

inline double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': bad number '" + s + "'");
    }
}

}  // namespace detail

// INI-style config:
//   [system]   arrival = exp:1      size = exp:1
//   [sweep]    r_grid = 0.5,0.8     policies = srpt,rmlf   cycles = 10000   seed = 1
//   [analysis] kappas = 1,2         s = 1.5                zeta = 15
// The arrival law is scaled by 1/r at each grid point.
inline SweepConfig parse_sweep_config(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError(e.message(), e.line());
    }
    static const char* known[] = {"system.arrival", "system.size",  "sweep.r_grid",
                                  "sweep.policies", "sweep.cycles", "sweep.seed",
                                  "analysis.kappas", "analysis.s",  "analysis.zeta"};
    for (const auto& [section, body] : tree) {
        for (const auto& [key, value] : body) {
            std::string full = section + "." + key;
            if (std::find(std::begin(known), std::end(known), full) == std::end(known))
                throw ParseError("unknown config key '" + full + "'");
        }
    }
    SweepConfig cfg;
    if (auto v = tree.get_optional<std::string>("system.arrival")) cfg.arrival = parse_distribution(*v);
    if (auto v = tree.get_optional<std::string>("system.size")) cfg.size = parse_distribution(*v);
    if (auto v = tree.get_optional<std::string>("sweep.r_grid")) {
        for (const auto& item : detail::split_list(*v)) cfg.r_grid.push_back(detail::to_double(item, "r_grid"));
    }
    if (auto v = tree.get_optional<std::string>("sweep.policies")) {
        for (const auto& item : detail::split_list(*v)) cfg.policies.push_back(parse_policy(item));
    }
    if (auto v = tree.get_optional<std::string>("sweep.cycles"))
        cfg.cycles = static_cast<std::size_t>(detail::to_double(*v, "cycles"));
    if (auto v = tree.get_optional<std::string>("sweep.seed")) cfg.seed = std::stoull(*v);
    if (auto v = tree.get_optional<std::string>("analysis.kappas")) {
        cfg.kappas.clear();
        for (const auto& item : detail::split_list(*v)) cfg.kappas.push_back(detail::to_double(item, "kappas"));
    }
    if (auto v = tree.get_optional<std::string>("analysis.s")) cfg.s = detail::to_double(*v, "s");
    if (auto v = tree.get_optional<std::string>("analysis.zeta")) cfg.zeta = detail::to_double(*v, "zeta");
    cfg.validate();
    return cfg;
}

struct SweepPointResult {
    double r;
    double rho;
    PolicyKind policy;
    std::uint64_t seed;
    MomentEstimate sojourn;
    TailSplit split;
    HolderDiagnostic holder;
    std::vector<MomentEstimate> moments;  // P and N for each kappa; first policy only
};

struct SweepReport {
    SweepConfig config;
    std::vector<SweepPointResult> points;  // grid order, then policy order
    std::vector<RatioRow> ratios;          // per non-SRPT policy, grid order
    std::vector<PolicyKind> ratio_policies;
};

inline SweepReport run_sweep(const SweepConfig& cfg, unsigned jobs = 1) {
    cfg.validate();
    const std::size_t np = cfg.policies.size();
    std::vector<std::optional<SweepPointResult>> slots(cfg.r_grid.size() * np);
    double alpha = moments(cfg.size).moment_order;

    parallel_for(slots.size(), jobs, [&](std::size_t task) {
        std::size_t point = task / np;
        std::size_t pi = task % np;
        double r = cfg.r_grid[point];
        DistributionSpec arrival = scaled(cfg.arrival, r);
        std::uint64_t seed = derive_seed(cfg.seed, point, pi);
        Instance inst = generate(arrival, cfg.size, cfg.cycles, seed);
        double rho = inst.meta()->rho;
        SimResult sim = simulate(inst, cfg.policies[pi], seed);
        AnalysisParams params = cfg.analysis(rho);
        SweepPointResult out{r,
                             rho,
                             cfg.policies[pi],
                             seed,
                             regen_mean_sojourn(sim),
                             tail_split(sim, params),
                             holder_diagnostic(sim, params),
                             {}};
        if (pi == 0) {
            auto cycles = records(sim);
            for (double k : cfg.kappas) {
                out.moments.push_back(functional_moment(std::span<const CycleRecord>(cycles), Functional::P, k, alpha));
                out.moments.push_back(functional_moment(std::span<const CycleRecord>(cycles), Functional::N, k, alpha));
            }
        }
        slots[task] = std::move(out);
    });

    SweepReport report{cfg, {}, {}, {}};
    for (auto& s : slots) report.points.push_back(std::move(*s));

    auto srpt = std::find(cfg.policies.begin(), cfg.policies.end(), PolicyKind::srpt);
    if (srpt != cfg.policies.end()) {
        std::size_t si = static_cast<std::size_t>(srpt - cfg.policies.begin());
        for (std::size_t pi = 0; pi < np; ++pi) {
            if (pi == si) continue;
            std::vector<FitPoint> mine, base;
            for (std::size_t point = 0; point < cfg.r_grid.size(); ++point) {
                const auto& a = report.points[point * np + pi];
                const auto& b = report.points[point * np + si];
                mine.push_back({a.rho, a.sojourn.point});
                base.push_back({a.rho, b.sojourn.point});
            }
            for (const RatioRow& row : ratio_curve(mine, base)) {
                report.ratios.push_back(row);
                report.ratio_policies.push_back(cfg.policies[pi]);
            }
        }
    }
    return report;
}

inline void write_estimates_csv(const SweepReport& rep, std::ostream& out) {
    out << "policy,functional,kappa,rho,point,ci,cycles\n";
    for (const auto& p : rep.points) {
        out << policy_name(p.policy) << ",T,1," << format_double(p.rho) << ',' << format_double(p.sojourn.point)
            << ',' << format_double(p.sojourn.ci_halfwidth) << ',' << p.sojourn.cycles_used << '\n';
    }
}

inline void write_moments_csv(const SweepReport& rep, std::ostream& out) {
    out << "functional,kappa,rho,point,ci,cycles\n";
    for (const auto& p : rep.points) {
        for (const auto& m : p.moments) {
            out << functional_name(m.functional) << ',' << format_double(m.order) << ',' << format_double(p.rho)
                << ',' << format_double(m.point) << ',' << format_double(m.ci_halfwidth) << ',' << m.cycles_used
                << '\n';
        }
    }
}

inline void write_ratio_csv(const SweepReport& rep, std::ostream& out) {
    out << "policy,rho,mean_policy,mean_srpt,ratio,normalized\n";
    for (std::size_t i = 0; i < rep.ratios.size(); ++i) {
        const RatioRow& r = rep.ratios[i];
        out << policy_name(rep.ratio_policies[i]) << ',' << format_double(r.rho) << ','
            << format_double(r.policy_mean) << ',' << format_double(r.srpt_mean) << ',' << format_double(r.ratio)
            << ',' << format_double(r.normalized) << '\n';
    }
}

// Slope of log E[X^kappa] against log(1 - rho) for X in {P, N}; null when
// the grid has fewer than 3 points.
inline nlohmann::ordered_json fits_json(const SweepReport& rep) {
    nlohmann::ordered_json fits = nlohmann::ordered_json::array();
    for (Functional f : {Functional::P, Functional::N}) {
        for (double k : rep.config.kappas) {
            std::vector<FitPoint> pts;
            for (const auto& p : rep.points) {
                for (const auto& m : p.moments)
                    if (m.functional == f && m.order == k) pts.push_back({p.rho, m.point});
            }
            nlohmann::ordered_json row;
            row["functional"] = functional_name(f);
            row["kappa"] = k;
            row["target_slope"] = 1.0 - 2.0 * k;
            if (pts.size() >= 3) {
                ExponentFit fit = exponent_fit(pts);
                row["slope"] = fit.slope;
                row["slope_se"] = fit.slope_se;
                row["intercept"] = fit.intercept;
            } else {
                row["slope"] = nullptr;
                row["slope_se"] = nullptr;
                row["intercept"] = nullptr;
            }
            row["points"] = pts.size();
            fits.push_back(row);
        }
    }
    return fits;
}

inline nlohmann::ordered_json summary_json(const SweepReport& rep) {
    nlohmann::ordered_json out;
    out["arrival"] = to_string(rep.config.arrival);
    out["size"] = to_string(rep.config.size);
    out["seed"] = rep.config.seed;
    out["cycles"] = rep.config.cycles;
    out["s"] = rep.config.s;
    out["zeta"] = rep.config.zeta;
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const auto& p : rep.points) {
        nlohmann::ordered_json j;
        j["r"] = p.r;
        j["rho"] = p.rho;
        j["policy"] = policy_name(p.policy);
        j["seed"] = p.seed;
        j["mean_sojourn"] = p.sojourn.point;
        j["ci"] = p.sojourn.ci_halfwidth;
        j["cycles"] = p.sojourn.cycles_used;
        j["threshold_n0"] = p.split.threshold;
        j["small_contrib"] = p.split.small;
        j["large_contrib"] = p.split.large;
        j["large_cycles"] = p.split.large_cycles;
        j["holder_bound"] = p.holder.bound;
        j["holder_beyond_moment_order"] = p.holder.beyond_moment_order;
        points.push_back(j);
    }
    out["points"] = points;
    out["fits"] = fits_json(rep);
    return out;
}

}  // namespace blindq
