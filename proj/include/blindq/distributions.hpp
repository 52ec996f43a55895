#pragma once

#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace blindq {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct DistributionSpec;

struct Exponential {
    double rate;
};

struct Deterministic {
    double value;
};

struct Uniform {
    double lo;
    double hi;
};

// Pareto with scale 1: P(X > x) = x^{-shape} on [1, inf).
struct Pareto {
    double shape;
};

struct Hyperexponential {
    std::vector<double> weights;
    std::vector<double> rates;
};

// X / divisor for X drawn from `inner`. With divisor r in (0,1) this turns a
// unit-mean interarrival law into one with load r against unit-mean sizes.
struct Scaled {
    std::shared_ptr<const DistributionSpec> inner;
    double divisor;
};

struct DistributionSpec {
    using Kind = std::variant<Exponential, Deterministic, Uniform, Pareto, Hyperexponential, Scaled>;
    Kind kind;

    DistributionSpec(Exponential d) : kind(d) {}
    DistributionSpec(Deterministic d) : kind(d) {}
    DistributionSpec(Uniform d) : kind(d) {}
    DistributionSpec(Pareto d) : kind(d) {}
    DistributionSpec(Hyperexponential d) : kind(std::move(d)) {}
    DistributionSpec(Scaled d) : kind(std::move(d)) {}
};

inline DistributionSpec exponential_with_mean(double mean) {
    return Exponential{1.0 / mean};
}

inline DistributionSpec scaled(DistributionSpec inner, double divisor) {
    return Scaled{std::make_shared<const DistributionSpec>(std::move(inner)), divisor};
}

struct Moments {
    double mean;
    double second_moment;  // kInf when divergent
    double moment_order;   // supremum of finite moment orders, kInf for light tails
};

struct Load {
    double rho;
    double mu;  // E[A] - E[B]
};

namespace detail {

template <class... Fs>
struct overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

inline bool positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace detail

inline void validate(const DistributionSpec& spec) {
    std::visit(
        detail::overloaded{
            [](const Exponential& d) {
                if (!detail::positive(d.rate)) throw ParameterError("exponential rate must be > 0");
            },
            [](const Deterministic& d) {
                if (!detail::positive(d.value)) throw ParameterError("deterministic value must be > 0");
            },
            [](const Uniform& d) {
                if (!detail::positive(d.lo) || !std::isfinite(d.hi) || !(d.hi > d.lo))
                    throw ParameterError("uniform requires 0 < lo < hi");
            },
            [](const Pareto& d) {
                if (!std::isfinite(d.shape) || !(d.shape > 1.0))
                    throw ParameterError("pareto shape must be > 1");
            },
            [](const Hyperexponential& d) {
                if (d.weights.empty() || d.weights.size() != d.rates.size())
                    throw ParameterError("hyperexponential needs matching non-empty weights and rates");
                for (std::size_t i = 0; i < d.weights.size(); ++i) {
                    if (!detail::positive(d.weights[i]) || !detail::positive(d.rates[i]))
                        throw ParameterError("hyperexponential weights and rates must be > 0");
                }
                double total = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
                if (std::abs(total - 1.0) > 1e-9)
                    throw ParameterError("hyperexponential weights must sum to 1");
            },
            [](const Scaled& d) {
                if (!d.inner) throw ParameterError("scaled spec has no inner law");
                if (!(d.divisor > 0.0 && d.divisor < 1.0))
                    throw ParameterError("scaled divisor must lie in (0,1)");
                validate(*d.inner);
            },
        },
        spec.kind);
}

// Draws consumed per sample: exponential 1, deterministic 0, uniform 1,
// pareto 1, hyperexponential 2, scaled as its inner law. All draws use the
// open unit interval, so every sample is strictly positive.
inline double sample(const DistributionSpec& spec, RandomStream& stream) {
    return std::visit(
        detail::overloaded{
            [&](const Exponential& d) { return -std::log(stream.uniform_open()) / d.rate; },
            [&](const Deterministic& d) { return d.value; },
            [&](const Uniform& d) { return d.lo + (d.hi - d.lo) * stream.uniform_open(); },
            [&](const Pareto& d) { return std::pow(stream.uniform_open(), -1.0 / d.shape); },
            [&](const Hyperexponential& d) {
                double pick = stream.uniform_open();
                double u = stream.uniform_open();
                std::size_t branch = 0;
                double acc = d.weights[0];
                while (pick > acc && branch + 1 < d.weights.size()) acc += d.weights[++branch];
                return -std::log(u) / d.rates[branch];
            },
            [&](const Scaled& d) { return sample(*d.inner, stream) / d.divisor; },
        },
        spec.kind);
}

inline Moments moments(const DistributionSpec& spec) {
    return std::visit(
        detail::overloaded{
            [](const Exponential& d) {
                return Moments{1.0 / d.rate, 2.0 / (d.rate * d.rate), kInf};
            },
            [](const Deterministic& d) { return Moments{d.value, d.value * d.value, kInf}; },
            [](const Uniform& d) {
                return Moments{(d.lo + d.hi) / 2.0, (d.lo * d.lo + d.lo * d.hi + d.hi * d.hi) / 3.0,
                               kInf};
            },
            [](const Pareto& d) {
                double b = d.shape;
                return Moments{b / (b - 1.0), b > 2.0 ? b / (b - 2.0) : kInf, b};
            },
            [](const Hyperexponential& d) {
                Moments m{0.0, 0.0, kInf};
                for (std::size_t i = 0; i < d.weights.size(); ++i) {
                    m.mean += d.weights[i] / d.rates[i];
                    m.second_moment += 2.0 * d.weights[i] / (d.rates[i] * d.rates[i]);
                }
                return m;
            },
            [](const Scaled& d) {
                Moments m = moments(*d.inner);
                return Moments{m.mean / d.divisor, m.second_moment / (d.divisor * d.divisor),
                               m.moment_order};
            },
        },
        spec.kind);
}

inline Load system_load(const DistributionSpec& arrival, const DistributionSpec& size) {
    validate(arrival);
    validate(size);
    double ea = moments(arrival).mean;
    double eb = moments(size).mean;
    if (!(eb < ea)) {
        std::ostringstream os;
        os << "unstable system: E[B]=" << eb << " >= E[A]=" << ea;
        throw UnstableSystemError(os.str());
    }
    return Load{eb / ea, ea - eb};
}

// ---------------------------------------------------------------------------
// Compact notation used by the CLI and config files:
//   exp:<mean>   det:<value>   uni:<lo>,<hi>   pareto:<shape>
//   hyp:<w1>,<mean1>,<w2>,<mean2>,...   scaled:<divisor>:<inner>

namespace detail {

inline double parse_number(std::string_view text, std::string_view whole) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw ParseError("bad number '" + std::string(text) + "' in distribution '" +
                         std::string(whole) + "'");
    return value;
}

inline std::vector<double> parse_list(std::string_view text, std::string_view whole) {
    std::vector<double> out;
    while (true) {
        auto comma = text.find(',');
        out.push_back(parse_number(text.substr(0, comma), whole));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

inline std::string format_number(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace detail

inline DistributionSpec parse_distribution(std::string_view text) {
    auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw ParseError("distribution '" + std::string(text) + "' lacks 'kind:' prefix");
    std::string_view kind = text.substr(0, colon);
    std::string_view rest = text.substr(colon + 1);

    auto params = [&](std::size_t expected) {
        auto v = detail::parse_list(rest, text);
        if (v.size() != expected)
            throw ParseError("distribution '" + std::string(text) + "' expects " +
                             std::to_string(expected) + " parameter(s)");
        return v;
    };

    DistributionSpec spec = Deterministic{1.0};
    if (kind == "exp") {
        spec = exponential_with_mean(params(1)[0]);
    } else if (kind == "det") {
        spec = Deterministic{params(1)[0]};
    } else if (kind == "uni") {
        auto v = params(2);
        spec = Uniform{v[0], v[1]};
    } else if (kind == "pareto") {
        spec = Pareto{params(1)[0]};
    } else if (kind == "hyp") {
        auto v = detail::parse_list(rest, text);
        if (v.empty() || v.size() % 2 != 0)
            throw ParseError("hyp expects weight,mean pairs in '" + std::string(text) + "'");
        Hyperexponential h;
        for (std::size_t i = 0; i < v.size(); i += 2) {
            h.weights.push_back(v[i]);
            h.rates.push_back(1.0 / v[i + 1]);
        }
        spec = std::move(h);
    } else if (kind == "scaled") {
        auto inner_colon = rest.find(':');
        if (inner_colon == std::string_view::npos)
            throw ParseError("scaled expects 'scaled:<divisor>:<inner>'");
        double divisor = detail::parse_number(rest.substr(0, inner_colon), text);
        spec = scaled(parse_distribution(rest.substr(inner_colon + 1)), divisor);
    } else {
        throw ParseError("unknown distribution kind '" + std::string(kind) + "'");
    }
    try {
        validate(spec);
    } catch (const ParameterError& e) {
        throw ParseError(std::string(e.what()) + " in '" + std::string(text) + "'");
    }
    return spec;
}

inline std::string to_string(const DistributionSpec& spec) {
    using detail::format_number;
    return std::visit(
        detail::overloaded{
            [](const Exponential& d) { return "exp:" + format_number(1.0 / d.rate); },
            [](const Deterministic& d) { return "det:" + format_number(d.value); },
            [](const Uniform& d) {
                return "uni:" + format_number(d.lo) + "," + format_number(d.hi);
            },
            [](const Pareto& d) { return "pareto:" + format_number(d.shape); },
            [](const Hyperexponential& d) {
                std::string out = "hyp:";
                for (std::size_t i = 0; i < d.weights.size(); ++i) {
                    if (i) out += ",";
                    out += format_number(d.weights[i]) + "," + format_number(1.0 / d.rates[i]);
                }
                return out;
            },
            [](const Scaled& d) {
                return "scaled:" + format_number(d.divisor) + ":" + to_string(*d.inner);
            },
        },
        spec.kind);
}

}  // namespace blindq
