// blindq: simulate preemptive single-server queues under blind and
// size-based scheduling policies.
//
//   blindq simulate  --instance FILE | --arrival SPEC --size SPEC --cycles N
//                    --policy NAME [--seed S] [--out DIR]
//   blindq sweep     --config FILE --out DIR [--jobs N]
//   blindq verify    quick|full [--seed S] [--only 1,2] [--jobs N]
//   blindq instance gen     --arrival SPEC --size SPEC --cycles N [--seed S] [--out FILE]
//   blindq instance cycles  --instance FILE [--out FILE]
//
// Distribution SPECs: exp:<mean> det:<v> uni:<lo>,<hi> pareto:<shape>
// hyp:<w1>,<mean1>,... scaled:<r>:<inner>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <blindq/estimators.hpp>
#include <blindq/instance.hpp>
#include <blindq/simulator.hpp>
#include <blindq/sweep.hpp>
#include <blindq/verify.hpp>

namespace fs = std::filesystem;

namespace {

blindq::Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw blindq::ParseError("cannot open instance file '" + path + "'");
    return blindq::parse_instance(in);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw blindq::Error("cannot write '" + path.string() + "'");
    return out;
}

struct GeneratorArgs {
    std::string arrival;
    std::string size;
    std::size_t cycles = 0;
    std::uint64_t seed = 1;
};

blindq::Instance generate_from(const GeneratorArgs& g) {
    return blindq::generate(blindq::parse_distribution(g.arrival), blindq::parse_distribution(g.size), g.cycles,
                            g.seed);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-event simulation of blind and size-based single-server scheduling"};
    app.require_subcommand(1);

    unsigned jobs = blindq::default_jobs();

    // simulate
    auto* sim = app.add_subcommand("simulate", "run one policy on one instance");
    std::string sim_instance, sim_policy, sim_out;
    GeneratorArgs sim_gen;
    auto* sim_file_opt = sim->add_option("--instance", sim_instance, "instance file");
    auto* sim_arr_opt = sim->add_option("--arrival", sim_gen.arrival, "interarrival law");
    sim->add_option("--size", sim_gen.size, "job-size law");
    sim->add_option("--cycles", sim_gen.cycles, "busy periods to generate");
    sim->add_option("--policy", sim_policy, "srpt|fifo|ps|fb|mlf|rmlf|ermlf")->required();
    sim->add_option("--seed", sim_gen.seed, "seed for generation and policy randomness");
    sim->add_option("--out", sim_out, "directory for jobs.csv, cycles.csv, summary.json");
    sim_file_opt->excludes(sim_arr_opt);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "heavy-traffic sweep over an r grid");
    std::string sweep_config, sweep_out;
    sweep->add_option("--config", sweep_config, "config file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", sweep_out, "output directory")->required();
    sweep->add_option("--jobs", jobs, "parallel workers (default $BLINDQ_JOBS)");

    // verify
    auto* verify = app.add_subcommand("verify", "run the acceptance suite");
    std::string profile = "quick";
    std::uint64_t verify_seed = 1;
    std::vector<int> only;
    double tolerance_scale = 1.0;
    verify->add_option("profile", profile, "quick|full")->check(CLI::IsMember({"quick", "full"}));
    verify->add_option("--seed", verify_seed, "master seed");
    verify->add_option("--only", only, "criterion ids to run")->delimiter(',');
    verify->add_option("--tolerance-scale", tolerance_scale, "multiply every tolerance (test hook)");
    verify->add_option("--jobs", jobs, "parallel workers (default $BLINDQ_JOBS)");

    // instance
    auto* inst = app.add_subcommand("instance", "instance utilities");
    inst->require_subcommand(1);
    auto* gen = inst->add_subcommand("gen", "generate an instance with a given number of busy periods");
    GeneratorArgs gen_args;
    std::string gen_out;
    gen->add_option("--arrival", gen_args.arrival, "interarrival law")->required();
    gen->add_option("--size", gen_args.size, "job-size law")->required();
    gen->add_option("--cycles", gen_args.cycles, "busy periods")->required();
    gen->add_option("--seed", gen_args.seed, "seed");
    gen->add_option("--out", gen_out, "output file (default stdout)");
    auto* cyc = inst->add_subcommand("cycles", "busy periods of an instance as CSV");
    std::string cyc_instance, cyc_out;
    cyc->add_option("--instance", cyc_instance, "instance file")->required();
    cyc->add_option("--out", cyc_out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            blindq::PolicyKind kind = blindq::parse_policy(sim_policy);
            blindq::Instance instance;
            if (!sim_instance.empty()) {
                instance = load_instance(sim_instance);
            } else {
                if (sim_gen.arrival.empty() || sim_gen.size.empty() || sim_gen.cycles == 0)
                    throw blindq::ParameterError("simulate needs --instance or --arrival, --size and --cycles");
                instance = generate_from(sim_gen);
            }
            blindq::SimResult result = blindq::simulate(instance, kind, sim_gen.seed);
            auto summary = blindq::summary_json(result);
            if (result.cycles.size() >= 2) {
                auto est = blindq::regen_mean_sojourn(result);
                summary["regen_mean_sojourn"] = est.point;
                summary["regen_ci"] = est.ci_halfwidth;
            }
            if (!sim_out.empty()) {
                fs::create_directories(sim_out);
                auto jobs_csv = open_out(fs::path(sim_out) / "jobs.csv");
                blindq::write_jobs_csv(instance, result, jobs_csv);
                auto cycles_csv = open_out(fs::path(sim_out) / "cycles.csv");
                blindq::write_sim_cycles_csv(result, cycles_csv);
                auto js = open_out(fs::path(sim_out) / "summary.json");
                js << summary.dump(2) << '\n';
            }
            std::cout << summary.dump(2) << '\n';
            return 0;
        }

        if (*sweep) {
            std::ifstream in(sweep_config);
            blindq::SweepConfig cfg = blindq::parse_sweep_config(in);
            double alpha = blindq::moments(cfg.size).moment_order;
            for (double k : cfg.kappas) {
                if (k > alpha)
                    std::cerr << "warning: moment order " << k << " exceeds the size law's finite-moment order "
                              << alpha << "; estimates are not meaningful\n";
            }
            blindq::SweepReport rep = blindq::run_sweep(cfg, jobs);
            fs::create_directories(sweep_out);
            fs::path dir(sweep_out);
            auto est = open_out(dir / "estimates.csv");
            blindq::write_estimates_csv(rep, est);
            auto mom = open_out(dir / "moments.csv");
            blindq::write_moments_csv(rep, mom);
            auto rat = open_out(dir / "ratios.csv");
            blindq::write_ratio_csv(rep, rat);
            auto fits = open_out(dir / "fits.json");
            fits << blindq::fits_json(rep).dump(2) << '\n';
            auto sum = open_out(dir / "summary.json");
            sum << blindq::summary_json(rep).dump(2) << '\n';
            std::cout << "wrote " << rep.points.size() << " estimate rows and " << rep.ratios.size()
                      << " ratio rows to " << sweep_out << '\n';
            return 0;
        }

        if (*verify) {
            blindq::VerifyOptions opts;
            opts.profile = profile == "full" ? blindq::Profile::full : blindq::Profile::quick;
            opts.seed = verify_seed;
            opts.only = only;
            opts.tolerance_scale = tolerance_scale;
            opts.jobs = jobs;
            bool all = true;
            nlohmann::ordered_json verdicts = nlohmann::ordered_json::array();
            blindq::run_verification(opts, [&](const blindq::CriterionResult& r) {
                std::cerr << (r.pass ? "PASS" : "FAIL") << "  criterion " << r.id << "  " << r.name << ": "
                          << r.detail << '\n';
                all = all && r.pass;
                verdicts.push_back(blindq::to_json(r));
            });
            nlohmann::ordered_json out;
            out["profile"] = profile;
            out["seed"] = verify_seed;
            out["pass"] = all;
            out["criteria"] = verdicts;
            std::cout << out.dump(2) << '\n';
            return all ? 0 : 1;
        }

        if (*gen) {
            blindq::Instance instance = generate_from(gen_args);
            if (gen_out.empty()) {
                blindq::serialize(instance, std::cout);
            } else {
                auto out = open_out(gen_out);
                blindq::serialize(instance, out);
            }
            return 0;
        }

        if (*cyc) {
            auto cycles = blindq::busy_periods(load_instance(cyc_instance));
            if (cyc_out.empty()) {
                blindq::write_cycles_csv(cycles, std::cout);
            } else {
                auto out = open_out(cyc_out);
                blindq::write_cycles_csv(cycles, out);
            }
            return 0;
        }
    } catch (const blindq::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
