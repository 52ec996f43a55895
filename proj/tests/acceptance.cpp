// Acceptance suite: runs every criterion at full scale and prints one
// PASS/FAIL line per criterion. Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include <blindq/verify.hpp>

int main(int argc, char** argv) {
    blindq::VerifyOptions opts;
    opts.profile = blindq::Profile::full;
    opts.jobs = blindq::default_jobs();
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--seed") && i + 1 < argc) {
            opts.seed = std::stoull(argv[++i]);
        } else if (!std::strcmp(argv[i], "--quick")) {
            opts.profile = blindq::Profile::quick;
        } else {
            std::fprintf(stderr, "usage: acceptance [--seed N] [--quick]\n");
            return 2;
        }
    }

    int failed = 0;
    auto report = [&](const blindq::CriterionResult& r) {
        std::printf("%s  criterion %2d  %s: %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.detail.c_str());
        std::fflush(stdout);
        if (!r.pass) ++failed;
    };
    auto t0 = std::chrono::steady_clock::now();
    auto results = blindq::run_verification(opts, report);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%zu/%zu criteria passed (%.1f s)\n", results.size() - failed, results.size(), secs);
    return failed == 0 ? 0 : 1;
}
