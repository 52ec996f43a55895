#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct CliRun {
    int status;
    std::string out;
};

CliRun run(const std::string& args) {
    std::string cmd = std::string(BLINDQ_CLI) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return {-1, {}};
    std::string out;
    std::array<char, 4096> buf;
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
    int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string data(const std::string& name) { return std::string(BLINDQ_TEST_DATA) + "/" + name; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("blindq_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::size_t lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

}  // namespace

TEST(Cli, SimulateInstanceFile) {
    CliRun r = run("simulate --instance " + data("two_jobs.txt") + " --policy srpt");
    ASSERT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("\"total_flow\": 5.0"), std::string::npos) << r.out;
}

TEST(Cli, UnknownPolicyFails) {
    EXPECT_NE(run("simulate --instance " + data("two_jobs.txt") + " --policy nosuch").status, 0);
}

TEST(Cli, MissingInstanceFileFails) {
    EXPECT_NE(run("simulate --instance /nonexistent --policy srpt").status, 0);
}

TEST(Cli, SimulateWritesIdenticalFilesForSameSeed) {
    fs::path a = scratch("sim_a"), b = scratch("sim_b");
    std::string common = "simulate --arrival exp:1.25 --size exp:1 --cycles 500 --policy rmlf --seed 4 --out ";
    ASSERT_EQ(run(common + a.string()).status, 0);
    ASSERT_EQ(run(common + b.string()).status, 0);
    for (const char* f : {"jobs.csv", "cycles.csv", "summary.json"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    EXPECT_EQ(lines(slurp(a / "cycles.csv")), 501u);
}

TEST(Cli, InstanceGenThenCycles) {
    fs::path dir = scratch("inst");
    fs::create_directories(dir);
    fs::path file = dir / "inst.txt";
    ASSERT_EQ(run("instance gen --arrival det:2 --size det:1 --cycles 3 --out " + file.string()).status, 0);
    EXPECT_EQ(slurp(file), "# blindq-instance v1\n0 1\n2 1\n4 1\n");
    CliRun c = run("instance cycles --instance " + file.string());
    ASSERT_EQ(c.status, 0);
    EXPECT_EQ(c.out, "cycle_index,N,P,I,start,end\n1,1,1,,0,1\n2,1,1,1,2,3\n3,1,1,1,4,5\n");
}

TEST(Cli, SweepWritesOutputs) {
    fs::path dir = scratch("sweep");
    ASSERT_EQ(run("sweep --config " + data("sweep_small.ini") + " --out " + dir.string() + " --jobs 2").status, 0);
    EXPECT_EQ(lines(slurp(dir / "estimates.csv")), 5u);
    EXPECT_EQ(lines(slurp(dir / "ratios.csv")), 3u);
    EXPECT_EQ(lines(slurp(dir / "moments.csv")), 9u);  // 2 points x 2 kappas x {P, N}
    EXPECT_TRUE(fs::exists(dir / "fits.json"));
    EXPECT_TRUE(fs::exists(dir / "summary.json"));
}

TEST(Cli, VerifySubsetPasses) {
    CliRun r = run("verify quick --only 7,9");
    EXPECT_EQ(r.status, 0) << r.out;
    EXPECT_NE(r.out.find("\"pass\": true"), std::string::npos);
}

TEST(Cli, VerifyFailsWhenToleranceIsZero) {
    // Monte-Carlo criteria cannot hold with zero tolerance.
    CliRun r = run("verify quick --only 3 --tolerance-scale 0");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.out.find("\"pass\": false"), std::string::npos);
}
