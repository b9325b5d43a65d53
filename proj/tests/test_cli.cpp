#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace {

struct Result {
    int code;
    std::string out;
};

// Runs the CLI; stderr is merged into out when `merge` is set.
Result run(const std::string& args, bool merge = false) {
    std::string cmd = std::string(DYNKIN_CLI) + " " + args + (merge ? " 2>&1" : " 2>/dev/null");
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe)
        return {-1, ""};
    std::string out;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
        out.append(buf.data(), n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::istringstream in(s);
    std::string l;
    while (std::getline(in, l))
        v.push_back(l);
    return v;
}

std::vector<std::string> data_lines(const std::string& s) {
    std::vector<std::string> v;
    for (auto& l : lines(s))
        if (!l.empty() && l[0] != '#')
            v.push_back(l);
    return v;
}

std::filesystem::path tmpdir() {
    auto d = std::filesystem::temp_directory_path() / "dynkin_cli_tests";
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace

TEST(Cli, SolveJson) {
    const auto r = run("solve --mu0 -1 --mu1 1 --sigma 0.5 --eps 0.1");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["solution"]["A"].get<double>(), 0.329, 1e-3);
    EXPECT_NEAR(j["solution"]["B"].get<double>(), 0.868, 1e-3);
    EXPECT_TRUE(j["qvi"]["all_pass"].get<bool>());
    EXPECT_EQ(j["version"], "0.1.0");
    EXPECT_EQ(j["params"]["mu0"], -1.0);
    EXPECT_TRUE(j["simulation"].contains("seed"));
    EXPECT_FALSE(r.out.find("threads") != std::string::npos);
}

TEST(Cli, SolveRejectsInvalidDrift) {
    const auto r = run("solve --mu0 1", true);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("mu0 < 0 < mu1"), std::string::npos);
}

TEST(Cli, SolveCsv) {
    const auto r = run("solve --format csv");
    ASSERT_EQ(r.code, 0);
    const auto d = data_lines(r.out);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d[0], "A,B,a,b,beta1,beta2,delta,C1,C2,D1,D2,qvi_pass");
    EXPECT_EQ(d[1].rfind("0.3291992", 0), 0u);
    EXPECT_EQ(r.out.rfind("# dynkin 0.1.0", 0), 0u);
}

TEST(Cli, SolveCurve) {
    const auto r = run("solve --curve 9");
    ASSERT_EQ(r.code, 0);
    const auto d = data_lines(r.out);
    ASSERT_EQ(d.size(), 10u);
    EXPECT_EQ(d[0], "pi,value_uninformed,V0,V1");
}

TEST(Cli, InputErrors) {
    EXPECT_EQ(run("solve --pi 0.3 --phi 2").code, 2);
    EXPECT_EQ(run("solve --pi 1.5").code, 2);
    EXPECT_EQ(run("solve --phi -1").code, 2);
    EXPECT_EQ(run("solve --sigma 0").code, 2);
    EXPECT_EQ(run("solve --bogus 1").code, 2);
    EXPECT_EQ(run("nosuchcommand").code, 2);
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("solve --format xml").code, 2);
    EXPECT_EQ(run("sweep --param rho").code, 2);
    EXPECT_EQ(run("mc --dt 0").code, 2);
    EXPECT_EQ(run("path --format json").code, 2);
}

TEST(Cli, Symmetric) {
    const auto r = run("symmetric");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["symmetric"]["a"].get<double>(), 0.193, 1e-3);
    EXPECT_NEAR(j["symmetric"]["b"].get<double>(), 0.758, 1e-3);
}

TEST(Cli, VoiGrid) {
    const auto r = run("voi --grid 99");
    ASSERT_EQ(r.code, 0);
    const auto d = data_lines(r.out);
    ASSERT_EQ(d.size(), 100u);
    EXPECT_EQ(d[0], "pi,U_sym,U_asym,diff");
    double pi, us, ua, diff;
    ASSERT_EQ(std::sscanf(d[1].c_str(), "%lf,%lf,%lf,%lf", &pi, &us, &ua, &diff), 4);
    EXPECT_DOUBLE_EQ(pi, 0.01);
    EXPECT_NEAR(us, 1.0, 1e-3);
    EXPECT_NEAR(ua, 1.0, 1e-3);
}

TEST(Cli, PathDeterministic) {
    const auto a = run("path --pi 0.35 --seed 7");
    const auto b = run("path --pi 0.35 --seed 7");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("# a="), std::string::npos);
    EXPECT_NE(a.out.find("t,PiStar,Gamma"), std::string::npos);
    EXPECT_NE(a.out, run("path --pi 0.35 --seed 8").out);
}

TEST(Cli, PathDefaultsToFigurePrior) {
    const auto r = run("path --seed 7");
    EXPECT_NE(r.out.find("pi=0.34999999999999998"), std::string::npos);
}

TEST(Cli, PathFull) {
    const auto r = run("path --full --horizon 0.01 --seed 3 --measure tilted1");
    ASSERT_EQ(r.code, 0);
    const auto d = data_lines(r.out);
    ASSERT_EQ(d.size(), 102u);
    EXPECT_EQ(d[0], "t,X,Phi,PhiB,PiStar,Gamma,L");
}

TEST(Cli, SweepGrid) {
    const auto r = run("sweep --param mu1 --from 0.25 --to 3 --points 25");
    ASSERT_EQ(r.code, 0);
    const auto d = data_lines(r.out);
    ASSERT_EQ(d.size(), 26u);
    EXPECT_EQ(d[0], "param,value,A,B,a,b,status");
    EXPECT_EQ(d[1].rfind("mu1,0.25,", 0), 0u);
    EXPECT_EQ(d[25].rfind("mu1,3,", 0), 0u);
}

TEST(Cli, SweepFlagsInvalidPoints) {
    const auto r = run("sweep --param mu1 --from -1 --to 1 --points 3");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("skipped"), std::string::npos);
}

TEST(Cli, McReport) {
    const auto r = run("mc --phi 0.6 --paths 100000 --dt 1e-4");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j["checks"].size(), 4u);
    for (const auto& c : j["checks"]) {
        EXPECT_TRUE(c["pass"].get<bool>()) << c.dump();
        for (const char* k : {"check", "params", "phi", "estimate", "stderr", "oracle", "tolerance",
                              "bias_bound", "censored_fraction", "pass"})
            EXPECT_TRUE(c.contains(k)) << k;
    }
}

TEST(Cli, McIndependentOfThreads) {
    const auto a = run("mc --phi 0.6 --paths 2000 --threads 1");
    const auto b = run("mc --phi 0.6 --paths 2000 --threads 3");
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, Deviations) {
    const auto r = run("deviations --paths 5000 --format csv");
    ASSERT_EQ(r.code, 0);
    const auto d = data_lines(r.out);
    ASSERT_EQ(d.size(), 1u + 225u + 5u + 2u);
    EXPECT_EQ(d[0], "player,strategy,parameter,phi,equilibrium,deviation,improvement,raw_improvement,stderr,raw_stderr,"
                    "tolerance,method,pass");
    for (std::size_t i = 1; i < d.size(); ++i)
        EXPECT_NE(d[i].find(",true"), std::string::npos) << d[i];
}

TEST(Cli, ConfigFileAndOverride) {
    const auto f = tmpdir() / "game.cfg";
    {
        std::ofstream o(f);
        o << "mu1=2\nsigma=0.5\neps=0.1\n";
    }
    const auto from_file = nlohmann::json::parse(run("solve --config " + f.string()).out);
    EXPECT_EQ(from_file["params"]["mu1"], 2.0);
    EXPECT_LT(from_file["solution"]["A"].get<double>(), 0.329);
    const auto overridden = nlohmann::json::parse(run("solve --config " + f.string() + " --mu1 1").out);
    EXPECT_EQ(overridden["params"]["mu1"], 1.0);
    EXPECT_NEAR(overridden["solution"]["A"].get<double>(), 0.329, 1e-3);
    EXPECT_EQ(run("solve --config " + (tmpdir() / "missing.cfg").string()).code, 2);
}

TEST(Cli, OutAndManifest) {
    const auto out = tmpdir() / "voi.csv", man = tmpdir() / "voi.json";
    const auto r = run("voi --grid 5 --out " + out.string() + " --manifest " + man.string());
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(out);
    std::stringstream buf;
    buf << in.rdbuf();
    EXPECT_EQ(data_lines(buf.str()).size(), 6u);
    std::ifstream mi(man);
    const auto m = nlohmann::json::parse(mi);
    std::vector<std::string> keys;
    for (auto it = m.begin(); it != m.end(); ++it)
        keys.push_back(it.key());
    std::sort(keys.begin(), keys.end());
    EXPECT_EQ(keys, (std::vector<std::string>{"reference_lines", "series", "title", "xlabel", "ylabel"}));
}

TEST(Cli, Version) {
    const auto r = run("--version");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("0.1.0"), std::string::npos);
}
