#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
};

Result run(const std::string& args, const std::string& stdin_text = "") {
    std::string cmd = std::string(IHMON_CLI) + " " + args + " 2>/dev/null";
    if (!stdin_text.empty()) cmd = "printf '" + stdin_text + "' | " + cmd;
    FILE* p = popen(cmd.c_str(), "r");
    std::string out;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
    const int st = pclose(p);
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::string slurp(const fs::path& f) {
    std::ifstream in(f);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("ihmon_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string at(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

const std::string kFig2a = IHMON_DATA_DIR "/fig2a.json";

} // namespace

TEST_F(Cli, MonitorFig2aCsv) {
    const Result r = run("monitor --model " + kFig2a + " --threshold 0.25", "blue orange\\nblue orange orange\\n");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "0.100000\t0.300000\t1\n0.181818\t0.461538\t1\n");
}

TEST_F(Cli, MonitorJsonLines) {
    const Result r = run("monitor --model " + kFig2a + " --threshold 0.35 --format jsonlines", "blue orange\\n");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("{\"lo\":0.10000", 0), 0u) << r.out;
    EXPECT_NE(r.out.find("\"alarm\":0}"), std::string::npos);
}

TEST_F(Cli, MonitorSkipsMalformedLines) {
    const Result r = run("monitor --model " + kFig2a + " --threshold 0.5", "blue red\\norange\\nblue orange\\n");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "0.100000\t0.300000\t0\n");
}

TEST_F(Cli, MonitorHmmGivesPointVerdicts) {
    ASSERT_EQ(run("gen --benchmark unlikely --param n=1 --model " + at("m.json")).code, 0);
    const Result r = run("monitor --model " + at("m.json") + " --threshold 0.5", "start c1a c1b\\n");
    EXPECT_EQ(r.code, 0);
    ASSERT_FALSE(r.out.empty());
    const auto tab = r.out.find('\t');
    const auto tab2 = r.out.find('\t', tab + 1);
    EXPECT_EQ(r.out.substr(0, tab), r.out.substr(tab + 1, tab2 - tab - 1));
}

TEST_F(Cli, GenCountsStates) {
    ASSERT_EQ(run("gen --benchmark unlikely --model " + at("u.json") + " --config " + at("u.cfg")).code, 0);
    EXPECT_NE(slurp(at("u.json")).find("\"s15_bad\""), std::string::npos);
    EXPECT_EQ(run("validate --model " + at("u.json") + " --benchmark_config " + at("u.cfg")).code, 0);
    ASSERT_EQ(run("gen --benchmark snl --model " + at("s.json")).code, 0);
    EXPECT_NE(slurp(at("s.json")).find("\"c100\""), std::string::npos);
    EXPECT_EQ(slurp(at("s.json")).find("\"c101\""), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("gen --benchmark chess --model " + at("x.json")).code, 2);
    EXPECT_EQ(run("gen --benchmark unlikely --param width=3 --model " + at("x.json")).code, 2);
    EXPECT_EQ(run("gen --benchmark unlikely").code, 2);
    EXPECT_EQ(run("monitor --model " + kFig2a).code, 2);
    EXPECT_EQ(run("learn --benchmark unlikely --param n=3 --theta -1 --out " + at("x.json")).code, 2);
}

TEST_F(Cli, InputErrors) {
    EXPECT_EQ(run("monitor --model " + at("missing.json") + " --threshold 0.5", "blue\\n").code, 4);
    std::ofstream(at("broken.json")) << "{ not json";
    EXPECT_EQ(run("validate --model " + at("broken.json")).code, 4);
}

TEST_F(Cli, LearnConvergesAndWritesReport) {
    const Result r = run("learn --benchmark unlikely --param n=3 --theta 0.05 --seed 2 --out " + at("l.json") +
                      " --report " + at("r.csv"));
    EXPECT_EQ(r.code, 0);
    const std::string rep = slurp(at("r.csv"));
    EXPECT_EQ(rep.rfind("round,samples_total,mean_width,n_bad,converged\n", 0), 0u);
    EXPECT_EQ(rep.back(), '\n');
    EXPECT_NE(rep.find(",1\n"), std::string::npos);
    EXPECT_EQ(run("validate --model " + at("l.json")).code, 0);
    const Result m = run("monitor --model " + at("l.json") + " --threshold 0.5", "start c1a c1b\\n");
    EXPECT_EQ(m.code, 0);
}

TEST_F(Cli, LearnThetaOneIsOneRound) {
    ASSERT_EQ(run("learn --benchmark unlikely --param n=3 --theta 1 --out " + at("l.json") + " --report " +
                  at("r.csv"))
                  .code,
              0);
    const std::string rep = slurp(at("r.csv"));
    EXPECT_EQ(std::count(rep.begin(), rep.end(), '\n'), 2);
}

TEST_F(Cli, LearnNonConvergenceExitCode) {
    EXPECT_EQ(run("learn --benchmark unlikely --param n=3 --theta 0 --max_rounds 2 --out " + at("l.json")).code, 3);
}

TEST_F(Cli, LearnFromDataset) {
    ASSERT_EQ(run("gen --benchmark unlikely --param n=3 --model " + at("m.json") + " --config " + at("c.json") +
                  " --dataset " + at("d.txt") + " --paths 500")
                  .code,
              0);
    EXPECT_EQ(run("validate --model " + at("m.json") + " --dataset " + at("d.txt")).code, 0);
    EXPECT_EQ(run("learn --benchmark_config " + at("c.json") + " --method dataset --dataset " + at("d.txt") +
                  " --rounds 5 --out " + at("l.json"))
                  .code,
              0);
    std::ofstream(at("bad.txt")) << "start done\n";
    EXPECT_EQ(run("learn --benchmark_config " + at("c.json") + " --method dataset --dataset " + at("bad.txt") +
                  " --out " + at("l2.json"))
                  .code,
              4);
}

TEST_F(Cli, ConfigFile) {
    std::ofstream(at("run.ini")) << "benchmark = unlikely\nparam = n=3\ntheta = 1\nout = " << at("l.json") << "\n";
    EXPECT_EQ(run("learn --config_file " + at("run.ini")).code, 0);
    EXPECT_TRUE(fs::exists(at("l.json")));
    std::ofstream(at("typo.ini")) << "benchmark = unlikely\nthetta = 1\nout = " << at("l.json") << "\n";
    EXPECT_EQ(run("learn --config_file " + at("typo.ini")).code, 2);
}

TEST_F(Cli, EvalIsReproducible) {
    const std::string base = "eval --benchmark unlikely --param n=3 --method dataset --test_traces 100 --seeds 1,2 ";
    ASSERT_EQ(run(base + "--workers 1 --curves " + at("c1.csv") + " --summary " + at("s1.csv")).code, 0);
    ASSERT_EQ(run(base + "--workers 3 --curves " + at("c2.csv") + " --summary " + at("s2.csv")).code, 0);
    EXPECT_EQ(slurp(at("c1.csv")), slurp(at("c2.csv")));
    EXPECT_EQ(slurp(at("s1.csv")), slurp(at("s2.csv")));
    EXPECT_EQ(slurp(at("s1.csv")).rfind("method,seed,auc_fnr,auc_fpr,delta,over,under,equal\n", 0), 0u);
}
