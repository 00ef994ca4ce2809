#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "shapetest/cli.hpp"

using namespace shapetest;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "shapetest");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch() {
    const fs::path p = fs::temp_directory_path() / "shapetest_cli_tests";
    fs::create_directories(p);
    return p;
}

std::string write_file(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
}

std::string fixture(bool negate) {
    const std::string path = (scratch() / (negate ? "hours_neg.csv" : "hours.csv")).string();
    std::vector<std::string> args{"fixture", "--n", "1500", "--seed", "7", "-o", path};
    if (negate) args.push_back("--negate");
    REQUIRE(run(args).code == 0);
    return path;
}

}  // namespace

TEST_CASE("csv reading", "[cli]") {
    std::istringstream in("# comment\ny,z1,w1\n1,2,3\n4,5,6\n");
    const auto t = cli::read_csv(in);
    CHECK(t.column("z1") == 1);
    CHECK(t.column("q") == -1);
    const Sample s = cli::sample_from_table(t);
    CHECK(s.n() == 2);
    CHECK(s.controls() == 1);
    CHECK(s.w(1, 0) == 6);

    std::istringstream bad("y,z1\n1,x\n");
    CHECK_THROWS(cli::read_csv(bad));
}

TEST_CASE("fixture is increasing in hours", "[cli]") {
    const Sample s = cli::hours_fixture(500, 2, 3, false);
    CHECK(s.n() == 500);
    CHECK(s.controls() == 2);
    CHECK(s.z.minCoeff() >= 3.0);
    CHECK(s.z.maxCoeff() <= 90.0);
}

TEST_CASE("test subcommand on the monotone fixture", "[cli]") {
    const auto r = run({"test", fixture(false), "--shape", "mon", "--seed", "5", "--threads", "1"});
    REQUIRE(r.code == cli::kExitNoReject);
    const auto j = nlohmann::json::parse(r.out);
    CHECK_FALSE(j["reject"].get<bool>());
    CHECK(j["p_value"].get<double>() > 0.05);
    CHECK(j["provenance"]["seed"] == 5);
    CHECK(j["provenance"]["gamma_rule"] == "logn");
    CHECK(j["bootstrap_values"].size() == 200);
}

TEST_CASE("test subcommand rejects the decreasing fixture", "[cli]") {
    const auto r = run({"test", fixture(true), "--shape", "mon", "--threads", "1"});
    CHECK(r.code == cli::kExitReject);
    CHECK(nlohmann::json::parse(r.out)["reject"].get<bool>());
}

TEST_CASE("test output is byte identical across runs and thread counts", "[cli]") {
    const auto path = fixture(false);
    const auto a = run({"test", path, "--shape", "conc", "--bootstrap", "100", "--threads", "1"});
    const auto b = run({"test", path, "--shape", "conc", "--bootstrap", "100", "--threads", "2"});
    CHECK(a.out == b.out);
    const auto trimmed = run({"test", path, "--z-range", "10,60", "--bootstrap", "100", "--threads", "1"});
    CHECK(nlohmann::json::parse(trimmed.out)["n"].get<int>() < 1500);
}

TEST_CASE("operators subcommand", "[cli]") {
    const auto f = write_file("ops.csv", "z,value\n1,21\n2,88\n3,3\n4,68\n");
    const auto r = run({"operators", f, "--op", "rearrange"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# operator=rearrange phi_sup=67") != std::string::npos);
    CHECK(r.out.find("2,88,21") != std::string::npos);

    const auto conv = write_file("conv.csv", "z,value\n0,4\n1,1\n2,0\n3,1\n4,4\n");
    CHECK(run({"operators", conv, "--op", "gcm"}).out.find("phi_sup=0\n") != std::string::npos);

    const auto bump = write_file("bump.csv", "z,value\n2,0\n0,0\n1,1\n");
    CHECK(run({"operators", bump, "--op", "gcm"}).out.find("phi_sup=1\n") != std::string::npos);
    CHECK(run({"operators", bump, "--op", "rearrange+gcm"}).code == 0);

    const auto grid2 = write_file("grid2.csv", "z1,z2,value\n0,0,1\n0,1,0\n1,0,0\n1,1,2\n");
    const auto r2 = run({"operators", grid2, "--op", "rearrange"});
    CHECK(r2.code == 0);
    CHECK(r2.out.rfind("z1,z2,value,transformed\n", 0) == 0);
}

TEST_CASE("exit codes", "[cli]") {
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"bogus"}).code == cli::kExitUsage);
    CHECK(run({"test"}).code == cli::kExitUsage);
    CHECK(run({"test", fixture(false), "--shape", "wiggly"}).code == cli::kExitUsage);
    CHECK(run({"test", fixture(false), "--bootstrap", "5"}).code == cli::kExitUsage);
    CHECK(run({"simulate", "no-such-suite"}).code != 0);
    CHECK(run({"operators", write_file("ok.csv", "z,value\n0,1\n1,2\n"), "--op", "smooth"}).code == cli::kExitUsage);
    const auto missing = run({"test", (scratch() / "absent.csv").string()});
    CHECK(missing.code == cli::kExitError);
    CHECK_FALSE(missing.err.empty());
    const auto ragged = write_file("ragged.csv", "z1,z2,value\n0,0,1\n0,1,0\n1,0,0\n");
    CHECK(run({"operators", ragged}).code == cli::kExitError);
}

TEST_CASE("simulate subcommand", "[cli]") {
    const std::vector<std::string> args{"simulate", "size-mon-uni", "--reps", "4", "--n", "300",
                                        "--knots", "3", "--bootstrap", "60", "--no-timing",
                                        "--gamma-rule", "all", "--threads", "1"};
    const auto a = run(args), b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    // 3 designs x 3 rules plus the header
    CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 10);

    const auto pc = run({"simulate", "power-curves", "--reps", "2", "--n", "300", "--knots", "3",
                         "--bootstrap", "60", "--no-timing", "--threads", "1"});
    REQUIRE(pc.code == 0);
    CHECK(pc.out.rfind("delta,family,", 0) == 0);
}

TEST_CASE("the installed binary agrees with the library", "[cli]") {
    const char* exe = std::getenv("SHAPETEST_CLI");
    if (!exe) SKIP("SHAPETEST_CLI not set");
    const auto f = write_file("ops_bin.csv", "z,value\n1,40\n2,54\n3,42\n4,69\n");
    const auto out = (scratch() / "ops_bin.out").string();
    const int status = std::system((std::string(exe) + " operators " + f + " -o " + out).c_str());
    CHECK(status == 0);
    std::ifstream in(out);
    const std::string text((std::istreambuf_iterator<char>(in)), {});
    CHECK(text.find("phi_sup=12") != std::string::npos);
}
