#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "imb/cli/config.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("imb_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Run run(const std::string& args, const fs::path& dir) {
    const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
    const std::string cmd = std::string(IMB_LAB_EXE) + " " + args + " > " + o.string() + " 2> " + e.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(Config, FileThenFlags) {
    const auto dir = scratch("config");
    {
        std::ofstream f(dir / "run.cfg");
        f << "# comment\ncurve = circle:R=2\nmu = 0.4   # trailing\ntol-override = orbit=1e-9\n";
    }
    const auto file = imb::cli::read_config_file((dir / "run.cfg").string());
    const auto cfg = imb::cli::merge_settings("info", file, {{"mu", "0.7"}, {"tol-override", "rot=1e-5"}});
    EXPECT_EQ(cfg.curve, "circle:R=2");
    EXPECT_DOUBLE_EQ(cfg.resolve_mu(), 0.7);
    const auto tol = cfg.tolerances();
    EXPECT_DOUBLE_EQ(tol.orbit, 1e-9);
    EXPECT_DOUBLE_EQ(tol.rot, 1e-5);
}

TEST(Config, LineNumbersInErrors) {
    const auto dir = scratch("config_err");
    {
        std::ofstream f(dir / "bad.cfg");
        f << "curve = circle:R=1\n\nbogus = 3\n";
    }
    try {
        imb::cli::read_config_file((dir / "bad.cfg").string());
        FAIL();
    } catch (const imb::cli::ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
    }
    EXPECT_THROW(imb::cli::merge_settings("info", {}, {{"grid", "10by3"}}), imb::cli::ConfigError);
    EXPECT_THROW(imb::cli::merge_settings("info", {}, {{"tol-override", "nope=1"}}), imb::cli::ConfigError);
    EXPECT_THROW(imb::cli::merge_settings("info", {}, {{"u0", "1.5"}}), imb::cli::ConfigError);
}

TEST(Config, LarmorRadiusFromPhysics) {
    imb::cli::RunConfig cfg;
    cfg.field = 2.0;
    cfg.mass = 1.0;
    cfg.charge = -1.0;
    cfg.speed = 1.0;
    EXPECT_DOUBLE_EQ(cfg.resolve_mu(), 0.5);
    EXPECT_DOUBLE_EQ(*cfg.energy(), 0.5);
    cfg.field.reset();
    EXPECT_THROW(cfg.resolve_mu(), imb::cli::ConfigError);
}

TEST(Cli, InfoEllipse) {
    const auto dir = scratch("info");
    const auto r = run("info --curve ellipse:lambda=2 --mu 0.3 --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = slurp(dir / "info.csv");
    EXPECT_EQ(first_line(csv), "# imb-lab v0.1.0 info");
    EXPECT_NE(csv.find("regime,StrongField"), std::string::npos);
    EXPECT_NE(csv.find("rho_min,0.5"), std::string::npos);
    EXPECT_NE(csv.find("rho_max,4"), std::string::npos);
}

TEST(Cli, InfoPhysicsAndBoundaryRegime) {
    const auto dir = scratch("info_phys");
    auto r = run("info --curve circle:R=1 --B 2 --mass 1 --charge -1 --speed 1 --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(slurp(dir / "info.csv").find("mu,0.5\n"), std::string::npos);
    r = run("info --curve circle:R=1 --mu 1 --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(slurp(dir / "info.csv").find("regime,Boundary"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitTwo) {
    const auto dir = scratch("errors");
    EXPECT_EQ(run("info --curve ellipse:lambda=2 --out " + dir.string(), dir).code, 2);
    EXPECT_EQ(run("info --curve blob:x=1 --mu 1 --out " + dir.string(), dir).code, 2);
    EXPECT_EQ(run("info --mu -0.5 --out " + dir.string(), dir).code, 2);
    EXPECT_EQ(run("frobnicate --mu 1", dir).code, 2);
    EXPECT_EQ(run("info --mu 1 --no-such-flag 3", dir).code, 2);
    {
        std::ofstream f(dir / "bad.cfg");
        f << "mu = 0.3\nthis line has no equals sign\n";
    }
    const auto r = run("info --config " + (dir / "bad.cfg").string() + " --out " + dir.string(), dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find(":2:"), std::string::npos) << r.err;
}

TEST(Cli, FlagsOverrideConfigFile) {
    const auto dir = scratch("override");
    {
        std::ofstream f(dir / "run.cfg");
        f << "curve = ellipse:lambda=2\nmu = 5\n";
    }
    const auto r = run("info --config " + (dir / "run.cfg").string() + " --mu 0.3 --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(slurp(dir / "info.csv").find("regime,StrongField"), std::string::npos);
}

TEST(Cli, PortraitDeterministicAcrossJobs) {
    const auto a = scratch("portrait_a"), b = scratch("portrait_b");
    const std::string args = "portrait --curve ellipse:lambda=2 --mu 0.3 --grid 3x4 --iters 80 --seed 5";
    ASSERT_EQ(run(args + " --jobs 1 --out " + a.string(), a).code, 0);
    ASSERT_EQ(run(args + " --jobs 3 --out " + b.string(), b).code, 0);
    const std::string csv = slurp(a / "portrait.csv");
    EXPECT_EQ(csv, slurp(b / "portrait.csv"));
    EXPECT_EQ(first_line(csv), "# imb-lab v0.1.0 portrait");
    EXPECT_NE(csv.find("\norbit_id,k,phi,u\n"), std::string::npos);
    EXPECT_TRUE(fs::exists(a / "portrait.svg"));
    EXPECT_NE(slurp(a / "portrait.svg").find("<svg"), std::string::npos);
}

TEST(Cli, PortraitEmptyGrid) {
    const auto dir = scratch("portrait_empty");
    ASSERT_EQ(run("portrait --curve circle:R=1 --mu 0.5 --grid 0x5 --out " + dir.string(), dir).code, 0);
    EXPECT_EQ(slurp(dir / "portrait.csv"), "# imb-lab v0.1.0 portrait\norbit_id,k,phi,u\n");
}

TEST(Cli, OrbitSingleStepRecord) {
    const auto dir = scratch("orbit");
    ASSERT_EQ(run("orbit --curve circle:R=1 --mu 0.5 --iters 1 --theta0 1.5707963267948966 --out " + dir.string(), dir).code, 0);
    std::istringstream in(slurp(dir / "orbit.csv"));
    std::string schema, header, row, extra;
    std::getline(in, schema);
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_FALSE(std::getline(in, extra));
    EXPECT_EQ(schema, "# imb-lab v0.1.0 orbit");
    EXPECT_EQ(header.rfind("k,s,u,", 0), 0u);
    EXPECT_EQ(row.rfind("0,0,", 0), 0u);
    EXPECT_TRUE(fs::exists(dir / "orbit.svg"));
}

TEST(Cli, PeriodicEllipseAndFailure) {
    const auto dir = scratch("periodic");
    auto r = run("periodic --curve ellipse:lambda=2 --mu 0.3 --m 2 --n 4 --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = slurp(dir / "periodic.csv");
    EXPECT_EQ(first_line(csv), "# imb-lab v0.1.0 periodic");
    EXPECT_NE(csv.find("variational,ok,2,4,2,"), std::string::npos);
    EXPECT_NE(csv.find("shooting,ok,2,4,"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "periodic_points.csv"));
    EXPECT_TRUE(fs::exists(dir / "periodic.svg"));

    r = run("periodic --curve ellipse:lambda=2 --mu 5 --m 1 --n 3 --method variational --out " + dir.string(), dir);
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(slurp(dir / "periodic.csv").find("variational,failed"), std::string::npos);
    EXPECT_NE(r.err.find("RegimeUnsupported"), std::string::npos);
}

TEST(Cli, CheckReports) {
    const auto dir = scratch("check");
    auto r = run("check --curve ellipse:lambda=2 --mu 0.3 --samples 40 --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.out << r.err;
    auto rep = nlohmann::json::parse(slurp(dir / "check.json"));
    EXPECT_TRUE(rep["pass"].get<bool>());
    for (const auto& s : rep["suites"]) EXPECT_NE(s["status"], "fail") << s.dump();

    r = run("check --curve ellipse:lambda=2 --mu 5 --samples 40 --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.out;
    rep = nlohmann::json::parse(slurp(dir / "check.json"));
    bool non_twist = false;
    for (const auto& s : rep["suites"]) non_twist = non_twist || (s["name"] == "twist" && s["status"] == "non-twist-detected");
    EXPECT_TRUE(non_twist);

    r = run("check --curve ellipse:lambda=2 --mu 1 --samples 40 --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.out;
    rep = nlohmann::json::parse(slurp(dir / "check.json"));
    bool tangency = false;
    for (const auto& s : rep["suites"]) tangency = tangency || (s["name"] == "tangency" && s["status"] == "detected");
    EXPECT_TRUE(tangency);
}

TEST(Cli, CheckSeedReproducible) {
    const auto a = scratch("check_a"), b = scratch("check_b");
    ASSERT_EQ(run("check --curve circle:R=1 --mu 0.5 --samples 20 --seed 3 --out " + a.string(), a).code, 0);
    ASSERT_EQ(run("check --curve circle:R=1 --mu 0.5 --samples 20 --seed 3 --out " + b.string(), b).code, 0);
    EXPECT_EQ(slurp(a / "check.json"), slurp(b / "check.json"));
}

TEST(Cli, CausticCircle) {
    const auto dir = scratch("caustic");
    ASSERT_EQ(run("caustic --curve circle:R=1 --mu 0.5 --u0 -0.5 --iters 100 --out " + dir.string(), dir).code, 0);
    const std::string sum = slurp(dir / "caustic_summary.csv");
    EXPECT_NE(sum.find("inner_caustic,1"), std::string::npos);
    EXPECT_NE(sum.find("outer_constant,1"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "caustic.svg"));
    EXPECT_TRUE(fs::exists(dir / "caustic_envelope.csv"));
}

TEST(Cli, FourierDemoCurve) {
    const auto dir = scratch("fourier");
    const auto r = run(std::string("info --curve fourier:file=") + IMB_DEMO_DIR + "/oval.fourier --mu 0.2 --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(slurp(dir / "info.csv").find("regime,StrongField"), std::string::npos);
}
