#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>

#include "ambientflow/error.hpp"
#include "ambientflow/io.hpp"
#include "ambientflow/scenario.hpp"

using namespace ambientflow;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = AMBIENTFLOW_TEST_CONFIGS;
const fs::path kGolden = AMBIENTFLOW_TEST_GOLDEN;

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / "ambientflow_test_cli" / name;
    fs::remove_all(p);
    return p;
}

double as_number(const Json& j) {
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    return s == "inf" ? INFINITY : -INFINITY;
}

bool numeric_string(const Json& j) {
    return j.is_string() && (j == "nan" || j == "inf" || j == "-inf");
}

// Structural equality with a relative tolerance on numbers.
void expect_close(const Json& got, const Json& want, const std::string& path, double tol = 1e-9) {
    if ((got.is_number() || numeric_string(got)) && (want.is_number() || numeric_string(want))) {
        const double a = as_number(got), b = as_number(want);
        if (std::isnan(a) || std::isnan(b) || std::isinf(a) || std::isinf(b)) {
            EXPECT_EQ(got.dump(), want.dump()) << path;
            return;
        }
        EXPECT_LE(std::abs(a - b), tol * std::max(1.0, std::abs(b))) << path << ": " << a << " vs " << b;
        return;
    }
    ASSERT_EQ(got.type_name(), std::string(want.type_name())) << path;
    if (got.is_object()) {
        for (const auto& [k, v] : want.items()) {
            ASSERT_TRUE(got.contains(k)) << path << "." << k << " missing";
            expect_close(got[k], v, path + "." + k, tol);
        }
        for (const auto& [k, v] : got.items()) EXPECT_TRUE(want.contains(k)) << path << "." << k << " unexpected";
    } else if (got.is_array()) {
        ASSERT_EQ(got.size(), want.size()) << path;
        for (std::size_t i = 0; i < got.size(); ++i) expect_close(got[i], want[i], path + "[" + std::to_string(i) + "]", tol);
    } else {
        EXPECT_EQ(got, want) << path;
    }
}

std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_text(e.path());
    return files;
}

}  // namespace

class GoldenManifest : public ::testing::TestWithParam<std::string> {};

TEST_P(GoldenManifest, MatchesCheckedInManifest) {
    auto cfg = ScenarioConfig::parse(read_text(kConfigs / (GetParam() + ".json")));
    cfg.output = scratch(GetParam()).string();
    const auto r = run_scenario(cfg, 2);
    EXPECT_TRUE(r.passed);
    Json got = r.manifest;
    got["config"].erase("output");
    const auto golden = kGolden / (GetParam() + ".json");
    if (std::getenv("AMBIENTFLOW_UPDATE_GOLDEN")) {
        write_text_atomic(golden, got.dump(2) + "\n");
        GTEST_SKIP() << "golden rewritten";
    }
    const Json want = Json::parse(read_text(golden));
    expect_close(got, want, GetParam());
    const Json on_disk = Json::parse(read_text(fs::path(cfg.output) / "manifest.json"));
    EXPECT_EQ(on_disk, r.manifest);
    for (const auto& f : r.manifest["files"]) EXPECT_TRUE(fs::exists(fs::path(cfg.output) / f.get<std::string>())) << f;
}

INSTANTIATE_TEST_SUITE_P(Scenarios, GoldenManifest,
                         ::testing::Values("baseline-circle", "killing-equivalence", "loss-of-convexity", "round-point",
                                           "identity-audit", "constants"),
                         [](const auto& info) {
                             std::string s = info.param;
                             for (auto& c : s) c = c == '-' ? '_' : c;
                             return s;
                         });

TEST(Determinism, ByteIdenticalReruns) {
    for (const char* name : {"loss-of-convexity", "round-point"}) {
        auto cfg = ScenarioConfig::parse(read_text(kConfigs / (std::string(name) + ".json")));
        cfg.output = scratch(std::string("det_") + name).string();
        run_scenario(cfg, 1);
        const auto first = snapshot_dir(cfg.output);
        fs::remove_all(cfg.output);
        run_scenario(cfg, 3);
        const auto second = snapshot_dir(cfg.output);
        ASSERT_EQ(first.size(), second.size()) << name;
        for (const auto& [file, bytes] : first) {
            ASSERT_TRUE(second.count(file)) << file;
            EXPECT_TRUE(second.at(file) == bytes) << name << "/" << file;
        }
    }
}

TEST(Config, RoundTripsThroughJson) {
    for (const char* name : {"baseline-circle", "identity-audit", "loss-of-convexity"}) {
        const auto cfg = ScenarioConfig::parse(read_text(kConfigs / (std::string(name) + ".json")));
        const auto again = ScenarioConfig::from_json(cfg.to_json());
        EXPECT_EQ(again.to_json(), cfg.to_json()) << name;
    }
}

TEST(Config, Rejections) {
    auto kind_of = [](const std::string& text) {
        try {
            ScenarioConfig::parse(text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::InternalConsistency;
    };
    EXPECT_EQ(kind_of("{not json"), ErrorKind::Config);
    EXPECT_EQ(kind_of(R"({"scenario": "nope"})"), ErrorKind::Config);
    EXPECT_EQ(kind_of(R"({"curve": {"type": "circle"}})"), ErrorKind::Config);
    EXPECT_EQ(kind_of(R"({"scenario": "baseline-circle", "typo": 1})"), ErrorKind::Config);
    EXPECT_EQ(kind_of(R"({"scenario": "baseline-circle", "curve": {"type": "square"}})"), ErrorKind::Config);
    EXPECT_EQ(kind_of(R"({"scenario": "baseline-circle", "control": {"dt_policy": "adaptive"}})"), ErrorKind::Config);
    EXPECT_EQ(kind_of(R"({"scenario": "baseline-circle", "control": {"vertices": 3}})"), ErrorKind::Config);
    EXPECT_EQ(kind_of(R"({"scenario": "baseline-circle", "params": {"sigma1": "big"}})"), ErrorKind::Config);
}

TEST(Config, ScenarioPreconditions) {
    auto cfg = ScenarioConfig::parse(R"({"scenario": "loss-of-convexity", "curve": {"type": "circle"}})");
    cfg.output = scratch("bad").string();
    EXPECT_THROW(run_scenario(cfg, 1), Error);
    cfg = ScenarioConfig::parse(R"({"scenario": "killing-equivalence", "field": {"kind": "saddle"}})");
    cfg.output = scratch("bad").string();
    EXPECT_THROW(run_scenario(cfg, 1), Error);
}

TEST(Constants, ThresholdExample) {
    ScenarioConfig cfg;
    cfg.scenario = "constants";
    cfg.C0 = 0.0;
    cfg.C1 = 0.0;
    cfg.C2 = 8.0;
    const auto j = constants_report(cfg);
    EXPECT_NEAR(j["K"].get<double>(), 2.0, 1e-12);
    // 17 significant digits survive a text round trip
    const auto back = Json::parse(j.dump());
    EXPECT_EQ(back["cubic"]["bisection"].get<double>(), j["cubic"]["bisection"].get<double>());
}

TEST(TrajectoryDir, VerifyAndRescaleStoredRun) {
    auto cfg = ScenarioConfig::parse(read_text(kConfigs / "baseline-circle.json"));
    cfg.output = scratch("stored").string();
    run_scenario(cfg, 1);
    const auto loaded = load_trajectory(cfg.output);
    ASSERT_TRUE(loaded.extinction.has_value());
    EXPECT_NEAR(loaded.extinction->T, 0.5, 5e-3);
    const auto v = verify_directory(cfg.output);
    EXPECT_TRUE(v.passed) << v.manifest.dump(2);
    EXPECT_TRUE(fs::exists(fs::path(cfg.output) / "verify.json"));
    const auto r = rescale_directory(cfg.output);
    EXPECT_TRUE(r.passed) << r.manifest.dump(2);
    EXPECT_TRUE(fs::exists(fs::path(cfg.output) / "rescaled" / "rescaled.svg"));
}

TEST(TrajectoryDir, MissingDirectory) {
    try {
        load_trajectory(scratch("absent"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingInput);
    }
}

TEST(Threads, EnvironmentCapAndFailurePropagation) {
    setenv("AMBIENTFLOW_THREADS", "3", 1);
    EXPECT_EQ(thread_cap(), 3u);
    setenv("AMBIENTFLOW_THREADS", "zero", 1);
    EXPECT_GE(thread_cap(), 1u);
    unsetenv("AMBIENTFLOW_THREADS");
    std::vector<int> hit(50, 0);
    parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
    for (int h : hit) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, 4, [](std::size_t i) { if (i == 7) throw Error(ErrorKind::Domain, "x"); }), Error);
}
