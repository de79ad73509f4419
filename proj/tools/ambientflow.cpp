#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ambientflow/error.hpp"
#include "ambientflow/io.hpp"
#include "ambientflow/scenario.hpp"

using namespace ambientflow;

namespace {

enum Exit { Ok = 0, Runtime = 1, Usage = 2, Strict = 3 };

void print_verdicts(const Json& m) {
    if (!m.contains("verdicts")) return;
    for (const auto& [name, ok] : m["verdicts"].items())
        std::printf("  %-32s %s\n", name.c_str(), ok.get<bool>() ? "ok" : "FAILED");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curve shortening flow with an ambient force field"};
    app.require_subcommand(1);
    bool strict = false;

    auto* run = app.add_subcommand("run", "Run a scenario from a JSON config");
    std::string config_path, out_dir;
    run->add_option("config", config_path, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out,-o", out_dir, "Override the output directory");
    run->add_flag("--strict", strict, "Exit 3 if any verdict fails");

    auto* cons = app.add_subcommand("constants", "Print K and M for given parameters as JSON");
    std::string params_path;
    double sigma1 = 1.0, sigma2 = 0.0, region = 0.5;
    std::optional<double> C0, C1, C2;
    cons->add_option("params", params_path, "Optional JSON config supplying params, field and constants")
        ->check(CLI::ExistingFile);
    auto* s1 = cons->add_option("--sigma1", sigma1);
    auto* s2 = cons->add_option("--sigma2", sigma2);
    auto* r0 = cons->add_option("--R0", region, "Radius of the region sampled for field bounds");
    cons->add_option("--C0", C0);
    cons->add_option("--C1", C1);
    cons->add_option("--C2", C2);

    auto* verify = app.add_subcommand("verify", "Recheck a stored trajectory directory");
    std::string traj_dir;
    verify->add_option("dir", traj_dir)->required()->check(CLI::ExistingDirectory);
    verify->add_flag("--strict", strict, "Exit 3 if any verdict fails");

    auto* rescale = app.add_subcommand("rescale", "Write the rescaled flow of a stored trajectory");
    rescale->add_option("dir", traj_dir)->required()->check(CLI::ExistingDirectory);
    rescale->add_flag("--strict", strict, "Exit 3 if any verdict fails");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Ok : Usage;
    }

    try {
        RunResult r;
        if (*run) {
            auto cfg = ScenarioConfig::parse(read_text(config_path));
            if (!out_dir.empty()) cfg.output = out_dir;
            r = run_scenario(cfg, thread_cap());
            std::printf("%s -> %s\n", cfg.scenario.c_str(), cfg.output.c_str());
        } else if (*cons) {
            ScenarioConfig cfg;
            cfg.scenario = "constants";
            if (!params_path.empty()) cfg = ScenarioConfig::parse(read_text(params_path));
            if (*s1) cfg.params.sigma1 = sigma1;
            if (*s2) cfg.params.sigma2 = sigma2;
            if (*r0) cfg.region_radius = region;
            if (C0) cfg.C0 = C0;
            if (C1) cfg.C1 = C1;
            if (C2) cfg.C2 = C2;
            cfg.params.validate();
            std::cout << constants_report(cfg).dump(2) << "\n";
            return Ok;
        } else if (*verify) {
            r = verify_directory(traj_dir);
            std::printf("verify %s\n", traj_dir.c_str());
        } else {
            r = rescale_directory(traj_dir);
            std::printf("rescale %s\n", traj_dir.c_str());
        }
        print_verdicts(r.manifest);
        std::printf("%s\n", r.passed ? "all verdicts passed" : "some verdicts failed");
        return strict && !r.passed ? Strict : Ok;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.kind() == ErrorKind::Config || e.kind() == ErrorKind::MissingInput ? Usage : Runtime;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return Runtime;
    }
}
