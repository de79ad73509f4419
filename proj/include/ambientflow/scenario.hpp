#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ambientflow/field.hpp"
#include "ambientflow/flow.hpp"
#include "ambientflow/geometry.hpp"

namespace ambientflow {

using Json = nlohmann::json;

struct CurveSpec {
    enum class Kind { Circle, Ellipse, ParabolaClosure, File };
    Kind kind = Kind::Circle;
    double radius = 1.0;              ///< circle
    double a = 1.0, b = 1.0;          ///< ellipse semi-axes
    double epsilon = 0.05, delta = 1.0;  ///< parabola closure
    Point2 center{0.0, 0.0};
    std::size_t vertices = 256;
    std::string path;                 ///< file: CSV or JSON vertex list

    ClosedCurve build() const;
    Json to_json() const;
    static CurveSpec from_json(const Json& j);
};

/// A declarative run. Every field is echoed into the manifest, so two equal
/// configs produce byte-identical outputs.
struct ScenarioConfig {
    std::string scenario;  ///< baseline-circle | killing-equivalence | loss-of-convexity | round-point | identity-audit | constants
    CurveSpec curve;
    AmbientField field = AmbientField::zero();
    FlowParams params;
    StepControl control;
    std::string output = "out";

    std::vector<std::size_t> ladder;   ///< identity-audit: vertex counts (CFL dt halves per √2 in N)
    std::vector<CurveSpec> curves;     ///< identity-audit sweep; empty means {curve}
    std::vector<AmbientField> fields;  ///< identity-audit sweep; empty means {field}
    std::vector<double> epsilons;      ///< loss-of-convexity
    double region_radius = 0.5;        ///< R0 for field bounds and hypotheses
    double rescaled_step = 0.025;      ///< Δt̂ between rescaled snapshots (sets the area-ratio cadence)
    std::size_t matched_times = 20;    ///< killing-equivalence
    double matched_fraction = 0.9;     ///< matched times span (0, fraction·T]
    std::optional<double> C0, C1, C2;  ///< constants: override the sampled field bounds

    static ScenarioConfig parse(const std::string& json_text);
    static ScenarioConfig from_json(const Json& j);
    Json to_json() const;
};

/// Positive integer from AMBIENTFLOW_THREADS, else the hardware concurrency.
std::size_t thread_cap();

/// Runs fn(0..n-1) on at most `threads` workers; rethrows the first exception.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

struct RunResult {
    Json manifest;
    bool passed = false;
};

/// Runs the scenario, writes every output under config.output and the
/// manifest (manifest.json) last.
RunResult run_scenario(const ScenarioConfig& config, std::size_t threads = thread_cap());

/// The constants block alone (no files).
Json constants_report(const ScenarioConfig& config);

// --- trajectory directories -----------------------------------------------------

/// series.csv, integrals.csv, snapshots/*.csv, trajectory.svg, trajectory.json.
/// Returns the written paths relative to `dir`.
std::vector<std::string> write_trajectory(const std::filesystem::path& dir, const Trajectory& traj,
                                          const std::optional<Extinction>& extinction = std::nullopt);

struct LoadedTrajectory {
    Trajectory traj;
    std::optional<Extinction> extinction;
};
LoadedTrajectory load_trajectory(const std::filesystem::path& dir);

/// Winding, identity residuals, geometric estimate, derivative boundedness and
/// embeddedness of a stored trajectory. Writes verify.json into the directory.
RunResult verify_directory(const std::filesystem::path& dir);

/// Rescales a stored trajectory (T, 𝒪 from the directory, else estimated) and
/// writes rescaled/ with series, snapshots, roundness, Gaussian monitor and SVG.
RunResult rescale_directory(const std::filesystem::path& dir);

}  // namespace ambientflow
