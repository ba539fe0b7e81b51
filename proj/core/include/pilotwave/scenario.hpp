#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pilotwave/grid.hpp"
#include "pilotwave/verify.hpp"

namespace pilotwave {

enum class ScenarioKind { plane_wave, free_gaussian, harmonic_ground, point_source_2d, custom };

/// Checks a run can perform. The first eight produce residual table rows,
/// the rest produce summary rows.
enum class Check {
    schrodinger,
    model_field,
    gauge_identity,
    continuity,
    eikonal,
    stationary_action,
    mass_ratio,
    velocity_gauge,
    gauge_transfer,
    equivariance,
    source_term,
    isotropy,
};

std::string to_string(ScenarioKind kind);
std::string to_string(Check check);
std::optional<ScenarioKind> scenario_kind_from(std::string_view name);
std::optional<Check> check_from(std::string_view name);

struct GridConfig {
    int dim = 1;
    std::array<double, kMaxDim> extent{1.0, 1.0, 1.0};
    std::array<std::size_t, kMaxDim> points{1, 1, 1};
};

struct PotentialConfig {
    enum class Kind { free, harmonic, expression };
    Kind kind = Kind::free;
    double omega = 1.0;
    Point center{};
    std::string expression;
};

struct InitialConfig {
    double k = 1.0;
    double sigma0 = 1.0;
    double omega = 1.0;
    Point center{};
    // Custom scenarios only: real and imaginary parts as expressions of x, y, z.
    std::string re;
    std::string im = "0";
    bool normalize = true;
};

struct EnsembleConfig {
    std::size_t size = 0;
    std::uint64_t seed = 1;
    std::size_t substeps = 4;
    std::optional<double> t_check;  // final frame when unset
    bool frozen_control = true;
};

struct DetectorConfig {
    double radius_sigmas = 3.0;
    double t_ring = 0.5;
    std::size_t bins = 16;
};

struct MollifierConfig {
    enum class Velocity { b_over_m, guidance, given };
    double epsilon = 0.0;
    Point position{};
    Velocity velocity_mode = Velocity::b_over_m;
    Point velocity{};
};

struct OutputConfig {
    std::size_t trajectory_files = 16;
    bool heatmaps = true;
};

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::plane_wave;
    std::string id;
    GridConfig grid;
    double dt = 1e-3;
    std::size_t steps = 100;
    std::size_t frame_stride = 1;
    Units units;
    Propagator method = Propagator::split_step;
    DerivativeScheme scheme = DerivativeScheme::spectral;
    PotentialConfig potential;
    InitialConfig initial;
    std::optional<std::string> action;
    EnsembleConfig ensemble;
    DetectorConfig detector;
    std::optional<MollifierConfig> mollifier;
    double node_threshold = 1e-10;
    std::string output_dir;
    OutputConfig output;
    std::vector<Check> checks;

    double final_time() const { return dt * static_cast<double>(steps); }
    GridSpec make_grid() const;
};

/// Parses and validates a JSON config, filling defaults for the chosen
/// scenario. Unknown keys are rejected by name. Throws ValidationError; JSON
/// syntax errors carry the line and column.
ScenarioConfig parse_config(std::string_view text);

/// Canonical JSON with every default spelled out; parse_config accepts it and
/// reproduces the same config.
std::string serialize_config(const ScenarioConfig& config);

/// Range and consistency checks; parse_config calls this.
void validate_config(const ScenarioConfig& config);

struct ScenarioInfo {
    ScenarioKind kind;
    std::string description;
};
std::vector<ScenarioInfo> list_scenarios();

/// PILOTWAVE_OUTPUT_ROOT, when set, replaces the configured directory with
/// $PILOTWAVE_OUTPUT_ROOT/<id>.
std::filesystem::path resolve_output_dir(const ScenarioConfig& config);

struct ManifestFile {
    std::string path;  // relative to the output directory, '/' separated
    std::uintmax_t bytes = 0;
    std::string sha256;
};

struct PhaseTiming {
    std::string phase;
    double seconds = 0.0;
};

struct PhaseFailure {
    std::string phase;
    std::string message;
};

struct SummaryRow {
    std::string metric;
    double value = 0.0;
};

struct RunManifest {
    std::string config_json;
    std::string version;
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;
    std::vector<PhaseTiming> phases;
    std::vector<PhaseFailure> failures;
    std::vector<ResidualReport> residuals;
    std::vector<SummaryRow> summary;
    std::vector<ManifestFile> files;

    bool ok() const { return failures.empty(); }
    std::optional<double> metric(std::string_view name) const;
    const ResidualReport* residual(std::string_view equation) const;
};

/// Runs every phase of a scenario and writes its outputs plus manifest.json
/// into the output directory. Phase failures are recorded in the manifest
/// rather than thrown; later phases that depend on a failed one are skipped.
/// Throws Error only when the output directory itself is unusable: files left
/// from an earlier run (those listed in its manifest) are replaced, anything
/// else present is refused.
RunManifest run_scenario(const ScenarioConfig& config);
RunManifest run_scenario(const ScenarioConfig& config, const std::filesystem::path& output_dir);

/// Recomputes sizes and checksums of the files a manifest lists. Returns the
/// paths that are missing or differ.
std::vector<std::string> verify_manifest(const std::filesystem::path& output_dir);

std::string version_string();

}  // namespace pilotwave
