#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "retrobeam/baselines.hpp"
#include "retrobeam/control.hpp"
#include "retrobeam/loop.hpp"
#include "retrobeam/trace.hpp"
#include "retrobeam/trajectory.hpp"

namespace retrobeam {

enum class Engine { Phasor, Carrier };

struct CarrierOptions {
    double f0 = 2.4e9;
    double sample_rate = 48e9;
    int power_window = 10000;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    Engine engine = Engine::Phasor;
    bool carrier_feature = false;  // opt-in gate for the carrier engine
    double duration = 10e-6;
    double t_p = 26.33e-9;  // phasor loop circulation time; carrier mode measures its own
    std::shared_ptr<const ChannelTrajectory> trajectory;
    LoopParams loop;
    ControllerParams controller;
    CarrierOptions carrier;
    std::string trace_path;            // empty = no file output
    std::vector<std::string> plot_paths;

    void validate() const;  // throws ConfigError
};

// Parse / serialize the JSON scenario format. Throws ConfigError naming the
// offending field; unknown keys are rejected.
ScenarioConfig scenario_from_json(const std::string& text);
std::string scenario_to_json_template();

// Closed-loop run driving the selected engine; emits trace/plots when paths
// are set in the config (resolved against the output directory).
SimulationTrace run_scenario(const ScenarioConfig& cfg);

enum class Method {
    ClosedLoop,        // the retrodirective loop under PI control
    PositionTracking,  // open-loop steering from known positions
    PilotConjugate,    // single-sided conjugation of one pilot column
    NmSimultaneous,    // iterative power superposition, all elements at once
    NmSequential,      // iterative power superposition, element by element
};

const char* to_string(Method m);
Method method_from_string(const std::string& name);

struct MethodReport {
    Method method = Method::ClosedLoop;
    SimulationTrace trace;
    std::vector<double> ratio;     // efficiency / xi_max(t) per row
    double mean_ratio = 0.0;
    double final_ratio = 0.0;
    double settling_time_s = 0.0;  // on the efficiency series
};

struct ComparisonReport {
    std::vector<MethodReport> methods;

    const MethodReport& find(Method m) const;
    std::string summary_csv() const;
};

// Same trajectory, same seed, every requested method. Throws ConfigError on an
// empty method list.
ComparisonReport run_comparison(const ScenarioConfig& cfg, const std::vector<Method>& methods);

struct SweepTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::string to_csv() const;
    void write_csv(const std::filesystem::path& path) const;
};

// Parameter sweeps exposed by the CLI: loop gain vs measured efficiency,
// startup overshoot vs disturbance bias, and the marginal-gain regression.
SweepTable sweep_gain(const ScenarioConfig& cfg, double span_db, double step_db);
SweepTable sweep_bias_overshoot(const ControllerParams& c, const PlantParams& p, double r0_dbw,
                                double y0_dbw, double g_lo_db, double g_hi_db, double step_db);
SweepTable sweep_marginal_regression(int n_channels, std::uint64_t seed,
                                     RegressionResult* summary = nullptr);

// Directory for relative output paths: RETROBEAM_OUT_DIR, else cwd.
std::filesystem::path output_directory();

void emit_scenario_plots(const SimulationTrace& trace, const std::vector<std::string>& paths);
void emit_comparison_plot(const ComparisonReport& report, const std::filesystem::path& path);

}  // namespace retrobeam
