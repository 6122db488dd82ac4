#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "retrobeam/channel.hpp"
#include "retrobeam/control.hpp"
#include "retrobeam/errors.hpp"
#include "retrobeam/scenario.hpp"
#include "retrobeam/trace.hpp"

namespace {

using namespace retrobeam;

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << text;
        if (!out.good()) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::filesystem::path resolve_out(const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_relative()) p = output_directory() / p;
    return p;
}

struct CommonOpts {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config, "scenario JSON file (defaults when omitted)");
    cmd->add_option("--seed", opts.seed, "override the scenario seed");
    cmd->add_option("--duration", opts.duration, "override the run duration, seconds");
}

ScenarioConfig load_scenario(const CommonOpts& opts) {
    ScenarioConfig cfg = opts.config.empty() ? scenario_from_json(scenario_to_json_template())
                                             : scenario_from_json(read_text(opts.config));
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.duration) cfg.duration = *opts.duration;
    return cfg;
}

Engine parse_engine(const std::string& name) {
    if (name == "phasor") return Engine::Phasor;
    if (name == "carrier") return Engine::Carrier;
    throw ConfigError("engine", "unknown engine: " + name);
}

void print_run_summary(const SimulationTrace& trace, const ScenarioConfig& cfg) {
    if (trace.empty()) {
        std::cout << "no rows\n";
        return;
    }
    const TraceRow& last = trace.back();
    std::vector<double> ts, power;
    ts.reserve(trace.size());
    power.reserve(trace.size());
    for (const auto& row : trace.rows) {
        ts.push_back(row.t);
        power.push_back(row.power_dbw);
    }
    std::printf("rows: %zu  (%.6g s simulated)\n", trace.size(), last.t);
    std::printf("final power: %.4f dBW  (reference %.4f dBW)\n", last.power_dbw,
                cfg.controller.reference_dbw);
    std::printf("final command: %.4f dB  loop g: %.4f dB\n", last.r_db, last.g_db);
    std::printf("final efficiency: %.6f of xi_max %.6f  alignment %.6f\n", last.efficiency,
                last.xi_max, last.alignment);
    std::printf("stability: %s\n", to_string(last.stability));
    std::printf("power settling estimate: %.6g s\n", settling_time_estimate(ts, power));
}

int cmd_run(const CommonOpts& common, const std::string& engine, bool feature_carrier,
            const std::string& trace_path, const std::vector<std::string>& plots) {
    ScenarioConfig cfg = load_scenario(common);
    if (!engine.empty()) cfg.engine = parse_engine(engine);
    if (feature_carrier) cfg.carrier_feature = true;
    if (!trace_path.empty()) cfg.trace_path = trace_path;
    for (const auto& p : plots) cfg.plot_paths.push_back(p);
    const SimulationTrace trace = run_scenario(cfg);
    print_run_summary(trace, cfg);
    return 0;
}

int cmd_compare(const CommonOpts& common, std::vector<std::string> method_names,
                const std::string& out, const std::string& plot) {
    ScenarioConfig cfg = load_scenario(common);
    std::vector<Method> methods;
    if (method_names.empty()) {
        methods = {Method::ClosedLoop, Method::PositionTracking, Method::PilotConjugate,
                   Method::NmSimultaneous, Method::NmSequential};
    } else {
        for (const auto& name : method_names) methods.push_back(method_from_string(name));
    }
    const ComparisonReport report = run_comparison(cfg, methods);
    const std::string csv = report.summary_csv();
    std::cout << csv;
    if (!out.empty()) write_text_atomic(resolve_out(out), csv);
    if (!plot.empty()) emit_comparison_plot(report, plot);
    return 0;
}

int emit_table(const SweepTable& table, const std::string& out) {
    std::cout << table.to_csv();
    if (!out.empty()) table.write_csv(resolve_out(out));
    return 0;
}

int cmd_design(double settle_s, double t_p, double k_f, double y0_dbw) {
    PlantParams plant;
    plant.t_p = t_p;
    plant.y0_dbw = y0_dbw;
    const DesignResult d = design_gains(settle_s, plant, k_f);
    std::printf("k_f: %.17g\n", d.params.k_f);
    std::printf("k_i: %.17g 1/s\n", d.params.k_i);
    std::printf("damping: %s\n", to_string(d.damping));
    std::printf("poles: %.6g%+.6gi  %.6g%+.6gi 1/s\n", d.pole_analysis.p1.real(),
                d.pole_analysis.p1.imag(), d.pole_analysis.p2.real(), d.pole_analysis.p2.imag());
    std::printf("settling time: %.6g s\n", d.settling_time_s);
    std::printf("overshoot bound: %.6g dB per dB of disturbance step\n", d.overshoot_bound_db);
    std::printf("ramp error: %.6g dB per (dB/s) of drift\n", d.ramp_error_per_dbps);
    for (const auto& w : d.warnings) std::printf("warning: %s\n", w.c_str());
    return 0;
}

int cmd_channel_gen(int rows, int cols, double spacing, double wavelength, double gain,
                    double separation, bool random, int random_n, int random_m, double sigma_max,
                    std::uint64_t seed, const std::string& out) {
    ChannelSnapshot snap;
    if (random) {
        snap = random_passive_channel(random_n, random_m, seed, sigma_max);
    } else {
        const ArrayGeometry rx = ArrayGeometry::grid(rows, cols, spacing, wavelength, gain);
        const ArrayGeometry gen = rx.translated(Vec3{0.0, 0.0, separation});
        snap = synth_channel(gen, rx);
    }
    save_channel(snap, resolve_out(out));
    std::printf("wrote %s (%d x %d ports)\n", out.c_str(), snap.generator_ports(),
                snap.receiver_ports());
    return 0;
}

int cmd_channel_inspect(const std::string& path) {
    const ChannelSnapshot snap = load_channel(path);
    const EigenAnalysis ea = eig_analysis(snap);
    std::printf("ports: %d generator, %d receiver  z0: %.6g ohm\n", snap.generator_ports(),
                snap.receiver_ports(), snap.z0);
    for (int i = 0; i < ea.xi.size(); ++i) {
        std::printf("mode %d: xi = %.17g  (sigma = %.17g)\n", i, ea.xi(i), std::sqrt(ea.xi(i)));
    }
    std::printf("efficiency ceiling: %.17g\n", ea.xi_max());
    std::printf("marginal |LG|: %.17g  (%.6f dB)\n", 1.0 / ea.xi_max(),
                -20.0 * std::log10(ea.xi_max()));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"retrodirective beam power transfer simulator"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "closed-loop simulation of one scenario");
    CommonOpts run_common;
    add_common(run, run_common);
    std::string run_engine;
    bool run_feature_carrier = false;
    std::string run_trace;
    std::vector<std::string> run_plots;
    bool run_template = false;
    run->add_option("--engine", run_engine, "phasor or carrier");
    run->add_flag("--feature-carrier", run_feature_carrier, "enable the carrier engine");
    run->add_option("--trace", run_trace, "trace CSV output path");
    run->add_option("--plot", run_plots, "SVG plot path (repeatable; name with 'eff' plots efficiency)");
    run->add_flag("--print-template", run_template, "print a scenario JSON template and exit");

    // compare
    auto* compare = app.add_subcommand("compare", "beam control methods on one scenario");
    CommonOpts cmp_common;
    add_common(compare, cmp_common);
    std::vector<std::string> cmp_methods;
    std::string cmp_out, cmp_plot;
    compare->add_option("--method", cmp_methods,
                        "closed-loop, position, pilot-conjugate, nm-simultaneous, nm-sequential "
                        "(repeatable; default all)");
    compare->add_option("--out", cmp_out, "summary CSV output path");
    compare->add_option("--plot", cmp_plot, "comparison SVG path");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "parameter sweeps");
    sweep->require_subcommand(1);

    auto* sweep_gain_cmd = sweep->add_subcommand("gain", "loop gain against measured efficiency");
    CommonOpts gain_common;
    add_common(sweep_gain_cmd, gain_common);
    double gain_span = 12.0, gain_step = 0.5;
    std::string gain_out;
    sweep_gain_cmd->add_option("--span-db", gain_span, "sweep width centered on the marginal gain");
    sweep_gain_cmd->add_option("--step-db", gain_step, "grid step");
    sweep_gain_cmd->add_option("--out", gain_out, "CSV output path");

    auto* sweep_bias_cmd = sweep->add_subcommand("bias", "startup peak against gain misestimate");
    double bias_kf = 1.0, bias_ki = 1e6, bias_tp = 26.33e-9;
    double bias_r0 = -30.0, bias_y0 = -140.0;
    double bias_lo = -120.0, bias_hi = 0.0, bias_step = 5.0;
    std::string bias_out;
    sweep_bias_cmd->add_option("--k-f", bias_kf, "proportional gain");
    sweep_bias_cmd->add_option("--k-i", bias_ki, "integral gain, 1/s");
    sweep_bias_cmd->add_option("--t-p", bias_tp, "loop circulation time, seconds");
    sweep_bias_cmd->add_option("--r0-dbw", bias_r0, "reference step");
    sweep_bias_cmd->add_option("--y0-dbw", bias_y0, "initial output power");
    sweep_bias_cmd->add_option("--g-lo", bias_lo, "lowest effective disturbance, dB");
    sweep_bias_cmd->add_option("--g-hi", bias_hi, "highest effective disturbance, dB");
    sweep_bias_cmd->add_option("--step-db", bias_step, "grid step");
    sweep_bias_cmd->add_option("--out", bias_out, "CSV output path");

    auto* sweep_reg_cmd =
        sweep->add_subcommand("regression", "marginal gain against the dominant mode");
    int reg_channels = 30;
    std::uint64_t reg_seed = 1;
    std::string reg_out;
    sweep_reg_cmd->add_option("--channels", reg_channels, "number of random channels");
    sweep_reg_cmd->add_option("--seed", reg_seed, "channel generator seed");
    sweep_reg_cmd->add_option("--out", reg_out, "CSV output path");

    // design
    auto* design = app.add_subcommand("design", "pick controller gains for a settling target");
    double design_settle = 0.0, design_tp = 26.33e-9, design_kf = 1.0, design_y0 = -140.0;
    design->add_option("--settle", design_settle, "settling time target, seconds")->required();
    design->add_option("--t-p", design_tp, "loop circulation time, seconds");
    design->add_option("--k-f", design_kf, "proportional gain");
    design->add_option("--y0-dbw", design_y0, "initial output power");

    // channel
    auto* channel = app.add_subcommand("channel", "channel snapshot files");
    channel->require_subcommand(1);

    auto* chan_gen = channel->add_subcommand("gen", "synthesize a channel snapshot");
    int cg_rows = 2, cg_cols = 2;
    double cg_spacing = 0.0625, cg_wavelength = 0.125, cg_gain = 1.0, cg_separation = 0.2;
    bool cg_random = false;
    int cg_n = 4, cg_m = 4;
    double cg_sigma = 0.5;
    std::uint64_t cg_seed = 1;
    std::string cg_out;
    chan_gen->add_option("--rows", cg_rows, "grid rows");
    chan_gen->add_option("--cols", cg_cols, "grid columns");
    chan_gen->add_option("--spacing-m", cg_spacing, "element spacing");
    chan_gen->add_option("--wavelength-m", cg_wavelength, "operating wavelength");
    chan_gen->add_option("--element-gain", cg_gain, "element gain");
    chan_gen->add_option("--separation-m", cg_separation, "array separation");
    chan_gen->add_flag("--random", cg_random, "draw a random passive matrix instead");
    chan_gen->add_option("--gen-ports", cg_n, "random matrix generator ports");
    chan_gen->add_option("--rx-ports", cg_m, "random matrix receiver ports");
    chan_gen->add_option("--sigma-max", cg_sigma, "largest singular value of the random matrix");
    chan_gen->add_option("--seed", cg_seed, "random matrix seed");
    chan_gen->add_option("--out", cg_out, "output JSON path")->required();

    auto* chan_inspect = channel->add_subcommand("inspect", "print the beam modes of a snapshot");
    std::string ci_path;
    chan_inspect->add_option("path", ci_path, "channel JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (run_template) {
                std::cout << scenario_to_json_template();
                return 0;
            }
            return cmd_run(run_common, run_engine, run_feature_carrier, run_trace, run_plots);
        }
        if (compare->parsed()) return cmd_compare(cmp_common, cmp_methods, cmp_out, cmp_plot);
        if (sweep->parsed()) {
            if (sweep_gain_cmd->parsed()) {
                return emit_table(sweep_gain(load_scenario(gain_common), gain_span, gain_step),
                                  gain_out);
            }
            if (sweep_bias_cmd->parsed()) {
                ControllerParams c;
                c.k_f = bias_kf;
                c.k_i = bias_ki;
                PlantParams plant;
                plant.t_p = bias_tp;
                plant.y0_dbw = bias_y0;
                return emit_table(sweep_bias_overshoot(c, plant, bias_r0, bias_y0, bias_lo,
                                                       bias_hi, bias_step),
                                  bias_out);
            }
            if (sweep_reg_cmd->parsed()) {
                RegressionResult fit;
                const SweepTable table = sweep_marginal_regression(reg_channels, reg_seed, &fit);
                std::fprintf(stderr, "fit: slope %.6f  intercept %.6f dB  r^2 %.8f  n %d\n",
                             fit.slope, fit.intercept, fit.r_squared, fit.n);
                return emit_table(table, reg_out);
            }
        }
        if (design->parsed()) return cmd_design(design_settle, design_tp, design_kf, design_y0);
        if (channel->parsed()) {
            if (chan_gen->parsed()) {
                return cmd_channel_gen(cg_rows, cg_cols, cg_spacing, cg_wavelength, cg_gain,
                                       cg_separation, cg_random, cg_n, cg_m, cg_sigma, cg_seed,
                                       cg_out);
            }
            if (chan_inspect->parsed()) return cmd_channel_inspect(ci_path);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
