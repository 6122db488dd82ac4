#include "retrobeam/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <tuple>
#include <utility>

#include "json.hpp"
#include "retrobeam/channel.hpp"
#include "retrobeam/errors.hpp"
#include "retrobeam/plot.hpp"
#include "retrobeam/rng.hpp"

#if defined(RETROBEAM_HAS_CARRIER)
#include "retrobeam/carrier.hpp"
#endif

namespace retrobeam {

namespace {

using nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_path(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

void expect_keys(const ordered_json& j, const std::string& prefix,
                 std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(prefix.empty() ? "$" : prefix, "expected an object");
    for (const auto& item : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return item.key() == k; });
        if (!known) throw ConfigError(join_path(prefix, item.key()), "unknown field");
    }
}

double get_number(const ordered_json& j, const std::string& prefix, const char* key,
                  double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(join_path(prefix, key), "expected a number");
    return v.get<double>();
}

int get_int(const ordered_json& j, const std::string& prefix, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(join_path(prefix, key), "expected an integer");
    return v.get<int>();
}

bool get_bool(const ordered_json& j, const std::string& prefix, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_boolean()) throw ConfigError(join_path(prefix, key), "expected a boolean");
    return v.get<bool>();
}

std::string get_string(const ordered_json& j, const std::string& prefix, const char* key,
                       const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_string()) throw ConfigError(join_path(prefix, key), "expected a string");
    return v.get<std::string>();
}

Vec3 get_vec3(const ordered_json& j, const std::string& prefix, const char* key, Vec3 fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 3 ||
        !std::all_of(v.begin(), v.end(), [](const ordered_json& e) { return e.is_number(); })) {
        throw ConfigError(join_path(prefix, key), "expected [x, y, z]");
    }
    return Vec3{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

struct GeometrySpec {
    int rows = 2;
    int cols = 2;
    double spacing = 0.0625;
    double wavelength = 0.125;
    double element_gain = 1.0;
    double separation = 0.2;
};

GeometrySpec parse_geometry(const ordered_json& j, const std::string& prefix) {
    GeometrySpec g;
    expect_keys(j, prefix,
                {"rows", "cols", "spacing_m", "wavelength_m", "element_gain", "separation_m"});
    g.rows = get_int(j, prefix, "rows", g.rows);
    g.cols = get_int(j, prefix, "cols", g.cols);
    g.spacing = get_number(j, prefix, "spacing_m", g.spacing);
    g.wavelength = get_number(j, prefix, "wavelength_m", g.wavelength);
    g.element_gain = get_number(j, prefix, "element_gain", g.element_gain);
    g.separation = get_number(j, prefix, "separation_m", g.separation);
    if (g.rows < 1 || g.cols < 1) throw ConfigError(join_path(prefix, "rows"), "needs rows, cols >= 1");
    if (!(g.spacing > 0.0)) throw ConfigError(join_path(prefix, "spacing_m"), "must be positive");
    if (!(g.wavelength > 0.0)) {
        throw ConfigError(join_path(prefix, "wavelength_m"), "must be positive");
    }
    if (!(g.separation > 0.0)) {
        throw ConfigError(join_path(prefix, "separation_m"), "must be positive");
    }
    return g;
}

ArrayGeometry receiver_grid(const GeometrySpec& g) {
    return ArrayGeometry::grid(g.rows, g.cols, g.spacing, g.wavelength, g.element_gain);
}

ArrayGeometry generator_grid(const GeometrySpec& g) {
    return receiver_grid(g).translated(Vec3{0.0, 0.0, g.separation});
}

std::shared_ptr<const ChannelTrajectory> parse_trajectory(const ordered_json& j,
                                                          const std::string& prefix) {
    expect_keys(j, prefix, {"kind", "path", "geometry", "revolve", "obstruction", "scripted"});
    const std::string kind = get_string(j, prefix, "kind", "static");
    GeometrySpec g;
    if (j.contains("geometry")) g = parse_geometry(j.at("geometry"), join_path(prefix, "geometry"));

    auto wrap = [](ChannelTrajectory traj) {
        return std::make_shared<const ChannelTrajectory>(std::move(traj));
    };
    try {
        if (kind == "static") {
            return wrap(ChannelTrajectory::fixed_geometry(generator_grid(g), receiver_grid(g)));
        }
        if (kind == "file") {
            const std::string path = get_string(j, prefix, "path", "");
            if (path.empty()) throw ConfigError(join_path(prefix, "path"), "required for kind=file");
            return wrap(ChannelTrajectory::fixed(load_channel(path)));
        }
        if (kind == "revolve") {
            const std::string rp = join_path(prefix, "revolve");
            ordered_json r = j.contains("revolve") ? j.at("revolve") : ordered_json::object();
            expect_keys(r, rp, {"start_angle_deg", "end_angle_deg", "duration_s"});
            const double start = get_number(r, rp, "start_angle_deg", 40.0);
            const double end = get_number(r, rp, "end_angle_deg", 0.0);
            const double dur = get_number(r, rp, "duration_s", 225e-6);
            constexpr double kDeg = std::numbers::pi / 180.0;
            return wrap(ChannelTrajectory::revolve(generator_grid(g), receiver_grid(g),
                                                   start * kDeg, end * kDeg, dur));
        }
        if (kind == "obstruction") {
            const std::string op = join_path(prefix, "obstruction");
            ordered_json o = j.contains("obstruction") ? j.at("obstruction") : ordered_json::object();
            expect_keys(o, op, {"center_m", "half_extents_m", "attenuation", "velocity_mps",
                                "edge_softness_m"});
            Obstruction obs;
            obs.center = get_vec3(o, op, "center_m", Vec3{-0.09, 0.0, g.separation / 2.0});
            if (o.contains("half_extents_m")) {
                const auto& he = o.at("half_extents_m");
                if (!he.is_array() || he.size() != 2 || !he[0].is_number() || !he[1].is_number()) {
                    throw ConfigError(join_path(op, "half_extents_m"), "expected [x, y]");
                }
                obs.half_width = he[0].get<double>();
                obs.half_height = he[1].get<double>();
            }
            obs.attenuation = get_number(o, op, "attenuation", obs.attenuation);
            obs.velocity = get_vec3(o, op, "velocity_mps", Vec3{800.0, 0.0, 0.0});
            obs.edge_softness = get_number(o, op, "edge_softness_m", obs.edge_softness);
            return wrap(ChannelTrajectory::obstruction_transit(generator_grid(g),
                                                               receiver_grid(g), obs));
        }
        if (kind == "scripted") {
            if (!j.contains("scripted") || !j.at("scripted").is_array()) {
                throw ConfigError(join_path(prefix, "scripted"), "expected an array of snapshots");
            }
            std::vector<ChannelSnapshot> snaps;
            int index = 0;
            for (const auto& item : j.at("scripted")) {
                const std::string ip = join_path(prefix, "scripted[" + std::to_string(index) + "]");
                expect_keys(item, ip, {"t_s", "channel"});
                if (!item.contains("channel")) throw ConfigError(ip, "missing channel");
                ChannelSnapshot snap = channel_from_json(item.at("channel").dump());
                snap.timestamp = get_number(item, ip, "t_s", 0.0);
                snaps.push_back(std::move(snap));
                ++index;
            }
            return wrap(ChannelTrajectory::scripted(std::move(snaps)));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(prefix, e.what());
    }
    throw ConfigError(join_path(prefix, "kind"), "unknown trajectory kind: " + kind);
}

Engine engine_from_string(const std::string& name) {
    if (name == "phasor") return Engine::Phasor;
    if (name == "carrier") return Engine::Carrier;
    throw ConfigError("engine", "unknown engine: " + name);
}

const char* to_string(Engine e) { return e == Engine::Phasor ? "phasor" : "carrier"; }

// Amplitude fraction of v lying in the dominant eigenspace (ties within 1e-9).
double dominant_alignment(const EigenAnalysis& ea, const Eigen::VectorXcd& v) {
    const double norm = v.norm();
    if (!(norm > 0.0)) return 0.0;
    double aligned_power = 0.0;
    for (int i = 0; i < ea.a_vecs.cols(); ++i) {
        if (ea.xi_generator(i) < ea.xi_max() * (1.0 - 1e-9)) break;
        aligned_power += std::norm(ea.a_vecs.col(i).dot(v));
    }
    return std::sqrt(aligned_power) / norm;
}

std::filesystem::path resolve_output(const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_relative()) p = output_directory() / p;
    return p;
}

SimulationTrace run_phasor(const ScenarioConfig& cfg) {
    const ChannelTrajectory& traj = *cfg.trajectory;
    Rng rng(cfg.seed);

    const ChannelSnapshot first = traj.sample(0.0);
    const int m = first.receiver_ports();
    LoopParams lp = cfg.loop;
    LoopState state = LoopState::start(noise_vector(m, lp.noise_power_dbw, lp.z0, rng),
                                       first.generator_ports());

    ControlState cs;
    const auto steps = std::max<std::int64_t>(1, std::llround(cfg.duration / cfg.t_p));
    SimulationTrace trace;
    trace.rows.reserve(steps);
    for (std::int64_t k = 0; k < steps; ++k) {
        const ChannelSnapshot snap = traj.sample(static_cast<double>(k) * cfg.t_p);
        const EigenAnalysis ea = eig_analysis(snap);

        // The capture point sits before the attenuator, so the command derived
        // from this circulation's reading still shapes this circulation.
        const PowerReading reading = capture_preview(state, snap, lp);
        const double y_dbw = 10.0 * std::log10(std::max(reading.power_w, 1e-300));
        double r_db = 0.0;
        std::tie(cs, r_db) = pi_step(cs, cfg.controller, y_dbw, cfg.t_p);
        lp.loss_l = std::complex<double>(std::pow(10.0, r_db / 20.0), 0.0);

        const Eigen::VectorXcd u = noise_vector(m, lp.noise_power_dbw, lp.z0, rng);
        state = step(state, snap, lp, u, cfg.t_p);

        TraceRow row;
        row.t = state.t;
        row.power_dbw = y_dbw;
        row.r_db = r_db;
        row.g_db = 20.0 * std::log10(std::abs(lp.gain_g) * ea.xi_max());
        row.efficiency = reading.efficiency_defined ? reading.efficiency : 0.0;
        row.xi_max = ea.xi_max();
        row.alignment = dominant_alignment(ea, state.v2f);
        row.stability =
            classify_product(std::abs(lp.loss_l) * std::abs(lp.gain_g), ea.xi_max(), 1e-2);
        trace.rows.push_back(row);
    }
    return trace;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (!(duration > 0.0)) throw ConfigError("duration_s", "must be positive");
    if (!(t_p > 0.0)) throw ConfigError("t_p_s", "must be positive");
    if (!trajectory) throw ConfigError("trajectory", "no trajectory configured");
    try {
        loop.validate();
    } catch (const Error& e) {
        throw ConfigError("loop", e.what());
    }
    try {
        controller.validate();
    } catch (const Error& e) {
        throw ConfigError("controller", e.what());
    }
    if (engine == Engine::Carrier) {
        if (!carrier_feature) {
            throw ConfigError("engine", "carrier engine requires feature_carrier");
        }
        if (!(carrier.f0 > 0.0)) throw ConfigError("carrier.f0_hz", "must be positive");
        if (!(carrier.sample_rate > 2.0 * carrier.f0)) {
            throw ConfigError("carrier.sample_rate_hz", "must exceed twice the carrier");
        }
        if (carrier.power_window < 1) throw ConfigError("carrier.power_window", "must be >= 1");
    }
}

ScenarioConfig scenario_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::exception& e) {
        throw ConfigError("$", std::string("invalid JSON: ") + e.what());
    }
    expect_keys(j, "", {"seed", "engine", "feature_carrier", "duration_s", "t_p_s", "trajectory",
                        "loop", "controller", "carrier", "outputs"});

    ScenarioConfig cfg;
    if (j.contains("seed")) {
        const auto& v = j.at("seed");
        if (!v.is_number_unsigned()) throw ConfigError("seed", "expected a nonnegative integer");
        cfg.seed = v.get<std::uint64_t>();
    }
    cfg.engine = engine_from_string(get_string(j, "", "engine", "phasor"));
    cfg.carrier_feature = get_bool(j, "", "feature_carrier", cfg.carrier_feature);
    cfg.duration = get_number(j, "", "duration_s", cfg.duration);
    cfg.t_p = get_number(j, "", "t_p_s", cfg.t_p);

    if (j.contains("trajectory")) {
        cfg.trajectory = parse_trajectory(j.at("trajectory"), "trajectory");
    } else {
        cfg.trajectory = std::make_shared<const ChannelTrajectory>(
            ChannelTrajectory::fixed_geometry(generator_grid(GeometrySpec{}),
                                              receiver_grid(GeometrySpec{})));
    }

    if (j.contains("loop")) {
        const auto& l = j.at("loop");
        expect_keys(l, "loop", {"gain_db", "noise_power_dbw", "z0_ohm", "rx_saturation_dbw"});
        const double gain_db = get_number(l, "loop", "gain_db", 40.0);
        cfg.loop.gain_g = std::complex<double>(std::pow(10.0, gain_db / 20.0), 0.0);
        cfg.loop.noise_power_dbw =
            get_number(l, "loop", "noise_power_dbw", cfg.loop.noise_power_dbw);
        cfg.loop.z0 = get_number(l, "loop", "z0_ohm", cfg.loop.z0);
        if (l.contains("rx_saturation_dbw") && !l.at("rx_saturation_dbw").is_null()) {
            const double dbw = get_number(l, "loop", "rx_saturation_dbw", 10.0);
            cfg.loop.rx_saturation_w = std::pow(10.0, dbw / 10.0);
        }
    }

    if (j.contains("controller")) {
        const auto& c = j.at("controller");
        expect_keys(c, "controller", {"k_f", "k_i", "bias_db", "r_min_db", "r_max_db", "y_min_dbw",
                                      "y_max_dbw", "reference_dbw"});
        cfg.controller.k_f = get_number(c, "controller", "k_f", cfg.controller.k_f);
        cfg.controller.k_i = get_number(c, "controller", "k_i", cfg.controller.k_i);
        cfg.controller.b_db = get_number(c, "controller", "bias_db", cfg.controller.b_db);
        cfg.controller.r_min_db = get_number(c, "controller", "r_min_db", cfg.controller.r_min_db);
        cfg.controller.r_max_db = get_number(c, "controller", "r_max_db", cfg.controller.r_max_db);
        cfg.controller.y_min_dbw = get_number(c, "controller", "y_min_dbw", cfg.controller.y_min_dbw);
        cfg.controller.y_max_dbw = get_number(c, "controller", "y_max_dbw", cfg.controller.y_max_dbw);
        cfg.controller.reference_dbw =
            get_number(c, "controller", "reference_dbw", cfg.controller.reference_dbw);
    }

    if (j.contains("carrier")) {
        const auto& c = j.at("carrier");
        expect_keys(c, "carrier", {"f0_hz", "sample_rate_hz", "power_window"});
        cfg.carrier.f0 = get_number(c, "carrier", "f0_hz", cfg.carrier.f0);
        cfg.carrier.sample_rate = get_number(c, "carrier", "sample_rate_hz", cfg.carrier.sample_rate);
        cfg.carrier.power_window = get_int(c, "carrier", "power_window", cfg.carrier.power_window);
    }

    if (j.contains("outputs")) {
        const auto& o = j.at("outputs");
        expect_keys(o, "outputs", {"trace_csv", "plots"});
        cfg.trace_path = get_string(o, "outputs", "trace_csv", "");
        if (o.contains("plots")) {
            const auto& plots = o.at("plots");
            if (!plots.is_array()) throw ConfigError("outputs.plots", "expected an array of paths");
            for (const auto& p : plots) {
                if (!p.is_string()) throw ConfigError("outputs.plots", "expected string paths");
                cfg.plot_paths.push_back(p.get<std::string>());
            }
        }
    }

    cfg.validate();
    return cfg;
}

std::string scenario_to_json_template() {
    ordered_json j;
    j["seed"] = 1;
    j["engine"] = "phasor";
    j["feature_carrier"] = false;
    j["duration_s"] = 10e-6;
    j["t_p_s"] = 26.33e-9;
    j["trajectory"] = {
        {"kind", "static"},
        {"geometry",
         {{"rows", 2},
          {"cols", 2},
          {"spacing_m", 0.0625},
          {"wavelength_m", 0.125},
          {"element_gain", 1.0},
          {"separation_m", 0.2}}},
    };
    j["loop"] = {{"gain_db", 40.0},
                 {"noise_power_dbw", -140.0},
                 {"z0_ohm", 50.0},
                 {"rx_saturation_dbw", 10.0}};
    j["controller"] = {{"k_f", 1.0},
                       {"k_i", 5e6},
                       {"bias_db", 0.0},
                       {"r_min_db", -35.0},
                       {"r_max_db", -3.0},
                       {"y_min_dbw", -150.0},
                       {"y_max_dbw", 10.0},
                       {"reference_dbw", -30.0}};
    j["carrier"] = {{"f0_hz", 2.4e9}, {"sample_rate_hz", 48e9}, {"power_window", 10000}};
    j["outputs"] = {{"trace_csv", ""}, {"plots", ordered_json::array()}};
    return j.dump(2) + "\n";
}

SimulationTrace run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    SimulationTrace trace;
    if (cfg.engine == Engine::Phasor) {
        trace = run_phasor(cfg);
    } else {
#if defined(RETROBEAM_HAS_CARRIER)
        CarrierConfig cc;
        cc.f0 = cfg.carrier.f0;
        cc.sample_rate = cfg.carrier.sample_rate;
        cc.power_window = cfg.carrier.power_window;
        cc.z0 = cfg.loop.z0;
        cc.validate();
        trace = run_carrier_loop(*cfg.trajectory, cc, cfg.loop, cfg.controller, cfg.duration,
                                 cfg.seed)
                    .trace;
#else
        throw FeatureError("carrier engine was not built in");
#endif
    }
    if (!cfg.trace_path.empty()) trace.write_csv(resolve_output(cfg.trace_path));
    emit_scenario_plots(trace, cfg.plot_paths);
    return trace;
}

const char* to_string(Method m) {
    switch (m) {
        case Method::ClosedLoop: return "closed-loop";
        case Method::PositionTracking: return "position";
        case Method::PilotConjugate: return "pilot-conjugate";
        case Method::NmSimultaneous: return "nm-simultaneous";
        case Method::NmSequential: return "nm-sequential";
    }
    return "closed-loop";
}

Method method_from_string(const std::string& name) {
    if (name == "closed-loop") return Method::ClosedLoop;
    if (name == "position") return Method::PositionTracking;
    if (name == "pilot-conjugate") return Method::PilotConjugate;
    if (name == "nm-simultaneous") return Method::NmSimultaneous;
    if (name == "nm-sequential") return Method::NmSequential;
    throw ConfigError("method", "unknown method: " + name);
}

const MethodReport& ComparisonReport::find(Method m) const {
    for (const auto& rep : methods) {
        if (rep.method == m) return rep;
    }
    throw IndexError(std::string("method not in report: ") + to_string(m));
}

std::string ComparisonReport::summary_csv() const {
    std::string out = "method,final_efficiency,final_ratio,mean_ratio,settling_time_s\n";
    for (const auto& rep : methods) {
        const double final_eff = rep.trace.empty() ? 0.0 : rep.trace.back().efficiency;
        out += to_string(rep.method);
        out += ',';
        out += format_double(final_eff);
        out += ',';
        out += format_double(rep.final_ratio);
        out += ',';
        out += format_double(rep.mean_ratio);
        out += ',';
        out += format_double(rep.settling_time_s);
        out += '\n';
    }
    return out;
}

namespace {

MethodReport summarize(Method m, SimulationTrace trace) {
    MethodReport rep;
    rep.method = m;
    rep.trace = std::move(trace);
    if (rep.trace.empty()) return rep;
    std::vector<double> ts;
    ts.reserve(rep.trace.size());
    rep.ratio.reserve(rep.trace.size());
    double sum = 0.0;
    for (const auto& row : rep.trace.rows) {
        const double ratio = row.xi_max > 0.0 ? row.efficiency / row.xi_max : 0.0;
        rep.ratio.push_back(ratio);
        ts.push_back(row.t);
        sum += ratio;
    }
    rep.mean_ratio = sum / static_cast<double>(rep.ratio.size());
    rep.final_ratio = rep.ratio.back();
    rep.settling_time_s = settling_time_estimate(ts, rep.ratio);
    return rep;
}

}  // namespace

ComparisonReport run_comparison(const ScenarioConfig& cfg, const std::vector<Method>& methods) {
    if (methods.empty()) throw ConfigError("methods", "nothing to compare");
    ScenarioConfig base = cfg;
    base.engine = Engine::Phasor;  // every method compared at the phasor level
    base.trace_path.clear();
    base.plot_paths.clear();
    base.validate();

    const ChannelTrajectory& traj = *base.trajectory;
    ComparisonReport report;
    for (Method m : methods) {
        switch (m) {
            case Method::ClosedLoop:
                report.methods.push_back(summarize(m, run_scenario(base)));
                break;
            case Method::PositionTracking: {
                if (!traj.geometry_at(0.0)) {
                    throw ConfigError("trajectory", "position tracking needs element positions");
                }
                auto weights = [&traj](const ChannelSnapshot& ch) {
                    const auto geo = traj.geometry_at(ch.timestamp);
                    return position_tracking_weights(geo->generator, geo->rx_reference);
                };
                report.methods.push_back(
                    summarize(m, fixed_weights_run(traj, base.duration, weights, base.t_p)));
                break;
            }
            case Method::PilotConjugate: {
                auto weights = [](const ChannelSnapshot& ch) {
                    return pilot_conjugate_weights(ch, 0);
                };
                report.methods.push_back(
                    summarize(m, fixed_weights_run(traj, base.duration, weights, base.t_p)));
                break;
            }
            case Method::NmSimultaneous:
            case Method::NmSequential: {
                SuperpositionConfig sc;
                sc.mode = m == Method::NmSimultaneous ? SuperpositionMode::Simultaneous
                                                      : SuperpositionMode::Sequential;
                sc.iteration_time = base.t_p;
                report.methods.push_back(
                    summarize(m, iterative_superposition_run(traj, base.duration, sc)));
                break;
            }
        }
    }
    return report;
}

std::string SweepTable::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i > 0) out += ',';
        out += columns[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

void SweepTable::write_csv(const std::filesystem::path& path) const {
    std::error_code ec;
    const auto dir = path.parent_path();
    if (!dir.empty() && !std::filesystem::exists(dir, ec)) {
        throw IoError("directory does not exist: " + dir.string());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << to_csv();
        if (!out.good()) throw IoError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

SweepTable sweep_gain(const ScenarioConfig& cfg, double span_db, double step_db) {
    cfg.validate();
    if (!(span_db > 0.0)) throw ConfigError("span_db", "must be positive");
    const ChannelSnapshot ch = cfg.trajectory->sample(0.0);
    const EigenAnalysis ea = eig_analysis(ch);
    const double marginal_db = -20.0 * std::log10(ea.xi_max());
    LoopParams tmpl = cfg.loop;
    if (!tmpl.rx_saturation_w) tmpl.rx_saturation_w = 10.0;  // settle divergent points

    const auto points = gain_sweep(ch, tmpl, marginal_db - span_db / 2.0,
                                   marginal_db + span_db / 2.0, cfg.seed, step_db);
    SweepTable table;
    table.columns = {"lg_db", "xi_lg_product", "measured_efficiency"};
    for (const auto& p : points) {
        const double product = ea.xi_max() * std::pow(10.0, p.lg_db / 20.0);
        table.rows.push_back({p.lg_db, product, p.measured_efficiency});
    }
    return table;
}

SweepTable sweep_bias_overshoot(const ControllerParams& c, const PlantParams& p, double r0_dbw,
                                double y0_dbw, double g_lo_db, double g_hi_db, double step_db) {
    if (!(step_db > 0.0)) throw ConfigError("step_db", "must be positive");
    if (!(g_hi_db >= g_lo_db)) throw ConfigError("g_hi_db", "range is empty");
    SweepTable table;
    table.columns = {"g_db", "peak_dbw", "overshoot_db"};
    for (double g = g_lo_db; g <= g_hi_db + 1e-9; g += step_db) {
        const double peak = startup_peak(c, p, r0_dbw, g, y0_dbw);
        table.rows.push_back({g, peak, peak - r0_dbw});
    }
    return table;
}

SweepTable sweep_marginal_regression(int n_channels, std::uint64_t seed,
                                     RegressionResult* summary) {
    if (n_channels < 1) throw ConfigError("n_channels", "must be positive");
    const std::vector<ChannelSnapshot> channels = regression_channel_set(n_channels, seed);
    SweepTable table;
    table.columns = {"xi_max", "marginal_lg", "neg_xi_max_db", "marginal_lg_db"};
    for (const auto& ch : channels) {
        const double xi = eig_analysis(ch).xi_max();
        const double lg = find_marginal_lg(ch, seed);
        table.rows.push_back(
            {xi, lg, -20.0 * std::log10(xi), 20.0 * std::log10(lg)});
    }
    if (summary) {
        *summary = marginal_regression(std::span<const ChannelSnapshot>(channels), seed);
    }
    return table;
}

std::filesystem::path output_directory() {
    if (const char* env = std::getenv("RETROBEAM_OUT_DIR"); env != nullptr && *env != '\0') {
        std::filesystem::path p(env);
        std::error_code ec;
        std::filesystem::create_directories(p, ec);
        return p;
    }
    return std::filesystem::current_path();
}

void emit_scenario_plots(const SimulationTrace& trace, const std::vector<std::string>& paths) {
    if (paths.empty() || trace.empty()) return;
    std::vector<double> ts;
    ts.reserve(trace.size());
    for (const auto& row : trace.rows) ts.push_back(row.t);

    for (const auto& path : paths) {
        const std::string stem = std::filesystem::path(path).stem().string();
        PlotSpec spec;
        spec.x_label = "t (s)";
        if (stem.find("eff") != std::string::npos) {
            spec.title = "beam transfer efficiency";
            spec.y_label = "fraction";
            PlotSeries eff{"efficiency", ts, {}};
            PlotSeries ceiling{"xi_max", ts, {}};
            PlotSeries align{"alignment", ts, {}};
            for (const auto& row : trace.rows) {
                eff.y.push_back(row.efficiency);
                ceiling.y.push_back(row.xi_max);
                align.y.push_back(row.alignment);
            }
            spec.series = {eff, ceiling, align};
        } else {
            spec.title = "output power and attenuator command";
            spec.y_label = "dB";
            PlotSeries power{"power (dBW)", ts, {}};
            PlotSeries r{"r (dB)", ts, {}};
            PlotSeries g{"g (dB)", ts, {}};
            for (const auto& row : trace.rows) {
                power.y.push_back(row.power_dbw);
                r.y.push_back(row.r_db);
                g.y.push_back(row.g_db);
            }
            spec.series = {power, r, g};
        }
        write_svg(spec, resolve_output(path));
    }
}

void emit_comparison_plot(const ComparisonReport& report, const std::filesystem::path& path) {
    PlotSpec spec;
    spec.title = "beam control method comparison";
    spec.x_label = "t (s)";
    spec.y_label = "efficiency / xi_max";
    for (const auto& rep : report.methods) {
        PlotSeries series;
        series.label = to_string(rep.method);
        for (std::size_t i = 0; i < rep.trace.size(); ++i) {
            series.x.push_back(rep.trace.rows[i].t);
            series.y.push_back(rep.ratio[i]);
        }
        spec.series.push_back(std::move(series));
    }
    std::filesystem::path out = path;
    if (out.is_relative()) out = output_directory() / out;
    write_svg(spec, out);
}

}  // namespace retrobeam
