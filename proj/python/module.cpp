#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "retrobeam/channel.hpp"
#include "retrobeam/control.hpp"
#include "retrobeam/errors.hpp"
#include "retrobeam/geometry.hpp"
#include "retrobeam/loop.hpp"
#include "retrobeam/scenario.hpp"
#include "retrobeam/trace.hpp"

namespace py = pybind11;
using namespace retrobeam;

namespace {

std::string run_scenario_json(const std::string& text) {
    return run_scenario(scenario_from_json(text)).to_csv();
}

std::string run_comparison_json(const std::string& text, const std::vector<std::string>& names) {
    std::vector<Method> methods;
    methods.reserve(names.size());
    for (const auto& name : names) methods.push_back(method_from_string(name));
    return run_comparison(scenario_from_json(text), methods).summary_csv();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Retrodirective power beam loop: channels, loop engine, control, scenarios";

    py::register_exception<Error>(m, "Error");

    py::class_<Vec3>(m, "Vec3")
        .def(py::init<>())
        .def(py::init<double, double, double>(), py::arg("x"), py::arg("y"), py::arg("z"))
        .def_readwrite("x", &Vec3::x)
        .def_readwrite("y", &Vec3::y)
        .def_readwrite("z", &Vec3::z)
        .def("norm", &Vec3::norm)
        .def("__repr__", [](const Vec3& v) {
            std::ostringstream os;
            os << "Vec3(" << v.x << ", " << v.y << ", " << v.z << ")";
            return os.str();
        });

    py::class_<ArrayGeometry>(m, "ArrayGeometry")
        .def(py::init<>())
        .def_readwrite("element_positions", &ArrayGeometry::element_positions)
        .def_readwrite("element_gain", &ArrayGeometry::element_gain)
        .def_readwrite("wavelength", &ArrayGeometry::wavelength)
        .def("size", &ArrayGeometry::size)
        .def("centroid", &ArrayGeometry::centroid)
        .def("translated", &ArrayGeometry::translated, py::arg("offset"))
        .def("rotated_y", &ArrayGeometry::rotated_y, py::arg("angle"), py::arg("pivot"))
        .def("validate", &ArrayGeometry::validate)
        .def_static("grid", &ArrayGeometry::grid, py::arg("rows"), py::arg("cols"),
                    py::arg("spacing"), py::arg("wavelength"), py::arg("element_gain") = 1.0);

    py::class_<Obstruction>(m, "Obstruction")
        .def(py::init<>())
        .def_readwrite("center", &Obstruction::center)
        .def_readwrite("half_width", &Obstruction::half_width)
        .def_readwrite("half_height", &Obstruction::half_height)
        .def_readwrite("attenuation", &Obstruction::attenuation)
        .def_readwrite("velocity", &Obstruction::velocity)
        .def_readwrite("edge_softness", &Obstruction::edge_softness)
        .def("at_time", &Obstruction::at_time, py::arg("t"))
        .def("path_factor", &Obstruction::path_factor, py::arg("a"), py::arg("b"));

    py::class_<ChannelSnapshot>(m, "ChannelSnapshot")
        .def(py::init<>())
        .def_readwrite("s21", &ChannelSnapshot::s21)
        .def_readwrite("z0", &ChannelSnapshot::z0)
        .def_readwrite("timestamp", &ChannelSnapshot::timestamp)
        .def("generator_ports", &ChannelSnapshot::generator_ports)
        .def("receiver_ports", &ChannelSnapshot::receiver_ports)
        .def("max_singular_value", &ChannelSnapshot::max_singular_value)
        .def("validate", &ChannelSnapshot::validate);

    py::class_<EigenAnalysis>(m, "EigenAnalysis")
        .def_readonly("xi", &EigenAnalysis::xi)
        .def_readonly("a_vecs", &EigenAnalysis::a_vecs)
        .def_readonly("b_vecs", &EigenAnalysis::b_vecs)
        .def("xi_max", &EigenAnalysis::xi_max)
        .def("a_max", &EigenAnalysis::a_max)
        .def("b_max", &EigenAnalysis::b_max);

    m.def("synth_channel", &synth_channel, py::arg("generator"), py::arg("receiver"),
          py::arg("obstruction") = std::nullopt, py::arg("z0") = 50.0, py::arg("timestamp") = 0.0);
    m.def("eig_analysis", &eig_analysis, py::arg("channel"));
    m.def("efficiency", &efficiency, py::arg("channel"), py::arg("v2f"));
    m.def("decompose_input", &decompose_input, py::arg("analysis"), py::arg("v2f"));
    m.def("efficiency_from_weights", &efficiency_from_weights, py::arg("analysis"),
          py::arg("weights"));
    m.def("channel_to_json", &channel_to_json, py::arg("channel"));
    m.def("channel_from_json", &channel_from_json, py::arg("text"));
    m.def("save_channel", &save_channel, py::arg("channel"), py::arg("path"));
    m.def("load_channel", &load_channel, py::arg("path"));
    m.def("random_passive_channel", &random_passive_channel, py::arg("n"), py::arg("m"),
          py::arg("seed"), py::arg("sigma_max") = 0.5);

    py::class_<LoopParams>(m, "LoopParams")
        .def(py::init<>())
        .def_readwrite("gain_g", &LoopParams::gain_g)
        .def_readwrite("loss_l", &LoopParams::loss_l)
        .def_readwrite("noise_power_dbw", &LoopParams::noise_power_dbw)
        .def_readwrite("z0", &LoopParams::z0)
        .def_readwrite("rx_saturation_w", &LoopParams::rx_saturation_w)
        .def("validate", &LoopParams::validate);

    py::class_<RegressionResult>(m, "RegressionResult")
        .def_readonly("slope", &RegressionResult::slope)
        .def_readonly("intercept", &RegressionResult::intercept)
        .def_readonly("r_squared", &RegressionResult::r_squared)
        .def_readonly("n", &RegressionResult::n);

    m.def("zero_input_oracle", &zero_input_oracle, py::arg("channel"), py::arg("params"),
          py::arg("v1f0"), py::arg("k"));
    m.def("power_recursion_oracle", &power_recursion_oracle, py::arg("p0_w"), py::arg("xi_max"),
          py::arg("lg_mag"), py::arg("k"));
    m.def("find_marginal_lg", &find_marginal_lg, py::arg("channel"), py::arg("seed"),
          py::arg("rel_tol") = 1e-12);
    m.def(
        "marginal_regression",
        [](int n_channels, std::uint64_t seed) { return marginal_regression(n_channels, seed); },
        py::arg("n_channels"), py::arg("seed"));

    py::enum_<Damping>(m, "Damping")
        .value("Overdamped", Damping::Overdamped)
        .value("Critical", Damping::Critical)
        .value("Underdamped", Damping::Underdamped);

    py::class_<PlantParams>(m, "PlantParams")
        .def(py::init<>())
        .def_readwrite("t_p", &PlantParams::t_p)
        .def_readwrite("y0_dbw", &PlantParams::y0_dbw);

    py::class_<ControllerParams>(m, "ControllerParams")
        .def(py::init<>())
        .def_readwrite("k_f", &ControllerParams::k_f)
        .def_readwrite("k_i", &ControllerParams::k_i)
        .def_readwrite("b_db", &ControllerParams::b_db)
        .def_readwrite("r_min_db", &ControllerParams::r_min_db)
        .def_readwrite("r_max_db", &ControllerParams::r_max_db)
        .def_readwrite("y_min_dbw", &ControllerParams::y_min_dbw)
        .def_readwrite("y_max_dbw", &ControllerParams::y_max_dbw)
        .def_readwrite("reference_dbw", &ControllerParams::reference_dbw)
        .def("validate", &ControllerParams::validate);

    py::class_<PoleAnalysis>(m, "PoleAnalysis")
        .def_readonly("p1", &PoleAnalysis::p1)
        .def_readonly("p2", &PoleAnalysis::p2)
        .def_readonly("damping", &PoleAnalysis::damping)
        .def_readonly("discriminant", &PoleAnalysis::discriminant);

    py::class_<DesignResult>(m, "DesignResult")
        .def_readonly("params", &DesignResult::params)
        .def_readonly("damping", &DesignResult::damping)
        .def_readonly("pole_analysis", &DesignResult::pole_analysis)
        .def_readonly("settling_time_s", &DesignResult::settling_time_s)
        .def_readonly("overshoot_bound_db", &DesignResult::overshoot_bound_db)
        .def_readonly("ramp_error_per_dbps", &DesignResult::ramp_error_per_dbps)
        .def_readonly("warnings", &DesignResult::warnings);

    py::class_<LinearTracePoint>(m, "LinearTracePoint")
        .def_readonly("t", &LinearTracePoint::t)
        .def_readonly("y_dbw", &LinearTracePoint::y_dbw)
        .def_readonly("r_db", &LinearTracePoint::r_db);

    m.def("plant_response", &plant_response, py::arg("plant"), py::arg("r_db"), py::arg("g_db"),
          py::arg("t"));
    m.def("poles", &poles, py::arg("controller"), py::arg("plant"));
    m.def("settling_time", &settling_time, py::arg("controller"), py::arg("plant"));
    m.def("design_gains", &design_gains, py::arg("t_s_target"), py::arg("plant"),
          py::arg("k_f") = 1.0);
    m.def("overshoot_step_disturbance", &overshoot_step_disturbance, py::arg("controller"),
          py::arg("plant"), py::arg("g0_db"));
    m.def("ramp_error", &ramp_error, py::arg("controller"), py::arg("c0_db_per_s"));
    m.def("startup_response", &startup_response, py::arg("controller"), py::arg("plant"),
          py::arg("r0_dbw"), py::arg("g0_db"), py::arg("y0_dbw"), py::arg("t"));
    m.def("startup_peak", &startup_peak, py::arg("controller"), py::arg("plant"),
          py::arg("r0_dbw"), py::arg("g0_db"), py::arg("y0_dbw"));
    m.def("simulate_closed_loop_linear", &simulate_closed_loop_linear, py::arg("controller"),
          py::arg("plant"), py::arg("reference_dbw"), py::arg("g_db"), py::arg("y0_dbw"),
          py::arg("duration"), py::arg("dt"));

    m.def("scenario_template", &scenario_to_json_template);
    m.def("run_scenario_json", &run_scenario_json, py::arg("config_json"),
          "Run a scenario from its JSON description, returning the trace as CSV text.");
    m.def("run_comparison_json", &run_comparison_json, py::arg("config_json"), py::arg("methods"),
          "Run the scenario under each named beam control method, returning the summary CSV.");

    m.attr("__version__") = "0.1.0";
}
