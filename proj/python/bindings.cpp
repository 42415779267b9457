#include "vgnav/errors.hpp"
#include "vgnav/gp_core.hpp"
#include "vgnav/harness.hpp"
#include "vgnav/simworld.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <utility>

namespace py = pybind11;
using namespace vgnav;

namespace {

TrainingSet make_training_set(const Inputs& inputs, const Eigen::VectorXd& targets, double noise_variance) {
  TrainingSet t;
  t.inputs = inputs;
  t.targets = targets;
  t.noise_variance = noise_variance;
  return t;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> split(const std::vector<Prediction>& p) {
  Eigen::VectorXd mean(static_cast<Eigen::Index>(p.size()));
  Eigen::VectorXd var(static_cast<Eigen::Index>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    mean(static_cast<Eigen::Index>(i)) = p[i].mean;
    var(static_cast<Eigen::Index>(i)) = p[i].variance;
  }
  return {mean, var};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sparse GP regression, terrain simulation and navigation trials";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_ArithmeticError);
  py::register_exception<DegenerateData>(m, "DegenerateData", PyExc_ValueError);

  py::enum_<AzimuthMetric>(m, "AzimuthMetric")
      .value("PLANAR", AzimuthMetric::Planar)
      .value("PERIODIC", AzimuthMetric::Periodic);

  py::class_<RqKernelParams>(m, "RqKernelParams")
      .def(py::init([](double s, double l, double a) { return RqKernelParams{s, l, a}; }),
           py::arg("signal_variance") = 1.0, py::arg("length_scale") = 1.0, py::arg("mixture_weight") = 1.0)
      .def_readwrite("signal_variance", &RqKernelParams::signal_variance)
      .def_readwrite("length_scale", &RqKernelParams::length_scale)
      .def_readwrite("mixture_weight", &RqKernelParams::mixture_weight)
      .def("__repr__", [](const RqKernelParams& p) {
        return "RqKernelParams(signal_variance=" + std::to_string(p.signal_variance) +
               ", length_scale=" + std::to_string(p.length_scale) +
               ", mixture_weight=" + std::to_string(p.mixture_weight) + ")";
      });

  py::class_<OptimSettings>(m, "OptimSettings")
      .def(py::init<>())
      .def_readwrite("max_iterations", &OptimSettings::max_iterations)
      .def_readwrite("tolerance", &OptimSettings::tolerance)
      .def_readwrite("patience", &OptimSettings::patience)
      .def_readwrite("initial_step", &OptimSettings::initial_step)
      .def_readwrite("optimize", &OptimSettings::optimize)
      .def_readwrite("metric", &OptimSettings::metric)
      .def_property(
          "inducing_at_training_inputs",
          [](const OptimSettings& o) { return o.inducing_init == InducingInit::TrainingInputs; },
          [](OptimSettings& o, bool v) { o.inducing_init = v ? InducingInit::TrainingInputs : InducingInit::Grid; });

  py::class_<SgpModel>(m, "SgpModel")
      .def_readonly("kernel", &SgpModel::kernel)
      .def_readonly("inducing_inputs", &SgpModel::inducing_inputs)
      .def_readonly("noise_variance", &SgpModel::noise_variance)
      .def_readonly("elbo_trace", &SgpModel::elbo_trace)
      .def_property_readonly("num_inducing", &SgpModel::num_inducing)
      .def(
          "predict", [](const SgpModel& model, const Inputs& q) { return split(model.predict(q)); },
          py::arg("queries"), "Predictive mean and variance (noise included) at each row of queries.");

  m.def(
      "fit_svgp",
      [](const Inputs& inputs, const Eigen::VectorXd& targets, double noise_variance, const RqKernelParams& kernel,
         int num_inducing, const OptimSettings& optim) {
        return fit_svgp(make_training_set(inputs, targets, noise_variance), kernel, num_inducing, optim);
      },
      py::arg("inputs"), py::arg("targets"), py::arg("noise_variance"), py::arg("kernel"), py::arg("num_inducing"),
      py::arg("optim") = OptimSettings{});

  m.def(
      "exact_gp_predict",
      [](const Inputs& inputs, const Eigen::VectorXd& targets, double noise_variance, const RqKernelParams& kernel,
         const Inputs& queries, AzimuthMetric metric) {
        return split(exact_gp_predict(make_training_set(inputs, targets, noise_variance), kernel, queries, metric));
      },
      py::arg("inputs"), py::arg("targets"), py::arg("noise_variance"), py::arg("kernel"), py::arg("queries"),
      py::arg("metric") = AzimuthMetric::Planar);

  m.def(
      "collapsed_elbo",
      [](const Inputs& inputs, const Eigen::VectorXd& targets, const Inputs& inducing, const RqKernelParams& kernel,
         double noise_variance, AzimuthMetric metric) {
        const ElboResult r =
            collapsed_elbo(make_training_set(inputs, targets, noise_variance), inducing, kernel, noise_variance, metric);
        return std::make_pair(r.value, r.gradient);
      },
      py::arg("inputs"), py::arg("targets"), py::arg("inducing"), py::arg("kernel"), py::arg("noise_variance"),
      py::arg("metric") = AzimuthMetric::Planar,
      "ELBO value and its gradient with respect to the log of (signal variance, length scale, mixture weight, "
      "noise variance).");

  m.def("rq_gram", &rq_gram, py::arg("a"), py::arg("b"), py::arg("kernel"), py::arg("metric") = AzimuthMetric::Planar);

  py::class_<World>(m, "World")
      .def_property_readonly("cols", &World::cols)
      .def_property_readonly("rows", &World::rows)
      .def_property_readonly("cell_size", &World::cell_size)
      .def_readonly("class_names", &World::class_names)
      .def_readonly("goal", &World::goal)
      .def_property_readonly("spawn",
                             [](const World& w) {
                               return std::make_tuple(w.spawn.position.x(), w.spawn.position.y(),
                                                      w.spawn.position.z(), w.spawn.heading);
                             })
      .def_property_readonly("region_names",
                             [](const World& w) {
                               std::vector<std::string> names;
                               for (const auto& r : w.regions) names.push_back(r.name);
                               return names;
                             })
      .def("height_at", [](const World& w, double x, double y) { return w.height_at(Vec2(x, y)); })
      .def("class_name_at", [](const World& w, double x, double y) { return w.class_name_at(Vec2(x, y)); });

  m.def("make_world", &make_world, py::arg("name"));
  m.def("world_generator_names", &world_generator_names);

  m.def(
      "simulate_lidar",
      [](const World& w, double x, double y, double heading, std::uint64_t seed, double noise_sigma) {
        RobotState r;
        r.pose = Pose(Vec3(x, y, w.height_at(Vec2(x, y))), heading);
        LidarModel lidar;
        lidar.noise_sigma = noise_sigma;
        const auto pts = simulate_lidar(w, r, lidar, seed);
        Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> out(static_cast<Eigen::Index>(pts.size()), 3);
        for (std::size_t i = 0; i < pts.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
        return out;
      },
      py::arg("world"), py::arg("x"), py::arg("y"), py::arg("heading"), py::arg("seed") = 0,
      py::arg("noise_sigma") = 0.01, "Default 16-channel scan in the sensor frame, one row per return.");

  py::class_<ScenarioConfig>(m, "Scenario")
      .def_readwrite("name", &ScenarioConfig::name)
      .def_readwrite("trials", &ScenarioConfig::trials)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def_property(
          "modes",
          [](const ScenarioConfig& c) {
            std::vector<std::string> out;
            for (Mode mode : c.modes) out.push_back(to_string(mode));
            return out;
          },
          [](ScenarioConfig& c, const std::vector<std::string>& names) {
            c.modes.clear();
            for (const auto& n : names) c.modes.push_back(parse_mode(n));
          })
      .def_property(
          "max_time", [](const ScenarioConfig& c) { return c.termination.max_time; },
          [](ScenarioConfig& c, double t) { c.termination.max_time = t; })
      .def("validate", &ScenarioConfig::validate)
      .def("build_world", &ScenarioConfig::build_world);

  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def(
      "run_trial",
      [](const ScenarioConfig& cfg, const std::string& mode, std::uint64_t seed) {
        TrialResult r;
        {
          py::gil_scoped_release release;
          r = run_trial(cfg, parse_mode(mode), seed);
        }
        Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor> traj(static_cast<Eigen::Index>(r.trajectory.size()),
                                                                       4);
        for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
          const Pose& p = r.trajectory[i];
          traj.row(static_cast<Eigen::Index>(i)) << p.position.x(), p.position.y(), p.position.z(), p.heading;
        }
        return std::make_pair(summary_json(r.summary), traj);
      },
      py::arg("scenario"), py::arg("mode"), py::arg("seed"));
  m.def(
      "run_suite",
      [](const ScenarioConfig& cfg, const std::string& out_dir) {
        py::gil_scoped_release release;
        std::optional<std::filesystem::path> dir;
        if (!out_dir.empty()) dir = out_dir;
        return report_json(run_suite(cfg, dir));
      },
      py::arg("scenario"), py::arg("out_dir") = "");
}
