#include "quasimodo/config.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "quasimodo/errors.hpp"

namespace quasimodo {

using nlohmann::json;

namespace {

Vector to_vector(const json& arr, const std::string& path) {
  if (!arr.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vector v(static_cast<long>(arr.size()));
  for (long i = 0; i < v.size(); ++i) {
    if (!arr[static_cast<std::size_t>(i)].is_number()) throw ConfigError(path, "expected number");
    v(i) = arr[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

Matrix to_matrix(const json& j, const std::string& path) {
  if (j.is_string() && j.get<std::string>() == "identity") return Matrix();  // resolved later
  if (j.is_object() && j.contains("diag")) {
    const Vector d = to_vector(j["diag"], path + ".diag");
    Matrix Q = Matrix::Zero(d.size(), d.size());
    Q.diagonal() = d;
    return Q;
  }
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected matrix rows");
  const long rows = static_cast<long>(j.size());
  const long cols = static_cast<long>(j[0].size());
  Matrix Q(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (static_cast<long>(j[static_cast<std::size_t>(r)].size()) != cols) {
      throw ConfigError(path, "ragged matrix rows");
    }
    for (long c = 0; c < cols; ++c) {
      Q(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return Q;
}

ObservableSpec parse_observable(const json& j) {
  ObservableSpec spec;
  if (j.is_null()) return spec;
  const std::string kind = j.value("kind", "full_state");
  if (kind == "full_state") {
    spec.kind = ObservableSpec::Kind::FullState;
  } else if (kind == "coordinate_selection") {
    spec.kind = ObservableSpec::Kind::CoordinateSelection;
    for (const auto& i : j.value("indices", json::array())) spec.indices.push_back(i.get<int>());
    if (spec.indices.empty()) throw ConfigError("observable.indices", "must be nonempty");
  } else if (kind == "delay_embedding") {
    spec.kind = ObservableSpec::Kind::DelayEmbedding;
    spec.delay_count = j.value("delay_count", 0);
    spec.lag_step = j.value("lag_step", 1);
    if (j.contains("indices")) {
      spec.base_kind = ObservableSpec::Kind::CoordinateSelection;
      for (const auto& i : j["indices"]) spec.base_indices.push_back(i.get<int>());
    }
    if (spec.delay_count < 0 || spec.lag_step < 1) {
      throw ConfigError("observable", "delay_count >= 0 and lag_step >= 1 required");
    }
  } else {
    throw ConfigError("observable.kind", "unknown kind '" + kind + "'");
  }
  return spec;
}

EsnConfig parse_esn(const json& j) {
  EsnConfig c;
  if (j.is_null()) return c;
  c.n_r = j.value("n_r", c.n_r);
  c.spectral_radius = j.value("spectral_radius", c.spectral_radius);
  c.sparsity = j.value("sparsity", c.sparsity);
  c.activation_scale = j.value("activation_scale", c.activation_scale);
  c.ridge_beta = j.value("ridge_beta", c.ridge_beta);
  c.feedback_scale = j.value("feedback_scale", c.feedback_scale);
  c.input_scale = j.value("input_scale", c.input_scale);
  c.washout = j.value("washout", c.washout);
  c.sync_window = j.value("sync_window", c.sync_window);
  if (c.n_r < 1) throw ConfigError("model.esn.n_r", "must be >= 1");
  if (c.sparsity < 0.0 || c.sparsity >= 1.0) throw ConfigError("model.esn.sparsity", "in [0,1)");
  return c;
}

}  // namespace

std::function<Vector(double)> ReferenceSpec::make(int q) const {
  if (kind == "zero") {
    return [q](double) { return Vector::Zero(q); };
  }
  if (kind == "constant") {
    Vector v = value;
    if (v.size() != q) throw ConfigError("mpc.reference.value", "dimension mismatch");
    return [v](double) { return v; };
  }
  if (kind == "sine_component") {
    const int c = component;
    const double a = amplitude, w = omega;
    if (c < 0 || c >= q) throw ConfigError("mpc.reference.component", "out of range");
    return [q, c, a, w](double t) {
      Vector v = Vector::Zero(q);
      v(c) = a * std::sin(w * t);
      return v;
    };
  }
  throw ConfigError("mpc.reference.kind", "unknown kind '" + kind + "'");
}

SystemModel ExperimentConfig::make_system() const {
  return builtin_system(system_name, system_params);
}

QuantizedControlSet ExperimentConfig::make_V() const {
  if (v_rule == "vertices") return make_vertex_set(box);
  if (v_rule == "star") return make_star_set(box);
  if (v_rule == "explicit") {
    QuantizedControlSet V;
    V.parent = box;
    V.points = v_points;
    if (V.size() < 2) throw ConfigError("quantization.points", "need at least 2 points");
    for (const auto& u : V.points) {
      if (!box.contains(u)) throw ConfigError("quantization.points", "point outside the box U");
    }
    return V;
  }
  throw ConfigError("quantization.rule", "unknown rule '" + v_rule + "'");
}

ExperimentConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError("<root>", std::string("json parse failure: ") + e.what());
  }

  ExperimentConfig c;

  const json& sys = j.value("system", json::object());
  c.system_name = sys.value("name", "");
  if (c.system_name.empty()) throw ConfigError("system.name", "required");
  const json sys_params = sys.value("params", json::object());
  for (auto& [k, v] : sys_params.items()) c.system_params[k] = v.get<double>();

  const json& qz = j.value("quantization", json::object());
  if (!qz.contains("lower") || !qz.contains("upper")) {
    throw ConfigError("quantization", "lower and upper bounds required");
  }
  c.box.lower = to_vector(qz["lower"], "quantization.lower");
  c.box.upper = to_vector(qz["upper"], "quantization.upper");
  if (c.box.lower.size() != c.box.upper.size()) {
    throw ConfigError("quantization", "lower/upper dimension mismatch");
  }
  for (long i = 0; i < c.box.lower.size(); ++i) {
    if (c.box.lower(i) > c.box.upper(i)) throw ConfigError("quantization", "lower > upper");
  }
  c.v_rule = qz.value("rule", "vertices");
  for (const auto& pt : qz.value("points", json::array())) {
    c.v_points.push_back(to_vector(pt, "quantization.points"));
  }

  const json& data = j.value("data", json::object());
  c.data_dt = data.value("dt", c.data_dt);
  c.T_train = data.value("T_train", c.T_train);
  c.data_substeps = data.value("substeps", c.data_substeps);
  c.seed = data.value("seed", c.seed);
  c.holdout_fraction = data.value("holdout_fraction", c.holdout_fraction);
  if (data.contains("y0")) c.y0_train = to_vector(data["y0"], "data.y0");
  if (c.data_dt <= 0.0) throw ConfigError("data.dt", "must be > 0");
  if (c.T_train < c.data_dt) throw ConfigError("data.T_train", "must be at least one step");
  {
    const double ratio = c.T_train / c.data_dt;
    if (std::abs(ratio - std::lround(ratio)) > 1e-9 * std::max(1.0, ratio)) {
      throw ConfigError("data.T_train", "dt must divide T_train");
    }
  }
  if (c.data_substeps < 1) throw ConfigError("data.substeps", "must be >= 1");
  if (c.holdout_fraction < 0.0 || c.holdout_fraction >= 1.0) {
    throw ConfigError("data.holdout_fraction", "in [0, 1)");
  }

  c.observable = parse_observable(j.value("observable", json()));

  const json& model = j.value("model", json::object());
  c.model_kind = model.value("kind", c.model_kind);
  if (c.model_kind == "edmd") {
    c.edmd_max_degree = model.value("max_degree", c.edmd_max_degree);
    c.propagate_lifted = model.value("propagate_lifted", false);
    if (c.edmd_max_degree < 1) throw ConfigError("model.max_degree", "must be >= 1");
  } else if (c.model_kind == "esn") {
    c.esn = parse_esn(model.value("esn", model));
  } else if (c.model_kind == "pod") {
    c.pod_ell = model.value("ell", c.pod_ell);
    c.pod_substeps = model.value("substeps", c.pod_substeps);
    if (c.pod_ell < 1) throw ConfigError("model.ell", "must be >= 1");
  } else if (c.model_kind == "perturbed") {
    if (model.contains("perturbation")) {
      c.perturbation = to_vector(model["perturbation"], "model.perturbation");
    }
    c.model_substeps = model.value("substeps", c.model_substeps);
  } else {
    throw ConfigError("model.kind", "unknown kind '" + c.model_kind + "'");
  }

  const json& mpc = j.value("mpc", json::object());
  c.mpc.p = mpc.value("p", c.mpc.p);
  c.mpc.dt = mpc.value("dt", c.data_dt);
  c.mpc.dt_sur = mpc.value("dt_sur", c.mpc.dt);
  c.mpc.T_mpc = mpc.value("T_mpc", c.mpc.T_mpc);
  c.mpc.plant_substeps = mpc.value("plant_substeps", c.mpc.plant_substeps);
  c.mpc.sur_reset = mpc.value("sur_reset", false);
  const std::string mode = mpc.value("mode", "interpolate");
  if (mode == "interpolate")
    c.mpc.mode = MpcMode::Interpolate;
  else if (mode == "sur")
    c.mpc.mode = MpcMode::Sur;
  else if (mode == "both")
    c.mpc.mode = MpcMode::Both;
  else
    throw ConfigError("mpc.mode", "one of interpolate|sur|both");
  const std::string warm = mpc.value("warm_start", "shift");
  if (warm == "shift")
    c.mpc.warm_start = WarmStartPolicy::Shift;
  else if (warm == "uniform")
    c.mpc.warm_start = WarmStartPolicy::Uniform;
  else
    throw ConfigError("mpc.warm_start", "one of shift|uniform");
  if (mpc.contains("y0")) c.y0_mpc = to_vector(mpc["y0"], "mpc.y0");
  if (mpc.contains("Q")) c.Q = to_matrix(mpc["Q"], "mpc.Q");
  if (mpc.contains("reference")) {
    const json& r = mpc["reference"];
    c.reference.kind = r.value("kind", "zero");
    if (r.contains("value")) c.reference.value = to_vector(r["value"], "mpc.reference.value");
    c.reference.component = r.value("component", 0);
    c.reference.amplitude = r.value("amplitude", 0.0);
    c.reference.omega = r.value("omega", 0.0);
  }
  c.track_component = mpc.value("track_component", 0);
  if (mpc.contains("solver")) {
    const json& s = mpc["solver"];
    c.mpc.solver.max_iters = s.value("max_iters", c.mpc.solver.max_iters);
    c.mpc.solver.tol = s.value("tol", c.mpc.solver.tol);
    c.mpc.solver.fd_step = s.value("fd_step", c.mpc.solver.fd_step);
    c.mpc.solver.initial_step = s.value("initial_step", c.mpc.solver.initial_step);
  }
  if (c.mpc.p < 1) throw ConfigError("mpc.p", "must be >= 1");
  if (c.mpc.dt <= 0.0) throw ConfigError("mpc.dt", "must be > 0");
  {
    const double ratio = c.mpc.dt / c.mpc.dt_sur;
    if (c.mpc.dt_sur <= 0.0 ||
        std::abs(ratio - std::lround(ratio)) > 1e-9 * std::max(1.0, ratio)) {
      throw ConfigError("mpc.dt_sur", "must divide dt");
    }
  }

  if (j.contains("bound_experiment")) {
    const json& b = j["bound_experiment"];
    BoundExperimentConfig bc;
    bc.eps = b.value("eps", bc.eps);
    bc.dt = b.value("dt", bc.dt);
    bc.dt_sur = b.value("dt_sur", bc.dt);
    bc.T = b.value("T", bc.T);
    bc.p = b.value("p", bc.p);
    bc.u_min = b.value("u_min", bc.u_min);
    bc.u_max = b.value("u_max", bc.u_max);
    bc.plant_substeps = b.value("plant_substeps", bc.plant_substeps);
    bc.safety_factor = b.value("safety_factor", bc.safety_factor);
    bc.seed = b.value("seed", bc.seed);
    if (b.contains("y0")) bc.y0 = to_vector(b["y0"], "bound_experiment.y0");
    if (b.contains("Q")) bc.Q = to_matrix(b["Q"], "bound_experiment.Q");
    if (b.contains("solver")) {
      bc.solver.max_iters = b["solver"].value("max_iters", bc.solver.max_iters);
      bc.solver.tol = b["solver"].value("tol", bc.solver.tol);
    }
    c.bound_experiment = bc;
  }

  if (j.contains("data_efficiency")) {
    const json& d = j["data_efficiency"];
    DataEfficiencyConfig dc;
    dc.T_train = d.value("T_train", dc.T_train);
    dc.dt = d.value("dt", dc.dt);
    dc.substeps = d.value("substeps", dc.substeps);
    for (const auto& s : d.value("sizes", json::array())) dc.sizes.push_back(s.get<long>());
    dc.trials = d.value("trials", dc.trials);
    dc.eval_sims = d.value("eval_sims", dc.eval_sims);
    dc.eval_horizon = d.value("eval_horizon", dc.eval_horizon);
    dc.sync_steps = d.value("sync_steps", dc.sync_steps);
    dc.burn_in = d.value("burn_in", dc.burn_in);
    dc.seed = d.value("seed", dc.seed);
    dc.esn = parse_esn(d.value("esn", json()));
    if (dc.sizes.empty()) throw ConfigError("data_efficiency.sizes", "must be nonempty");
    for (long s : dc.sizes) {
      if (s < dc.esn.washout + 2) {
        throw ConfigError("data_efficiency.sizes", "size smaller than washout + 2");
      }
      if (s > std::lround(dc.T_train / dc.dt)) {
        throw ConfigError("data_efficiency.sizes", "size exceeds collected trajectory length");
      }
    }
    c.data_efficiency = dc;
  }

  c.out_dir = j.value("output", json::object()).value("dir", c.out_dir);
  c.raw_json = j.dump(2);

  // Cross-field checks that need the system
  const SystemModel system = c.make_system();
  if (c.box.dim() != system.n_u) {
    throw ConfigError("quantization", "box dimension != system n_u");
  }
  c.make_V();
  if (c.y0_train && c.y0_train->size() != system.n_y) {
    throw ConfigError("data.y0", "dimension != system n_y");
  }
  if (c.y0_mpc && c.y0_mpc->size() != system.n_y) {
    throw ConfigError("mpc.y0", "dimension != system n_y");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("<file>", "cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_config_json(text);
}

std::string serialize_config(const ExperimentConfig& config) { return config.raw_json; }

std::uint64_t config_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const ExperimentConfig& config, std::uint64_t seed_used) {
  std::filesystem::create_directories(out_dir);
  json j;
  j["command"] = command;
  j["config_hash"] = config_hash(config.raw_json);
  j["seed"] = seed_used;
  j["system"] = config.system_name;
  j["model_kind"] = config.model_kind;
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  j["unix_time"] = std::chrono::duration_cast<std::chrono::seconds>(now).count();
  j["version"] = "quasimodo 0.1.0";
  std::ofstream f(out_dir + "/run_manifest.json");
  if (!f) throw IoError("cannot open run manifest for writing");
  f << j.dump(2) << "\n";
}

}  // namespace quasimodo
