#include "quasimodo/model_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "quasimodo/errors.hpp"

namespace quasimodo {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (long r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) return Matrix();
  const long rows = static_cast<long>(j.size());
  const long cols = static_cast<long>(j[0].size());
  Matrix M(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      M(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return M;
}

json vector_to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<long>(j.size()));
  for (long i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

json controls_to_json(const QuantizedControlSet& V) {
  json j;
  j["lower"] = vector_to_json(V.parent.lower);
  j["upper"] = vector_to_json(V.parent.upper);
  json pts = json::array();
  for (const auto& u : V.points) pts.push_back(vector_to_json(u));
  j["points"] = pts;
  return j;
}

QuantizedControlSet controls_from_json(const json& j) {
  QuantizedControlSet V;
  V.parent.lower = vector_from_json(j["lower"]);
  V.parent.upper = vector_from_json(j["upper"]);
  for (const auto& pt : j["points"]) V.points.push_back(vector_from_json(pt));
  return V;
}

json system_to_json(const SystemModel& s) {
  json j;
  j["name"] = s.name;
  j["params"] = s.params;
  return j;
}

SystemModel system_from_json(const json& j) {
  std::map<std::string, double> params;
  const json raw = j.value("params", json::object());
  for (auto& [k, v] : raw.items()) params[k] = v.get<double>();
  return builtin_system(j.at("name").get<std::string>(), params);
}

}  // namespace

void save_model(const std::string& path, const SurrogateEnsemble& ensemble) {
  json j;
  j["dt"] = ensemble.dt();
  j["V"] = controls_to_json(ensemble.controls());

  if (const auto* edmd = dynamic_cast<const EdmdEnsemble*>(&ensemble)) {
    j["kind"] = "edmd";
    j["observable_dim"] = edmd->model().q;
    j["max_degree"] = edmd->model().dictionary.max_degree;
    j["include_constant"] = edmd->model().dictionary.include_constant;
    j["propagate_lifted"] = edmd->propagate_lifted();
    json mats = json::array();
    for (const auto& Kt : edmd->model().Kt) mats.push_back(matrix_to_json(Kt));
    j["K_transposed"] = mats;
    j["underdetermined"] = edmd->model().underdetermined;
  } else if (const auto* esn = dynamic_cast<const EsnEnsemble*>(&ensemble)) {
    j["kind"] = "esn";
    const EsnModel& m = esn->model();
    j["n_r"] = m.reservoir.size();
    j["observable_dim"] = m.q();
    j["spectral_radius"] = m.reservoir.spectral_radius;
    j["sparsity"] = m.reservoir.sparsity;
    j["activation_scale"] = m.reservoir.activation_scale;
    j["seed"] = m.reservoir.seed;
    j["ridge_beta"] = m.ridge_beta;
    j["washout"] = m.washout;
    j["sync_window"] = esn->sync_window();
    j["W_res"] = matrix_to_json(m.reservoir.W_res);
    j["W_fb"] = matrix_to_json(m.reservoir.W_fb);
    json outs = json::array();
    for (const auto& W : m.W_out) outs.push_back(matrix_to_json(W));
    j["W_out"] = outs;
  } else if (const auto* pod = dynamic_cast<const PodEnsemble*>(&ensemble)) {
    j["kind"] = "pod";
    const PodModel& m = pod->model();
    j["system"] = system_to_json(m.plant);
    j["substeps"] = m.substeps;
    j["Psi"] = matrix_to_json(m.basis.Psi);
    j["singular_values"] = vector_to_json(m.basis.singular_values);
    j["retained_energy"] = m.basis.retained_energy;
  } else if (const auto* flow = dynamic_cast<const FlowEnsemble*>(&ensemble)) {
    j["kind"] = "perturbed";
    j["system"] = system_to_json(flow->system());
    j["substeps"] = flow->substeps();
    j["perturbation"] = vector_to_json(flow->perturbation());
  } else {
    throw InvalidParam("unknown ensemble type for serialization");
  }

  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << j.dump() << "\n";
}

std::unique_ptr<SurrogateEnsemble> load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw IoError("malformed model file " + path + ": " + e.what());
  }
  const std::string kind = j.at("kind").get<std::string>();
  const double dt = j.at("dt").get<double>();
  QuantizedControlSet V = controls_from_json(j.at("V"));

  if (kind == "edmd") {
    EdmdModel m;
    m.q = j.at("observable_dim").get<int>();
    m.dictionary.max_degree = j.at("max_degree").get<int>();
    m.dictionary.include_constant = j.value("include_constant", true);
    for (const auto& mat : j.at("K_transposed")) m.Kt.push_back(matrix_from_json(mat));
    m.underdetermined = j.value("underdetermined", std::vector<bool>(m.Kt.size(), false));
    return std::make_unique<EdmdEnsemble>(std::move(m), std::move(V), dt,
                                          j.value("propagate_lifted", false));
  }
  if (kind == "esn") {
    EsnModel m;
    m.reservoir.W_res = matrix_from_json(j.at("W_res"));
    m.reservoir.W_fb = matrix_from_json(j.at("W_fb"));
    m.reservoir.spectral_radius = j.value("spectral_radius", 0.75);
    m.reservoir.sparsity = j.value("sparsity", 0.9);
    m.reservoir.activation_scale = j.value("activation_scale", 0.99);
    m.reservoir.seed = j.value("seed", std::uint64_t{0});
    m.ridge_beta = j.value("ridge_beta", 1e-4);
    m.washout = j.value("washout", 100);
    for (const auto& mat : j.at("W_out")) m.W_out.push_back(matrix_from_json(mat));
    return std::make_unique<EsnEnsemble>(std::move(m), std::move(V), dt,
                                         j.value("sync_window", 20));
  }
  if (kind == "pod") {
    PodModel m;
    m.plant = system_from_json(j.at("system"));
    m.V = V;
    m.dt = dt;
    m.substeps = j.value("substeps", 10);
    m.basis.Psi = matrix_from_json(j.at("Psi"));
    m.basis.singular_values = vector_from_json(j.at("singular_values"));
    m.basis.retained_energy = j.value("retained_energy", 0.0);
    return std::make_unique<PodEnsemble>(std::move(m));
  }
  if (kind == "perturbed") {
    SystemModel base = system_from_json(j.at("system"));
    return std::make_unique<FlowEnsemble>(std::move(base), std::move(V), dt,
                                          j.value("substeps", 1),
                                          vector_from_json(j.at("perturbation")));
  }
  throw IoError("unknown model kind '" + kind + "' in " + path);
}

}  // namespace quasimodo
