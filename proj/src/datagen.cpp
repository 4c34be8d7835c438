#include "quasimodo/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "quasimodo/errors.hpp"

namespace quasimodo {

namespace {
using nlohmann::json;

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}
}  // namespace

int ObservableSpec::output_dim(int n_y) const {
  switch (kind) {
    case Kind::FullState:
      return n_y;
    case Kind::CoordinateSelection:
      return static_cast<int>(indices.size());
    case Kind::DelayEmbedding: {
      const int base = base_kind == Kind::CoordinateSelection
                           ? static_cast<int>(base_indices.size())
                           : n_y;
      return base * (delay_count + 1);
    }
  }
  return n_y;
}

bool LabeledTrajectory::consistent() const {
  const auto n = observables.size();
  return times.size() == n && control_indices.size() + 1 == std::max<std::size_t>(n, 1) &&
         controls_applied.size() == control_indices.size();
}

LabeledTrajectory generate_training_data(const SystemModel& system, const QuantizedControlSet& V,
                                         double dt_model, double T_train, int substeps,
                                         std::uint64_t seed, const Vector& y0) {
  if (dt_model <= 0.0) throw InvalidParam("dt_model must be > 0");
  const double ratio = T_train / dt_model;
  const long steps = std::lround(ratio);
  if (steps < 1 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    throw InvalidParam("dt_model must divide T_train");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, V.size() - 1);

  LabeledTrajectory traj;
  traj.times.reserve(steps + 1);
  traj.observables.reserve(steps + 1);
  traj.control_indices.reserve(steps);
  traj.controls_applied.reserve(steps);

  DelayHistory history;
  DelayHistory* hist = nullptr;
  if (system.has_delay()) {
    history = constant_history(y0, 0.0, system.delay);
    hist = &history;
  }

  Vector y = y0;
  traj.times.push_back(0.0);
  traj.observables.push_back(y);
  for (long i = 0; i < steps; ++i) {
    const int j = pick(rng);
    TimeGrid grid{i * dt_model, dt_model, 1};
    y = flow_map(system, y, {V.points[j]}, grid, substeps, hist).back();
    traj.times.push_back((i + 1) * dt_model);
    traj.observables.push_back(y);
    traj.control_indices.push_back(j);
    traj.controls_applied.push_back(V.points[j]);
  }
  return traj;
}

SnapshotPairs partition_by_control(const LabeledTrajectory& traj, int num_controls) {
  if (!traj.consistent()) throw InvalidParam("inconsistent trajectory");
  std::vector<std::vector<long>> members(num_controls);
  for (std::size_t i = 0; i < traj.control_indices.size(); ++i) {
    const int j = traj.control_indices[i];
    if (j < 0 || j >= num_controls) throw InvalidParam("control index out of range");
    members[j].push_back(static_cast<long>(i));
  }
  SnapshotPairs pairs;
  pairs.Z.resize(num_controls);
  pairs.Ztilde.resize(num_controls);
  const int q = traj.observables.empty() ? 0 : static_cast<int>(traj.observables[0].size());
  for (int j = 0; j < num_controls; ++j) {
    const auto& idx = members[j];
    pairs.Z[j].resize(q, static_cast<long>(idx.size()));
    pairs.Ztilde[j].resize(q, static_cast<long>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) {
      pairs.Z[j].col(static_cast<long>(c)) = traj.observables[idx[c]];
      pairs.Ztilde[j].col(static_cast<long>(c)) = traj.observables[idx[c] + 1];
    }
    if (idx.empty()) pairs.empty_buckets.push_back(j);
  }
  return pairs;
}

std::vector<Vector> apply_observable(const std::vector<Vector>& states,
                                     const ObservableSpec& spec) {
  auto select = [](const Vector& y, const std::vector<int>& idx) {
    Vector z(static_cast<long>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] < 0 || idx[k] >= y.size()) throw InvalidParam("observable index out of range");
      z(static_cast<long>(k)) = y(idx[k]);
    }
    return z;
  };

  switch (spec.kind) {
    case ObservableSpec::Kind::FullState:
      return states;
    case ObservableSpec::Kind::CoordinateSelection: {
      std::vector<Vector> out;
      out.reserve(states.size());
      for (const auto& y : states) out.push_back(select(y, spec.indices));
      return out;
    }
    case ObservableSpec::Kind::DelayEmbedding: {
      std::vector<Vector> base;
      if (spec.base_kind == ObservableSpec::Kind::CoordinateSelection) {
        base.reserve(states.size());
        for (const auto& y : states) base.push_back(select(y, spec.base_indices));
      } else {
        base = states;
      }
      const int d = spec.delay_count;
      const int lag = spec.lag_step;
      if (lag < 1) throw InvalidParam("lag_step must be >= 1");
      const long offset = static_cast<long>(d) * lag;
      if (static_cast<long>(base.size()) <= offset) {
        throw SequenceTooShort("delay embedding needs more than d*lag_step samples");
      }
      std::vector<Vector> out;
      const int qb = base.empty() ? 0 : static_cast<int>(base[0].size());
      out.reserve(base.size() - offset);
      for (long i = offset; i < static_cast<long>(base.size()); ++i) {
        Vector z(qb * (d + 1));
        for (int l = 0; l <= d; ++l) z.segment(l * qb, qb) = base[i - static_cast<long>(l) * lag];
        out.push_back(z);
      }
      return out;
    }
  }
  return states;
}

LabeledTrajectory observe_trajectory(const LabeledTrajectory& traj, const ObservableSpec& spec) {
  LabeledTrajectory out;
  out.observables = apply_observable(traj.observables, spec);
  const long dropped = traj.size() - static_cast<long>(out.observables.size());
  out.times.assign(traj.times.begin() + dropped, traj.times.end());
  out.control_indices.assign(traj.control_indices.begin() + dropped, traj.control_indices.end());
  out.controls_applied.assign(traj.controls_applied.begin() + dropped,
                              traj.controls_applied.end());
  return out;
}

void save_dataset(const std::string& path, const LabeledTrajectory& traj,
                  const DatasetMeta& meta) {
  if (!traj.consistent() && traj.size() > 0) throw InvalidParam("inconsistent trajectory");
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  const int q = traj.size() > 0 ? static_cast<int>(traj.observables[0].size()) : 0;
  const int n_u =
      traj.controls_applied.empty() ? 0 : static_cast<int>(traj.controls_applied[0].size());
  f << "t";
  for (int c = 0; c < q; ++c) f << ",z_" << (c + 1);
  f << ",j";
  for (int c = 0; c < n_u; ++c) f << ",u_" << (c + 1);
  f << "\n";
  for (long i = 0; i < traj.size(); ++i) {
    f << fmt17(traj.times[i]);
    for (int c = 0; c < q; ++c) f << "," << fmt17(traj.observables[i](c));
    const bool has_label = i < static_cast<long>(traj.control_indices.size());
    f << "," << (has_label ? traj.control_indices[i] + 1 : 0);
    for (int c = 0; c < n_u; ++c) {
      f << "," << fmt17(has_label ? traj.controls_applied[i](c) : 0.0);
    }
    f << "\n";
  }
  if (!f) throw IoError("failed writing " + path);

  json j;
  j["system"] = meta.system_name;
  j["params"] = meta.params;
  j["dt"] = meta.dt;
  j["seed"] = meta.seed;
  j["substeps"] = meta.substeps;
  j["observable_dim"] = q;
  j["control_dim"] = n_u;
  json pts = json::array();
  for (const auto& u : meta.control_points) {
    pts.push_back(std::vector<double>(u.data(), u.data() + u.size()));
  }
  j["V"] = pts;
  std::ofstream fm(path + ".meta.json");
  if (!fm) throw IoError("cannot open " + path + ".meta.json for writing");
  fm << j.dump(2) << "\n";
}

LabeledTrajectory load_dataset(const std::string& path, DatasetMeta* meta_out) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw SchemaMismatch("missing header", 1);

  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.push_back("");
    return cells;
  };

  const auto header = split(line);
  int q = 0;
  while (1 + q < static_cast<int>(header.size()) && header[1 + q].rfind("z_", 0) == 0) ++q;
  if (1 + q >= static_cast<int>(header.size()) || header[1 + q] != "j") {
    throw SchemaMismatch("expected column 'j' after the observables", 1);
  }
  const int n_u = static_cast<int>(header.size()) - q - 2;
  const int expected = static_cast<int>(header.size());

  LabeledTrajectory traj;
  std::vector<int> raw_labels;
  std::vector<Vector> raw_controls;
  long line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (static_cast<int>(cells.size()) != expected) {
      throw SchemaMismatch("expected " + std::to_string(expected) + " columns, got " +
                               std::to_string(cells.size()),
                           line_no);
    }
    try {
      traj.times.push_back(std::stod(cells[0]));
      Vector z(q);
      for (int c = 0; c < q; ++c) z(c) = std::stod(cells[1 + c]);
      traj.observables.push_back(z);
      raw_labels.push_back(std::stoi(cells[1 + q]));
      Vector u(n_u);
      for (int c = 0; c < n_u; ++c) u(c) = std::stod(cells[2 + q + c]);
      raw_controls.push_back(u);
    } catch (const std::exception&) {
      throw SchemaMismatch("non-numeric cell", line_no);
    }
  }
  // the final row's label/control are placeholders
  for (std::size_t i = 0; i + 1 < raw_labels.size(); ++i) {
    traj.control_indices.push_back(raw_labels[i] - 1);
    traj.controls_applied.push_back(raw_controls[i]);
  }

  if (meta_out) {
    std::ifstream fm(path + ".meta.json");
    if (fm) {
      json j;
      fm >> j;
      meta_out->system_name = j.value("system", "");
      meta_out->dt = j.value("dt", 0.0);
      meta_out->seed = j.value("seed", std::uint64_t{0});
      meta_out->substeps = j.value("substeps", 1);
      if (j.contains("params")) {
        for (auto& [k, v] : j["params"].items()) meta_out->params[k] = v.get<double>();
      }
      meta_out->control_points.clear();
      for (const auto& pt : j.value("V", json::array())) {
        Vector u(static_cast<long>(pt.size()));
        for (long c = 0; c < u.size(); ++c) u(c) = pt[static_cast<std::size_t>(c)].get<double>();
        meta_out->control_points.push_back(u);
      }
    }
  }
  return traj;
}

}  // namespace quasimodo
