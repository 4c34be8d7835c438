#include "quasimodo/dynamics.hpp"

#include <cmath>

#include "quasimodo/errors.hpp"

namespace quasimodo {

void DelayHistory::append(double t, const Vector& y) {
  if (!samples_.empty() && t <= samples_.back().first) {
    throw InvalidParam("delay history times must be strictly increasing");
  }
  samples_.emplace_back(t, y);
}

Vector DelayHistory::at(double t) const {
  if (samples_.empty()) throw InvalidParam("delay history is empty");
  if (t <= samples_.front().first) return samples_.front().second;
  if (t >= samples_.back().first) return samples_.back().second;
  // binary search for the first node with time > t
  long lo = 0, hi = static_cast<long>(samples_.size()) - 1;
  while (hi - lo > 1) {
    long mid = (lo + hi) / 2;
    if (samples_[mid].first <= t)
      lo = mid;
    else
      hi = mid;
  }
  const auto& [ta, ya] = samples_[lo];
  const auto& [tb, yb] = samples_[hi];
  const double w = (t - ta) / (tb - ta);
  return (1.0 - w) * ya + w * yb;
}

void DelayHistory::trim(double t_keep) {
  while (samples_.size() > 2 && samples_[1].first <= t_keep) samples_.pop_front();
}

Vector rk4_step(const SystemModel& system, const Vector& y, const Vector& u, double t, double dt,
                const DelayHistory* history) {
  const Vector k1 = system.rhs(y, u, t, history);
  const Vector k2 = system.rhs(y + 0.5 * dt * k1, u, t + 0.5 * dt, history);
  const Vector k3 = system.rhs(y + 0.5 * dt * k2, u, t + 0.5 * dt, history);
  const Vector k4 = system.rhs(y + dt * k3, u, t + dt, history);
  Vector out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) throw IntegrationDiverged(-1);
  return out;
}

DelayHistory constant_history(const Vector& y0, double t0, double tau) {
  DelayHistory h;
  h.append(t0 - tau - 1.0, y0);
  h.append(t0, y0);
  return h;
}

std::vector<Vector> flow_map(const SystemModel& system, const Vector& y0,
                             const std::vector<Vector>& controls, const TimeGrid& grid,
                             int substeps, DelayHistory* history) {
  if (substeps < 1) throw InvalidParam("substeps must be positive");
  if (static_cast<long>(controls.size()) != grid.steps) {
    throw InvalidParam("controls length must equal grid step count");
  }
  DelayHistory local;
  if (system.has_delay() && history == nullptr) {
    local = constant_history(y0, grid.t0, system.delay);
    history = &local;
  }

  std::vector<Vector> out;
  out.reserve(grid.steps);
  Vector y = y0;
  const double h = grid.dt / substeps;
  for (long i = 0; i < grid.steps; ++i) {
    for (int s = 0; s < substeps; ++s) {
      const double t = grid.t0 + i * grid.dt + s * h;
      try {
        y = rk4_step(system, y, controls[i], t, h, system.has_delay() ? history : nullptr);
      } catch (const IntegrationDiverged&) {
        throw IntegrationDiverged(i);
      }
      if (system.has_delay()) {
        history->append(t + h, y);
        history->trim(t + h - system.delay - 2.0 * grid.dt);
      }
    }
    out.push_back(y);
  }
  return out;
}

namespace {

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

SystemModel make_duffing(const std::map<std::string, double>& p) {
  SystemModel s;
  s.name = "duffing";
  s.n_y = 2;
  s.n_u = 1;
  s.params["alpha"] = param_or(p, "alpha", -1.0);
  s.params["beta"] = param_or(p, "beta", 1.0);
  s.params["delta"] = param_or(p, "delta", 0.0);
  s.params["epsilon"] = param_or(p, "epsilon", 0.0);
  const double alpha = s.params["alpha"], beta = s.params["beta"];
  const double delta = s.params["delta"], eps = s.params["epsilon"];
  s.rhs = [alpha, beta, delta, eps](const Vector& y, const Vector& u, double,
                                    const DelayHistory*) {
    Vector dy(2);
    dy(0) = y(1);
    dy(1) = -delta * y(1) - alpha * y(0) - beta * y(0) * y(0) * y(0) + eps + u(0);
    return dy;
  };
  return s;
}

SystemModel make_lorenz(const std::map<std::string, double>& p, bool cosine_input) {
  SystemModel s;
  s.name = cosine_input ? "lorenz_cos" : "lorenz_affine";
  s.n_y = 3;
  s.n_u = 1;
  s.params["sigma"] = param_or(p, "sigma", 10.0);
  s.params["rho"] = param_or(p, "rho", 28.0);
  s.params["beta"] = param_or(p, "beta", 8.0 / 3.0);
  const double sigma = s.params["sigma"], rho = s.params["rho"], beta = s.params["beta"];
  if (cosine_input) {
    s.params["cos_gain"] = param_or(p, "cos_gain", 50.0);
    const double gain = s.params["cos_gain"];
    s.rhs = [sigma, rho, beta, gain](const Vector& y, const Vector& u, double,
                                     const DelayHistory*) {
      Vector dy(3);
      dy(0) = sigma * (y(1) - y(0));
      dy(1) = y(0) * (rho - y(2)) - y(1) + gain * std::cos(u(0));
      dy(2) = y(0) * y(1) - beta * y(2);
      return dy;
    };
  } else {
    s.rhs = [sigma, rho, beta](const Vector& y, const Vector& u, double, const DelayHistory*) {
      Vector dy(3);
      dy(0) = sigma * (y(1) - y(0));
      dy(1) = y(0) * (rho - y(2)) - y(1) + u(0);
      dy(2) = y(0) * y(1) - beta * y(2);
      return dy;
    };
  }
  return s;
}

SystemModel make_mackey_glass(const std::map<std::string, double>& p) {
  SystemModel s;
  s.name = "mackey_glass";
  s.n_y = 1;
  s.n_u = 1;
  s.params["beta"] = param_or(p, "beta", 2.0);
  s.params["gamma"] = param_or(p, "gamma", 1.0);
  s.params["eta"] = param_or(p, "eta", 9.65);
  s.params["tau"] = param_or(p, "tau", 2.0);
  if (s.params["tau"] <= 0.0) throw InvalidParam("mackey_glass tau must be > 0");
  s.delay = s.params["tau"];
  const double beta = s.params["beta"], gamma = s.params["gamma"], eta = s.params["eta"];
  const double tau = s.delay;
  s.rhs = [beta, gamma, eta, tau](const Vector& y, const Vector& u, double t,
                                  const DelayHistory* history) {
    if (history == nullptr) throw InvalidParam("mackey_glass needs a delay history");
    const double yd = history->at(t - tau)(0);
    Vector dy(1);
    dy(0) = beta * yd / (1.0 + std::pow(yd, eta)) - gamma * y(0) + u(0);
    return dy;
  };
  return s;
}

SystemModel make_burgers(const std::map<std::string, double>& p) {
  SystemModel s;
  s.name = "burgers1d";
  s.n_u = 5;
  s.params["Re"] = param_or(p, "Re", 100.0);
  s.params["L"] = param_or(p, "L", 1.0);
  s.params["Nx"] = param_or(p, "Nx", 100.0);
  const double Re = s.params["Re"], L = s.params["L"];
  const int nx = static_cast<int>(s.params["Nx"]);
  if (nx < 3) throw InvalidParam("burgers1d Nx must be >= 3");
  if (Re <= 0.0 || L <= 0.0) throw InvalidParam("burgers1d Re and L must be > 0");
  s.n_y = nx;
  const double dx = L / (nx + 1);
  // chi_j(x) = 1 on ((j-1)L/5, jL/5]; the five supports partition (0, L].
  Eigen::VectorXi support(nx);
  for (int i = 0; i < nx; ++i) {
    const double x = (i + 1) * dx;
    int j = static_cast<int>(std::ceil(x * 5.0 / L - 1e-12)) - 1;
    support(i) = std::min(std::max(j, 0), 4);
  }
  s.rhs = [Re, dx, nx, support](const Vector& y, const Vector& u, double, const DelayHistory*) {
    Vector dy(nx);
    const double nu = 1.0 / Re;
    for (int i = 0; i < nx; ++i) {
      const double ym = i > 0 ? y(i - 1) : 0.0;       // homogeneous Dirichlet ends
      const double yp = i < nx - 1 ? y(i + 1) : 0.0;
      dy(i) = nu * (ym - 2.0 * y(i) + yp) / (dx * dx) - y(i) * (yp - ym) / (2.0 * dx) +
              u(support(i));
    }
    return dy;
  };
  return s;
}

}  // namespace

SystemModel builtin_system(const std::string& name, const std::map<std::string, double>& params) {
  if (name == "duffing") return make_duffing(params);
  if (name == "lorenz_affine") return make_lorenz(params, false);
  if (name == "lorenz_cos") return make_lorenz(params, true);
  if (name == "mackey_glass") return make_mackey_glass(params);
  if (name == "burgers1d") return make_burgers(params);
  throw UnknownSystem(name);
}

Vector burgers_initial_state(const SystemModel& burgers) {
  const int nx = burgers.n_y;
  const double L = burgers.params.at("L");
  const double dx = L / (nx + 1);
  Vector y0(nx);
  for (int i = 0; i < nx; ++i) y0(i) = ((i + 1) * dx <= 0.5 * L) ? 1.0 : 0.0;
  return y0;
}

Vector default_initial_state(const SystemModel& system) {
  if (system.name == "burgers1d") return burgers_initial_state(system);
  if (system.name == "mackey_glass") return Vector::Constant(1, 0.5);
  if (system.name == "duffing") {
    Vector y0(2);
    y0 << 1.0, 0.0;
    return y0;
  }
  return Vector::Ones(system.n_y);
}

}  // namespace quasimodo
