#include "twinpot/shipgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "twinpot/errors.hpp"

namespace twinpot::shipgen {

double normalize_angle(double rad) {
  double out = std::remainder(rad, 6.283185307179586476925287);
  if (out <= -3.141592653589793238462643) out += 6.283185307179586476925287;
  return out;
}

ShipParticulars default_tanker() {
  ShipParticulars p;
  p.hull.xuu = -0.022;
  p.hull.xvr = 0.10;
  p.hull.yv = -0.35;
  p.hull.yr = 0.08;
  p.hull.yvv = -1.20;
  p.hull.yrr = -0.02;
  p.hull.yvr = -0.60;
  p.hull.yrv = -0.30;
  p.hull.nv = -0.10;
  p.hull.nr = -0.07;
  p.hull.nvv = -0.05;
  p.hull.nrr = -0.05;
  p.hull.nvr = -0.20;
  p.hull.nrv = -0.06;
  return p;
}

nlohmann::json particulars_to_json(const ShipParticulars& p, const SolverParams& s) {
  return {{"coefficients_provenance", "synthetic"},
          {"length", p.length},
          {"draft", p.draft},
          {"mass", p.mass},
          {"yaw_inertia", p.yaw_inertia},
          {"rho", p.rho},
          {"hull",
           {{"xuu", p.hull.xuu}, {"xvr", p.hull.xvr}, {"yv", p.hull.yv},   {"yr", p.hull.yr},
            {"yvv", p.hull.yvv}, {"yrr", p.hull.yrr}, {"yvr", p.hull.yvr}, {"yrv", p.hull.yrv},
            {"nv", p.hull.nv},   {"nr", p.hull.nr},   {"nvv", p.hull.nvv}, {"nrr", p.hull.nrr},
            {"nvr", p.hull.nvr}, {"nrv", p.hull.nrv}}},
          {"propeller",
           {{"diameter", p.prop.diameter},
            {"kt0", p.prop.kt0},
            {"kt1", p.prop.kt1},
            {"kt2", p.prop.kt2},
            {"wake_fraction", p.prop.wake_fraction},
            {"thrust_deduction", p.prop.thrust_deduction}}},
          {"rudder",
           {{"area", p.rudder.area},
            {"lift_slope", p.rudder.lift_slope},
            {"x_position", p.rudder.x_position},
            {"flow_straightening", p.rudder.flow_straightening},
            {"ahull", p.rudder.ahull},
            {"xhull", p.rudder.xhull},
            {"steer_drag", p.rudder.steer_drag}}},
          {"solver",
           {{"dt", s.dt},
            {"max_duration", s.max_duration},
            {"rudder_slew", s.rudder_slew},
            {"delta_max", s.delta_max},
            {"n_max", s.n_max}}}};
}

void particulars_from_json(const nlohmann::json& j, ShipParticulars& p, SolverParams& s) {
  p.length = j.value("length", p.length);
  p.draft = j.value("draft", p.draft);
  p.mass = j.value("mass", p.mass);
  p.yaw_inertia = j.value("yaw_inertia", p.yaw_inertia);
  p.rho = j.value("rho", p.rho);
  if (j.contains("hull")) {
    const auto& h = j.at("hull");
    p.hull.xuu = h.value("xuu", p.hull.xuu);
    p.hull.xvr = h.value("xvr", p.hull.xvr);
    p.hull.yv = h.value("yv", p.hull.yv);
    p.hull.yr = h.value("yr", p.hull.yr);
    p.hull.yvv = h.value("yvv", p.hull.yvv);
    p.hull.yrr = h.value("yrr", p.hull.yrr);
    p.hull.yvr = h.value("yvr", p.hull.yvr);
    p.hull.yrv = h.value("yrv", p.hull.yrv);
    p.hull.nv = h.value("nv", p.hull.nv);
    p.hull.nr = h.value("nr", p.hull.nr);
    p.hull.nvv = h.value("nvv", p.hull.nvv);
    p.hull.nrr = h.value("nrr", p.hull.nrr);
    p.hull.nvr = h.value("nvr", p.hull.nvr);
    p.hull.nrv = h.value("nrv", p.hull.nrv);
  }
  if (j.contains("propeller")) {
    const auto& q = j.at("propeller");
    p.prop.diameter = q.value("diameter", p.prop.diameter);
    p.prop.kt0 = q.value("kt0", p.prop.kt0);
    p.prop.kt1 = q.value("kt1", p.prop.kt1);
    p.prop.kt2 = q.value("kt2", p.prop.kt2);
    p.prop.wake_fraction = q.value("wake_fraction", p.prop.wake_fraction);
    p.prop.thrust_deduction = q.value("thrust_deduction", p.prop.thrust_deduction);
  }
  if (j.contains("rudder")) {
    const auto& q = j.at("rudder");
    p.rudder.area = q.value("area", p.rudder.area);
    p.rudder.lift_slope = q.value("lift_slope", p.rudder.lift_slope);
    p.rudder.x_position = q.value("x_position", p.rudder.x_position);
    p.rudder.flow_straightening = q.value("flow_straightening", p.rudder.flow_straightening);
    p.rudder.ahull = q.value("ahull", p.rudder.ahull);
    p.rudder.xhull = q.value("xhull", p.rudder.xhull);
    p.rudder.steer_drag = q.value("steer_drag", p.rudder.steer_drag);
  }
  if (j.contains("solver")) {
    const auto& q = j.at("solver");
    s.dt = q.value("dt", s.dt);
    s.max_duration = q.value("max_duration", s.max_duration);
    s.rudder_slew = q.value("rudder_slew", s.rudder_slew);
    s.delta_max = q.value("delta_max", s.delta_max);
    s.n_max = q.value("n_max", s.n_max);
  }
}

Accelerations accelerations(const ShipState& s, double rudder_angle, double prop_rate,
                            const ShipParticulars& p) {
  const double qf = 0.5 * p.rho * p.length * p.draft;
  const double qm = qf * p.length;
  const double u = s.u, v = s.v;
  const double rl = p.length * s.r;

  const double xh = qf * (p.hull.xuu * u * std::abs(u) + p.hull.xvr * v * rl);
  const double yh = qf * (p.hull.yv * v * std::abs(u) + p.hull.yr * rl * std::abs(u) +
                          p.hull.yvv * v * std::abs(v) + p.hull.yrr * rl * std::abs(rl) +
                          p.hull.yvr * v * std::abs(rl) + p.hull.yrv * std::abs(v) * rl);
  const double nh = qm * (p.hull.nv * v * std::abs(u) + p.hull.nr * rl * std::abs(u) +
                          p.hull.nvv * v * std::abs(v) + p.hull.nrr * rl * std::abs(rl) +
                          p.hull.nvr * v * std::abs(rl) + p.hull.nrv * std::abs(v) * rl);

  double xp = 0.0;
  if (prop_rate > 1e-9) {
    const double j = u * (1.0 - p.prop.wake_fraction) / (prop_rate * p.prop.diameter);
    const double kt = p.prop.kt0 + p.prop.kt1 * j + p.prop.kt2 * j * j;
    const double thrust = p.rho * prop_rate * prop_rate *
                          p.prop.diameter * p.prop.diameter * p.prop.diameter * p.prop.diameter *
                          kt;
    xp = (1.0 - p.prop.thrust_deduction) * thrust;
  }

  const double v_rudder = v + p.rudder.x_position * s.r;
  const double u_eff = std::max(std::abs(u), 0.1);
  const double alpha =
      rudder_angle + p.rudder.flow_straightening * std::atan2(v_rudder, u_eff);
  const double ur2 = u * u + v_rudder * v_rudder;
  const double fn = 0.5 * p.rho * p.rudder.area * p.rudder.lift_slope * ur2 * std::sin(alpha);
  const double xr = -(1.0 - p.rudder.steer_drag) * fn * std::sin(rudder_angle);
  const double yr = -(1.0 + p.rudder.ahull) * fn * std::cos(rudder_angle);
  const double nr = -(p.rudder.x_position + p.rudder.ahull * p.rudder.xhull) * fn *
                    std::cos(rudder_angle);

  Accelerations a;
  a.udot = (xh + xp + xr) / p.mass + v * s.r;
  a.vdot = (yh + yr) / p.mass - u * s.r;
  a.rdot = (nh + nr) / p.yaw_inertia;
  return a;
}

namespace {

struct Derivative {
  double dx, dy, dpsi, du, dv, dr;
};

Derivative derivative_at(const ShipState& s, double delta, double n, const ShipParticulars& p) {
  Accelerations a = accelerations(s, delta, n, p);
  Derivative d;
  d.dx = s.u * std::cos(s.psi) - s.v * std::sin(s.psi);
  d.dy = s.u * std::sin(s.psi) + s.v * std::cos(s.psi);
  d.dpsi = s.r;
  d.du = a.udot;
  d.dv = a.vdot;
  d.dr = a.rdot;
  return d;
}

ShipState advance(const ShipState& s, const Derivative& d, double h) {
  ShipState out = s;
  out.x += h * d.dx;
  out.y += h * d.dy;
  out.psi += h * d.dpsi;
  out.u += h * d.du;
  out.v += h * d.dv;
  out.r += h * d.dr;
  return out;
}

bool finite_state(const ShipState& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.psi) &&
         std::isfinite(s.u) && std::isfinite(s.v) && std::isfinite(s.r);
}

}  // namespace

StepResult step_3dof(const ShipState& state, const ControlInput& control,
                     const ShipParticulars& p, const SolverParams& solver, double dt) {
  if (dt <= 0.0) throw Error("bad-timestep", "dt must be positive");
  if (!finite_state(state)) throw Error("blow-up", "non-finite input state");

  // Actuator limits: clamp the command, then slew from the current position.
  double delta_cmd = std::clamp(control.rudder_angle, -solver.delta_max, solver.delta_max);
  double max_move = solver.rudder_slew * dt;
  double delta = state.rudder + std::clamp(delta_cmd - state.rudder, -max_move, max_move);
  double n = std::clamp(control.prop_rate, 0.0, solver.n_max);

  Derivative k1 = derivative_at(state, delta, n, p);
  Derivative k2 = derivative_at(advance(state, k1, dt / 2.0), delta, n, p);
  Derivative k3 = derivative_at(advance(state, k2, dt / 2.0), delta, n, p);
  Derivative k4 = derivative_at(advance(state, k3, dt), delta, n, p);

  StepResult out;
  out.state = state;
  out.state.x += dt / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
  out.state.y += dt / 6.0 * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy);
  out.state.psi += dt / 6.0 * (k1.dpsi + 2.0 * k2.dpsi + 2.0 * k3.dpsi + k4.dpsi);
  out.state.u += dt / 6.0 * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
  out.state.v += dt / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
  out.state.r += dt / 6.0 * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr);
  out.state.psi = normalize_angle(out.state.psi);
  out.state.rudder = delta;

  if (!finite_state(out.state)) {
    throw Error("blow-up", "state diverged; hull coefficients " +
                               nlohmann::json({{"xuu", p.hull.xuu},
                                               {"yv", p.hull.yv},
                                               {"yr", p.hull.yr},
                                               {"nv", p.hull.nv},
                                               {"nr", p.hull.nr}})
                                   .dump());
  }

  out.accel.udot = k1.du;
  out.accel.vdot = k1.dv;
  out.accel.rdot = k1.dr;
  out.applied.rudder_angle = delta;
  out.applied.prop_rate = n;
  return out;
}

Trajectory simulate(const ShipParticulars& p, const SolverParams& solver,
                    const ShipState& initial, const ControlSchedule& schedule, double duration) {
  if (duration <= 0.0) throw Error("bad-duration", "duration must be positive");
  Trajectory traj;
  traj.dt = solver.dt;
  const std::size_t steps = static_cast<std::size_t>(std::llround(duration / solver.dt));
  traj.samples.reserve(steps + 1);

  ShipState state = initial;
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * solver.dt;
    StepResult step = step_3dof(state, schedule(t, state), p, solver, solver.dt);
    traj.samples.push_back(TrajectorySample{t, state, step.accel, step.applied});
    state = step.state;
  }
  const double t_end = static_cast<double>(steps) * solver.dt;
  ControlInput final_control;
  final_control.rudder_angle = state.rudder;
  final_control.prop_rate = std::clamp(schedule(t_end, state).prop_rate, 0.0, solver.n_max);
  Accelerations a = accelerations(state, state.rudder, final_control.prop_rate, p);
  traj.samples.push_back(TrajectorySample{t_end, state, a, final_control});
  return traj;
}

double find_balancing_prop_rate(const ShipParticulars& p, double speed, double n_max) {
  auto net = [&](double n) {
    ShipState s;
    s.u = speed;
    return accelerations(s, 0.0, n, p).udot;
  };
  double lo = 1e-6, hi = n_max;
  if (net(hi) < 0.0) {
    throw Error("insufficient-thrust", "propeller cannot hold the requested speed");
  }
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (net(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

namespace {

// Cumulative (unwrapped) heading change between consecutive samples.
std::vector<double> unwrap_heading(const Trajectory& traj) {
  std::vector<double> out(traj.samples.size(), 0.0);
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    double d = normalize_angle(traj.samples[i].state.psi - traj.samples[i - 1].state.psi);
    out[i] = out[i - 1] + d;
  }
  return out;
}

double interpolate_at_heading(const Trajectory& traj, const std::vector<double>& unwrapped,
                              double target, bool want_y) {
  for (std::size_t i = 1; i < unwrapped.size(); ++i) {
    if (std::abs(unwrapped[i]) >= target) {
      double a = std::abs(unwrapped[i - 1]);
      double b = std::abs(unwrapped[i]);
      double w = b > a ? (target - a) / (b - a) : 1.0;
      double va = want_y ? traj.samples[i - 1].state.y : traj.samples[i - 1].state.x;
      double vb = want_y ? traj.samples[i].state.y : traj.samples[i].state.x;
      return va + w * (vb - va);
    }
  }
  return 0.0;
}

}  // namespace

TurningResult turning_circle(const ShipParticulars& p, const SolverParams& solver,
                             double approach_speed, double rudder_angle) {
  if (approach_speed <= 0.0) throw Error("bad-speed", "approach speed must be positive");
  const double n = find_balancing_prop_rate(p, approach_speed, solver.n_max);
  const double settle = 5.0;

  ShipState state;
  state.u = approach_speed;

  Trajectory traj;
  traj.dt = solver.dt;
  double unwrapped = 0.0;
  double t = 0.0;
  const double turn_until = 3.0 * 3.141592653589793;  // 540 degrees
  while (t < solver.max_duration) {
    ControlInput control;
    control.prop_rate = n;
    control.rudder_angle = t < settle ? 0.0 : rudder_angle;
    StepResult step = step_3dof(state, control, p, solver, solver.dt);
    traj.samples.push_back(TrajectorySample{t, state, step.accel, step.applied});
    double d = normalize_angle(step.state.psi - state.psi);
    state = step.state;
    unwrapped += d;
    t += solver.dt;
    if (std::abs(unwrapped) >= turn_until) break;
  }
  Accelerations a = accelerations(state, state.rudder, n, p);
  traj.samples.push_back(TrajectorySample{t, state, a, ControlInput{state.rudder, n}});

  if (std::abs(unwrapped) < turn_until) {
    throw Error("non-convergence", "turning circle did not complete within max duration");
  }

  std::vector<double> headings = unwrap_heading(traj);
  TurningMetrics m;
  m.advance = interpolate_at_heading(traj, headings, 3.141592653589793 / 2.0, false);
  m.transfer = interpolate_at_heading(traj, headings, 3.141592653589793 / 2.0, true);
  m.tactical_diameter = interpolate_at_heading(traj, headings, 3.141592653589793, true);

  // Steady segment: the final 540-360 degree stretch.
  std::size_t begin = 0;
  for (std::size_t i = 0; i < headings.size(); ++i) {
    if (std::abs(headings[i]) >= 2.0 * 3.141592653589793) {
      begin = i;
      break;
    }
  }
  double r_sum = 0.0, speed_sum = 0.0;
  std::size_t count = 0;
  double r_min = 1e18, r_max = -1e18;
  for (std::size_t i = begin; i < traj.samples.size(); ++i) {
    const ShipState& s = traj.samples[i].state;
    r_sum += s.r;
    speed_sum += std::hypot(s.u, s.v);
    r_min = std::min(r_min, s.r);
    r_max = std::max(r_max, s.r);
    ++count;
  }
  if (count == 0 || r_sum == 0.0) {
    throw Error("non-convergence", "no steady turning segment found");
  }
  m.steady_yaw_rate = r_sum / static_cast<double>(count);
  m.steady_speed = speed_sum / static_cast<double>(count);
  m.steady_radius = m.steady_speed / std::abs(m.steady_yaw_rate);
  if ((r_max - r_min) > 0.02 * std::abs(m.steady_yaw_rate)) {
    throw Error("non-convergence", "yaw rate still drifting in the steady segment");
  }
  return TurningResult{std::move(traj), m};
}

ZigzagResult zigzag(const ShipParticulars& p, const SolverParams& solver, double approach_speed,
                    double delta_target, double psi_target) {
  if (approach_speed <= 0.0) throw Error("bad-speed", "approach speed must be positive");
  const double n = find_balancing_prop_rate(p, approach_speed, solver.n_max);
  const double mag = std::abs(delta_target);
  const double target = std::abs(psi_target);

  ShipState state;
  state.u = approach_speed;

  Trajectory traj;
  traj.dt = solver.dt;
  // s is the current rudder sense; it flips when s*psi reaches the target.
  double s = delta_target >= 0.0 ? 1.0 : -1.0;
  std::vector<double> reversal_times;
  std::vector<double> overshoots;
  double outward_extreme = 0.0;  // heading excursion past the previous target
  double t = 0.0;
  while (t < solver.max_duration && reversal_times.size() < 4) {
    ControlInput control{s * mag, n};
    StepResult step = step_3dof(state, control, p, solver, solver.dt);
    traj.samples.push_back(TrajectorySample{t, state, step.accel, step.applied});
    state = step.state;
    t += solver.dt;

    if (!reversal_times.empty()) {
      outward_extreme = std::max(outward_extreme, -s * state.psi);
    }
    if (s * state.psi >= target) {
      if (!reversal_times.empty()) {
        overshoots.push_back(outward_extreme - target);
      }
      reversal_times.push_back(t);
      s = -s;
      outward_extreme = -s * state.psi;
    }
  }
  Accelerations a = accelerations(state, state.rudder, n, p);
  traj.samples.push_back(TrajectorySample{t, state, a, ControlInput{state.rudder, n}});

  ZigzagMetrics m;
  m.reversals = static_cast<int>(reversal_times.size());
  if (!overshoots.empty()) m.first_overshoot = overshoots[0];
  if (overshoots.size() > 1) m.second_overshoot = overshoots[1];
  if (reversal_times.size() >= 3) m.period = reversal_times[2] - reversal_times[0];
  return ZigzagResult{std::move(traj), m};
}

std::vector<seaport::TelemetrySample> to_telemetry(const Trajectory& trajectory,
                                                   const std::string& entity_id,
                                                   const Projection& projection,
                                                   std::size_t feature_dim) {
  if (projection.offset + projection.channels.size() > feature_dim) {
    throw Error("projection-overflow", "projection does not fit the feature vector");
  }
  auto channel_value = [](const TrajectorySample& s, const std::string& name) {
    if (name == "x") return s.state.x;
    if (name == "y") return s.state.y;
    if (name == "psi") return s.state.psi;
    if (name == "u") return s.state.u;
    if (name == "v") return s.state.v;
    if (name == "r") return s.state.r;
    if (name == "udot") return s.accel.udot;
    if (name == "vdot") return s.accel.vdot;
    if (name == "rdot") return s.accel.rdot;
    if (name == "delta") return s.applied.rudder_angle;
    if (name == "n") return s.applied.prop_rate;
    throw Error("unknown-channel", "trajectory has no channel '" + name + "'");
  };

  std::vector<seaport::TelemetrySample> out;
  out.reserve(trajectory.samples.size());
  for (const auto& s : trajectory.samples) {
    seaport::TelemetrySample sample;
    sample.entity_id = entity_id;
    sample.timestamp = s.t;
    sample.values.assign(feature_dim, 0.0);
    for (std::size_t i = 0; i < projection.channels.size(); ++i) {
      sample.values[projection.offset + i] = channel_value(s, projection.channels[i]);
    }
    out.push_back(std::move(sample));
  }
  return out;
}

std::string trajectory_to_csv(const Trajectory& trajectory) {
  std::string out = "t,x,y,psi,u,v,r,udot,vdot,rdot,delta,n\n";
  char buf[320];
  for (const auto& s : trajectory.samples) {
    std::snprintf(buf, sizeof buf,
                  "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  s.t, s.state.x, s.state.y, s.state.psi, s.state.u, s.state.v, s.state.r,
                  s.accel.udot, s.accel.vdot, s.accel.rdot, s.applied.rudder_angle,
                  s.applied.prop_rate);
    out += buf;
  }
  return out;
}

}  // namespace twinpot::shipgen
