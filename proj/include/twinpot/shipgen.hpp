#pragma once

#include <functional>
#include <string>
#include <vector>

#include "twinpot/seaport.hpp"

namespace twinpot::shipgen {

// Hull force polynomial, dimensionless coefficients over (u, v, L*r) in m/s:
//   X_H = qf*(xuu*u|u| + xvr*v*(Lr))
//   Y_H = qf*(yv*v|u| + yr*(Lr)|u| + yvv*v|v| + yrr*(Lr)|Lr| + yvr*v|Lr| + yrv*|v|(Lr))
//   N_H = qm*(nv*v|u| + nr*(Lr)|u| + nvv*v|v| + nrr*(Lr)|Lr| + nvr*v|Lr| + nrv*|v|(Lr))
// with qf = rho*L*d/2 and qm = rho*L^2*d/2.
struct HullDerivatives {
  double xuu = 0.0, xvr = 0.0;
  double yv = 0.0, yr = 0.0, yvv = 0.0, yrr = 0.0, yvr = 0.0, yrv = 0.0;
  double nv = 0.0, nr = 0.0, nvv = 0.0, nrr = 0.0, nvr = 0.0, nrv = 0.0;
};

struct PropellerParams {
  double diameter = 3.0;
  double kt0 = 0.35, kt1 = -0.28, kt2 = -0.14;  // K_T = kt0 + kt1*J + kt2*J^2
  double wake_fraction = 0.25;
  double thrust_deduction = 0.2;
};

struct RudderParams {
  double area = 18.0;          // m^2
  double lift_slope = 2.2;
  double x_position = -48.0;   // m from midships, negative astern
  double flow_straightening = 0.35;
  double ahull = 0.3;          // hull-rudder interaction gain
  double xhull = -45.0;        // m, lever of the induced hull force
  double steer_drag = 0.25;    // steering resistance deduction
};

struct SolverParams {
  double dt = 0.1;                // s
  double max_duration = 3000.0;   // s, standard-maneuver cutoff
  double rudder_slew = 0.0873;    // rad/s
  double delta_max = 0.6109;      // rad
  double n_max = 5.0;             // 1/s
};

struct ShipParticulars {
  double length = 100.0;       // m
  double draft = 6.0;          // m
  double mass = 8.0e6;         // kg
  double yaw_inertia = 4.0e9;  // kg m^2
  double rho = 1025.0;         // kg/m^3
  HullDerivatives hull;
  PropellerParams prop;
  RudderParams rudder;
};

// Synthetic coefficient set tuned for stable straight running and a
// convergent turning circle; no published-ship provenance.
ShipParticulars default_tanker();

nlohmann::json particulars_to_json(const ShipParticulars& p, const SolverParams& s);
void particulars_from_json(const nlohmann::json& j, ShipParticulars& p, SolverParams& s);

struct ShipState {
  double x = 0.0, y = 0.0;  // m, earth frame
  double psi = 0.0;         // rad, normalized to (-pi, pi]
  double u = 0.0, v = 0.0;  // m/s
  double r = 0.0;           // rad/s
  double rudder = 0.0;      // rad, actuator position (slew-limited)
};

struct ControlInput {
  double rudder_angle = 0.0;  // rad, commanded; clamped to +-delta_max
  double prop_rate = 0.0;     // 1/s, clamped to [0, n_max]
};

struct Accelerations {
  double udot = 0.0, vdot = 0.0, rdot = 0.0;
};

struct StepResult {
  ShipState state;
  Accelerations accel;  // derivatives at the start of the step
  ControlInput applied;
};

// Body-frame force balance at the given state and applied control.
Accelerations accelerations(const ShipState& state, double rudder_angle, double prop_rate,
                            const ShipParticulars& p);

// One RK4 step with zero-order-hold control; rudder commands pass through the
// slew limiter first. Errors with blow-up on non-finite state.
StepResult step_3dof(const ShipState& state, const ControlInput& control,
                     const ShipParticulars& p, const SolverParams& solver, double dt);

struct TrajectorySample {
  double t = 0.0;
  ShipState state;
  Accelerations accel;
  ControlInput applied;
};

struct Trajectory {
  double dt = 0.1;
  std::vector<TrajectorySample> samples;
};

enum class SimMode { kStandardManeuver, kFreeManeuver };

using ControlSchedule = std::function<ControlInput(double t, const ShipState& state)>;

// Free-maneuver engine: applies the user schedule; trajectory has
// duration/dt + 1 samples. Standard-maneuver mode generates controls
// internally via turning_circle / zigzag below.
Trajectory simulate(const ShipParticulars& p, const SolverParams& solver,
                    const ShipState& initial, const ControlSchedule& schedule, double duration);

struct TurningMetrics {
  double advance = 0.0;           // m, along the approach course at 90 deg
  double transfer = 0.0;          // m, lateral offset at 90 deg
  double tactical_diameter = 0.0; // m, lateral offset at 180 deg
  double steady_radius = 0.0;     // m
  double steady_speed = 0.0;      // m/s
  double steady_yaw_rate = 0.0;   // rad/s
};

struct TurningResult {
  Trajectory trajectory;
  TurningMetrics metrics;
};

// Steady approach then hard-over rudder; errors with non-convergence when no
// steady turn appears within max_duration.
TurningResult turning_circle(const ShipParticulars& p, const SolverParams& solver,
                             double approach_speed, double rudder_angle);

struct ZigzagMetrics {
  double first_overshoot = 0.0;   // rad
  double second_overshoot = 0.0;  // rad
  double period = 0.0;            // s, between first and third reversal
  int reversals = 0;
};

struct ZigzagResult {
  Trajectory trajectory;
  ZigzagMetrics metrics;
};

// Rudder flips each time the heading error crosses the target angle.
ZigzagResult zigzag(const ShipParticulars& p, const SolverParams& solver, double approach_speed,
                    double delta_target, double psi_target);

// Propeller rate whose thrust balances hull resistance at the given speed.
double find_balancing_prop_rate(const ShipParticulars& p, double speed, double n_max);

// Channel names: x, y, psi, u, v, r, udot, vdot, rdot, delta, n.
struct Projection {
  std::vector<std::string> channels;
  std::size_t offset = 0;  // first feature slot
};

std::vector<seaport::TelemetrySample> to_telemetry(const Trajectory& trajectory,
                                                   const std::string& entity_id,
                                                   const Projection& projection,
                                                   std::size_t feature_dim);

// CSV columns: t,x,y,psi,u,v,r,udot,vdot,rdot,delta,n.
std::string trajectory_to_csv(const Trajectory& trajectory);

double normalize_angle(double rad);

}  // namespace twinpot::shipgen
