#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinquant/errors.hpp"
#include "spinquant/types.hpp"

namespace spinquant {

/// Lumped model of a wound-up rotary mechanism: a torsion element with
/// `wound_angle` radians of stored wind drives the load once released,
/// against viscous and Coulomb friction. `jitter_amplitude` modulates the
/// driving torque sinusoidally (used to mimic an elastic band's uneven
/// release); it never reverses the torque sign.
struct MechanicalModel {
    double inertia = 1.0;          // kg m^2
    double spring_constant = 1.0;  // N m / rad
    double wound_angle = 1.0;      // rad stored at t=0
    double viscous_drag = 0.0;     // N m s / rad
    double coulomb_friction = 0.0; // N m
    double jitter_amplitude = 0.0; // dimensionless, in [0, 1)
    double jitter_period = 1.0;    // s

    void validate() const {
        if (!(inertia > 0.0))
            throw value_error("MechanicalModel: inertia must be positive");
        if (spring_constant < 0.0 || wound_angle < 0.0 || viscous_drag < 0.0 ||
            coulomb_friction < 0.0)
            throw value_error("MechanicalModel: negative parameter");
        if (!(jitter_amplitude >= 0.0 && jitter_amplitude < 1.0))
            throw value_error("MechanicalModel: jitter_amplitude must be in [0, 1)");
        if (jitter_amplitude > 0.0 && !(jitter_period > 0.0))
            throw value_error("MechanicalModel: jitter_period must be positive");
        for (double x : {inertia, spring_constant, wound_angle, viscous_drag,
                         coulomb_friction, jitter_amplitude, jitter_period})
            if (!std::isfinite(x))
                throw value_error("MechanicalModel: non-finite parameter");
    }

    double driving_torque(double t, double theta) const {
        const double wind = std::max(wound_angle - theta, 0.0);
        double j = 0.0;
        if (jitter_amplitude > 0.0)
            j = jitter_amplitude * std::sin(2.0 * std::numbers::pi * t / jitter_period);
        return spring_constant * wind * (1.0 + j);
    }

    /// Kinetic plus stored torsion energy; non-increasing along a jitter-free
    /// release.
    double energy(double theta, double omega) const {
        const double wind = std::max(wound_angle - theta, 0.0);
        return 0.5 * inertia * omega * omega + 0.5 * spring_constant * wind * wind;
    }
};

/// A named simulation setup: mechanism plus acquisition parameters.
struct SimPreset {
    std::string name;
    MechanicalModel model;
    double duration = 1.0; // s
    double fps = 20.0;     // frames per second when rendered

    void validate() const {
        model.validate();
        if (!(duration > 0.0) || !(fps > 0.0))
            throw value_error("SimPreset: duration and fps must be positive");
    }
};

/// Integrate the release with classical fixed-step RK4 from rest
/// (theta=0, omega=0) and return theta sampled every dt.
///
/// Equation of motion:
///   I dw/dt = kappa*max(Phi-theta,0)*(1+j(t)) - beta*w - gamma*sign(w)
/// Once w would cross zero while the driving torque is at or below the
/// Coulomb level, the mechanism is considered held by static friction and
/// stays at rest for the remainder of the run.
inline AngleTrace simulate_release(const MechanicalModel& model, double duration, double dt) {
    model.validate();
    if (!(dt > 0.0) || dt > 1e-2)
        throw value_error("simulate_release: dt must be in (0, 1e-2]");
    if (!(duration >= 2.0 * dt))
        throw value_error("simulate_release: duration too short for dt");

    const auto accel = [&](double t, double theta, double omega) {
        const double sgn = (omega > 0.0) - (omega < 0.0);
        return (model.driving_torque(t, theta) - model.viscous_drag * omega -
                model.coulomb_friction * sgn) /
               model.inertia;
    };

    const auto n_steps = static_cast<std::size_t>(std::llround(duration / dt));
    std::vector<double> times(n_steps + 1), angles(n_steps + 1);
    double theta = 0.0, omega = 0.0;
    bool stopped = model.driving_torque(0.0, 0.0) <= model.coulomb_friction;
    times[0] = 0.0;
    angles[0] = 0.0;

    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (!stopped) {
            const double k1t = omega;
            const double k1w = accel(t, theta, omega);
            const double k2t = omega + 0.5 * dt * k1w;
            const double k2w = accel(t + 0.5 * dt, theta + 0.5 * dt * k1t, omega + 0.5 * dt * k1w);
            const double k3t = omega + 0.5 * dt * k2w;
            const double k3w = accel(t + 0.5 * dt, theta + 0.5 * dt * k2t, omega + 0.5 * dt * k2w);
            const double k4t = omega + dt * k3w;
            const double k4w = accel(t + dt, theta + dt * k3t, omega + dt * k3w);
            theta += dt / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
            omega += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);

            if (std::abs(omega) > 1e3)
                throw numeric_error(
                    "simulate_release: integration diverged (|omega| > 1e3 rad/s); "
                    "try a smaller dt");

            if (omega < 0.0) omega = 0.0; // release never reverses
            const double driving = model.driving_torque(t + dt, theta);
            if (driving <= model.coulomb_friction) {
                // Would cross zero within the next step while static friction
                // can hold it: declare the mechanism stopped. (The sign
                // discontinuity of the Coulomb term otherwise stalls RK4 just
                // above zero.)
                const double decel = (model.coulomb_friction +
                                      model.viscous_drag * omega - driving) /
                                     model.inertia;
                if (omega <= decel * dt) {
                    omega = 0.0;
                    stopped = true;
                }
            }
        }
        times[k + 1] = static_cast<double>(k + 1) * dt;
        angles[k + 1] = theta;
    }
    return AngleTrace(std::move(times), std::move(angles));
}

/// Numerical derivative of angle/2pi: central differences inside, one-sided
/// quadratic formulas at the two endpoints, absolute value, in Hz.
inline VelocityTrace derivative_trace(const AngleTrace& trace) {
    const std::size_t n = trace.size();
    if (n < 3)
        throw value_error("derivative_trace: need at least 3 samples");
    const auto& t = trace.times;
    const auto& a = trace.angles;
    std::vector<double> v(n);

    // d/dx of the quadratic through (p0,y0),(p1,y1),(p2,y2), evaluated at x
    const auto quad_deriv = [](double x, double p0, double p1, double p2,
                               double y0, double y1, double y2) {
        return y0 * (2.0 * x - p1 - p2) / ((p0 - p1) * (p0 - p2)) +
               y1 * (2.0 * x - p0 - p2) / ((p1 - p0) * (p1 - p2)) +
               y2 * (2.0 * x - p0 - p1) / ((p2 - p0) * (p2 - p1));
    };

    v[0] = quad_deriv(t[0], t[0], t[1], t[2], a[0], a[1], a[2]);
    for (std::size_t i = 1; i + 1 < n; ++i)
        v[i] = (a[i + 1] - a[i - 1]) / (t[i + 1] - t[i - 1]);
    v[n - 1] = quad_deriv(t[n - 1], t[n - 3], t[n - 2], t[n - 1], a[n - 3], a[n - 2], a[n - 1]);

    for (double& x : v)
        x = std::abs(x) / (2.0 * std::numbers::pi);
    return VelocityTrace(trace.times, std::move(v));
}

/// Time of the last sample at which the angle was still advancing.
inline double motion_stop_time(const AngleTrace& trace) {
    for (std::size_t i = trace.size(); i-- > 1;)
        if (trace.angles[i] > trace.angles[i - 1])
            return trace.times[i];
    return trace.times.front();
}

// ---------------------------------------------------------------------------
// Built-in presets.
//
// The published behaviour pins only (peak velocity, run length): 0.96 Hz over
// ~20 s for the printed spring unit, 0.55 Hz over ~80 s for the elastic-band
// unit. The mechanical constants below were produced by
// tools/calibrate_presets.cpp (alternating bisection against this same
// integrator) and frozen here.
//
//   "3dp"  - stiff short-wind spring spins the load up in ~0.15 s, after
//            which Coulomb friction alone decelerates it linearly.
//   "lego" - softly wound band stays engaged for the whole run; viscous drag
//            dominates, giving a bowed decay, and 20% torque jitter adds the
//            uneven wobble.
// ---------------------------------------------------------------------------

inline std::vector<SimPreset> builtin_presets() {
    SimPreset printed;
    printed.name = "3dp";
    printed.model.inertia = 0.02;
    printed.model.spring_constant = 2.0421199883252656;
    printed.model.wound_angle = 0.6;
    printed.model.viscous_drag = 0.0;
    printed.model.coulomb_friction = 0.0062361383011610809;
    printed.model.jitter_amplitude = 0.0;
    printed.model.jitter_period = 1.0;
    printed.duration = 20.0;
    printed.fps = 20.0;

    SimPreset lego;
    lego.name = "lego";
    lego.model.inertia = 0.3;
    lego.model.spring_constant = 0.0085087364139046009;
    lego.model.wound_angle = 328.89677719909639;
    lego.model.viscous_drag = 0.497;
    lego.model.coulomb_friction = 1.5;
    lego.model.jitter_amplitude = 0.2;
    lego.model.jitter_period = 20.0;
    lego.duration = 80.0;
    lego.fps = 20.0;

    return {printed, lego};
}

inline const SimPreset& find_preset(const std::vector<SimPreset>& presets, const std::string& name) {
    for (const auto& p : presets)
        if (p.name == name)
            return p;
    std::string known;
    for (const auto& p : presets)
        known += (known.empty() ? "" : ", ") + p.name;
    throw value_error("unknown preset '" + name + "' (valid: " + known + ")");
}

inline nlohmann::ordered_json preset_to_json(const SimPreset& p) {
    return nlohmann::ordered_json{
        {"name", p.name},
        {"model",
         {{"inertia_kg_m2", p.model.inertia},
          {"spring_constant_nm_per_rad", p.model.spring_constant},
          {"wound_angle_rad", p.model.wound_angle},
          {"viscous_drag_nms_per_rad", p.model.viscous_drag},
          {"coulomb_friction_nm", p.model.coulomb_friction},
          {"jitter_amplitude", p.model.jitter_amplitude},
          {"jitter_period_s", p.model.jitter_period}}},
        {"duration_s", p.duration},
        {"fps", p.fps}};
}

} // namespace spinquant
