// Calibrates the built-in mechanism presets and prints the constants that
// are frozen in include/spinquant/mechsim.hpp.
//
// Targets:
//   3dp  - peak velocity 0.96 Hz, motion stops at ~19.5 s within a 20 s run.
//          Structure: stiff short-wind spring (impulse start), no viscous
//          drag, Coulomb friction only -> linear deceleration.
//          Bisect spring_constant for the peak, coulomb_friction for the
//          stop time.
//   lego - peak velocity 0.55 Hz (including torque-jitter wobble), motion
//          stops at ~78 s within an 80 s run. Structure: softly wound band
//          engaged for the whole run, viscous-dominated decay plus 20%
//          sinusoidal torque jitter. Bisect spring_constant for the peak,
//          viscous_drag for the stop time (coulomb_friction tied to drag so
//          the stop threshold scales along).
//
// Both bisections alternate until the pair of targets settles.

#include <cstdio>

#include "spinquant/mechsim.hpp"

using namespace spinquant;

namespace {

struct Outcome {
    double peak_hz;
    double stop_s;
};

Outcome evaluate(const MechanicalModel& m, double duration) {
    const AngleTrace trace = simulate_release(m, duration, 1e-3);
    const VelocityTrace vel = derivative_trace(trace);
    return {vel.max_velocity(), motion_stop_time(trace)};
}

// Bisect a monotone-increasing scalar property of the model.
template <typename Setter, typename Getter>
double bisect(MechanicalModel m, double duration, double lo, double hi, double target,
              Setter set, Getter get, int iters = 48) {
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        set(m, mid);
        if (get(evaluate(m, duration)) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

int main() {
    // ---- 3dp ----
    MechanicalModel printed;
    printed.inertia = 0.02;
    printed.wound_angle = 0.6;
    printed.viscous_drag = 0.0;
    printed.jitter_amplitude = 0.0;
    printed.spring_constant = 2.0;
    printed.coulomb_friction = 0.006;

    for (int round = 0; round < 5; ++round) {
        printed.spring_constant = bisect(
            printed, 22.0, 0.5, 8.0, 0.96,
            [](MechanicalModel& m, double v) { m.spring_constant = v; },
            [](const Outcome& o) { return o.peak_hz; });
        // stop time decreases as friction grows -> bisect on -stop
        printed.coulomb_friction = bisect(
            printed, 25.0, 0.002, 0.02, -19.5,
            [](MechanicalModel& m, double v) { m.coulomb_friction = v; },
            [](const Outcome& o) { return -o.stop_s; });
    }
    const Outcome printed_out = evaluate(printed, 22.0);
    std::printf("3dp:  spring_constant = %.17g\n", printed.spring_constant);
    std::printf("      coulomb_friction = %.17g\n", printed.coulomb_friction);
    std::printf("      -> peak %.4f Hz, stop %.2f s\n\n", printed_out.peak_hz, printed_out.stop_s);

    // ---- lego ----
    // The band stays engaged all run, so quasi-statics give
    //   v(t) ~ v_p exp(-t (spring/drag)),  wobble 0.2*(v + c),
    //   c = coulomb/(2 pi drag), stop when a jitter trough dips to zero
    // (first trough with v <= 0.25 c). Drag fixes the stop velocity, the
    // spring constant the decay rate, and the wound angle the peak; seed at
    // the analytic point and refine numerically. Because stops only land on
    // jitter troughs (t = 20(k + 3/4)), the stop time is a staircase in the
    // wound angle: bisect to the 75 s / 95 s tread edge, then back off onto
    // the 75 s tread.
    MechanicalModel lego;
    lego.inertia = 0.3;
    lego.jitter_amplitude = 0.2;
    lego.jitter_period = 20.0;
    lego.coulomb_friction = 1.5;
    lego.viscous_drag = 0.497;
    lego.spring_constant = 0.0076;
    lego.wound_angle = 365.0;

    const auto bisect_lego_peak = [&] {
        lego.spring_constant = bisect(
            lego, 100.0, 0.004, 0.012, 0.55,
            [](MechanicalModel& m, double v) { m.spring_constant = v; },
            [](const Outcome& o) { return o.peak_hz; });
    };
    for (int round = 0; round < 3; ++round) {
        bisect_lego_peak();
        double phi_edge = bisect(
            lego, 110.0, 250.0, 500.0, 80.0,
            [](MechanicalModel& m, double v) { m.wound_angle = v; },
            [](const Outcome& o) { return o.stop_s; });
        lego.wound_angle = phi_edge * 0.97; // mid-tread, stop near 75 s
    }
    bisect_lego_peak();
    const Outcome lego_out = evaluate(lego, 110.0);
    std::printf("lego: wound_angle = %.17g\n", lego.wound_angle);
    std::printf("lego: spring_constant = %.17g\n", lego.spring_constant);
    std::printf("      viscous_drag = %.17g\n", lego.viscous_drag);
    std::printf("      coulomb_friction = %.17g\n", lego.coulomb_friction);
    std::printf("      -> peak %.4f Hz, stop %.2f s\n", lego_out.peak_hz, lego_out.stop_s);
    return 0;
}
