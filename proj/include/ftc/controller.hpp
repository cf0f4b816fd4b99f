#pragma once
// Nominal tracking-controller synthesis for the two-input/two-output
// vapor-compression loop: augments a labeled plant linearization with
// performance weights, solves the resulting H-infinity problem, and
// returns the controller together with its left coprime factors.

#include <ftc/coprime.hpp>
#include <ftc/hinf.hpp>
#include <ftc/state_space.hpp>

namespace ftc::ctrl {

// Shaping weights for the synthesis plant.  The tracking-error weight is
// the near-integrator W_e(s) = k_e (s + omega_i) / (s + 1e-4 omega_i) on
// both error channels; effort and output weights are constant.
struct PerformanceWeights {
    double k_e = 1.0;      // error-weight gain
    double omega_i = 0.1;  // rad/s; error weight is ~integral below this
    double w_u_n = 1e-3;   // effort weight on compressor-speed command
    double w_u_a = 1e-2;   // effort weight on valve-opening command
    double w_y = 1e-2;     // weight on the raw measured outputs
    double d_scale = 1.0;  // scaling of the air-mass-flow disturbance channel
    double r_scale = 1.0;  // scaling of the two reference channels
    double n_scale = 1.0;  // scaling of the two measurement-noise channels
};

// 2x2 realization of the tracking-error weight W_e(s).
ss::StateSpace error_weight(const PerformanceWeights& w);

// Builds the synthesis plant around a linearization labeled with input
// groups "u" (2) and "d" (>=1, first channel = evaporator air mass flow)
// and a 2-channel output group.  Exogenous inputs are
// [air-flow disturbance, p_e reference, SH reference, noise_1, noise_2];
// performance outputs stack the weighted measured tracking error, the
// weighted actuator commands, and the weighted raw outputs; the
// controller measurement is the noisy tracking error e = r - y - n.
ss::GeneralizedPlant build_augmented_plant(const ss::StateSpace& p_lin,
                                           const PerformanceWeights& w);

struct NominalController {
    ss::StateSpace K;              // maps the 2-channel error to [N_cmd, alpha]
    ss::ControllerFactors factors; // left factors: U - V K = 0
    double gamma = 0.0;            // achieved closed-loop norm bound
};

// Synthesizes the nominal controller for one operating point and factors it.
NominalController synth_nominal(const ss::StateSpace& p_lin, const PerformanceWeights& w,
                                const ss::HinfOptions& opt = {});

}  // namespace ftc::ctrl
