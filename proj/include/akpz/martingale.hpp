#pragma once

#include "akpz/dynamics.hpp"

namespace akpz {

// M_t(F) and its quadratic variation recomputed from a snapshot record
// (snapshots at every integrator node). Matches the accumulation done
// inside run() for the same functional.
MartingalePath forward_residual(const CylinderFunctional& f, const TrajectoryRecord& record,
                                const SimConfig& cfg);

// Backward-martingale residual along the reversed path u(T - t): the Dynkin
// residual of F for the time-reversed Markov process, whose generator is
// L0 - A. Indexed by reversed time, series[j] = M_hat at t = j dt.
std::vector<double> backward_residual(const CylinderFunctional& f, const TrajectoryRecord& record,
                                      const SimConfig& cfg);

// Max over nodes of | 2 int_0^t L0 F ds  - ( -M_t + Mhat_{T-t} - Mhat_T ) |.
// With every integral on the same trapezoidal nodes the combination is an
// algebraic identity, so this measures bookkeeping only.
double forward_backward_identity_error(const CylinderFunctional& f, const TrajectoryRecord& record,
                                       const SimConfig& cfg);

// Residual martingale for the time-weighted functional F(t, x) =
// e^{a (T - t)} F~(x): the variant entering the exponentially-weighted
// energy estimates. Its quadratic variation accumulates
// nu e^{2a(T-s)} E^N(F~)(u_s) ds, so for first-chaos F~ the terminal value
// has variance nu ||phi||^2_{1,2} (e^{2aT} - 1) / (2a).
MartingalePath weighted_forward_residual(const CylinderFunctional& f, double a,
                                         const TrajectoryRecord& record, const SimConfig& cfg);

}  // namespace akpz
