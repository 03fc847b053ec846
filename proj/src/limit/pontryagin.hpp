#pragma once

#include <vector>

#include "core/model.hpp"
#include "core/timegrid.hpp"
#include "limit/ode.hpp"

namespace mfmdp {

// First-order optimality machinery for the two-state repair model. The model
// reduces to a scalar state (the working fraction) with the mean repair action
// entering affinely, so the costate is scalar and the Hamiltonian maximization
// is an endpoint comparison.

struct Adjoint {
    std::vector<double> times;    // grid nodes, ascending
    std::vector<double> p;        // costate of the working fraction
    std::vector<double> working;  // working fraction from the paired backward pass
};

// Integrates the costate equation backward from p(T) = 0 with RK4, pairing it
// with the working-fraction dynamics so stage values stay consistent. The
// model must be the two-state repair model; the control's breakpoints must be
// grid nodes.
Adjoint adjoint_integrate(const ModelSpec& model, const RelaxedControlPath& control,
                          const TimeGrid& grid);

struct PontryaginResidual {
    std::vector<double> times;
    std::vector<double> values;  // max_a H - H(applied), per node
    double max_residual = 0.0;

    // Largest residual on nodes farther than `window` from every listed time.
    double max_excluding(const std::vector<double>& switch_times, double window) const;
};

// Pointwise Hamiltonian gap of an applied control along its own trajectory.
// Zero on a node exactly when the applied action maximizes the Hamiltonian
// there; an optimal control keeps the gap at numerical noise away from its
// switching instants.
PontryaginResidual pontryagin_residual(const ModelSpec& model, const RelaxedControlPath& control,
                                       const LimitTrajectory& trajectory, const Adjoint& adjoint);

}  // namespace mfmdp
