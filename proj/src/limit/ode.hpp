#pragma once

#include <span>
#include <vector>

#include "core/model.hpp"
#include "core/timegrid.hpp"

namespace mfmdp {

struct LimitTrajectory {
    TimeGrid grid;
    std::vector<std::vector<double>> states;  // fractions per node
    double max_projection = 0.0;              // largest single-step clip applied

    const std::vector<double>& at(std::size_t node) const { return states[node]; }
};

// Drift of the population fractions under relaxed control alpha:
// f_j = sum_i mu(i) sum_a q({j}|i,a,mu) alpha^i(a). Row sums of the generator
// vanish, so sum_j f_j = 0 up to rounding.
std::vector<double> limit_rhs(const ModelSpec& model, std::span<const double> mu,
                              const ControlVector& alpha);
void limit_rhs_into(const ModelSpec& model, std::span<const double> mu,
                    const ControlVector& alpha, std::span<double> out,
                    std::span<double> row_scratch);

// Fixed-step RK4 over the grid; the control must be constant within each grid
// segment (its breakpoints must be grid nodes). Each step clips tiny negative
// components and renormalizes; a clip beyond 1e-6 aborts.
LimitTrajectory integrate_limit(const ModelSpec& model, std::span<const double> mu0,
                                const RelaxedControlPath& control, const TimeGrid& grid);

// Discounted objective of the deterministic flow: Simpson quadrature of
// e^(-beta t) r(mu_t, alpha_t) per control segment plus the discounted
// terminal reward on finite horizons.
double objective_F(const ModelSpec& model, std::span<const double> mu0,
                   const RelaxedControlPath& control, const TimeGrid& grid);
double objective_F(const ModelSpec& model, const RelaxedControlPath& control, const TimeGrid& grid,
                   const LimitTrajectory& traj);

// Horizon the deterministic problem is solved on: the model horizon when
// finite, otherwise the discounted truncation 30/beta.
double planning_horizon(const ModelSpec& model);

// Grid matched to the planning horizon and a control's breakpoints, with the
// default step T/2000.
TimeGrid default_grid(const ModelSpec& model, const RelaxedControlPath& control,
                      double target_step = 0.0);

// Throws InvalidParameter unless every interior control breakpoint sits on a
// grid node (within 1e-9 relative tolerance).
void require_breakpoints_on_grid(const RelaxedControlPath& control, const TimeGrid& grid);

}  // namespace mfmdp
