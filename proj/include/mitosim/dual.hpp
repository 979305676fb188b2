#pragma once

#include <memory>

#include "mitosim/grid.hpp"
#include "mitosim/rates.hpp"

namespace mitosim {

/// Stepper for the backward observable equation along the exponential flow.
///
/// The carried unknown is the conservative rescaling h = e^{-t} M_t f / x
/// rather than M_t f itself. In that variable the one-cell step is a convex
/// combination: survive-and-transport with weight e^{-H} plus divide with
/// weight 1 - e^{-H}, H the exact cumulative hazard across the step. The
/// constant function is an exact fixed point, so the principal eigenfunction
/// identity M_t(x) = e^t x holds to Picard tolerance and rounding, and
/// nonnegative data stay nonnegative.
///
/// The time step equals log(2)/m so that both the transport (one cell right)
/// and the halving in the division term (m cells down) are exact index
/// shifts. Division times within a step are placed by their first two
/// moments under the exact survival density; the observable along the
/// in-step characteristic is interpolated through the three available
/// diagonal samples with a monotone limiter. Nodes whose per-step hazard
/// exceeds 1/2 are handled with a composite product rule (the hazard weights
/// stay exact, so stiffness never destabilizes the sweep).
struct DualOptions {
    double picard_tol = 1e-10;
    int max_picard_iterations = 50;
    double stiff_hazard_threshold = 0.5;
    int max_stiff_pieces = 64;
};

class DualEvolution {
public:
    using Options = DualOptions;

    /// f0 is the Markov observable h(0) = f/x sampled on the grid.
    DualEvolution(DivisionRate rate, GridFunction markov_f0, Options opts = {});

    double time() const { return t_; }
    double step_size() const { return delta_; }
    const DivisionRate& rate() const { return rate_; }

    /// Current h = P_t f on its surviving window.
    GridFunction markov_state() const;
    /// Current M_t(x*f)/... i.e. the dual state e^t * x * h.
    GridFunction dual_state() const;

    /// One full step of size log(2)/m. Throws numerical_error when the
    /// window is exhausted or Picard stalls.
    void advance_one_step();
    /// Advance by an arbitrary nonnegative duration (full steps plus at most
    /// one interpolated partial step).
    void advance(double dt);

    int last_picard_iterations() const { return last_iters_; }
    double last_picard_change() const { return last_change_; }
    /// Picard coupling factor of the last step, max over nodes of the
    /// division weight times the unknown-level placement weight.
    double last_contraction_factor() const { return last_coupling_; }

    std::size_t window_lo() const { return lo_; }
    std::size_t window_hi() const { return hi_; }

private:
    struct PlanCache;

    void step_impl(double dt);

    DivisionRate rate_;
    LogGrid grid_;
    Options opts_;
    double delta_;
    double t_ = 0.0;
    std::size_t lo_ = 0, hi_ = 0;
    std::vector<double> h_;      // level t
    std::vector<double> h_prev_; // level t - delta (for the in-step diagonal)
    bool have_prev_ = false;
    int last_iters_ = 0;
    double last_change_ = 0.0;
    double last_coupling_ = 0.0;
    std::shared_ptr<PlanCache> plan_cache_; // full-step weights, reused across steps
};

/// A f = x f'(x) + B(x) (2 f(x/2) - f(x)), the generator of the dual
/// semigroup. x f' is computed as df/d(log x) with 4th-order centered
/// differences; f(x/2) is the exact index shift. The output window loses the
/// stencil width on the right and one octave on the left.
GridFunction apply_generator(const GridFunction& f, const DivisionRate& rate);

/// P_t f: the conservative (Markov) rescaling of the dual semigroup applied
/// to the observable f.
GridFunction evolve_markov(const GridFunction& f, const DivisionRate& rate, double t,
                           DualEvolution::Options opts = {});

/// M_t f on the surviving window.
GridFunction evolve_dual(const GridFunction& f, const DivisionRate& rate, double t,
                         DualEvolution::Options opts = {});

/// Recovers P_t f = evolved / (e^t x) from evolved = M_t(x f).
GridFunction rescale_markov(const GridFunction& f, double t, const GridFunction& evolved);

} // namespace mitosim
