#include "mitosim/dual.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "mitosim/errors.hpp"

namespace mitosim {

namespace {

struct NodeStepPlan {
    double survive = 1.0;  // e^{-H(dt)}
    double divide = 0.0;   // 1 - e^{-H(dt)}
    double m1 = 0.5;       // first moment of tau/dt under the division density
    double m2 = 1.0 / 3.0; // second moment
    bool stiff = false;
    std::vector<std::pair<double, double>> pieces; // (hazard weight, tau mid) when stiff
};

NodeStepPlan make_plan(const DivisionRate& rate, double x, double dt, double stiff_threshold,
                       int max_pieces) {
    NodeStepPlan p;
    const double H = rate.cumulative_hazard(x, dt);
    if (H <= 0.0) return p;
    p.survive = std::exp(-H);
    p.divide = -std::expm1(-H);
    if (H > stiff_threshold) {
        p.stiff = true;
        const int pieces = std::min(static_cast<int>(std::ceil(H / stiff_threshold)), max_pieces);
        double prev_surv = 1.0;
        p.pieces.reserve(pieces);
        for (int k = 1; k <= pieces; ++k) {
            const double tau_b = dt * k / pieces;
            const double surv_b = std::exp(-rate.cumulative_hazard(x, tau_b));
            const double wgt = prev_surv - surv_b;
            prev_surv = surv_b;
            if (wgt > 0.0) p.pieces.emplace_back(wgt, dt * (k - 0.5) / pieces);
        }
        return p;
    }
    // Simpson for I0 = int e^{-H(tau)} dtau and I1 = int tau e^{-H} dtau;
    // integration by parts turns them into the division-time moments.
    const double eF = p.survive;
    const double eH = std::exp(-rate.cumulative_hazard(x, 0.5 * dt));
    const double I0 = dt / 6.0 * (1.0 + 4.0 * eH + eF);
    const double I1 = dt * dt / 6.0 * (2.0 * eH + eF);
    double m1 = (I0 - dt * eF) / (dt * p.divide);
    double m2 = (2.0 * I1 - dt * dt * eF) / (dt * dt * p.divide);
    m1 = std::clamp(m1, 0.0, 1.0);
    m2 = std::clamp(m2, m1 * m1, m1);
    p.m1 = m1;
    p.m2 = m2;
    return p;
}

} // namespace

struct DualEvolution::PlanCache {
    bool filled = false;
    std::vector<NodeStepPlan> plans;
};

DualEvolution::DualEvolution(DivisionRate rate, GridFunction markov_f0, Options opts)
    : rate_(std::move(rate)), grid_(markov_f0.grid()), opts_(opts),
      plan_cache_(std::make_shared<PlanCache>()) {
    delta_ = std::log(2.0) / grid_.points_per_octave();
    lo_ = markov_f0.window().lo;
    hi_ = markov_f0.window().hi;
    h_ = markov_f0.values();
    h_prev_ = h_;
}

GridFunction DualEvolution::markov_state() const {
    return GridFunction(grid_, h_, IndexWindow{lo_, hi_});
}

GridFunction DualEvolution::dual_state() const {
    std::vector<double> v(h_.size(), 0.0);
    const double scale = std::exp(t_);
    for (std::size_t j = lo_; j <= hi_; ++j) v[j] = scale * grid_.node(j) * h_[j];
    return GridFunction(grid_, std::move(v), IndexWindow{lo_, hi_});
}

void DualEvolution::advance_one_step() { step_impl(delta_); }

void DualEvolution::advance(double dt) {
    if (dt < 0.0) throw std::domain_error("cannot evolve backward in time");
    const double target = t_ + dt;
    while (target - t_ > delta_ * (1.0 + 1e-12)) step_impl(delta_);
    const double rest = target - t_;
    if (rest > 1e-14 * std::max(1.0, std::abs(target))) step_impl(rest);
    t_ = target;
}

void DualEvolution::step_impl(double dt) {
    if (hi_ <= lo_) {
        std::ostringstream os;
        os << "window exhausted at t = " << t_ << " (grid supports no further steps)";
        throw numerical_error(os.str());
    }
    const std::size_t m = static_cast<std::size_t>(grid_.points_per_octave());
    const bool full_step = std::abs(dt - delta_) <= 1e-12 * delta_;
    const double frac = dt / delta_;
    const std::size_t new_hi = hi_ - 1;
    const IndexWindow old_w{lo_, hi_};
    const IndexWindow prev_w{lo_, std::min(hi_ + 1, grid_.size() - 1)};
    const IndexWindow new_w{lo_, new_hi};

    // plans depend only on node position and dt; full-step plans are reused
    std::vector<NodeStepPlan> partial_plans;
    if (full_step) {
        if (!plan_cache_->filled) {
            plan_cache_->plans.resize(grid_.size());
            for (std::size_t j = 0; j < grid_.size(); ++j)
                plan_cache_->plans[j] = make_plan(rate_, grid_.node(j), dt,
                                                  opts_.stiff_hazard_threshold,
                                                  opts_.max_stiff_pieces);
            plan_cache_->filled = true;
        }
    } else {
        partial_plans.resize(grid_.size());
        for (std::size_t j = 0; j < grid_.size(); ++j)
            partial_plans[j] = make_plan(rate_, grid_.node(j), dt, opts_.stiff_hazard_threshold,
                                         opts_.max_stiff_pieces);
    }
    const auto& P = full_step ? plan_cache_->plans : partial_plans;

    double coupling = 0.0;
    for (std::size_t j = lo_; j <= new_hi; ++j)
        coupling = std::max(coupling, P[j].divide * (1.0 - P[j].m1));
    last_coupling_ = coupling;

    // transported-only initial iterate
    std::vector<double> h_new(h_.size(), 0.0);
    std::vector<double> transported(h_.size(), 0.0);
    for (std::size_t j = lo_; j <= new_hi; ++j) {
        const double src = full_step
                               ? h_[j + 1]
                               : interpolate_at_index(h_, old_w, static_cast<double>(j) + frac);
        transported[j] = P[j].survive * src;
        h_new[j] = transported[j];
    }

    auto clamp_idx = [](double u, const IndexWindow& iw) {
        return std::clamp(u, static_cast<double>(iw.lo), static_cast<double>(iw.hi));
    };

    auto diagonal_value = [&](std::size_t j, const std::vector<double>& cur) -> double {
        const NodeStepPlan& w = P[j];
        const double jm = static_cast<double>(j) - static_cast<double>(m);
        const double v0 = cur[static_cast<std::size_t>(clamp_idx(jm, new_w))];
        const double v1 = full_step
                              ? h_[static_cast<std::size_t>(clamp_idx(jm + 1.0, old_w))]
                              : interpolate_at_index(h_, old_w, clamp_idx(jm + frac, old_w));
        if (!full_step || !have_prev_) return (1.0 - w.m1) * v0 + w.m1 * v1;
        const double v2 = h_prev_[static_cast<std::size_t>(clamp_idx(jm + 2.0, prev_w))];
        const double q0 = 0.5 * (w.m2 - 3.0 * w.m1 + 2.0);
        const double q1 = 2.0 * w.m1 - w.m2;
        const double q2 = 0.5 * (w.m2 - w.m1);
        const double v = q0 * v0 + q1 * v1 + q2 * v2;
        // convex-envelope limiter: keeps nonnegative data nonnegative
        return std::clamp(v, std::min({v0, v1, v2}), std::max({v0, v1, v2}));
    };

    auto stiff_value = [&](std::size_t j, const std::vector<double>& cur) -> double {
        const double jm = static_cast<double>(j) - static_cast<double>(m);
        double acc = 0.0;
        for (const auto& [wgt, tau_mid] : P[j].pieces) {
            const double a_new = 1.0 - tau_mid / dt;
            const double u = jm + tau_mid / delta_;
            const double val =
                a_new * interpolate_at_index(cur, new_w, clamp_idx(u, new_w)) +
                (1.0 - a_new) * interpolate_at_index(h_, old_w, clamp_idx(u, old_w));
            acc += wgt * val;
        }
        return acc;
    };

    // Picard sweeps; left-to-right order resolves the one-octave-down
    // coupling immediately, the following sweep certifies the fixed point.
    int iters = 0;
    double change = 0.0;
    for (iters = 1; iters <= opts_.max_picard_iterations; ++iters) {
        change = 0.0;
        for (std::size_t j = lo_; j <= new_hi; ++j) {
            const NodeStepPlan& w = P[j];
            if (w.divide == 0.0) continue;
            const double val = w.stiff ? transported[j] + stiff_value(j, h_new)
                                       : transported[j] + w.divide * diagonal_value(j, h_new);
            change = std::max(change, std::abs(val - h_new[j]));
            h_new[j] = val;
        }
        if (change < opts_.picard_tol) break;
    }
    if (change >= opts_.picard_tol)
        throw numerical_error("Picard iteration did not converge within the iteration cap");
    last_iters_ = iters;
    last_change_ = change;

    h_prev_ = std::move(h_);
    have_prev_ = full_step;
    h_ = std::move(h_new);
    hi_ = new_hi;
    t_ += dt;
}

GridFunction apply_generator(const GridFunction& f, const DivisionRate& rate) {
    const LogGrid& grid = f.grid();
    const std::size_t m = static_cast<std::size_t>(grid.points_per_octave());
    const auto& w = f.window();
    if (w.lo + m > w.hi || w.count() < 5)
        throw window_error("window too narrow for the generator stencil");
    const IndexWindow nw{w.lo + m, w.hi - 2};
    if (nw.lo > nw.hi) throw window_error("window too narrow for the generator stencil");
    const double h = grid.step();
    std::vector<double> out(grid.size(), 0.0);
    const auto& v = f.values();
    for (std::size_t j = nw.lo; j <= nw.hi; ++j) {
        const double d = (-v[j + 2] + 8.0 * v[j + 1] - 8.0 * v[j - 1] + v[j - 2]) / (12.0 * h);
        const double x = grid.node(j);
        out[j] = d + rate.evaluate(x) * (2.0 * v[j - m] - v[j]);
    }
    return GridFunction(grid, std::move(out), nw);
}

GridFunction evolve_markov(const GridFunction& f, const DivisionRate& rate, double t,
                           DualEvolution::Options opts) {
    const double delta = std::log(2.0) / f.grid().points_per_octave();
    const double needed = t / delta;
    const double available = static_cast<double>(f.window().hi - f.window().lo);
    if (needed > available + 1e-9) {
        std::ostringstream os;
        os << "grid window supports evolution only up to t = " << available * delta
           << ", requested t = " << t;
        throw numerical_error(os.str());
    }
    DualEvolution evo(rate, f, opts);
    evo.advance(t);
    return evo.markov_state();
}

GridFunction evolve_dual(const GridFunction& f, const DivisionRate& rate, double t,
                         DualEvolution::Options opts) {
    std::vector<double> h0(f.grid().size(), 0.0);
    for (std::size_t j = f.window().lo; j <= f.window().hi; ++j)
        h0[j] = f.value_at(j) / f.grid().node(j);
    GridFunction g(f.grid(), std::move(h0), f.window());
    GridFunction ht = evolve_markov(g, rate, t, opts);
    std::vector<double> out(f.grid().size(), 0.0);
    const double scale = std::exp(t);
    for (std::size_t j = ht.window().lo; j <= ht.window().hi; ++j)
        out[j] = scale * f.grid().node(j) * ht.value_at(j);
    return GridFunction(f.grid(), std::move(out), ht.window());
}

GridFunction rescale_markov(const GridFunction& /*f*/, double t, const GridFunction& evolved) {
    std::vector<double> out(evolved.grid().size(), 0.0);
    const double scale = std::exp(-t);
    for (std::size_t j = evolved.window().lo; j <= evolved.window().hi; ++j)
        out[j] = scale * evolved.value_at(j) / evolved.grid().node(j);
    return GridFunction(evolved.grid(), std::move(out), evolved.window());
}

} // namespace mitosim
