#include "mitosim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mitosim/errors.hpp"
#include "mitosim/logspace.hpp"

namespace mitosim {

double lattice_omega() { return 2.0 * M_PI / std::log(2.0); }

std::complex<double> lambda_k(int k) { return {1.0, k * lattice_omega()}; }

std::complex<double> phi_k(int k, double x) {
    const double phase = k * lattice_omega() * std::log(x);
    return {x * std::cos(phase), x * std::sin(phase)};
}

namespace {

// phi1(z) = (1 - e^-z)/z and phi2(z) = (1 - e^-z - z e^-z)/z^2, the
// product-integration weights of a linear source under an exponential
// survival kernel; series near zero, asymptotic-safe for huge z.
double phi1n(double z) {
    if (z < 1e-6) return 1.0 - 0.5 * z + z * z / 6.0;
    return -std::expm1(-z) / z;
}

double phi2n(double z) {
    if (z < 1e-4) return 0.5 - z / 3.0 + z * z / 8.0;
    return (-std::expm1(-z) - z * std::exp(-z)) / (z * z);
}

// Leftward sweep for log(xU) on a fine grid: exact hazard integrating
// factor per cell, linear product rule for the advanced-argument source.
std::vector<double> sweep_log_xU(const DivisionRate& rate, double x_min, int octaves, int m_fine) {
    const LogGrid g(x_min, octaves, m_fine);
    const std::size_t n = g.size();
    const double h = g.step();
    std::vector<double> logW(n, neg_inf);
    logW[n - 1] = 0.0; // seed amplitude is arbitrary (linear problem)

    auto log_source = [&](std::size_t j) -> double {
        // G = 2 B(2x) W(2x)
        if (j + m_fine >= n) return neg_inf;
        const double twox = 2.0 * g.node(j);
        const double B2 = rate.evaluate(twox);
        if (B2 <= 0.0 || logW[j + m_fine] == neg_inf) return neg_inf;
        return std::log(2.0 * B2) + logW[j + m_fine];
    };

    for (std::size_t jj = n - 1; jj-- > 0;) {
        const std::size_t j = jj;
        const double x = g.node(j);
        const double z = rate.cumulative_hazard(x, h) + h; // int (B + 1) over the cell
        const double lg0 = log_source(j);
        const double lg1 = log_source(j + 1);
        const double w1 = phi1n(z) - phi2n(z);
        const double w0 = phi2n(z);
        double logI = neg_inf;
        if (lg1 != neg_inf) logI = lg1 + std::log(h * w1);
        if (lg0 != neg_inf) logI = log_add_exp(logI, lg0 + std::log(h * w0));
        const double term1 = z + logW[j + 1];
        if (logI == neg_inf) {
            logW[j] = term1;
            continue;
        }
        const double term2 = z + logI;
        const double v = log_sub_exp(term1, term2);
        // complete cancellation marks the doubly-fast decaying small-size
        // tail; floor it well below anything that can matter
        logW[j] = (v == neg_inf || v < logW[j + 1] - 50.0) ? logW[j + 1] - 50.0 : v;
    }
    return logW;
}

// normalization constant: log of the integral of x U dx = int e^{s} W ds
double log_mass(const LogGrid& g, const std::vector<double>& logW) {
    double M = neg_inf;
    for (std::size_t j = 0; j < logW.size(); ++j)
        M = std::max(M, logW[j] + g.log_node(j));
    double acc = 0.0;
    for (std::size_t j = 0; j < logW.size(); ++j) {
        const double q = logW[j] + g.log_node(j) - M;
        double w = (j == 0 || j + 1 == logW.size()) ? 0.5 : 1.0;
        acc += w * std::exp(q);
    }
    return M + std::log(acc * g.step());
}

// Richardson-extrapolated, normalized log(xU) on the m_fine grid.
std::vector<double> normalized_log_xU(const DivisionRate& rate, double x_min, int octaves,
                                      int m_fine) {
    std::vector<double> coarse = sweep_log_xU(rate, x_min, octaves, m_fine);
    std::vector<double> fine = sweep_log_xU(rate, x_min, octaves, 2 * m_fine);
    const LogGrid g(x_min, octaves, m_fine);
    std::vector<double> out(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double lf = fine[2 * j], lc = coarse[j];
        out[j] = (lf == neg_inf || lc == neg_inf) ? lf : (4.0 * lf - lc) / 3.0;
    }
    const double lm = log_mass(g, out);
    for (double& v : out) v -= lm;
    return out;
}

} // namespace

PerronSolution compute_perron(const DivisionRate& rate, const LogGrid& grid,
                              const PerronOptions& opts) {
    if (opts.check_assumptions) {
        const LogGrid probe(std::ldexp(1.0, -16), 32, 4); // spans beyond [1e-4, 1e4]
        const AssumptionReport rep = audit_assumptions(rate, probe);
        if (!rep.hyp_growth_pass)
            throw certification_error(
                "rate fails the growth-envelope assumptions; no stationary profile:\n" +
                rep.summary());
    }
    const int m = grid.points_per_octave();
    int m_fine = m;
    while (m_fine < opts.min_fine_points_per_octave) m_fine *= 2;
    const int stride = m_fine / m;

    std::vector<double> log_xU =
        normalized_log_xU(rate, grid.x_min(), grid.octaves(), m_fine);
    const LogGrid fine_grid(grid.x_min(), grid.octaves(), m_fine);

    // restrict to the requested grid; far-tail values may underflow to zero
    std::vector<double> Uv(grid.size(), 0.0);
    for (std::size_t j = 0; j < grid.size(); ++j)
        Uv[j] = std::exp(log_xU[j * stride] - grid.log_node(j));
    GridFunction U(grid, std::move(Uv), IndexWindow{0, grid.size() - 1});

    // mass check on the requested grid
    const double mass = integrate(U, [](double x) { return x; }).value;

    // residual of the stationary equation, scaled by (1 + B) U
    double Umax = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j)
        Umax = std::max(Umax, U.value_at(j) * 0.0 + U.values()[j]);
    double resid = 0.0;
    const double h = grid.step();
    const std::size_t mm = static_cast<std::size_t>(m);
    std::vector<double> W(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) W[j] = grid.node(j) * U.values()[j];
    for (std::size_t j = 2; j + std::max<std::size_t>(mm, 2) < grid.size(); ++j) {
        const double Uj = U.values()[j];
        if (Uj < 1e-10 * Umax) continue;
        const double x = grid.node(j);
        const double dW = (-W[j + 2] + 8.0 * W[j + 1] - 8.0 * W[j - 1] + W[j - 2]) / (12.0 * h);
        const double B = rate.evaluate(x);
        const double U2x = U.values()[j + mm];
        const double R = dW / x + (B + 1.0) * Uj - 4.0 * rate.evaluate(2.0 * x) * U2x;
        resid = std::max(resid, std::abs(R) / ((1.0 + B) * std::max(Uj, 1e-8 * Umax)));
    }

    // observed tail exponents d log U / d log x near the window ends
    auto tail_slope = [&](bool at_zero) {
        const double lu_threshold = std::log(1e-280);
        std::vector<double> lu(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j)
            lu[j] = log_xU[j * stride] - grid.log_node(j);
        if (at_zero) {
            for (std::size_t j = 0; j + mm < grid.size(); ++j)
                if (lu[j] > lu_threshold)
                    return (lu[j + mm] - lu[j]) / std::log(2.0);
        } else {
            for (std::size_t j = grid.size() - 1; j >= mm; --j)
                if (lu[j] > lu_threshold)
                    return (lu[j] - lu[j - mm]) / std::log(2.0);
        }
        return 0.0;
    };
    const double tz = tail_slope(true);
    const double ti = tail_slope(false);

    // sensitivity to the top-end cutoff: one extra octave, same resolution
    std::vector<double> log_xU_wide =
        normalized_log_xU(rate, grid.x_min(), grid.octaves() + 1, m_fine);
    double sens = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double a = log_xU[j * stride], b = log_xU_wide[j * stride];
        if (a - grid.log_node(j) < std::log(1e-240)) continue;
        if (std::exp(a - grid.log_node(j)) < 1e-12 * Umax) continue;
        sens = std::max(sens, std::abs(std::expm1(b - a)));
    }

    PerronSolution sol{std::move(U), mass,       resid,     tz,
                       ti,           sens,       fine_grid, std::move(log_xU)};

    if (opts.check_convergence) {
        if (sol.weighted_residual > opts.residual_threshold) {
            std::ostringstream os;
            os << "stationary profile residual " << sol.weighted_residual
               << " above threshold " << opts.residual_threshold
               << "; increase the grid resolution";
            throw numerical_error(os.str());
        }
        if (sol.tail_sensitivity > opts.tail_sensitivity_threshold) {
            std::ostringstream os;
            os << "stationary profile is sensitive to the top cutoff ("
               << sol.tail_sensitivity << "); enlarge the grid";
            throw numerical_error(os.str());
        }
    }
    return sol;
}

std::complex<double> PerronSolution::lattice_moment(int j) const {
    // int x U e^{i j omega0 s} dx = int e^{s} W(s) e^{i j omega0 s} ds
    const double w = j * lattice_omega();
    double M = neg_inf;
    for (std::size_t i = 0; i < log_xU_fine.size(); ++i)
        M = std::max(M, log_xU_fine[i] + fine_grid.log_node(i));
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < log_xU_fine.size(); ++i) {
        const double q = log_xU_fine[i] + fine_grid.log_node(i) - M;
        if (q < -700.0) continue;
        const double s = fine_grid.log_node(i);
        const double amp = std::exp(q) * ((i == 0 || i + 1 == log_xU_fine.size()) ? 0.5 : 1.0);
        re += amp * std::cos(w * s);
        im += amp * std::sin(w * s);
    }
    const double scale = std::exp(M) * fine_grid.step();
    return {re * scale, im * scale};
}

std::complex<double> moment_nu(int k, const GridFunction& f, const PerronSolution& P) {
    const auto& uw = P.U.window();
    const auto& fw = f.window();
    IndexWindow w{std::max(uw.lo, fw.lo), std::min(uw.hi, fw.hi)};
    if (w.lo > w.hi) throw window_error("windows of f and the stationary profile are disjoint");
    std::vector<double> prod(P.U.grid().size(), 0.0);
    for (std::size_t j = w.lo; j <= w.hi; ++j)
        prod[j] = P.U.values()[j] * f.value_at(j);
    GridFunction q(P.U.grid(), std::move(prod), w);
    return oscillatory_moment(q, [](double) { return 1.0; }, k * lattice_omega());
}

std::complex<double> moment_nu(int k, const std::function<double(double)>& f,
                               const PerronSolution& P) {
    GridFunction fg(P.U.grid(), f, P.U.window());
    return moment_nu(k, fg, P);
}

std::function<std::complex<double>(double)>
fejer_sum(const std::map<int, std::complex<double>>& coeffs, int N, double t) {
    if (N < 1) throw config_error("Fejér order must be positive");
    const double w0 = lattice_omega();
    // one table of damped, time-rotated coefficients
    std::vector<std::pair<int, std::complex<double>>> modes;
    for (const auto& [k, c] : coeffs) {
        if (std::abs(k) >= N) continue;
        const double damp = 1.0 - std::abs(k) / static_cast<double>(N);
        const double ph = k * w0 * t;
        modes.emplace_back(k, damp * c * std::complex<double>{std::cos(ph), std::sin(ph)});
    }
    return [modes, w0](double x) {
        std::complex<double> acc{0.0, 0.0};
        const double lx = std::log(x);
        for (const auto& [k, c] : modes) {
            const double ph = k * w0 * lx;
            acc += c * std::complex<double>{std::cos(ph), std::sin(ph)};
        }
        return acc * x;
    };
}

std::function<double(double)>
fejer_sum_real(const std::map<int, std::complex<double>>& coeffs, int N, double t) {
    for (const auto& [k, c] : coeffs) {
        auto it = coeffs.find(-k);
        const std::complex<double> mirror = it == coeffs.end() ? std::complex<double>{0.0, 0.0}
                                                               : it->second;
        if (std::abs(mirror - std::conj(c)) > 1e-9 * (1.0 + std::abs(c)))
            throw config_error("real reconstruction needs conjugate-symmetric coefficients");
    }
    auto cplx = fejer_sum(coeffs, N, t);
    return [cplx](double x) { return cplx(x).real(); };
}

std::function<double(double)> spectral_projection(const GridFunction& f,
                                                  const PerronSolution& P, int N, double t) {
    std::map<int, std::complex<double>> coeffs;
    for (int k = 0; k < N; ++k) {
        const std::complex<double> nu = moment_nu(k, f, P);
        coeffs[k] = nu;
        if (k > 0) coeffs[-k] = std::conj(nu);
    }
    return fejer_sum_real(coeffs, N, t);
}

PeriodicLimit PeriodicLimit::from_fejer_moments(const AtomicMeasure& mu0,
                                                std::shared_ptr<const PerronSolution> perron,
                                                int N) {
    if (!perron) throw config_error("Fejér form needs a stationary profile");
    PeriodicLimit p;
    p.perron_ = std::move(perron);
    p.N_ = N;
    for (int k = -N; k <= N; ++k) {
        std::complex<double> c{0.0, 0.0};
        for (const auto& a : mu0.atoms()) c += a.weight * phi_k(k, a.position);
        p.coeffs_[k] = c;
    }
    return p;
}

PeriodicLimit PeriodicLimit::from_invariant_comb(DyadicComb rho0, DivisionRate rate,
                                                 double ode_tol) {
    PeriodicLimit p;
    p.rho0_ = std::move(rho0);
    p.rate_ = std::move(rate);
    p.ode_tol_ = ode_tol;
    return p;
}

double PeriodicLimit::period() const { return std::log(2.0); }

const DyadicComb& PeriodicLimit::comb() const {
    if (!rho0_) throw config_error("periodic limit is not in comb form");
    return *rho0_;
}

double PeriodicLimit::evaluate(double t, const std::function<double(double)>& f) const {
    const double per = period();
    double tr = t - per * std::floor(t / per);
    if (tr == per) tr = 0.0;
    if (perron_) {
        const double w0 = lattice_omega();
        std::complex<double> acc{0.0, 0.0};
        for (const auto& [k, c] : coeffs_) {
            if (std::abs(k) >= N_) continue;
            const double damp = 1.0 - std::abs(k) / static_cast<double>(N_);
            const std::complex<double> nu = moment_nu(k, f, *perron_);
            const double ph = k * w0 * tr;
            acc += damp * c * nu * std::complex<double>{std::cos(ph), std::sin(ph)};
        }
        return acc.real();
    }
    if (tr == 0.0) return pairing(*rho0_, f);
    CombEvolveOptions opts;
    opts.tol = ode_tol_;
    const DyadicComb moved = evolve_comb(*rho0_, *rate_, tr, opts);
    return std::exp(-tr) * pairing(moved, f);
}

PeriodicLimit periodic_limit_fejer(const AtomicMeasure& mu0,
                                   std::shared_ptr<const PerronSolution> perron, int N) {
    return PeriodicLimit::from_fejer_moments(mu0, std::move(perron), N);
}

InvariantCombResult invariant_comb(double x0, const DivisionRate& rate, double tol,
                                   const WeightFunction& w, int max_iterations) {
    CombEvolveOptions opts;
    opts.tol = std::min(tol * 1e-2, 1e-10);
    DyadicComb comb = DyadicComb::dirac(x0);
    std::vector<double> dists;
    for (int it = 1; it <= max_iterations; ++it) {
        DyadicComb next = period_map(comb, rate, opts);
        const double d = comb_tv_distance(next, comb, w);
        dists.push_back(d);
        comb = std::move(next);
        if (d < tol) {
            // geometric rate from the tail of the iteration
            double rate_emp = 0.0;
            int count = 0;
            for (std::size_t i = dists.size() > 5 ? dists.size() - 5 : 1; i < dists.size(); ++i) {
                if (dists[i - 1] > 0.0 && dists[i] > 0.0) {
                    rate_emp += std::log(dists[i] / dists[i - 1]);
                    ++count;
                }
            }
            rate_emp = count > 0 ? std::exp(rate_emp / count) : 0.0;
            InvariantCombResult res{PeriodicLimit::from_invariant_comb(comb, rate, opts.tol),
                                    comb, rate_emp, it};
            return res;
        }
    }
    throw numerical_error("one-period lattice map showed no contraction within the iteration cap");
}

} // namespace mitosim
