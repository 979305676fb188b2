#pragma once

#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "mitosim/grid.hpp"
#include "mitosim/measures.hpp"
#include "mitosim/rates.hpp"

namespace mitosim {

/// Angular frequency of the size-doubling lattice: 2*pi / log 2.
double lattice_omega();

/// Boundary eigenvalue lambda_k = 1 + i k * lattice_omega().
std::complex<double> lambda_k(int k);

/// Adjoint boundary eigenfunction phi_k(x) = x * exp(i k omega0 log x);
/// satisfies phi_k(2x) = 2 phi_k(x) exactly and |phi_k(x)| = x.
std::complex<double> phi_k(int k, double x);

struct PerronOptions {
    int min_fine_points_per_octave = 1024; // internal sweep resolution
    double residual_threshold = 1e-4;
    double tail_sensitivity_threshold = 1e-6;
    bool check_assumptions = true;
    bool check_convergence = true; // throw when residual/tail checks fail
};

/// The principal eigenfunction of the size distribution, normalized so the
/// mass integral of x*U equals one, together with convergence diagnostics.
struct PerronSolution {
    GridFunction U;
    double mass = 0.0;              // integral of x U after normalization
    double weighted_residual = 0.0; // max equation defect, scaled by (1+B) U
    double tail_exponent_zero = 0.0;
    double tail_exponent_inf = 0.0;
    double tail_sensitivity = 0.0;  // change under one extra top octave

    // log(x U) on the internal fine sweep grid, kept for accurate moments
    LogGrid fine_grid;
    std::vector<double> log_xU_fine;

    /// j-th harmonic of the mass measure x U dx on the log-2 circle:
    /// integral of x U(x) e^{i j omega0 log x} dx. The biorthogonality
    /// identities reduce to lattice_moment(l - k) = delta_{l k}.
    std::complex<double> lattice_moment(int j) const;
};

/// Solves the stationary size-distribution equation by a leftward sweep in
/// the log variable with the exact survival integrating factor, carried in
/// log space (the solution spans thousands of orders of magnitude). A
/// sweep at twice the resolution is combined by Richardson extrapolation,
/// and the result is restricted to the requested grid and normalized.
PerronSolution compute_perron(const DivisionRate& rate, const LogGrid& grid,
                              const PerronOptions& opts = {});

/// nu_k(f): the k-th eigen-moment of f against the conjugate boundary
/// density e^{-i k omega0 log x} U(x) dx.
std::complex<double> moment_nu(int k, const GridFunction& f, const PerronSolution& P);
std::complex<double> moment_nu(int k, const std::function<double(double)>& f,
                               const PerronSolution& P);

/// Cesaro-damped mode sum x -> sum over |k| <= N of (1 - |k|/N) c_k
/// phi_k(x) e^{i k omega0 t}.
std::function<std::complex<double>(double)>
fejer_sum(const std::map<int, std::complex<double>>& coeffs, int N, double t);

/// Real-valued variant; requires conjugate-symmetric coefficients and
/// throws config_error otherwise.
std::function<double(double)>
fejer_sum_real(const std::map<int, std::complex<double>>& coeffs, int N, double t);

/// Real Fejér reconstruction of the projection R_t f from the eigen-moments
/// nu_k(f) of a grid function.
std::function<double(double)> spectral_projection(const GridFunction& f,
                                                  const PerronSolution& P, int N, double t);

/// The periodic limit family rho_t, in one of its two equivalent forms:
/// a Fejér mode expansion with coefficients mu0(phi_k), or the invariant
/// comb of the one-period rescaled lattice map. Both forms are exactly
/// log(2)-periodic in t by construction.
class PeriodicLimit {
public:
    static PeriodicLimit from_fejer_moments(const AtomicMeasure& mu0,
                                            std::shared_ptr<const PerronSolution> perron, int N);
    static PeriodicLimit from_invariant_comb(DyadicComb rho0, DivisionRate rate,
                                             double ode_tol = 1e-10);

    double period() const;
    bool is_fejer_form() const { return perron_ != nullptr; }

    /// rho_t(f). Both forms reduce t modulo the period first, so values at
    /// t and t + period are bit-identical.
    double evaluate(double t, const std::function<double(double)>& f) const;

    /// Mode coefficients mu0(phi_k) (Fejér form only).
    const std::map<int, std::complex<double>>& coefficients() const { return coeffs_; }
    /// The invariant comb (comb form only).
    const DyadicComb& comb() const;

private:
    PeriodicLimit() = default;

    // Fejér form
    std::shared_ptr<const PerronSolution> perron_;
    std::map<int, std::complex<double>> coeffs_;
    int N_ = 0;

    // comb form
    std::optional<DyadicComb> rho0_;
    std::optional<DivisionRate> rate_;
    double ode_tol_ = 1e-10;
};

/// rho_t as a Fejér mode expansion seeded by the moments of mu0.
PeriodicLimit periodic_limit_fejer(const AtomicMeasure& mu0,
                                   std::shared_ptr<const PerronSolution> perron, int N);

struct InvariantCombResult {
    PeriodicLimit limit;
    DyadicComb rho0;
    double empirical_rate = 0.0; // geometric decay factor of the iteration tail
    int iterations = 0;
};

/// Power-iterates the one-period rescaled lattice map from a unit atom at
/// x0 until successive combs agree in weighted total variation. The fixed
/// comb has mass-pairing exactly x0 by the balance law.
InvariantCombResult invariant_comb(double x0, const DivisionRate& rate, double tol,
                                   const WeightFunction& w = WeightFunction::pair_of_powers(0.0, 2.0),
                                   int max_iterations = 200);

} // namespace mitosim
