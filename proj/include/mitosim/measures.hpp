#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mitosim/grid.hpp"
#include "mitosim/rates.hpp"

namespace mitosim {

/// Weight w(x) = x^{r1} + x^{r2} with r1 < 1 < r2, or the special mass
/// weight w(x) = x.
class WeightFunction {
public:
    static WeightFunction pair_of_powers(double r1, double r2);
    static WeightFunction mass(); // w(x) = x

    double operator()(double x) const;
    bool is_mass_weight() const { return mass_; }
    double r1() const { return r1_; }
    double r2() const { return r2_; }

private:
    WeightFunction() = default;
    bool mass_ = false;
    double r1_ = 0.0, r2_ = 0.0;
};

/// Finite signed atomic measure: (position, weight) pairs, positions
/// strictly positive, duplicates merged on construction.
class AtomicMeasure {
public:
    struct Atom {
        double position;
        double weight;
    };

    AtomicMeasure() = default;
    explicit AtomicMeasure(std::vector<Atom> atoms);
    static AtomicMeasure dirac(double x0, double weight = 1.0);

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }

private:
    std::vector<Atom> atoms_;
};

/// Atomic measure supported on the moving dyadic lattice
/// { x0 * e^t * 2^{-n} }. Exact carrier of measure solutions started from
/// atoms on one lattice: evolution never creates off-lattice support.
class DyadicComb {
public:
    DyadicComb(double x0, std::vector<double> weights, int n_first = 0, double t = 0.0);
    static DyadicComb dirac(double x0);

    double base() const { return x0_; }
    double time() const { return t_; }
    int n_first() const { return n_first_; }
    const std::vector<double>& weights() const { return weights_; }
    std::vector<double>& weights() { return weights_; }

    /// Absolute lattice level of slot i.
    int level(std::size_t i) const { return n_first_ + static_cast<int>(i); }
    /// Atom position of slot i at the comb's current time.
    double position(std::size_t i) const;

    /// Dropped mass, carried at the comb's current time scale. The balance
    /// law holds for phi_mass() + truncation_budget().
    double truncation_budget() const { return budget_; }
    /// Sum of weight * position over the comb.
    double phi_mass() const;

    AtomicMeasure to_atoms() const;

    // internals used by the evolution routines
    void set_time(double t) { t_ = t; }
    void set_n_first(int n) { n_first_ = n; }
    void add_budget(double mass) { budget_ += mass; }
    void scale_budget(double s) { budget_ *= s; }

private:
    double x0_;
    double t_;
    int n_first_;
    std::vector<double> weights_;
    double budget_ = 0.0;
};

/// mu(f) = sum of weight_i * f(position_i); exact.
double pairing(const AtomicMeasure& mu, const std::function<double(double)>& f);
double pairing(const DyadicComb& mu, const std::function<double(double)>& f);
/// Same against a grid function; atoms outside the valid window throw.
double pairing(const AtomicMeasure& mu, const GridFunction& f);
double pairing(const DyadicComb& mu, const GridFunction& f);

/// Weighted total variation norm: sum |weight_i| * w(position_i).
double weighted_tv_norm(const AtomicMeasure& mu, const WeightFunction& w);
double weighted_tv_norm(const DyadicComb& mu, const WeightFunction& w);

/// Weighted TV distance of two combs on the same lattice (same base up to a
/// power of two). Throws when the lattices are incommensurable.
double comb_tv_distance(const DyadicComb& a, const DyadicComb& b, const WeightFunction& w);

struct CombEvolveOptions {
    double tol = 1e-10;           // local ODE tolerance (relative)
    double drop_factor = 1e-3;    // levels below tol*drop_factor*mass are droppable
    double budget_allowance = 10; // error when budget exceeds allowance*tol*mass
};

/// Integrates the lattice ODE  a_n' = -B(p_n) a_n + 2 B(p_{n-1}) a_{n-1}
/// (p_n the moving atom positions) with an embedded adaptive Runge-Kutta
/// pair. Levels grow on demand at the small-size end; exhausted levels are
/// dropped into the truncation budget.
DyadicComb evolve_comb(const DyadicComb& comb, const DivisionRate& rate, double t,
                       const CombEvolveOptions& opts = {});

/// One period of the rescaled flow: evolve over log 2, halve the weights,
/// and shift the level index so atoms sit on the original lattice again.
/// The comb's φ-mass is invariant under this map.
DyadicComb period_map(const DyadicComb& comb, const DivisionRate& rate,
                      const CombEvolveOptions& opts = {});

/// Per-cell Gauss-Legendre discretization of density(x) dx on [a, b] into
/// point masses (gauss_order 2 or 3 points per cell).
AtomicMeasure density_to_atoms(const std::function<double(double)>& density, double a, double b,
                               int n_cells, int gauss_order = 3);

/// The oscillation-free benchmark datum x^{-2} on [1, 2].
AtomicMeasure no_oscillation_datum(int n_cells, int gauss_order);

/// Groups atoms into dyadically commensurable classes (position ratios that
/// are exact powers of two) and builds one comb per class.
std::vector<DyadicComb> measure_to_combs(const AtomicMeasure& mu);

/// Comb CSV: header with base/time/budget metadata, then n,position,weight.
void write_csv(const DyadicComb& comb, const std::string& path);

} // namespace mitosim
