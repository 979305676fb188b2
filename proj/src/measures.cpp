#include "mitosim/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "mitosim/errors.hpp"

namespace mitosim {

WeightFunction WeightFunction::pair_of_powers(double r1, double r2) {
    if (!(r1 < 1.0 && 1.0 < r2))
        throw config_error("weight exponents must satisfy r1 < 1 < r2");
    WeightFunction w;
    w.r1_ = r1;
    w.r2_ = r2;
    return w;
}

WeightFunction WeightFunction::mass() {
    WeightFunction w;
    w.mass_ = true;
    w.r1_ = w.r2_ = 1.0;
    return w;
}

double WeightFunction::operator()(double x) const {
    if (!(x > 0.0)) throw std::domain_error("weight evaluated at non-positive size");
    if (mass_) return x;
    return std::pow(x, r1_) + std::pow(x, r2_);
}

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms) {
    for (const auto& a : atoms)
        if (!(a.position > 0.0)) throw config_error("atom positions must be positive");
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.position < b.position; });
    for (const auto& a : atoms) {
        if (!atoms_.empty() && atoms_.back().position == a.position)
            atoms_.back().weight += a.weight;
        else
            atoms_.push_back(a);
    }
}

AtomicMeasure AtomicMeasure::dirac(double x0, double weight) {
    return AtomicMeasure({{x0, weight}});
}

DyadicComb::DyadicComb(double x0, std::vector<double> weights, int n_first, double t)
    : x0_(x0), t_(t), n_first_(n_first), weights_(std::move(weights)) {
    if (!(x0 > 0.0)) throw config_error("comb base must be positive");
}

DyadicComb DyadicComb::dirac(double x0) { return DyadicComb(x0, {1.0}, 0, 0.0); }

double DyadicComb::position(std::size_t i) const {
    return x0_ * std::exp(t_) * std::ldexp(1.0, -level(i));
}

double DyadicComb::phi_mass() const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) s += weights_[i] * position(i);
    return s;
}

AtomicMeasure DyadicComb::to_atoms() const {
    std::vector<AtomicMeasure::Atom> atoms;
    atoms.reserve(weights_.size());
    for (std::size_t i = 0; i < weights_.size(); ++i)
        if (weights_[i] != 0.0) atoms.push_back({position(i), weights_[i]});
    return AtomicMeasure(std::move(atoms));
}

double pairing(const AtomicMeasure& mu, const std::function<double(double)>& f) {
    double s = 0.0, c = 0.0;
    for (const auto& a : mu.atoms()) {
        const double term = a.weight * f(a.position);
        const double y = term - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

double pairing(const DyadicComb& mu, const std::function<double(double)>& f) {
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < mu.weights().size(); ++i) {
        const double term = mu.weights()[i] * f(mu.position(i));
        const double y = term - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

double pairing(const AtomicMeasure& mu, const GridFunction& f) {
    return pairing(mu, [&](double x) { return interpolate(f, x); });
}

double pairing(const DyadicComb& mu, const GridFunction& f) {
    return pairing(mu, [&](double x) { return interpolate(f, x); });
}

double weighted_tv_norm(const AtomicMeasure& mu, const WeightFunction& w) {
    double s = 0.0;
    for (const auto& a : mu.atoms()) s += std::abs(a.weight) * w(a.position);
    return s;
}

double weighted_tv_norm(const DyadicComb& mu, const WeightFunction& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.weights().size(); ++i)
        s += std::abs(mu.weights()[i]) * w(mu.position(i));
    return s;
}

double comb_tv_distance(const DyadicComb& a, const DyadicComb& b, const WeightFunction& w) {
    const double shift = std::log2(a.base() / b.base()) + (a.time() - b.time()) / std::log(2.0);
    const double shift_round = std::round(shift);
    if (std::abs(shift - shift_round) > 1e-9)
        throw config_error("combs live on incommensurable lattices");
    // level n of b sits at the same position as level n - shift of a
    const int off = static_cast<int>(shift_round);
    std::map<int, double> diff;
    for (std::size_t i = 0; i < a.weights().size(); ++i) diff[a.level(i)] += a.weights()[i];
    for (std::size_t i = 0; i < b.weights().size(); ++i) diff[b.level(i) - off] -= b.weights()[i];
    double s = 0.0;
    const double scale = a.base() * std::exp(a.time());
    for (const auto& [n, dw] : diff)
        if (dw != 0.0) s += std::abs(dw) * w(scale * std::ldexp(1.0, -n));
    return s;
}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

struct LatticeState {
    double x0;
    int n_first;
    std::vector<double> a;

    double position(double t_abs, std::size_t i) const {
        return x0 * std::exp(t_abs) * std::ldexp(1.0, -(n_first + static_cast<int>(i)));
    }
};

void lattice_rhs(const DivisionRate& rate, const LatticeState& s, double t_abs,
                 const std::vector<double>& a, std::vector<double>& out) {
    const std::size_t n = a.size();
    out.assign(n, 0.0);
    double prev_flux = 0.0; // 2 B(p_{i-1}) a_{i-1}
    for (std::size_t i = 0; i < n; ++i) {
        const double p = s.position(t_abs, i);
        const double Bi = rate.evaluate(p);
        out[i] = -Bi * a[i] + prev_flux;
        prev_flux = 2.0 * Bi * a[i];
    }
}

} // namespace

DyadicComb evolve_comb(const DyadicComb& comb, const DivisionRate& rate, double t,
                       const CombEvolveOptions& opts) {
    if (t < 0.0) throw std::domain_error("comb evolution needs t >= 0");
    LatticeState s{comb.base(), comb.n_first(), comb.weights()};
    for (double w : s.a)
        if (w < 0.0) throw config_error("evolve_comb expects nonnegative weights; "
                                        "split signed measures into parts first");
    // budget carried rescaled to t0; dropped mass keeps growing with the
    // balance law, so it is added with the factor e^{-(tau - t0)} here and
    // the whole budget is scaled up to t_end at the end
    double budget_rescaled = comb.truncation_budget();
    const double t0 = comb.time();
    const double t_end = t0 + t;
    double tau = t0;
    double mass_scale = [&] {
        double m = 0.0;
        for (std::size_t i = 0; i < s.a.size(); ++i) m += s.a[i] * s.position(t0, i);
        return m + budget_rescaled;
    }();
    if (mass_scale <= 0.0) mass_scale = 1.0;

    std::vector<double> k1, k2, k3, k4, k5, k6, k7, ytmp, y5;
    double h = std::min(0.1, t_end - tau);
    if (h <= 0.0) h = 1e-6;
    const double rtol = opts.tol, atol = opts.tol * 1e-3;
    int rejected_in_a_row = 0;

    auto ensure_capacity = [&]() {
        // keep one empty guard level at the small-size end
        if (s.a.empty() || s.a.back() != 0.0) s.a.push_back(0.0);
    };
    ensure_capacity();

    while (tau < t_end - 1e-15 * std::max(1.0, t_end)) {
        h = std::min(h, t_end - tau);
        const std::size_t n = s.a.size();
        k1.assign(n, 0.0);
        lattice_rhs(rate, s, tau, s.a, k1);
        ytmp.resize(n);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = s.a[i] + h * a21 * k1[i];
        lattice_rhs(rate, s, tau + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = s.a[i] + h * (a31 * k1[i] + a32 * k2[i]);
        lattice_rhs(rate, s, tau + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = s.a[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        lattice_rhs(rate, s, tau + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = s.a[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        lattice_rhs(rate, s, tau + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = s.a[i] +
                      h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        lattice_rhs(rate, s, tau + h, ytmp, k6);
        y5.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            y5[i] = s.a[i] +
                    h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        lattice_rhs(rate, s, tau + h, y5, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            const double sc = atol + rtol * std::abs(s.a[i]);
            err = std::max(err, std::abs(e) / sc);
        }
        if (err <= 1.0) {
            s.a = y5;
            tau += h;
            rejected_in_a_row = 0;
            // drop exhausted levels at the large-size end; their residual
            // mass goes into the budget
            const double mass_now = mass_scale * std::exp(tau - t0);
            const double drop_below = opts.tol * opts.drop_factor * mass_now;
            while (s.a.size() > 1) {
                const double head_mass = std::abs(s.a.front()) * s.position(tau, 0);
                if (head_mass >= drop_below || s.a.front() < 0.0) break;
                budget_rescaled += head_mass * std::exp(-(tau - t0));
                s.a.erase(s.a.begin());
                s.n_first += 1;
            }
            ensure_capacity();
        } else {
            if (++rejected_in_a_row > 40)
                throw numerical_error("comb step size collapsed (stiff rate beyond control)");
        }
        const double safety = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h *= std::clamp(safety, 0.2, 5.0);
        if (h < 1e-12) throw numerical_error("comb step size underflow");
    }

    DyadicComb out(comb.base(), std::move(s.a), s.n_first, t_end);
    out.add_budget(budget_rescaled * std::exp(t_end - t0));
    const double mass_expected = mass_scale * std::exp(t_end - t0);
    if (out.truncation_budget() > opts.budget_allowance * opts.tol * mass_expected)
        throw truncation_error("dropped-mass budget exceeded its allowance");
    return out;
}

DyadicComb period_map(const DyadicComb& comb, const DivisionRate& rate,
                      const CombEvolveOptions& opts) {
    const double period = std::log(2.0);
    DyadicComb evolved = evolve_comb(comb, rate, period, opts);
    std::vector<double> w = evolved.weights();
    for (double& x : w) x *= 0.5;
    DyadicComb out(comb.base(), std::move(w), evolved.n_first() - 1, comb.time());
    out.add_budget(0.5 * evolved.truncation_budget());
    return out;
}

AtomicMeasure density_to_atoms(const std::function<double(double)>& density, double a, double b,
                               int n_cells, int gauss_order) {
    if (!(a > 0.0 && b > a)) throw config_error("density support must satisfy 0 < a < b");
    if (n_cells < 1) throw config_error("need at least one quadrature cell");
    // Gauss-Legendre nodes/weights on [-1, 1]
    std::vector<double> gx, gw;
    if (gauss_order == 2) {
        const double r = 1.0 / std::sqrt(3.0);
        gx = {-r, r};
        gw = {1.0, 1.0};
    } else if (gauss_order == 3) {
        const double r = std::sqrt(3.0 / 5.0);
        gx = {-r, 0.0, r};
        gw = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    } else {
        throw config_error("gauss_order must be 2 or 3");
    }
    std::vector<AtomicMeasure::Atom> atoms;
    atoms.reserve(static_cast<std::size_t>(n_cells) * gx.size());
    const double dx = (b - a) / n_cells;
    for (int c = 0; c < n_cells; ++c) {
        const double mid = a + (c + 0.5) * dx;
        for (std::size_t q = 0; q < gx.size(); ++q) {
            const double x = mid + 0.5 * dx * gx[q];
            atoms.push_back({x, gw[q] * 0.5 * dx * density(x)});
        }
    }
    return AtomicMeasure(std::move(atoms));
}

AtomicMeasure no_oscillation_datum(int n_cells, int gauss_order) {
    return density_to_atoms([](double x) { return 1.0 / (x * x); }, 1.0, 2.0, n_cells,
                            gauss_order);
}

std::vector<DyadicComb> measure_to_combs(const AtomicMeasure& mu) {
    std::vector<DyadicComb> combs;
    std::vector<double> bases; // class representative positions
    std::vector<std::map<int, double>> levels;
    for (const auto& atom : mu.atoms()) {
        bool placed = false;
        for (std::size_t c = 0; c < bases.size(); ++c) {
            const double k = std::log2(bases[c] / atom.position);
            const double kr = std::round(k);
            if (std::abs(k - kr) < 1e-12) {
                levels[c][static_cast<int>(kr)] += atom.weight;
                placed = true;
                break;
            }
        }
        if (!placed) {
            bases.push_back(atom.position);
            levels.push_back({{0, atom.weight}});
        }
    }
    for (std::size_t c = 0; c < bases.size(); ++c) {
        const int n_lo = levels[c].begin()->first;
        const int n_hi = levels[c].rbegin()->first;
        std::vector<double> w(static_cast<std::size_t>(n_hi - n_lo) + 1, 0.0);
        for (const auto& [n, wt] : levels[c]) w[static_cast<std::size_t>(n - n_lo)] = wt;
        combs.emplace_back(bases[c], std::move(w), n_lo, 0.0);
    }
    return combs;
}

void write_csv(const DyadicComb& comb, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open output file: " + path);
    out << std::setprecision(17);
    out << "# dyadic-comb x0=" << comb.base() << " t=" << comb.time()
        << " budget=" << comb.truncation_budget() << "\n";
    out << "n,position,weight\n";
    for (std::size_t i = 0; i < comb.weights().size(); ++i)
        out << comb.level(i) << "," << comb.position(i) << "," << comb.weights()[i] << "\n";
}

} // namespace mitosim
