#include "mitosim/rates.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "mitosim/errors.hpp"
#include "mitosim/grid.hpp"

namespace mitosim {

DivisionRate DivisionRate::monomial(double K, double r, double support_lb) {
    if (K <= 0.0 || r <= 0.0) throw config_error("monomial rate needs K > 0 and r > 0");
    if (support_lb < 0.0) throw config_error("support lower bound must be nonnegative");
    DivisionRate b;
    b.kind_ = Kind::monomial;
    b.K_ = K;
    b.r_ = r;
    b.b_ = support_lb;
    // The power law is its own envelope on both sides, with equality.
    AssumptionConstants a;
    a.b0 = 1.0;
    a.gamma0 = r;
    a.K0 = K;
    a.b1 = std::max(1.0, support_lb);
    a.gamma1 = a.gamma2 = r;
    a.K1 = a.K2 = K;
    b.assumptions_ = a;
    return b;
}

DivisionRate DivisionRate::constant(double B0, double support_lb) {
    if (B0 < 0.0) throw config_error("constant rate needs B0 >= 0");
    if (support_lb < 0.0) throw config_error("support lower bound must be nonnegative");
    DivisionRate b;
    b.kind_ = Kind::constant;
    b.B0_ = B0;
    b.b_ = support_lb;
    return b;
}

DivisionRate DivisionRate::tabulated(std::vector<double> xs, std::vector<double> bs,
                                     double ext_lo_exponent, double ext_hi_exponent,
                                     double support_lb) {
    if (xs.size() < 2 || xs.size() != bs.size())
        throw config_error("tabulated rate needs >= 2 samples with matching lengths");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] <= 0.0) throw config_error("tabulated rate abscissa must be positive");
        if (i > 0 && xs[i] <= xs[i - 1])
            throw config_error("tabulated rate abscissa must be strictly increasing");
        if (bs[i] < 0.0) throw config_error("tabulated rate values must be nonnegative");
    }
    DivisionRate b;
    b.kind_ = Kind::tabulated;
    b.xs_ = std::move(xs);
    b.bs_ = std::move(bs);
    b.ext_lo_ = ext_lo_exponent;
    b.ext_hi_ = ext_hi_exponent;
    b.b_ = support_lb;
    return b;
}

double DivisionRate::raw_value(double x) const {
    switch (kind_) {
    case Kind::monomial:
        return K_ * std::pow(x, r_);
    case Kind::constant:
        return B0_;
    case Kind::tabulated: {
        if (x <= xs_.front()) return bs_.front() * std::pow(x / xs_.front(), ext_lo_);
        if (x >= xs_.back()) return bs_.back() * std::pow(x / xs_.back(), ext_hi_);
        // linear in log x between samples
        const double s = std::log(x);
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
        const double s0 = std::log(xs_[i]), s1 = std::log(xs_[i + 1]);
        const double w = (s - s0) / (s1 - s0);
        return bs_[i] * (1.0 - w) + bs_[i + 1] * w;
    }
    }
    return 0.0;
}

double DivisionRate::evaluate(double x) const {
    if (!(x > 0.0)) throw std::domain_error("division rate evaluated at non-positive size");
    if (x < b_) return 0.0;
    return raw_value(x);
}

namespace {

// Adaptive Simpson on [a, b] with absolute tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1);
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol) {
    if (b <= a) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

} // namespace

double DivisionRate::cumulative_hazard(double x, double t) const {
    if (!(x > 0.0)) throw std::domain_error("cumulative hazard needs x > 0");
    if (t < 0.0) throw std::domain_error("cumulative hazard needs t >= 0");
    if (t == 0.0) return 0.0;
    // Flow enters the support at s0 = log(b/x) when it starts below b.
    double s0 = 0.0;
    if (b_ > 0.0 && x < b_) {
        s0 = std::log(b_ / x);
        if (s0 >= t) return 0.0;
    }
    switch (kind_) {
    case Kind::monomial: {
        // int_{s0}^{t} K (x e^s)^r ds = (K/r) ((x e^t)^r - max(x,b)^r)
        const double lo = std::max(x, b_);
        return (K_ / r_) * (std::pow(x, r_) * std::expm1(r_ * t) - (std::pow(lo, r_) - std::pow(x, r_)));
    }
    case Kind::constant:
        return B0_ * (t - s0);
    case Kind::tabulated: {
        auto integrand = [&](double s) { return evaluate(x * std::exp(s)); };
        return integrate_adaptive(integrand, s0, t, 1e-10);
    }
    }
    return 0.0;
}

std::string DivisionRate::describe() const {
    std::ostringstream os;
    switch (kind_) {
    case Kind::monomial: os << "monomial(K=" << K_ << ", r=" << r_ << ")"; break;
    case Kind::constant: os << "constant(B0=" << B0_ << ")"; break;
    case Kind::tabulated: os << "tabulated(" << xs_.size() << " samples)"; break;
    }
    if (b_ > 0.0) os << " with support [" << b_ << ", inf)";
    return os.str();
}

std::string AssumptionReport::summary() const {
    std::ostringstream os;
    auto line = [&](const char* name, const AuditClause& c) {
        os << name << ": " << (c.pass ? "pass" : "FAIL");
        if (!c.pass) os << " (witness x=" << c.witness_x << ")";
        if (!c.detail.empty()) os << " - " << c.detail;
        os << "\n";
    };
    line("continuity near zero", continuity_near_zero);
    line("support half-line", support_is_halfline);
    line("near-zero envelope", near_zero_envelope);
    line("growth envelope", growth_envelope);
    os << "solvability hypothesis: " << (hyp_solvability_pass ? "pass" : "FAIL") << "\n";
    os << "growth hypothesis: " << (hyp_growth_pass ? "pass" : "FAIL") << "\n";
    return os.str();
}

AssumptionReport audit_assumptions(const DivisionRate& rate, const LogGrid& probe_grid) {
    AssumptionReport rep;
    const auto& ac = rate.assumption_constants();

    switch (rate.kind()) {
    case DivisionRate::Kind::monomial: {
        const double b = rate.support_lower_bound();
        // K x^r is continuous; clipping at b > 0 introduces a jump of K b^r.
        rep.continuity_near_zero.pass = (b == 0.0);
        if (b > 0.0) {
            rep.continuity_near_zero.witness_x = b;
            rep.continuity_near_zero.detail = "jump at the support edge";
        }
        rep.support_is_halfline.pass = true;
        rep.near_zero_envelope.pass = (b == 0.0) || true; // clipping only lowers B
        rep.near_zero_envelope.detail = "equality case of the power-law envelope";
        rep.growth_envelope.pass = true;
        rep.growth_envelope.detail = "power law is its own two-sided envelope";
        break;
    }
    case DivisionRate::Kind::constant: {
        const double B0 = rate.constant_B0();
        rep.continuity_near_zero.pass = rate.support_lower_bound() == 0.0;
        if (!rep.continuity_near_zero.pass)
            rep.continuity_near_zero.witness_x = rate.support_lower_bound();
        rep.support_is_halfline.pass = (B0 > 0.0);
        if (B0 == 0.0) rep.support_is_halfline.detail = "rate vanishes identically";
        rep.near_zero_envelope.pass = (B0 == 0.0);
        if (B0 > 0.0) {
            rep.near_zero_envelope.witness_x = 1e-12;
            rep.near_zero_envelope.detail = "constant rate does not vanish at 0";
        }
        rep.growth_envelope.pass = false;
        rep.growth_envelope.witness_x = 1e12;
        rep.growth_envelope.detail = "no polynomial lower growth bound at infinity";
        break;
    }
    case DivisionRate::Kind::tabulated: {
        // Numeric spot checks on the probe grid.
        const double b = rate.support_lower_bound();
        rep.continuity_near_zero.pass = true;
        rep.support_is_halfline.pass = true;
        for (std::size_t j = 0; j < probe_grid.size(); ++j) {
            const double x = probe_grid.node(j);
            const double v = rate.evaluate(x);
            if (x < 1e-2 && v > 1e6) {
                rep.continuity_near_zero.pass = false;
                rep.continuity_near_zero.witness_x = x;
                rep.continuity_near_zero.detail = "rate not bounded around 0";
            }
            if (x > b && v <= 0.0 && rep.support_is_halfline.pass) {
                // interior zero above the declared support edge
                rep.support_is_halfline.pass = false;
                rep.support_is_halfline.witness_x = x;
                rep.support_is_halfline.detail = "zero above the declared support edge";
            }
        }
        if (!ac) {
            rep.near_zero_envelope.pass = false;
            rep.near_zero_envelope.detail = "no declared envelope constants";
            rep.growth_envelope.pass = false;
            rep.growth_envelope.detail = "no declared envelope constants";
        } else {
            rep.near_zero_envelope.pass = true;
            rep.growth_envelope.pass = true;
            for (std::size_t j = 0; j < probe_grid.size(); ++j) {
                const double x = probe_grid.node(j);
                const double v = rate.evaluate(x);
                if (x < ac->b0 && v > ac->K0 * std::pow(x, ac->gamma0) * (1.0 + 1e-9)) {
                    rep.near_zero_envelope.pass = false;
                    rep.near_zero_envelope.witness_x = x;
                }
                if (x > ac->b1) {
                    const bool lo_ok = v >= ac->K1 * std::pow(x, ac->gamma1) * (1.0 - 1e-9);
                    const bool hi_ok = v <= ac->K2 * std::pow(x, ac->gamma2) * (1.0 + 1e-9);
                    if ((!lo_ok || !hi_ok) && rep.growth_envelope.pass) {
                        rep.growth_envelope.pass = false;
                        rep.growth_envelope.witness_x = x;
                    }
                }
            }
        }
        break;
    }
    }

    rep.hyp_solvability_pass = rep.continuity_near_zero.pass;
    rep.hyp_growth_pass = rep.support_is_halfline.pass && rep.near_zero_envelope.pass &&
                          rep.growth_envelope.pass;
    return rep;
}

} // namespace mitosim
