#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mitosim {

class LogGrid;

/// Constants of the two standing growth-envelope assumptions on a division
/// rate: near zero, B(x) <= K0*x^gamma0 for x < b0; past b1,
/// K1*x^gamma1 <= B(x) <= K2*x^gamma2.
struct AssumptionConstants {
    double b0 = 0.0, gamma0 = 0.0, K0 = 0.0;
    double b1 = 0.0, gamma1 = 0.0, gamma2 = 0.0, K1 = 0.0, K2 = 0.0;
};

/// Division-rate model B. Three kinds: K*x^r monomials, constants, and
/// tabulated samples on a strictly increasing abscissa with declared
/// power-law extrapolation exponents at both ends. The optional support
/// lower bound b clips the rate to zero below b.
class DivisionRate {
public:
    enum class Kind { monomial, constant, tabulated };

    static DivisionRate monomial(double K, double r, double support_lb = 0.0);
    static DivisionRate constant(double B0, double support_lb = 0.0);
    static DivisionRate tabulated(std::vector<double> xs, std::vector<double> bs,
                                  double ext_lo_exponent, double ext_hi_exponent,
                                  double support_lb = 0.0);

    Kind kind() const { return kind_; }
    double support_lower_bound() const { return b_; }
    double monomial_K() const { return K_; }
    double monomial_r() const { return r_; }
    double constant_B0() const { return B0_; }

    /// Pointwise rate B(x). Throws std::domain_error for x <= 0.
    double evaluate(double x) const;
    double operator()(double x) const { return evaluate(x); }

    /// Integral of s -> B(x*e^s) over [0, t]: the exponent of the survival
    /// factor along the exponential flow started at x. Closed form for
    /// monomial and constant kinds, adaptive quadrature (abs tol 1e-10)
    /// otherwise.
    double cumulative_hazard(double x, double t) const;

    /// Declared or self-derived envelope constants, when available.
    const std::optional<AssumptionConstants>& assumption_constants() const {
        return assumptions_;
    }
    void set_assumption_constants(const AssumptionConstants& a) { assumptions_ = a; }

    std::string describe() const;

private:
    DivisionRate() = default;

    Kind kind_ = Kind::constant;
    double b_ = 0.0;
    double K_ = 0.0, r_ = 0.0; // monomial
    double B0_ = 0.0;          // constant
    std::vector<double> xs_, bs_;
    double ext_lo_ = 0.0, ext_hi_ = 0.0;
    std::optional<AssumptionConstants> assumptions_;

    double raw_value(double x) const; // before support clipping
};

/// One clause of the assumption audit.
struct AuditClause {
    bool pass = false;
    double witness_x = 0.0; // a point exhibiting the failure, when failing
    std::string detail;
};

struct AssumptionReport {
    AuditClause continuity_near_zero; // continuous and bounded around 0
    AuditClause support_is_halfline;  // supp B = [b, inf)
    AuditClause near_zero_envelope;   // B <= K0 x^gamma0 below b0
    AuditClause growth_envelope;      // K1 x^gamma1 <= B <= K2 x^gamma2 past b1
    bool hyp_solvability_pass = false;
    bool hyp_growth_pass = false;
    std::string summary() const;
};

/// Audits the standing assumptions. Exact reasoning for monomial/constant
/// kinds (probe grid ignored), numeric spot checks along the probe grid for
/// tabulated kinds. The report is informational; eigenproblem and
/// certificate modules require hyp_growth_pass.
AssumptionReport audit_assumptions(const DivisionRate& rate, const LogGrid& probe_grid);

} // namespace mitosim
