#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace mitosim {

/// Log-uniform grid with base 2: nodes x_j = x_min * 2^(j/m),
/// j = 0 .. octaves*m. With m points per octave, halving x -> x/2 is the
/// exact index shift j -> j-m, and time shifts by log(2)/m move exactly one
/// cell along the exponential flow.
class LogGrid {
public:
    LogGrid(double x_min, int octaves, int points_per_octave);

    double x_min() const { return x_min_; }
    int octaves() const { return octaves_; }
    int points_per_octave() const { return m_; }
    std::size_t size() const { return static_cast<std::size_t>(octaves_) * m_ + 1; }

    /// Node position x_j.
    double node(std::size_t j) const;
    /// Natural log of x_j.
    double log_node(std::size_t j) const;
    /// Log-spacing between adjacent nodes, log(2)/m.
    double step() const { return step_; }

    /// Fractional index of a position (log-linear); does not range-check.
    double index_of(double x) const;

    /// Default laboratory grid: x_min = 2^-20, 40 octaves, 64 points per
    /// octave. Wide enough that the eigenfunction tails vanish at both ends.
    static LogGrid desk_default();

private:
    double x_min_;
    int octaves_;
    int m_;
    double step_;
    double log_x_min_;
};

/// Index window [lo, hi] (inclusive) on which grid-function values are
/// trusted. Evolution operations shrink windows and never grow them.
struct IndexWindow {
    std::size_t lo = 0;
    std::size_t hi = 0;
    bool contains(std::size_t j) const { return j >= lo && j <= hi; }
    std::size_t count() const { return hi >= lo ? hi - lo + 1 : 0; }
};

/// Result of a quadrature: the value plus a cheap bound on what the
/// truncated tails may still hold. tail_ok is false when the integrand was
/// not negligible at the window ends.
struct IntegralResult {
    double value = 0.0;
    double tail_bound = 0.0;
    bool tail_ok = true;
    operator double() const { return value; }
};

/// A function sampled on a LogGrid, valid on an index window.
class GridFunction {
public:
    GridFunction(LogGrid grid, std::vector<double> values, IndexWindow window);
    GridFunction(LogGrid grid, const std::function<double(double)>& f);
    GridFunction(LogGrid grid, const std::function<double(double)>& f, IndexWindow window);

    const LogGrid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    const IndexWindow& window() const { return window_; }
    void shrink_window_to(IndexWindow w);

    double value_at(std::size_t j) const { return values_[j]; }

private:
    LogGrid grid_;
    std::vector<double> values_;
    IndexWindow window_;
};

/// Monotone cubic interpolation in log x; exact at nodes. Queries outside
/// the valid window throw window_error (extrapolation is never silent).
double interpolate(const GridFunction& g, double x);

/// Monotone-limited interpolation at a fractional index; helper shared with
/// the evolution kernels. u must lie within [window.lo, window.hi].
double interpolate_at_index(const std::vector<double>& values, const IndexWindow& w, double u);

struct IntegrateOptions {
    bool richardson = false;      // one-level Richardson refinement
    double tail_tolerance = 1e-12; // relative endpoint-integrand tolerance
};

/// Composite trapezoid in the log variable of g(x)*weight(x) dx over the
/// valid window. The integrand is assumed to decay at the window ends;
/// endpoint magnitudes are reported through the tail bound.
IntegralResult integrate(const GridFunction& g, const std::function<double(double)>& weight,
                         const IntegrateOptions& opts = {});

/// Same quadrature against the oscillatory kernel e^{-i*omega*log x}:
/// returns a complex moment. Internally refines the sampling so the
/// oscillation stays well above Nyquist before applying the trapezoid rule.
std::complex<double> oscillatory_moment(const GridFunction& g,
                                        const std::function<double(double)>& weight,
                                        double omega);

/// f(x) -> f(x/2) by exact index shift; the window loses m indices on the
/// left and no interpolation error is introduced.
GridFunction shift_halve(const GridFunction& g);

/// CSV serialization: comment header with grid metadata, then x,value rows
/// at 17 significant digits.
void write_csv(const GridFunction& g, const std::string& path);

} // namespace mitosim
