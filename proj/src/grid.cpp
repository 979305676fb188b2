#include "mitosim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mitosim/errors.hpp"

namespace mitosim {

LogGrid::LogGrid(double x_min, int octaves, int points_per_octave)
    : x_min_(x_min), octaves_(octaves), m_(points_per_octave) {
    if (!(x_min > 0.0)) throw config_error("grid x_min must be positive");
    if (octaves < 1 || points_per_octave < 1)
        throw config_error("grid needs at least one octave and one point per octave");
    step_ = std::log(2.0) / m_;
    log_x_min_ = std::log(x_min_);
}

double LogGrid::node(std::size_t j) const { return std::exp(log_node(j)); }

double LogGrid::log_node(std::size_t j) const { return log_x_min_ + static_cast<double>(j) * step_; }

double LogGrid::index_of(double x) const { return (std::log(x) - log_x_min_) / step_; }

LogGrid LogGrid::desk_default() { return LogGrid(std::ldexp(1.0, -20), 40, 64); }

GridFunction::GridFunction(LogGrid grid, std::vector<double> values, IndexWindow window)
    : grid_(grid), values_(std::move(values)), window_(window) {
    if (values_.size() != grid_.size())
        throw config_error("grid-function value count must match the grid");
    if (window_.hi >= grid_.size() || window_.lo > window_.hi)
        throw config_error("grid-function window out of range");
}

GridFunction::GridFunction(LogGrid grid, const std::function<double(double)>& f)
    : GridFunction(grid, f, IndexWindow{0, grid.size() - 1}) {}

GridFunction::GridFunction(LogGrid grid, const std::function<double(double)>& f, IndexWindow window)
    : grid_(grid), window_(window) {
    values_.assign(grid_.size(), 0.0);
    for (std::size_t j = window.lo; j <= window.hi; ++j) values_[j] = f(grid_.node(j));
}

void GridFunction::shrink_window_to(IndexWindow w) {
    if (w.lo < window_.lo || w.hi > window_.hi)
        throw window_error("grid-function windows never grow");
    window_ = w;
}

namespace {

// Fritsch-Carlson style limited slope at node j from neighboring secants.
double limited_slope(const std::vector<double>& v, std::size_t j, std::size_t lo, std::size_t hi) {
    if (j == lo) return v[j + 1] - v[j];
    if (j == hi) return v[j] - v[j - 1];
    const double dl = v[j] - v[j - 1];
    const double dr = v[j + 1] - v[j];
    if (dl * dr <= 0.0) return 0.0;
    // harmonic mean keeps the interpolant monotone on monotone data
    return 2.0 * dl * dr / (dl + dr);
}

} // namespace

double interpolate_at_index(const std::vector<double>& values, const IndexWindow& w, double u) {
    const double eps = 1e-9;
    if (u < static_cast<double>(w.lo) - eps || u > static_cast<double>(w.hi) + eps)
        throw window_error("interpolation query outside the valid window");
    u = std::clamp(u, static_cast<double>(w.lo), static_cast<double>(w.hi));
    std::size_t j = static_cast<std::size_t>(std::floor(u));
    if (j >= w.hi) j = w.hi - (w.hi > w.lo ? 1 : 0);
    const double t = u - static_cast<double>(j);
    if (t == 0.0) return values[j];
    if (w.count() < 2) return values[j];
    const double y0 = values[j], y1 = values[j + 1];
    const double d0 = limited_slope(values, j, w.lo, w.hi);
    const double d1 = limited_slope(values, j + 1, w.lo, w.hi);
    const double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
    const double h10 = t * (1.0 - t) * (1.0 - t);
    const double h01 = t * t * (3.0 - 2.0 * t);
    const double h11 = t * t * (t - 1.0);
    return h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
}

double interpolate(const GridFunction& g, double x) {
    return interpolate_at_index(g.values(), g.window(), g.grid().index_of(x));
}

namespace {

double trapezoid_log(const GridFunction& g, const std::function<double(double)>& weight,
                     std::size_t stride, double* max_endpoint, double* max_abs) {
    const auto& w = g.window();
    const double h = g.grid().step() * static_cast<double>(stride);
    double acc = 0.0, c = 0.0; // Kahan
    double prev = 0.0;
    bool first = true;
    double mx = 0.0;
    double first_val = 0.0, last_val = 0.0;
    for (std::size_t j = w.lo; j <= w.hi; j += stride) {
        const double x = g.grid().node(j);
        const double f = g.value_at(j) * weight(x) * x; // dx = x * d(log x)
        mx = std::max(mx, std::abs(f));
        if (first) {
            first_val = f;
            first = false;
        } else {
            const double term = 0.5 * h * (prev + f);
            const double y = term - c;
            const double t = acc + y;
            c = (t - acc) - y;
            acc = t;
        }
        prev = f;
        last_val = f;
        if (j + stride > w.hi) break;
    }
    if (max_endpoint) *max_endpoint = std::max(std::abs(first_val), std::abs(last_val));
    if (max_abs) *max_abs = mx;
    return acc;
}

} // namespace

IntegralResult integrate(const GridFunction& g, const std::function<double(double)>& weight,
                         const IntegrateOptions& opts) {
    IntegralResult r;
    double endpoint = 0.0, mx = 0.0;
    const double fine = trapezoid_log(g, weight, 1, &endpoint, &mx);
    if (opts.richardson && g.window().count() >= 5) {
        const double coarse = trapezoid_log(g, weight, 2, nullptr, nullptr);
        r.value = fine + (fine - coarse) / 3.0;
    } else {
        r.value = fine;
    }
    // crude tail estimate: endpoint magnitude times one octave of measure
    r.tail_bound = endpoint * std::log(2.0);
    r.tail_ok = (mx == 0.0) || (endpoint <= opts.tail_tolerance * mx);
    return r;
}

std::complex<double> oscillatory_moment(const GridFunction& g,
                                        const std::function<double(double)>& weight,
                                        double omega) {
    const auto& w = g.window();
    const LogGrid& grid = g.grid();
    const double h = grid.step();
    // refine so the phase advances by at most ~2*pi/8 per sample
    int refine = 1;
    while (std::abs(omega) * h / refine > 0.7853981633974483 && refine < 64) refine *= 2;
    const double hf = h / refine;
    // smooth part q(s) = g(x) * weight(x) * x, interpolated onto the fine grid
    std::vector<double> q(w.count());
    for (std::size_t j = w.lo; j <= w.hi; ++j) {
        const double x = grid.node(j);
        q[j - w.lo] = g.value_at(j) * weight(x) * x;
    }
    IndexWindow qw{0, q.size() - 1};
    double re = 0.0, im = 0.0, cre = 0.0, cim = 0.0;
    const std::size_t n_fine = (q.size() - 1) * static_cast<std::size_t>(refine);
    double prev_re = 0.0, prev_im = 0.0;
    for (std::size_t i = 0; i <= n_fine; ++i) {
        const double u = static_cast<double>(i) / refine;
        const double qi = refine == 1 ? q[i] : interpolate_at_index(q, qw, u);
        const double s = grid.log_node(w.lo) + u * h;
        const double c = std::cos(omega * s), sn = std::sin(omega * s);
        const double fre = qi * c, fim = -qi * sn; // e^{-i omega s}
        if (i > 0) {
            double term = 0.5 * hf * (prev_re + fre);
            double y = term - cre;
            double t = re + y;
            cre = (t - re) - y;
            re = t;
            term = 0.5 * hf * (prev_im + fim);
            y = term - cim;
            t = im + y;
            cim = (t - im) - y;
            im = t;
        }
        prev_re = fre;
        prev_im = fim;
    }
    return {re, im};
}

GridFunction shift_halve(const GridFunction& g) {
    const std::size_t m = static_cast<std::size_t>(g.grid().points_per_octave());
    if (g.grid().octaves() < 1) throw window_error("shift_halve needs at least one octave");
    std::vector<double> out(g.grid().size(), 0.0);
    const auto& w = g.window();
    IndexWindow nw{w.lo + m, w.hi};
    if (nw.lo > nw.hi) throw window_error("window too narrow for a half-shift");
    for (std::size_t j = nw.lo; j <= nw.hi; ++j) out[j] = g.value_at(j - m);
    return GridFunction(g.grid(), std::move(out), nw);
}

void write_csv(const GridFunction& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open output file: " + path);
    out << "# log-grid x_min=" << std::setprecision(17) << g.grid().x_min()
        << " octaves=" << g.grid().octaves() << " points_per_octave="
        << g.grid().points_per_octave() << " window=[" << g.window().lo << ","
        << g.window().hi << "]\n";
    out << "x,value\n";
    out << std::setprecision(17);
    for (std::size_t j = g.window().lo; j <= g.window().hi; ++j)
        out << g.grid().node(j) << "," << g.value_at(j) << "\n";
}

} // namespace mitosim
