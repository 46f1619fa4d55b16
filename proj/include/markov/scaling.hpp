#pragma once

// Fits of CMI-versus-r curves and the finite-size collapse
//
//   I(p, r) = r^-alpha * Phi((p - p_c) r^(1/nu)).
//
// Exponential and power-law fits are weighted least squares on log I. The
// collapse quality is a leave-one-r-out residual: each r's rescaled points are
// compared with a monotone (Steffen) cubic spline through the other r values.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_fit.h>
#include <gsl/gsl_interp.h>
#include <gsl/gsl_multimin.h>

namespace markov {

struct DecayPoint {
    double r = 0.0;
    double value = 0.0;
    double stderr_ = 0.0;
};

struct LineFit {
    double slope = 0.0, intercept = 0.0;
    double slope_stderr = 0.0, intercept_stderr = 0.0;
    double chi2 = 0.0;  // weighted residual sum of squares
    int n = 0;
};

/// Weighted straight-line fit. With all sigma > 0 the errors are taken as
/// absolute; otherwise the fit is unweighted and errors come from the scatter.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& sigma) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n || sigma.size() != n) throw std::invalid_argument("fit_line: need >= 2 matching points");
    const bool weighted = std::all_of(sigma.begin(), sigma.end(), [](double s) { return s > 0.0; });
    LineFit f;
    f.n = static_cast<int>(n);
    double c00, c01, c11;
    if (weighted) {
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / (sigma[i] * sigma[i]);
        gsl_fit_wlinear(x.data(), 1, w.data(), 1, y.data(), 1, n, &f.intercept, &f.slope, &c00, &c01, &c11, &f.chi2);
    } else {
        gsl_fit_linear(x.data(), 1, y.data(), 1, n, &f.intercept, &f.slope, &c00, &c01, &c11, &f.chi2);
        if (n == 2) c00 = c11 = 0.0;
    }
    f.intercept_stderr = std::sqrt(std::max(0.0, c00));
    f.slope_stderr = std::sqrt(std::max(0.0, c11));
    return f;
}

struct DecayFit {
    double scale = 0.0;         // xi for the exponential fit, alpha for the power law
    double stderr_ = 0.0;
    double amplitude = 0.0;     // prefactor, I ~ amplitude * e^(-r/xi) or amplitude * r^-alpha
    double chi2 = 0.0;
    int n_used = 0;
    std::vector<double> dropped_r;  // points with nonpositive CMI
};

namespace detail {

inline LineFit fit_log(const std::vector<DecayPoint>& pts, bool log_r, std::vector<double>& dropped) {
    std::vector<double> x, y, s;
    std::vector<double> seen;
    for (const auto& pt : pts) {
        if (!(pt.value > 0.0)) {
            dropped.push_back(pt.r);
            continue;
        }
        if (log_r && pt.r <= 0.0) throw std::invalid_argument("fit_power_law: r must be positive");
        x.push_back(log_r ? std::log(pt.r) : pt.r);
        y.push_back(std::log(pt.value));
        s.push_back(pt.stderr_ / pt.value);
        if (std::find(seen.begin(), seen.end(), pt.r) == seen.end()) seen.push_back(pt.r);
    }
    if (seen.size() < 3)
        throw std::invalid_argument("decay fit needs >= 3 distinct r with positive CMI, got " + std::to_string(seen.size()));
    return fit_line(x, y, s);
}

}  // namespace detail

/// I ~ e^(-r/xi): slope of ln I against r is -1/xi.
inline DecayFit fit_markov_length(const std::vector<DecayPoint>& pts) {
    DecayFit out;
    auto f = detail::fit_log(pts, false, out.dropped_r);
    if (!(f.slope < 0.0)) throw std::runtime_error("fit_markov_length: CMI does not decay (slope " + std::to_string(f.slope) + ")");
    out.scale = -1.0 / f.slope;
    out.stderr_ = f.slope_stderr / (f.slope * f.slope);
    out.amplitude = std::exp(f.intercept);
    out.chi2 = f.chi2;
    out.n_used = f.n;
    return out;
}

/// I ~ r^-alpha.
inline DecayFit fit_power_law(const std::vector<DecayPoint>& pts) {
    DecayFit out;
    auto f = detail::fit_log(pts, true, out.dropped_r);
    out.scale = -f.slope;
    out.stderr_ = f.slope_stderr;
    out.amplitude = std::exp(f.intercept);
    out.chi2 = f.chi2;
    out.n_used = f.n;
    return out;
}

// ---------------------------------------------------------------------------
// Collapse

struct CollapsePoint {
    int r = 0;
    double p = 0.0;
    double value = 0.0;
    double stderr_ = 0.0;
    auto key() const { return std::tie(r, p, value, stderr_); }
    bool operator<(const CollapsePoint& o) const { return key() < o.key(); }
    bool operator==(const CollapsePoint& o) const { return key() == o.key(); }
};

struct CollapseParams {
    double p_c = 0.0, nu = 1.0, alpha = 1.0;
    double quality = std::numeric_limits<double>::infinity();
    int n_compared = 0;   // points that fell inside another r's support
    bool reliable = false;
};

struct CollapseRanges {
    std::array<double, 2> p_c{0.08, 0.14};
    std::array<double, 2> nu{0.5, 4.0};
    std::array<double, 2> alpha{0.0, 3.0};
    int grid = 21;
};

/// Sorted, exact duplicates removed. Collapse results depend only on this.
inline std::vector<CollapsePoint> canonical_points(std::vector<CollapsePoint> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

struct ScaledPoint {
    int r;
    double x, y, sigma;
};

inline std::vector<ScaledPoint> collapse_transform(const std::vector<CollapsePoint>& pts, double p_c, double nu, double alpha) {
    std::vector<ScaledPoint> out;
    out.reserve(pts.size());
    for (const auto& pt : pts) {
        const double r = pt.r, ra = std::pow(r, alpha);
        out.push_back({pt.r, (pt.p - p_c) * std::pow(r, 1.0 / nu), ra * pt.value, ra * pt.stderr_});
    }
    return out;
}

namespace detail {

// Relative error floor so noiseless (synthetic) data still has finite weights.
inline constexpr double kCollapseRelFloor = 1e-3;

/// Monotone cubic through (x, y); repeated x are averaged.
class MasterCurve {
public:
    MasterCurve(std::vector<std::pair<double, double>> xy) {
        std::sort(xy.begin(), xy.end());
        for (std::size_t i = 0; i < xy.size();) {
            std::size_t j = i;
            double s = 0.0;
            while (j < xy.size() && xy[j].first == xy[i].first) s += xy[j++].second;
            x_.push_back(xy[i].first);
            y_.push_back(s / static_cast<double>(j - i));
            i = j;
        }
        if (x_.size() >= 3) {
            interp_ = gsl_interp_alloc(gsl_interp_steffen, x_.size());
            gsl_interp_init(interp_, x_.data(), y_.data(), x_.size());
        } else if (x_.size() == 2) {
            interp_ = gsl_interp_alloc(gsl_interp_linear, 2);
            gsl_interp_init(interp_, x_.data(), y_.data(), 2);
        }
    }
    ~MasterCurve() {
        if (interp_) gsl_interp_free(interp_);
    }
    MasterCurve(const MasterCurve&) = delete;
    MasterCurve& operator=(const MasterCurve&) = delete;

    bool covers(double x) const { return interp_ && x >= x_.front() && x <= x_.back(); }
    double operator()(double x) const { return gsl_interp_eval(interp_, x_.data(), y_.data(), x, nullptr); }

private:
    std::vector<double> x_, y_;
    gsl_interp* interp_ = nullptr;
};

}  // namespace detail

/// Mean squared normalized deviation of each r's points from the master curve
/// of the remaining r values. Infinite when no point overlaps another r.
inline CollapseParams collapse_quality(const std::vector<CollapsePoint>& canon, double p_c, double nu, double alpha) {
    CollapseParams out{p_c, nu, alpha};
    if (!(nu > 0.0)) return out;
    auto sp = collapse_transform(canon, p_c, nu, alpha);
    std::vector<int> rs;
    for (const auto& s : sp)
        if (std::find(rs.begin(), rs.end(), s.r) == rs.end()) rs.push_back(s.r);
    double sum = 0.0;
    int n = 0;
    for (int r : rs) {
        std::vector<std::pair<double, double>> others;
        for (const auto& s : sp)
            if (s.r != r) others.emplace_back(s.x, s.y);
        detail::MasterCurve phi(std::move(others));
        for (const auto& s : sp) {
            if (s.r != r || !phi.covers(s.x)) continue;
            const double d = s.y - phi(s.x);
            const double floor = detail::kCollapseRelFloor * std::abs(s.y);
            const double var = s.sigma * s.sigma + floor * floor;
            if (var <= 0.0) continue;
            sum += d * d / var;
            ++n;
        }
    }
    out.n_compared = n;
    if (n > 0) out.quality = sum / n;
    out.reliable = n >= static_cast<int>(canon.size()) / 2;
    return out;
}

namespace detail {

struct NmData {
    const std::vector<CollapsePoint>* pts;
    CollapseRanges box;
};

inline double nm_objective(const gsl_vector* v, void* params) {
    const auto* d = static_cast<const NmData*>(params);
    const double pc = gsl_vector_get(v, 0), nu = gsl_vector_get(v, 1), al = gsl_vector_get(v, 2);
    auto inside = [](double t, const std::array<double, 2>& b) { return t >= b[0] && t <= b[1]; };
    if (!inside(pc, d->box.p_c) || !inside(nu, d->box.nu) || !inside(al, d->box.alpha)) return 1e300;
    const double q = collapse_quality(*d->pts, pc, nu, al).quality;
    return std::isfinite(q) ? q : 1e300;
}

}  // namespace detail

/// Grid search over the box followed by Nelder-Mead from the best grid point.
inline CollapseParams collapse_fit(const std::vector<CollapsePoint>& points, const CollapseRanges& box = {}) {
    for (const auto* b : {&box.p_c, &box.nu, &box.alpha})
        if (!((*b)[0] < (*b)[1])) throw std::invalid_argument("collapse_fit: degenerate search range");
    if (box.nu[0] <= 0.0) throw std::invalid_argument("collapse_fit: nu range must be positive");
    if (box.grid < 3) throw std::invalid_argument("collapse_fit: grid needs >= 3 points per axis");
    const auto pts = canonical_points(points);
    std::vector<int> rs;
    std::vector<double> ps;
    for (const auto& pt : pts) {
        if (std::find(rs.begin(), rs.end(), pt.r) == rs.end()) rs.push_back(pt.r);
        if (std::find(ps.begin(), ps.end(), pt.p) == ps.end()) ps.push_back(pt.p);
    }
    if (rs.size() < 2) throw std::invalid_argument("collapse_fit: need >= 2 distinct r");
    if (ps.size() < 5) throw std::invalid_argument("collapse_fit: need >= 5 distinct p");

    auto axis = [&](const std::array<double, 2>& b, int k) { return b[0] + (b[1] - b[0]) * k / (box.grid - 1); };
    CollapseParams best;
    for (int i = 0; i < box.grid; ++i)
        for (int j = 0; j < box.grid; ++j)
            for (int k = 0; k < box.grid; ++k) {
                auto q = collapse_quality(pts, axis(box.p_c, i), axis(box.nu, j), axis(box.alpha, k));
                if (q.quality < best.quality) best = q;
            }
    if (!std::isfinite(best.quality)) return best;

    detail::NmData data{&pts, box};
    gsl_multimin_function fn{&detail::nm_objective, 3, &data};
    gsl_vector* x = gsl_vector_alloc(3);
    gsl_vector* step = gsl_vector_alloc(3);
    gsl_vector_set(x, 0, best.p_c);
    gsl_vector_set(x, 1, best.nu);
    gsl_vector_set(x, 2, best.alpha);
    gsl_vector_set(step, 0, (box.p_c[1] - box.p_c[0]) / (box.grid - 1));
    gsl_vector_set(step, 1, (box.nu[1] - box.nu[0]) / (box.grid - 1));
    gsl_vector_set(step, 2, (box.alpha[1] - box.alpha[0]) / (box.grid - 1));
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    for (int it = 0; it < 2000; ++it) {
        if (gsl_multimin_fminimizer_iterate(s)) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-7) == GSL_SUCCESS) break;
    }
    const gsl_vector* xm = gsl_multimin_fminimizer_x(s);
    auto refined = collapse_quality(pts, gsl_vector_get(xm, 0), gsl_vector_get(xm, 1), gsl_vector_get(xm, 2));
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(x);
    gsl_vector_free(step);
    return refined.quality <= best.quality ? refined : best;
}

}  // namespace markov
