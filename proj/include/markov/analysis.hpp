#pragma once

// Reductions of a CMI sweep table: decay of CMI with r at fixed p, the
// location of the CMI peak in p, and the points fed to the collapse fit.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "scaling.hpp"
#include "sweep.hpp"

namespace markov {

inline std::vector<SweepRecord> ok_records(const std::vector<SweepRecord>& recs) {
    std::vector<SweepRecord> out;
    for (const auto& r : recs)
        if (r.ok()) out.push_back(r);
    return out;
}

inline std::vector<double> sweep_p_values(const std::vector<SweepRecord>& recs) {
    std::set<double> ps;
    for (const auto& r : recs)
        if (r.ok()) ps.insert(r.p);
    return {ps.begin(), ps.end()};
}

/// Points at probability p with r >= min_r, sorted by r.
inline std::vector<DecayPoint> decay_points(const std::vector<SweepRecord>& recs, double p, int min_r = 1) {
    std::vector<DecayPoint> pts;
    for (const auto& r : recs)
        if (r.ok() && r.p == p && r.r >= min_r) pts.push_back({static_cast<double>(r.r), r.cmi, r.stderr_});
    std::sort(pts.begin(), pts.end(), [](const DecayPoint& a, const DecayPoint& b) { return a.r < b.r; });
    return pts;
}

struct DecayComparison {
    double p = 0.0;
    std::vector<DecayPoint> points;  // every r, for the monotonicity check
    bool strictly_decreasing = false;
    bool fitted = false;
    DecayFit exponential, power_law;
    std::string error;
    bool exponential_preferred() const { return fitted && exponential.chi2 < power_law.chi2; }
};

/// Monotonicity over all r; both fits over r >= min_r, compared by chi^2
/// (each has two parameters).
inline DecayComparison compare_decay(const std::vector<SweepRecord>& recs, double p, int min_r) {
    DecayComparison c;
    c.p = p;
    c.points = decay_points(recs, p, 1);
    c.strictly_decreasing = c.points.size() >= 2;
    for (std::size_t k = 1; k < c.points.size(); ++k) c.strictly_decreasing = c.strictly_decreasing && c.points[k].value < c.points[k - 1].value;
    try {
        auto pts = decay_points(recs, p, min_r);
        c.exponential = fit_markov_length(pts);
        c.power_law = fit_power_law(pts);
        c.fitted = true;
    } catch (const std::exception& e) {
        c.error = e.what();
    }
    return c;
}

struct PeakLocation {
    int r = 0;
    double p = 0.0, value = 0.0, stderr_ = 0.0;
};

/// argmax over p of the CMI at fixed r.
inline PeakLocation cmi_peak(const std::vector<SweepRecord>& recs, int r) {
    PeakLocation best;
    best.r = r;
    bool any = false;
    for (const auto& rec : recs)
        if (rec.ok() && rec.r == r && (!any || rec.cmi > best.value)) {
            best.p = rec.p;
            best.value = rec.cmi;
            best.stderr_ = rec.stderr_;
            any = true;
        }
    if (!any) throw std::invalid_argument("cmi_peak: no completed cells at r=" + std::to_string(r));
    return best;
}

inline std::vector<CollapsePoint> collapse_points(const std::vector<SweepRecord>& recs, double p_lo, double p_hi, int min_r) {
    std::vector<CollapsePoint> out;
    for (const auto& r : recs)
        if (r.ok() && r.r >= min_r && r.p >= p_lo && r.p <= p_hi && r.cmi > 0) out.push_back({r.r, r.p, r.cmi, r.stderr_});
    return out;
}

}  // namespace markov
