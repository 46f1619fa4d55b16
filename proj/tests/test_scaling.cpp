#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include <markov/scaling.hpp>

using namespace markov;

namespace {

std::vector<DecayPoint> exp_points(double xi, double amp, std::vector<double> rs, double rel_err = 0.0) {
    std::vector<DecayPoint> out;
    for (double r : rs) {
        double v = amp * std::exp(-r / xi);
        out.push_back({r, v, rel_err * v});
    }
    return out;
}

// Reference weighted least squares via the normal equations.
struct RefFit {
    double slope, intercept, slope_se;
};

RefFit reference_wls(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& s) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        A(i, 0) = 1.0 / s[i];
        A(i, 1) = x[i] / s[i];
        b(i) = y[i] / s[i];
    }
    Eigen::Matrix2d N = A.transpose() * A;
    Eigen::Vector2d c = N.ldlt().solve(A.transpose() * b);
    Eigen::Matrix2d cov = N.inverse();
    return {c(1), c(0), std::sqrt(cov(1, 1))};
}

double phi(double u) { return 0.3 * std::exp(-std::pow(u / 0.06, 2)) * (1.0 + 3.0 * u) + 0.02; }

std::vector<CollapsePoint> synthetic_collapse(double pc, double nu, double alpha) {
    std::vector<CollapsePoint> pts;
    for (int r = 1; r <= 5; ++r)
        for (int k = 0; k <= 16; ++k) {
            double p = 0.07 + 0.005 * k;
            double v = std::pow(r, -alpha) * phi((p - pc) * std::pow(r, 1.0 / nu));
            pts.push_back({r, p, v, 0.01 * v});
        }
    return pts;
}

}  // namespace

TEST(MarkovLength, ExactExponentialData) {
    auto f = fit_markov_length(exp_points(2.0, 0.7, {1, 2, 3, 4, 5}));
    EXPECT_NEAR(f.scale, 2.0, 1e-10);
    EXPECT_NEAR(f.amplitude, 0.7, 1e-10);
    EXPECT_LT(f.stderr_, 1e-10);
    EXPECT_TRUE(f.dropped_r.empty());
}

TEST(PowerLaw, ExactPowerLawData) {
    std::vector<DecayPoint> pts;
    for (double r : {1.0, 2.0, 3.0, 4.0}) pts.push_back({r, 0.4 * std::pow(r, -1.1), 0.0});
    auto f = fit_power_law(pts);
    EXPECT_NEAR(f.scale, 1.1, 1e-12);
    EXPECT_NEAR(f.amplitude, 0.4, 1e-12);
}

TEST(MarkovLength, AgreesWithNormalEquations) {
    std::vector<DecayPoint> pts;
    std::vector<double> x, y, s;
    const double noise[] = {0.03, -0.02, 0.05, -0.04, 0.01, 0.02};
    for (int i = 0; i < 6; ++i) {
        double r = i + 2, v = 0.5 * std::exp(-r / 1.7) * (1.0 + noise[i]), se = 0.02 * v * (1 + 0.3 * i);
        pts.push_back({r, v, se});
        x.push_back(r);
        y.push_back(std::log(v));
        s.push_back(se / v);
    }
    auto ref = reference_wls(x, y, s);
    auto f = fit_markov_length(pts);
    EXPECT_NEAR(f.scale, -1.0 / ref.slope, 1e-12);
    EXPECT_NEAR(f.stderr_, ref.slope_se / (ref.slope * ref.slope), 1e-12);
    EXPECT_NEAR(std::log(f.amplitude), ref.intercept, 1e-12);

    for (auto& xi : x) xi = std::log(xi);
    auto ref_pl = reference_wls(x, y, s);
    auto g = fit_power_law(pts);
    EXPECT_NEAR(g.scale, -ref_pl.slope, 1e-12);
    EXPECT_NEAR(g.stderr_, ref_pl.slope_se, 1e-12);
}

TEST(MarkovLength, CoverageOfQuotedError) {
    const double xi0 = 2.5, rel = 0.04;
    std::mt19937_64 gen(11);
    std::normal_distribution<double> nd;
    int covered = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        std::vector<DecayPoint> pts;
        for (int r = 2; r <= 8; ++r) {
            double v = std::exp(-r / xi0);
            pts.push_back({double(r), v * (1.0 + rel * nd(gen)), rel * v});
        }
        auto f = fit_markov_length(pts);
        if (std::abs(f.scale - xi0) <= 1.96 * f.stderr_) ++covered;
    }
    // Binomial(200, 0.95) has standard deviation ~3.1.
    EXPECT_GE(covered, 180) << covered << "/" << trials;
    EXPECT_LE(covered, 199);
}

TEST(MarkovLength, MonotoneInGeneratingLength) {
    const double noise[] = {0.02, -0.01, 0.015, -0.02, 0.01};
    double prev = 0.0;
    for (int k = 0; k < 10; ++k) {
        double xi0 = 0.8 + 0.4 * k;
        auto pts = exp_points(xi0, 1.0, {2, 3, 4, 5, 6}, 0.02);
        for (int i = 0; i < 5; ++i) pts[i].value *= 1.0 + noise[i];
        double xi = fit_markov_length(pts).scale;
        EXPECT_GT(xi, prev);
        prev = xi;
    }
}

TEST(MarkovLength, DropsNonpositivePointsAndRefusesTooFew) {
    auto pts = exp_points(1.5, 1.0, {1, 2, 3, 4}, 0.01);
    pts.push_back({5, -1e-4, 2e-4});
    auto f = fit_markov_length(pts);
    ASSERT_EQ(f.dropped_r.size(), 1u);
    EXPECT_EQ(f.dropped_r[0], 5.0);
    EXPECT_EQ(f.n_used, 4);
    pts = exp_points(1.5, 1.0, {1, 2}, 0.01);
    pts.push_back({3, 0.0, 1e-3});
    EXPECT_THROW(fit_markov_length(pts), std::invalid_argument);
}

TEST(ModelComparison, ExponentialDataPrefersExponentialFit) {
    auto pts = exp_points(1.2, 0.5, {2, 3, 4, 5, 6}, 0.03);
    EXPECT_LT(fit_markov_length(pts).chi2, 1e-20);
    EXPECT_GT(fit_power_law(pts).chi2, 1.0);
}

TEST(Collapse, SyntheticRoundTrip) {
    auto pts = synthetic_collapse(0.11, 1.8, 1.1);
    CollapseRanges box;
    auto c = collapse_fit(pts, box);
    EXPECT_TRUE(c.reliable);
    EXPECT_NEAR(c.p_c, 0.11, 0.05 * 0.11);
    EXPECT_NEAR(c.nu, 1.8, 0.05 * 1.8);
    EXPECT_NEAR(c.alpha, 1.1, 0.05 * 1.1);
}

TEST(Collapse, QualityInvariantUnderReorderingAndDuplicates) {
    auto pts = synthetic_collapse(0.11, 1.8, 1.1);
    auto q0 = collapse_quality(canonical_points(pts), 0.105, 1.6, 1.0).quality;
    auto shuffled = pts;
    std::mt19937 gen(3);
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    shuffled.push_back(pts[4]);
    shuffled.push_back(pts[20]);
    EXPECT_EQ(collapse_quality(canonical_points(shuffled), 0.105, 1.6, 1.0).quality, q0);
    CollapseRanges box;
    box.grid = 7;
    auto a = collapse_fit(pts, box), b = collapse_fit(shuffled, box);
    EXPECT_EQ(a.p_c, b.p_c);
    EXPECT_EQ(a.nu, b.nu);
    EXPECT_EQ(a.alpha, b.alpha);
}

TEST(Collapse, RefusesDegenerateInput) {
    auto pts = synthetic_collapse(0.11, 1.8, 1.1);
    std::vector<CollapsePoint> one_r;
    for (const auto& p : pts)
        if (p.r == 2) one_r.push_back(p);
    EXPECT_THROW(collapse_fit(one_r), std::invalid_argument);
    CollapseRanges bad;
    bad.nu = {2.0, 2.0};
    EXPECT_THROW(collapse_fit(pts, bad), std::invalid_argument);
}

TEST(Collapse, DisjointSupportsAreUnreliable) {
    std::vector<CollapsePoint> pts;
    for (int k = 0; k < 5; ++k) pts.push_back({1, 0.01 + 0.001 * k, 0.1, 0.001});
    for (int k = 0; k < 5; ++k) pts.push_back({2, 0.4 + 0.001 * k, 0.1, 0.001});
    auto q = collapse_quality(canonical_points(pts), 0.11, 1.0, 1.0);
    EXPECT_FALSE(q.reliable);
    EXPECT_EQ(q.n_compared, 0);
}
