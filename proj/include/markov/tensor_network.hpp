#pragma once

// Syndrome probabilities Pr(m_Q) as a planar tensor network.
//
// The network lives on a rectangular frame of plaquettes covering the region.
// Every frame edge carries a weight vector: (1-p, p) for region edges and
// (1, 0) for frame edges outside the region, which pins them to "no error".
// Every plaquette is a parity tensor: interior plaquettes force the parity of
// their four edges to the queried anyon bit, hole plaquettes feed their
// parity into a chain bit that runs through the hole rows and is clamped to
// the hole parity at the end, and the remaining plaquettes are unconstrained.
//
// Row i of the frame is an MPO whose bond legs are the vertical edges and
// whose physical legs are the horizontal edges below and above the row. The
// chain bit rides on the bonds of hole rows and on the physical leg of the
// last column between consecutive hole rows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "lattice.hpp"
#include "linalg.hpp"
#include "noise.hpp"

namespace markov {

class PrecisionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Frame {
    int x0 = 0, y0 = 0, W = 0, H = 0;
};

namespace detail {

// Smallest cyclic interval [s, s+len) of columns such that every value in
// `closed` lies in [s, s+len) and every value in `open_end` lies in [s, s+len].
inline std::pair<int, int> min_cover(int L, const std::vector<int>& closed, const std::vector<int>& open_end) {
    for (int len = 1; len < L; ++len)
        for (int s = 0; s < L; ++s) {
            auto off = [&](int v) { return ((v - s) % L + L) % L; };
            bool ok = std::all_of(closed.begin(), closed.end(), [&](int v) { return off(v) < len; }) &&
                      std::all_of(open_end.begin(), open_end.end(), [&](int v) { return off(v) <= len; });
            if (ok) return {s, len};
        }
    throw std::invalid_argument("find_frame: region wraps around the torus");
}

}  // namespace detail

/// Smallest rectangle of plaquettes whose edges contain every region edge.
/// Regions that wind around the torus have no frame and are rejected.
inline Frame find_frame(const Lattice& lat, const std::vector<int>& edges) {
    if (edges.empty()) throw std::invalid_argument("find_frame: empty region");
    std::vector<int> hx, vx, hy, vy;
    for (int e : edges) {
        auto [x, y] = lat.edge_coords(e);
        if (lat.edge_kind(e) == EdgeKind::Horizontal) {
            hx.push_back(x);
            hy.push_back(y);
        } else {
            vx.push_back(x);
            vy.push_back(y);
        }
    }
    const int L = lat.size();
    auto [x0, W] = detail::min_cover(L, hx, vx);
    auto [y0, H] = detail::min_cover(L, vy, hy);
    return {x0, y0, W, H};
}

enum class PlaquetteKind : std::uint8_t { Free, Interior, Hole };

/// Geometry of one region's network, independent of the queried syndrome.
class RegionNetwork {
public:
    RegionNetwork(const Lattice& lat, const Region& q) : lat_(lat), region_(q) {
        frame_ = find_frame(lat, q.edges);
        const int W = frame_.W, H = frame_.H;
        auto mask = edge_mask(lat, q.edges);
        h_in_.assign(static_cast<std::size_t>((H + 1) * W), 0);
        v_in_.assign(static_cast<std::size_t>(H * (W + 1)), 0);
        std::size_t covered = 0;
        for (int i = 0; i <= H; ++i)
            for (int j = 0; j < W; ++j) {
                int e = lat.h(frame_.x0 + j, frame_.y0 + i);
                if (mask[static_cast<std::size_t>(e)]) {
                    h_in_[static_cast<std::size_t>(i * W + j)] = 1;
                    ++covered;
                }
            }
        for (int i = 0; i < H; ++i)
            for (int j = 0; j <= W; ++j) {
                int e = lat.v(frame_.x0 + j, frame_.y0 + i);
                if (mask[static_cast<std::size_t>(e)]) {
                    v_in_[static_cast<std::size_t>(i * (W + 1) + j)] = 1;
                    ++covered;
                }
            }
        if (covered != q.edges.size()) throw std::logic_error("RegionNetwork: frame does not cover the region");

        kind_.assign(static_cast<std::size_t>(W * H), PlaquetteKind::Free);
        flag_index_.assign(static_cast<std::size_t>(W * H), -1);
        for (std::size_t k = 0; k < q.plaquettes.size(); ++k) {
            int cell = cell_of(q.plaquettes[k]);
            if (cell < 0) throw std::logic_error("RegionNetwork: interior plaquette outside frame");
            kind_[static_cast<std::size_t>(cell)] = PlaquetteKind::Interior;
            flag_index_[static_cast<std::size_t>(cell)] = static_cast<int>(k);
        }
        for (int pq : q.hole) {
            int cell = cell_of(pq);
            if (cell < 0) throw std::invalid_argument("RegionNetwork: hole plaquette outside the region's frame");
            if (kind_[static_cast<std::size_t>(cell)] == PlaquetteKind::Interior)
                throw std::invalid_argument("RegionNetwork: plaquette is both interior and part of the hole");
            kind_[static_cast<std::size_t>(cell)] = PlaquetteKind::Hole;
            const int row = cell / W;
            band_lo_ = band_lo_ < 0 ? row : std::min(band_lo_, row);
            band_hi_ = std::max(band_hi_, row);
        }
        build_parity_checks();
    }

    const Lattice& lattice() const { return lat_; }
    const Region& region() const { return region_; }
    const Frame& frame() const { return frame_; }
    int width() const { return frame_.W; }
    int height() const { return frame_.H; }
    bool h_in(int i, int j) const { return h_in_[static_cast<std::size_t>(i * frame_.W + j)] != 0; }
    bool v_in(int i, int j) const { return v_in_[static_cast<std::size_t>(i * (frame_.W + 1) + j)] != 0; }
    PlaquetteKind kind(int i, int j) const { return kind_[static_cast<std::size_t>(i * frame_.W + j)]; }
    int flag_index(int i, int j) const { return flag_index_[static_cast<std::size_t>(i * frame_.W + j)]; }
    int band_lo() const { return band_lo_; }
    int band_hi() const { return band_hi_; }

    /// True when m lies in the image of the boundary map restricted to the
    /// region, i.e. some error on the region's edges produces it.
    bool feasible(const AnyonConfig& m) const {
        auto obs = observables(m);
        for (const auto& k : checks_) {
            int s = 0;
            for (std::size_t t = 0; t < obs.size(); ++t) s ^= (k[t] & obs[t]);
            if (s) return false;
        }
        return true;
    }

    /// Observable vector: interior plaquette bits followed by the hole parity.
    std::vector<std::uint8_t> observables(const AnyonConfig& m) const {
        check_config(m);
        std::vector<std::uint8_t> obs(m.bits);
        if (region_.has_hole()) obs.push_back(*m.hole_parity);
        return obs;
    }

    void check_config(const AnyonConfig& m) const {
        if (m.bits.size() != region_.plaquettes.size())
            throw std::invalid_argument("anyon config has " + std::to_string(m.bits.size()) + " bits, region has " +
                                        std::to_string(region_.plaquettes.size()) + " interior plaquettes");
        if (region_.has_hole() != m.hole_parity.has_value())
            throw std::invalid_argument(region_.has_hole() ? "anyon config lacks the hole parity of an annular region"
                                                           : "anyon config has a hole parity but the region has no hole");
    }

private:
    int cell_of(int pq) const {
        auto [x, y] = lat_.plaquette_coords(pq);
        const int L = lat_.size();
        int j = ((x - frame_.x0) % L + L) % L, i = ((y - frame_.y0) % L + L) % L;
        if (j >= frame_.W || i >= frame_.H) return -1;
        return i * frame_.W + j;
    }

    // Left kernel of the observable-by-edge incidence matrix over GF(2).
    void build_parity_checks() {
        const std::size_t n_obs = region_.plaquettes.size() + (region_.has_hole() ? 1 : 0);
        const std::size_t n_e = region_.edges.size();
        std::vector<int> edge_pos(static_cast<std::size_t>(lat_.num_edges()), -1);
        for (std::size_t t = 0; t < n_e; ++t) edge_pos[static_cast<std::size_t>(region_.edges[t])] = static_cast<int>(t);
        // Augmented rows [A | I].
        std::vector<std::vector<std::uint8_t>> rows(n_obs, std::vector<std::uint8_t>(n_e + n_obs, 0));
        for (std::size_t k = 0; k < region_.plaquettes.size(); ++k)
            for (int e : lat_.plaquette_edges(region_.plaquettes[k])) rows[k][static_cast<std::size_t>(edge_pos[static_cast<std::size_t>(e)])] ^= 1;
        if (region_.has_hole()) {
            for (int pq : region_.hole)
                for (int e : lat_.plaquette_edges(pq)) {
                    int t = edge_pos[static_cast<std::size_t>(e)];
                    if (t >= 0) rows[n_obs - 1][static_cast<std::size_t>(t)] ^= 1;
                }
        }
        for (std::size_t k = 0; k < n_obs; ++k) rows[k][n_e + k] = 1;
        std::size_t rank = 0;
        for (std::size_t c = 0; c < n_e && rank < n_obs; ++c) {
            std::size_t piv = rank;
            while (piv < n_obs && !rows[piv][c]) ++piv;
            if (piv == n_obs) continue;
            std::swap(rows[rank], rows[piv]);
            for (std::size_t k = 0; k < n_obs; ++k)
                if (k != rank && rows[k][c])
                    for (std::size_t t = 0; t < rows[k].size(); ++t) rows[k][t] ^= rows[rank][t];
            ++rank;
        }
        for (std::size_t k = rank; k < n_obs; ++k) checks_.emplace_back(rows[k].begin() + static_cast<std::ptrdiff_t>(n_e), rows[k].end());
    }

    Lattice lat_;
    Region region_;
    Frame frame_;
    std::vector<std::uint8_t> h_in_, v_in_;
    std::vector<PlaquetteKind> kind_;
    std::vector<int> flag_index_;
    int band_lo_ = -1, band_hi_ = -1;
    std::vector<std::vector<std::uint8_t>> checks_;
};

/// A region network with a concrete syndrome and error rate.
struct TensorGrid {
    std::shared_ptr<const RegionNetwork> net;
    AnyonConfig m;
    double p = 0.0;
};

inline TensorGrid build_grid(std::shared_ptr<const RegionNetwork> net, AnyonConfig m, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("build_grid: p must lie in [0, 1]");
    net->check_config(m);
    return {std::move(net), std::move(m), p};
}

inline TensorGrid build_grid(const Lattice& lat, const Region& q, AnyonConfig m, double p) {
    if (!edges_connected(lat, q.edges)) throw std::invalid_argument("build_grid: region is not contiguous");
    return build_grid(std::make_shared<const RegionNetwork>(lat, q), std::move(m), p);
}

/// Brute-force sum over every error supported on the region. Independent of
/// the tensor representation; limited to 20 edges.
inline double contract_exact(const TensorGrid& g) {
    const Region& q = g.net->region();
    const Lattice& lat = g.net->lattice();
    const std::size_t n = q.edges.size();
    if (n > 20) throw std::invalid_argument("contract_exact: region has " + std::to_string(n) + " edges, limit is 20");
    const std::size_t n_obs = q.plaquettes.size() + (q.has_hole() ? 1 : 0);
    if (n_obs > 63) throw std::invalid_argument("contract_exact: too many observables");
    auto obs = g.net->observables(g.m);
    std::uint64_t target = 0;
    for (std::size_t t = 0; t < n_obs; ++t) target |= static_cast<std::uint64_t>(obs[t]) << t;
    std::vector<std::uint64_t> flip(n, 0);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t k = 0; k < q.plaquettes.size(); ++k) {
            auto es = lat.plaquette_edges(q.plaquettes[k]);
            if (std::count(es.begin(), es.end(), q.edges[t]) % 2) flip[t] ^= std::uint64_t{1} << k;
        }
        if (q.has_hole()) {
            int c = 0;
            for (int pq : q.hole) {
                auto es = lat.plaquette_edges(pq);
                c += static_cast<int>(std::count(es.begin(), es.end(), q.edges[t]));
            }
            if (c % 2) flip[t] ^= std::uint64_t{1} << (n_obs - 1);
        }
    }
    std::vector<double> wk(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
        wk[k] = std::pow(g.p, static_cast<double>(k)) * std::pow(1.0 - g.p, static_cast<double>(n - k));
    double total = 0.0;
    for (std::uint64_t e = 0; e < (std::uint64_t{1} << n); ++e) {
        std::uint64_t s = 0;
        for (std::size_t t = 0; t < n; ++t)
            if ((e >> t) & 1U) s ^= flip[t];
        if (s == target) total += wk[static_cast<std::size_t>(__builtin_popcountll(e))];
    }
    return total;
}

// ---------------------------------------------------------------------------
// Row operators and the boundary MPS.

struct MpoEntry {
    std::uint8_t l, dn, up, r;
    double w;
};

struct MpoSite {
    int dl = 1, ddn = 1, dup = 1, dr = 1;
    std::vector<MpoEntry> entries;

    bool operator==(const MpoSite& o) const {
        if (dl != o.dl || ddn != o.ddn || dup != o.dup || dr != o.dr || entries.size() != o.entries.size()) return false;
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto &a = entries[k], &b = o.entries[k];
            if (a.l != b.l || a.dn != b.dn || a.up != b.up || a.r != b.r || a.w != b.w) return false;
        }
        return true;
    }
};

using MpoRow = std::vector<MpoSite>;

inline MpoRow build_row(const TensorGrid& g, int i) {
    const RegionNetwork& net = *g.net;
    const int W = net.width(), H = net.height();
    const bool chain = net.band_lo() >= 0 && i >= net.band_lo() && i <= net.band_hi();
    const int pi = g.m.hole_parity.value_or(0);
    auto weight = [&](bool in, int b) { return in ? (b ? g.p : 1.0 - g.p) : (b ? 0.0 : 1.0); };
    MpoRow row(static_cast<std::size_t>(W));
    for (int j = 0; j < W; ++j) {
        MpoSite& s = row[static_cast<std::size_t>(j)];
        const bool has_left = j > 0, has_right = j < W - 1, has_dn = i > 0, has_up = i < H - 1;
        const bool last = j == W - 1;
        const bool chain_in = chain && last && i > net.band_lo();
        const bool chain_out = chain && last && i < net.band_hi();
        const int vdl = has_left ? 2 : 1, hdn = has_dn ? 2 : 1, hup = has_up ? 2 : 1;
        s.dl = vdl * (chain && has_left ? 2 : 1);
        s.dr = (has_right ? 2 : 1) * (chain && has_right ? 2 : 1);
        s.ddn = hdn * (chain_in ? 2 : 1);
        s.dup = hup * (chain_out ? 2 : 1);
        const PlaquetteKind kind = net.kind(i, j);
        const int flag = kind == PlaquetteKind::Interior ? g.m.bits[static_cast<std::size_t>(net.flag_index(i, j))] : 0;
        for (int bb = 0; bb < 2; ++bb)
            for (int bt = 0; bt < 2; ++bt)
                for (int bl = 0; bl < 2; ++bl)
                    for (int br = 0; br < 2; ++br)
                        for (int cl = 0; cl < (chain && has_left ? 2 : 1); ++cl)
                            for (int ci = 0; ci < (chain_in ? 2 : 1); ++ci) {
                                double w = weight(net.v_in(i, j), bl) * weight(net.h_in(i + 1, j), bt);
                                if (!has_dn) w *= weight(net.h_in(i, j), bb);
                                if (last) w *= weight(net.v_in(i, j + 1), br);
                                if (w == 0.0) continue;
                                const int par = bb ^ bt ^ bl ^ br;
                                if (kind == PlaquetteKind::Interior && par != flag) continue;
                                int cr = cl ^ (kind == PlaquetteKind::Hole ? par : 0);
                                int cu = 0;
                                if (chain && last) {
                                    int cout = cr ^ ci;
                                    if (i == net.band_hi()) {
                                        if (cout != pi) continue;
                                    } else {
                                        cu = cout;
                                    }
                                    cr = 0;
                                }
                                MpoEntry en;
                                en.l = static_cast<std::uint8_t>((has_left ? bl : 0) + vdl * cl);
                                en.dn = static_cast<std::uint8_t>((has_dn ? bb : 0) + hdn * ci);
                                en.up = static_cast<std::uint8_t>((has_up ? bt : 0) + hup * cu);
                                en.r = static_cast<std::uint8_t>(has_right ? br + 2 * cr : 0);
                                en.w = w;
                                s.entries.push_back(en);
                            }
    }
    return row;
}

/// Open-boundary MPS with a global log-scale factor. Site tensors are stored
/// column-major as (left, phys, right), so the same buffer reads as a
/// Dl x (d*Dr) or a (Dl*d) x Dr matrix.
class BoundaryMps {
public:
    struct Site {
        int Dl = 1, d = 1, Dr = 1;
        std::vector<double> a{1.0};
        double& at(int l, int s, int r) { return a[static_cast<std::size_t>(l + Dl * (s + d * r))]; }
        double at(int l, int s, int r) const { return a[static_cast<std::size_t>(l + Dl * (s + d * r))]; }
    };

    BoundaryMps(int n_sites, int chi, double cutoff) : sites_(static_cast<std::size_t>(n_sites)), chi_(chi), cutoff_(cutoff) {
        if (chi < 1) throw std::invalid_argument("BoundaryMps: chi must be >= 1");
        if (!(cutoff >= 0.0)) throw std::invalid_argument("BoundaryMps: cutoff must be nonnegative");
    }

    int size() const { return static_cast<int>(sites_.size()); }
    int chi() const { return chi_; }
    double cutoff() const { return cutoff_; }
    double log_scale() const { return log_scale_; }
    bool is_zero() const { return zero_; }
    const Site& site(int j) const { return sites_[static_cast<std::size_t>(j)]; }
    /// Largest bond dimension kept after any truncation so far.
    int max_bond() const { return peak_bond_; }
    /// Sum of squared discarded singular values relative to the kept norm, over all truncations.
    double discarded_weight() const { return discarded_; }

    /// Absorb one MPO row. `from_below` contracts the row's down legs with
    /// the MPS; otherwise its up legs.
    void absorb(const MpoRow& row, bool from_below) {
        if (static_cast<int>(row.size()) != size()) throw std::invalid_argument("BoundaryMps::absorb: width mismatch");
        if (zero_) return;
        for (std::size_t j = 0; j < sites_.size(); ++j) {
            const Site& A = sites_[j];
            const MpoSite& w = row[j];
            const int din = from_below ? w.ddn : w.dup;
            if (din != A.d) throw std::logic_error("BoundaryMps::absorb: physical dimension mismatch");
            Site B;
            B.Dl = A.Dl * w.dl;
            B.d = from_below ? w.dup : w.ddn;
            B.Dr = A.Dr * w.dr;
            B.a.assign(static_cast<std::size_t>(B.Dl) * B.d * B.Dr, 0.0);
            for (const auto& en : w.entries) {
                const int s_in = from_below ? en.dn : en.up;
                const int s_out = from_below ? en.up : en.dn;
                for (int b = 0; b < A.Dr; ++b)
                    for (int a = 0; a < A.Dl; ++a) {
                        const double v = A.at(a, s_in, b);
                        if (v != 0.0) B.at(a + A.Dl * en.l, s_out, b + A.Dr * en.r) += en.w * v;
                    }
            }
            sites_[j] = std::move(B);
        }
        compress();
    }

    /// <this|other> over shared physical legs, returned as a log together with the sign.
    static std::pair<double, int> overlap(const BoundaryMps& x, const BoundaryMps& y) {
        if (x.size() != y.size()) throw std::invalid_argument("BoundaryMps::overlap: size mismatch");
        if (x.zero_ || y.zero_) return {-std::numeric_limits<double>::infinity(), 0};
        Eigen::MatrixXd E = Eigen::MatrixXd::Ones(1, 1);
        double log_acc = 0.0;
        for (int j = 0; j < x.size(); ++j) {
            const Site &A = x.site(j), &B = y.site(j);
            if (A.d != B.d) throw std::logic_error("BoundaryMps::overlap: physical dimension mismatch");
            Eigen::MatrixXd next = Eigen::MatrixXd::Zero(A.Dr, B.Dr);
            for (int s = 0; s < A.d; ++s) {
                Eigen::MatrixXd As(A.Dl, A.Dr), Bs(B.Dl, B.Dr);
                for (int r = 0; r < A.Dr; ++r)
                    for (int l = 0; l < A.Dl; ++l) As(l, r) = A.at(l, s, r);
                for (int r = 0; r < B.Dr; ++r)
                    for (int l = 0; l < B.Dl; ++l) Bs(l, r) = B.at(l, s, r);
                next.noalias() += As.transpose() * E * Bs;
            }
            double nrm = next.cwiseAbs().maxCoeff();
            if (nrm == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
            next /= nrm;
            log_acc += std::log(nrm);
            E = std::move(next);
        }
        const double v = E(0, 0);
        if (v == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
        return {log_acc + std::log(std::abs(v)) + x.log_scale_ + y.log_scale_, v > 0 ? 1 : -1};
    }

private:
    using Mat = Eigen::MatrixXd;
    using Map = Eigen::Map<Mat>;

    void compress() {
        const int n = size();
        // Left-to-right QR: left-canonical form with the norm on the last site.
        for (int j = 0; j + 1 < n; ++j) {
            Site& A = sites_[static_cast<std::size_t>(j)];
            Map M(A.a.data(), A.Dl * A.d, A.Dr);
            const int k = std::min(A.Dl * A.d, A.Dr);
            Eigen::HouseholderQR<Mat> qr(M);
            Mat Q = qr.householderQ() * Mat::Identity(M.rows(), k);
            Mat R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
            Site& B = sites_[static_cast<std::size_t>(j + 1)];
            Map N(B.a.data(), B.Dl, B.d * B.Dr);
            Mat RN = R * N;
            A.a.assign(Q.data(), Q.data() + Q.size());
            A.Dr = k;
            B.Dl = k;
            B.a.assign(RN.data(), RN.data() + RN.size());
        }
        if (!normalize_site(n - 1)) return;
        // Right-to-left truncated SVD.
        for (int j = n - 1; j > 0; --j) {
            Site& A = sites_[static_cast<std::size_t>(j)];
            Map M(A.a.data(), A.Dl, A.d * A.Dr);
            Svd svd = thin_svd(M);
            const double s0 = svd.S.size() ? svd.S(0) : 0.0;
            if (!(s0 > 0.0)) {
                if (!std::isfinite(s0)) throw PrecisionError("BoundaryMps: non-finite singular value");
                set_zero();
                return;
            }
            int keep = 0;
            while (keep < svd.S.size() && keep < chi_ && svd.S(keep) > cutoff_ * s0) ++keep;
            double total = svd.S.squaredNorm(), kept = svd.S.head(keep).squaredNorm();
            discarded_ += (total - kept) / total;
            Mat Vt = svd.Vt.topRows(keep);
            Mat US = svd.U.leftCols(keep) * svd.S.head(keep).asDiagonal();
            Site& B = sites_[static_cast<std::size_t>(j - 1)];
            Map N(B.a.data(), B.Dl * B.d, B.Dr);
            Mat NUS = N * US;
            A.a.assign(Vt.data(), Vt.data() + Vt.size());
            A.Dl = keep;
            B.Dr = keep;
            B.a.assign(NUS.data(), NUS.data() + NUS.size());
            peak_bond_ = std::max(peak_bond_, keep);
        }
        normalize_site(0);
    }

    bool normalize_site(int j) {
        Site& A = sites_[static_cast<std::size_t>(j)];
        double nrm = 0.0;
        for (double v : A.a) nrm += v * v;
        nrm = std::sqrt(nrm);
        if (!std::isfinite(nrm)) throw PrecisionError("BoundaryMps: non-finite norm");
        if (nrm == 0.0) {
            set_zero();
            return false;
        }
        for (double& v : A.a) v /= nrm;
        log_scale_ += std::log(nrm);
        return true;
    }

    void set_zero() {
        zero_ = true;
        log_scale_ = -std::numeric_limits<double>::infinity();
    }

    std::vector<Site> sites_;
    int chi_;
    double cutoff_;
    double log_scale_ = 0.0;
    double discarded_ = 0.0;
    int peak_bond_ = 1;
    bool zero_ = false;
};

/// Result of a compressed contraction: value = mantissa * exp(log_scale).
struct BmpsResult {
    double mantissa = 0.0;
    double log_scale = 0.0;
    int max_bond = 1;
    double discarded_weight = 0.0;

    bool is_zero() const { return mantissa == 0.0; }
    double log_value() const { return is_zero() ? -std::numeric_limits<double>::infinity() : std::log(mantissa) + log_scale; }
    double value() const { return is_zero() ? 0.0 : std::exp(log_value()); }
};

namespace detail {

inline BmpsResult finish(const BoundaryMps& below, const BoundaryMps& above, bool feasible) {
    BmpsResult out;
    out.max_bond = std::max(below.max_bond(), above.max_bond());
    out.discarded_weight = below.discarded_weight() + above.discarded_weight();
    auto [lg, sign] = BoundaryMps::overlap(below, above);
    if (sign == 0) return out;
    if (!feasible) return out;
    if (sign < 0 || !std::isfinite(lg))
        throw PrecisionError("contract_bmps: truncation produced a non-positive probability");
    out.mantissa = 1.0;
    out.log_scale = lg;
    return out;
}

inline BoundaryMps trivial_mps(int W, int chi, double cutoff) { return BoundaryMps(W, chi, cutoff); }

}  // namespace detail

/// Boundary-MPS contraction, sweeping rows bottom to top.
inline BmpsResult contract_bmps(const TensorGrid& g, int chi = 64, double cutoff = 1e-12) {
    if (chi < 1) throw std::invalid_argument("contract_bmps: chi must be >= 1");
    const bool feasible = g.net->feasible(g.m);
    if (!feasible) return {};
    const int W = g.net->width(), H = g.net->height();
    BoundaryMps below = detail::trivial_mps(W, chi, cutoff);
    for (int i = 0; i < H; ++i) below.absorb(build_row(g, i), true);
    return detail::finish(below, detail::trivial_mps(W, chi, cutoff), feasible);
}

/// Contract two grids on the same frame whose rows differ only inside one
/// band. The environments above and below the band are computed once.
inline std::pair<BmpsResult, BmpsResult> contract_bmps_pair(const TensorGrid& g1, const TensorGrid& g2, int chi = 64,
                                                            double cutoff = 1e-12) {
    const RegionNetwork &n1 = *g1.net, &n2 = *g2.net;
    const Frame &f1 = n1.frame(), &f2 = n2.frame();
    if (f1.x0 != f2.x0 || f1.y0 != f2.y0 || f1.W != f2.W || f1.H != f2.H)
        throw std::invalid_argument("contract_bmps_pair: grids live on different frames");
    const int W = f1.W, H = f1.H;
    std::vector<MpoRow> r1(static_cast<std::size_t>(H)), r2(static_cast<std::size_t>(H));
    int lo = H, hi = -1;
    for (int i = 0; i < H; ++i) {
        r1[static_cast<std::size_t>(i)] = build_row(g1, i);
        r2[static_cast<std::size_t>(i)] = build_row(g2, i);
        if (!(r1[static_cast<std::size_t>(i)] == r2[static_cast<std::size_t>(i)])) {
            lo = std::min(lo, i);
            hi = std::max(hi, i);
        }
    }
    const bool feas1 = n1.feasible(g1.m), feas2 = n2.feasible(g2.m);
    if (hi < 0) {
        lo = H;
        hi = H - 1;
    }
    BoundaryMps below = detail::trivial_mps(W, chi, cutoff);
    for (int i = 0; i < lo; ++i) below.absorb(r1[static_cast<std::size_t>(i)], true);
    BoundaryMps above = detail::trivial_mps(W, chi, cutoff);
    for (int i = H - 1; i > hi; --i) above.absorb(r1[static_cast<std::size_t>(i)], false);
    auto run = [&](const std::vector<MpoRow>& rows, bool feasible) {
        if (!feasible) return BmpsResult{};
        BoundaryMps b = below;
        for (int i = lo; i <= hi; ++i) b.absorb(rows[static_cast<std::size_t>(i)], true);
        return detail::finish(b, above, feasible);
    };
    return {run(r1, feas1), run(r2, feas2)};
}

/// Uncompressed transfer-matrix contraction, one plaquette at a time. The
/// state holds the horizontal edges under the sweep line, the vertical edge
/// at the cursor and the running hole parity. Every term is nonnegative, so
/// this is accurate to rounding; cost grows as 2^W. Returns the natural log.
inline double contract_dense_log(const TensorGrid& g) {
    const RegionNetwork& net = *g.net;
    const int W = net.width(), H = net.height();
    if (W > 22) throw std::invalid_argument("contract_dense_log: frame width " + std::to_string(W) + " exceeds 22");
    if (!net.feasible(g.m)) return -std::numeric_limits<double>::infinity();
    auto weight = [&](bool in, int b) { return in ? (b ? g.p : 1.0 - g.p) : (b ? 0.0 : 1.0); };
    // index = hbits | cursor << W | chain << (W+1)
    const std::size_t n = std::size_t{1} << (W + 2);
    const std::size_t cur = std::size_t{1} << W, chn = std::size_t{1} << (W + 1);
    std::vector<double> st(n, 0.0), nx(n, 0.0);
    for (std::size_t h = 0; h < cur; ++h) {
        double w = 1.0;
        for (int j = 0; j < W && w != 0.0; ++j) w *= weight(net.h_in(0, j), static_cast<int>((h >> j) & 1U));
        st[h] = w;
    }
    double log_acc = 0.0;
    const int pi = g.m.hole_parity.value_or(0);
    for (int i = 0; i < H; ++i) {
        // Open the left boundary edge of the row on the cursor.
        std::fill(nx.begin(), nx.end(), 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            if (st[s] == 0.0 || (s & cur)) continue;
            nx[s] += st[s] * weight(net.v_in(i, 0), 0);
            nx[s | cur] += st[s] * weight(net.v_in(i, 0), 1);
        }
        st.swap(nx);
        for (int j = 0; j < W; ++j) {
            std::fill(nx.begin(), nx.end(), 0.0);
            const PlaquetteKind kind = net.kind(i, j);
            const int flag = kind == PlaquetteKind::Interior ? g.m.bits[static_cast<std::size_t>(net.flag_index(i, j))] : 0;
            const std::size_t hb = std::size_t{1} << j;
            const double wt[2] = {weight(net.h_in(i + 1, j), 0), weight(net.h_in(i + 1, j), 1)};
            const double wr[2] = {weight(net.v_in(i, j + 1), 0), weight(net.v_in(i, j + 1), 1)};
            for (std::size_t s = 0; s < n; ++s) {
                const double v = st[s];
                if (v == 0.0) continue;
                const int bb = (s & hb) ? 1 : 0, bl = (s & cur) ? 1 : 0;
                for (int bt = 0; bt < 2; ++bt)
                    for (int br = 0; br < 2; ++br) {
                        const double w = wt[bt] * wr[br];
                        if (w == 0.0) continue;
                        const int par = bb ^ bl ^ bt ^ br;
                        if (kind == PlaquetteKind::Interior && par != flag) continue;
                        std::size_t t = (s & ~hb & ~cur) | (bt ? hb : 0) | (br ? cur : 0);
                        if (kind == PlaquetteKind::Hole && par) t ^= chn;
                        nx[t] += v * w;
                    }
            }
            st.swap(nx);
        }
        // Close the right boundary edge and rescale.
        std::fill(nx.begin(), nx.end(), 0.0);
        double mx = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            if (st[s] == 0.0) continue;
            nx[s & ~cur] += st[s];
        }
        for (double v : nx) mx = std::max(mx, v);
        if (mx == 0.0) return -std::numeric_limits<double>::infinity();
        for (double& v : nx) v /= mx;
        log_acc += std::log(mx);
        st.swap(nx);
    }
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const int c = (s & chn) ? 1 : 0;
        if (net.band_lo() >= 0 && c != pi) continue;
        total += st[s];
    }
    return total > 0.0 ? log_acc + std::log(total) : -std::numeric_limits<double>::infinity();
}

/// Exact distribution of the region's observables (interior bits, then hole
/// parity) by enumerating every error on its edges; key = observable bitmask.
inline std::vector<std::pair<std::uint64_t, double>> syndrome_distribution_exact(const Lattice& lat, const Region& q, double p) {
    const std::size_t n = q.edges.size();
    if (n > 26) throw std::invalid_argument("syndrome_distribution_exact: region too large");
    const std::size_t n_obs = q.plaquettes.size() + (q.has_hole() ? 1 : 0);
    if (n_obs > 63) throw std::invalid_argument("syndrome_distribution_exact: too many observables");
    std::vector<std::uint64_t> flip(n, 0);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t k = 0; k < q.plaquettes.size(); ++k) {
            auto es = lat.plaquette_edges(q.plaquettes[k]);
            if (std::count(es.begin(), es.end(), q.edges[t]) % 2) flip[t] ^= std::uint64_t{1} << k;
        }
        int c = 0;
        for (int pq : q.hole) {
            auto es = lat.plaquette_edges(pq);
            c += static_cast<int>(std::count(es.begin(), es.end(), q.edges[t]));
        }
        if (c % 2) flip[t] ^= std::uint64_t{1} << (n_obs - 1);
    }
    std::vector<double> wk(n + 1);
    for (std::size_t k = 0; k <= n; ++k) wk[k] = std::pow(p, static_cast<double>(k)) * std::pow(1.0 - p, static_cast<double>(n - k));
    std::vector<std::pair<std::uint64_t, double>> acc;
    // Gray-code walk keeps the syndrome update O(1).
    auto walk = [&](auto&& add) {
        std::uint64_t s = 0;
        for (std::uint64_t it = 0; it < (std::uint64_t{1} << n); ++it) {
            if (it > 0) s ^= flip[static_cast<std::size_t>(__builtin_ctzll(it))];
            add(s, wk[static_cast<std::size_t>(__builtin_popcountll(it ^ (it >> 1)))]);
        }
    };
    if (n_obs <= 24) {
        std::vector<double> table(std::size_t{1} << n_obs, 0.0);
        walk([&](std::uint64_t s, double w) { table[static_cast<std::size_t>(s)] += w; });
        for (std::size_t k = 0; k < table.size(); ++k)
            if (table[k] > 0.0) acc.emplace_back(k, table[k]);
    } else {
        std::unordered_map<std::uint64_t, double> table;
        walk([&](std::uint64_t s, double w) { table[s] += w; });
        acc.assign(table.begin(), table.end());
        std::sort(acc.begin(), acc.end());
    }
    return acc;
}

/// Convert an observable bitmask back to an AnyonConfig for the region.
inline AnyonConfig anyon_config_from_mask(const Region& q, std::uint64_t mask) {
    AnyonConfig m;
    for (std::size_t k = 0; k < q.plaquettes.size(); ++k) m.bits.push_back(static_cast<std::uint8_t>((mask >> k) & 1U));
    if (q.has_hole()) m.hole_parity = static_cast<std::uint8_t>((mask >> q.plaquettes.size()) & 1U);
    return m;
}

}  // namespace markov
