#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <lapacke.h>

namespace markov {

/// Thin SVD of a real matrix, singular values in descending order.
struct Svd {
    Eigen::MatrixXd U;
    Eigen::VectorXd S;
    Eigen::MatrixXd Vt;
};

/// LAPACK QR-iteration SVD (gesvd). The divide-and-conquer driver gesdd
/// returned inaccurate factors on some boundary-MPS matrices, so it is not used.
inline Svd thin_svd(const Eigen::MatrixXd& M) {
    const lapack_int m = static_cast<lapack_int>(M.rows());
    const lapack_int n = static_cast<lapack_int>(M.cols());
    const lapack_int k = std::min(m, n);
    Svd out;
    out.U.resize(m, k);
    out.S.resize(k);
    out.Vt.resize(k, n);
    if (k == 0) return out;
    Eigen::MatrixXd A = M;
    Eigen::VectorXd superb(std::max<lapack_int>(1, k - 1));
    lapack_int info = LAPACKE_dgesvd(LAPACK_COL_MAJOR, 'S', 'S', m, n, A.data(), m, out.S.data(), out.U.data(), m,
                                     out.Vt.data(), k, superb.data());
    if (info != 0) throw std::runtime_error("thin_svd: LAPACK gesvd failed with info=" + std::to_string(info));
    return out;
}

}  // namespace markov
