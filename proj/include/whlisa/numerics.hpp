// SPDX-License-Identifier: Apache-2.0
//
// Shared numerical kernels: dominant singular pairs, thresholded range
// bases, exact waterfilling and triangular inversion.

#ifndef WHLISA_NUMERICS_HPP
#define WHLISA_NUMERICS_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "whlisa/channel.hpp"

namespace whlisa {

struct SingularTriplet {
    double sigma = 0.0;
    Vector left;
    Vector right;
};

struct PowerAllocation {
    std::vector<double> powers; // gamma^2 per slot
    double water_level = 0.0;
};

/// Applies the fixed phase convention: first entry of the left vector with
/// non-negligible magnitude is made real-positive.
inline void fix_phase(Vector& left, Vector& right) {
    const double tol = 1e-12 * left.norm();
    for (Eigen::Index i = 0; i < left.size(); ++i) {
        if (std::abs(left(i)) > tol) {
            const cxd rot = std::conj(left(i)) / std::abs(left(i));
            left *= rot;
            right *= rot;
            return;
        }
    }
}

inline SingularTriplet dominant_singular_triplet(const Matrix& m) {
    if (m.size() == 0 || m.norm() == 0.0)
        throw std::invalid_argument("dominant_singular_triplet: zero matrix");
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SingularTriplet t;
    t.sigma = svd.singularValues()(0);
    t.left = svd.matrixU().col(0);
    t.right = svd.matrixV().col(0);
    fix_phase(t.left, t.right);
    return t;
}

/// Orthonormal basis of the dominant range of the given columns. Directions
/// with singular value below max(nu*sigma_max, numerical-rank floor) are
/// discarded; nu=0 keeps the full numerical rank.
inline Matrix orthonormal_range(const Matrix& columns, double nu = 0.0) {
    if (columns.size() == 0 || columns.norm() == 0.0)
        return Matrix(columns.rows(), 0);
    Eigen::BDCSVD<Matrix> svd(columns, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    const double eps = std::numeric_limits<double>::epsilon();
    const double floor_ =
        std::max<double>(columns.rows(), columns.cols()) * eps * s(0);
    const double thr = std::max(nu * s(0), floor_);
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) >= thr) ++rank;
    return svd.matrixU().leftCols(rank);
}

/// Exact waterfilling over parallel scalar channels with gains lambda_m,
/// noise sigma^2 and total budget. Zero-gain slots receive zero power.
inline PowerAllocation waterfilling(const std::vector<double>& gains,
                                    double noise, double budget) {
    if (budget <= 0.0)
        throw std::invalid_argument("waterfilling: budget must be > 0");
    std::vector<int> idx;
    for (int m = 0; m < static_cast<int>(gains.size()); ++m)
        if (gains[m] > 0.0) idx.push_back(m);
    if (idx.empty())
        throw std::invalid_argument("waterfilling: all gains are zero");

    // Sort candidate slots by inverse-gain level; shrink the active set
    // until the water level clears every active slot.
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return noise / (gains[a] * gains[a]) < noise / (gains[b] * gains[b]);
    });
    std::vector<double> level(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        level[i] = noise / (gains[idx[i]] * gains[idx[i]]);
    std::vector<double> prefix(idx.size());
    std::partial_sum(level.begin(), level.end(), prefix.begin());

    std::size_t active = idx.size();
    double mu = 0.0;
    while (active > 0) {
        mu = (budget + prefix[active - 1]) / static_cast<double>(active);
        if (mu > level[active - 1]) break;
        --active;
    }

    PowerAllocation out;
    out.powers.assign(gains.size(), 0.0);
    out.water_level = mu;
    for (std::size_t i = 0; i < active; ++i)
        out.powers[idx[i]] = mu - level[i];
    return out;
}

inline Matrix lower_triangular_inverse(const Matrix& l) {
    if (l.rows() != l.cols())
        throw std::invalid_argument("lower_triangular_inverse: not square");
    const double tol = 1e-12 * l.norm();
    for (Eigen::Index j = 0; j < l.cols(); ++j)
        if (std::abs(l(j, j)) <= tol)
            throw std::runtime_error(
                "lower_triangular_inverse: near-singular diagonal");
    Matrix inv = l.triangularView<Eigen::Lower>().solve(
        Matrix::Identity(l.rows(), l.cols()));
    return inv;
}

} // namespace whlisa

#endif
