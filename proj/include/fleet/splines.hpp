#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fleet {

// Uniform-knot cubic B-spline basis of H functions over [x_lo, x_hi].
//
// Knot layout: spacing delta = (x_hi - x_lo) / (H + 1) and H + 4 knots
//   t_j = x_lo + (j - 1) * delta,  j = 0 .. H + 3,
// so the grid starts one spacing below x_lo and ends one spacing above x_hi.
// Function h (0-based) is supported on [t_h, t_{h+4}]. Every point of
// [x_lo, x_hi] lies inside at least one support; points of
// [t_3, t_H] lie inside exactly four (the fully overlapped interior).
template <typename Scalar>
class SplineBasis
{
public:
    using vector_t = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using matrix_t = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    SplineBasis() = default;

    SplineBasis(Scalar x_lo, Scalar x_hi, int H)
        : x_lo_(x_lo), x_hi_(x_hi), H_(H)
    {
        if (H < 1) throw std::invalid_argument("spline basis needs H >= 1");
        if (!(x_lo < x_hi) || !std::isfinite(double(x_lo)) || !std::isfinite(double(x_hi))) {
            throw std::invalid_argument("spline basis needs a finite interval with x_lo < x_hi");
        }
        delta_ = (x_hi - x_lo) / Scalar(H + 1);
    }

    int size() const { return H_; }
    Scalar x_lo() const { return x_lo_; }
    Scalar x_hi() const { return x_hi_; }
    Scalar delta() const { return delta_; }

    Scalar knot(int j) const { return x_lo_ + Scalar(j - 1) * delta_; }

    vector_t knots() const
    {
        vector_t t(H_ + 4);
        for (int j = 0; j < H_ + 4; ++j) t(j) = knot(j);
        return t;
    }

    // Interval on which four functions overlap and the family sums to one.
    // Empty (first > second) when H < 4.
    std::pair<Scalar, Scalar> interior() const { return {knot(3), knot(H_)}; }

private:
    Scalar x_lo_{0};
    Scalar x_hi_{1};
    Scalar delta_{0};
    int H_{0};
};

template <typename Scalar>
SplineBasis<Scalar> make_basis(Scalar x_lo, Scalar x_hi, int H)
{
    return SplineBasis<Scalar>(x_lo, x_hi, H);
}

namespace detail {

// The four cubic pieces of the uniform B-spline, u in [0, 1).
template <typename Scalar>
Scalar cubic_piece(int segment, Scalar u)
{
    const Scalar u2 = u * u;
    const Scalar u3 = u2 * u;
    switch (segment) {
    case 0: return u3 / Scalar(6);
    case 1: return (Scalar(1) + Scalar(3) * u + Scalar(3) * u2 - Scalar(3) * u3) / Scalar(6);
    case 2: return (Scalar(4) - Scalar(6) * u2 + Scalar(3) * u3) / Scalar(6);
    case 3: return (Scalar(1) - Scalar(3) * u + Scalar(3) * u2 - u3) / Scalar(6);
    default: return Scalar(0);
    }
}

} // namespace detail

// Writes the H basis values at x into `out`; at most four entries are non-zero.
template <typename Scalar, typename Derived>
void eval_basis_into(const SplineBasis<Scalar>& basis, Scalar x, Eigen::MatrixBase<Derived>& out)
{
    out.setZero();
    if (!std::isfinite(double(x))) return;
    const Scalar s = (x - basis.knot(0)) / basis.delta();
    const Scalar cell = std::floor(s);
    if (cell < Scalar(0) || cell >= Scalar(basis.size() + 3)) return;
    const int c = static_cast<int>(cell);
    const Scalar u = s - cell;
    // Knot cell c is segment (c - h) of function h.
    for (int seg = 0; seg < 4; ++seg) {
        const int h = c - seg;
        if (h >= 0 && h < basis.size()) out(h) = detail::cubic_piece(seg, u);
    }
}

template <typename Scalar>
typename SplineBasis<Scalar>::vector_t eval_basis(const SplineBasis<Scalar>& basis, Scalar x)
{
    typename SplineBasis<Scalar>::vector_t out(basis.size());
    eval_basis_into(basis, x, out);
    return out;
}

// N x H design matrix; row i holds eval_basis(basis, xs[i]).
template <typename Scalar>
typename SplineBasis<Scalar>::matrix_t design_matrix(const SplineBasis<Scalar>& basis,
                                                     std::span<const Scalar> xs)
{
    typename SplineBasis<Scalar>::matrix_t psi(static_cast<Eigen::Index>(xs.size()), basis.size());
    for (Eigen::Index i = 0; i < psi.rows(); ++i) {
        auto row = psi.row(i);
        eval_basis_into(basis, xs[static_cast<std::size_t>(i)], row);
    }
    return psi;
}

template <typename Scalar, typename Derived>
typename SplineBasis<Scalar>::matrix_t design_matrix(const SplineBasis<Scalar>& basis,
                                                     const Eigen::MatrixBase<Derived>& xs)
{
    typename SplineBasis<Scalar>::matrix_t psi(xs.size(), basis.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
        auto row = psi.row(i);
        eval_basis_into(basis, Scalar(xs(i)), row);
    }
    return psi;
}

struct FleetDataset;
struct ChainConfig;

struct SelectionRow
{
    int H = 0;
    double mean_bic = 0.0;
    double std_bic = 0.0;
};

struct SelectionResult
{
    int best_H = 0;
    std::vector<SelectionRow> table;
};

// Chooses the basis size by k-fold cross-validation on the most data-rich
// task: each fold is scored by BIC = d ln(n) - 2 ln L at the highest-density
// posterior draw of the single-task hazard model fitted to the other folds.
// The candidate with the smallest mean BIC wins; ties go to the smaller H.
SelectionResult select_H(const FleetDataset& dataset, std::span<const int> candidates, int folds,
                         std::uint64_t seed, const ChainConfig& chains);

} // namespace fleet
