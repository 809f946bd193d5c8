#pragma once

// Direct solver for the Newton systems: banded LU with partial pivoting, a dense
// border for the wrap-around coupling of closed curves, and an optional rank-one
// term handled by Sherman-Morrison.

#include <algorithm>
#include <cassert>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "errors.hpp"

namespace axiflow {

using Vector = Eigen::VectorXd;

/// Square matrix = band part on the leading (n - border) unknowns
/// + dense border rows/columns for the trailing `border` unknowns
/// + optional u v^T.
class BandedMatrix {
public:
    BandedMatrix(std::size_t n, std::size_t lower, std::size_t upper, std::size_t border = 0)
        : n_(n), kl_(lower), ku_(upper), nb_(border), m_(n - border), width_(2 * lower + upper + 1),
          band_(m_ * width_, 0.0), ib_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(nb_))),
          bi_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb_), static_cast<Eigen::Index>(m_))),
          bb_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb_), static_cast<Eigen::Index>(nb_))) {
        assert(border <= n);
    }

    std::size_t size() const { return n_; }
    std::size_t lower() const { return kl_; }
    std::size_t upper() const { return ku_; }
    std::size_t border() const { return nb_; }

    void add(std::size_t i, std::size_t j, double v) {
        if (i < m_ && j < m_) {
            const auto off = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(i);
            if (off < -static_cast<std::ptrdiff_t>(kl_) || off > static_cast<std::ptrdiff_t>(ku_)) out_of_band(i, j);
            band_[i * width_ + static_cast<std::size_t>(off + static_cast<std::ptrdiff_t>(kl_))] += v;
        } else if (i < m_) {
            ib_(idx(i), idx(j - m_)) += v;
        } else if (j < m_) {
            bi_(idx(i - m_), idx(j)) += v;
        } else {
            bb_(idx(i - m_), idx(j - m_)) += v;
        }
    }

    /// Entry of the band + border part (excludes the rank-one term).
    double coeff(std::size_t i, std::size_t j) const {
        if (i < m_ && j < m_) {
            const auto off = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(i);
            if (off < -static_cast<std::ptrdiff_t>(kl_) || off > static_cast<std::ptrdiff_t>(ku_)) return 0.0;
            return band_[i * width_ + static_cast<std::size_t>(off + static_cast<std::ptrdiff_t>(kl_))];
        }
        if (i < m_) return ib_(idx(i), idx(j - m_));
        if (j < m_) return bi_(idx(i - m_), idx(j));
        return bb_(idx(i - m_), idx(j - m_));
    }

    void set_rank_one(Vector u, Vector v) {
        assert(static_cast<std::size_t>(u.size()) == n_ && static_cast<std::size_t>(v.size()) == n_);
        rank_one_u_ = std::move(u);
        rank_one_v_ = std::move(v);
    }
    bool has_rank_one() const { return rank_one_u_.has_value(); }
    const Vector& rank_one_u() const { return *rank_one_u_; }
    const Vector& rank_one_v() const { return *rank_one_v_; }

    Vector multiply(const Vector& x) const {
        Vector y = Vector::Zero(static_cast<Eigen::Index>(n_));
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t j0 = i >= kl_ ? i - kl_ : 0;
            const std::size_t j1 = std::min(m_ - 1, i + ku_);
            double s = 0.0;
            for (std::size_t j = j0; j <= j1; ++j) s += coeff(i, j) * x[idx(j)];
            y[idx(i)] = s;
        }
        if (nb_ > 0) {
            const auto M = static_cast<Eigen::Index>(m_), B = static_cast<Eigen::Index>(nb_);
            y.head(M) += ib_ * x.tail(B);
            y.tail(B) += bi_ * x.head(M) + bb_ * x.tail(B);
        }
        if (rank_one_u_) y += *rank_one_u_ * rank_one_v_->dot(x);
        return y;
    }

    Eigen::MatrixXd to_dense() const {
        const auto N = static_cast<Eigen::Index>(n_);
        Eigen::MatrixXd d(N, N);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) d(idx(i), idx(j)) = coeff(i, j);
        if (rank_one_u_) d += *rank_one_u_ * rank_one_v_->transpose();
        return d;
    }

private:
    friend class BandedSolver;
    [[noreturn, gnu::noinline, gnu::cold]] static void out_of_band(std::size_t i, std::size_t j) {
        throw Error("BandedMatrix: entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside the band");
    }
    static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

    std::size_t n_, kl_, ku_, nb_, m_, width_;
    std::vector<double> band_;    // row i holds columns [i - kl, i + ku + kl]; the extra kl is pivot fill
    Eigen::MatrixXd ib_, bi_, bb_;
    std::optional<Vector> rank_one_u_, rank_one_v_;
};

/// Factorizes a BandedMatrix once and solves any number of right-hand sides.
class BandedSolver {
public:
    explicit BandedSolver(const BandedMatrix& a)
        : n_(a.n_), kl_(a.kl_), ku_(a.ku_), m_(a.m_), nb_(a.nb_), width_(a.width_), lu_(a.band_),
          pivot_(a.m_), ib_(a.ib_), bi_(a.bi_) {
        factor_band();
        if (nb_ > 0) {
            // Schur complement of the band block.
            z_ = Eigen::MatrixXd(ib_.rows(), ib_.cols());
            for (Eigen::Index k = 0; k < ib_.cols(); ++k) z_.col(k) = band_solve(ib_.col(k));
            const Eigen::MatrixXd schur = a.bb_ - bi_ * z_;
            schur_.compute(schur);
            if (!schur_.isInvertible()) throw SingularSystem("singular border Schur complement");
        }
        if (a.has_rank_one()) {
            u_ = a.rank_one_u();
            v_ = a.rank_one_v();
            zu_ = solve_base(*u_);
            denom_ = 1.0 + v_->dot(zu_);
            const double scale = 1.0 + std::abs(v_->dot(zu_));
            if (!(std::abs(denom_) > 1e-14 * scale)) throw SingularSystem("rank-one update makes the system singular");
        }
    }

    Vector solve(const Vector& b) const {
        Vector x = solve_base(b);
        if (u_) x -= zu_ * (v_->dot(x) / denom_);
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (!std::isfinite(x[i])) throw SingularSystem("non-finite solution");
        return x;
    }

private:
    static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
    double& at(std::size_t i, std::size_t j) { return lu_[i * width_ + (j + kl_ - i)]; }
    double at(std::size_t i, std::size_t j) const { return lu_[i * width_ + (j + kl_ - i)]; }

    void factor_band() {
        double scale = 0.0;
        for (double v : lu_) scale = std::max(scale, std::abs(v));
        const double tiny = DBL_EPSILON * scale;
        for (std::size_t k = 0; k < m_; ++k) {
            const std::size_t last_row = std::min(m_ - 1, k + kl_);
            std::size_t p = k;
            double best = std::abs(at(k, k));
            for (std::size_t i = k + 1; i <= last_row; ++i) {
                if (std::abs(at(i, k)) > best) {
                    best = std::abs(at(i, k));
                    p = i;
                }
            }
            if (!(best > tiny)) throw SingularSystem("zero pivot in column " + std::to_string(k));
            pivot_[k] = p;
            const std::size_t last_col = std::min(m_ - 1, k + kl_ + ku_);
            if (p != k)
                for (std::size_t j = k; j <= last_col; ++j) std::swap(at(k, j), at(p, j));
            const double inv = 1.0 / at(k, k);
            for (std::size_t i = k + 1; i <= last_row; ++i) {
                const double l = at(i, k) * inv;
                at(i, k) = l;
                if (l == 0.0) continue;
                for (std::size_t j = k + 1; j <= last_col; ++j) at(i, j) -= l * at(k, j);
            }
        }
    }

    Vector band_solve(const Vector& rhs) const {
        Vector x = rhs;
        for (std::size_t k = 0; k < m_; ++k) {
            if (pivot_[k] != k) std::swap(x[idx(k)], x[idx(pivot_[k])]);
            const std::size_t last_row = std::min(m_ - 1, k + kl_);
            for (std::size_t i = k + 1; i <= last_row; ++i) x[idx(i)] -= at(i, k) * x[idx(k)];
        }
        for (std::size_t k = m_; k-- > 0;) {
            const std::size_t last_col = std::min(m_ - 1, k + kl_ + ku_);
            double s = x[idx(k)];
            for (std::size_t j = k + 1; j <= last_col; ++j) s -= at(k, j) * x[idx(j)];
            x[idx(k)] = s / at(k, k);
        }
        return x;
    }

    Vector solve_base(const Vector& b) const {
        if (nb_ == 0) return band_solve(b);
        const auto M = idx(m_), B = idx(nb_);
        const Vector y = band_solve(b.head(M));
        const Vector xb = schur_.solve(b.tail(B) - bi_ * y);
        Vector x(idx(n_));
        x.head(M) = y - z_ * xb;
        x.tail(B) = xb;
        return x;
    }

    std::size_t n_, kl_, ku_, m_, nb_, width_;
    std::vector<double> lu_;
    std::vector<std::size_t> pivot_;
    Eigen::MatrixXd ib_, bi_, z_;
    Eigen::FullPivLU<Eigen::MatrixXd> schur_;
    std::optional<Vector> u_, v_;
    Vector zu_;
    double denom_ = 1.0;
};

inline Vector factor_solve(const BandedMatrix& a, const Vector& b) { return BandedSolver(a).solve(b); }

} // namespace axiflow
