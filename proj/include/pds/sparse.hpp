#pragma once

#include "pds/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace pds {

/// Symmetric sparse matrix in compressed-row form with both triangles stored.
struct SparseSym {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<int> col;
    std::vector<double> val;

    std::size_t nnz() const { return val.size(); }

    void apply(std::span<const double> x, std::span<double> y) const
    {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
                s += val[p] * x[col[p]];
            }
            y[i] = s;
        }
    }

    std::vector<double> operator*(std::span<const double> x) const
    {
        std::vector<double> y(n);
        apply(x, y);
        return y;
    }

    double at(std::size_t i, std::size_t j) const
    {
        const auto first = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
        const auto last = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
        const auto it = std::lower_bound(first, last, static_cast<int>(j));
        return (it != last && *it == static_cast<int>(j)) ? val[static_cast<std::size_t>(it - col.begin())] : 0.0;
    }

    std::vector<double> diagonal() const
    {
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = at(i, i);
        }
        return d;
    }

    /// Dense row-major copy; intended for small oracle problems.
    std::vector<double> dense() const
    {
        std::vector<double> a(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
                a[i * n + static_cast<std::size_t>(col[p])] = val[p];
            }
        }
        return a;
    }
};

/// Collects (i, j, v) contributions; duplicates are summed in a fixed order.
class TripletBuilder {
public:
    explicit TripletBuilder(std::size_t n) : n_(n) {}

    void add(int i, int j, double v) { entries_.emplace_back(i, j, v); }

    /// Adds v at (i, j) and (j, i); a single entry on the diagonal.
    void add_sym(int i, int j, double v)
    {
        add(i, j, v);
        if (i != j) {
            add(j, i, v);
        }
    }

    SparseSym build() const
    {
        std::vector<std::size_t> order(entries_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
            return std::tie(std::get<0>(entries_[a]), std::get<1>(entries_[a])) <
                   std::tie(std::get<0>(entries_[b]), std::get<1>(entries_[b]));
        });
        SparseSym m;
        m.n = n_;
        m.row_ptr.assign(n_ + 1, 0);
        int last_i = -1, last_j = -1;
        for (std::size_t idx : order) {
            const auto& [i, j, v] = entries_[idx];
            if (i == last_i && j == last_j) {
                m.val.back() += v;
                continue;
            }
            m.col.push_back(j);
            m.val.push_back(v);
            ++m.row_ptr[static_cast<std::size_t>(i) + 1];
            last_i = i;
            last_j = j;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            m.row_ptr[i + 1] += m.row_ptr[i];
        }
        return m;
    }

private:
    std::size_t n_;
    std::vector<std::tuple<int, int, double>> entries_;
};

inline double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct CgReport {
    std::size_t iterations = 0;
    double residual = 0.0; ///< final ||A x - b||
};

/// Jacobi-preconditioned conjugate gradients; stops when ||A x - b|| <= tol ||b||.
/// `x` holds the initial guess on entry and the solution on exit.
inline CgReport cg_solve(const SparseSym& A, std::span<const double> b, std::span<double> x, double tol,
                         std::size_t maxit)
{
    if (!(tol > 0.0)) {
        throw PreconditionError("cg_solve: tol must be positive");
    }
    const std::size_t n = A.n;
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return {};
    }
    std::vector<double> inv_diag = A.diagonal();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(inv_diag[i] > 0.0)) {
            throw NumericalError("cg_solve: non-positive diagonal entry at row " + std::to_string(i));
        }
        inv_diag[i] = 1.0 / inv_diag[i];
    }
    std::vector<double> r(n), z(n), p(n), q(n);
    A.apply(x, q);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = b[i] - q[i];
    }
    double rnorm = norm2(r);
    std::vector<double> history{rnorm};
    CgReport rep;
    if (rnorm <= tol * bnorm) {
        rep.residual = rnorm;
        return rep;
    }
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = inv_diag[i] * r[i];
    }
    p = z;
    double rz = dot(r, z);
    for (std::size_t it = 1; it <= maxit; ++it) {
        A.apply(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0)) {
            throw NumericalError("cg_solve: matrix is not positive definite (p^T A p <= 0)", history);
        }
        const double step = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += step * p[i];
            r[i] -= step * q[i];
        }
        rnorm = norm2(r);
        history.push_back(rnorm);
        if (rnorm <= tol * bnorm) {
            // Recompute the true residual to guard against drift in the recurrence.
            A.apply(x, q);
            for (std::size_t i = 0; i < n; ++i) {
                r[i] = b[i] - q[i];
            }
            rnorm = norm2(r);
            if (rnorm <= tol * bnorm) {
                rep.iterations = it;
                rep.residual = rnorm;
                return rep;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = inv_diag[i] * r[i];
        }
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = z[i] + beta * p[i];
        }
    }
    throw NumericalError("cg_solve: " + std::to_string(maxit) + " iterations exceeded, residual " +
                             std::to_string(rnorm / bnorm) + " relative",
                         history);
}

inline std::vector<double> cg_solve(const SparseSym& A, std::span<const double> b, double tol, std::size_t maxit)
{
    std::vector<double> x(A.n, 0.0);
    cg_solve(A, b, x, tol, maxit);
    return x;
}

/// Dense Cholesky solve of a row-major SPD matrix.
inline std::vector<double> dense_spd_solve(std::vector<double> a, std::vector<double> b)
{
    const std::size_t n = b.size();
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) {
            d -= a[j * n + k] * a[j * n + k];
        }
        if (!(d > 0.0)) {
            throw NumericalError("dense_spd_solve: matrix is not positive definite at pivot " + std::to_string(j));
        }
        d = std::sqrt(d);
        a[j * n + j] = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            b[i] -= a[i * n + k] * b[k];
        }
        b[i] /= a[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t k = i + 1; k < n; ++k) {
            b[i] -= a[k * n + i] * b[k];
        }
        b[i] /= a[i * n + i];
    }
    return b;
}

/// Envelope (skyline) Cholesky factorization A = L L^T. Row i of L is stored from its first
/// structurally nonzero column up to the diagonal, so fill stays inside the profile.
class EnvelopeCholesky {
public:
    EnvelopeCholesky() = default;

    explicit EnvelopeCholesky(const SparseSym& A) { factor(A); }

    void factor(const SparseSym& A)
    {
        n_ = A.n;
        first_.assign(n_, 0);
        start_.assign(n_ + 1, 0);
        for (std::size_t i = 0; i < n_; ++i) {
            std::size_t f = i;
            for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) {
                f = std::min(f, static_cast<std::size_t>(A.col[p]));
            }
            first_[i] = f;
            start_[i + 1] = start_[i] + (i - f + 1);
        }
        data_.assign(start_[n_], 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) {
                const auto j = static_cast<std::size_t>(A.col[p]);
                if (j <= i) {
                    entry(i, j) = A.val[p];
                }
            }
        }
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = first_[i]; j <= i; ++j) {
                const std::size_t k0 = std::max(first_[i], first_[j]);
                double s = entry(i, j);
                const double* li = &data_[start_[i] + (k0 - first_[i])];
                const double* lj = &data_[start_[j] + (k0 - first_[j])];
                for (std::size_t k = 0; k < j - k0; ++k) {
                    s -= li[k] * lj[k];
                }
                if (j < i) {
                    entry(i, j) = s / entry(j, j);
                } else {
                    if (!(s > 0.0)) {
                        throw NumericalError("EnvelopeCholesky: matrix is not positive definite at row " +
                                             std::to_string(i));
                    }
                    entry(i, i) = std::sqrt(s);
                }
            }
        }
    }

    std::size_t size() const { return n_; }

    std::vector<double> solve(std::span<const double> b) const
    {
        std::vector<double> x(b.begin(), b.end());
        for (std::size_t i = 0; i < n_; ++i) {
            double s = x[i];
            const double* li = &data_[start_[i]];
            for (std::size_t k = first_[i]; k < i; ++k) {
                s -= li[k - first_[i]] * x[k];
            }
            x[i] = s / li[i - first_[i]];
        }
        for (std::size_t i = n_; i-- > 0;) {
            x[i] /= data_[start_[i] + (i - first_[i])];
            const double xi = x[i];
            const double* li = &data_[start_[i]];
            for (std::size_t k = first_[i]; k < i; ++k) {
                x[k] -= li[k - first_[i]] * xi;
            }
        }
        return x;
    }

private:
    double& entry(std::size_t i, std::size_t j) { return data_[start_[i] + (j - first_[i])]; }

    std::size_t n_ = 0;
    std::vector<std::size_t> first_;
    std::vector<std::size_t> start_;
    std::vector<double> data_;
};

/// Restriction of a symmetric system to its free unknowns with the fixed values moved to the
/// right-hand side: A_ff x_f = b_f - A_fd x_d.
struct ReducedSystem {
    SparseSym A;
    std::vector<int> free_index;   ///< full index of each reduced unknown
    std::vector<int> reduced_index; ///< reduced index per full index, -1 when fixed
};

inline ReducedSystem restrict_to_free(const SparseSym& A, const std::vector<char>& fixed)
{
    ReducedSystem r;
    r.reduced_index.assign(A.n, -1);
    for (std::size_t i = 0; i < A.n; ++i) {
        if (!fixed[i]) {
            r.reduced_index[i] = static_cast<int>(r.free_index.size());
            r.free_index.push_back(static_cast<int>(i));
        }
    }
    r.A.n = r.free_index.size();
    r.A.row_ptr.assign(r.A.n + 1, 0);
    for (std::size_t ri = 0; ri < r.A.n; ++ri) {
        const auto i = static_cast<std::size_t>(r.free_index[ri]);
        for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) {
            const int rj = r.reduced_index[static_cast<std::size_t>(A.col[p])];
            if (rj >= 0) {
                r.A.col.push_back(rj);
                r.A.val.push_back(A.val[p]);
            }
        }
        r.A.row_ptr[ri + 1] = r.A.col.size();
    }
    return r;
}

/// b_f - A_fd x_d, with x holding the fixed values at fixed positions (free entries ignored).
inline std::vector<double> reduced_rhs(const SparseSym& A, const ReducedSystem& r, std::span<const double> b,
                                       std::span<const double> x)
{
    std::vector<double> out(r.A.n);
    for (std::size_t ri = 0; ri < r.A.n; ++ri) {
        const auto i = static_cast<std::size_t>(r.free_index[ri]);
        double s = b[i];
        for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) {
            const auto j = static_cast<std::size_t>(A.col[p]);
            if (r.reduced_index[j] < 0) {
                s -= A.val[p] * x[j];
            }
        }
        out[ri] = s;
    }
    return out;
}

} // namespace pds
