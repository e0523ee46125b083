#pragma once

// Dense square operators at desk scale: arithmetic, determinants, null spaces
// and the real nonsymmetric eigenvalue problem (Householder Hessenberg
// reduction followed by Francis double-shift QR).

#include "driftlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace driftlab {

inline constexpr std::size_t kDefaultDimCap = 64;

using Vector = std::vector<double>;
using Complex = std::complex<double>;

/// Square real matrix, row-major.
class LinOp {
public:
    LinOp() = default;

    explicit LinOp(std::size_t dim, double fill = 0.0) : dim_(dim), entries_(dim * dim, fill) {}

    LinOp(std::size_t dim, std::vector<double> row_major) : dim_(dim), entries_(std::move(row_major)) {
        if (entries_.size() != dim_ * dim_) {
            throw Error(ErrorKind::DimMismatch, "expected " + std::to_string(dim_ * dim_) + " entries");
        }
    }

    LinOp(std::initializer_list<std::initializer_list<double>> rows) : dim_(rows.size()) {
        entries_.reserve(dim_ * dim_);
        for (const auto& r : rows) {
            if (r.size() != dim_) {
                throw Error(ErrorKind::DimMismatch, "matrix rows must all have length " + std::to_string(dim_));
            }
            entries_.insert(entries_.end(), r.begin(), r.end());
        }
    }

    static LinOp identity(std::size_t dim) {
        LinOp out(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            out(i, i) = 1.0;
        }
        return out;
    }

    static LinOp diagonal(std::span<const double> d) {
        LinOp out(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            out(i, i) = d[i];
        }
        return out;
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] const std::vector<double>& entries() const noexcept { return entries_; }

    double& operator()(std::size_t i, std::size_t j) { return entries_[i * dim_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * dim_ + j]; }

    /// Rejects non-finite entries and dimensions over the cap.
    void validate(std::size_t cap = kDefaultDimCap) const {
        if (dim_ == 0) {
            throw Error(ErrorKind::DimMismatch, "operators need dimension at least 1");
        }
        if (dim_ > cap) {
            throw Error(ErrorKind::CapExceeded, "dimension " + std::to_string(dim_) + " exceeds cap " + std::to_string(cap));
        }
        for (double v : entries_) {
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::NonFinite, "operator has a non-finite entry");
            }
        }
    }

    friend bool operator==(const LinOp&, const LinOp&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> entries_;
};

namespace detail {
inline void require_same_dim(const LinOp& a, const LinOp& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorKind::DimMismatch,
                    "dimensions " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()) + " differ");
    }
}
} // namespace detail

inline LinOp operator+(const LinOp& a, const LinOp& b) {
    detail::require_same_dim(a, b);
    LinOp out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        for (std::size_t j = 0; j < a.dim(); ++j) {
            out(i, j) = a(i, j) + b(i, j);
        }
    }
    return out;
}

inline LinOp operator-(const LinOp& a, const LinOp& b) {
    detail::require_same_dim(a, b);
    LinOp out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        for (std::size_t j = 0; j < a.dim(); ++j) {
            out(i, j) = a(i, j) - b(i, j);
        }
    }
    return out;
}

inline LinOp operator*(double s, const LinOp& a) {
    LinOp out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        for (std::size_t j = 0; j < a.dim(); ++j) {
            out(i, j) = s * a(i, j);
        }
    }
    return out;
}

inline LinOp operator*(const LinOp& a, const LinOp& b) {
    detail::require_same_dim(a, b);
    const std::size_t n = a.dim();
    LinOp out(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < n; ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

inline Vector operator*(const LinOp& a, std::span<const double> x) {
    if (x.size() != a.dim()) {
        throw Error(ErrorKind::DimMismatch, "vector length does not match operator dimension");
    }
    Vector out(a.dim(), 0.0);
    for (std::size_t i = 0; i < a.dim(); ++i) {
        for (std::size_t j = 0; j < a.dim(); ++j) {
            out[i] += a(i, j) * x[j];
        }
    }
    return out;
}

/// Induced infinity norm (max absolute row sum).
inline double inf_norm(const LinOp& a) {
    double best = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < a.dim(); ++j) {
            row += std::abs(a(i, j));
        }
        best = std::max(best, row);
    }
    return best;
}

inline double inf_norm(std::span<const double> x) {
    double best = 0.0;
    for (double v : x) {
        best = std::max(best, std::abs(v));
    }
    return best;
}

inline double max_abs_entry(const LinOp& a) {
    double best = 0.0;
    for (double v : a.entries()) {
        best = std::max(best, std::abs(v));
    }
    return best;
}

inline LinOp matrix_power(const LinOp& a, std::size_t k) {
    LinOp out = LinOp::identity(a.dim());
    for (std::size_t i = 0; i < k; ++i) {
        out = out * a;
    }
    return out;
}

/// LU with partial pivoting.
inline double determinant(const LinOp& a) {
    const std::size_t n = a.dim();
    LinOp m = a;
    double det = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(m(i, k)) > std::abs(m(piv, k))) {
                piv = i;
            }
        }
        if (m(piv, k) == 0.0) {
            return 0.0;
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(m(k, j), m(piv, j));
            }
            det = -det;
        }
        det *= m(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = m(i, k) / m(k, k);
            for (std::size_t j = k; j < n; ++j) {
                m(i, j) -= f * m(k, j);
            }
        }
    }
    return det;
}

/// Orthonormal basis of {x : Mx = 0}. Pivots below tol * max|M| count as zero.
inline std::vector<Vector> null_space(const LinOp& m_in, double tol) {
    const std::size_t n = m_in.dim();
    LinOp m = m_in;
    const double threshold = tol * max_abs_entry(m_in);
    std::vector<std::size_t> col_order(n);
    for (std::size_t j = 0; j < n; ++j) {
        col_order[j] = j;
    }
    // Full-pivot elimination to reduced row echelon form.
    std::size_t rank = 0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pr = k;
        std::size_t pc = k;
        double best = 0.0;
        for (std::size_t i = k; i < n; ++i) {
            for (std::size_t j = k; j < n; ++j) {
                if (std::abs(m(i, j)) > best) {
                    best = std::abs(m(i, j));
                    pr = i;
                    pc = j;
                }
            }
        }
        if (best <= threshold || best == 0.0) {
            break;
        }
        for (std::size_t j = 0; j < n; ++j) {
            std::swap(m(k, j), m(pr, j));
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::swap(m(i, k), m(i, pc));
        }
        std::swap(col_order[k], col_order[pc]);
        const double pivot = m(k, k);
        for (std::size_t j = 0; j < n; ++j) {
            m(k, j) /= pivot;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == k || m(i, k) == 0.0) {
                continue;
            }
            const double f = m(i, k);
            for (std::size_t j = 0; j < n; ++j) {
                m(i, j) -= f * m(k, j);
            }
        }
        ++rank;
    }
    std::vector<Vector> basis;
    for (std::size_t free = rank; free < n; ++free) {
        Vector v(n, 0.0);
        v[col_order[free]] = 1.0;
        for (std::size_t k = 0; k < rank; ++k) {
            v[col_order[k]] = -m(k, free);
        }
        basis.push_back(std::move(v));
    }
    // Modified Gram-Schmidt, two passes.
    for (std::size_t pass = 0; pass < 2; ++pass) {
        for (std::size_t a = 0; a < basis.size(); ++a) {
            for (std::size_t b = 0; b < a; ++b) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    dot += basis[a][i] * basis[b][i];
                }
                for (std::size_t i = 0; i < n; ++i) {
                    basis[a][i] -= dot * basis[b][i];
                }
            }
            double norm = 0.0;
            for (double x : basis[a]) {
                norm += x * x;
            }
            norm = std::sqrt(norm);
            for (double& x : basis[a]) {
                x /= norm;
            }
        }
    }
    return basis;
}

/// Orthogonal similarity to upper Hessenberg form via Householder reflections.
inline LinOp hessenberg(const LinOp& a_in) {
    const std::size_t n = a_in.dim();
    LinOp a = a_in;
    if (n < 3) {
        return a;
    }
    for (std::size_t k = 0; k + 2 < n; ++k) {
        const std::size_t len = n - k - 1;
        Vector v(len);
        double norm = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            v[i] = a(k + 1 + i, k);
            norm += v[i] * v[i];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            continue;
        }
        const double alpha = v[0] > 0.0 ? -norm : norm;
        v[0] -= alpha;
        double vnorm = 0.0;
        for (double x : v) {
            vnorm += x * x;
        }
        vnorm = std::sqrt(vnorm);
        if (vnorm == 0.0) {
            continue;
        }
        for (double& x : v) {
            x /= vnorm;
        }
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < len; ++i) {
                s += v[i] * a(k + 1 + i, j);
            }
            for (std::size_t i = 0; i < len; ++i) {
                a(k + 1 + i, j) -= 2.0 * v[i] * s;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < len; ++j) {
                s += a(i, k + 1 + j) * v[j];
            }
            for (std::size_t j = 0; j < len; ++j) {
                a(i, k + 1 + j) -= 2.0 * s * v[j];
            }
        }
        a(k + 1, k) = alpha;
        for (std::size_t i = k + 2; i < n; ++i) {
            a(i, k) = 0.0;
        }
    }
    return a;
}

/// Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR.
/// Throws NoConvergence after max_sweeps total QR sweeps.
inline std::vector<Complex> hessenberg_eigenvalues(const LinOp& h, std::size_t max_sweeps) {
    const int n = static_cast<int>(h.dim());
    // 1-based working copy keeps the deflation indices readable.
    std::vector<double> store(static_cast<std::size_t>((n + 1) * (n + 1)), 0.0);
    auto a = [&](int i, int j) -> double& { return store[static_cast<std::size_t>(i * (n + 1) + j)]; };
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            a(i, j) = h(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1));
        }
    }
    std::vector<double> wr(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> wi(static_cast<std::size_t>(n + 1), 0.0);

    double anorm = 0.0;
    for (int i = 1; i <= n; ++i) {
        for (int j = std::max(i - 1, 1); j <= n; ++j) {
            anorm += std::abs(a(i, j));
        }
    }
    std::size_t sweeps = 0;
    int nn = n;
    double t = 0.0;
    double p = 0.0, q = 0.0, r = 0.0, s = 0.0, w = 0.0, x = 0.0, y = 0.0, z = 0.0;
    while (nn >= 1) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l >= 2; --l) {
                s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) {
                    s = anorm;
                }
                if (std::abs(a(l, l - 1)) + s == s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            x = a(nn, nn);
            if (l == nn) {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                --nn;
            } else {
                y = a(nn - 1, nn - 1);
                w = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + std::copysign(z, p);
                        wr[nn - 1] = wr[nn] = x + z;
                        if (z != 0.0) {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn -= 2;
                } else {
                    if (++sweeps > max_sweeps) {
                        throw Error(ErrorKind::NoConvergence,
                                    "QR iteration exceeded " + std::to_string(max_sweeps) + " sweeps");
                    }
                    if (its > 0 && its % 10 == 0) {
                        // exceptional shift
                        t += x;
                        for (int i = 1; i <= nn; ++i) {
                            a(i, i) -= x;
                        }
                        s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    int m = nn - 2;
                    for (; m >= l; --m) {
                        z = a(m, m);
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - r - s;
                        r = a(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) {
                            break;
                        }
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
                        if (u + v == v) {
                            break;
                        }
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        a(i, i - 2) = 0.0;
                        if (i != m + 2) {
                            a(i, i - 3) = 0.0;
                        }
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = 0.0;
                            if (k != nn - 1) {
                                r = a(k + 2, k - 1);
                            }
                            if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        if ((s = std::copysign(std::sqrt(p * p + q * q + r * r), p)) != 0.0) {
                            if (k == m) {
                                if (l != m) {
                                    a(k, k - 1) = -a(k, k - 1);
                                }
                            } else {
                                a(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for (int j = k; j <= nn; ++j) {
                                p = a(k, j) + q * a(k + 1, j);
                                if (k != nn - 1) {
                                    p += r * a(k + 2, j);
                                    a(k + 2, j) -= p * z;
                                }
                                a(k + 1, j) -= p * y;
                                a(k, j) -= p * x;
                            }
                            const int mmin = nn < k + 3 ? nn : k + 3;
                            for (int i = l; i <= mmin; ++i) {
                                p = x * a(i, k) + y * a(i, k + 1);
                                if (k != nn - 1) {
                                    p += z * a(i, k + 2);
                                    a(i, k + 2) -= p * r;
                                }
                                a(i, k + 1) -= p * q;
                                a(i, k) -= p;
                            }
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }
    std::vector<Complex> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        out.emplace_back(wr[static_cast<std::size_t>(i)], wi[static_cast<std::size_t>(i)]);
    }
    return out;
}

/// Solves (A - mu I) x = b over the complex numbers; tiny pivots are nudged.
inline std::vector<Complex> shifted_solve(const LinOp& a, Complex mu, std::vector<Complex> b) {
    const std::size_t n = a.dim();
    std::vector<Complex> m(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            m[i * n + j] = Complex(a(i, j), 0.0) - (i == j ? mu : Complex{});
        }
    }
    const double scale = std::max(1.0, max_abs_entry(a) + std::abs(mu));
    const double floor = 1e-14 * scale;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(m[i * n + k]) > std::abs(m[piv * n + k])) {
                piv = i;
            }
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(m[k * n + j], m[piv * n + j]);
            }
            std::swap(b[k], b[piv]);
        }
        if (std::abs(m[k * n + k]) < floor) {
            m[k * n + k] = floor;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const Complex f = m[i * n + k] / m[k * n + k];
            for (std::size_t j = k; j < n; ++j) {
                m[i * n + j] -= f * m[k * n + j];
            }
            b[i] -= f * b[k];
        }
    }
    std::vector<Complex> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        Complex acc = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) {
            acc -= m[ii * n + j] * x[j];
        }
        x[ii] = acc / m[ii * n + ii];
    }
    return x;
}

/// Inverse iteration from lambda; returns the eigenvector estimate and the
/// relative residual ||A v - lambda v|| / ||v||.
inline std::pair<std::vector<Complex>, double> eigen_residual(const LinOp& a, Complex lambda) {
    const std::size_t n = a.dim();
    std::vector<Complex> v(n, Complex(1.0, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        v[i] += Complex(0.01 * static_cast<double>(i + 1), 0.0); // break symmetry with the all-ones start
    }
    auto normalize = [](std::vector<Complex>& u) {
        double s = 0.0;
        for (const auto& c : u) {
            s += std::norm(c);
        }
        s = std::sqrt(s);
        if (s > 0.0 && std::isfinite(s)) {
            for (auto& c : u) {
                c /= s;
            }
        }
    };
    auto residual = [&](const std::vector<Complex>& u) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            Complex acc{};
            for (std::size_t j = 0; j < n; ++j) {
                acc += a(i, j) * u[j];
            }
            acc -= lambda * u[i];
            num += std::norm(acc);
            den += std::norm(u[i]);
        }
        return den > 0.0 ? std::sqrt(num / den) : INFINITY;
    };
    normalize(v);
    double best = residual(v);
    std::vector<Complex> best_v = v;
    for (int it = 0; it < 4; ++it) {
        v = shifted_solve(a, lambda, v);
        normalize(v);
        const double res = residual(v);
        if (res < best) {
            best = res;
            best_v = v;
        }
    }
    return {best_v, best};
}

} // namespace driftlab
