#pragma once

// Damped observer cascades on R^n: C = Lambda I + sum (1 - lambda_i) theta_i,
// its eigenvalue-1 eigenspace, its spectrum, and the commutation test for
// parallel cascades.

#include "driftlab/linalg.hpp"
#include "driftlab/phase_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

namespace driftlab {

inline constexpr double kPeriodTolerance = 1e-9;
inline constexpr double kResidualTolerance = 1e-6;
inline constexpr double kHullTolerance = 1e-6;
inline constexpr double kNullSpaceTolerance = 1e-10;

struct CascadeStage {
    double lambda = 1.0;
    LinOp theta;
    std::size_t period = 1; // declared finite order, theta^period = I
};

struct CascadeSpec {
    std::vector<CascadeStage> stages;

    [[nodiscard]] std::size_t dim() const { return stages.empty() ? 0 : stages.front().theta.dim(); }

    /// Lambda = product of the damping parameters.
    [[nodiscard]] double contraction() const {
        double out = 1.0;
        for (const auto& s : stages) {
            out *= s.lambda;
        }
        return out;
    }

    void validate(std::size_t cap = kDefaultDimCap) const {
        if (stages.empty()) {
            throw Error(ErrorKind::DomainError, "a cascade needs at least one stage");
        }
        for (std::size_t i = 0; i < stages.size(); ++i) {
            const auto& s = stages[i];
            if (s.theta.dim() != dim()) {
                throw Error(ErrorKind::DimMismatch, "stage " + std::to_string(i) + " has a different dimension");
            }
            s.theta.validate(cap);
            if (!(s.lambda >= 0.0 && s.lambda <= 1.0)) {
                throw Error(ErrorKind::DomainError, "stage " + std::to_string(i) + " damping outside [0, 1]");
            }
            if (s.period == 0 ||
                inf_norm(matrix_power(s.theta, s.period) - LinOp::identity(dim())) > kPeriodTolerance) {
                throw Error(ErrorKind::InvalidPeriod,
                            "stage " + std::to_string(i) + " theta^" + std::to_string(s.period) + " is not the identity");
            }
        }
    }
};

/// Rotation by `turns` of a full turn in the (p, q) coordinate plane of R^dim.
/// Quarter-turn multiples are exact.
inline LinOp rotation(std::size_t dim, const RationalPhase& turns, std::size_t p = 0, std::size_t q = 1) {
    if (p >= dim || q >= dim || p == q) {
        throw Error(ErrorKind::DimMismatch, "rotation plane outside the space");
    }
    double c = 0.0;
    double s = 0.0;
    if (4 % turns.denominator() == 0) {
        const auto quarter = turns.numerator() * (4 / turns.denominator());
        static constexpr double kCos[] = {1.0, 0.0, -1.0, 0.0};
        static constexpr double kSin[] = {0.0, 1.0, 0.0, -1.0};
        c = kCos[quarter];
        s = kSin[quarter];
    } else {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(turns.numerator()) /
                             static_cast<double>(turns.denominator());
        c = std::cos(angle);
        s = std::sin(angle);
    }
    LinOp out = LinOp::identity(dim);
    out(p, p) = c;
    out(p, q) = -s;
    out(q, p) = s;
    out(q, q) = c;
    return out;
}

/// Matrix sending e_j to e_perm[j]; signs optional.
inline LinOp permutation_matrix(const std::vector<std::size_t>& perm, const std::vector<double>& signs = {}) {
    const std::size_t n = perm.size();
    std::vector<bool> seen(n, false);
    LinOp out(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (perm[j] >= n || seen[perm[j]]) {
            throw Error(ErrorKind::NotAutomorphism, "not a permutation");
        }
        seen[perm[j]] = true;
        out(perm[j], j) = signs.empty() ? 1.0 : signs.at(j);
    }
    return out;
}

/// Least k <= max_k with ||A^k - I||_inf <= tol, or 0 when none exists.
inline std::size_t operator_period(const LinOp& a, std::size_t max_k = 1024) {
    LinOp acc = a;
    const LinOp id = LinOp::identity(a.dim());
    for (std::size_t k = 1; k <= max_k; ++k) {
        if (inf_norm(acc - id) <= kPeriodTolerance) {
            return k;
        }
        acc = acc * a;
    }
    return 0;
}

/// C = Lambda I + sum (1 - lambda_i) theta_i
inline LinOp build_cascade(const CascadeSpec& spec) {
    spec.validate();
    const std::size_t n = spec.dim();
    LinOp c = spec.contraction() * LinOp::identity(n);
    for (const auto& s : spec.stages) {
        const double w = 1.0 - s.lambda;
        if (w == 0.0) {
            continue;
        }
        c = c + w * s.theta;
    }
    return c;
}

/// Product of the per-stage damped operators lambda_i I + (1 - lambda_i) theta_i
/// taken in the given order (order[0] acts first).
inline LinOp sequential_cascade(const CascadeSpec& spec, const std::vector<std::size_t>& order) {
    spec.validate();
    const std::size_t n = spec.dim();
    LinOp out = LinOp::identity(n);
    for (std::size_t idx : order) {
        const auto& s = spec.stages.at(idx);
        LinOp stage = s.lambda * LinOp::identity(n) + (1.0 - s.lambda) * s.theta;
        out = stage * out;
    }
    return out;
}

/// Orthonormal basis of null(I - C).
inline std::vector<Vector> cascade_fixed_points(const LinOp& c, double tol = kNullSpaceTolerance) {
    return null_space(LinOp::identity(c.dim()) - c, tol);
}

struct SpectrumReport {
    std::vector<Complex> eigenvalues; // with multiplicity, sorted by (re, im)
    std::vector<double> residuals;    // relative residual of an extracted eigenvector
    std::vector<bool> verified;
    std::vector<bool> hull_check;     // filled by check_hull_claim
    double max_modulus = 0.0;
};

inline SpectrumReport spectrum(const LinOp& c, std::size_t cap = kDefaultDimCap) {
    c.validate(cap);
    SpectrumReport report;
    report.eigenvalues = hessenberg_eigenvalues(hessenberg(c), 500 * c.dim());
    std::sort(report.eigenvalues.begin(), report.eigenvalues.end(), [](const Complex& a, const Complex& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    const double scale = std::max(1.0, inf_norm(c));
    for (const auto& lambda : report.eigenvalues) {
        const double res = eigen_residual(c, lambda).second;
        report.residuals.push_back(res);
        report.verified.push_back(res <= kResidualTolerance * scale);
        report.max_modulus = std::max(report.max_modulus, std::abs(lambda));
    }
    return report;
}

struct HullVerdict {
    double segment_lo = 1.0;
    double segment_hi = 1.0;
    std::vector<bool> inside;
    bool all_inside = true;
};

/// Whether each eigenvalue lies on the real segment spanned by {1} and {1/lambda_i}.
/// The verdict is a finding, not a requirement.
inline HullVerdict check_hull_claim(SpectrumReport& report, const CascadeSpec& spec) {
    HullVerdict v;
    for (const auto& s : spec.stages) {
        if (s.lambda == 0.0) {
            throw Error(ErrorKind::UndefinedClaim, "the hull uses 1/lambda, undefined for lambda = 0");
        }
        v.segment_lo = std::min(v.segment_lo, 1.0 / s.lambda);
        v.segment_hi = std::max(v.segment_hi, 1.0 / s.lambda);
    }
    for (const auto& z : report.eigenvalues) {
        const bool ok = std::abs(z.imag()) <= kHullTolerance && z.real() >= v.segment_lo - kHullTolerance &&
                        z.real() <= v.segment_hi + kHullTolerance;
        v.inside.push_back(ok);
        v.all_inside = v.all_inside && ok;
    }
    report.hull_check = v.inside;
    return v;
}

struct UnitModulusFinding {
    bool applies = false;          // some lambda_i = 1
    bool has_unit_eigenvalue = false;
};

inline UnitModulusFinding check_unit_modulus(const SpectrumReport& report, const CascadeSpec& spec) {
    UnitModulusFinding f;
    f.applies = std::any_of(spec.stages.begin(), spec.stages.end(), [](const auto& s) { return s.lambda == 1.0; });
    f.has_unit_eigenvalue = std::any_of(report.eigenvalues.begin(), report.eigenvalues.end(),
                                        [](const Complex& z) { return std::abs(std::abs(z) - 1.0) <= kHullTolerance; });
    return f;
}

struct CommutatorReport {
    bool commute = false;
    double norm = 0.0; // ||AB - BA||_inf
};

inline CommutatorReport check_commuting(const LinOp& a, const LinOp& b, double tol) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorKind::DimMismatch, "commutator of operators with different dimensions");
    }
    CommutatorReport r;
    r.norm = inf_norm(a * b - b * a);
    r.commute = r.norm <= tol;
    return r;
}

} // namespace driftlab
