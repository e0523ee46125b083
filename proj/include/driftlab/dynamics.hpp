#pragma once

// Coupled state/observer updates on R^n, the r-perturbed family
// F_r = phi + r O, fixed-point location, Jacobians, fold/flip threshold
// search and bifurcation sweeps.

#include "driftlab/cascade.hpp"
#include "driftlab/entropy_ledger.hpp"
#include "driftlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

namespace driftlab {

struct Monomial {
    double coef = 0.0;
    std::vector<unsigned> powers; // one exponent per coordinate
};

struct AffineMap {
    LinOp A;
    Vector b;
};

struct PolynomialMap {
    std::vector<std::vector<Monomial>> coords; // coords[i] is the i-th output
};

struct MapSpec;

struct CompositeMap {
    enum class Op { Pipeline, Sum };
    Op op = Op::Pipeline;
    std::vector<MapSpec> parts;
    std::vector<double> weights; // Sum only
};

struct MapSpec {
    std::size_t dim = 0;
    std::variant<AffineMap, PolynomialMap, CompositeMap> body;

    static MapSpec affine(LinOp A, Vector b = {}) {
        const std::size_t n = A.dim();
        if (b.empty()) {
            b.assign(n, 0.0);
        }
        MapSpec m{n, AffineMap{std::move(A), std::move(b)}};
        m.validate();
        return m;
    }

    static MapSpec scalar(std::size_t dim, double c) { return affine(c * LinOp::identity(dim)); }
    static MapSpec identity(std::size_t dim) { return affine(LinOp::identity(dim)); }
    static MapSpec zero(std::size_t dim) { return affine(LinOp(dim)); }

    static MapSpec polynomial(std::size_t dim, std::vector<std::vector<Monomial>> coords) {
        MapSpec m{dim, PolynomialMap{std::move(coords)}};
        m.validate();
        return m;
    }

    static MapSpec sum(std::vector<MapSpec> parts, std::vector<double> weights) {
        if (parts.empty()) {
            throw Error(ErrorKind::DimMismatch, "a sum needs at least one part");
        }
        const std::size_t n = parts.front().dim;
        MapSpec m{n, CompositeMap{CompositeMap::Op::Sum, std::move(parts), std::move(weights)}};
        m.validate();
        return m;
    }

    static MapSpec pipeline(std::vector<MapSpec> parts) {
        if (parts.empty()) {
            throw Error(ErrorKind::DimMismatch, "a pipeline needs at least one stage");
        }
        const std::size_t n = parts.front().dim;
        MapSpec m{n, CompositeMap{CompositeMap::Op::Pipeline, std::move(parts), {}}};
        m.validate();
        return m;
    }

    [[nodiscard]] bool is_affine() const { return std::holds_alternative<AffineMap>(body); }
    [[nodiscard]] bool is_polynomial() const { return std::holds_alternative<PolynomialMap>(body); }

    void validate() const {
        if (dim == 0) {
            throw Error(ErrorKind::DimMismatch, "map dimension must be positive");
        }
        if (const auto* a = std::get_if<AffineMap>(&body)) {
            if (a->A.dim() != dim || a->b.size() != dim) {
                throw Error(ErrorKind::DimMismatch, "affine map shape does not match its dimension");
            }
            a->A.validate();
            for (double v : a->b) {
                if (!std::isfinite(v)) {
                    throw Error(ErrorKind::NonFinite, "affine offset is not finite");
                }
            }
        } else if (const auto* p = std::get_if<PolynomialMap>(&body)) {
            if (p->coords.size() != dim) {
                throw Error(ErrorKind::DimMismatch, "polynomial map needs one term list per coordinate");
            }
            for (const auto& terms : p->coords) {
                for (const auto& t : terms) {
                    if (t.powers.size() != dim) {
                        throw Error(ErrorKind::DimMismatch, "monomial exponent vector has the wrong length");
                    }
                    unsigned degree = 0;
                    for (unsigned e : t.powers) {
                        degree += e;
                    }
                    if (degree > 3) {
                        throw Error(ErrorKind::DomainError, "polynomial terms are limited to total degree 3");
                    }
                    if (!std::isfinite(t.coef)) {
                        throw Error(ErrorKind::NonFinite, "polynomial coefficient is not finite");
                    }
                }
            }
        } else {
            const auto& c = std::get<CompositeMap>(body);
            for (const auto& part : c.parts) {
                if (part.dim != dim) {
                    throw Error(ErrorKind::DimMismatch, "composite parts disagree on dimension");
                }
            }
            if (c.op == CompositeMap::Op::Sum && c.weights.size() != c.parts.size()) {
                throw Error(ErrorKind::DimMismatch, "sum needs one weight per part");
            }
        }
    }
};

inline Vector evaluate(const MapSpec& f, std::span<const double> x) {
    if (x.size() != f.dim) {
        throw Error(ErrorKind::DimMismatch, "state has dimension " + std::to_string(x.size()) + ", map expects " +
                                                std::to_string(f.dim));
    }
    if (const auto* a = std::get_if<AffineMap>(&f.body)) {
        Vector y = a->A * x;
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] += a->b[i];
        }
        return y;
    }
    if (const auto* p = std::get_if<PolynomialMap>(&f.body)) {
        Vector y(f.dim, 0.0);
        for (std::size_t i = 0; i < f.dim; ++i) {
            for (const auto& t : p->coords[i]) {
                double term = t.coef;
                for (std::size_t j = 0; j < f.dim; ++j) {
                    for (unsigned e = 0; e < t.powers[j]; ++e) {
                        term *= x[j];
                    }
                }
                y[i] += term;
            }
        }
        return y;
    }
    const auto& c = std::get<CompositeMap>(f.body);
    if (c.op == CompositeMap::Op::Pipeline) {
        Vector y(x.begin(), x.end());
        for (const auto& part : c.parts) {
            y = evaluate(part, y);
        }
        return y;
    }
    Vector y(f.dim, 0.0);
    for (std::size_t k = 0; k < c.parts.size(); ++k) {
        const Vector yk = evaluate(c.parts[k], x);
        for (std::size_t i = 0; i < f.dim; ++i) {
            y[i] += c.weights[k] * yk[i];
        }
    }
    return y;
}

/// Analytic Jacobian; the chain rule covers composites.
inline LinOp jacobian(const MapSpec& f, std::span<const double> x) {
    if (x.size() != f.dim) {
        throw Error(ErrorKind::DimMismatch, "state dimension does not match the map");
    }
    const std::size_t n = f.dim;
    LinOp j(n);
    if (const auto* a = std::get_if<AffineMap>(&f.body)) {
        j = a->A;
    } else if (const auto* p = std::get_if<PolynomialMap>(&f.body)) {
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& t : p->coords[i]) {
                for (std::size_t d = 0; d < n; ++d) {
                    if (t.powers[d] == 0) {
                        continue;
                    }
                    double term = t.coef * static_cast<double>(t.powers[d]);
                    for (std::size_t k = 0; k < n; ++k) {
                        const unsigned e = k == d ? t.powers[k] - 1 : t.powers[k];
                        for (unsigned r = 0; r < e; ++r) {
                            term *= x[k];
                        }
                    }
                    j(i, d) += term;
                }
            }
        }
    } else {
        const auto& c = std::get<CompositeMap>(f.body);
        if (c.op == CompositeMap::Op::Pipeline) {
            j = LinOp::identity(n);
            Vector y(x.begin(), x.end());
            for (const auto& part : c.parts) {
                j = jacobian(part, y) * j;
                y = evaluate(part, y);
            }
        } else {
            for (std::size_t k = 0; k < c.parts.size(); ++k) {
                j = j + c.weights[k] * jacobian(c.parts[k], x);
            }
        }
    }
    for (double v : j.entries()) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::NonFinite, "Jacobian has a non-finite entry");
        }
    }
    return j;
}

/// Central differences with h = 1e-6 max(1, |x_i|).
inline LinOp jacobian_fd(const MapSpec& f, std::span<const double> x) {
    const std::size_t n = f.dim;
    LinOp j(n);
    Vector xp(x.begin(), x.end());
    for (std::size_t d = 0; d < n; ++d) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[d]));
        xp[d] = x[d] + h;
        const Vector fp = evaluate(f, xp);
        xp[d] = x[d] - h;
        const Vector fm = evaluate(f, xp);
        xp[d] = x[d];
        for (std::size_t i = 0; i < n; ++i) {
            j(i, d) = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    for (double v : j.entries()) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::NonFinite, "finite-difference Jacobian has a non-finite entry");
        }
    }
    return j;
}

/// F_r(x) = phi(x) + r O(x). Affine pairs collapse to a single affine map.
inline MapSpec perturbed_map(const MapSpec& phi, const MapSpec& observer, double r) {
    if (phi.dim != observer.dim) {
        throw Error(ErrorKind::DimMismatch, "phi and the observer back-action differ in dimension");
    }
    if (phi.is_affine() && observer.is_affine()) {
        const auto& a = std::get<AffineMap>(phi.body);
        const auto& b = std::get<AffineMap>(observer.body);
        Vector off(phi.dim);
        for (std::size_t i = 0; i < phi.dim; ++i) {
            off[i] = a.b[i] + r * b.b[i];
        }
        return MapSpec::affine(a.A + r * b.A, std::move(off));
    }
    return MapSpec::sum({phi, observer}, {1.0, r});
}

struct CoupledState {
    Vector x; // algebra state
    Vector o; // observer state

    friend bool operator==(const CoupledState&, const CoupledState&) = default;
};

namespace detail {
inline void require_finite(std::span<const double> v, const char* what) {
    for (double c : v) {
        if (!std::isfinite(c)) {
            throw Error(ErrorKind::NonFinite, std::string(what) + " has a non-finite coordinate");
        }
    }
}
} // namespace detail

/// (x, o) -> (phi(x), O(phi(x)))
inline CoupledState coupled_step(const MapSpec& phi, const MapSpec& observer, const CoupledState& s) {
    if (s.x.size() != phi.dim || s.o.size() != observer.dim || phi.dim != observer.dim) {
        throw Error(ErrorKind::DimMismatch, "coupled state does not match the maps");
    }
    CoupledState next;
    next.x = evaluate(phi, s.x);
    next.o = evaluate(observer, next.x);
    detail::require_finite(next.x, "phi(x)");
    detail::require_finite(next.o, "O(phi(x))");
    return next;
}

struct Trajectory {
    std::vector<CoupledState> states;
    double r = 0.0;
    std::uint64_t seed = 0;
    std::size_t transient = 0;
};

/// Runs the coupled update; the observer refreshes only on every
/// `schedule`-th step and holds its value otherwise.
inline Trajectory simulate_coupled(const MapSpec& phi, const MapSpec& observer, CoupledState start,
                                   std::size_t steps, std::size_t schedule = 1) {
    if (schedule == 0) {
        throw Error(ErrorKind::DomainError, "observation schedule must be at least 1");
    }
    Trajectory traj;
    traj.states.push_back(std::move(start));
    for (std::size_t n = 1; n <= steps; ++n) {
        CoupledState next = coupled_step(phi, observer, traj.states.back());
        if (n % schedule != 0) {
            next.o = traj.states.back().o;
        }
        traj.states.push_back(std::move(next));
    }
    return traj;
}

inline constexpr std::size_t kDefaultFixedPointMaxIter = 10'000;
inline constexpr double kDefaultFixedPointTol = 1e-10;

struct FixedPointResult {
    Vector x;
    double residual = 0.0; // ||F(x) - x||_inf
    std::size_t iterations = 0;
};

/// x <- x + beta (F(x) - x); a step that does not lower the residual is rejected and
/// beta halves; an accepted step doubles it again, up to 1. A stalled run
/// finishes with damped Newton steps.
inline FixedPointResult find_fixed_point(const MapSpec& f, Vector x, std::size_t max_iter = kDefaultFixedPointMaxIter,
                                         double tol = kDefaultFixedPointTol) {
    auto residual_of = [&](const Vector& at, Vector& fx) {
        fx = evaluate(f, at);
        double r = 0.0;
        for (std::size_t i = 0; i < at.size(); ++i) {
            r = std::max(r, std::abs(fx[i] - at[i]));
        }
        return std::isfinite(r) ? r : INFINITY;
    };
    Vector fx;
    double res = residual_of(x, fx);
    double beta = 1.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        if (res <= tol) {
            return FixedPointResult{std::move(x), res, it};
        }
        Vector trial(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            trial[i] = x[i] + beta * (fx[i] - x[i]);
        }
        Vector ftrial;
        const double tres = residual_of(trial, ftrial);
        if (!(tres < res)) {
            beta *= 0.5;
            if (beta < 1e-12) {
                break;
            }
            continue;
        }
        x = std::move(trial);
        fx = std::move(ftrial);
        res = tres;
        beta = std::min(1.0, 2.0 * beta);
    }
    if (res <= tol) {
        return FixedPointResult{std::move(x), res, max_iter};
    }
    // Damping cannot settle on a repelling or nearly neutral fixed point, so
    // fall back to Newton on F(x) - x with backtracking.
    for (std::size_t it = 0; it < 100 && res > tol; ++it) {
        std::vector<Complex> rhs(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            rhs[i] = Complex(x[i] - fx[i], 0.0);
        }
        const std::vector<Complex> delta = shifted_solve(jacobian(f, x), Complex(1.0, 0.0), std::move(rhs));
        bool moved = false;
        for (double t = 1.0; t >= 1e-6; t *= 0.5) {
            Vector trial(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                trial[i] = x[i] + t * delta[i].real();
            }
            Vector ftrial;
            const double tres = residual_of(trial, ftrial);
            if (tres < res) {
                x = std::move(trial);
                fx = std::move(ftrial);
                res = tres;
                moved = true;
                break;
            }
        }
        if (!moved) {
            break;
        }
    }
    if (res <= tol) {
        return FixedPointResult{std::move(x), res, max_iter};
    }
    throw Error(ErrorKind::NoConvergence, "fixed-point iteration stalled at residual " + std::to_string(res));
}

struct StabilityReport {
    double spectral_radius = 0.0;
    bool stable = false;
    std::vector<Complex> eigenvalues;
};

inline StabilityReport stability_report(const LinOp& j) {
    SpectrumReport s = spectrum(j);
    return StabilityReport{s.max_modulus, s.max_modulus < 1.0 - 1e-9, std::move(s.eigenvalues)};
}

struct CriticalRoot {
    double r = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double residual = 0.0; // |det| at r
    int multiplicity = 1;
};

struct BranchFailure {
    double r_lo = 0.0;
    double r_hi = 0.0;
    std::string reason;
};

struct CriticalReport {
    std::optional<double> r_c_fold; // det(I - DF) = 0, eigenvalue +1
    std::optional<double> r_c_flip; // det(I + DF) = 0, eigenvalue -1
    std::vector<CriticalRoot> fold_roots;
    std::vector<CriticalRoot> flip_roots;
    bool fold_degenerate = false; // det(I - DF) vanishes on the whole grid
    bool flip_degenerate = false;
    std::vector<BranchFailure> failures;
};

namespace detail {

struct BranchPoint {
    double r = 0.0;
    Vector x;
    double d_minus = 0.0; // det(I - DF)
    double d_plus = 0.0;  // det(I + DF)
    int above_one = 0;    // real eigenvalues > 1
    int below_minus_one = 0;
};

inline BranchPoint analyse_branch(const MapSpec& phi, const MapSpec& observer, double r, const Vector& guess,
                                  const Vector& fallback) {
    const MapSpec f = perturbed_map(phi, observer, r);
    BranchPoint bp;
    bp.r = r;
    try {
        bp.x = find_fixed_point(f, guess).x;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoConvergence) {
            throw;
        }
        bp.x = find_fixed_point(f, fallback).x;
    }
    const LinOp j = jacobian(f, bp.x);
    const LinOp id = LinOp::identity(j.dim());
    bp.d_minus = determinant(id - j);
    bp.d_plus = determinant(id + j);
    for (const auto& mu : spectrum(j).eigenvalues) {
        if (std::abs(mu.imag()) > 1e-9 * std::max(1.0, std::abs(mu))) {
            continue;
        }
        bp.above_one += mu.real() > 1.0 ? 1 : 0;
        bp.below_minus_one += mu.real() < -1.0 ? 1 : 0;
    }
    return bp;
}

} // namespace detail

inline constexpr double kCriticalResidual = 1e-8;

/// Scans the grid along a continued fixed-point branch and brackets every
/// change in the number of real eigenvalues beyond +1 (fold) or -1 (flip),
/// then bisects each bracket.
inline CriticalReport find_critical_r(const MapSpec& phi, const MapSpec& observer, double r_lo, double r_hi,
                                      std::size_t grid, const Vector& x0) {
    if (!(r_lo < r_hi) || grid < 2) {
        throw Error(ErrorKind::DomainError, "need r_lo < r_hi and at least two grid points");
    }
    CriticalReport report;
    std::vector<std::optional<detail::BranchPoint>> points(grid);
    Vector guess = x0;
    for (std::size_t k = 0; k < grid; ++k) {
        const double r = r_lo + (r_hi - r_lo) * static_cast<double>(k) / static_cast<double>(grid - 1);
        try {
            points[k] = detail::analyse_branch(phi, observer, r, guess, x0);
            guess = points[k]->x;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoConvergence && e.kind() != ErrorKind::NonFinite) {
                throw;
            }
            const double prev = k == 0 ? r : r_lo + (r_hi - r_lo) * static_cast<double>(k - 1) / static_cast<double>(grid - 1);
            report.failures.push_back(BranchFailure{prev, r, e.what()});
            guess = x0;
        }
    }

    auto degenerate = [&](auto det_of) {
        for (const auto& p : points) {
            if (p && std::abs(det_of(*p)) > 1e-12) {
                return false;
            }
        }
        return std::any_of(points.begin(), points.end(), [](const auto& p) { return p.has_value(); });
    };
    report.fold_degenerate = degenerate([](const detail::BranchPoint& p) { return p.d_minus; });
    report.flip_degenerate = degenerate([](const detail::BranchPoint& p) { return p.d_plus; });

    auto refine = [&](const detail::BranchPoint& lo_pt, const detail::BranchPoint& hi_pt, bool flip,
                      std::vector<CriticalRoot>& out) {
        auto count = [flip](const detail::BranchPoint& p) { return flip ? p.below_minus_one : p.above_one; };
        auto det = [flip](const detail::BranchPoint& p) { return flip ? p.d_plus : p.d_minus; };
        detail::BranchPoint lo = lo_pt;
        detail::BranchPoint hi = hi_pt;
        const int c_lo = count(lo);
        try {
            for (int it = 0; it < 200 && hi.r - lo.r > 1e-13 * std::max(1.0, std::abs(lo.r)); ++it) {
                if (std::abs(det(lo)) <= 1e-15) {
                    hi = lo;
                    break;
                }
                const double mid = 0.5 * (lo.r + hi.r);
                detail::BranchPoint m = detail::analyse_branch(phi, observer, mid, lo.x, x0);
                if (count(m) == c_lo && (det(m) == 0.0 || std::signbit(det(m)) == std::signbit(det(lo)))) {
                    lo = std::move(m);
                } else {
                    hi = std::move(m);
                }
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoConvergence && e.kind() != ErrorKind::NonFinite) {
                throw;
            }
            report.failures.push_back(BranchFailure{lo.r, hi.r, e.what()});
            return;
        }
        const detail::BranchPoint& best = std::abs(det(lo)) <= std::abs(det(hi)) ? lo : hi;
        CriticalRoot root;
        root.r = best.r;
        root.bracket_lo = lo_pt.r;
        root.bracket_hi = hi_pt.r;
        root.residual = std::abs(det(best));
        root.multiplicity = std::max(1, std::abs(count(hi_pt) - count(lo_pt)));
        out.push_back(root);
    };

    for (std::size_t k = 0; k + 1 < grid; ++k) {
        if (!points[k] || !points[k + 1]) {
            continue;
        }
        const auto& a = *points[k];
        const auto& b = *points[k + 1];
        if (!report.fold_degenerate &&
            (a.above_one != b.above_one || (a.d_minus != 0.0 && b.d_minus != 0.0 &&
                                            std::signbit(a.d_minus) != std::signbit(b.d_minus)))) {
            refine(a, b, false, report.fold_roots);
        }
        if (!report.flip_degenerate &&
            (a.below_minus_one != b.below_minus_one ||
             (a.d_plus != 0.0 && b.d_plus != 0.0 && std::signbit(a.d_plus) != std::signbit(b.d_plus)))) {
            refine(a, b, true, report.flip_roots);
        }
    }
    if (!report.fold_roots.empty()) {
        report.r_c_fold = report.fold_roots.front().r;
    }
    if (!report.flip_roots.empty()) {
        report.r_c_flip = report.flip_roots.front().r;
    }
    return report;
}

enum class AttractorClass { FixedPoint, Periodic, Aperiodic, Divergent };

struct DiagramRow {
    double r = 0.0;
    AttractorClass cls = AttractorClass::Aperiodic;
    std::size_t period = 0; // 1 for fixed points, p for period-p, 0 otherwise
    std::vector<Vector> points;
    std::optional<Complex> lead_eigenvalue; // at the located fixed point

    [[nodiscard]] std::string label() const {
        switch (cls) {
        case AttractorClass::FixedPoint: return "fixed-point";
        case AttractorClass::Periodic: return "period-" + std::to_string(period);
        case AttractorClass::Aperiodic: return "aperiodic";
        case AttractorClass::Divergent: return "divergent";
        }
        return "aperiodic";
    }
};

struct BifurcationDiagram {
    std::vector<DiagramRow> rows;
};

struct SweepSettings {
    double r_lo = 0.0;
    double r_hi = 1.0;
    std::size_t steps = 2;
    std::size_t transient = 500;
    std::size_t sample = 64;
    Vector x0;                 // empty: drawn from the seed
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    double period_tol = 1e-6;
    std::size_t max_period = 16;
    double divergence = 1e12;

    [[nodiscard]] double r_at(std::size_t k) const {
        return r_lo + (r_hi - r_lo) * static_cast<double>(k) / static_cast<double>(steps - 1);
    }
};

/// Classifies a sampled orbit: smallest p <= max_period with every
/// s[k+p] within period_tol of s[k].
inline std::pair<AttractorClass, std::size_t> classify_orbit(const std::vector<Vector>& orbit, double tol,
                                                             std::size_t max_period) {
    for (std::size_t p = 1; p <= max_period && p < orbit.size(); ++p) {
        bool ok = true;
        for (std::size_t k = 0; k + p < orbit.size() && ok; ++k) {
            for (std::size_t i = 0; i < orbit[k].size(); ++i) {
                if (std::abs(orbit[k + p][i] - orbit[k][i]) > tol) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok) {
            return {p == 1 ? AttractorClass::FixedPoint : AttractorClass::Periodic, p};
        }
    }
    return {AttractorClass::Aperiodic, 0};
}

inline DiagramRow sweep_row(const MapSpec& phi, const MapSpec& observer, double r, const SweepSettings& s,
                            const Vector& x0) {
    const MapSpec f = perturbed_map(phi, observer, r);
    DiagramRow row;
    row.r = r;
    auto escaped = [&](const Vector& v) {
        for (double c : v) {
            if (!std::isfinite(c) || std::abs(c) > s.divergence) {
                return true;
            }
        }
        return false;
    };
    Vector x = x0;
    bool diverged = false;
    for (std::size_t n = 0; n < s.transient && !diverged; ++n) {
        x = evaluate(f, x);
        diverged = escaped(x);
    }
    std::vector<Vector> orbit;
    for (std::size_t n = 0; n < s.sample && !diverged; ++n) {
        orbit.push_back(x);
        x = evaluate(f, x);
        diverged = escaped(x);
    }
    if (diverged) {
        row.cls = AttractorClass::Divergent;
    } else {
        auto [cls, p] = classify_orbit(orbit, s.period_tol, s.max_period);
        row.cls = cls;
        row.period = p;
        const std::size_t keep = p > 0 ? p : std::min<std::size_t>(orbit.size(), s.max_period);
        row.points.assign(orbit.begin(), orbit.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    try {
        const FixedPointResult fp = find_fixed_point(f, x0);
        const auto eig = spectrum(jacobian(f, fp.x)).eigenvalues;
        row.lead_eigenvalue = *std::max_element(eig.begin(), eig.end(), [](const Complex& a, const Complex& b) {
            const double ma = std::abs(a);
            const double mb = std::abs(b);
            return ma != mb ? ma < mb : (a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag());
        });
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoConvergence && e.kind() != ErrorKind::NonFinite) {
            throw;
        }
    }
    return row;
}

/// Starting point for a sweep: the configured x0, or a seeded draw in [0.1, 0.9]^n.
inline Vector sweep_start(const SweepSettings& s, std::size_t dim) {
    if (!s.x0.empty()) {
        if (s.x0.size() != dim) {
            throw Error(ErrorKind::DimMismatch, "x0 does not match the map dimension");
        }
        return s.x0;
    }
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> draw(0.1, 0.9);
    Vector x(dim);
    for (double& c : x) {
        c = draw(rng);
    }
    return x;
}

/// Rows are independent; with threads > 1 they are computed concurrently and
/// merged in r order.
inline BifurcationDiagram sweep_bifurcation(const MapSpec& phi, const MapSpec& observer, const SweepSettings& s) {
    if (s.transient < 1 || s.sample < 2 || s.steps < 2 || !(s.r_lo < s.r_hi)) {
        throw Error(ErrorKind::DomainError, "sweep needs transient >= 1, sample >= 2 and an increasing r grid");
    }
    if (phi.dim != observer.dim) {
        throw Error(ErrorKind::DimMismatch, "phi and the observer back-action differ in dimension");
    }
    const Vector x0 = sweep_start(s, phi.dim);
    BifurcationDiagram diagram;
    diagram.rows.resize(s.steps);
    const std::size_t workers = std::max<std::size_t>(1, std::min(s.threads, s.steps));
    if (workers == 1) {
        for (std::size_t k = 0; k < s.steps; ++k) {
            diagram.rows[k] = sweep_row(phi, observer, s.r_at(k), s, x0);
        }
        return diagram;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t k = w; k < s.steps; k += workers) {
                        diagram.rows[k] = sweep_row(phi, observer, s.r_at(k), s, x0);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return diagram;
}

struct LyapunovTrace {
    std::vector<double> values;
    bool monotone = true;
    std::optional<std::size_t> first_violation; // step n with L_{n+1} > L_n + tol
};

/// L_n = H(X_n) + alpha H_O(X_n); ledger_states[n] = (state distribution, observer distribution).
inline LyapunovTrace lyapunov_trace(const Trajectory& traj,
                                    const std::vector<std::pair<ProbState, ProbState>>& ledger_states, double alpha) {
    if (ledger_states.size() != traj.states.size()) {
        throw Error(ErrorKind::LengthMismatch, "ledger has " + std::to_string(ledger_states.size()) +
                                                   " entries for a trajectory of " +
                                                   std::to_string(traj.states.size()));
    }
    LyapunovTrace out;
    for (const auto& [px, po] : ledger_states) {
        out.values.push_back(shannon_entropy(px) + alpha * shannon_entropy(po));
    }
    for (std::size_t n = 0; n + 1 < out.values.size(); ++n) {
        if (out.values[n + 1] > out.values[n] + kBoundTolerance) {
            out.monotone = false;
            out.first_violation = n;
            break;
        }
    }
    return out;
}

/// Joint fixed-bin histogram of an ensemble of states over [lo, hi]^dim, as a
/// distribution on the cell labels. Coordinates outside the range clamp to the
/// edge cells.
inline ProbState bin_ensemble(const std::vector<Vector>& members, double lo, double hi, std::size_t bins,
                              const std::string& id) {
    if (bins == 0 || !(lo < hi) || members.empty()) {
        throw Error(ErrorKind::DomainError, "binning needs bins >= 1, lo < hi and a non-empty ensemble");
    }
    const std::size_t dim = members.front().size();
    std::size_t cells = 1;
    for (std::size_t d = 0; d < dim; ++d) {
        if (cells > 1'000'000 / bins) {
            throw Error(ErrorKind::CapExceeded, "too many histogram cells");
        }
        cells *= bins;
    }
    const std::size_t width = std::to_string(bins - 1).size();
    auto label_of = [&](std::size_t cell) {
        std::string label = "b";
        for (std::size_t d = 0; d < dim; ++d) {
            std::string digits = std::to_string(cell % bins);
            cell /= bins;
            label += (d == 0 ? "" : "_") + std::string(width - digits.size(), '0') + digits;
        }
        return label;
    };
    std::vector<std::string> labels;
    labels.reserve(cells);
    for (std::size_t c = 0; c < cells; ++c) {
        labels.push_back(label_of(c));
    }
    FinObj carrier = FinObj::make(id, labels);
    std::vector<double> mass(cells, 0.0);
    for (const auto& v : members) {
        if (v.size() != dim) {
            throw Error(ErrorKind::DimMismatch, "ensemble members differ in dimension");
        }
        std::size_t cell = 0;
        std::size_t stride = 1;
        for (std::size_t d = 0; d < dim; ++d) {
            const double t = (v[d] - lo) / (hi - lo) * static_cast<double>(bins);
            std::size_t b = 0;
            if (std::isnan(t)) {
                b = 0;
            } else if (t >= static_cast<double>(bins)) {
                b = bins - 1;
            } else if (t > 0.0) {
                b = static_cast<std::size_t>(t);
            }
            cell += b * stride;
            stride *= bins;
        }
        mass[*carrier.index_of(label_of(cell))] += 1.0;
    }
    for (double& m : mass) {
        m /= static_cast<double>(members.size());
    }
    return ProbState{std::move(carrier), std::move(mass)};
}

} // namespace driftlab
