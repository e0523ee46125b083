#pragma once

// Temporal iteration and the stabilization of Y -> V(phi(Y)) over a declared
// finite universe.

#include "driftlab/finite_category.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace driftlab {

inline constexpr std::size_t kDefaultThetaMaxIter = 64;

/// [X, phi(X), ..., phi^n(X)]
inline std::vector<FinObj> iterate_temporal(const FunctorRep& phi, const FinObj& x, std::size_t n) {
    std::vector<FinObj> out;
    out.reserve(n + 1);
    out.push_back(x);
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back(phi.map_object(out.back()));
    }
    return out;
}

/// F(Y) = V(phi(Y))
inline FinObj apply_F(const FunctorRep& verification, const FunctorRep& phi, const FinObj& y) {
    return verification.map_object(phi.map_object(y));
}

inline std::optional<FinMor> apply_F(const FunctorRep& verification, const FunctorRep& phi, const FinMor& f) {
    auto pf = phi.try_map_morphism(f);
    if (!pf) {
        return std::nullopt;
    }
    return verification.try_map_morphism(*pf);
}

struct ChainRecord {
    std::size_t stage = 0;
    FinObj carrier;
    std::optional<FinMor> connecting_map; // absent at stage 0 and when the step is not an inclusion
};

enum class LimitReading {
    Union,                   // every connecting map is an inclusion; the limit is the union of the chain
    IsomorphismStabilization // first stage isomorphic to its image governs
};

constexpr const char* to_string(LimitReading r) noexcept {
    return r == LimitReading::Union ? "union" : "isomorphism-stabilization";
}

struct ThetaResult {
    FinObj carrier;
    std::size_t iterations = 0;
    bool converged = false;
    std::optional<FinMor> witness; // carrier -> F(carrier), present iff converged
    std::vector<ChainRecord> chain;
    LimitReading reading = LimitReading::IsomorphismStabilization;
};

/// Inclusion prev -> next when every label of prev survives in next.
inline std::optional<FinMor> label_inclusion(const FinObj& prev, const FinObj& next) {
    std::vector<std::size_t> image;
    image.reserve(prev.size());
    for (const auto& x : prev.elements) {
        auto j = next.index_of(x);
        if (!j) {
            return std::nullopt;
        }
        image.push_back(*j);
    }
    return FinMor{"incl_" + prev.id + "_" + next.id, prev, next, std::move(image)};
}

namespace detail {

// Endomorphisms of y declared in the universe, paired with their F-images.
inline std::vector<std::pair<FinMor, FinMor>> structure_pairs(const Universe& u, const FunctorRep& verification,
                                                              const FunctorRep& phi, const FinObj& y) {
    std::vector<std::pair<FinMor, FinMor>> out;
    for (const auto& [id, g] : u.morphisms) {
        if (!(g.src == y) || !(g.dst == y)) {
            continue;
        }
        if (auto fg = apply_F(verification, phi, g)) {
            out.emplace_back(g, *fg);
        }
    }
    return out;
}

inline std::vector<SquareViolation> intertwining_violations(const FinMor& w,
                                                            const std::vector<std::pair<FinMor, FinMor>>& pairs) {
    std::vector<SquareViolation> out;
    for (const auto& [g, fg] : pairs) {
        if (!(fg.src == w.dst) || !(fg.dst == w.dst)) {
            out.push_back(SquareViolation{"<" + g.id + ">", "F(" + g.id + ") has the wrong shape", ""});
            continue;
        }
        for (std::size_t i = 0; i < w.src.size(); ++i) {
            const std::string& left = w.dst.elements[fg.image[w.image[i]]];
            const std::string& right = w.dst.elements[w.image[g.image[i]]];
            if (left != right) {
                out.push_back(SquareViolation{w.src.elements[i] + " via " + g.id, left, right});
            }
        }
    }
    return out;
}

} // namespace detail

/// First bijection y -> F(y), in lexicographic order of image vectors, that is
/// an arrow of the universe and intertwines every declared endomorphism g of y
/// with F(g).
inline std::optional<FinMor> find_structure_bijection(const Universe& u, const FunctorRep& verification,
                                                      const FunctorRep& phi, const FinObj& y, const FinObj& fy) {
    if (y.size() != fy.size()) {
        return std::nullopt;
    }
    std::vector<FinMor> candidates;
    if (y == fy) {
        candidates.push_back(identity(y));
    }
    for (const auto& [id, g] : u.morphisms) {
        if (g.src == y && g.dst == fy && is_bijection(g)) {
            candidates.push_back(g);
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const FinMor& a, const FinMor& b) { return a.image < b.image; });
    const auto pairs = detail::structure_pairs(u, verification, phi, y);
    for (const auto& w : candidates) {
        if (detail::intertwining_violations(w, pairs).empty()) {
            return w;
        }
    }
    return std::nullopt;
}

inline ThetaResult iterate_to_theta(const Universe& u, const FunctorRep& verification, const FunctorRep& phi,
                                    const FinObj& start, std::size_t max_iter = kDefaultThetaMaxIter) {
    if (max_iter < 1) {
        throw Error(ErrorKind::DomainError, "max_iter must be at least 1");
    }
    ThetaResult result;
    FinObj y = start;
    result.chain.push_back(ChainRecord{0, y, std::nullopt});
    bool all_inclusions = true;
    for (std::size_t n = 0;; ++n) {
        FinObj fy = apply_F(verification, phi, y);
        if (auto w = find_structure_bijection(u, verification, phi, y, fy)) {
            result.carrier = y;
            result.iterations = n;
            result.converged = true;
            result.witness = std::move(w);
            break;
        }
        if (n + 1 > max_iter) {
            result.carrier = y;
            result.iterations = max_iter;
            break;
        }
        auto link = label_inclusion(y, fy);
        all_inclusions = all_inclusions && link.has_value();
        result.chain.push_back(ChainRecord{n + 1, fy, std::move(link)});
        y = std::move(fy);
    }
    result.reading = all_inclusions ? LimitReading::Union : LimitReading::IsomorphismStabilization;
    return result;
}

/// Re-checks the stored witness: shape, bijectivity, membership in the
/// universe and transport of the declared endomorphism structure.
inline SquareReport verify_theta(const Universe& u, const FunctorRep& verification, const FunctorRep& phi,
                                 const ThetaResult& theta) {
    if (!theta.converged || !theta.witness) {
        throw Error(ErrorKind::NoWitness, "theta did not converge; there is no witness to verify");
    }
    const FinMor& w = *theta.witness;
    const FinObj fy = apply_F(verification, phi, theta.carrier);
    SquareReport report;
    if (!(w.src == theta.carrier) || !(w.dst == fy)) {
        report.holds = false;
        report.violations.push_back(SquareViolation{"<shape>", w.src.id + "->" + w.dst.id, theta.carrier.id + "->" + fy.id});
        return report;
    }
    if (!is_bijection(w)) {
        report.violations.push_back(SquareViolation{"<bijection>", "witness is not a bijection", ""});
    }
    if (!u.find_arrow(w)) {
        // Localize against the closest arrow of the universe with the same shape.
        std::optional<FinMor> nearest;
        std::size_t best = w.src.size() + 1;
        std::vector<FinMor> pool;
        if (w.src == w.dst) {
            pool.push_back(identity(w.src));
        }
        for (const auto& [id, g] : u.morphisms) {
            if (g.src == w.src && g.dst == w.dst) {
                pool.push_back(g);
            }
        }
        for (const auto& g : pool) {
            std::size_t diff = 0;
            for (std::size_t i = 0; i < g.image.size(); ++i) {
                diff += g.image[i] != w.image[i] ? 1 : 0;
            }
            if (diff < best) {
                best = diff;
                nearest = g;
            }
        }
        if (nearest) {
            for (std::size_t i = 0; i < w.image.size(); ++i) {
                if (w.image[i] != nearest->image[i]) {
                    report.violations.push_back(SquareViolation{w.src.elements[i], w.dst.elements[w.image[i]],
                                                                w.dst.elements[nearest->image[i]]});
                }
            }
        } else {
            report.violations.push_back(SquareViolation{"<arrow>", "witness is not an arrow of the universe", ""});
        }
    }
    auto structural = detail::intertwining_violations(w, detail::structure_pairs(u, verification, phi, theta.carrier));
    report.violations.insert(report.violations.end(), structural.begin(), structural.end());
    report.holds = report.violations.empty();
    return report;
}

} // namespace driftlab
