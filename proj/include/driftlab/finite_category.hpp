#pragma once

// Finite-set semantics for the algebra and observer categories: objects are
// canonically ordered label sets, morphisms are total functions, functors and
// natural transformations are explicit tables over a declared universe.

#include "driftlab/error.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace driftlab {

struct FinObj {
    std::string id;
    std::vector<std::string> elements; // strictly increasing

    /// Sorts the labels; rejects duplicates.
    static FinObj make(std::string id, std::vector<std::string> elements) {
        std::sort(elements.begin(), elements.end());
        if (std::adjacent_find(elements.begin(), elements.end()) != elements.end()) {
            throw Error(ErrorKind::InvalidObject, "object '" + id + "' has duplicate element labels");
        }
        return FinObj{std::move(id), std::move(elements)};
    }

    [[nodiscard]] std::size_t size() const noexcept { return elements.size(); }
    [[nodiscard]] bool empty() const noexcept { return elements.empty(); }

    [[nodiscard]] std::optional<std::size_t> index_of(const std::string& label) const {
        auto it = std::lower_bound(elements.begin(), elements.end(), label);
        if (it == elements.end() || *it != label) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - elements.begin());
    }

    [[nodiscard]] bool contains(const std::string& label) const { return index_of(label).has_value(); }

    friend bool operator==(const FinObj&, const FinObj&) = default;
};

/// A total function between two finite objects, stored as image indices.
struct FinMor {
    std::string id;
    FinObj src;
    FinObj dst;
    std::vector<std::size_t> image; // image[i] indexes dst.elements

    static FinMor from_indices(std::string id, FinObj src, FinObj dst, std::vector<std::size_t> image) {
        if (image.size() != src.size()) {
            throw Error(ErrorKind::InvalidMorphism, "morphism '" + id + "' is not total on its source");
        }
        for (std::size_t j : image) {
            if (j >= dst.size()) {
                throw Error(ErrorKind::InvalidMorphism, "morphism '" + id + "' has an image outside its target");
            }
        }
        return FinMor{std::move(id), std::move(src), std::move(dst), std::move(image)};
    }

    static FinMor from_table(std::string id, FinObj src, FinObj dst,
                             const std::map<std::string, std::string>& table) {
        std::vector<std::size_t> image;
        image.reserve(src.size());
        for (const auto& x : src.elements) {
            auto it = table.find(x);
            if (it == table.end()) {
                throw Error(ErrorKind::InvalidMorphism, "morphism '" + id + "' is undefined at '" + x + "'");
            }
            auto j = dst.index_of(it->second);
            if (!j) {
                throw Error(ErrorKind::InvalidMorphism,
                            "morphism '" + id + "' sends '" + x + "' to '" + it->second + "' outside its target");
            }
            image.push_back(*j);
        }
        for (const auto& [x, y] : table) {
            if (!src.contains(x)) {
                throw Error(ErrorKind::InvalidMorphism, "morphism '" + id + "' maps unknown element '" + x + "'");
            }
        }
        return FinMor{std::move(id), std::move(src), std::move(dst), std::move(image)};
    }

    [[nodiscard]] std::size_t at(std::size_t i) const { return image.at(i); }

    [[nodiscard]] const std::string& operator()(const std::string& x) const {
        auto i = src.index_of(x);
        if (!i) {
            throw Error(ErrorKind::ShapeMismatch, "'" + x + "' is not in the source of '" + id + "'");
        }
        return dst.elements[image[*i]];
    }

    [[nodiscard]] std::map<std::string, std::string> table() const {
        std::map<std::string, std::string> out;
        for (std::size_t i = 0; i < src.size(); ++i) {
            out.emplace(src.elements[i], dst.elements[image[i]]);
        }
        return out;
    }

    /// Equality as arrows: same source, target and function, ids ignored.
    [[nodiscard]] bool same_arrow(const FinMor& other) const {
        return src == other.src && dst == other.dst && image == other.image;
    }

    [[nodiscard]] bool is_identity() const {
        if (!(src == dst)) {
            return false;
        }
        for (std::size_t i = 0; i < image.size(); ++i) {
            if (image[i] != i) {
                return false;
            }
        }
        return true;
    }

    friend bool operator==(const FinMor&, const FinMor&) = default;
};

inline FinMor identity(const FinObj& x) {
    std::vector<std::size_t> image(x.size());
    std::iota(image.begin(), image.end(), std::size_t{0});
    return FinMor{"id_" + x.id, x, x, std::move(image)};
}

/// g after f. Requires f.dst == g.src.
inline FinMor compose(const FinMor& f, const FinMor& g) {
    if (!(f.dst == g.src)) {
        throw Error(ErrorKind::NonComposable,
                    "'" + f.id + "' lands in '" + f.dst.id + "' but '" + g.id + "' starts at '" + g.src.id + "'");
    }
    std::vector<std::size_t> image(f.image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        image[i] = g.image[f.image[i]];
    }
    return FinMor{g.id + "." + f.id, f.src, g.dst, std::move(image)};
}

[[nodiscard]] inline bool is_bijection(const FinMor& f) {
    if (f.src.size() != f.dst.size()) {
        return false;
    }
    std::vector<bool> hit(f.dst.size(), false);
    for (std::size_t j : f.image) {
        if (hit[j]) {
            return false;
        }
        hit[j] = true;
    }
    return true;
}

[[nodiscard]] inline bool is_injective(const FinMor& f) {
    std::vector<bool> hit(f.dst.size(), false);
    for (std::size_t j : f.image) {
        if (hit[j]) {
            return false;
        }
        hit[j] = true;
    }
    return true;
}

/// theta composed with itself m times; m = 0 gives the identity.
inline FinMor power(const FinMor& theta, std::uint64_t m) {
    if (!(theta.src == theta.dst)) {
        throw Error(ErrorKind::NotAutomorphism, "'" + theta.id + "' is not an endomorphism");
    }
    FinMor out = identity(theta.src);
    for (std::uint64_t k = 0; k < m; ++k) {
        out = compose(out, theta);
    }
    out.id = theta.id + "^" + std::to_string(m);
    return out;
}

/// Least k >= 1 with theta^k = id (lcm of the cycle lengths).
inline std::uint64_t automorphism_order(const FinMor& theta) {
    if (!(theta.src == theta.dst) || !is_bijection(theta)) {
        throw Error(ErrorKind::NotAutomorphism, "'" + theta.id + "' is not a bijection of its carrier");
    }
    std::uint64_t order = 1;
    std::vector<bool> seen(theta.image.size(), false);
    for (std::size_t start = 0; start < theta.image.size(); ++start) {
        if (seen[start]) {
            continue;
        }
        std::uint64_t len = 0;
        for (std::size_t i = start; !seen[i]; i = theta.image[i]) {
            seen[i] = true;
            ++len;
        }
        order = std::lcm(order, len);
    }
    return order;
}

/// Elements x with theta(x) = x, as a subobject of theta's carrier.
inline FinObj fixed_point_set(const FinMor& theta) {
    if (!(theta.src == theta.dst)) {
        throw Error(ErrorKind::NotAutomorphism, "'" + theta.id + "' is not an endomorphism");
    }
    std::vector<std::string> fixed;
    for (std::size_t i = 0; i < theta.image.size(); ++i) {
        if (theta.image[i] == i) {
            fixed.push_back(theta.src.elements[i]);
        }
    }
    return FinObj{"Fix(" + theta.id + ")", std::move(fixed)};
}

struct Equalizer {
    FinObj object;
    FinMor inclusion;
};

/// Agreement set {x | eta(x) = theta(x)} with its inclusion into the common source.
inline Equalizer equalizer(const FinMor& eta, const FinMor& theta) {
    if (!(eta.src == theta.src) || !(eta.dst == theta.dst)) {
        throw Error(ErrorKind::ShapeMismatch, "'" + eta.id + "' and '" + theta.id + "' are not parallel");
    }
    std::vector<std::string> agree;
    std::vector<std::size_t> image;
    for (std::size_t i = 0; i < eta.image.size(); ++i) {
        if (eta.image[i] == theta.image[i]) {
            agree.push_back(eta.src.elements[i]);
            image.push_back(i);
        }
    }
    FinObj object{"Eq(" + eta.id + "," + theta.id + ")", std::move(agree)};
    FinMor inclusion{"incl_" + object.id, object, eta.src, std::move(image)};
    return Equalizer{std::move(object), std::move(inclusion)};
}

struct ObjectImage {
    FinObj source;
    FinObj image;
};

struct MorphismImage {
    FinMor source;
    FinMor image;
};

/// A functor given by finite tables. Identity morphisms that are not
/// tabulated are sent to identities.
struct FunctorRep {
    std::string name;
    bool is_identity = false;
    std::map<std::string, ObjectImage> obj_map;   // keyed by source object id
    std::map<std::string, MorphismImage> mor_map; // keyed by source morphism id

    static FunctorRep identity_functor(std::string name = "Id") {
        FunctorRep f;
        f.name = std::move(name);
        f.is_identity = true;
        return f;
    }

    void set_object(const FinObj& source, const FinObj& image) { obj_map[source.id] = ObjectImage{source, image}; }
    void set_morphism(const FinMor& source, const FinMor& image) { mor_map[source.id] = MorphismImage{source, image}; }

    [[nodiscard]] bool defined_on(const FinObj& x) const {
        if (is_identity) {
            return true;
        }
        auto it = obj_map.find(x.id);
        return it != obj_map.end() && it->second.source == x;
    }

    [[nodiscard]] FinObj map_object(const FinObj& x) const {
        if (is_identity) {
            return x;
        }
        auto it = obj_map.find(x.id);
        if (it == obj_map.end() || !(it->second.source == x)) {
            throw Error(ErrorKind::UniverseEscape, "functor '" + name + "' is undefined on object '" + x.id + "'");
        }
        return it->second.image;
    }

    [[nodiscard]] std::optional<FinMor> try_map_morphism(const FinMor& f) const {
        if (is_identity) {
            return f;
        }
        if (auto it = mor_map.find(f.id); it != mor_map.end() && it->second.source.same_arrow(f)) {
            return it->second.image;
        }
        for (const auto& [id, entry] : mor_map) {
            if (entry.source.same_arrow(f)) {
                return entry.image;
            }
        }
        if (f.is_identity() && defined_on(f.src)) {
            return identity(map_object(f.src));
        }
        return std::nullopt;
    }

    [[nodiscard]] FinMor map_morphism(const FinMor& f) const {
        auto out = try_map_morphism(f);
        if (!out) {
            throw Error(ErrorKind::UniverseEscape, "functor '" + name + "' is undefined on morphism '" + f.id + "'");
        }
        return *out;
    }
};

/// Components t_X : F(X) -> G(X), keyed by the id of X.
struct NatTransRep {
    std::string name;
    std::string source_functor;
    std::string target_functor;
    std::map<std::string, FinMor> components;

    [[nodiscard]] const FinMor& component(const FinObj& x) const {
        auto it = components.find(x.id);
        if (it == components.end()) {
            throw Error(ErrorKind::MissingComponent, "transformation '" + name + "' has no component at '" + x.id + "'");
        }
        return it->second;
    }
};

struct SquareViolation {
    std::string element;
    std::string left_path;
    std::string right_path;
};

struct SquareReport {
    bool holds = true;
    std::vector<SquareViolation> violations;
};

/// Checks G(f) . t_X = t_Y . F(f) pointwise on F(X).
inline SquareReport naturality_square(const FunctorRep& source, const FunctorRep& target, const NatTransRep& t,
                                      const FinMor& f) {
    const FinMor& tx = t.component(f.src);
    const FinMor& ty = t.component(f.dst);
    const FinMor gf = target.map_morphism(f);
    const FinMor ff = source.map_morphism(f);
    if (!(tx.dst == gf.src) || !(ff.dst == ty.src) || !(tx.src == ff.src) || !(gf.dst == ty.dst)) {
        throw Error(ErrorKind::ShapeMismatch, "square for '" + f.id + "' under '" + t.name + "' does not close");
    }
    SquareReport report;
    for (std::size_t i = 0; i < tx.src.size(); ++i) {
        const std::string& left = gf.dst.elements[gf.image[tx.image[i]]];
        const std::string& right = ty.dst.elements[ty.image[ff.image[i]]];
        if (left != right) {
            report.violations.push_back(SquareViolation{tx.src.elements[i], left, right});
        }
    }
    report.holds = report.violations.empty();
    return report;
}

/// O(f) . v_X = v_Y . f
inline SquareReport check_observer_square(const FunctorRep& observer, const NatTransRep& v, const FinMor& f) {
    return naturality_square(FunctorRep::identity_functor(), observer, v, f);
}

/// V(f) . eta_X = eta_Y . f
inline SquareReport check_verification_square(const FunctorRep& verification, const NatTransRep& eta,
                                              const FinMor& f) {
    return naturality_square(FunctorRep::identity_functor(), verification, eta, f);
}

/// The declared finite universe a set of functors is tabulated over.
struct Universe {
    std::map<std::string, FinObj> objects;
    std::map<std::string, FinMor> morphisms;
    std::map<std::string, FunctorRep> functors;
    std::map<std::string, NatTransRep> transformations;

    const FinObj& add_object(FinObj x) {
        std::string key = x.id;
        return objects.insert_or_assign(std::move(key), std::move(x)).first->second;
    }

    const FinMor& add_morphism(FinMor f) {
        std::string key = f.id;
        return morphisms.insert_or_assign(std::move(key), std::move(f)).first->second;
    }

    [[nodiscard]] const FinObj& object(const std::string& id) const {
        auto it = objects.find(id);
        if (it == objects.end()) {
            throw Error(ErrorKind::UnresolvedReference, "unknown object '" + id + "'");
        }
        return it->second;
    }

    [[nodiscard]] const FinMor& morphism(const std::string& id) const {
        auto it = morphisms.find(id);
        if (it == morphisms.end()) {
            throw Error(ErrorKind::UnresolvedReference, "unknown morphism '" + id + "'");
        }
        return it->second;
    }

    [[nodiscard]] const FunctorRep& functor(const std::string& name) const {
        if (auto it = functors.find(name); it != functors.end()) {
            return it->second;
        }
        if (name == "Id") {
            static const FunctorRep id = FunctorRep::identity_functor();
            return id;
        }
        throw Error(ErrorKind::UnresolvedReference, "unknown functor '" + name + "'");
    }

    [[nodiscard]] const NatTransRep& transformation(const std::string& name) const {
        auto it = transformations.find(name);
        if (it == transformations.end()) {
            throw Error(ErrorKind::UnresolvedReference, "unknown transformation '" + name + "'");
        }
        return it->second;
    }

    /// A declared morphism equal to f as an arrow, or the identity when f is one.
    [[nodiscard]] std::optional<FinMor> find_arrow(const FinMor& f) const {
        for (const auto& [id, g] : morphisms) {
            if (g.same_arrow(f)) {
                return g;
            }
        }
        if (f.is_identity()) {
            return identity(f.src);
        }
        return std::nullopt;
    }
};

struct FunctorValidation {
    bool ok = true;
    std::size_t pairs_checked = 0;
    std::size_t pairs_outside_universe = 0;
    std::vector<std::string> problems;
};

/// Checks source/target consistency, identity preservation and composition
/// preservation over every declared morphism the functor is tabulated on.
inline FunctorValidation validate_functor(const Universe& u, const FunctorRep& functor) {
    FunctorValidation out;
    auto fail = [&](std::string msg) {
        out.ok = false;
        out.problems.push_back(std::move(msg));
    };
    if (functor.is_identity) {
        return out;
    }
    for (const auto& [id, entry] : functor.mor_map) {
        const FinMor& f = entry.source;
        const FinMor& ff = entry.image;
        if (!functor.defined_on(f.src) || !functor.defined_on(f.dst)) {
            fail("'" + id + "' is mapped but its endpoints are not");
            continue;
        }
        if (!(ff.src == functor.map_object(f.src)) || !(ff.dst == functor.map_object(f.dst))) {
            fail("image of '" + id + "' has the wrong source or target");
        }
        if (f.is_identity() && !ff.is_identity()) {
            fail("identity '" + id + "' is not sent to an identity");
        }
    }
    for (const auto& [fid, f] : u.morphisms) {
        auto ff = functor.try_map_morphism(f);
        if (!ff) {
            continue;
        }
        for (const auto& [gid, g] : u.morphisms) {
            if (!(f.dst == g.src)) {
                continue;
            }
            auto fg = functor.try_map_morphism(g);
            if (!fg) {
                continue;
            }
            auto h = functor.try_map_morphism(compose(f, g));
            if (!h) {
                ++out.pairs_outside_universe;
                continue;
            }
            ++out.pairs_checked;
            if (!(ff->dst == fg->src) || !h->same_arrow(compose(*ff, *fg))) {
                fail("composition '" + gid + "." + fid + "' is not preserved");
            }
        }
    }
    return out;
}

struct NaturalityEntry {
    std::string morphism;
    SquareReport report;
};

/// Every square of t over declared morphisms whose endpoints carry components.
inline std::vector<NaturalityEntry> check_naturality(const Universe& u, const NatTransRep& t) {
    const FunctorRep& source = u.functor(t.source_functor);
    const FunctorRep& target = u.functor(t.target_functor);
    std::vector<NaturalityEntry> out;
    for (const auto& [id, f] : u.morphisms) {
        if (!t.components.contains(f.src.id) || !t.components.contains(f.dst.id)) {
            continue;
        }
        if (!source.try_map_morphism(f) || !target.try_map_morphism(f)) {
            continue;
        }
        out.push_back(NaturalityEntry{id, naturality_square(source, target, t, f)});
    }
    return out;
}

} // namespace driftlab
