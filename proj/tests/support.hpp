#pragma once

// Random generators and brute-force oracles shared by the unit tests and the
// acceptance binary. Oracles work on string tables rather than index vectors
// so they do not share code paths with the library.

#include "driftlab/coalgebra.hpp"
#include "driftlab/finite_category.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace driftlab::testing {

using Rng = std::mt19937_64;

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline FinObj random_object(Rng& rng, const std::string& id, std::size_t min_size, std::size_t max_size) {
    const std::size_t n = uniform_index(rng, min_size, max_size);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) {
        labels.push_back(id + "." + std::to_string(i));
    }
    return FinObj::make(id, labels);
}

inline FinMor random_map(Rng& rng, const std::string& id, const FinObj& src, const FinObj& dst) {
    std::vector<std::size_t> image;
    for (std::size_t i = 0; i < src.size(); ++i) {
        image.push_back(uniform_index(rng, 0, dst.size() - 1));
    }
    return FinMor::from_indices(id, src, dst, image);
}

inline FinMor random_permutation(Rng& rng, const std::string& id, const FinObj& x) {
    std::vector<std::size_t> image(x.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        image[i] = i;
    }
    std::shuffle(image.begin(), image.end(), rng);
    return FinMor::from_indices(id, x, x, image);
}

using Table = std::map<std::string, std::string>;

/// Pointwise evaluation of G(f) . t_X and t_Y . f on every element of X.
inline bool brute_square(const Table& t_x, const Table& t_y, const Table& f, const Table& g_f,
                         const std::vector<std::string>& domain) {
    for (const auto& x : domain) {
        if (g_f.at(t_x.at(x)) != t_y.at(f.at(x))) {
            return false;
        }
    }
    return true;
}

/// Elements on which both maps agree, found by filtering.
inline std::set<std::string> brute_agreement(const FinMor& a, const FinMor& b) {
    const Table ta = a.table();
    const Table tb = b.table();
    std::set<std::string> out;
    for (const auto& [x, y] : ta) {
        if (tb.at(x) == y) {
            out.insert(x);
        }
    }
    return out;
}

/// Fix(theta) by direct filtering.
inline std::set<std::string> brute_fixed(const FinMor& theta) {
    std::set<std::string> out;
    for (const auto& [x, y] : theta.table()) {
        if (x == y) {
            out.insert(x);
        }
    }
    return out;
}

/// Order of a permutation by repeated application until every label returns.
inline std::uint64_t brute_order(const FinMor& theta) {
    const Table t = theta.table();
    Table current = t;
    for (std::uint64_t k = 1;; ++k) {
        bool identity = true;
        for (const auto& [x, y] : current) {
            identity = identity && x == y;
        }
        if (identity) {
            return k;
        }
        for (auto& [x, y] : current) {
            y = t.at(y);
        }
    }
}

/// One random universe: objects, morphisms between them, an observer functor
/// O with a component v_X : X -> O(X) per object, and a verification functor
/// V with eta_X : X -> V(X). Images of f under O and V are random, so squares
/// hold or fail by chance.
struct RandomUniverse {
    std::vector<FinObj> objects;
    std::vector<FinMor> morphisms;
    FunctorRep observer;
    NatTransRep v;
    FunctorRep verification;
    NatTransRep eta;
};

inline RandomUniverse random_universe(Rng& rng, std::size_t max_objects = 5, std::size_t max_elements = 4) {
    RandomUniverse u;
    u.observer.name = "O";
    u.verification.name = "V";
    u.v = NatTransRep{"v", "Id", "O", {}};
    u.eta = NatTransRep{"eta", "Id", "V", {}};
    const std::size_t n_obj = uniform_index(rng, 1, max_objects);
    for (std::size_t k = 0; k < n_obj; ++k) {
        FinObj x = random_object(rng, "X" + std::to_string(k), 1, max_elements);
        FinObj ox = random_object(rng, "O" + std::to_string(k), 1, max_elements);
        FinObj vx = random_object(rng, "V" + std::to_string(k), 1, max_elements);
        u.observer.set_object(x, ox);
        u.verification.set_object(x, vx);
        // Bias toward constant components so some squares hold.
        const bool constant = uniform_index(rng, 0, 2) == 0;
        FinMor vxm = random_map(rng, "v_" + x.id, x, ox);
        if (constant) {
            std::fill(vxm.image.begin(), vxm.image.end(), vxm.image.front());
        }
        u.v.components[x.id] = vxm;
        u.eta.components[x.id] = random_map(rng, "eta_" + x.id, x, vx);
        u.objects.push_back(std::move(x));
    }
    const std::size_t n_mor = uniform_index(rng, 1, 2 * n_obj);
    for (std::size_t k = 0; k < n_mor; ++k) {
        const FinObj& a = u.objects[uniform_index(rng, 0, n_obj - 1)];
        const FinObj& b = u.objects[uniform_index(rng, 0, n_obj - 1)];
        FinMor f = random_map(rng, "f" + std::to_string(k), a, b);
        const FinObj oa = u.observer.map_object(a);
        const FinObj ob = u.observer.map_object(b);
        FinMor of = random_map(rng, "O(f" + std::to_string(k) + ")", oa, ob);
        if (uniform_index(rng, 0, 1) == 0) {
            // Make the observer square hold by construction where possible.
            const FinMor& va = u.v.components.at(a.id);
            const FinMor& vb = u.v.components.at(b.id);
            for (std::size_t i = 0; i < a.size(); ++i) {
                of.image[va.image[i]] = vb.image[f.image[i]];
            }
        }
        u.observer.set_morphism(f, of);
        const FinObj va_obj = u.verification.map_object(a);
        const FinObj vb_obj = u.verification.map_object(b);
        FinMor vf = random_map(rng, "V(f" + std::to_string(k) + ")", va_obj, vb_obj);
        if (uniform_index(rng, 0, 1) == 0) {
            const FinMor& ea = u.eta.components.at(a.id);
            const FinMor& eb = u.eta.components.at(b.id);
            for (std::size_t i = 0; i < a.size(); ++i) {
                vf.image[ea.image[i]] = eb.image[f.image[i]];
            }
        }
        u.verification.set_morphism(f, vf);
        u.morphisms.push_back(std::move(f));
    }
    return u;
}

inline FinObj relabeled(const FinObj& x, const std::string& id) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < x.size(); ++i) {
        labels.push_back(id + "." + std::to_string(i));
    }
    return FinObj::make(id, labels);
}

inline FinMor inverse_of(const FinMor& w, const std::string& id) {
    std::vector<std::size_t> image(w.image.size());
    for (std::size_t i = 0; i < w.image.size(); ++i) {
        image[w.image[i]] = i;
    }
    return FinMor::from_indices(id, w.dst, w.src, image);
}

/// A (V, phi) system that walks through `transient` unrelated stages and then
/// reaches a carrier T whose F-image is a relabeled copy T', with F(T') = T.
/// A declared bijection w : T -> T' transports a random endomorphism g of T to
/// F(g) = w g w^-1; a second, random bijection is declared as a decoy.
struct ThetaSystem {
    Universe u;
    FunctorRep V;
    FunctorRep phi;
    FinObj start;
    FinObj terminal;
    std::size_t transient = 0;
};

inline ThetaSystem random_theta_system(Rng& rng, std::size_t max_transient = 5, std::size_t max_size = 4) {
    ThetaSystem sys;
    sys.V.name = "V";
    sys.phi.name = "phi";
    sys.transient = uniform_index(rng, 0, max_transient);
    const FinObj t = random_object(rng, "T", 1, max_size);
    const FinObj t2 = relabeled(t, "T2");
    std::vector<FinObj> stages;
    for (std::size_t i = 0; i < sys.transient; ++i) {
        stages.push_back(random_object(rng, "S" + std::to_string(i), 1, max_size));
    }
    stages.push_back(t);
    for (std::size_t i = 0; i + 1 < stages.size(); ++i) {
        const FinObj p = relabeled(stages[i], "P" + std::to_string(i));
        sys.u.add_object(stages[i]);
        sys.u.add_object(p);
        sys.phi.set_object(stages[i], p);
        sys.V.set_object(p, stages[i + 1]);
    }
    const FinObj pt = relabeled(t, "PT");
    const FinObj pt2 = relabeled(t, "PT2");
    for (const auto& x : {t, t2, pt, pt2}) {
        sys.u.add_object(x);
    }
    sys.phi.set_object(t, pt);
    sys.V.set_object(pt, t2);
    sys.phi.set_object(t2, pt2);
    sys.V.set_object(pt2, t);

    const FinMor w = random_permutation(rng, "w", t);
    const FinMor w_iso = FinMor::from_indices("w", t, t2, w.image);
    const FinMor w_inv = inverse_of(w_iso, "w_inv");
    sys.u.add_morphism(w_iso);
    sys.u.add_morphism(w_inv);
    const FinMor decoy = random_permutation(rng, "d", t);
    sys.u.add_morphism(FinMor::from_indices("decoy", t, t2, decoy.image));

    // a : T -> PT and b : T2 -> PT2 are the label-preserving copies.
    const FinMor a = FinMor::from_indices("a", t, pt, identity(t).image);
    const FinMor b = FinMor::from_indices("b", t2, pt2, identity(t).image);
    const FinMor g = random_map(rng, "g", t, t);
    const FinMor pg = compose(compose(inverse_of(a, "a_inv"), g), a);
    const FinMor fg = compose(compose(w_inv, g), w_iso);
    const FinMor pfg = compose(compose(inverse_of(b, "b_inv"), fg), b);
    FinMor g_decl = g;
    FinMor fg_decl = fg;
    fg_decl.id = "Fg";
    FinMor pg_decl = pg;
    pg_decl.id = "pg";
    FinMor pfg_decl = pfg;
    pfg_decl.id = "pfg";
    sys.u.add_morphism(g_decl);
    sys.u.add_morphism(fg_decl);
    sys.phi.set_morphism(g_decl, pg_decl);
    sys.V.set_morphism(pg_decl, fg_decl);
    sys.phi.set_morphism(fg_decl, pfg_decl);
    // F(Fg) = w_inv Fg w = g keeps the loop consistent.
    sys.V.set_morphism(pfg_decl, g_decl);

    sys.start = stages.front();
    sys.terminal = t;
    sys.u.functors["V"] = sys.V;
    sys.u.functors["phi"] = sys.phi;
    return sys;
}

} // namespace driftlab::testing
