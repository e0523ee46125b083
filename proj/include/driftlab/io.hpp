#pragma once

// JSON and CSV surfaces: universe descriptions, map and cascade descriptors,
// report serialization and fixed-precision number formatting.

#include "driftlab/cascade.hpp"
#include "driftlab/coalgebra.hpp"
#include "driftlab/dynamics.hpp"
#include "driftlab/entropy_ledger.hpp"
#include "driftlab/finite_category.hpp"
#include "driftlab/phase_dynamics.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace driftlab::io {

using nlohmann::json;

/// 17 significant digits, '.' decimal point.
inline std::string format_real(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw Error(ErrorKind::MissingSection, "missing key '" + std::string(key) + "' in " + where);
    }
    return j.at(key);
}

template <class T>
T get_as(const json& j, const std::string& what) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, what + ": " + e.what());
    }
}

} // namespace detail

// ---------------------------------------------------------------- universe

inline Universe parse_universe(const json& j) {
    using detail::get_as;
    using detail::require;
    Universe u;
    for (const auto& o : require(j, "objects", "universe")) {
        u.add_object(FinObj::make(get_as<std::string>(require(o, "id", "object"), "object id"),
                                  get_as<std::vector<std::string>>(require(o, "elements", "object"), "elements")));
    }
    if (j.contains("morphisms")) {
        for (const auto& m : j.at("morphisms")) {
            const auto id = get_as<std::string>(require(m, "id", "morphism"), "morphism id");
            const FinObj& src = u.object(get_as<std::string>(require(m, "src", "morphism " + id), "src"));
            const FinObj& dst = u.object(get_as<std::string>(require(m, "dst", "morphism " + id), "dst"));
            const auto table =
                get_as<std::map<std::string, std::string>>(require(m, "mapping", "morphism " + id), "mapping");
            u.add_morphism(FinMor::from_table(id, src, dst, table));
        }
    }
    if (j.contains("functors")) {
        for (const auto& f : j.at("functors")) {
            FunctorRep rep;
            rep.name = get_as<std::string>(require(f, "name", "functor"), "functor name");
            rep.is_identity = f.value("identity", false);
            if (f.contains("obj_map")) {
                for (const auto& [src, dst] : get_as<std::map<std::string, std::string>>(f.at("obj_map"), "obj_map")) {
                    rep.set_object(u.object(src), u.object(dst));
                }
            }
            if (f.contains("mor_map")) {
                for (const auto& [src, dst] : get_as<std::map<std::string, std::string>>(f.at("mor_map"), "mor_map")) {
                    rep.set_morphism(u.morphism(src), u.morphism(dst));
                }
            }
            u.functors[rep.name] = std::move(rep);
        }
    }
    if (j.contains("transformations")) {
        for (const auto& t : j.at("transformations")) {
            NatTransRep rep;
            rep.name = get_as<std::string>(require(t, "name", "transformation"), "transformation name");
            rep.source_functor = t.value("source", std::string("Id"));
            rep.target_functor = get_as<std::string>(require(t, "target", "transformation " + rep.name), "target");
            (void)u.functor(rep.source_functor);
            (void)u.functor(rep.target_functor);
            for (const auto& [obj, mor] :
                 get_as<std::map<std::string, std::string>>(require(t, "components", rep.name), "components")) {
                (void)u.object(obj);
                rep.components[obj] = u.morphism(mor);
            }
            u.transformations[rep.name] = std::move(rep);
        }
    }
    return u;
}

inline json to_json(const FinObj& x) { return json{{"id", x.id}, {"elements", x.elements}}; }

inline json to_json(const FinMor& f) {
    return json{{"id", f.id}, {"src", f.src.id}, {"dst", f.dst.id}, {"mapping", f.table()}};
}

inline json to_json(const SquareReport& r) {
    json v = json::array();
    for (const auto& x : r.violations) {
        v.push_back(json{{"element", x.element}, {"left_path", x.left_path}, {"right_path", x.right_path}});
    }
    return json{{"holds", r.holds}, {"violations", v}};
}

inline json to_json(const ThetaResult& t) {
    json chain = json::array();
    for (const auto& c : t.chain) {
        chain.push_back(json{{"stage", c.stage}, {"carrier", to_json(c.carrier)}, {"inclusion", c.connecting_map.has_value()}});
    }
    return json{{"carrier", to_json(t.carrier)},
                {"iterations", t.iterations},
                {"converged", t.converged},
                {"witness", t.witness ? to_json(*t.witness) : json(nullptr)},
                {"reading", to_string(t.reading)},
                {"chain", chain}};
}

/// stage,carrier_size
inline std::string chain_csv(const ThetaResult& t) {
    std::ostringstream out;
    out << "stage,carrier_size\n";
    for (const auto& c : t.chain) {
        out << c.stage << ',' << c.carrier.size() << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------- entropy

inline EntropyParams parse_entropy_params(const json& j) {
    EntropyParams p;
    p.C = j.value("C", 0.0);
    p.K = j.value("K", 0.0);
    p.alpha = j.value("alpha", 1.0);
    if (j.contains("K_schedule")) {
        p.K_schedule = detail::get_as<std::vector<double>>(j.at("K_schedule"), "K_schedule");
    }
    p.validate();
    return p;
}

/// n,H,H_O,step_bound,obs_bound,total_bound,violated_flags
inline std::string entropy_csv(const EntropyTrace& trace, const EntropyParams& params) {
    std::ostringstream out;
    out << "n,H,H_O,step_bound,obs_bound,total_bound,violated_flags\n";
    for (std::size_t n = 0; n < trace.rows.size(); ++n) {
        const auto& row = trace.rows[n];
        out << n << ',' << format_real(row.H) << ',' << format_real(row.H_O) << ',';
        out << format_real(params.C * std::log(static_cast<double>(n + 1))) << ',';
        if (n == 0) {
            out << "";
        } else {
            out << format_real(trace.rows[n - 1].H + params.K_at(n));
        }
        out << ',' << format_real(total_bound_column(trace, n, params)) << ',';
        std::string flags;
        auto add = [&](const char* f) {
            if (!flags.empty()) {
                flags += ';';
            }
            flags += f;
        };
        if (!row.step_bound_ok) {
            add("step");
        }
        if (!row.obs_bound_ok) {
            add("obs");
        }
        if (!row.total_bound_ok) {
            add("total");
        }
        out << flags << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------- cascade

inline LinOp parse_matrix(const json& rows, const std::string& what) {
    const auto data = detail::get_as<std::vector<std::vector<double>>>(rows, what);
    const std::size_t n = data.size();
    std::vector<double> flat;
    for (const auto& r : data) {
        if (r.size() != n) {
            throw Error(ErrorKind::DimMismatch, what + " is not square");
        }
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return LinOp(n, std::move(flat));
}

inline json to_json(const LinOp& a) {
    json rows = json::array();
    for (std::size_t i = 0; i < a.dim(); ++i) {
        json r = json::array();
        for (std::size_t j = 0; j < a.dim(); ++j) {
            r.push_back(a(i, j));
        }
        rows.push_back(r);
    }
    return rows;
}

/// {"kind": "rotation"|"permutation"|"matrix", ...} -> (theta, period)
inline std::pair<LinOp, std::size_t> parse_theta(const json& j, std::size_t default_dim) {
    using detail::get_as;
    const auto kind = get_as<std::string>(detail::require(j, "kind", "theta"), "theta kind");
    if (kind == "rotation") {
        const std::size_t dim = j.value("dim", default_dim);
        const RationalPhase turns = RationalPhase::parse(get_as<std::string>(detail::require(j, "turns", "rotation"), "turns"));
        std::vector<std::size_t> plane = j.contains("plane") ? get_as<std::vector<std::size_t>>(j.at("plane"), "plane")
                                                             : std::vector<std::size_t>{0, 1};
        if (plane.size() != 2) {
            throw Error(ErrorKind::ParseError, "rotation plane needs two axes");
        }
        return {rotation(dim, turns, plane[0], plane[1]), static_cast<std::size_t>(turns.denominator())};
    }
    if (kind == "permutation") {
        const auto perm = get_as<std::vector<std::size_t>>(detail::require(j, "perm", "permutation"), "perm");
        const auto signs = j.contains("signs") ? get_as<std::vector<double>>(j.at("signs"), "signs") : std::vector<double>{};
        LinOp p = permutation_matrix(perm, signs);
        const std::size_t period = j.contains("period") ? get_as<std::size_t>(j.at("period"), "period") : operator_period(p);
        return {std::move(p), period};
    }
    if (kind == "matrix") {
        LinOp m = parse_matrix(detail::require(j, "rows", "matrix theta"), "theta rows");
        const std::size_t period = j.contains("period") ? get_as<std::size_t>(j.at("period"), "period") : operator_period(m);
        return {std::move(m), period};
    }
    throw Error(ErrorKind::ParseError, "unknown theta kind '" + kind + "'");
}

inline CascadeSpec parse_cascade(const json& j) {
    CascadeSpec spec;
    const std::size_t dim = j.value("dim", std::size_t{2});
    for (const auto& s : detail::require(j, "stages", "cascade")) {
        CascadeStage stage;
        stage.lambda = detail::get_as<double>(detail::require(s, "lambda", "cascade stage"), "lambda");
        auto [theta, period] = parse_theta(detail::require(s, "theta", "cascade stage"), dim);
        stage.theta = std::move(theta);
        stage.period = period;
        spec.stages.push_back(std::move(stage));
    }
    spec.validate();
    return spec;
}

/// re,im,modulus,hull_ok
inline std::string spectrum_csv(const SpectrumReport& r) {
    std::ostringstream out;
    out << "re,im,modulus,hull_ok\n";
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
        const auto& z = r.eigenvalues[i];
        out << format_real(z.real()) << ',' << format_real(z.imag()) << ',' << format_real(std::abs(z)) << ',';
        if (i < r.hull_check.size()) {
            out << (r.hull_check[i] ? "true" : "false");
        } else {
            out << "undefined";
        }
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------- dynamics

/// {"kind": "affine"|"scalar"|"identity"|"zero"|"polynomial"|"sum"|"pipeline", ...}
inline MapSpec parse_map(const json& j) {
    using detail::get_as;
    using detail::require;
    const auto kind = get_as<std::string>(require(j, "kind", "map"), "map kind");
    if (kind == "affine") {
        LinOp a = parse_matrix(require(j, "A", "affine map"), "A");
        Vector b = j.contains("b") ? get_as<Vector>(j.at("b"), "b") : Vector{};
        return MapSpec::affine(std::move(a), std::move(b));
    }
    if (kind == "scalar") {
        return MapSpec::scalar(get_as<std::size_t>(require(j, "dim", "scalar map"), "dim"),
                               get_as<double>(require(j, "value", "scalar map"), "value"));
    }
    if (kind == "identity") {
        return MapSpec::identity(get_as<std::size_t>(require(j, "dim", "identity map"), "dim"));
    }
    if (kind == "zero") {
        return MapSpec::zero(get_as<std::size_t>(require(j, "dim", "zero map"), "dim"));
    }
    if (kind == "polynomial") {
        const std::size_t dim = get_as<std::size_t>(require(j, "dim", "polynomial map"), "dim");
        std::vector<std::vector<Monomial>> coords;
        for (const auto& terms : require(j, "coords", "polynomial map")) {
            std::vector<Monomial> out;
            for (const auto& t : terms) {
                out.push_back(Monomial{get_as<double>(require(t, "coef", "monomial"), "coef"),
                                       get_as<std::vector<unsigned>>(require(t, "powers", "monomial"), "powers")});
            }
            coords.push_back(std::move(out));
        }
        return MapSpec::polynomial(dim, std::move(coords));
    }
    if (kind == "sum" || kind == "pipeline") {
        std::vector<MapSpec> parts;
        for (const auto& p : require(j, "parts", kind + " map")) {
            parts.push_back(parse_map(p));
        }
        if (kind == "pipeline") {
            return MapSpec::pipeline(std::move(parts));
        }
        Vector w = j.contains("weights") ? get_as<Vector>(j.at("weights"), "weights") : Vector(parts.size(), 1.0);
        return MapSpec::sum(std::move(parts), std::move(w));
    }
    throw Error(ErrorKind::ParseError, "unknown map kind '" + kind + "'");
}

inline json to_json(const CriticalReport& r) {
    auto roots = [](const std::vector<CriticalRoot>& v) {
        json out = json::array();
        for (const auto& root : v) {
            out.push_back(json{{"r", root.r},
                               {"bracket", {root.bracket_lo, root.bracket_hi}},
                               {"residual", root.residual},
                               {"multiplicity", root.multiplicity}});
        }
        return out;
    };
    json failures = json::array();
    for (const auto& f : r.failures) {
        failures.push_back(json{{"r_lo", f.r_lo}, {"r_hi", f.r_hi}, {"reason", f.reason}});
    }
    return json{{"r_c_fold", r.r_c_fold ? json(*r.r_c_fold) : json(nullptr)},
                {"r_c_flip", r.r_c_flip ? json(*r.r_c_flip) : json(nullptr)},
                {"fold_roots", roots(r.fold_roots)},
                {"flip_roots", roots(r.flip_roots)},
                {"fold_degenerate", r.fold_degenerate},
                {"flip_degenerate", r.flip_degenerate},
                {"failures", failures}};
}

/// r,class,period,points,lead_eig_re,lead_eig_im
/// points: states separated by ';', coordinates by ':'.
inline std::string diagram_csv(const BifurcationDiagram& d) {
    std::ostringstream out;
    out << "r,class,period,points,lead_eig_re,lead_eig_im\n";
    for (const auto& row : d.rows) {
        out << format_real(row.r) << ',' << row.label() << ',' << row.period << ',';
        for (std::size_t k = 0; k < row.points.size(); ++k) {
            if (k > 0) {
                out << ';';
            }
            for (std::size_t i = 0; i < row.points[k].size(); ++i) {
                if (i > 0) {
                    out << ':';
                }
                out << format_real(row.points[k][i]);
            }
        }
        out << ',';
        if (row.lead_eigenvalue) {
            out << format_real(row.lead_eigenvalue->real()) << ',' << format_real(row.lead_eigenvalue->imag());
        } else {
            out << "nan,nan";
        }
        out << '\n';
    }
    return out.str();
}

/// n,x0..,o0..,L
inline std::string trajectory_csv(const Trajectory& t, const std::vector<double>& lyapunov) {
    std::ostringstream out;
    const std::size_t nx = t.states.front().x.size();
    const std::size_t no = t.states.front().o.size();
    out << 'n';
    for (std::size_t i = 0; i < nx; ++i) {
        out << ",x" << i;
    }
    for (std::size_t i = 0; i < no; ++i) {
        out << ",o" << i;
    }
    out << ",L\n";
    for (std::size_t n = 0; n < t.states.size(); ++n) {
        out << n;
        for (double v : t.states[n].x) {
            out << ',' << format_real(v);
        }
        for (double v : t.states[n].o) {
            out << ',' << format_real(v);
        }
        out << ',' << (n < lyapunov.size() ? format_real(lyapunov[n]) : std::string("nan")) << '\n';
    }
    return out.str();
}

} // namespace driftlab::io
