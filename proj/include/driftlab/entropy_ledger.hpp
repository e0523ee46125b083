#pragma once

// Shannon entropy of explicit distributions over finite carriers, and the
// bookkeeping for the step, observation and total accumulation bounds.

#include "driftlab/finite_category.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace driftlab {

/// Absolute slack for every bound comparison.
inline constexpr double kBoundTolerance = 1e-9;
inline constexpr double kNormalizationTolerance = 1e-12;

struct ProbState {
    FinObj carrier;
    std::vector<double> probs;

    static ProbState make(FinObj carrier, std::vector<double> probs) {
        ProbState p{std::move(carrier), std::move(probs)};
        p.validate();
        return p;
    }

    static ProbState uniform(FinObj carrier) {
        const std::size_t n = carrier.size();
        if (n == 0) {
            throw Error(ErrorKind::InvalidDistribution, "cannot place a distribution on an empty carrier");
        }
        return ProbState{std::move(carrier), std::vector<double>(n, 1.0 / static_cast<double>(n))};
    }

    void validate() const {
        if (probs.size() != carrier.size()) {
            throw Error(ErrorKind::InvalidDistribution, "distribution length does not match carrier '" + carrier.id + "'");
        }
        double total = 0.0;
        for (double q : probs) {
            if (!(q >= 0.0) || !std::isfinite(q)) {
                throw Error(ErrorKind::InvalidDistribution, "negative or non-finite probability");
            }
            total += q;
        }
        if (std::abs(total - 1.0) > kNormalizationTolerance) {
            throw Error(ErrorKind::InvalidDistribution, "probabilities sum to " + std::to_string(total));
        }
    }
};

struct EntropyParams {
    double C = 0.0;
    double K = 0.0;
    double alpha = 1.0;
    std::vector<double> K_schedule; // optional per-step override of K

    void validate() const {
        if (!(C >= 0.0) || !(K >= 0.0) || !(alpha > 0.0)) {
            throw Error(ErrorKind::DomainError, "entropy parameters need C >= 0, K >= 0, alpha > 0");
        }
        for (double k : K_schedule) {
            if (!(k >= 0.0)) {
                throw Error(ErrorKind::DomainError, "K schedule entries must be non-negative");
            }
        }
    }

    /// Injection allowed at step n (n >= 1 indexes the step producing X_n).
    [[nodiscard]] double K_at(std::size_t n) const {
        if (n >= 1 && n - 1 < K_schedule.size()) {
            return K_schedule[n - 1];
        }
        return K;
    }
};

/// -sum p log2 p, with 0 log 0 = 0.
inline double shannon_entropy(const ProbState& p) {
    p.validate();
    double h = 0.0;
    for (double q : p.probs) {
        if (q > 0.0) {
            h -= q * std::log2(q);
        }
    }
    return h > 0.0 ? h : 0.0;
}

/// q(y) = sum over f(x) = y of p(x)
inline ProbState pushforward(const ProbState& p, const FinMor& f) {
    if (!(f.src == p.carrier)) {
        throw Error(ErrorKind::ShapeMismatch, "'" + f.id + "' does not start at carrier '" + p.carrier.id + "'");
    }
    std::vector<double> q(f.dst.size(), 0.0);
    for (std::size_t i = 0; i < p.probs.size(); ++i) {
        q[f.image[i]] += p.probs[i];
    }
    return ProbState{f.dst, std::move(q)};
}

struct EntropyRow {
    std::size_t n = 0;
    double H = 0.0;
    double H_O = 0.0;
    bool step_bound_ok = true; // transition n -> n+1
    bool obs_bound_ok = true;  // H_O(X_n) <= H(X_{n-1}) + K_n
    bool total_bound_ok = true;
};

struct EntropyTrace {
    std::vector<EntropyRow> rows;

    [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }
    [[nodiscard]] bool empty() const noexcept { return rows.empty(); }
};

/// Step n is flagged iff H_{n+1} - H_n > C ln(n+1) + tolerance.
inline std::vector<std::size_t> check_step_bound(const EntropyTrace& trace, double C) {
    std::vector<std::size_t> flagged;
    for (std::size_t n = 0; n + 1 < trace.rows.size(); ++n) {
        const double bound = C * std::log(static_cast<double>(n + 1));
        if (trace.rows[n + 1].H - trace.rows[n].H > bound + kBoundTolerance) {
            flagged.push_back(n);
        }
    }
    return flagged;
}

inline bool check_observation_bound(double H_X, double H_O_next, double K) {
    return H_O_next <= H_X + K + kBoundTolerance;
}

/// H0 + C ln n + n K, defined for n >= 1.
inline double total_entropy_bound(std::size_t n, double H0, const EntropyParams& params) {
    if (n == 0) {
        throw Error(ErrorKind::DomainError, "the total bound is undefined at n = 0");
    }
    double injected = static_cast<double>(n) * params.K;
    if (!params.K_schedule.empty()) {
        injected = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            injected += params.K_at(k);
        }
    }
    return H0 + params.C * std::log(static_cast<double>(n)) + injected;
}

/// Value in the total_bound column: the bound for n >= 1, H + H_O at n = 0.
inline double total_bound_column(const EntropyTrace& trace, std::size_t n, const EntropyParams& params) {
    const double H0 = trace.rows.front().H;
    if (n == 0) {
        return H0 + trace.rows.front().H_O;
    }
    return total_entropy_bound(n, H0, params);
}

/// Assembles a trace and fills every flag.
inline EntropyTrace build_trace(const std::vector<double>& H, const std::vector<double>& H_O,
                                const EntropyParams& params) {
    if (H.size() != H_O.size()) {
        throw Error(ErrorKind::LengthMismatch, "H and H_O sequences differ in length");
    }
    if (H.empty()) {
        throw Error(ErrorKind::LengthMismatch, "an entropy trace needs at least one step");
    }
    params.validate();
    EntropyTrace trace;
    for (std::size_t n = 0; n < H.size(); ++n) {
        if (H[n] < 0.0 || H_O[n] < 0.0) {
            throw Error(ErrorKind::DomainError, "entropies must be non-negative");
        }
        trace.rows.push_back(EntropyRow{n, H[n], H_O[n], true, true, true});
    }
    for (std::size_t n : check_step_bound(trace, params.C)) {
        trace.rows[n].step_bound_ok = false;
    }
    for (std::size_t n = 1; n < trace.rows.size(); ++n) {
        auto& row = trace.rows[n];
        row.obs_bound_ok = check_observation_bound(trace.rows[n - 1].H, row.H_O, params.K_at(n));
        row.total_bound_ok = row.H + row.H_O <= total_bound_column(trace, n, params) + kBoundTolerance;
    }
    return trace;
}

/// Tally of the non-decreasing postulate H(f_* p) >= H(p); reported, never enforced.
struct MonotonicityTally {
    std::size_t checked = 0;
    std::size_t violated = 0; // H strictly dropped beyond tolerance

    [[nodiscard]] double violation_rate() const {
        return checked == 0 ? 0.0 : static_cast<double>(violated) / static_cast<double>(checked);
    }
};

inline void tally_monotonicity(MonotonicityTally& tally, const ProbState& p, const FinMor& f) {
    ++tally.checked;
    if (shannon_entropy(pushforward(p, f)) < shannon_entropy(p) - kBoundTolerance) {
        ++tally.violated;
    }
}

struct Filtration {
    std::vector<FinObj> layers;
    std::vector<FinMor> inclusions; // inclusions[k] : layers[k] -> layers[k+1]

    /// Composite inclusion layers[i] -> layers[j], i <= j.
    [[nodiscard]] FinMor inclusion(std::size_t i, std::size_t j) const {
        if (i > j || j >= layers.size()) {
            throw Error(ErrorKind::DomainError, "filtration indices out of range");
        }
        FinMor out = identity(layers[i]);
        for (std::size_t k = i; k < j; ++k) {
            out = compose(out, inclusions[k]);
        }
        return out;
    }
};

/// chi_0 = X0, chi_{k+1} = V(chi_k); each step must embed the previous layer
/// identically on its labels.
inline Filtration build_filtration(const FunctorRep& verification, const FinObj& start, std::size_t n) {
    Filtration out;
    out.layers.push_back(start);
    for (std::size_t k = 0; k < n; ++k) {
        FinObj next = verification.map_object(out.layers.back());
        std::vector<std::size_t> image;
        for (const auto& x : out.layers.back().elements) {
            auto j = next.index_of(x);
            if (!j) {
                throw Error(ErrorKind::NotMonotone, "layer " + std::to_string(k + 1) + " ('" + next.id +
                                                         "') drops element '" + x + "'");
            }
            image.push_back(*j);
        }
        out.inclusions.push_back(FinMor{"chi" + std::to_string(k) + "->chi" + std::to_string(k + 1),
                                        out.layers.back(), next, std::move(image)});
        out.layers.push_back(std::move(next));
    }
    return out;
}

/// M_n: union of the carriers visited by an orbit.
inline FinObj memory_union(const std::vector<FinObj>& orbit, std::string id = "M") {
    std::vector<std::string> labels;
    for (const auto& x : orbit) {
        labels.insert(labels.end(), x.elements.begin(), x.elements.end());
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return FinObj{std::move(id), std::move(labels)};
}

} // namespace driftlab
