#pragma once

// Exact phases as reduced fractions of a full turn, phased morphisms, and the
// phase-lock and interference constructions on finite carriers.

#include "driftlab/finite_category.hpp"

#include <charconv>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace driftlab {

inline constexpr std::int64_t kPhaseDenominatorCap = 1'000'000;

/// (num/den) of a full turn, canonical residue in [0, 1).
class RationalPhase {
public:
    constexpr RationalPhase() = default;

    RationalPhase(std::int64_t num, std::int64_t den) {
        if (den == 0) {
            throw Error(ErrorKind::DomainError, "phase denominator is zero");
        }
        if (den < 0) {
            num = -num;
            den = -den;
        }
        num %= den;
        if (num < 0) {
            num += den;
        }
        const std::int64_t g = std::gcd(num, den);
        num_ = num / g;
        den_ = den / g;
        if (den_ > kPhaseDenominatorCap) {
            throw Error(ErrorKind::PhaseOverflow,
                        "denominator " + std::to_string(den_) + " exceeds " + std::to_string(kPhaseDenominatorCap));
        }
    }

    /// Parses "p/q" or an integer "p".
    static RationalPhase parse(std::string_view text) {
        auto to_int = [&](std::string_view s) {
            std::int64_t v = 0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
                throw Error(ErrorKind::ParseError, "bad phase '" + std::string(text) + "'");
            }
            return v;
        };
        auto slash = text.find('/');
        if (slash == std::string_view::npos) {
            return RationalPhase(to_int(text), 1);
        }
        return RationalPhase(to_int(text.substr(0, slash)), to_int(text.substr(slash + 1)));
    }

    [[nodiscard]] constexpr std::int64_t numerator() const noexcept { return num_; }
    [[nodiscard]] constexpr std::int64_t denominator() const noexcept { return den_; }
    [[nodiscard]] constexpr bool is_zero() const noexcept { return num_ == 0; }

    [[nodiscard]] RationalPhase inverse() const { return RationalPhase(den_ - num_, den_); }

    [[nodiscard]] std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

    friend bool operator==(const RationalPhase&, const RationalPhase&) = default;
    friend auto operator<=>(const RationalPhase& a, const RationalPhase& b) {
        // both denominators are capped at 1e6, so the cross products fit in 64 bits
        return a.num_ * b.den_ <=> b.num_ * a.den_;
    }

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// Exact sum mod one turn.
inline RationalPhase phase_add(const RationalPhase& a, const RationalPhase& b) {
    const std::int64_t g = std::gcd(a.denominator(), b.denominator());
    const std::int64_t den = a.denominator() / g * b.denominator();
    const std::int64_t num = a.numerator() * (den / a.denominator()) + b.numerator() * (den / b.denominator());
    return RationalPhase(num % den, den);
}

struct PhasedElement {
    std::string element;
    RationalPhase phase;

    friend bool operator==(const PhasedElement&, const PhasedElement&) = default;
};

struct PhasedMorphism {
    FinMor base;
    RationalPhase phase;
};

/// a first, then b; phases add.
inline PhasedMorphism compose_phased(const PhasedMorphism& a, const PhasedMorphism& b) {
    return PhasedMorphism{compose(a.base, b.base), phase_add(a.phase, b.phase)};
}

/// Sum of phases around a closed loop of composable morphisms.
inline RationalPhase cycle_net_phase(const std::vector<PhasedMorphism>& cycle) {
    if (cycle.empty()) {
        throw Error(ErrorKind::NotAClosedLoop, "empty cycle");
    }
    RationalPhase net;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
        const auto& next = cycle[(i + 1) % cycle.size()];
        if (!(cycle[i].base.dst == next.base.src)) {
            throw Error(ErrorKind::NotAClosedLoop,
                        "'" + cycle[i].base.id + "' does not feed '" + next.base.id + "'");
        }
        net = phase_add(net, cycle[i].phase);
    }
    return net;
}

/// Elements fixed by theta^m for every m in [0, period). The period must be a
/// multiple of theta's order.
inline FinObj phase_lock_space(const FinMor& theta, std::uint64_t period) {
    const std::uint64_t order = automorphism_order(theta);
    if (period == 0 || period % order != 0) {
        throw Error(ErrorKind::InvalidPeriod, "theta^" + std::to_string(period) + " is not the identity");
    }
    std::vector<bool> locked(theta.src.size(), true);
    FinMor shift = identity(theta.src);
    for (std::uint64_t m = 0; m < period; ++m) {
        for (std::size_t i = 0; i < locked.size(); ++i) {
            locked[i] = locked[i] && shift.image[i] == i;
        }
        shift = compose(shift, theta);
    }
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < locked.size(); ++i) {
        if (locked[i]) {
            kept.push_back(theta.src.elements[i]);
        }
    }
    FinObj out{"Phi(" + theta.src.id + ")", std::move(kept)};
    if (out.elements != fixed_point_set(theta).elements) {
        throw std::logic_error("phase-lock space disagrees with Fix(theta)");
    }
    return out;
}

inline FinObj phase_lock_space(const FinMor& theta) { return phase_lock_space(theta, automorphism_order(theta)); }

struct InterferencePairs {
    FinObj object; // labels "(x,y)"
    std::vector<std::pair<std::string, std::string>> pairs;
};

/// Ordered pairs (x, y) of the carrier with equal phase.
inline InterferencePairs interference_pairing(const FinObj& carrier,
                                              const std::map<std::string, RationalPhase>& phases) {
    for (const auto& x : carrier.elements) {
        if (!phases.contains(x)) {
            throw Error(ErrorKind::PartialPhaseMap, "no phase for '" + x + "'");
        }
    }
    InterferencePairs out;
    std::vector<std::string> labels;
    for (const auto& x : carrier.elements) {
        for (const auto& y : carrier.elements) {
            if (phases.at(x) == phases.at(y)) {
                out.pairs.emplace_back(x, y);
                labels.push_back("(" + x + "," + y + ")");
            }
        }
    }
    out.object = FinObj::make(carrier.id + "x" + carrier.id, std::move(labels));
    return out;
}

/// (x, p) -> (phi(x), p)
inline std::vector<PhasedElement> lift_phi_phase(const FinMor& phi, const std::vector<PhasedElement>& states) {
    std::vector<PhasedElement> out;
    out.reserve(states.size());
    for (const auto& s : states) {
        if (!phi.src.contains(s.element)) {
            throw Error(ErrorKind::ShapeMismatch, "'" + s.element + "' is not in the source of '" + phi.id + "'");
        }
        out.push_back(PhasedElement{phi(s.element), s.phase});
    }
    return out;
}

} // namespace driftlab
