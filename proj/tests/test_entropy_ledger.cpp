#include "driftlab/entropy_ledger.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace driftlab;
using Catch::Matchers::WithinAbs;
using driftlab::testing::Rng;

namespace {

FinObj obj(const std::string& id, std::vector<std::string> labels) { return FinObj::make(id, std::move(labels)); }

// Independent entropy: -sum p log2 p by direct loop over nonzero weights.
double entropy_oracle(const std::vector<double>& p) {
    double h = 0.0;
    for (double x : p) {
        if (x > 0.0) {
            h -= x * std::log(x) / std::log(2.0);
        }
    }
    return h;
}

std::vector<double> random_distribution(Rng& rng, std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(n);
    double total = 0.0;
    for (double& x : p) {
        x = std::bernoulli_distribution(0.2)(rng) ? 0.0 : e(rng);
        total += x;
    }
    if (total == 0.0) {
        p[0] = total = 1.0;
    }
    for (double& x : p) {
        x /= total;
    }
    return p;
}

} // namespace

TEST_CASE("shannon entropy", "[entropy]") {
    const FinObj x4 = obj("X", {"a", "b", "c", "d"});
    const FinObj x3 = obj("Y", {"a", "b", "c"});
    CHECK_THAT(shannon_entropy(ProbState::uniform(x4)), WithinAbs(2.0, 1e-12));
    CHECK_THAT(shannon_entropy(ProbState::make(x3, {0.0, 1.0, 0.0})), WithinAbs(0.0, 1e-12));
    CHECK_THAT(shannon_entropy(ProbState::make(x3, {0.5, 0.25, 0.25})), WithinAbs(1.5, 1e-12));
    CHECK_THROWS_AS(ProbState::make(x3, {0.5, 0.5, 0.5}), Error);
    CHECK_THROWS_AS(ProbState::make(x3, {1.5, -0.5, 0.0}), Error);
    CHECK_THROWS_AS(ProbState::make(x3, {1.0}), Error);
}

TEST_CASE("pushforward", "[entropy]") {
    const FinObj x = obj("X", {"a", "b", "c"});
    const FinObj y = obj("Y", {"u", "v"});
    const ProbState p = ProbState::uniform(x);
    const ProbState same = pushforward(p, identity(x));
    CHECK(same.probs == p.probs);

    const FinMor constant = FinMor::from_indices("k", x, y, {1, 1, 1});
    CHECK_THAT(shannon_entropy(pushforward(p, constant)), WithinAbs(0.0, 1e-12));

    const FinMor merge = FinMor::from_indices("m", x, y, {0, 0, 1});
    const ProbState q = pushforward(p, merge);
    CHECK_THAT(q.probs[0], WithinAbs(2.0 / 3.0, 1e-15));
    CHECK_THAT(shannon_entropy(q), WithinAbs(0.9182958340544896, 1e-12));
    CHECK_THROWS_AS(pushforward(ProbState::uniform(y), merge), Error);
}

TEST_CASE("pushforward never raises entropy", "[entropy][property]") {
    Rng rng(7);
    MonotonicityTally tally;
    for (int trial = 0; trial < 500; ++trial) {
        const auto x = testing::random_object(rng, "X", 1, 6);
        const auto y = testing::random_object(rng, "Y", 1, 6);
        const auto f = testing::random_map(rng, "f", x, y);
        const ProbState p = ProbState::make(x, random_distribution(rng, x.size()));
        // Oracle pushforward by summing through the label table.
        std::map<std::string, double> mass;
        const auto t = f.table();
        for (std::size_t i = 0; i < x.size(); ++i) {
            mass[t.at(x.elements[i])] += p.probs[i];
        }
        std::vector<double> q;
        for (const auto& [label, m] : mass) {
            q.push_back(m);
        }
        const double h_src = shannon_entropy(p);
        const double h_dst = shannon_entropy(pushforward(p, f));
        REQUIRE_THAT(h_src, WithinAbs(entropy_oracle(p.probs), 1e-12));
        REQUIRE_THAT(h_dst, WithinAbs(entropy_oracle(q), 1e-12));
        REQUIRE(h_dst <= h_src + kBoundTolerance);
        tally_monotonicity(tally, p, f);
    }
    CHECK(tally.checked == 500);
    // Collapsing maps are common here, so the postulated direction fails often.
    CHECK(tally.violation_rate() > 0.0);
}

TEST_CASE("step bound", "[bounds]") {
    EntropyParams params{1.0, 0.0, 1.0, {}};
    const std::vector<double> zeros(5, 0.0);

    CHECK(check_step_bound(build_trace(std::vector<double>(5, 1.0), zeros, params), 0.0).empty());

    const EntropyTrace jump = build_trace({0.0, 3.0, 3.0}, {0.0, 0.0, 0.0}, params);
    CHECK(check_step_bound(jump, 1.0) == std::vector<std::size_t>{0});
    CHECK_FALSE(jump.rows[0].step_bound_ok);

    std::vector<double> H{0.0};
    for (int n = 0; n < 8; ++n) {
        H.push_back(H.back() + 0.5 * std::log(n + 1.0));
    }
    CHECK(check_step_bound(build_trace(H, std::vector<double>(H.size(), 0.0), params), 1.0).empty());
}

TEST_CASE("observation bound", "[bounds]") {
    CHECK(check_observation_bound(2.0, 2.5, 1.0));
    CHECK(check_observation_bound(2.0, 2.0, 0.0));
    CHECK_FALSE(check_observation_bound(1.0, 2.0, 0.5));
}

TEST_CASE("total bound", "[bounds]") {
    EntropyParams p{2.0, 0.5, 1.0, {}};
    CHECK_THAT(total_entropy_bound(1, 1.0, p), WithinAbs(1.5, 1e-12));
    CHECK_THAT(total_entropy_bound(3, 1.0, p), WithinAbs(1.0 + 2.0 * std::log(3.0) + 1.5, 1e-12));
    CHECK_THAT(total_entropy_bound(3, 1.0, p), WithinAbs(4.697, 1e-3));
    EntropyParams flat{0.0, 0.0, 1.0, {}};
    for (std::size_t n = 1; n < 10; ++n) {
        CHECK(total_entropy_bound(n, 0.7, flat) == 0.7);
    }
    CHECK_THROWS_AS(total_entropy_bound(0, 1.0, p), Error);

    EntropyParams sched{0.0, 9.0, 1.0, {0.1, 0.2, 0.3}};
    CHECK_THAT(total_entropy_bound(3, 0.0, sched), WithinAbs(0.6, 1e-12));
}

TEST_CASE("trace flags match a direct re-check", "[bounds][property]") {
    Rng rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t len = testing::uniform_index(rng, 1, 12);
        std::vector<double> H(len);
        std::vector<double> H_O(len);
        for (std::size_t i = 0; i < len; ++i) {
            H[i] = u(rng);
            H_O[i] = u(rng);
        }
        const EntropyParams params{u(rng), u(rng) / 3.0, 0.5 + u(rng), {}};
        const EntropyTrace trace = build_trace(H, H_O, params);
        for (std::size_t n = 0; n < len; ++n) {
            const bool step = n + 1 >= len || H[n + 1] - H[n] <= params.C * std::log(n + 1.0) + 1e-9;
            REQUIRE(trace.rows[n].step_bound_ok == step);
            if (n > 0) {
                REQUIRE(trace.rows[n].obs_bound_ok == (H_O[n] <= H[n - 1] + params.K + 1e-9));
                const double total = H[0] + params.C * std::log(double(n)) + double(n) * params.K;
                REQUIRE(trace.rows[n].total_bound_ok == (H[n] + H_O[n] <= total + 1e-9));
            }
        }
    }
}

TEST_CASE("memory filtration", "[filtration]") {
    const FinObj x0 = obj("X0", {"a", "b"});
    const auto id = FunctorRep::identity_functor("V");
    const Filtration same = build_filtration(id, x0, 3);
    REQUIRE(same.layers.size() == 4);
    for (const auto& layer : same.layers) {
        CHECK(layer == x0);
    }

    FunctorRep grow;
    grow.name = "V";
    FinObj prev = x0;
    for (int k = 1; k <= 4; ++k) {
        std::vector<std::string> labels = prev.elements;
        labels.push_back("marker" + std::to_string(k));
        FinObj next = obj("X" + std::to_string(k), labels);
        grow.set_object(prev, next);
        prev = next;
    }
    const Filtration f = build_filtration(grow, x0, 4);
    for (std::size_t k = 0; k < f.layers.size(); ++k) {
        CHECK(f.layers[k].size() == x0.size() + k);
    }
    CHECK(is_injective(f.inclusion(0, 4)));
    CHECK(memory_union(f.layers).size() == x0.size() + 4);

    FunctorRep collapse;
    collapse.name = "V";
    collapse.set_object(x0, obj("X1", {"a"}));
    try {
        (void)build_filtration(collapse, x0, 1);
        FAIL("expected NotMonotone");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotMonotone);
    }
}
