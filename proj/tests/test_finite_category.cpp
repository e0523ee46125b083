#include "driftlab/finite_category.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace driftlab;
using driftlab::testing::Rng;

namespace {

FinObj obj(const std::string& id, std::vector<std::string> labels) { return FinObj::make(id, std::move(labels)); }

FinMor mor(const std::string& id, const FinObj& a, const FinObj& b, std::map<std::string, std::string> t) {
    return FinMor::from_table(id, a, b, t);
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a driftlab::Error");
    return ErrorKind::ParseError;
}

} // namespace

TEST_CASE("objects are canonical and reject duplicates", "[object]") {
    const FinObj x = obj("X", {"c", "a", "b"});
    CHECK(x.elements == std::vector<std::string>{"a", "b", "c"});
    CHECK(x.index_of("b") == 1u);
    CHECK_FALSE(x.contains("z"));
    CHECK(kind_of([] { (void)FinObj::make("Y", {"a", "a"}); }) == ErrorKind::InvalidObject);
}

TEST_CASE("morphism tables must be total and land in the target", "[morphism]") {
    const FinObj x = obj("X", {"a", "b"});
    const FinObj y = obj("Y", {"c"});
    CHECK(kind_of([&] { (void)mor("f", x, y, {{"a", "c"}}); }) == ErrorKind::InvalidMorphism);
    CHECK(kind_of([&] { (void)mor("f", x, y, {{"a", "c"}, {"b", "d"}}); }) == ErrorKind::InvalidMorphism);
    CHECK(kind_of([&] { (void)mor("f", x, y, {{"a", "c"}, {"b", "c"}, {"q", "c"}}); }) == ErrorKind::InvalidMorphism);
}

TEST_CASE("composition", "[compose]") {
    const FinObj x = obj("X", {"a", "b"});
    const FinObj y = obj("Y", {"c"});
    const FinObj z = obj("Z", {"d"});
    const FinMor f = mor("f", x, y, {{"a", "c"}, {"b", "c"}});
    const FinMor g = mor("g", y, z, {{"c", "d"}});

    SECTION("identity first gives the other map") {
        const FinMor h = mor("h", x, x, {{"a", "b"}, {"b", "a"}});
        CHECK(compose(identity(x), h).same_arrow(h));
    }
    SECTION("constant maps compose to a constant") {
        const FinMor gf = compose(f, g);
        CHECK(gf.table() == std::map<std::string, std::string>{{"a", "d"}, {"b", "d"}});
        CHECK(gf.src == x);
        CHECK(gf.dst == z);
    }
    SECTION("mismatched endpoints") {
        CHECK(kind_of([&] { (void)compose(f, f); }) == ErrorKind::NonComposable);
    }
    SECTION("associative on random chains") {
        Rng rng(11);
        for (int trial = 0; trial < 200; ++trial) {
            const auto a = testing::random_object(rng, "A", 1, 4);
            const auto b = testing::random_object(rng, "B", 1, 4);
            const auto c = testing::random_object(rng, "C", 1, 4);
            const auto d = testing::random_object(rng, "D", 1, 4);
            const auto p = testing::random_map(rng, "p", a, b);
            const auto q = testing::random_map(rng, "q", b, c);
            const auto r = testing::random_map(rng, "r", c, d);
            REQUIRE(compose(compose(p, q), r).same_arrow(compose(p, compose(q, r))));
        }
    }
}

TEST_CASE("observer squares", "[square]") {
    const FinObj x = obj("X", {"a", "b"});
    const FinObj y = obj("Y", {"p", "q"});
    const FinMor f = mor("f", x, y, {{"a", "p"}, {"b", "p"}});

    SECTION("identity observer with identity components") {
        FunctorRep o = FunctorRep::identity_functor("O");
        NatTransRep v{"v", "Id", "O", {{"X", identity(x)}, {"Y", identity(y)}}};
        CHECK(check_observer_square(o, v, f).holds);
    }
    SECTION("collapsing observer") {
        const FinObj star_x = obj("OX", {"*"});
        const FinObj star_y = obj("OY", {"*"});
        FunctorRep o;
        o.name = "O";
        o.set_object(x, star_x);
        o.set_object(y, star_y);
        o.set_morphism(f, mor("Of", star_x, star_y, {{"*", "*"}}));
        NatTransRep v{"v", "Id", "O",
                      {{"X", mor("vX", x, star_x, {{"a", "*"}, {"b", "*"}})},
                       {"Y", mor("vY", y, star_y, {{"p", "*"}, {"q", "*"}})}}};
        CHECK(check_observer_square(o, v, f).holds);
    }
    SECTION("swapped v_Y breaks the square and names the element") {
        const FinObj ox = obj("OX", {"0", "1"});
        const FinObj oy = obj("OY", {"0", "1"});
        FunctorRep o;
        o.name = "O";
        o.set_object(x, ox);
        o.set_object(y, oy);
        o.set_morphism(f, mor("Of", ox, oy, {{"0", "0"}, {"1", "0"}}));
        const FinMor vx = mor("vX", x, ox, {{"a", "0"}, {"b", "1"}});
        NatTransRep good{"v", "Id", "O", {{"X", vx}, {"Y", mor("vY", y, oy, {{"p", "0"}, {"q", "1"}})}}};
        REQUIRE(check_observer_square(o, good, f).holds);
        NatTransRep bad{"v", "Id", "O", {{"X", vx}, {"Y", mor("vY", y, oy, {{"p", "1"}, {"q", "0"}})}}};
        const SquareReport r = check_observer_square(o, bad, f);
        CHECK_FALSE(r.holds);
        REQUIRE(r.violations.size() == 2);
        CHECK(r.violations[0].element == "a");
        CHECK(r.violations[0].left_path == "0");
        CHECK(r.violations[0].right_path == "1");
    }
    SECTION("missing component") {
        FunctorRep o = FunctorRep::identity_functor("O");
        NatTransRep v{"v", "Id", "O", {{"X", identity(x)}}};
        CHECK(kind_of([&] { (void)check_observer_square(o, v, f); }) == ErrorKind::MissingComponent);
    }
}

TEST_CASE("verification squares with a marker", "[square]") {
    const FinObj x = obj("X", {"a", "b"});
    const FinObj y = obj("Y", {"c", "d"});
    const FinObj vx = obj("VX", {"a", "b", "m"});
    const FinObj vy = obj("VY", {"c", "d", "m"});
    const FinMor f = mor("f", x, y, {{"a", "d"}, {"b", "c"}});
    FunctorRep v;
    v.name = "V";
    v.set_object(x, vx);
    v.set_object(y, vy);
    NatTransRep eta{"eta", "Id", "V",
                    {{"X", mor("etaX", x, vx, {{"a", "a"}, {"b", "b"}})},
                     {"Y", mor("etaY", y, vy, {{"c", "c"}, {"d", "d"}})}}};

    SECTION("marker to marker holds") {
        v.set_morphism(f, mor("Vf", vx, vy, {{"a", "d"}, {"b", "c"}, {"m", "m"}}));
        CHECK(check_verification_square(v, eta, f).holds);
    }
    SECTION("moving the marker is invisible to eta") {
        v.set_morphism(f, mor("Vf", vx, vy, {{"a", "d"}, {"b", "c"}, {"m", "c"}}));
        CHECK(check_verification_square(v, eta, f).holds);
    }
    SECTION("every perturbation on an eta image point is caught") {
        for (const std::string& point : {"a", "b"}) {
            for (const std::string& target : vy.elements) {
                std::map<std::string, std::string> t{{"a", "d"}, {"b", "c"}, {"m", "m"}};
                if (t[point] == target) {
                    continue;
                }
                t[point] = target;
                v.set_morphism(f, mor("Vf", vx, vy, t));
                const SquareReport r = check_verification_square(v, eta, f);
                CHECK_FALSE(r.holds);
                REQUIRE(r.violations.size() == 1);
                CHECK(r.violations[0].element == point);
            }
        }
    }
}

TEST_CASE("random square verdicts match pointwise evaluation", "[square][property]") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const auto u = testing::random_universe(rng);
        for (const auto& f : u.morphisms) {
            const auto& vx = u.v.components.at(f.src.id);
            const auto& vy = u.v.components.at(f.dst.id);
            const bool expect =
                testing::brute_square(vx.table(), vy.table(), f.table(), u.observer.map_morphism(f).table(),
                                      f.src.elements);
            REQUIRE(check_observer_square(u.observer, u.v, f).holds == expect);
        }
    }
}

TEST_CASE("automorphism order", "[automorphism]") {
    const FinObj x3 = obj("X", {"a", "b", "c"});
    CHECK(automorphism_order(identity(x3)) == 1);
    CHECK(automorphism_order(mor("t", x3, x3, {{"a", "b"}, {"b", "a"}, {"c", "c"}})) == 2);
    const FinObj x5 = obj("X", {"1", "2", "3", "4", "5"});
    const FinMor t = mor("t", x5, x5, {{"1", "2"}, {"2", "3"}, {"3", "1"}, {"4", "5"}, {"5", "4"}});
    CHECK(automorphism_order(t) == 6);
    CHECK(testing::brute_order(t) == 6);
    CHECK(kind_of([&] { (void)automorphism_order(mor("k", x3, x3, {{"a", "a"}, {"b", "a"}, {"c", "c"}})); }) ==
          ErrorKind::NotAutomorphism);

    Rng rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const auto x = testing::random_object(rng, "P", 1, 8);
        const auto p = testing::random_permutation(rng, "p", x);
        const auto k = automorphism_order(p);
        REQUIRE(k == testing::brute_order(p));
        REQUIRE(power(p, k).is_identity());
    }
}

TEST_CASE("equalizers", "[equalizer]") {
    const FinObj x = obj("X", {"a", "b", "c"});
    const FinMor id = identity(x);
    const FinMor swap = mor("s", x, x, {{"a", "b"}, {"b", "a"}, {"c", "c"}});
    const FinMor cyc = mor("r", x, x, {{"a", "b"}, {"b", "c"}, {"c", "a"}});

    CHECK(equalizer(swap, swap).object.elements == x.elements);
    const Equalizer e = equalizer(id, swap);
    CHECK(e.object.elements == std::vector<std::string>{"c"});
    CHECK(e.inclusion.table() == std::map<std::string, std::string>{{"c", "c"}});
    CHECK(equalizer(id, cyc).object.empty());

    const FinObj y = obj("Y", {"a", "b", "c"});
    CHECK(kind_of([&] { (void)equalizer(id, identity(y)); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("functor validation", "[functor]") {
    Universe u;
    const FinObj& x = u.add_object(obj("X", {"a", "b"}));
    const FinObj& y = u.add_object(obj("Y", {"c"}));
    const FinMor& f = u.add_morphism(mor("f", x, y, {{"a", "c"}, {"b", "c"}}));
    const FinMor& s = u.add_morphism(mor("s", x, x, {{"a", "b"}, {"b", "a"}}));
    u.add_morphism(compose(s, f));

    FunctorRep collapse;
    collapse.name = "C";
    collapse.set_object(x, y);
    collapse.set_object(y, y);
    collapse.set_morphism(f, identity(y));
    collapse.set_morphism(s, identity(y));
    const FunctorValidation ok = validate_functor(u, collapse);
    CHECK(ok.ok);
    CHECK(ok.pairs_checked >= 1);

    collapse.set_morphism(s, mor("bad", y, x, {{"c", "a"}}));
    const FunctorValidation bad = validate_functor(u, collapse);
    CHECK_FALSE(bad.ok);
    CHECK_FALSE(bad.problems.empty());

    CHECK(kind_of([&] { (void)u.functor("missing"); }) == ErrorKind::UnresolvedReference);
    CHECK(u.functor("Id").is_identity);
}
