#include <catch2/catch_amalgamated.hpp>

#include "quivhom/ainfty.hpp"
#include "quivhom/testkit.hpp"

using namespace quivhom;
using testkit::GenParams;
using testkit::SplitMix64;

namespace {
constexpr int NMAX = 4;

DgQuiver small_quiver(std::uint64_t seed, std::uint64_t p = 0) {
    SplitMix64 rng(seed);
    GenParams gp;
    gp.p = p;
    return testkit::random_dg_quiver(rng, gp);
}
}  // namespace

TEST_CASE("differential-only structures satisfy the structure identities iff d squares to zero") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        DgQuiver Q = small_quiver(seed);
        REQUIRE_FALSE(Q.square_nonzero());
        CHECK(is_ainf(dg_structure(Q, NMAX), NMAX).ok);
    }
    // a deliberately broken differential
    DgQuiver Q(0);
    Q.add_object("x");
    GradedSpace& h = Q.hom(0, 0);
    h.add("a", 0);
    h.add("b", 1);
    h.add("c", 2);
    GradedMap d(&h, &h, 1, 0);
    d.add(0, 1, Scalar::rational(1));
    d.add(1, 2, Scalar::rational(1));
    Q.set_differential(0, 0, std::move(d));
    CHECK(Q.square_nonzero());
    CHECK_FALSE(is_ainf(dg_structure(Q, NMAX), NMAX).ok);
}

TEST_CASE("identity morphism and composition unit laws") {
    DgQuiver Q = small_quiver(7);
    HomCollection m = dg_structure(Q, NMAX);
    HomCollection id = identity_morphism(Q, NMAX);
    CHECK(report_zero(mi_defect(id, m, m, NMAX)).ok);
    SplitMix64 rng(8);
    GenParams gp;
    HomCollection F = testkit::random_ainf_shaped(Q, 0, NMAX, rng, gp);
    CHECK(compose_morphisms(id, F, NMAX).equals(F));
    CHECK(compose_morphisms(F, id, NMAX).equals(F));
}

TEST_CASE("inverting a strict isomorphism gives a strict inverse") {
    DgQuiver Q = small_quiver(12);
    SplitMix64 rng(12);
    testkit::TwistedQuiver tw = testkit::random_twisted_quiver(Q, NMAX, rng);
    // tw.f has only arity-2 components, so its inverse must too
    HomCollection G = invert_morphism(tw.f, NMAX);
    for (const auto& [t, m] : G.components())
        if (!m.is_zero()) CHECK(t.size() == 2);
    CHECK(compose_morphisms(G, tw.f, NMAX).equals(identity_morphism(Q, NMAX)));
    CHECK(compose_morphisms(tw.f, G, NMAX).equals(identity_morphism(*tw.B, NMAX)));
}

TEST_CASE("inversion round trips for morphisms with higher components") {
    DgQuiver Q = small_quiver(13);
    SplitMix64 rng(13);
    testkit::TwistedQuiver tw = testkit::random_twisted_quiver(Q, NMAX, rng);
    // transfer produces a morphism with higher components extending tw.f
    TransferResult tr = transfer_to_target(tw.f, dg_structure(Q, NMAX), NMAX);
    HomCollection G = invert_morphism(tr.morphism, NMAX);
    CHECK(compose_morphisms(G, tr.morphism, NMAX).equals(identity_morphism(Q, NMAX)));
    CHECK(compose_morphisms(tr.morphism, G, NMAX).equals(identity_morphism(*tw.B, NMAX)));
    CHECK(report_zero(mi_defect(G, tr.structure, dg_structure(Q, NMAX), NMAX)).ok);
}

TEST_CASE("inversion rejects non-invertible first components") {
    DgQuiver Q(0);
    Q.add_object("x");
    Q.hom(0, 0).add("a", 0);
    HomCollection F = HomCollection::structure(&Q, NMAX, 0);  // zero arity-2 part
    CHECK_THROWS_AS(invert_morphism(F, NMAX), math_error);
}

TEST_CASE("transfer in both directions produces valid structures and morphisms") {
    for (std::uint64_t seed = 21; seed <= 23; ++seed) {
        DgQuiver A = small_quiver(seed);
        SplitMix64 rng(seed * 31);
        testkit::TwistedQuiver tw = testkit::random_twisted_quiver(A, NMAX, rng);
        HomCollection mA = dg_structure(A, NMAX);

        TransferResult fw = transfer_to_target(tw.f, mA, NMAX);
        CHECK(is_ainf(fw.structure, NMAX).ok);
        CHECK(report_zero(mi_defect(fw.morphism, mA, fw.structure, NMAX)).ok);
        // lowest component extends the chain map
        CHECK(restrict_to_arity(fw.morphism, 2).equals(restrict_to_arity(tw.f, 2)));

        HomCollection mB = dg_structure(*tw.B, NMAX);
        TransferResult bw = transfer_from_target(tw.f, mB, NMAX);
        CHECK(is_ainf(bw.structure, NMAX).ok);
        CHECK(report_zero(mi_defect(bw.morphism, bw.structure, mB, NMAX)).ok);
        CHECK(restrict_to_arity(bw.morphism, 2).equals(restrict_to_arity(tw.f, 2)));
        // the transferred structure extends the pulled-back differential
        CHECK(restrict_to_arity(bw.structure, 2).equals(restrict_to_arity(mA, 2)));
    }
}

TEST_CASE("transfer rejects non-chain-maps") {
    DgQuiver A(0);
    A.add_object("x");
    GradedSpace& h = A.hom(0, 0);
    h.add("a", 0);
    h.add("b", 1);
    GradedMap d(&h, &h, 1, 0);
    d.add(0, 1, Scalar::rational(1));
    A.set_differential(0, 0, std::move(d));
    // f(a) = a, f(b) = 0: not a chain map since f(da) = 0 ≠ b = d f(a)
    GradedMap g(&h, &h, 0, 0);
    g.add(0, 0, Scalar::rational(1));
    std::map<std::pair<int, int>, GradedMap> fm;
    fm.emplace(std::make_pair(0, 0), std::move(g));
    HomCollection f = chain_morphism(A, A, {0}, fm, NMAX);
    CHECK_THROWS_AS(transfer_to_target(f, dg_structure(A, NMAX), NMAX), math_error);
}

TEST_CASE("minimal model lives on cohomology and receives a valid projection") {
    DgQuiver A = small_quiver(41);
    HomCollection mA = dg_structure(A, NMAX);
    MinimalModel mm = minimal_model(A, mA, NMAX);
    CHECK(mm.con->reduced.has_zero_differential());
    CHECK(is_ainf(mm.mH, NMAX).ok);
    CHECK(report_zero(mi_defect(mm.P, mA, mm.mH, NMAX)).ok);
}

TEST_CASE("cohomology setup gives a one-sided literal inverse pair") {
    DgQuiver A = small_quiver(42);
    HomCollection mA = dg_structure(A, NMAX);
    CohomologySetup S = cohomology_setup(A, mA, NMAX);
    CHECK(is_ainf(S.mH, NMAX).ok);
    CHECK(report_zero(mi_defect(S.I, S.mH, mA, NMAX)).ok);
    CHECK(report_zero(mi_defect(S.P, mA, S.mH, NMAX)).ok);
    CHECK(compose_morphisms(S.P, S.I, NMAX).equals(identity_morphism(S.con->reduced, NMAX)));
}

TEST_CASE("quasi-inverse induces mutually inverse maps on cohomology") {
    DgQuiver A = small_quiver(43);
    SplitMix64 rng(43);
    testkit::TwistedQuiver tw = testkit::random_twisted_quiver(A, NMAX, rng);
    HomCollection mA = dg_structure(A, NMAX);
    TransferResult tr = transfer_to_target(tw.f, mA, NMAX);
    QuasiInverseResult qi = quasi_inverse(tr.morphism, mA, tr.structure, NMAX);
    HomCollection GF = induced_on_cohomology(compose_morphisms(qi.G, tr.morphism, NMAX), qi.SA, qi.SA, NMAX);
    HomCollection FG = induced_on_cohomology(compose_morphisms(tr.morphism, qi.G, NMAX), qi.SB, qi.SB, NMAX);
    CHECK(GF.equals(identity_morphism(qi.SA.con->reduced, NMAX)));
    CHECK(FG.equals(identity_morphism(qi.SB.con->reduced, NMAX)));
}
