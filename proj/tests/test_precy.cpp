#include <catch2/catch_amalgamated.hpp>

#include "quivhom/diagram.hpp"
#include "quivhom/precy.hpp"
#include "quivhom/testkit.hpp"

using namespace quivhom;
using testkit::GenParams;
using testkit::SplitMix64;

namespace {
constexpr int D = 1, LMAX = 3, NMAX = 4;

DgQuiver small_quiver(std::uint64_t seed, std::uint64_t p = 0) {
    SplitMix64 rng(seed);
    GenParams gp;
    gp.p = p;
    return testkit::random_dg_quiver(rng, gp);
}
}  // namespace

TEST_CASE("component types") {
    CHECK(type_valid({{0, 1}, {2}}));
    CHECK(type_valid({{0, 1}}));
    CHECK_FALSE(type_valid({{0}}));       // single length-1 group
    CHECK_FALSE(type_valid({}));          // empty
    CHECK_FALSE(type_valid({{0}, {}}));   // empty group
    CHECK(type_length({{0, 1}, {2}}) == 2);
    CHECK(type_size({{0, 1}, {2}}) == 3);
    CHECK(type_inputs({{0, 1}, {2}}) == 1);
}

TEST_CASE("embedding single-output collections and restricting back is the identity") {
    DgQuiver A = small_quiver(3);
    SplitMix64 rng(5);
    GenParams gp;
    HomCollection m = testkit::random_ainf_shaped(A, 1, NMAX, rng, gp);
    MultiCollection M = embed_ainf(m, D, LMAX);
    CHECK(restrict_to_ainf(M).equals(m));
    // the embedding has no components of length > 1
    for (const auto& [t, c] : M.components())
        if (!c.is_zero()) CHECK(type_length(t) == 1);
}

TEST_CASE("cyclic action has the right order and symmetrization is invariant") {
    DgQuiver A = small_quiver(6);
    SplitMix64 rng(7);
    GenParams gp;
    std::vector<int> id{0, 1};
    MultiCollection F = testkit::random_multi_collection(&A, &A, id, D, 0, LMAX, NMAX, rng, gp, false);
    CHECK(cyclic_action(0, F).equals(F));
    // rotating a length-l component l times returns it; the joint action has
    // order dividing lcm(1..lmax)
    MultiCollection Fr = F;
    for (int k = 0; k < 6; ++k) Fr = cyclic_action(1, Fr);
    CHECK(Fr.equals(F));
    MultiCollection S = symmetrize(F);
    CHECK(is_cyclically_invariant(S));
    CHECK(cyclic_action(1, S).equals(S));
}

TEST_CASE("differential-only multi structures satisfy the Maurer-Cartan equation") {
    DgQuiver A = small_quiver(8);
    MultiCollection M = dg_pcy_structure(A, D, LMAX, NMAX);
    CHECK(is_pcy(M).ok);
}

TEST_CASE("random invariant-cocycle structures satisfy the Maurer-Cartan equation") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        DgQuiver A = small_quiver(seed * 17);
        SplitMix64 rng(seed);
        MultiCollection M = testkit::random_pcy_structure(A, D, LMAX, NMAX, rng);
        IdentityReport rep = is_pcy(M);
        CHECK(rep.ok);
        CHECK(is_cyclically_invariant(M));
    }
}

TEST_CASE("identity morphism and unit laws at the multi level") {
    DgQuiver A = small_quiver(9);
    SplitMix64 rng(9);
    MultiCollection M = testkit::random_pcy_structure(A, D, LMAX, NMAX, rng);
    MultiCollection id = identity_pcy(A, D, LMAX, NMAX);
    CHECK(is_pcy_morphism(id, M, M).ok);
    GenParams gp;
    std::vector<int> f0{0, 1};
    MultiCollection F = testkit::random_multi_collection(&A, &A, f0, D, 0, LMAX, NMAX, rng, gp, true);
    CHECK(compose_pcy(id, F).equals(F));
    CHECK(compose_pcy(F, id).equals(F));
}

TEST_CASE("fast evaluation agrees with the reference evaluator on a glued diagram") {
    DgQuiver A = small_quiver(10);
    SplitMix64 rng(10);
    GenParams gp;
    std::vector<int> id{0, 1};
    MultiCollection F = testkit::random_multi_collection(&A, &A, id, D, 0, LMAX, NMAX, rng, gp, false);
    MultiCollection M = testkit::random_multi_structure(A, D, 1, LMAX, NMAX, rng, gp);
    // one disc of M feeding one disc of F
    MultiType tm{{1, 1}};
    MultiType tf{{1, 1}, {0}};
    if (M.has(tm) && F.has(tf)) {
        Diagram dg;
        dg.d = D;
        dg.discs.push_back({&M.at(tm), 1});
        dg.discs.push_back({&F.at(tf), 0});
        dg.in_src = {{{-1, 0}}, {{0, 0}}};
        dg.out_order = {{1, 0}, {1, 1}};
        dg.n_ext_in = 1;
        MMap fast = evaluate_diagram(dg);
        MMap ref = testkit::reference_evaluate_diagram(dg);
        CHECK(fast == ref);
    }
}

TEST_CASE("pre-CY transfer to the target yields a valid structure extending the chain map") {
    for (std::uint64_t seed = 51; seed <= 52; ++seed) {
        DgQuiver A = small_quiver(seed);
        SplitMix64 rng(seed);
        MultiCollection MA = testkit::random_pcy_structure(A, D, LMAX, NMAX, rng);
        testkit::TwistedQuiver tw = testkit::random_twisted_quiver(A, NMAX, rng);
        PcyTransferResult tr = transfer_pcy_to_target(tw.f, MA, LMAX, NMAX);
        CHECK(is_pcy(tr.structure).ok);
        CHECK(is_pcy_morphism(tr.morphism, MA, tr.structure).ok);
        CHECK(is_cyclically_invariant(tr.structure));
        // single-output parts agree with the single-output transfer bit-exactly
        TransferResult atr = transfer_to_target(tw.f, restrict_to_ainf(MA), NMAX);
        CHECK(restrict_to_ainf(tr.structure).equals(atr.structure));
        CHECK(restrict_to_ainf(tr.morphism).equals(atr.morphism));
    }
}

TEST_CASE("pre-CY transfer from the target along an inclusion") {
    DgQuiver A = small_quiver(53);
    SplitMix64 rng(53);
    MultiCollection MA = testkit::random_pcy_structure(A, D, LMAX, NMAX, rng);
    PcyCohomologySetup S = pcy_cohomology_setup(A, MA, LMAX, NMAX);
    CHECK(is_pcy(S.MH).ok);
    CHECK(is_pcy_morphism(S.I, S.MH, MA).ok);
    CHECK(is_pcy_morphism(S.P, MA, S.MH).ok);
    CHECK(compose_pcy(S.P, S.I).equals(identity_pcy(S.con->reduced, D, LMAX, NMAX)));
}

TEST_CASE("pre-CY minimal model") {
    DgQuiver A = small_quiver(54);
    SplitMix64 rng(54);
    MultiCollection MA = testkit::random_pcy_structure(A, D, LMAX, NMAX, rng);
    PcyMinimalModel mm = pcy_minimal_model(A, MA, LMAX, NMAX);
    CHECK(mm.con->reduced.has_zero_differential());
    CHECK(is_pcy(mm.MH).ok);
    CHECK(is_pcy_morphism(mm.P, MA, mm.MH).ok);
    // single-output part agrees with the single-output minimal model
    MinimalModel amm = minimal_model(A, restrict_to_ainf(MA), NMAX);
    CHECK(restrict_to_ainf(mm.MH).equals(amm.mH));
}

TEST_CASE("multi-level inversion round trips") {
    DgQuiver A = small_quiver(55);
    SplitMix64 rng(55);
    MultiCollection MA = testkit::random_pcy_structure(A, D, LMAX, NMAX, rng);
    testkit::TwistedQuiver tw = testkit::random_twisted_quiver(A, NMAX, rng);
    PcyTransferResult tr = transfer_pcy_to_target(tw.f, MA, LMAX, NMAX);
    MultiCollection G = invert_pcy(tr.morphism, LMAX, NMAX);
    CHECK(compose_pcy(G, tr.morphism).equals(identity_pcy(A, D, LMAX, NMAX)));
    CHECK(compose_pcy(tr.morphism, G).equals(identity_pcy(*tw.B, D, LMAX, NMAX)));
    CHECK(is_pcy_morphism(G, tr.structure, MA).ok);
    // identity inverts to itself
    MultiCollection idA = identity_pcy(A, D, LMAX, NMAX);
    CHECK(invert_pcy(idA, LMAX, NMAX).equals(idA));
}

TEST_CASE("multi-level quasi-inverse") {
    DgQuiver A = small_quiver(56);
    SplitMix64 rng(56);
    MultiCollection MA = testkit::random_pcy_structure(A, D, LMAX, NMAX, rng);
    testkit::TwistedQuiver tw = testkit::random_twisted_quiver(A, NMAX, rng);
    PcyTransferResult tr = transfer_pcy_to_target(tw.f, MA, LMAX, NMAX);
    PcyQuasiInverseResult qi = pcy_quasi_inverse(tr.morphism, MA, tr.structure, LMAX, NMAX);
    MultiCollection GF = pcy_induced_on_cohomology(compose_pcy(qi.G, tr.morphism), qi.SA, qi.SA);
    MultiCollection FG = pcy_induced_on_cohomology(compose_pcy(tr.morphism, qi.G), qi.SB, qi.SB);
    CHECK(GF.equals(identity_pcy(qi.SA.con->reduced, D, LMAX, NMAX)));
    CHECK(FG.equals(identity_pcy(qi.SB.con->reduced, D, LMAX, NMAX)));
}

TEST_CASE("necklace identities over a prime field") {
    testkit::SuiteReport rep;
    GenParams gp;
    gp.p = 5;
    testkit::run_pcy_identity_suite(2, D, LMAX, NMAX, rep, gp);
    CHECK(rep.ok);
    for (const auto& f : rep.failures) INFO(f);
}
