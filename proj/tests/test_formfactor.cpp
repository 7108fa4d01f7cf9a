#include "betheform/runner.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace betheform;
using Catch::Matchers::WithinAbs;

namespace {

const std::uint64_t kSeed = 7;

struct Fixture {
  ModelSpec spec = ModelSpec::seeded(3, 4, cplx{1.0, 0.0}, 2, kSeed);
  SectorTable tab{3, 4};
  Inventory inv;
  std::vector<cplx> zpool;

  Fixture() {
    inv = build_inventory(spec, tab, {{0, 0}, {1, 0}, {2, 0}, {2, 1}}, kSeed, 0, {});
    zpool = sample_points(spec, kSeed, 10, "zsamples");
  }
  const std::vector<MatchedState>& states(std::vector<int> cards) const {
    const auto* si = inv.find(cards);
    REQUIRE(si != nullptr);
    return si->states;
  }
};

const Fixture& fixture() {
  static Fixture fx;
  return fx;
}

MatchedState rescale_left(MatchedState s, cplx factor) {
  s.pair.left *= factor;
  s.pair.pairing *= factor;
  return s;
}

}  // namespace

TEST_CASE("direct elements: pairing, eigen-relation, weight bookkeeping", "[formfactor]") {
  const auto& fx = fixture();
  const auto& s10 = fx.states({1, 0});
  REQUIRE(s10.size() >= 2);

  const auto I = ManyBodyOperator::identity(fx.tab);
  const cplx pairing = direct_element(s10[0], I, s10[0]);
  CHECK(std::abs(pairing) > 1e-8);
  CHECK_THAT(std::abs(pairing - s10[0].pair.pairing), WithinAbs(0.0, 1e-13));

  // t(w) between a state and itself gives tau * pairing
  const cplx w = fx.inv.wpoints[0];
  const auto t = transfer_matrix(w, std::span<const cplx>(fx.spec.kappa), fx.spec, fx.tab);
  const cplx elem = direct_element(s10[0], t, s10[0]);
  CHECK_THAT(std::abs(elem - s10[0].pair.samples[0] * pairing) / std::abs(elem),
             WithinAbs(0.0, 1e-10));

  // T_12 connects (a,b) to (a+1,b) and nothing else
  const auto occ10 = occupations_from_levels({1, 0}, 4);
  const auto shifted = shifted_occupations(occ10, 1, 2);
  REQUIRE(shifted.has_value());
  CHECK(levels_from_occupations(*shifted) == std::vector<int>{2, 0});
  const auto mono = build_monodromy(w, SiteRange::full(4), fx.spec, fx.tab);
  for (const auto& [key, blk] : mono.entry(1, 2).blocks()) {
    const auto& row_occ = fx.tab.sectors[static_cast<size_t>(key.first)].occupations;
    const auto want = shifted_occupations(fx.tab.sectors[static_cast<size_t>(key.second)].occupations, 1, 2);
    REQUIRE(want.has_value());
    CHECK(row_occ == *want);
  }
}

TEST_CASE("universal form factor: z-independence and bilinearity", "[formfactor]") {
  const auto& fx = fixture();
  const auto& s10 = fx.states({1, 0});
  REQUIRE(s10.size() >= 2);
  MonodromyCache mono(fx.spec, fx.tab);

  const auto uff = universal_ff(s10[0], s10[1], 2, 2, fx.zpool, fx.spec, mono);
  CHECK(uff.samples_used >= 5);
  CHECK(uff.z_spread < 1e-8);

  // rescaling the bra left vector rescales the universal FF by the same factor
  const cplx factor{7.0, 1.0};
  const MatchedState scaled = rescale_left(s10[0], factor);
  const auto uff2 = universal_ff(scaled, s10[1], 2, 2, fx.zpool, fx.spec, mono);
  CHECK_THAT(std::abs(uff2.value - factor * uff.value) / std::abs(uff2.value),
             WithinAbs(0.0, 1e-12));

  // ... so the zero-mode identity record is unchanged
  const OperatorMatrix T10 = build_zero_mode(SiteRange::left(fx.spec.m), fx.spec, fx.tab);
  const auto rec = verify_zero_mode_ff(s10[0], s10[1], 2, 2, fx.spec, T10, fx.zpool, mono, 1e-8,
                                       "thm41");
  const auto rec2 = verify_zero_mode_ff(scaled, s10[1], 2, 2, fx.spec, T10, fx.zpool, mono, 1e-8,
                                        "thm41");
  CHECK(rec.pass);
  CHECK(rec2.pass);
  CHECK_THAT(std::abs(rec2.rel_res - rec.rel_res), WithinAbs(0.0, 1e-6));
}

TEST_CASE("zero-mode form factors pass for all nine operator entries", "[formfactor]") {
  const auto& fx = fixture();
  const auto recs = suite_thm41(fx.spec, fx.tab, fx.inv, kSeed, 10, {}, 1);
  REQUIRE(!recs.empty());
  std::set<std::pair<int, int>> covered;
  for (const auto& rec : recs) {
    INFO(rec.identity << " (" << rec.i << "," << rec.j << ") " << rec.sector_bra << "<-"
                      << rec.sector_ket << " rel " << rec.rel_res);
    CHECK(rec.pass);
    if (rec.identity == "thm41") covered.insert({rec.i, rec.j});
  }
  CHECK(covered.size() == 9);
}

TEST_CASE("diagonal zero-mode form factors with the sum rule", "[formfactor]") {
  const auto& fx = fixture();
  const auto recs = suite_thm42(fx.spec, fx.tab, fx.inv, {});
  REQUIRE(!recs.empty());
  bool saw_sum_rule = false, saw_fd = false;
  for (const auto& rec : recs) {
    INFO(rec.identity << " i=" << rec.i << " " << rec.sector_ket << " rel " << rec.rel_res);
    CHECK(rec.pass);
    saw_sum_rule |= rec.identity == "thm42-sum-rule";
    saw_fd |= rec.identity == "thm42-kappa-fd";
  }
  CHECK(saw_sum_rule);
  CHECK(saw_fd);
}

TEST_CASE("vacuum diagonal zero-mode element is m delta_i1 exactly", "[formfactor]") {
  const auto& fx = fixture();
  const auto& vac = fx.states({0, 0});
  REQUIRE(vac.size() == 1);
  const OperatorMatrix T10 = build_zero_mode(SiteRange::left(fx.spec.m), fx.spec, fx.tab);
  for (int i = 1; i <= 3; ++i) {
    const auto dv = kappa_derivatives(vac[0].roots, fx.spec, i);
    const auto rec = verify_diagonal_zero_mode_ff(vac[0], i, fx.spec, T10, dv, 1e-6, "thm42");
    const double want = i == 1 ? 2.0 : 0.0;
    CHECK_THAT(std::abs(rec.lhs - cplx{want, 0.0}), WithinAbs(0.0, 1e-13));
    CHECK(rec.pass);
  }
}

TEST_CASE("generating functional: random, zero and uniform twists", "[formfactor]") {
  const auto& fx = fixture();
  const auto recs = suite_lemma51(fx.spec, fx.tab, fx.inv, {2, 1}, kSeed, 2, {});
  REQUIRE(!recs.empty());
  bool saw_beta0 = false, saw_uniform = false, saw_random = false;
  for (const auto& rec : recs) {
    INFO(rec.identity << " " << rec.sector_bra << " rel " << rec.rel_res);
    CHECK(rec.pass);
    saw_beta0 |= rec.identity == "lemma51-beta0";
    saw_uniform |= rec.identity == "lemma51-uniform";
    saw_random |= rec.identity == "lemma51";
  }
  CHECK(saw_beta0);
  CHECK(saw_uniform);
  CHECK(saw_random);
}

TEST_CASE("local operators: lattice-difference formulas at every site", "[formfactor]") {
  const auto& fx = fixture();
  const auto recs = suite_local(fx.spec, fx.tab, fx.inv, kSeed, 10, {});
  REQUIRE(!recs.empty());
  bool saw_telescoping = false;
  for (const auto& rec : recs) {
    INFO(rec.identity << " (" << rec.i << "," << rec.j << ") " << rec.z_or_site << " rel "
                      << rec.rel_res);
    CHECK(rec.pass);
    saw_telescoping |= rec.identity == "local-telescoping";
  }
  CHECK(saw_telescoping);
}

TEST_CASE("diagonal local element at site 1 includes the per-site constant", "[formfactor]") {
  const auto& fx = fixture();
  const auto& s10 = fx.states({1, 0});
  REQUIRE(!s10.empty());
  const auto dv = kappa_derivatives(s10[0].roots, fx.spec, 1);
  const auto rec = verify_local_diagonal_ff(s10[0], 1, 1, fx.spec, fx.tab, dv, 1e-6);
  CHECK(rec.pass);
  // the kappa-derivative part alone misses the element by exactly 1
  const cplx derivative_only = rec.rhs - 1.0;
  CHECK(std::abs(rec.lhs - derivative_only) > 0.5);
}

TEST_CASE("zero-mode commutator suite is exact", "[formfactor]") {
  const auto& fx = fixture();
  const auto recs = verify_commutators(fx.spec, fx.tab);
  REQUIRE(!recs.empty());
  for (const auto& rec : recs) {
    INFO(rec.identity << " (" << rec.i << "," << rec.j << ")");
    CHECK(rec.abs_res < 1e-13);
  }
}

TEST_CASE("zero-mode structure suite: hwC, diagonal action, orthogonality", "[formfactor]") {
  const auto& fx = fixture();
  const auto recs = suite_zero_mode_structure(fx.spec, fx.tab, fx.inv, {});
  bool saw_hwc = false, saw_diag = false, saw_orth = false;
  for (const auto& rec : recs) {
    INFO(rec.identity << " " << rec.sector_ket << " res " << rec.rel_res);
    CHECK(rec.pass);
    saw_hwc |= rec.identity == "hwC-singular";
    saw_diag |= rec.identity == "zm-diagonal-action";
    saw_orth |= rec.identity == "onshell-orthogonality";
  }
  CHECK(saw_hwc);
  CHECK(saw_diag);
  CHECK(saw_orth);
}

TEST_CASE("orientation reversal: ratio uniformity, cocycles, involution", "[formfactor]") {
  const auto& fx = fixture();
  const auto recs = suite_morphism(fx.spec, fx.tab, fx.inv, kSeed, 10, {});
  REQUIRE(!recs.empty());
  bool saw_orientation = false, saw_cocycle = false, saw_mixed = false, saw_involution = false;
  for (const auto& rec : recs) {
    INFO(rec.identity << " (" << rec.i << "," << rec.j << ") " << rec.sector_bra << " rel "
                      << rec.rel_res);
    CHECK(rec.pass);
    saw_orientation |= rec.identity == "morphism-orientation";
    saw_cocycle |= rec.identity == "morphism-cocycle";
    saw_mixed |= rec.identity == "morphism-mixed-cocycle";
    saw_involution |= rec.identity == "morphism-involution";
  }
  CHECK(saw_orientation);
  CHECK(saw_cocycle);
  CHECK(saw_mixed);
  CHECK(saw_involution);
}

TEST_CASE("orientation ratio is one constant across diagonal entries", "[formfactor]") {
  const auto& fx = fixture();
  const auto& s21 = fx.states({2, 1});
  REQUIRE(s21.size() >= 2);
  MonodromyCache mono(fx.spec, fx.tab);
  std::vector<cplx> ratios;
  for (int d = 1; d <= 3; ++d) {
    const auto chi = morphism_orientation_ratio(s21[0], s21[1], d, d, fx.spec, fx.zpool, mono);
    if (chi) ratios.push_back(*chi);
  }
  REQUIRE(ratios.size() >= 2);
  for (size_t k = 1; k < ratios.size(); ++k)
    CHECK_THAT(std::abs(ratios[k] - ratios[0]) / std::abs(ratios[0]), WithinAbs(0.0, 1e-8));
}

TEST_CASE("zero-mode form factors hold at M = 5 as well", "[formfactor]") {
  const ModelSpec spec = ModelSpec::seeded(3, 5, cplx{1.0, 0.0}, 2, kSeed);
  const SectorTable tab(3, 5, 300);
  const Inventory inv = build_inventory(spec, tab, {{0, 0}, {1, 0}, {2, 0}}, kSeed, 0, {});
  REQUIRE(inv.total_matched() >= 4);
  const auto recs = suite_thm41(spec, tab, inv, kSeed, 10, {}, 1);
  REQUIRE(!recs.empty());
  for (const auto& rec : recs) {
    INFO(rec.identity << " (" << rec.i << "," << rec.j << ") " << rec.sector_bra << "<-"
                      << rec.sector_ket << " rel " << rec.rel_res);
    CHECK(rec.pass);
  }
}

TEST_CASE("GL(2) specialization passes the same identities", "[formfactor]") {
  const ModelSpec spec = ModelSpec::seeded(2, 4, cplx{1.0, 0.0}, 2, kSeed);
  const SectorTable tab(2, 4);
  const Inventory inv = build_inventory(spec, tab, {{0}, {1}, {2}}, kSeed, 0, {});
  REQUIRE(inv.total_matched() >= 4);
  for (const auto& rec : suite_thm41(spec, tab, inv, kSeed, 10, {}, 1)) {
    INFO(rec.identity << " (" << rec.i << "," << rec.j << ") rel " << rec.rel_res);
    CHECK(rec.pass);
  }
  for (const auto& rec : suite_thm42(spec, tab, inv, {})) {
    INFO(rec.identity << " i=" << rec.i << " rel " << rec.rel_res);
    CHECK(rec.pass);
  }
}

TEST_CASE("rank-4 evidence: smallest nontrivial sector pair", "[formfactor]") {
  const ModelSpec spec = ModelSpec::seeded(4, 3, cplx{1.0, 0.0}, 1, kSeed);
  const SectorTable tab(4, 3);
  const Inventory inv = build_inventory(spec, tab, {{0, 0, 0}, {1, 0, 0}}, kSeed, 0, {});
  REQUIRE(inv.total_matched() >= 3);
  const auto offdiag = suite_zero_mode_ff(spec, tab, inv, kSeed, 10, {}, 1, "rank4-offdiag", 1e-6, false);
  const auto diag = suite_diagonal_zero_mode(spec, tab, inv, {}, "rank4-diag", 1e-6, false, false);
  REQUIRE(!offdiag.empty());
  REQUIRE(!diag.empty());
  for (const auto& rec : offdiag) {
    INFO(rec.identity << " (" << rec.i << "," << rec.j << ") rel " << rec.rel_res);
    CHECK(rec.pass);
  }
  for (const auto& rec : diag) {
    INFO(rec.identity << " i=" << rec.i << " rel " << rec.rel_res);
    CHECK(rec.pass);
  }
}

TEST_CASE("the rank-3 conjecture code path is the theorem code path", "[formfactor]") {
  const auto& fx = fixture();
  const auto a = suite_zero_mode_ff(fx.spec, fx.tab, fx.inv, kSeed, 10, {}, 1, "thm41", 1e-8, false);
  const auto b = suite_zero_mode_ff(fx.spec, fx.tab, fx.inv, kSeed, 10, {}, 1, "thm41", 1e-8, false);
  REQUIRE(a.size() == b.size());
  for (size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].lhs == b[k].lhs);
    CHECK(a[k].rhs == b[k].rhs);
  }
}
