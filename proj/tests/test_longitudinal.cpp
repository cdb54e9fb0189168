#include <doctest.h>

#include <algorithm>
#include <map>

#include "causal_ident/counterfactual.hpp"
#include "causal_ident/error.hpp"
#include "causal_ident/longitudinal.hpp"
#include "helpers.hpp"
#include "shift_oracle.hpp"

using namespace causal_ident;
using oracle::ShiftOracle;

namespace {

LongitudinalFrame frame2() { return *builtin_class("long_observed").context.longitudinal; }

Regime shift(const Model& m) { return bind_regime(m, *builtin_class("long_observed").context.g1); }

TreatmentMap flip() { return TreatmentMap::map({1, 0}, 2); }

}  // namespace

TEST_SUITE("longitudinal") {

TEST_CASE("W2 closed form: hidden H splits the MTP parameter from the g-formula") {
  const auto doc = load_doc("w2");
  const Model m = validate_document(doc, Arithmetic::Rational);
  const auto& f = *doc.longitudinal;
  const Regime g1 = bind_regime(m, doc.regimes.at("shift"));
  const auto law = observed_law<Rational>(m);
  const auto mtp = mtp_parameters<Rational>(m, f, g1, flip());
  // A_t = H xor e_t with P(e_t = 1) = 1/4, Y = [A0 = A1].
  CHECK(mtp.gamma_mtp == Rational(5, 8));
  CHECK(mtp.gamma_mtp_si_g1 == Rational(5, 8));
  CHECK(mtp.gamma_mtp_si == Rational(3, 8));
  CHECK(psi_g<Rational>(law, f, flip()) == Rational(3, 8));

  const ShiftOracle o(m);
  CHECK(std::abs(o.gamma_mtp() - 0.625) < 1e-12);
  CHECK(std::abs(o.psi_g() - 0.375) < 1e-12);
  CHECK(std::abs(o.gamma_mtp_si() - 0.375) < 1e-12);
  CHECK(std::abs(o.gamma_mtp_si_g1() - 0.625) < 1e-12);
}

TEST_CASE("MTP parameters and psi_g match the unrolled oracle") {
  for (std::uint64_t i = 0; i < 15; ++i) {
    for (const char* cls : {"long_observed", "w2"}) {
      const Model m = draw(cls, i);
      const ShiftOracle o(m);
      const auto mtp = mtp_parameters<double>(m, frame2(), shift(m), flip());
      CHECK(std::abs(mtp.gamma_mtp - o.gamma_mtp()) < 1e-12);
      CHECK(std::abs(mtp.gamma_mtp_si - o.gamma_mtp_si()) < 1e-12);
      CHECK(std::abs(mtp.gamma_mtp_si_g1 - o.gamma_mtp_si_g1()) < 1e-12);
      CHECK(std::abs(psi_g<double>(observed_law<double>(m), frame2(), flip()) - o.psi_g()) < 1e-12);
    }
  }
}

TEST_CASE("q-tilde of the shift equals P^g(A_t^+ | history) without hidden confounding") {
  for (std::uint64_t i = 0; i < 15; ++i) {
    const Model m = draw("long_observed", i);
    const ShiftOracle o(m);
    const auto q = compute_q_tilde<double>(m, frame2(), shift(m));
    REQUIRE(q.slices.size() == 2);
    for (int t = 0; t < 2; ++t) {
      const auto& slice = q.slices[static_cast<std::size_t>(t)];
      for (const auto& [h, p1] : o.q_assigned(t)) {
        const auto& cell = slice.tables[slice.cell(h)];
        REQUIRE(cell.has_value());
        CHECK(std::abs((*cell)[1] - p1) < 1e-12);
      }
    }
  }
}

TEST_CASE("static regimes give indicator densities, stochastic ones their tables") {
  const auto doc = load_doc("longitudinal");
  const Model m = validate_document(doc, Arithmetic::Rational);
  const auto& f = *doc.longitudinal;
  const auto always = compute_q_tilde<Rational>(m, f, bind_regime(m, doc.regimes.at("always")));
  for (const auto& s : always.slices) {
    for (const auto& t : s.tables) {
      REQUIRE(t.has_value());
      CHECK((*t)[0] == 0);
      CHECK((*t)[1] == 1);
    }
  }
  const auto coin = compute_q_tilde<Rational>(m, f, bind_regime(m, doc.regimes.at("coin")));
  CHECK((*coin.slices[0].tables[0])[1] == Rational(2, 3));
  for (std::size_t c = 0; c < coin.slices[1].tables.size(); ++c) {
    const auto labels = coin.slices[1].labels(c);
    const Rational want = labels[2] == 1 ? Rational(4, 5) : Rational(1, 2);
    CHECK((*coin.slices[1].tables[c])[1] == want);
  }
}

TEST_CASE("g-formula sum and weighted forms agree and equal regime means when fully observed") {
  const auto doc = load_doc("longitudinal");
  const Model m = validate_document(doc, Arithmetic::Rational);
  const auto& f = *doc.longitudinal;
  const auto law = observed_law<Rational>(m);
  for (const char* name : {"always", "follow", "coin", "shift"}) {
    const Regime g = bind_regime(m, doc.regimes.at(name));
    const auto q = compute_q_tilde<Rational>(m, f, g);
    const auto v = extended_g_formula<Rational>(law, f, q);
    CHECK(v.value == v.weighted);
    CHECK(v.value == regime_mean<Rational>(m, f, g));
  }
}

TEST_CASE("psi_g with the identity map is the factual mean") {
  const Model m = draw("w2", 4);
  const auto law = observed_law<Rational>(m);
  CHECK(psi_g<Rational>(law, frame2(), TreatmentMap::identity()) == counterfactual_mean<Rational>(m, "Y", Regime{}));
}

TEST_CASE("incremental propensity scores: odds scaling, beta = 1, monotonicity") {
  const Model m = draw("long_observed", 2);
  const auto law = observed_law<Rational>(m);
  const auto p = treatment_law<Rational>(law, frame2());
  const auto one = incremental_ps_densities<Rational>(law, frame2(), Rational(1));
  CHECK(extended_g_formula<Rational>(law, frame2(), one).value == counterfactual_mean<Rational>(m, "Y", Regime{}));
  std::vector<RegimeDensitySet<Rational>> by_beta;
  for (const Rational& b : {Rational(1, 4), Rational(1, 2), Rational(1), Rational(2), Rational(4)}) {
    by_beta.push_back(incremental_ps_densities<Rational>(law, frame2(), b));
    const auto& q = by_beta.back();
    for (std::size_t t = 0; t < 2; ++t) {
      for (std::size_t c = 0; c < q.slices[t].tables.size(); ++c) {
        if (!p.slices[t].tables[c]) continue;
        const Rational p1 = (*p.slices[t].tables[c])[1];
        const Rational want = b * p1 / (b * p1 + 1 - p1);
        CHECK((*q.slices[t].tables[c])[1] == want);
      }
    }
  }
  for (std::size_t k = 1; k < by_beta.size(); ++k) {
    for (std::size_t t = 0; t < 2; ++t) {
      for (std::size_t c = 0; c < p.slices[t].tables.size(); ++c) {
        if (!p.slices[t].tables[c]) continue;
        const Rational p1 = (*p.slices[t].tables[c])[1];
        if (p1 == 0 || p1 == 1) continue;
        CHECK((*by_beta[k].slices[t].tables[c])[1] > (*by_beta[k - 1].slices[t].tables[c])[1]);
      }
    }
  }
  CHECK_THROWS_AS(incremental_ps_densities<Rational>(law, frame2(), Rational(0)), Error);
}

TEST_CASE("Z and S sets: static regimes cut the natural treatments off the outcome") {
  const auto doc = load_doc("longitudinal");
  const Model m = validate_document(doc, Arithmetic::Float);
  const auto& f = *doc.longitudinal;
  const auto fixed = z_sets(m, f, bind_regime(m, doc.regimes.at("always")));
  CHECK(std::find(fixed.z.begin(), fixed.z.end(), "Y") != fixed.z.end());
  CHECK(fixed.s == std::vector<std::string>{"A0", "A1"});
  const auto nat = z_sets(m, f, bind_regime(m, doc.regimes.at("shift")));
  CHECK(nat.s.empty());
  REQUIRE(nat.z_k.size() == 2);
  for (const auto& v : nat.z_k[0]) CHECK((v != "L0" && v != "A0"));
}

TEST_CASE("B-conditions: hidden H breaks the full condition but not the outcome-only one") {
  const auto doc = load_doc("w2");
  const Model m = validate_document(doc, Arithmetic::Rational);
  Regime fixed;
  fixed.set_static(m.index("A0"), 1).set_static(m.index("A1"), 1);
  const auto b = check_b<Rational>(m, *doc.longitudinal, fixed, 1e-12);
  CHECK_FALSE(b.b13.holds);
  CHECK(b.b14.holds);
  CHECK(b.b12.holds);

  for (std::uint64_t i = 0; i < 10; ++i) {
    const Model lo = draw("long_observed", i);
    Regime all;
    all.set_static(lo.index("A0"), 1).set_static(lo.index("A1"), 0);
    const auto r = check_b<double>(lo, frame2(), all, 1e-9);
    CHECK(r.b13.holds);
    CHECK(r.b14.holds);
  }
}

TEST_CASE("frame validation rejects misordered or unobserved treatments") {
  const Model m = draw("w2", 0);
  LongitudinalFrame f = frame2();
  CHECK_NOTHROW(validate_frame(m, f));
  LongitudinalFrame bad = f;
  std::swap(bad.points[0].treatment, bad.points[1].treatment);
  CHECK_THROWS_AS(validate_frame(m, bad), Error);
  LongitudinalFrame hidden = f;
  hidden.points[0].covariates = {"H"};
  CHECK_THROWS_AS(validate_frame(m, hidden), Error);
}

}  // TEST_SUITE
