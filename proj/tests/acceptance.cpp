// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "causal_ident/counterfactual.hpp"
#include "causal_ident/identification.hpp"
#include "causal_ident/longitudinal.hpp"
#include "causal_ident/mediation.hpp"
#include "causal_ident/spec_io.hpp"
#include "oracle.hpp"
#include "recanting_family.hpp"
#include "shift_oracle.hpp"

using namespace causal_ident;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Model draw(const std::string& cls, std::uint64_t i, std::uint64_t base) {
  return sample_model(builtin_class(cls), derive_seed(base, i));
}

MediationFrame mediation_frame(const std::string& cls) { return *builtin_class(cls).context.mediation; }

// Float: |total - 1| <= 1e-12. Rational: exact.
bool sums_to_one(const JointPmf<double>& p, double& worst) {
  worst = std::max(worst, std::abs(p.total() - 1.0));
  return std::abs(p.total() - 1.0) <= 1e-12;
}

Outcome consistency() {
  Outcome out;
  const std::vector<std::string> classes = {"mediation", "m1", "m2", "figure1", "recanting", "long_observed", "w2"};
  double worst = 0, oracle_dev = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto& cls = classes[i % classes.size()];
    const Model m = draw(cls, i, 1);
    const auto law_f = observed_law<double>(m);
    const auto law_q = observed_law<Rational>(m);
    out.pass &= sums_to_one(law_f, worst);
    out.pass &= law_q.total() == 1;

    std::vector<QueryItem> empty, crossed;
    for (std::size_t v = 0; v < m.size(); ++v) {
      if (m[v].observed) empty.push_back({m[v].name, Regime{}, false});
    }
    const std::size_t treat = m.index(cls == "long_observed" || cls == "w2" ? "A0" : "A");
    for (int a = 0; a < 2; ++a) {
      Regime r;
      r.set_static(treat, a);
      crossed.push_back({m.size() > 0 ? m[m.size() - 1].name : "", r, false});
      crossed.push_back({m[treat].name, r, true});
    }
    const auto cf_f = counterfactual_joint<double>(m, crossed);
    const auto cf_q = counterfactual_joint<Rational>(m, crossed);
    out.pass &= sums_to_one(cf_f, worst);
    out.pass &= cf_q.total() == 1;

    // Empty regime reproduces the observed law cell by cell.
    const auto same = counterfactual_joint<Rational>(m, empty);
    out.pass &= same.masses() == law_q.masses();

    // Independent check of the observed law against brute-force enumeration.
    const auto cs = oracle::configurations(m);
    std::vector<double> brute(law_f.cells(), 0.0);
    std::vector<std::size_t> obs;
    for (std::size_t v = 0; v < m.size(); ++v) {
      if (m[v].observed) obs.push_back(v);
    }
    for (const auto& c : cs) {
      const auto vals = oracle::solve(m, c.noise);
      std::vector<int> labels;
      for (auto v : obs) labels.push_back(vals[v]);
      brute[law_f.encode(labels)] += c.p;
    }
    for (std::size_t k = 0; k < brute.size(); ++k) oracle_dev = std::max(oracle_dev, std::abs(brute[k] - law_f.mass_at(k)));
  }
  out.pass &= oracle_dev <= 1e-12;
  out.detail = "200 models, max |sum-1| " + fmt(worst) + ", oracle dev " + fmt(oracle_dev);
  return out;
}

Outcome decomposition() {
  Outcome out;
  double worst = 0, oracle_dev = 0;
  const auto f = mediation_frame("mediation");
  for (std::uint64_t i = 0; i < 200; ++i) {
    const Model m = draw("mediation", i, 2);
    const double nde = gamma_nde<double>(m, f), nie = gamma_nie<double>(m, f), ate = gamma_ate<double>(m, f);
    worst = std::max(worst, std::abs(nde + nie - ate));
    const oracle::Mediation o(m, f.baseline, f.post_treatment);
    oracle_dev = std::max({oracle_dev, std::abs(nde - o.nde()), std::abs(ate - o.ate())});
  }
  out.pass = worst <= 1e-10 && oracle_dev <= 1e-10;
  out.detail = "200 models, max |NDE+NIE-ATE| " + fmt(worst) + ", oracle dev " + fmt(oracle_dev);
  return out;
}

template <class S>
double num(const S& v) {
  return to_double(v);
}

struct Concordance {
  std::size_t failed_membership = 0;
  double worst = 0;
  double oracle_dev = 0;
};

template <class S>
Concordance m2_concordance(std::size_t n) {
  Concordance c;
  const auto f = mediation_frame("m2");
  for (std::uint64_t i = 0; i < n; ++i) {
    const Model m = draw("m2", i, 3);
    if (!check_m2<S>(m, f, 1e-9).holds) ++c.failed_membership;
    const auto law = observed_law<S>(m);
    const double nde = num(gamma_nde<S>(m, f));
    c.worst = std::max({c.worst, std::abs(nde - num(psi_rde_w_contrast<S>(law, f))),
                        std::abs(nde - num(gamma_rde_w<S>(m, f)))});
    if constexpr (std::is_same_v<S, double>) {
      const oracle::Mediation o(m, f.baseline, f.post_treatment);
      c.oracle_dev = std::max(c.oracle_dev, std::abs(nde - o.nde()));
    }
  }
  return c;
}

template <class S>
Concordance m1_identification(std::size_t n) {
  Concordance c;
  const auto f = mediation_frame("m1");
  for (std::uint64_t i = 0; i < n; ++i) {
    const Model m = draw("m1", i, 4);
    if (!check_m1<S>(m, f, 1e-9).holds) ++c.failed_membership;
    const auto law = observed_law<S>(m);
    const double rde = num(gamma_rde<S>(m, f)), rde_w = num(gamma_rde_w<S>(m, f));
    c.worst = std::max({c.worst, std::abs(rde - num(psi_rde_contrast<S>(law, f))),
                        std::abs(rde_w - num(psi_rde_w_contrast<S>(law, f)))});
    if constexpr (std::is_same_v<S, double>) {
      const oracle::Mediation o(m, f.baseline, f.post_treatment);
      c.oracle_dev = std::max({c.oracle_dev, std::abs(rde - o.rde()), std::abs(rde_w - o.rde_w())});
    }
  }
  return c;
}

Outcome describe(const Concordance& c, std::size_t n, const std::string& what) {
  Outcome out;
  out.pass = c.failed_membership == 0 && c.worst <= 1e-9 && c.oracle_dev <= 1e-9;
  out.detail = std::to_string(n) + " models, " + std::to_string(c.failed_membership) + " membership failures, max " +
               what + " " + fmt(c.worst) + ", oracle dev " + fmt(c.oracle_dev);
  return out;
}

Model reload(const Model& m) {
  return validate_model(model_spec_from_json(model_to_json(m)["variables"], "/variables"), Arithmetic::Float);
}

// Search protocol shared by criteria 5 and 6: confirm the floor on the grid
// family, search the M1 class, re-derive the witness gap with the oracle.
Outcome witness(const Quantity& gamma, const Quantity& psi, double floor,
                const std::function<double(const oracle::Mediation&)>& gap) {
  Outcome out;
  const auto grid = family::maximise(gap);
  const ModelClass m1 = builtin_class("m1");
  const auto found = find_counterexample(gamma, psi, m1, 50000, kDefaultSeed);
  double recomputed = 0;
  bool member = false;
  if (found.best_model) {
    const Model w = reload(*found.best_model);
    const auto f = *m1.context.mediation;
    member = check_m1<double>(w, f, 1e-9).holds;
    recomputed = gap(oracle::Mediation(w, f.baseline, f.post_treatment));
  }
  out.pass = grid.gap >= floor && found.gap >= floor && member && std::abs(recomputed - found.gap) <= 1e-9;
  out.detail = "floor " + fmt(floor) + ", grid oracle " + fmt(grid.gap) + ", search " + fmt(found.gap) +
               ", oracle on witness " + fmt(recomputed) + (member ? ", witness in M1" : ", witness NOT in M1") + ", " +
               std::to_string(found.evaluations) + " evaluations";
  return out;
}

Outcome audit() {
  Outcome out;
  AuditConfig config;
  config.n = 100;
  config.budget = 50000;
  config.seed = kDefaultSeed;
  const auto r = audit_slippage(builtin_class("m1"), builtin_class("m2"), Quantity::parse("gamma_rde_w"),
                                Quantity::parse("gamma_nde"), Quantity::parse("psi_rde_w"),
                                Quantity::parse("psi_rde_w"), config);
  out.pass = r.all_certified;
  for (const auto& c : r.conditions) out.detail += c.name + (c.certified ? "=ok " : "=FAILED ");
  out.detail += "(n=100, budget 50000)";
  return out;
}

LongitudinalFrame long_frame() { return *builtin_class("long_observed").context.longitudinal; }
TreatmentMap flip() { return TreatmentMap::map({1, 0}, 2); }

Outcome longitudinal() {
  Outcome out;
  const auto f = long_frame();
  const auto g1 = *builtin_class("long_observed").context.g1;
  double pairwise = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const Model m = draw("long_observed", i, 8);
    const auto p = mtp_parameters<double>(m, f, bind_regime(m, g1), flip());
    const double psi = psi_g<double>(observed_law<double>(m), f, flip());
    const std::vector<double> v = {p.gamma_mtp, p.gamma_mtp_si_g1, p.gamma_mtp_si, psi};
    for (double x : v) {
      for (double y : v) pairwise = std::max(pairwise, std::abs(x - y));
    }
  }
  double si_gap = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const Model m = draw("w2", i, 8);
    const auto p = mtp_parameters<double>(m, f, bind_regime(m, g1), flip());
    si_gap = std::max(si_gap, std::abs(p.gamma_mtp_si - psi_g<double>(observed_law<double>(m), f, flip())));
  }
  const double floor = 0.2;
  const auto doc = load_spec_file(std::string(CAUSAL_IDENT_MODELS) + "/w2.json");
  const Model w2 = validate_document(doc, Arithmetic::Float);
  const oracle::ShiftOracle o(w2);
  const double oracle_gap = std::abs(o.gamma_mtp() - o.psi_g());
  const auto p = mtp_parameters<double>(w2, f, bind_regime(w2, g1), flip());
  const double psi = psi_g<double>(observed_law<double>(w2), f, flip());
  const double mtp_gap = std::abs(p.gamma_mtp - psi);
  si_gap = std::max(si_gap, std::abs(p.gamma_mtp_si - psi));
  out.pass = pairwise <= 1e-9 && si_gap <= 1e-9 && oracle_gap >= floor && mtp_gap >= floor;
  out.detail = "fully observed max pairwise " + fmt(pairwise) + "; W2 |SI-psi_g| " + fmt(si_gap) + ", |MTP-psi_g| " +
               fmt(mtp_gap) + " (oracle " + fmt(oracle_gap) + ", floor " + fmt(floor) + ")";
  return out;
}

Outcome incremental() {
  Outcome out;
  const auto f = long_frame();
  const std::vector<double> betas = {0.25, 0.5, 1, 2, 4};
  double beta_one = 0;
  std::size_t checked = 0, violations = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Model m = draw(i % 2 ? "w2" : "long_observed", i, 9);
    const auto law = observed_law<double>(m);
    const auto p = treatment_law<double>(law, f);
    beta_one = std::max(beta_one, std::abs(extended_g_formula<double>(law, f, incremental_ps_densities<double>(law, f, 1.0)).value -
                                           counterfactual_mean<double>(m, "Y", Regime{})));
    std::vector<RegimeDensitySet<double>> qs;
    for (double b : betas) qs.push_back(incremental_ps_densities<double>(law, f, b));
    for (std::size_t t = 0; t < p.slices.size(); ++t) {
      for (std::size_t c = 0; c < p.slices[t].tables.size(); ++c) {
        if (!p.slices[t].tables[c]) continue;
        const double p1 = (*p.slices[t].tables[c])[1];
        if (!(p1 > 0 && p1 < 1)) continue;
        for (std::size_t k = 1; k < qs.size(); ++k) {
          ++checked;
          if (!((*qs[k].slices[t].tables[c])[1] > (*qs[k - 1].slices[t].tables[c])[1])) ++violations;
        }
      }
    }
  }
  out.pass = beta_one <= 1e-12 && violations == 0 && checked > 0;
  out.detail = "max |psi_g(beta=1)-E[Y]| " + fmt(beta_one) + ", " + std::to_string(checked) + " monotone steps, " +
               std::to_string(violations) + " violations";
  return out;
}

Outcome modes() {
  Outcome out;
  double worst = 0;
  auto track = [&](double a, const Rational& b) { worst = std::max(worst, std::abs(a - to_double(b))); };
  for (std::uint64_t i = 0; i < 50; ++i) {
    {
      const Model m = draw("mediation", i, 2);
      const Model q = validate_model(model_spec_from_json(model_to_json(m)["variables"], "/variables"), Arithmetic::Rational);
      const auto f = mediation_frame("mediation");
      track(gamma_nde<double>(m, f) + gamma_nie<double>(m, f) - gamma_ate<double>(m, f),
            gamma_nde<Rational>(q, f) + gamma_nie<Rational>(q, f) - gamma_ate<Rational>(q, f));
      track(gamma_nde<double>(m, f), gamma_nde<Rational>(q, f));
      track(gamma_ate<double>(m, f), gamma_ate<Rational>(q, f));
    }
    for (const char* cls : {"m2", "m1"}) {
      const Model m = draw(cls, i, std::string(cls) == "m2" ? 3 : 4);
      const Model q = validate_model(model_spec_from_json(model_to_json(m)["variables"], "/variables"), Arithmetic::Rational);
      const auto f = mediation_frame(cls);
      const auto lf = observed_law<double>(m);
      const auto lq = observed_law<Rational>(q);
      track(gamma_nde<double>(m, f), gamma_nde<Rational>(q, f));
      track(gamma_rde<double>(m, f), gamma_rde<Rational>(q, f));
      track(gamma_rde_w<double>(m, f), gamma_rde_w<Rational>(q, f));
      track(psi_rde_contrast<double>(lf, f), psi_rde_contrast<Rational>(lq, f));
      track(psi_rde_w_contrast<double>(lf, f), psi_rde_w_contrast<Rational>(lq, f));
    }
  }
  out.pass = worst <= 1e-12;
  out.detail = "50 models per criterion 2-4, max |float-rational| " + fmt(worst);
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "consistency and conservation", 30, consistency},
      {2, "natural decomposition", 30, decomposition},
      {3, "M2 concordance", 60, [] { return describe(m2_concordance<double>(100), 100, "|NDE-psi|,|NDE-RDE_W|"); }},
      {4, "M1 identification", 60, [] { return describe(m1_identification<double>(100), 100, "|RDE-psi|,|RDE_W-psi_W|"); }},
      {5, "non-identification witness", 300,
       [] {
         return witness(Quantity::parse("gamma_nde"), Quantity::parse("psi_rde_w"), 0.05,
                        [](const oracle::Mediation& o) { return std::abs(o.nde() - o.psi_rde_w()); });
       }},
      {6, "interventional non-decomposition", 300,
       [] {
         return witness(Quantity::parse("gamma_rde+gamma_rie"), Quantity::parse("gamma_ate"), 0.02,
                        [](const oracle::Mediation& o) { return std::abs(o.rde() + o.rie() - o.ate()); });
       }},
      {7, "canonical slippage audit", 600, audit},
      {8, "longitudinal concordance", 300, longitudinal},
      {9, "incremental propensity scores", 10, incremental},
      {10, "mode agreement", 120, modes},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s  %2d  %-34s %s [%.1f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), seconds, c.limit_seconds, in_time ? "" : ", EXCEEDED");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures ? 1 : 0;
}
