#pragma once

// Brute-force reference computations used by the tests. Only the model's
// tables and noise pmfs are read; worlds are solved here from scratch.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "causal_ident/model.hpp"

namespace oracle {

using causal_ident::Model;
using Values = std::vector<int>;
using Fix = std::map<std::size_t, int>;

struct Config {
  std::vector<int> noise;
  double p;
};

inline std::vector<Config> configurations(const Model& m) {
  std::vector<Config> out{{{}, 1.0}};
  for (std::size_t v = 0; v < m.size(); ++v) {
    std::vector<Config> next;
    for (const auto& c : out) {
      for (std::size_t e = 0; e < m[v].noise_pmf_f.size(); ++e) {
        if (m[v].noise_pmf_f[e] == 0.0) continue;
        Config d = c;
        d.noise.push_back(static_cast<int>(e));
        d.p *= m[v].noise_pmf_f[e];
        next.push_back(std::move(d));
      }
    }
    out = std::move(next);
  }
  return out;
}

inline int structural(const Model& m, std::size_t v, const Values& vals, int e) {
  const auto& var = m[v];
  std::size_t row = 0;
  for (auto p : var.parents) row = row * m[p].domain.size() + static_cast<std::size_t>(vals[p]);
  row = row * var.noise_domain.size() + static_cast<std::size_t>(e);
  return var.table[row];
}

/// Solves the model in declaration order with `fix` overriding equations.
inline Values solve(const Model& m, const std::vector<int>& noise, const Fix& fix = {}) {
  Values vals(m.size(), 0);
  for (std::size_t v = 0; v < m.size(); ++v) {
    auto it = fix.find(v);
    vals[v] = it != fix.end() ? it->second : structural(m, v, vals, noise[v]);
  }
  return vals;
}

inline double number(const Model& m, std::size_t v, int label) { return std::stod(m[v].domain.label(label)); }

/// Generic weighted sums over configurations.
inline double expect(const std::vector<Config>& cs, const std::function<double(const Config&)>& f) {
  double s = 0;
  for (const auto& c : cs) s += c.p * f(c);
  return s;
}

struct Mediation {
  const Model& m;
  std::vector<std::size_t> l, w;
  std::size_t a, med, y;
  int active = 1, reference = 0;
  std::vector<Config> cs = configurations(m);

  Mediation(const Model& model, std::vector<std::string> baseline, std::vector<std::string> post)
      : m(model), a(model.index("A")), med(model.index("M")), y(model.index("Y")) {
    for (const auto& n : baseline) l.push_back(m.index(n));
    for (const auto& n : post) w.push_back(m.index(n));
  }

  static std::vector<int> pick(const Values& v, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    for (auto i : idx) out.push_back(v[i]);
    return out;
  }

  double mean_do(int av) const {
    return expect(cs, [&](const Config& c) { return number(m, y, solve(m, c.noise, {{a, av}})[y]); });
  }
  double nested(int av, int as) const {
    return expect(cs, [&](const Config& c) {
      const int mv = solve(m, c.noise, {{a, as}})[med];
      return number(m, y, solve(m, c.noise, {{a, av}, {med, mv}})[y]);
    });
  }
  double ate() const { return mean_do(active) - mean_do(reference); }
  double nde() const { return nested(active, reference) - nested(reference, reference); }
  double nie() const { return nested(active, active) - nested(active, reference); }

  // E[Y^{a, G}] where G draws M^{as} given the strata picked by `keys_as`, and
  // Y^{a,m} is averaged over the same strata computed in world a.
  double interventional(int av, int as, bool with_w) const {
    std::vector<std::size_t> keys = l;
    if (with_w) keys.insert(keys.end(), w.begin(), w.end());
    std::map<std::vector<int>, double> p_key;                 // P(K^a = k)
    std::map<std::vector<int>, double> p_key_as;               // P(K^as = k)
    std::map<std::pair<std::vector<int>, int>, double> p_m;    // P(K^as = k, M^as = m)
    std::map<std::pair<std::vector<int>, int>, double> ey;     // E[Y^{a,m} ; K^a = k]
    const int nm = static_cast<int>(m[med].domain.size());
    for (const auto& c : cs) {
      const Values wa = solve(m, c.noise, {{a, av}});
      const Values was = solve(m, c.noise, {{a, as}});
      const auto ka = pick(wa, keys), kas = pick(was, keys);
      p_key[ka] += c.p;
      p_key_as[kas] += c.p;
      p_m[{kas, was[med]}] += c.p;
      for (int mv = 0; mv < nm; ++mv) {
        ey[{ka, mv}] += c.p * number(m, y, solve(m, c.noise, {{a, av}, {med, mv}})[y]);
      }
    }
    double total = 0;
    for (const auto& [k, pk] : p_key) {
      if (pk == 0) continue;
      for (int mv = 0; mv < nm; ++mv) {
        const double den = p_key_as[k];
        if (den == 0) throw std::runtime_error("oracle: stratum unreachable under reference");
        total += pk * (p_m[{k, mv}] / den) * (ey[{k, mv}] / pk);
      }
    }
    return total;
  }
  double rde() const { return interventional(active, reference, false) - interventional(reference, reference, false); }
  double rie() const { return interventional(active, active, false) - interventional(active, reference, false); }
  double rde_w() const { return interventional(active, reference, true) - interventional(reference, reference, true); }

  // Observed-data functionals, from the factual joint.
  double psi(int av, int as, bool w_conditional) const {
    std::map<std::vector<int>, double> joint;  // (l, a, w, m, y) -> mass
    for (const auto& c : cs) {
      const Values v = solve(m, c.noise);
      std::vector<int> k = pick(v, l);
      k.push_back(v[a]);
      for (auto i : w) k.push_back(v[i]);
      k.push_back(v[med]);
      k.push_back(v[y]);
      joint[k] += c.p;
    }
    const std::size_t nl = l.size(), nw = w.size();
    auto mass = [&](const std::function<bool(const std::vector<int>&)>& pred) {
      double s = 0;
      for (const auto& [k, p] : joint) {
        if (pred(k)) s += p;
      }
      return s;
    };
    auto eq = [](const std::vector<int>& k, std::size_t from, const std::vector<int>& v) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (k[from + i] != v[i]) return false;
      }
      return true;
    };
    std::map<std::vector<int>, bool> ls, ws;
    for (const auto& [k, p] : joint) {
      ls[std::vector<int>(k.begin(), k.begin() + static_cast<long>(nl))] = true;
      ws[std::vector<int>(k.begin() + static_cast<long>(nl) + 1, k.begin() + static_cast<long>(nl + 1 + nw))] = true;
    }
    const int nm = static_cast<int>(m[med].domain.size());
    double total = 0;
    for (const auto& [lv, _] : ls) {
      const double pl = mass([&](const auto& k) { return eq(k, 0, lv); });
      if (pl == 0) continue;
      for (const auto& [wv, __] : ws) {
        const double plaw = mass([&](const auto& k) { return eq(k, 0, lv) && k[nl] == av && eq(k, nl + 1, wv); });
        const double pla = mass([&](const auto& k) { return eq(k, 0, lv) && k[nl] == av; });
        if (plaw == 0) continue;
        for (int mv = 0; mv < nm; ++mv) {
          double pm;
          if (w_conditional) {
            pm = mass([&](const auto& k) { return eq(k, 0, lv) && k[nl] == as && eq(k, nl + 1, wv) && k[nl + 1 + nw] == mv; }) /
                 mass([&](const auto& k) { return eq(k, 0, lv) && k[nl] == as && eq(k, nl + 1, wv); });
          } else {
            pm = mass([&](const auto& k) { return eq(k, 0, lv) && k[nl] == as && k[nl + 1 + nw] == mv; }) /
                 mass([&](const auto& k) { return eq(k, 0, lv) && k[nl] == as; });
          }
          if (pm == 0) continue;
          double num = 0, den = 0;
          for (const auto& [k, p] : joint) {
            if (eq(k, 0, lv) && k[nl] == av && eq(k, nl + 1, wv) && k[nl + 1 + nw] == mv) {
              den += p;
              num += p * number(m, y, k.back());
            }
          }
          total += pl * (plaw / pla) * pm * (num / den);
        }
      }
    }
    return total;
  }
  double psi_rde() const { return psi(active, reference, false) - psi(reference, reference, false); }
  double psi_rde_w() const { return psi(active, reference, true) - psi(reference, reference, true); }
};

}  // namespace oracle
