#pragma once

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include "oracle.hpp"

namespace oracle {

// Two-point frame L0, A0, L1, A1, Y with the flip shift on both treatments.
struct ShiftOracle {
  const causal_ident::Model& m;
  std::size_t l0, a0, l1, a1, y;
  std::vector<Config> cs = configurations(m);

  explicit ShiftOracle(const causal_ident::Model& model)
      : m(model), l0(m.index("L0")), a0(m.index("A0")), l1(m.index("L1")), a1(m.index("A1")), y(m.index("Y")) {}

  // Solves under the shift; returns assigned values with naturals in `nat`.
  Values shifted(const std::vector<int>& noise, int* nat0 = nullptr, int* nat1 = nullptr) const {
    Values v(m.size(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      v[i] = structural(m, i, v, noise[i]);
      if (i == a0) {
        if (nat0) *nat0 = v[i];
        v[i] = 1 - v[i];
      } else if (i == a1) {
        if (nat1) *nat1 = v[i];
        v[i] = 1 - v[i];
      }
    }
    return v;
  }

  double gamma_mtp() const {
    return expect(cs, [&](const Config& c) { return number(m, y, shifted(c.noise)[y]); });
  }

  // P^g(A_t^+ = 1 | history) on histories with positive mass under the shift.
  std::map<std::vector<int>, double> q_assigned(int t) const {
    std::map<std::vector<int>, std::pair<double, double>> acc;
    for (const auto& c : cs) {
      const auto v = shifted(c.noise);
      std::vector<int> h = t == 0 ? std::vector<int>{v[l0]} : std::vector<int>{v[l0], v[a0], v[l1]};
      auto& [num, den] = acc[h];
      den += c.p;
      if (v[t == 0 ? a0 : a1] == 1) num += c.p;
    }
    std::map<std::vector<int>, double> out;
    for (const auto& [h, nd] : acc) {
      if (nd.second > 0) out[h] = nd.first / nd.second;
    }
    return out;
  }

  // Factual P(A_t = 1 | history).
  std::map<std::vector<int>, double> factual(int t) const {
    std::map<std::vector<int>, std::pair<double, double>> acc;
    for (const auto& c : cs) {
      const auto v = solve(m, c.noise);
      std::vector<int> h = t == 0 ? std::vector<int>{v[l0]} : std::vector<int>{v[l0], v[a0], v[l1]};
      auto& [num, den] = acc[h];
      den += c.p;
      if (v[t == 0 ? a0 : a1] == 1) num += c.p;
    }
    std::map<std::vector<int>, double> out;
    for (const auto& [h, nd] : acc) out[h] = nd.first / nd.second;
    return out;
  }

  // E[Y] under stochastic draws A_t^+ ~ q_t(. | history), q from `p1` flipped.
  double stochastic_mean(const std::map<std::vector<int>, double>& p0,
                         const std::map<std::vector<int>, double>& p1) const {
    return expect(cs, [&](const Config& c) {
      double s = 0;
      const int lv0 = solve(m, c.noise)[l0];
      for (int d0 : {0, 1}) {
        const double q0 = d0 == 1 ? 1 - p0.at({lv0}) : p0.at({lv0});
        if (q0 == 0) continue;
        const auto v0 = solve(m, c.noise, {{a0, d0}});
        for (int d1 : {0, 1}) {
          const double p = p1.at({lv0, d0, v0[l1]});
          const double q1 = d1 == 1 ? 1 - p : p;
          if (q1 == 0) continue;
          s += q0 * q1 * number(m, y, solve(m, c.noise, {{a0, d0}, {a1, d1}})[y]);
        }
      }
      return s;
    });
  }

  double gamma_mtp_si() const { return stochastic_mean(factual(0), factual(1)); }

  // Natural treatment law under the shift, given the assigned history.
  double gamma_mtp_si_g1() const {
    std::map<std::vector<int>, std::pair<double, double>> n0, n1;
    for (const auto& c : cs) {
      int nat0 = 0, nat1 = 0;
      const auto v = shifted(c.noise, &nat0, &nat1);
      auto& x0 = n0[{v[l0]}];
      x0.second += c.p;
      if (nat0 == 1) x0.first += c.p;
      auto& x1 = n1[{v[l0], v[a0], v[l1]}];
      x1.second += c.p;
      if (nat1 == 1) x1.first += c.p;
    }
    std::map<std::vector<int>, double> p0, p1;
    for (const auto& [h, x] : n0) p0[h] = x.first / x.second;
    for (const auto& [h, x] : n1) p1[h] = x.first / x.second;
    return stochastic_mean(p0, p1);
  }

  // sum P(l0) q0(a0|l0) P(l1|l0,a0) q1(a1|l0,a0,l1) E[Y|...], q = flip of P.
  double psi_g() const {
    std::map<std::vector<int>, double> joint;
    for (const auto& c : cs) {
      const auto v = solve(m, c.noise);
      joint[{v[l0], v[a0], v[l1], v[a1], v[y]}] += c.p;
    }
    auto mass = [&](std::size_t k, const std::vector<int>& prefix) {
      double s = 0;
      for (const auto& [key, p] : joint) {
        if (std::equal(prefix.begin(), prefix.begin() + static_cast<long>(k), key.begin())) s += p;
      }
      return s;
    };
    double total = 0;
    for (int x0 : {0, 1}) {
      const double pl0 = mass(1, {x0});
      if (pl0 == 0) continue;
      for (int d0 : {0, 1}) {
        const double q0 = mass(2, {x0, 1 - d0}) / pl0;
        if (q0 == 0) continue;
        for (int x1 : {0, 1}) {
          const double pl1 = mass(3, {x0, d0, x1}) / mass(2, {x0, d0});
          if (pl1 == 0) continue;
          for (int d1 : {0, 1}) {
            const double q1 = mass(4, {x0, d0, x1, 1 - d1}) / mass(3, {x0, d0, x1});
            if (q1 == 0) continue;
            const double den = mass(4, {x0, d0, x1, d1});
            double num = 0;
            for (const auto& [key, p] : joint) {
              if (key[0] == x0 && key[1] == d0 && key[2] == x1 && key[3] == d1) num += p * number(m, y, key[4]);
            }
            total += pl0 * q0 * pl1 * q1 * (num / den);
          }
        }
      }
    }
    return total;
  }
};

}  // namespace oracle
