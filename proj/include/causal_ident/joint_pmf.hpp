#pragma once

// Dense exact probability mass functions over named discrete variables.
// Variable keys are plain strings: a base name for factual variables and
// "name@regime" (or "name~nat@regime" for natural values) for counterfactuals.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "causal_ident/error.hpp"
#include "causal_ident/model.hpp"
#include "causal_ident/numeric.hpp"

namespace causal_ident {

/// (variable key, label index)
using Assignment = std::vector<std::pair<std::string, int>>;

template <class S>
class JointPmf {
 public:
  struct Var {
    std::string key;
    Domain domain;
  };

  JointPmf() = default;

  explicit JointPmf(std::vector<Var> vars) : vars_(std::move(vars)) {
    strides_.assign(vars_.size(), 1);
    std::size_t n = 1;
    for (std::size_t i = vars_.size(); i-- > 0;) {
      strides_[i] = n;
      n *= vars_[i].domain.size();
    }
    mass_.assign(n, S(0));
  }

  const std::vector<Var>& vars() const noexcept { return vars_; }
  std::size_t arity() const noexcept { return vars_.size(); }
  std::size_t cells() const noexcept { return mass_.size(); }
  const std::vector<S>& masses() const noexcept { return mass_; }
  const S& mass_at(std::size_t cell) const { return mass_[cell]; }

  bool contains(std::string_view key) const {
    return std::any_of(vars_.begin(), vars_.end(), [&](const Var& v) { return v.key == key; });
  }

  std::size_t var_index(std::string_view key) const {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i].key == key) return i;
    }
    throw Error(ErrorKind::UnknownVariable, std::string(key), "not a variable of this pmf");
  }

  std::size_t encode(std::span<const int> labels) const {
    std::size_t cell = 0;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      cell += static_cast<std::size_t>(labels[i]) * strides_[i];
    }
    return cell;
  }

  std::vector<int> decode(std::size_t cell) const {
    std::vector<int> labels(vars_.size());
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      labels[i] = static_cast<int>((cell / strides_[i]) % vars_[i].domain.size());
    }
    return labels;
  }

  int label_of(std::size_t cell, std::size_t var) const {
    return static_cast<int>((cell / strides_[var]) % vars_[var].domain.size());
  }

  const S& mass(std::span<const int> labels) const { return mass_[encode(labels)]; }
  void add(std::span<const int> labels, const S& m) { mass_[encode(labels)] += m; }
  void add_cell(std::size_t cell, const S& m) { mass_[cell] += m; }

  S total() const {
    S t(0);
    for (const auto& m : mass_) t += m;
    return t;
  }

  /// Marginal onto `keep`, in the order given.
  JointPmf marginal(std::span<const std::string> keep) const {
    std::vector<std::size_t> idx;
    std::vector<Var> out_vars;
    for (const auto& k : keep) {
      idx.push_back(var_index(k));
      out_vars.push_back(vars_[idx.back()]);
    }
    JointPmf out(std::move(out_vars));
    std::vector<int> sub(idx.size());
    for (std::size_t cell = 0; cell < mass_.size(); ++cell) {
      if (is_zero(mass_[cell])) continue;
      for (std::size_t j = 0; j < idx.size(); ++j) sub[j] = label_of(cell, idx[j]);
      out.add(sub, mass_[cell]);
    }
    return out;
  }

  JointPmf marginal(std::initializer_list<std::string> keep) const {
    std::vector<std::string> k(keep);
    return marginal(std::span<const std::string>(k));
  }

  /// Replaces variable `key` by a coarsening: label l becomes mapping[l] in
  /// `domain`, under the new key.
  JointPmf coarsen(std::string_view key, std::string new_key, Domain domain,
                   std::span<const int> mapping) const {
    const std::size_t target = var_index(key);
    std::vector<Var> out_vars = vars_;
    out_vars[target] = Var{std::move(new_key), std::move(domain)};
    JointPmf out(std::move(out_vars));
    for (std::size_t cell = 0; cell < mass_.size(); ++cell) {
      if (is_zero(mass_[cell])) continue;
      auto labels = decode(cell);
      labels[target] = mapping[static_cast<std::size_t>(labels[target])];
      out.add(labels, mass_[cell]);
    }
    return out;
  }

  /// Sum of mass over cells matching every (var, label) pair in `given`.
  S event_mass(const Assignment& given) const {
    std::vector<std::pair<std::size_t, int>> g;
    for (const auto& [k, l] : given) g.emplace_back(var_index(k), l);
    S m(0);
    for (std::size_t cell = 0; cell < mass_.size(); ++cell) {
      bool match = true;
      for (const auto& [i, l] : g) {
        if (label_of(cell, i) != l) {
          match = false;
          break;
        }
      }
      if (match) m += mass_[cell];
    }
    return m;
  }

 private:
  std::vector<Var> vars_;
  std::vector<std::size_t> strides_;
  std::vector<S> mass_;
};

std::string describe_assignment(const Assignment& given);

/// Exact conditional (or marginal, when `given` is empty) onto `keep`.
/// Throws Error(ZeroMassEvent) when the conditioning event has zero mass.
template <class S>
JointPmf<S> query_pmf(const JointPmf<S>& pmf, std::span<const std::string> keep,
                      const Assignment& given) {
  std::vector<std::string> all(keep.begin(), keep.end());
  for (const auto& [k, l] : given) {
    (void)l;
    if (std::find(all.begin(), all.end(), k) == all.end()) all.push_back(k);
  }
  const JointPmf<S> joint = pmf.marginal(all);
  const S denom = given.empty() ? joint.total() : joint.event_mass(given);
  if (is_zero(denom)) {
    throw Error(ErrorKind::ZeroMassEvent, describe_assignment(given),
                "conditioning event has zero probability");
  }
  std::vector<std::pair<std::size_t, int>> g;
  for (const auto& [k, l] : given) g.emplace_back(joint.var_index(k), l);
  std::vector<typename JointPmf<S>::Var> out_vars;
  for (const auto& k : keep) out_vars.push_back(joint.vars()[joint.var_index(k)]);
  JointPmf<S> out(std::move(out_vars));
  std::vector<int> sub(keep.size());
  for (std::size_t cell = 0; cell < joint.cells(); ++cell) {
    const S& m = joint.mass_at(cell);
    if (is_zero(m)) continue;
    bool match = true;
    for (const auto& [i, l] : g) {
      if (joint.label_of(cell, i) != l) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    for (std::size_t j = 0; j < keep.size(); ++j) sub[j] = joint.label_of(cell, j);
    out.add(sub, S(m / denom));
  }
  return out;
}

template <class S>
struct CiResult {
  bool holds = true;
  S max_deviation = S(0);
  std::size_t zero_mass_strata = 0;
};

/// max over positive-mass strata z and over (x, y) of
/// |P(x,y|z) - P(x|z)P(y|z)|. Throws Error(OverlappingSets).
template <class S>
CiResult<S> conditional_independent(const JointPmf<S>& pmf, std::span<const std::string> x,
                                    std::span<const std::string> y,
                                    std::span<const std::string> z, double tol) {
  auto overlap = [](std::span<const std::string> a, std::span<const std::string> b) {
    for (const auto& s : a) {
      if (std::find(b.begin(), b.end(), s) != b.end()) return s;
    }
    return std::string();
  };
  for (auto [a, b] : {std::pair{x, y}, std::pair{x, z}, std::pair{y, z}}) {
    if (auto s = overlap(a, b); !s.empty()) {
      throw Error(ErrorKind::OverlappingSets, s, "variable appears in two sets");
    }
  }
  std::vector<std::string> keys(z.begin(), z.end());
  keys.insert(keys.end(), x.begin(), x.end());
  keys.insert(keys.end(), y.begin(), y.end());
  const JointPmf<S> j = pmf.marginal(keys);

  std::size_t nz = 1, nx = 1, ny = 1;
  for (std::size_t i = 0; i < z.size(); ++i) nz *= j.vars()[i].domain.size();
  for (std::size_t i = 0; i < x.size(); ++i) nx *= j.vars()[z.size() + i].domain.size();
  for (std::size_t i = 0; i < y.size(); ++i) {
    ny *= j.vars()[z.size() + x.size() + i].domain.size();
  }
  // Cell layout is z-major, then x, then y.
  CiResult<S> result;
  std::vector<S> px(nx), py(ny);
  for (std::size_t zi = 0; zi < nz; ++zi) {
    const std::size_t base = zi * nx * ny;
    S pz(0);
    for (std::size_t c = 0; c < nx * ny; ++c) pz += j.mass_at(base + c);
    if (is_zero(pz)) {
      ++result.zero_mass_strata;
      continue;
    }
    std::fill(px.begin(), px.end(), S(0));
    std::fill(py.begin(), py.end(), S(0));
    for (std::size_t xi = 0; xi < nx; ++xi) {
      for (std::size_t yi = 0; yi < ny; ++yi) {
        const S& m = j.mass_at(base + xi * ny + yi);
        px[xi] += m;
        py[yi] += m;
      }
    }
    for (std::size_t xi = 0; xi < nx; ++xi) {
      for (std::size_t yi = 0; yi < ny; ++yi) {
        S dev = abs_value(S(j.mass_at(base + xi * ny + yi) / pz - (px[xi] / pz) * (py[yi] / pz)));
        if (dev > result.max_deviation) result.max_deviation = dev;
      }
    }
  }
  result.holds = within(result.max_deviation, tol);
  return result;
}

template <class S>
CiResult<S> conditional_independent(const JointPmf<S>& pmf, const std::vector<std::string>& x,
                                    const std::vector<std::string>& y,
                                    const std::vector<std::string>& z, double tol) {
  return conditional_independent<S>(pmf, std::span<const std::string>(x),
                                    std::span<const std::string>(y),
                                    std::span<const std::string>(z), tol);
}

}  // namespace causal_ident
