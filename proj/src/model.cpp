#include "causal_ident/model.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "causal_ident/error.hpp"

namespace causal_ident {

Domain::Domain(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("domain needs at least one label");
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) throw std::invalid_argument("duplicate domain label '" + l + "'");
  }
}

Domain Domain::binary() { return Domain({"0", "1"}); }

Domain Domain::range(std::size_t n) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return Domain(std::move(labels));
}

std::optional<int> Domain::find(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::size_t Model::Variable::row(std::span<const int> values, int noise) const {
  std::size_t r = 0;
  for (std::size_t j = 0; j < parents.size(); ++j) {
    r += static_cast<std::size_t>(values[parents[j]]) * parent_strides[j];
  }
  return r * noise_domain.size() + static_cast<std::size_t>(noise);
}

std::optional<std::size_t> Model::find(std::string_view name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Model::index(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(ErrorKind::UnknownVariable, std::string(name), "not a model variable");
}

void Model::throw_non_numeric(std::size_t var, int label) const {
  throw Error(ErrorKind::InvalidArgument, vars_[var].name,
              "label '" + vars_[var].domain.label(label) + "' has no numeric value");
}

void Model::require_exact() const {
  if (exact_) return;
  for (const auto& v : vars_) {
    Rational sum(0);
    for (const auto& p : v.noise_pmf) sum += p;
    if (sum != 1) {
      throw Error(ErrorKind::InvalidPMF, v.name,
                  "noise pmf sums to " + rational_to_string(sum) + ", rational mode needs exactly 1");
    }
  }
}

std::uint64_t Model::noise_configurations() const {
  std::uint64_t n = 1;
  for (const auto& v : vars_) n *= v.noise_domain.size();
  return n;
}

namespace {

bool pmf_is_exact(const std::vector<Rational>& pmf) {
  Rational sum(0);
  for (const auto& p : pmf) sum += p;
  return sum == 1;
}

void check_pmf(const std::string& name, const std::vector<Rational>& pmf, std::size_t size,
               Arithmetic mode) {
  if (pmf.size() != size) {
    throw Error(ErrorKind::InvalidPMF, name,
                "pmf has " + std::to_string(pmf.size()) + " entries, domain has " + std::to_string(size));
  }
  Rational sum(0);
  for (const auto& p : pmf) {
    if (p < 0 || p > 1) throw Error(ErrorKind::InvalidPMF, name, "probability outside [0,1]");
    sum += p;
  }
  if (sum == 1) return;
  if (mode == Arithmetic::Rational) {
    throw Error(ErrorKind::InvalidPMF, name, "pmf sums to " + rational_to_string(sum));
  }
  double fsum = 0.0;
  for (const auto& p : pmf) fsum += p.get_d();
  if (std::abs(fsum - 1.0) > 1e-12) {
    throw Error(ErrorKind::InvalidPMF, name, "pmf sums to " + std::to_string(fsum));
  }
}

}  // namespace

Model Model::with_noise_pmf(std::size_t var, std::vector<Rational> pmf) const {
  Model copy = *this;
  auto& v = copy.vars_[var];
  check_pmf(v.name, pmf, v.noise_domain.size(), Arithmetic::Float);
  v.noise_pmf = std::move(pmf);
  v.noise_pmf_f.clear();
  for (const auto& p : v.noise_pmf) v.noise_pmf_f.push_back(p.get_d());
  copy.exact_ = std::all_of(copy.vars_.begin(), copy.vars_.end(),
                            [](const Variable& x) { return pmf_is_exact(x.noise_pmf); });
  return copy;
}

Model Model::with_table_cell(std::size_t var, std::size_t row, int label) const {
  Model copy = *this;
  auto& v = copy.vars_[var];
  if (row >= v.table.size() || label < 0 || label >= static_cast<int>(v.domain.size())) {
    throw Error(ErrorKind::InvalidTable, v.name, "cell or label out of range");
  }
  v.table[row] = label;
  return copy;
}

ModelSpec Model::to_spec() const {
  ModelSpec spec;
  for (const auto& v : vars_) {
    VariableSpec vs;
    vs.name = v.name;
    vs.domain = v.domain;
    for (auto p : v.parents) vs.parents.push_back(vars_[p].name);
    vs.noise.name = "e_" + v.name;
    vs.noise.domain = v.noise_domain;
    vs.noise.pmf = v.noise_pmf;
    vs.observed = v.observed;
    vs.role = v.role;
    const std::size_t noise_n = v.noise_domain.size();
    for (std::size_t r = 0; r < v.table.size(); ++r) {
      TableEntry e;
      std::size_t parent_row = r / noise_n;
      for (std::size_t j = 0; j < v.parents.size(); ++j) {
        const auto& pd = vars_[v.parents[j]].domain;
        e.parents.push_back(pd.label(static_cast<int>((parent_row / v.parent_strides[j]) % pd.size())));
      }
      e.noise = v.noise_domain.label(static_cast<int>(r % noise_n));
      e.out = v.domain.label(v.table[r]);
      vs.table.push_back(std::move(e));
    }
    spec.variables.push_back(std::move(vs));
  }
  return spec;
}

Model validate_model(const ModelSpec& spec, Arithmetic mode) {
  Model model;
  const std::size_t n = spec.variables.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& name = spec.variables[i].name;
    if (name.empty()) throw Error(ErrorKind::InvalidArgument, "#" + std::to_string(i), "empty variable name");
    if (!index.emplace(name, i).second) {
      throw Error(ErrorKind::InvalidArgument, name, "duplicate variable name");
    }
  }

  model.vars_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& vs = spec.variables[i];
    auto& v = model.vars_[i];
    v.name = vs.name;
    v.domain = vs.domain;
    if (v.domain.size() == 0) throw Error(ErrorKind::InvalidArgument, vs.name, "empty domain");
    v.observed = vs.observed;
    v.role = vs.role;
    for (const auto& p : vs.parents) {
      auto it = index.find(p);
      if (it == index.end()) throw Error(ErrorKind::UnknownVariable, vs.name, "unknown parent '" + p + "'");
      if (std::find(v.parents.begin(), v.parents.end(), it->second) != v.parents.end()) {
        throw Error(ErrorKind::InvalidArgument, vs.name, "parent '" + p + "' listed twice");
      }
      v.parents.push_back(it->second);
    }
  }

  // Cycle detection (iterative colouring DFS).
  {
    std::vector<int> colour(n, 0);
    for (std::size_t root = 0; root < n; ++root) {
      if (colour[root] != 0) continue;
      std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
      colour[root] = 1;
      while (!stack.empty()) {
        auto& [node, next] = stack.back();
        const auto& parents = model.vars_[node].parents;
        if (next < parents.size()) {
          const std::size_t p = parents[next++];
          if (colour[p] == 1) throw Error(ErrorKind::CyclicGraph, model.vars_[p].name, "variable lies on a directed cycle");
          if (colour[p] == 0) {
            colour[p] = 1;
            stack.emplace_back(p, 0);
          }
        } else {
          colour[node] = 2;
          stack.pop_back();
        }
      }
    }
  }

  // Stable Kahn: always emit the earliest-declared ready variable.
  {
    std::vector<std::size_t> pending(n);
    for (std::size_t i = 0; i < n; ++i) pending[i] = model.vars_[i].parents.size();
    std::vector<bool> done(n, false);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (!done[i] && pending[i] == 0) {
          pick = i;
          break;
        }
      }
      done[pick] = true;
      model.order_.push_back(pick);
      for (std::size_t i = 0; i < n; ++i) {
        for (auto p : model.vars_[i].parents) {
          if (p == pick) --pending[i];
        }
      }
    }
  }

  model.exact_ = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& vs = spec.variables[i];
    auto& v = model.vars_[i];
    if (vs.noise.domain.size() == 0) {
      v.noise_domain = Domain({"0"});
      v.noise_pmf = {Rational(1)};
    } else {
      v.noise_domain = vs.noise.domain;
      v.noise_pmf = vs.noise.pmf;
    }
    check_pmf(v.name, v.noise_pmf, v.noise_domain.size(), mode);
    if (!pmf_is_exact(v.noise_pmf)) model.exact_ = false;
    for (const auto& p : v.noise_pmf) v.noise_pmf_f.push_back(p.get_d());

    v.parent_strides.assign(v.parents.size(), 1);
    std::size_t rows = 1;
    for (std::size_t j = v.parents.size(); j-- > 0;) {
      v.parent_strides[j] = rows;
      rows *= model.vars_[v.parents[j]].domain.size();
    }
    v.table.assign(rows * v.noise_domain.size(), -1);
    for (const auto& e : vs.table) {
      if (e.parents.size() != v.parents.size()) {
        throw Error(ErrorKind::InvalidTable, v.name, "table entry lists the wrong number of parent labels");
      }
      std::size_t r = 0;
      for (std::size_t j = 0; j < v.parents.size(); ++j) {
        auto l = model.vars_[v.parents[j]].domain.find(e.parents[j]);
        if (!l) throw Error(ErrorKind::InvalidTable, v.name, "unknown parent label '" + e.parents[j] + "'");
        r += static_cast<std::size_t>(*l) * v.parent_strides[j];
      }
      std::optional<int> noise = v.noise_domain.size() == 1 && e.noise.empty()
                                     ? std::optional<int>(0)
                                     : v.noise_domain.find(e.noise);
      if (!noise) throw Error(ErrorKind::InvalidTable, v.name, "unknown noise label '" + e.noise + "'");
      auto out = v.domain.find(e.out);
      if (!out) throw Error(ErrorKind::InvalidTable, v.name, "output label '" + e.out + "' outside domain");
      const std::size_t cell = r * v.noise_domain.size() + static_cast<std::size_t>(*noise);
      if (v.table[cell] != -1 && v.table[cell] != *out) {
        throw Error(ErrorKind::InvalidTable, v.name, "conflicting table entries");
      }
      v.table[cell] = *out;
    }
    if (std::find(v.table.begin(), v.table.end(), -1) != v.table.end()) {
      throw Error(ErrorKind::IncompleteTable, v.name, "some (parents, noise) combination is unmapped");
    }
    for (const auto& label : v.domain.labels()) {
      try {
        v.numeric_labels.emplace_back(parse_rational(label));
      } catch (const std::invalid_argument&) {
        v.numeric_labels.emplace_back(std::nullopt);
      }
    }
  }
  return model;
}

}  // namespace causal_ident
