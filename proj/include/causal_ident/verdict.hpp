#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace causal_ident {

/// Outcome of one named assumption check.
struct ConditionVerdict {
  std::string name;
  bool holds = true;
  double max_deviation = 0.0;
  std::size_t zero_mass_strata = 0;  // strata skipped because they carry no mass
  std::string detail;
};

struct MembershipReport {
  std::string class_name;
  std::vector<ConditionVerdict> conditions;
  bool holds = true;

  const ConditionVerdict* find(const std::string& name) const {
    for (const auto& c : conditions) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

}  // namespace causal_ident
