#include "causal_ident/joint_pmf.hpp"

namespace causal_ident {

std::string describe_assignment(const Assignment& given) {
  if (given.empty()) return "{}";
  std::string out = "{";
  for (std::size_t i = 0; i < given.size(); ++i) {
    if (i) out += ",";
    out += given[i].first + "=#" + std::to_string(given[i].second);
  }
  return out + "}";
}

}  // namespace causal_ident
