#include "homp/report.hpp"

#include <fmt/format.h>

namespace homp {

std::string_view to_string(Branch branch) {
  switch (branch) {
    case Branch::kCapPlus:
      return "cap_plus";
    case Branch::kCapMinus:
      return "cap_minus";
    case Branch::kSearched:
      return "searched";
    case Branch::kFixed:
      return "fixed";
  }
  return "unknown";
}

Branch branch_from_string(std::string_view name) {
  for (Branch b : {Branch::kCapPlus, Branch::kCapMinus, Branch::kSearched, Branch::kFixed}) {
    if (to_string(b) == name) return b;
  }
  throw UsageError(fmt::format("unknown branch '{}'", name));
}

Vector averaged_output(std::span<const IterateRecord> records) {
  if (records.empty()) throw UsageError("averaged_output: empty record list");
  double total = 0.0;
  Vector acc = Vector::Zero(records.front().zhat.size());
  for (const IterateRecord& r : records) {
    if (!(r.gamma > 0.0)) throw UsageError(fmt::format("averaged_output: record {} has gamma <= 0", r.t));
    total += r.gamma;
    acc += r.gamma * r.zhat;
  }
  return acc / total;
}

}  // namespace homp
