// separator/param-report.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "separator/param-report.h"

#include <sstream>

namespace csfnet {

std::vector<ParamRecord> ParameterRecords(Module* m, const std::string& prefix) {
  std::vector<ParamRecord> out;
  for (const auto& p : m->Parameters(prefix)) {
    if (!p.trainable) continue;
    out.push_back({p.name, p.var.shape(), p.var.numel()});
  }
  return out;
}

int64_t TotalParameters(const std::vector<ParamRecord>& records) {
  int64_t total = 0;
  for (const auto& r : records) total += r.count;
  return total;
}

std::string FormatParameterReport(const std::vector<ParamRecord>& records) {
  std::ostringstream os;
  for (const auto& r : records)
    os << "param " << r.name << " " << ShapeString(r.shape) << " " << r.count
       << "\n";
  os << "total " << TotalParameters(records) << "\n";
  return os.str();
}

}  // namespace csfnet
