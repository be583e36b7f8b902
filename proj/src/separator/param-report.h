// separator/param-report.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_SEPARATOR_PARAM_REPORT_H_
#define CSFNET_SEPARATOR_PARAM_REPORT_H_

#include <string>
#include <vector>

#include "base/layers.h"

namespace csfnet {

struct ParamRecord {
  std::string name;
  Shape shape;
  int64_t count = 0;
};

// Trainable tensors only; batch-norm running statistics are skipped.
std::vector<ParamRecord> ParameterRecords(Module* m, const std::string& prefix = "");
int64_t TotalParameters(const std::vector<ParamRecord>& records);

// One "param <name> <shape> <count>" line per tensor, then "total <n>".
std::string FormatParameterReport(const std::vector<ParamRecord>& records);

}  // namespace csfnet

#endif  // CSFNET_SEPARATOR_PARAM_REPORT_H_
