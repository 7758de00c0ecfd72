#pragma once

#include <string>
#include <vector>

#include "psv/errors.hpp"

namespace psv {

/// Square matrix with row/column labels (distances, angle tables, bounds).
struct LabeledMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;

  static LabeledMatrix zeros(std::vector<std::string> labels_) {
    LabeledMatrix m;
    m.labels = std::move(labels_);
    m.values.assign(m.labels.size(), std::vector<double>(m.labels.size(), 0.0));
    return m;
  }

  int index(const std::string& label) const {
    for (std::size_t k = 0; k < labels.size(); ++k)
      if (labels[k] == label) return static_cast<int>(k);
    throw validation_error("LabeledMatrix: no label '" + label + "'");
  }

  double at(const std::string& a, const std::string& b) const {
    return values[index(a)][index(b)];
  }
};

} // namespace psv
