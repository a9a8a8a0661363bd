#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "splinehmm/errors.hpp"

namespace splinehmm {

// Columnar numeric table; NaN encodes a missing value.
struct Dataset {
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // rows x names.size()

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }

  int find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return -1;
  }
  int require(const std::string& name) const {
    const int i = find(name);
    if (i < 0) throw InputError("dataset: missing column '" + name + "'");
    return i;
  }
  Eigen::VectorXd column(const std::string& name) const {
    return values.col(require(name));
  }
};

}  // namespace splinehmm
