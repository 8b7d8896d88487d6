#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "georabi/errors.hpp"

namespace georabi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

using ParamNames = std::shared_ptr<const std::vector<std::string>>;

inline ParamNames make_param_names(std::vector<std::string> names) {
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j)
      if (names[i] == names[j]) throw ModelError("duplicate parameter name '" + names[i] + "'");
  return std::make_shared<const std::vector<std::string>>(std::move(names));
}

// A point in parameter space: named, ordered real components.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(ParamNames names, Vec values) : names_(std::move(names)), values_(std::move(values)) {
    if (!names_ || static_cast<Eigen::Index>(names_->size()) != values_.size())
      throw ModelError("ParamVector: name/value size mismatch");
    for (Eigen::Index i = 0; i < values_.size(); ++i)
      if (!std::isfinite(values_[i]))
        throw ModelError("ParamVector: non-finite component '" + (*names_)[i] + "'");
  }

  int size() const { return static_cast<int>(values_.size()); }
  const std::string& name(int i) const { return (*names_)[i]; }
  const ParamNames& names() const { return names_; }
  const Vec& values() const { return values_; }
  double operator[](int i) const { return values_[i]; }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_->size(); ++i)
      if ((*names_)[i] == name) return static_cast<int>(i);
    throw ModelError("ParamVector: no component named '" + name + "'");
  }
  double value(const std::string& name) const { return values_[index_of(name)]; }

  ParamVector shifted(int component, double delta) const {
    Vec v = values_;
    v[component] += delta;
    return ParamVector(names_, std::move(v));
  }

 private:
  ParamNames names_;
  Vec values_;
};

}  // namespace georabi
