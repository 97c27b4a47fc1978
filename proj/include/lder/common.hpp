#ifndef LDER_COMMON_HPP
#define LDER_COMMON_HPP

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace lder {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

// Vector/matrix shapes do not line up.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Argument outside an operation's domain (empty training set, h <= 0, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Dataset parsing or cleaning failure; message carries file location context.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lder

#endif  // LDER_COMMON_HPP
