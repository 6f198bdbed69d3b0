#pragma once

#include <stdexcept>
#include <string>

namespace stbp {

// Thrown when an input lies at a point where a map or density is undefined
// (e.g. the radial density at the origin for q < 2).
struct degenerate_point_error : std::domain_error {
  explicit degenerate_point_error(const std::string& what) : std::domain_error(what) {}
};

// Thrown when a linearization is singular at the requested point.
struct singular_point_error : std::domain_error {
  explicit singular_point_error(const std::string& what) : std::domain_error(what) {}
};

// Thrown when a factorization fails even after regularization.
struct numerical_rank_error : std::runtime_error {
  explicit numerical_rank_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a metric is requested for inputs it is not defined on.
struct undefined_metric_error : std::invalid_argument {
  explicit undefined_metric_error(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace stbp
