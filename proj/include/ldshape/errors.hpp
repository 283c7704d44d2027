#ifndef LDSHAPE_ERRORS_HPP_
#define LDSHAPE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ldshape {

// Data lies below the parabola it must dominate.
struct InfeasibleError : std::domain_error {
  using std::domain_error::domain_error;
};

// Profile jumps inside the conditioning set.
struct DiscontinuousError : std::domain_error {
  using std::domain_error::domain_error;
};

// Equal states on both sides: no shock, no Rankine-Hugoniot speed.
struct ContactError : std::domain_error {
  using std::domain_error::domain_error;
};

// Path supports intersect away from endpoints.
struct DisjointnessError : std::domain_error {
  using std::domain_error::domain_error;
};

// Measures without a common refinement of supports.
struct IncomparableError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ldshape

#endif  // LDSHAPE_ERRORS_HPP_
