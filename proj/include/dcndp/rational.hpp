#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <Eigen/Core>

namespace dcndp {

/// Exact rational scalar. Expression templates are off so Eigen sees plain values.
using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                               boost::multiprecision::et_off>;

}  // namespace dcndp

namespace Eigen {

template <>
struct NumTraits<dcndp::Rational> : GenericNumTraits<dcndp::Rational> {
  using Real = dcndp::Rational;
  using NonInteger = dcndp::Rational;
  using Nested = dcndp::Rational;
  using Literal = dcndp::Rational;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 6,
    AddCost = 30,
    MulCost = 60,
  };
  static inline Real epsilon() { return 0; }
  static inline Real dummy_precision() { return 0; }
  static inline int digits10() { return 0; }
  static inline Real highest() = delete;
  static inline Real lowest() = delete;
};

}  // namespace Eigen
