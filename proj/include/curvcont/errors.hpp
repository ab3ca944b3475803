#ifndef CURVCONT_ERRORS_HPP
#define CURVCONT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace curvcont
{

/// Base of every error raised by the library. `numeric()` separates
/// numerical failures (divergence, violated hypotheses) from bad input.
class Error : public std::runtime_error
{
public:
  explicit Error(const std::string& what, bool numeric = true)
      : std::runtime_error(what), numeric_(numeric)
  {
  }
  bool numeric() const noexcept { return numeric_; }

private:
  bool numeric_;
};

#define CURVCONT_DEFINE_ERROR(Name, base, is_numeric)                         \
  class Name : public base                                                    \
  {                                                                           \
  public:                                                                     \
    explicit Name(const std::string& what) : base(#Name ": " + what, is_numeric) {} \
  protected:                                                                  \
    Name(const std::string& what, bool numeric) : base(what, numeric) {}      \
  };

// geometry
CURVCONT_DEFINE_ERROR(ChartDomainError, Error, true)
CURVCONT_DEFINE_ERROR(FlatLimitError, Error, true)
CURVCONT_DEFINE_ERROR(CutLocusError, Error, true)
CURVCONT_DEFINE_ERROR(InvalidAmbientError, Error, true)
CURVCONT_DEFINE_ERROR(AntipodalError, Error, true)
CURVCONT_DEFINE_ERROR(CoincidentError, Error, true)
CURVCONT_DEFINE_ERROR(CollisionError, Error, true)

// symmetry
CURVCONT_DEFINE_ERROR(ZeroMomentumError, Error, true)
CURVCONT_DEFINE_ERROR(RankAmbiguityError, Error, true)

// dynamics
CURVCONT_DEFINE_ERROR(NewtonDivergenceError, Error, true)
CURVCONT_DEFINE_ERROR(NoReturnError, Error, true)
CURVCONT_DEFINE_ERROR(TangencyError, Error, true)

// continuation
CURVCONT_DEFINE_ERROR(RegularityError, Error, true)
CURVCONT_DEFINE_ERROR(LocalFreenessError, Error, true)
CURVCONT_DEFINE_ERROR(SingularJacobianError, Error, true)
CURVCONT_DEFINE_ERROR(DegenerateOrbitError, Error, true)
CURVCONT_DEFINE_ERROR(DriftOutsideIsotropyError, Error, true)
CURVCONT_DEFINE_ERROR(LinearMomentumError, Error, true)

// scenarios and input
CURVCONT_DEFINE_ERROR(BisectionFailure, Error, true)
CURVCONT_DEFINE_ERROR(ClosureValidationError, Error, true)
CURVCONT_DEFINE_ERROR(ParseError, Error, false)
CURVCONT_DEFINE_ERROR(SchemaError, Error, false)

#undef CURVCONT_DEFINE_ERROR

} // namespace curvcont

#endif
