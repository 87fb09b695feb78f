#pragma once
// Exception types raised by the levy_ihr library.

#include <stdexcept>
#include <string>

namespace levy_ihr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define LEVY_IHR_ERROR(Name)                    \
  struct Name : Error {                         \
    explicit Name(const std::string& what)      \
        : Error(#Name ": " + what) {}           \
  }

LEVY_IHR_ERROR(PoleError);
LEVY_IHR_ERROR(DomainError);
LEVY_IHR_ERROR(InvalidSpec);
LEVY_IHR_ERROR(ConvergenceError);
LEVY_IHR_ERROR(SingularityError);
LEVY_IHR_ERROR(PrecisionError);
LEVY_IHR_ERROR(BracketError);
LEVY_IHR_ERROR(WellDefinednessError);
LEVY_IHR_ERROR(UnsupportedModel);
LEVY_IHR_ERROR(RangeError);
LEVY_IHR_ERROR(ParseError);
LEVY_IHR_ERROR(EmptySeriesError);
LEVY_IHR_ERROR(NonConvergence);

#undef LEVY_IHR_ERROR

}  // namespace levy_ihr
