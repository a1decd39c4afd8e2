#pragma once

#include <stdexcept>
#include <string>

namespace figcap {

/// Base of every error the toolkit throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FIGCAP_DEFINE_ERROR(Name) \
  class Name : public Error {     \
   public:                        \
    using Error::Error;           \
  }

FIGCAP_DEFINE_ERROR(MalformedDocument);
FIGCAP_DEFINE_ERROR(MissingPageElement);
FIGCAP_DEFINE_ERROR(DimensionMismatch);
FIGCAP_DEFINE_ERROR(ProviderCardinalityViolation);
FIGCAP_DEFINE_ERROR(NotRoman);
FIGCAP_DEFINE_ERROR(SchemaError);
FIGCAP_DEFINE_ERROR(NoCompliantPairs);
FIGCAP_DEFINE_ERROR(IoError);
FIGCAP_DEFINE_ERROR(UsageError);

#undef FIGCAP_DEFINE_ERROR

}  // namespace figcap
