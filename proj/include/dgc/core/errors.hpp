#pragma once

#include <stdexcept>
#include <string>

namespace dgc {

/// Base of every error raised by the library. `kind()` is the stable,
/// machine-parseable name printed by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define DGC_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  };

DGC_DEFINE_ERROR(MalformedCsv)
DGC_DEFINE_ERROR(EmptySeries)
DGC_DEFINE_ERROR(SplitTooLarge)
DGC_DEFINE_ERROR(SplitTooShort)
DGC_DEFINE_ERROR(ShapeMismatch)
DGC_DEFINE_ERROR(DegenerateCluster)
DGC_DEFINE_ERROR(PatchTooLong)
DGC_DEFINE_ERROR(NonFiniteActivation)
DGC_DEFINE_ERROR(NonFiniteLoss)
DGC_DEFINE_ERROR(ConfigError)
DGC_DEFINE_ERROR(CheckpointError)
DGC_DEFINE_ERROR(IoError)

#undef DGC_DEFINE_ERROR

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeMismatch(what);
}

}  // namespace dgc
