#pragma once

#include <stdexcept>
#include <string>

namespace riccilab {

/// Base class of every error raised by the library. `kind()` returns the
/// stable name used in reports and by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define RICCILAB_DEFINE_ERROR(Name)                                       \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(#Name, what) {}        \
  }

RICCILAB_DEFINE_ERROR(PointOutOfChart);
RICCILAB_DEFINE_ERROR(OrderUnsupported);
RICCILAB_DEFINE_ERROR(SingularMetric);
RICCILAB_DEFINE_ERROR(InsufficientJet);
RICCILAB_DEFINE_ERROR(CflViolation);
RICCILAB_DEFINE_ERROR(MetricDegenerated);
RICCILAB_DEFINE_ERROR(BaseTrajectoryMissing);
RICCILAB_DEFINE_ERROR(NonPositiveTime);
RICCILAB_DEFINE_ERROR(DegenerateH);
RICCILAB_DEFINE_ERROR(MissingCurvature);
RICCILAB_DEFINE_ERROR(DenominatorNonPositive);
RICCILAB_DEFINE_ERROR(NotPositiveDefinite);
RICCILAB_DEFINE_ERROR(FamilyMissing);
RICCILAB_DEFINE_ERROR(UnknownCheck);
RICCILAB_DEFINE_ERROR(ProviderUnavailable);
RICCILAB_DEFINE_ERROR(ConfigInvalid);

#undef RICCILAB_DEFINE_ERROR

}  // namespace riccilab
