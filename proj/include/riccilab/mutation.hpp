#pragma once

// Fault injection for the mutation harness. A mutation is process-wide and
// only ever enabled by tests or by the CLI's mutation mode.

#include <string>

namespace riccilab::mutation {

enum class Kind {
  None,
  FlipCurvatureSign,    // negate the space-time Riemann tensor
  DropGamma00Gradient,  // omit -1/2 grad R from the time-time connection
  DropGamma00Speed,     // omit -1/2 grad |V|^2 from the time-time connection
  DropGamma00Drift,     // omit g^{kp} dV_p/dt from the time-time connection
  DropRcDotH,           // omit Rc.h from the time-time entry of the h extension
};

Kind active();
bool is(Kind k);
std::string name(Kind k);
Kind from_name(const std::string& s);

/// Enables a mutation for the lifetime of the guard. Not reentrant.
class Scope {
 public:
  explicit Scope(Kind k);
  ~Scope();
  Scope(const Scope&) = delete;
  Scope& operator=(const Scope&) = delete;

 private:
  Kind previous_;
};

}  // namespace riccilab::mutation
