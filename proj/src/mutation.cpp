#include "riccilab/mutation.hpp"

#include <atomic>

#include "riccilab/errors.hpp"

namespace riccilab::mutation {

namespace {
std::atomic<int> g_active{static_cast<int>(Kind::None)};

struct Named {
  Kind kind;
  const char* name;
};
constexpr Named kNames[] = {
    {Kind::None, "none"},
    {Kind::FlipCurvatureSign, "flip_curvature_sign"},
    {Kind::DropGamma00Gradient, "drop_gamma00_gradient"},
    {Kind::DropGamma00Speed, "drop_gamma00_speed"},
    {Kind::DropGamma00Drift, "drop_gamma00_drift"},
    {Kind::DropRcDotH, "drop_rc_dot_h"},
};
}  // namespace

Kind active() { return static_cast<Kind>(g_active.load(std::memory_order_relaxed)); }
bool is(Kind k) { return active() == k; }

std::string name(Kind k) {
  for (const auto& n : kNames)
    if (n.kind == k) return n.name;
  return "none";
}

Kind from_name(const std::string& s) {
  for (const auto& n : kNames)
    if (s == n.name) return n.kind;
  throw ConfigInvalid("mutation: unknown kind '" + s + "'");
}

Scope::Scope(Kind k) : previous_(active()) { g_active.store(static_cast<int>(k)); }
Scope::~Scope() { g_active.store(static_cast<int>(previous_)); }

}  // namespace riccilab::mutation
