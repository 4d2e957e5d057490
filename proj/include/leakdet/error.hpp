#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace leakdet {

enum class ErrorCategory {
  structural,    // topology / fault structure violates an invariant
  contract,      // operation called outside its precondition
  infeasible,    // constraints admit no solution
  empty_window,  // aggregation window holds no samples
  no_estimation, // topology degenerated to a single node
  convergence,   // iterative solver hit its cap
  stale_cache,   // catalog does not match the topology
  parse,         // malformed input file
  io,
  usage,
  internal,      // broken internal invariant
};

constexpr std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::structural: return "structural";
    case ErrorCategory::contract: return "contract";
    case ErrorCategory::infeasible: return "infeasible";
    case ErrorCategory::empty_window: return "empty_window";
    case ErrorCategory::no_estimation: return "no_estimation";
    case ErrorCategory::convergence: return "convergence";
    case ErrorCategory::stale_cache: return "stale_cache";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::io: return "io";
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::internal: return "internal";
  }
  return "internal";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

}  // namespace leakdet
