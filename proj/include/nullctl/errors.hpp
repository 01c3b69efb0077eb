#pragma once

#include <stdexcept>
#include <string>

namespace nullctl {

enum class SolverFailure {
  singular_pivot,
  rank_one_breakdown,
  cg_no_convergence,
  blow_up,
};

inline const char* to_string(SolverFailure f) {
  switch (f) {
    case SolverFailure::singular_pivot: return "singular_pivot";
    case SolverFailure::rank_one_breakdown: return "rank_one_breakdown";
    case SolverFailure::cg_no_convergence: return "cg_no_convergence";
    case SolverFailure::blow_up: return "blow_up";
  }
  return "unknown";
}

/// Numerical failure of a solve. Precondition violations are reported with
/// std::invalid_argument instead.
class SolverError : public std::runtime_error {
 public:
  SolverError(SolverFailure kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  SolverFailure kind() const { return kind_; }

 private:
  SolverFailure kind_;
};

/// Singular 2x2 pivot met during block elimination.
class SingularPivotError : public SolverError {
 public:
  explicit SingularPivotError(int node)
      : SolverError(SolverFailure::singular_pivot,
                    "singular pivot at node " + std::to_string(node)),
        node_(node) {}

  int node() const { return node_; }

 private:
  int node_;
};

}  // namespace nullctl
