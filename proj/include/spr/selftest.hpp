#pragma once

#include <iosfwd>

namespace spr::selftest {

/// Runs the built-in numerical checks (operator adjointness, CG against a
/// dense solve, gradient finite differences, objective monotonicity, the
/// threshold surrogate bounds) and prints one line per check.
/// Returns true iff everything passed.
bool run_all(std::ostream& out);

}  // namespace spr::selftest
