// Acceptance suite runner: prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <iostream>

#include "faeq/selftest.hpp"

int main() {
  const auto results = faeq::selftest::run_all();
  faeq::selftest::print_report(std::cout, results);
  return faeq::selftest::all_passed(results) ? 0 : 1;
}
