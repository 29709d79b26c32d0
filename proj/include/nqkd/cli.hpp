#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nqkd/keyrate.hpp"

namespace nqkd::cli {

enum ExitCode { kOk = 0, kUsage = 2, kNumeric = 3 };

/// --sweep var:start:stop:steps with var one of Q, fG, fC, N.
struct SweepSpec {
  std::string variable;
  double start = 0.0;
  double stop = 0.0;
  int steps = 2;

  static SweepSpec parse(const std::string& text);
  /// Evenly spaced points, both ends included.
  std::vector<double> values() const;
};

/// "2..8", "3,5,inf" or a single count.
std::vector<PartyCount> parse_party_list(const std::string& text);

/// Fixed-width float formatting used by every CSV writer (9 significant digits).
std::string format_number(double v);

/// Runs the command line (without the program name). Output goes to `out`
/// unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nqkd::cli
