#pragma once

#include <iosfwd>
#include <string>

#include "sicd/censored_sample.hpp"

namespace sicd {

// Reads a delimited text dataset: a header row naming the columns
// z,delta,x1,...,xd in that order, then one observation per line. Fields are
// comma-separated with optional surrounding spaces; lines whose first
// non-space character is '#' are comments; blank lines are skipped. delta
// must be 0 or 1, every other field a finite decimal-point real (locale
// independent). Malformed input throws InvalidInput naming the 1-based line.
CensoredSample parse_dataset(std::istream& in, const std::string& name);
CensoredSample read_dataset(const std::string& path);

// Writes the same format with shortest round-trip number formatting, so a
// written dataset re-reads to bitwise identical values.
void write_dataset(std::ostream& out, const CensoredSample& sample);
void write_dataset(const std::string& path, const CensoredSample& sample);

// Shortest decimal string that parses back to exactly the same double
// (shared by the dataset and report writers).
std::string format_double(double value);

}  // namespace sicd
