#pragma once

#include <string>

#include "splinehmm/dataset.hpp"

namespace splinehmm {

// Numeric CSV with a header row.  Quoted fields and CRLF line ends are
// accepted; empty fields, "NA" and "nan" (any case) parse as missing.
Dataset parse_csv(const std::string& text);
Dataset read_csv(const std::string& path);

// %.17g formatting so every double round-trips; missing values render as NA.
std::string format_csv(const Dataset& data);
void write_csv(const std::string& path, const Dataset& data);

}  // namespace splinehmm
