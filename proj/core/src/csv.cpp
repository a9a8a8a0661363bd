#include "splinehmm/csv.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "splinehmm/errors.hpp"

namespace splinehmm {

namespace {

// One logical line split into fields, honoring quotes; pos is left after the
// line terminator.  Returns false at end of input.
bool next_record(const std::string& text, std::size_t& pos,
                 std::vector<std::string>& fields) {
  fields.clear();
  if (pos >= text.size()) return false;
  std::string cur;
  bool quoted = false;
  bool any = false;
  while (pos < text.size()) {
    const char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          cur += '"';
          pos += 2;
        } else {
          quoted = false;
          ++pos;
        }
      } else {
        cur += c;
        ++pos;
      }
      any = true;
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
      ++pos;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
      any = true;
      ++pos;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
      ++pos;
      break;
    } else {
      cur += c;
      any = true;
      ++pos;
    }
  }
  if (quoted) throw InputError("CSV: unterminated quoted field");
  if (!any && fields.empty()) return next_record(text, pos, fields);
  fields.push_back(cur);
  return true;
}

bool is_missing(const std::string& f) {
  if (f.empty()) return true;
  std::string low;
  for (char c : f) low += static_cast<char>(std::tolower(c));
  return low == "na" || low == "nan";
}

double parse_value(const std::string& f, int row, int col) {
  if (is_missing(f)) return std::numeric_limits<double>::quiet_NaN();
  const char* s = f.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  while (end && *end != '\0' && std::isspace(static_cast<unsigned char>(*end)))
    ++end;
  if (end == s || *end != '\0')
    throw InputError("CSV: cannot parse '" + f + "' at row " +
                     std::to_string(row) + ", column " + std::to_string(col));
  return v;
}

void append_field(std::string& out, const std::string& f) {
  if (f.find_first_of(",\"\n\r") == std::string::npos) {
    out += f;
    return;
  }
  out += '"';
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

}  // namespace

Dataset parse_csv(const std::string& text) {
  std::size_t pos = 0;
  std::vector<std::string> fields;
  if (!next_record(text, pos, fields))
    throw InputError("CSV: no header row");
  Dataset d;
  d.names = fields;
  for (const std::string& n : d.names)
    if (n.empty()) throw InputError("CSV: empty column name in header");
  const std::size_t ncol = d.names.size();

  std::vector<double> cells;
  int nrow = 0;
  while (next_record(text, pos, fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != ncol)
      throw InputError("CSV: row " + std::to_string(nrow + 1) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(ncol));
    for (std::size_t c = 0; c < ncol; ++c)
      cells.push_back(parse_value(fields[c], nrow + 1, static_cast<int>(c) + 1));
    ++nrow;
  }
  if (nrow == 0) throw InputError("CSV: no data rows");
  d.values.resize(nrow, static_cast<Eigen::Index>(ncol));
  for (int r = 0; r < nrow; ++r)
    for (std::size_t c = 0; c < ncol; ++c)
      d.values(r, static_cast<Eigen::Index>(c)) = cells[r * ncol + c];
  return d;
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_csv(buf.str());
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

std::string format_csv(const Dataset& data) {
  if (data.names.size() != static_cast<std::size_t>(data.values.cols()))
    throw ArgumentError("CSV: header and matrix widths disagree");
  std::string out;
  for (std::size_t c = 0; c < data.names.size(); ++c) {
    if (c) out += ',';
    append_field(out, data.names[c]);
  }
  out += '\n';
  char buf[40];
  for (Eigen::Index r = 0; r < data.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.values.cols(); ++c) {
      if (c) out += ',';
      const double v = data.values(r, c);
      if (std::isnan(v)) {
        out += "NA";
      } else {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out += buf;
      }
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << format_csv(data);
  if (!out) throw InputError("failed while writing '" + path + "'");
}

}  // namespace splinehmm
