#pragma once

// Minimal RFC 4180 reader: comma separated, double-quoted fields with ""
// escapes, LF or CRLF records. Quoted fields may span lines.

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace cpbh {

struct CsvRecord {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

class CsvReader {
public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Reads the next record. Returns false at end of input. Throws
  /// InputError on an unterminated quoted field.
  bool next(CsvRecord& rec);

private:
  std::istream& in_;
  std::size_t line_ = 1;
};

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(const std::string& field);

}  // namespace cpbh
