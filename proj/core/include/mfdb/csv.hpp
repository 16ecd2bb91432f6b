#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mfdb::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; throws DataError when absent.
  std::size_t column(const std::string& name) const;
};

/// Parses a header row plus numeric rows ('.' decimal, ',' separator).
/// Blank lines are skipped.
Table read(const std::string& path);
Table parse(std::istream& in, const std::string& source_name);

/// 12 significant digits, the precision used for every numeric CSV we emit.
std::string format(double value);

void write(const std::string& path, const Table& table);
void write(std::ostream& out, const Table& table);

std::vector<std::string> split(const std::string& line, char sep = ',');

}  // namespace mfdb::csv
