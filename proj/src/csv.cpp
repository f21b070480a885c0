#include "d2d/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace d2d {

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("cannot open output file: " + path);
}

void CsvWriter::metadata(const std::string& key, const std::string& value) {
  if (header_written_)
    throw std::logic_error("csv metadata must precede the header");
  out_ << "# " << key << " = " << value << "\n";
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  header_written_ = true;
  for (std::size_t i = 0; i < columns.size(); ++i)
    out_ << (i ? "," : "") << columns[i];
  out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i)
    out_ << (i ? "," : "") << cells[i];
  out_ << "\n";
}

std::string CsvWriter::fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.8e", value);
  return buf;
}

std::string CsvWriter::fmt(long value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%ld", value);
  return buf;
}

}  // namespace d2d
