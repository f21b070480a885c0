#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace d2d {

// CSV with a '#'-prefixed metadata block, LF endings and fixed scientific
// formatting (9 significant digits) so identical runs produce identical
// bytes.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void metadata(const std::string& key, const std::string& value);
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);

  static std::string fmt(double value);
  static std::string fmt(long value);
  static std::string fmt(int value) { return fmt(static_cast<long>(value)); }

 private:
  std::ofstream out_;
  bool header_written_ = false;
};

}  // namespace d2d
