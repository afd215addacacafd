#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace abc {

/// Shortest text for a double that round-trips: 17 significant digits.
std::string format_double(double value);

/// One RFC 4180 field, quoted when it holds a comma, quote, CR or LF.
std::string csv_escape(const std::string& field);

/// RFC 4180 writer: CRLF line ends, header first, every row the header's
/// width.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  void row(const std::vector<std::string>& fields);
  void close();
  const std::filesystem::path& path() const { return path_; }

 private:
  void write_line(const std::vector<std::string>& fields);

  std::filesystem::path path_;
  std::size_t width_;
  std::ofstream out_;
};

/// Parses RFC 4180 text (CRLF or LF line ends) into rows of fields.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace abc
