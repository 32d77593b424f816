#include "core/csv.hpp"

#include <cstdio>
#include <fstream>

#include "core/common.hpp"

namespace nlr {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void CsvBuilder::comment(const std::string& line) { head_ << "# " << line << "\n"; }

void CsvBuilder::header(const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) head_ << (i ? "," : "") << cols[i];
  head_ << "\n";
}

CsvBuilder::Row& CsvBuilder::Row::cell(const std::string& s) {
  if (!first_) os_ << ",";
  first_ = false;
  os_ << s;
  return *this;
}

CsvBuilder::Row& CsvBuilder::Row::cell(double v) { return cell(fmt_double(v)); }

CsvBuilder::Row& CsvBuilder::Row::cell(std::size_t v) { return cell(std::to_string(v)); }

CsvBuilder::Row::~Row() { os_ << "\n"; }

std::string CsvBuilder::str() const { return head_.str() + body_.str(); }

void CsvBuilder::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_io("cannot open '" + path + "' for writing");
  const std::string text = str();
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw_io("write failed for '" + path + "'");
}

}  // namespace nlr
