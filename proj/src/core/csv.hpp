#pragma once

#include <sstream>
#include <string>
#include <vector>

namespace nlr {

// Formats a double with 17 significant digits (round-trip exact).
std::string fmt_double(double v);

// In-memory CSV builder: '#'-prefixed comment lines first, then a header
// row, then data rows. Building the full text before writing keeps output
// byte-deterministic and makes the writers easy to test.
class CsvBuilder {
 public:
  void comment(const std::string& line);
  void header(const std::vector<std::string>& cols);

  class Row {
   public:
    explicit Row(std::ostringstream& os) : os_(os) {}
    Row& cell(const std::string& s);
    Row& cell(double v);
    Row& cell(std::size_t v);
    ~Row();

   private:
    std::ostringstream& os_;
    bool first_ = true;
  };

  Row row() { return Row(body_); }

  std::string str() const;

  // Writes the document to `path`; throws an io error on failure.
  void write(const std::string& path) const;

 private:
  std::ostringstream head_;
  std::ostringstream body_;
};

}  // namespace nlr
