// Copyright 2026 The tlstd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tlstd::bench {

/// Doubles are written with max_digits10 so re-reading recovers them exactly.
inline std::string format_double(double value) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << value;
  return os.str();
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
  }

  void comment(const std::string& text) { out_ << "# " << text << '\n'; }

  void raw_row(const std::string& line) { out_ << line << '\n'; }

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ","), first = false, write_field(fields)), ...);
    out_ << '\n';
  }

 private:
  void write_field(double v) { out_ << format_double(v); }
  void write_field(const std::string& v) { out_ << v; }
  void write_field(const char* v) { out_ << v; }
  template <typename T>
  void write_field(const T& v) {
    out_ << v;
  }

  std::ofstream out_;
};

}  // namespace tlstd::bench
