#include "sicd/dataset_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sicd/errors.hpp"

namespace sicd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(const std::string& name, long line,
                       const std::string& what) {
  throw InvalidInput(name + ": line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      return fields;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

double parse_real(std::string_view field, const std::string& name, long line,
                  const std::string& column) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    fail(name, line,
         column + ": expected a real number, got \"" + std::string(field) +
             "\"");
  if (!std::isfinite(value))
    fail(name, line, column + ": value must be finite");
  return value;
}

}  // namespace

CensoredSample parse_dataset(std::istream& in, const std::string& name) {
  std::vector<double> z;
  std::vector<int> delta;
  std::vector<std::vector<double>> x;
  Eigen::Index d = -1;
  long header_line = 0;

  std::string raw;
  long line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string_view content = trim(raw);
    if (content.empty() || content.front() == '#') continue;

    const std::vector<std::string_view> fields = split_fields(content);
    if (d < 0) {
      // Header row: z, delta, x1..xd in order.
      if (fields.size() < 3 || fields[0] != "z" || fields[1] != "delta")
        fail(name, line,
             "expected header \"z,delta,x1,...\", got \"" +
                 std::string(content) + "\"");
      for (std::size_t k = 2; k < fields.size(); ++k) {
        const std::string expected = "x" + std::to_string(k - 1);
        if (fields[k] != expected)
          fail(name, line,
               "expected column \"" + expected + "\", got \"" +
                   std::string(fields[k]) + "\"");
      }
      d = static_cast<Eigen::Index>(fields.size() - 2);
      header_line = line;
      continue;
    }

    if (fields.size() != static_cast<std::size_t>(d) + 2)
      fail(name, line,
           "expected " + std::to_string(d + 2) + " fields, got " +
               std::to_string(fields.size()));
    z.push_back(parse_real(fields[0], name, line, "z"));
    const double flag = parse_real(fields[1], name, line, "delta");
    if (flag != 0.0 && flag != 1.0) fail(name, line, "delta must be 0 or 1");
    delta.push_back(static_cast<int>(flag));
    std::vector<double> row(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k)
      row[static_cast<std::size_t>(k)] =
          parse_real(fields[static_cast<std::size_t>(k) + 2], name, line,
                     "x" + std::to_string(k + 1));
    x.push_back(std::move(row));
  }

  if (d < 0) fail(name, 1, "empty dataset: missing header \"z,delta,x1,...\"");
  if (z.empty()) fail(name, header_line, "no data rows after the header");

  const auto n = static_cast<Eigen::Index>(z.size());
  Eigen::VectorXd zv(n);
  Eigen::VectorXi dv(n);
  Eigen::MatrixXd xv(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    zv[i] = z[static_cast<std::size_t>(i)];
    dv[i] = delta[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < d; ++k)
      xv(i, k) = x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return CensoredSample{std::move(zv), std::move(dv), std::move(xv)};
}

CensoredSample read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(path + ": cannot open dataset for reading");
  return parse_dataset(in, path);
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_dataset(std::ostream& out, const CensoredSample& sample) {
  out << "z,delta";
  for (Eigen::Index k = 0; k < sample.d(); ++k) out << ",x" << (k + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    out << format_double(sample.z[i]) << ',' << sample.delta[i];
    for (Eigen::Index k = 0; k < sample.d(); ++k)
      out << ',' << format_double(sample.x(i, k));
    out << '\n';
  }
}

void write_dataset(const std::string& path, const CensoredSample& sample) {
  std::ofstream out(path);
  if (!out) throw InvalidInput(path + ": cannot open dataset for writing");
  write_dataset(out, sample);
  if (!out) throw InvalidInput(path + ": write failed");
}

}  // namespace sicd
