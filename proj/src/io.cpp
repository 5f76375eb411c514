#include "sispace/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <system_error>
#include <vector>

namespace sispace::io {

namespace {

std::string strip(std::string s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r'))
    --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(strip(line.substr(start)));
      break;
    }
    out.push_back(strip(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void bad_row(const std::filesystem::path& path, int line,
                          const std::string& what) {
  throw ConfigError(path.string() + ", line " + std::to_string(line) + ": " +
                    what);
}

long parse_int(const std::string& s, const std::filesystem::path& path,
               int line) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    bad_row(path, line, "expected an integer, got \"" + s + "\"");
  return v;
}

double parse_double(const std::string& s, const std::filesystem::path& path,
                    int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    bad_row(path, line, "expected a number, got \"" + s + "\"");
  return v;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void save_spectrum_csv(const FiberedFunction& f,
                       const std::filesystem::path& path) {
  const GridSpec& grid = f.grid();
  std::string text = "i,k,re,im\n";
  text.reserve(size_t(grid.fibers) * size_t(grid.translates()) * 48 + 16);
  for (int i = 0; i < grid.fibers; ++i) {
    for (int k = -grid.radius; k <= grid.radius; ++k) {
      const Complex& v = f.at(i, k);
      text += std::to_string(i);
      text += ',';
      text += std::to_string(k);
      text += ',';
      text += format_double(v.real());
      text += ',';
      text += format_double(v.imag());
      text += '\n';
    }
  }
  atomic_write_text(path, text);
}

FiberedFunction load_spectrum_csv(const std::filesystem::path& path,
                                  const GridSpec& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  FiberedFunction f(grid);
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = strip(line);
    if (body.empty()) continue;
    if (!header_seen) {
      if (body != "i,k,re,im" && split_fields(body) !=
          std::vector<std::string>{"i", "k", "re", "im"})
        bad_row(path, lineno, "expected header \"i,k,re,im\"");
      header_seen = true;
      continue;
    }
    const auto fields = split_fields(body);
    if (fields.size() != 4)
      bad_row(path, lineno, "expected 4 fields, got " +
              std::to_string(fields.size()));
    const long i = parse_int(fields[0], path, lineno);
    const long k = parse_int(fields[1], path, lineno);
    if (i < 0 || i >= grid.fibers)
      bad_row(path, lineno, "fiber index " + std::to_string(i) +
              " outside [0, " + std::to_string(grid.fibers - 1) + "]");
    if (k < -grid.radius || k > grid.radius)
      bad_row(path, lineno, "translate " + std::to_string(k) +
              " outside [-" + std::to_string(grid.radius) + ", " +
              std::to_string(grid.radius) + "]");
    f.at(int(i), int(k)) = Complex(parse_double(fields[2], path, lineno),
                                   parse_double(fields[3], path, lineno));
  }
  if (!header_seen) bad_row(path, lineno, "empty spectrum file");
  return f;
}

void save_periodic_csv(const PeriodicFunction& F,
                       const std::filesystem::path& path) {
  std::string text = "t,re,im\n";
  const GridSpec& grid = F.grid();
  for (int i = 0; i < grid.fibers; ++i) {
    text += format_double(grid.point(i));
    text += ',';
    text += format_double(F[i].real());
    text += ',';
    text += format_double(F[i].imag());
    text += '\n';
  }
  atomic_write_text(path, text);
}

void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content) {
  const std::filesystem::path parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), std::streamsize(content.size()));
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() +
                  ": " + ec.message());
}

void save_json(const nlohmann::json& j, const std::filesystem::path& path) {
  atomic_write_text(path, j.dump(2) + "\n");
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    // e.what() already carries byte position detail
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace sispace::io
