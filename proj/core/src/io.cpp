#include "covfmm/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace covfmm {

namespace {

// strict full-string double parse; rejects trailing junk
double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw SerializationError(what + ": cannot parse number '" + text + "'");
  return v;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// lines with CRLF tolerance; the final line may lack a newline
std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      if (start < text.size()) out.push_back(text.substr(start));
      break;
    }
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
    start = end + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericalError("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SerializationError("cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw SerializationError("error while reading '" + path + "'");
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SerializationError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw SerializationError("error while writing '" + path + "'");
}

void save_vector_csv(const Vector& v, const std::string& path) {
  std::ostringstream os;
  for (Index i = 0; i < v.size(); ++i) os << format_double(v[i]) << '\n';
  write_text_file(path, os.str());
}

Vector load_vector_csv(const std::string& path) {
  const std::vector<std::string> lines = split_lines(read_text_file(path));
  std::vector<double> values;
  values.reserve(lines.size());
  for (const std::string& line : lines) {
    if (line.empty()) continue;
    values.push_back(parse_double(line, path));
  }
  if (values.empty()) throw SerializationError(path + ": no values");
  Vector v(static_cast<Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Index>(i)] = values[i];
  return v;
}

void save_observations_csv(const ObservationSet& obs, const std::string& path) {
  if (obs.lon_deg.size() != obs.lat_deg.size())
    throw ArgumentError("save_observations_csv: lat/lon length mismatch");
  std::ostringstream os;
  os << "index,lat_deg,lon_deg\n";
  for (std::size_t i = 0; i < obs.size(); ++i)
    os << i << ',' << format_double(obs.lat_deg[i]) << ','
       << format_double(obs.lon_deg[i]) << '\n';
  write_text_file(path, os.str());
}

ObservationSet load_observations_csv(const std::string& path) {
  const std::vector<std::string> lines = split_lines(read_text_file(path));
  if (lines.empty() || lines[0] != "index,lat_deg,lon_deg")
    throw SerializationError(path + ": missing observation header");
  ObservationSet obs;
  std::size_t row = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::vector<std::string> f = split_fields(lines[i]);
    if (f.size() != 3)
      throw SerializationError(path + ": expected 3 fields per row");
    if (parse_double(f[0], path) != static_cast<double>(row))
      throw SerializationError(path + ": indices must be dense and ascending");
    obs.lat_deg.push_back(parse_double(f[1], path));
    obs.lon_deg.push_back(parse_double(f[2], path));
    ++row;
  }
  if (obs.size() == 0) throw SerializationError(path + ": no observations");
  return obs;
}

}  // namespace covfmm
