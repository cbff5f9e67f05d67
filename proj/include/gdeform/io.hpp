#pragma once

#include <Eigen/Dense>
#include <cctype>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "core.hpp"
#include "tps.hpp"
#include "variogram_model.hpp"

//! File formats: point CSVs (header `x[,y][,z]`), generic numeric CSV
//! output at full round-trip precision, the fit bundle JSON that carries a
//! deformation plus its variogram model, and atomic writes.
namespace gdeform {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

//! Writes through a sibling temp file and renames, so readers never observe
//! a half-written file.
inline void atomic_write_file(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open '" + tmp + "' for writing");
    out << content;
    if (!out) throw data_error("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw data_error("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

}  // namespace detail

//! A parsed point CSV: locations always, values when the file has a z
//! column. Accepted headers: x | x,y | x,z | x,y,z.
struct PointTable {
  Matrix locations;
  Vector values;
  bool has_values = false;
};

inline PointTable read_point_csv(const std::string& path) {
  std::string text = read_file(path);
  std::istringstream is(text);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw data_error(path + ": empty file");

  std::vector<std::string> header = detail::split_fields(lines[0]);
  for (auto& h : header)
    for (auto& ch : h) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  Eigen::Index dim = 0;
  bool has_values = false;
  if (header == std::vector<std::string>{"x"}) dim = 1;
  else if (header == std::vector<std::string>{"x", "y"}) dim = 2;
  else if (header == std::vector<std::string>{"x", "z"}) dim = 1, has_values = true;
  else if (header == std::vector<std::string>{"x", "y", "z"}) dim = 2, has_values = true;
  else throw data_error(path + ":1: header must be one of x | x,y | x,z | x,y,z");

  const auto n = static_cast<Eigen::Index>(lines.size()) - 1;
  if (n < 1) throw data_error(path + ": no data rows");
  PointTable table;
  table.locations.resize(n, dim);
  table.has_values = has_values;
  if (has_values) table.values.resize(n);
  const std::size_t want = static_cast<std::size_t>(dim) + (has_values ? 1 : 0);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::string& row = lines[static_cast<std::size_t>(r) + 1];
    std::vector<std::string> fields = detail::split_fields(row);
    std::string where = path + ":" + std::to_string(r + 2);
    if (fields.size() != want)
      throw data_error(where + ": expected " + std::to_string(want) + " fields, got " +
                       std::to_string(fields.size()));
    try {
      for (Eigen::Index c = 0; c < dim; ++c)
        table.locations(r, c) = parse_double(fields[static_cast<std::size_t>(c)]);
      if (has_values) table.values(r) = parse_double(fields[want - 1]);
    } catch (const data_error& e) {
      throw data_error(where + ": " + e.what());
    }
  }
  if (!table.locations.allFinite() || (has_values && !table.values.allFinite()))
    throw data_error(path + ": non-finite entry");
  return table;
}

//! Writes a numeric CSV with the given header names, one table column per
//! matrix column, 17 significant digits, atomic.
inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const Matrix& columns) {
  if (static_cast<Eigen::Index>(header.size()) != columns.cols())
    throw data_error("write_csv: header/column count mismatch");
  std::ostringstream os;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (k) os << ',';
    os << header[k];
  }
  os << '\n';
  for (Eigen::Index r = 0; r < columns.rows(); ++r) {
    for (Eigen::Index c = 0; c < columns.cols(); ++c) {
      if (c) os << ',';
      os << format_g17(columns(r, c));
    }
    os << '\n';
  }
  atomic_write_file(path, os.str());
}

inline void write_dataset_csv(const std::string& path, const Matrix& locations,
                              const Vector& values) {
  if (locations.rows() != values.size()) throw data_error("write_dataset_csv: size mismatch");
  Matrix columns(locations.rows(), locations.cols() + 1);
  columns.leftCols(locations.cols()) = locations;
  columns.col(locations.cols()) = values;
  std::vector<std::string> header =
      locations.cols() == 1 ? std::vector<std::string>{"x", "z"}
                            : std::vector<std::string>{"x", "y", "z"};
  write_csv(path, header, columns);
}

//! FNV-1a hash of the canonical text form of a point set, used to tie a fit
//! bundle to the data it was fitted on.
inline std::string dataset_hash(const Matrix& locations, const Vector& values) {
  std::ostringstream os;
  for (Eigen::Index r = 0; r < locations.rows(); ++r) {
    for (Eigen::Index c = 0; c < locations.cols(); ++c) os << format_g17(locations(r, c)) << ',';
    if (values.size() == locations.rows()) os << format_g17(values(r));
    os << '\n';
  }
  std::string text = os.str();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

//! UTC timestamp, honoring SOURCE_DATE_EPOCH for reproducible outputs.
inline std::string timestamp_utc() {
  std::time_t t = 0;
  if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(e, nullptr, 10));
  } else {
    t = std::time(nullptr);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

//! A saved fit: the variogram model plus, for a deformation fit, the spline
//! and the hyper-parameters behind it. `mean` is the data mean at fit time,
//! used by conditional simulation.
struct FitBundle {
  std::string kind;  //!< "deformed" or "stationary"
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double omega = std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  std::optional<TpsSpline> spline;
  std::optional<VariogramModel> model;
  std::string data_hash;
  std::string created;
  std::string version;
};

inline void save_bundle(const std::string& path, const FitBundle& bundle) {
  if (bundle.kind != "deformed" && bundle.kind != "stationary")
    throw data_error("save_bundle: kind must be 'deformed' or 'stationary'");
  if (!bundle.model) throw data_error("save_bundle: missing model");
  if ((bundle.kind == "deformed") != bundle.spline.has_value())
    throw data_error("save_bundle: spline presence inconsistent with kind");
  nlohmann::json j;
  j["format"] = "gdeform-bundle/1";
  j["kind"] = bundle.kind;
  if (bundle.kind == "deformed") {
    j["lambda"] = bundle.lambda;
    j["omega"] = bundle.omega;
    j["spline"] = bundle.spline->to_text();
  }
  j["mean"] = bundle.mean;
  j["model"] = bundle.model->to_text();
  j["provenance"] = {{"version", bundle.version},
                     {"created", bundle.created},
                     {"data_hash", bundle.data_hash}};
  atomic_write_file(path, j.dump(2) + "\n");
}

inline FitBundle load_bundle(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw data_error(path + ": invalid bundle JSON: " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "gdeform-bundle/1")
      throw data_error(path + ": unsupported bundle format");
    FitBundle b;
    b.kind = j.at("kind").get<std::string>();
    if (b.kind != "deformed" && b.kind != "stationary")
      throw data_error(path + ": unknown bundle kind '" + b.kind + "'");
    b.mean = j.at("mean").get<double>();
    b.model = VariogramModel::from_text(j.at("model").get<std::string>());
    if (b.kind == "deformed") {
      b.lambda = j.at("lambda").get<double>();
      b.omega = j.at("omega").get<double>();
      b.spline = TpsSpline::from_text(j.at("spline").get<std::string>());
      if (b.spline->output_dim() != b.spline->input_dim())
        throw data_error(path + ": bundle spline is not a self-map");
    }
    const auto& prov = j.at("provenance");
    b.version = prov.at("version").get<std::string>();
    b.created = prov.at("created").get<std::string>();
    b.data_hash = prov.at("data_hash").get<std::string>();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(path + ": malformed bundle: " + e.what());
  }
}

}  // namespace gdeform
