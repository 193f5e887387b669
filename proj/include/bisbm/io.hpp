#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bisbm/adjacency.hpp"
#include "bisbm/common.hpp"
#include "bisbm/labels.hpp"
#include "bisbm/model.hpp"

#include <json.hpp>

namespace bisbm {

using Json = nlohmann::json;

// Edge list: one "i<TAB>j" pair per line, 0-indexed, optional third count
// column for Poisson mode.
inline void write_edge_list(const std::string& path, const BiAdjacency& a) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open for writing: " + path);
  for (const auto& [i, j, v] : a.entries()) {
    f << i << '\t' << j;
    if (!a.binary()) f << '\t' << static_cast<std::int64_t>(v);
    f << '\n';
  }
  if (!f) throw DataError("write failed: " + path);
}

inline BiAdjacency read_edge_list(const std::string& path, std::int64_t n, std::int64_t m) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open: " + path);
  std::vector<BiAdjacency::Entry> entries;
  std::string line;
  bool binary = true;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::int64_t i, j;
    if (!(ss >> i >> j))
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 'i<TAB>j[<TAB>count]'");
    std::int64_t c;
    if (ss >> c) {
      binary = false;
      if (c < 0) throw DataError(path + ":" + std::to_string(lineno) + ": negative count");
      if (c > 0) entries.emplace_back(i, j, static_cast<double>(c));
    } else {
      entries.emplace_back(i, j, 1.0);
    }
  }
  return BiAdjacency::from_entries(n, m, std::move(entries), binary);
}

// Label file: one integer per line, 0-indexed classes.
inline void write_labels(const std::string& path, const HardLabels& h) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open for writing: " + path);
  for (int v : h.a) f << v << '\n';
  if (!f) throw DataError("write failed: " + path);
}

inline HardLabels read_labels(const std::string& path, int num_classes = 0) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open: " + path);
  std::vector<int> a;
  std::string line;
  int max_cls = -1;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    int v;
    if (!(ss >> v) || v < 0)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected a nonnegative integer");
    max_cls = std::max(max_cls, v);
    a.push_back(v);
  }
  if (a.empty()) throw DataError(path + ": empty label file");
  const int k = num_classes > 0 ? num_classes : max_cls + 1;
  return HardLabels(std::move(a), k);
}

// Connectivity / mean parameters: JSON {"K","L","P"} with P row-major.
inline Json connectivity_to_json(const Connectivity& c) {
  Json j;
  j["K"] = c.k();
  j["L"] = c.l();
  std::vector<double> p;
  for (int a = 0; a < c.k(); ++a)
    for (int b = 0; b < c.l(); ++b) p.push_back(c.p(a, b));
  j["P"] = p;
  return j;
}

inline Matrix matrix_from_row_major(const Json& flat, int k, int l, const std::string& what) {
  if (!flat.is_array() || static_cast<int>(flat.size()) != k * l)
    throw ConfigError(what + ": expected a row-major array of length K*L");
  Matrix m(k, l);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < l; ++b) m(a, b) = flat[static_cast<std::size_t>(a * l + b)].get<double>();
  return m;
}

inline Connectivity connectivity_from_json(const Json& j) {
  if (!j.contains("K") || !j.contains("L") || !j.contains("P"))
    throw ConfigError("connectivity JSON needs fields K, L, P");
  const int k = j["K"].get<int>();
  const int l = j["L"].get<int>();
  if (k < 1 || l < 1) throw ConfigError("connectivity: K, L must be >= 1");
  return Connectivity(matrix_from_row_major(j["P"], k, l, "P"));
}

inline std::vector<double> matrix_row_major(const Matrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open: " + path);
  Json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  return j;
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open for writing: " + path);
  f << j.dump(2) << '\n';
  if (!f) throw DataError("write failed: " + path);
}

}  // namespace bisbm
