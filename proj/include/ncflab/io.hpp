#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncflab/error.hpp"
#include "ncflab/ncmat.hpp"
#include "ncflab/optorus.hpp"
#include "ncflab/qtorus.hpp"

namespace ncflab::io {

using json = nlohmann::json;

/// Row-major array of rows of [re, im] pairs.
inline json matrix_to_json(const MatElem& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

inline MatElem matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw invalid_input("matrix JSON must be a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto c = static_cast<Eigen::Index>(j.front().size());
  MatElem m(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) throw invalid_input("ragged matrix JSON");
    for (Eigen::Index k = 0; k < c; ++k) {
      const json& e = row[static_cast<size_t>(k)];
      if (!e.is_array() || e.size() != 2) throw invalid_input("matrix entries must be [re, im] pairs");
      m(i, k) = cplx(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

inline json poly_to_json(const QTorusPoly& f) {
  json c = json::array();
  for (const auto& [k, v] : f.coeffs) c.push_back({k.first, k.second, v.real(), v.imag()});
  return {{"p", f.angle.p}, {"q", f.angle.q}, {"coeffs", c}};
}

inline QTorusPoly poly_from_json(const json& j) {
  try {
    QTorusPoly f(RationalAngle(j.at("p").get<long>(), j.at("q").get<long>()));
    for (const auto& e : j.at("coeffs")) {
      if (!e.is_array() || e.size() != 4) throw invalid_input("coefficients must be [k1, k2, re, im]");
      f.add({e[0].get<long>(), e[1].get<long>()}, cplx(e[2].get<double>(), e[3].get<double>()));
    }
    return f;
  } catch (const json::exception& ex) {
    throw invalid_input(std::string("malformed polynomial JSON: ") + ex.what());
  }
}

/// Binary grid: "NCFG", int32 G, int32 n, int32 domain, float64 L, then complex64
/// samples in row-major order over (a, b, i, j).
inline void write_opgrid(const std::string& path, const OpGrid& g) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw invalid_input("cannot open " + path + " for writing");
  os.write("NCFG", 4);
  const std::int32_t hdr[3] = {g.G, g.n, static_cast<std::int32_t>(g.domain)};
  os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  os.write(reinterpret_cast<const char*>(&g.L), sizeof g.L);
  for (int a = 0; a < g.G; ++a)
    for (int b = 0; b < g.G; ++b)
      for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
          const cplx v = g.at(i, j, a, b);
          const float f[2] = {static_cast<float>(v.real()), static_cast<float>(v.imag())};
          os.write(reinterpret_cast<const char*>(f), sizeof f);
        }
}

inline OpGrid read_opgrid(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw invalid_input("cannot open " + path);
  char magic[4];
  std::int32_t hdr[3];
  double L = 1.0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(hdr), sizeof hdr);
  is.read(reinterpret_cast<char*>(&L), sizeof L);
  if (!is || std::string(magic, 4) != "NCFG") throw invalid_input(path + " is not a grid file");
  if (hdr[2] != 0 && hdr[2] != 1) throw invalid_input("unknown grid domain");
  OpGrid g(hdr[0], hdr[1], static_cast<Domain>(hdr[2]), L);
  for (int a = 0; a < g.G; ++a)
    for (int b = 0; b < g.G; ++b)
      for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
          float f[2];
          is.read(reinterpret_cast<char*>(f), sizeof f);
          g.at(i, j, a, b) = cplx(f[0], f[1]);
        }
  if (!is) throw invalid_input(path + " is truncated");
  return g;
}

/// Minimal CSV table; numbers are written with round-trip precision.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    explicit Row(CsvTable& t) : t_(t) {}
    Row& operator<<(const std::string& s) {
      cells_.push_back(quote(s));
      return *this;
    }
    Row& operator<<(const char* s) { return *this << std::string(s); }
    Row& operator<<(double v) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      cells_.push_back(buf);
      return *this;
    }
    Row& operator<<(long v) {
      cells_.push_back(std::to_string(v));
      return *this;
    }
    Row& operator<<(int v) { return *this << static_cast<long>(v); }
    Row& operator<<(bool v) {
      cells_.push_back(v ? "true" : "false");
      return *this;
    }
    ~Row() { t_.rows_.push_back(std::move(cells_)); }

   private:
    static std::string quote(const std::string& s) {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string out = "\"";
      for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
      return out + "\"";
    }
    CsvTable& t_;
    std::vector<std::string> cells_;
  };

  Row row() { return Row(*this); }

  const std::vector<std::string>& header() const { return header_; }
  size_t size() const { return rows_.size(); }

  std::string str() const {
    std::ostringstream os;
    for (size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
    os << '\n';
    for (const auto& r : rows_) {
      for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    }
    return os.str();
  }

  void write(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw invalid_input("cannot open " + path + " for writing");
    os << str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace ncflab::io
