#pragma once

// Transform documents (JSON):
//   {"matrix": [9 floats, row-major], "bias": [3 floats]}
//   {"P": [48], "T": [256], "Q": [48], "bias": [3]}   P is 3x16, T 16x16, Q 16x3, all row-major.

#include "climategs/style_transfer.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace climategs {

namespace detail {

inline std::vector<double> read_floats(const nlohmann::json& doc, const char* key, std::size_t n) {
  if (!doc.contains(key)) throw LoadError(std::string("transform: missing '") + key + "'");
  const auto& arr = doc.at(key);
  if (!arr.is_array() || arr.size() != n)
    throw LoadError(std::string("transform: '") + key + "' must hold " + std::to_string(n) + " numbers");
  std::vector<double> v;
  v.reserve(n);
  for (const auto& x : arr) {
    if (!x.is_number()) throw LoadError(std::string("transform: '") + key + "' has a non-numeric entry");
    v.push_back(x.get<double>());
  }
  return v;
}

}  // namespace detail

inline ColorTransform transform_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw LoadError("transform: document must be an object");
  const bool has_matrix = doc.contains("matrix");
  const bool has_factors = doc.contains("P") || doc.contains("T") || doc.contains("Q");
  if (has_matrix == has_factors) throw LoadError("transform: give either 'matrix' or 'P','T','Q'");
  for (const auto& [k, _] : doc.items())
    if (k != "matrix" && k != "bias" && k != "P" && k != "T" && k != "Q")
      throw LoadError("transform: unknown key '" + k + "'");
  const auto b = detail::read_floats(doc, "bias", 3);
  const Vec3 bias(b[0], b[1], b[2]);
  if (has_matrix) {
    const auto m = detail::read_floats(doc, "matrix", 9);
    Mat3 mat;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) mat(r, c) = m[r * 3 + c];
    return ColorTransform::affine(mat, bias);
  }
  ColorTransform::Factors f;
  const auto p = detail::read_floats(doc, "P", 3 * kFactorRank);
  const auto t = detail::read_floats(doc, "T", kFactorRank * kFactorRank);
  const auto q = detail::read_floats(doc, "Q", kFactorRank * 3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < kFactorRank; ++c) f.p(r, c) = p[r * kFactorRank + c];
  for (int r = 0; r < kFactorRank; ++r)
    for (int c = 0; c < kFactorRank; ++c) f.t(r, c) = t[r * kFactorRank + c];
  for (int r = 0; r < kFactorRank; ++r)
    for (int c = 0; c < 3; ++c) f.q(r, c) = q[r * 3 + c];
  return ColorTransform::from_factors(f, bias);
}

inline nlohmann::json transform_to_json(const ColorTransform& t) {
  nlohmann::json doc;
  doc["bias"] = {t.bias.x(), t.bias.y(), t.bias.z()};
  if (t.factors) {
    std::vector<double> p, tt, q;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < kFactorRank; ++c) p.push_back(t.factors->p(r, c));
    for (int r = 0; r < kFactorRank; ++r)
      for (int c = 0; c < kFactorRank; ++c) tt.push_back(t.factors->t(r, c));
    for (int r = 0; r < kFactorRank; ++r)
      for (int c = 0; c < 3; ++c) q.push_back(t.factors->q(r, c));
    doc["P"] = p;
    doc["T"] = tt;
    doc["Q"] = q;
  } else {
    std::vector<double> m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m.push_back(t.matrix(r, c));
    doc["matrix"] = m;
  }
  return doc;
}

inline ColorTransform load_transform(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open transform file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("transform: " + std::string(e.what()));
  }
  return transform_from_json(doc);
}

inline void save_transform(const ColorTransform& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << transform_to_json(t).dump(2) << "\n";
}

}  // namespace climategs
