#pragma once

// Binary little-endian point-cloud scene files in the layout written by the
// reference Gaussian splatting trainer: x y z, nx ny nz, f_dc_0..2,
// f_rest_0..(3*(K-1)-1), opacity (logit), scale_0..2 (log), rot_0..3 (wxyz).
// f_rest is channel-major: all red rest coefficients, then green, then blue.

#include "climategs/gaussian.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

namespace climategs {

static_assert(std::endian::native == std::endian::little, "scene I/O assumes a little-endian host");

inline constexpr double kMinScale = 1e-8;

namespace detail {

inline int rest_count_to_degree(int rest) {
  switch (rest) {
    case 0: return 0;
    case 9: return 1;
    case 24: return 2;
    case 45: return 3;
    default: return -1;
  }
}

inline std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace detail

/// Parses a scene from a stream. `warnings`, when given, collects non-fatal notes
/// such as clamped degenerate scales.
inline GaussianScene read_scene(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  std::string line;
  if (!std::getline(in, line) || detail::trim_cr(line) != "ply") throw LoadError("header: missing 'ply' magic");

  std::size_t count = 0;
  bool have_vertex = false, have_format = false;
  std::vector<std::string> props;
  for (;;) {
    if (!std::getline(in, line)) throw LoadError("header: missing end_header");
    line = detail::trim_cr(line);
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt != "binary_little_endian") throw LoadError("header: unsupported format '" + fmt + "'");
      have_format = true;
    } else if (kw == "element") {
      std::string name;
      long long n = -1;
      ls >> name >> n;
      if (name != "vertex") throw LoadError("header: unknown element '" + name + "'");
      if (have_vertex) throw LoadError("header: duplicate element 'vertex'");
      if (n < 0) throw LoadError("header: element 'vertex' has invalid count");
      count = static_cast<std::size_t>(n);
      have_vertex = true;
    } else if (kw == "property") {
      std::string type, name;
      ls >> type >> name;
      if (!have_vertex) throw LoadError("header: property '" + name + "' before element");
      if (type != "float" && type != "float32")
        throw LoadError("header: property '" + name + "' has unsupported type '" + type + "'");
      props.push_back(name);
    } else {
      throw LoadError("header: unknown keyword '" + kw + "'");
    }
  }
  if (!have_format) throw LoadError("header: missing format line");
  if (!have_vertex) throw LoadError("header: missing element 'vertex'");

  std::map<std::string, int> slot;
  int rest = 0;
  for (int i = 0; i < static_cast<int>(props.size()); ++i) {
    const std::string& p = props[i];
    bool known = p == "x" || p == "y" || p == "z" || p == "nx" || p == "ny" || p == "nz" || p == "opacity";
    for (int k = 0; k < 3 && !known; ++k) known = p == "f_dc_" + std::to_string(k) || p == "scale_" + std::to_string(k);
    for (int k = 0; k < 4 && !known; ++k) known = p == "rot_" + std::to_string(k);
    if (!known && p.rfind("f_rest_", 0) == 0) {
      const std::string idx = p.substr(7);
      known = !idx.empty() && idx.find_first_not_of("0123456789") == std::string::npos && std::stoi(idx) < 45;
      if (known) ++rest;
    }
    if (!known) throw LoadError("header: unknown property '" + p + "'");
    if (!slot.emplace(p, i).second) throw LoadError("header: duplicate property '" + p + "'");
  }
  const int degree = detail::rest_count_to_degree(rest);
  if (degree < 0) throw LoadError("header: f_rest count " + std::to_string(rest) + " is not a valid SH degree");
  const int per_channel = rest / 3;
  for (int k = 0; k < rest; ++k)
    if (!slot.count("f_rest_" + std::to_string(k))) throw LoadError("header: missing property 'f_rest_" + std::to_string(k) + "'");
  for (const char* req : {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1",
                          "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
    if (!slot.count(req)) throw LoadError(std::string("header: missing property '") + req + "'");

  auto at = [&](const std::string& name) { return slot.at(name); };
  const int ix = at("x"), iy = at("y"), iz = at("z");
  const int idc[3] = {at("f_dc_0"), at("f_dc_1"), at("f_dc_2")};
  const int iop = at("opacity");
  const int isc[3] = {at("scale_0"), at("scale_1"), at("scale_2")};
  const int irot[4] = {at("rot_0"), at("rot_1"), at("rot_2"), at("rot_3")};
  std::vector<int> irest(rest);
  for (int k = 0; k < rest; ++k) irest[k] = at("f_rest_" + std::to_string(k));

  const std::size_t stride = props.size();
  std::vector<float> row(stride);
  std::vector<Gaussian> gaussians;
  gaussians.reserve(count);
  std::size_t clamped = 0;
  for (std::size_t v = 0; v < count; ++v) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(stride * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(stride * sizeof(float)))
      throw LoadError("payload: truncated at vertex " + std::to_string(v) + " of " + std::to_string(count));
    Gaussian g;
    g.center = Vec3(row[ix], row[iy], row[iz]);
    for (int c = 0; c < 3; ++c) g.sh[0][c] = row[idc[c]];
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < per_channel; ++k) g.sh[k + 1][c] = row[irest[c * per_channel + k]];
    g.opacity = sigmoid(row[iop]);
    for (int c = 0; c < 3; ++c) {
      double s = std::exp(double(row[isc[c]]));
      if (!(s >= kMinScale)) {
        s = kMinScale;
        ++clamped;
      }
      g.scale[c] = s;
    }
    Quat q(row[irot[0]], row[irot[1]], row[irot[2]], row[irot[3]]);
    if (!(q.norm() > 0.0) || !std::isfinite(q.norm()))
      throw LoadError("payload: vertex " + std::to_string(v) + " has a degenerate rotation");
    g.rotation = q.normalized();
    if (!g.center.allFinite()) throw LoadError("payload: vertex " + std::to_string(v) + " has a non-finite position");
    gaussians.push_back(std::move(g));
  }
  if (clamped > 0) {
    const std::string msg = "clamped " + std::to_string(clamped) + " degenerate scale component(s) to 1e-8";
    if (warnings) warnings->push_back(msg);
    else std::cerr << "warning: " << msg << "\n";
  }
  return GaussianScene(std::move(gaussians), degree);
}

inline GaussianScene load_scene(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open scene file '" + path + "'");
  return read_scene(in, warnings);
}

inline GaussianScene load_scene_from_bytes(std::string_view bytes, std::vector<std::string>* warnings = nullptr) {
  std::istringstream in{std::string(bytes), std::ios::binary};
  return read_scene(in, warnings);
}

inline void write_scene(std::ostream& out, const GaussianScene& scene) {
  const int degree = scene.sh_degree();
  const int per_channel = sh::coeff_count(degree) - 1;
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << scene.size() << "\n";
  for (const char* p : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"}) out << "property float " << p << "\n";
  for (int k = 0; k < 3 * per_channel; ++k) out << "property float f_rest_" << k << "\n";
  out << "property float opacity\n";
  for (int k = 0; k < 3; ++k) out << "property float scale_" << k << "\n";
  for (int k = 0; k < 4; ++k) out << "property float rot_" << k << "\n";
  out << "end_header\n";

  std::vector<float> row;
  row.reserve(17 + 3 * per_channel);
  for (const auto& g : scene.gaussians()) {
    row.clear();
    for (int c = 0; c < 3; ++c) row.push_back(float(g.center[c]));
    row.insert(row.end(), {0.f, 0.f, 0.f});
    for (int c = 0; c < 3; ++c) row.push_back(float(g.sh[0][c]));
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < per_channel; ++k) row.push_back(float(g.sh[k + 1][c]));
    row.push_back(float(logit(g.opacity)));
    for (int c = 0; c < 3; ++c) row.push_back(float(std::log(g.scale[c])));
    row.push_back(float(g.rotation.w()));
    row.push_back(float(g.rotation.x()));
    row.push_back(float(g.rotation.y()));
    row.push_back(float(g.rotation.z()));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

/// Writes atomically: the file appears under `path` only once fully written.
inline void save_scene(const GaussianScene& scene, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp + "' for writing");
    write_scene(out, scene);
    if (!out) throw Error("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot rename '" + tmp + "' to '" + path + "'");
}

}  // namespace climategs
