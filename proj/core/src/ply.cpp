#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dgd/error.hpp"
#include "dgd/io.hpp"

namespace dgd {

namespace {

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;
  std::vector<std::string> types;
  bool has_list = false;
};

double parse_number(const std::string& token, const std::filesystem::path& path) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw Error(Errc::ParseError, path.string() + ": bad number '" + token + "'");
  }
  return v;
}

}  // namespace

PointCloud read_pointcloud_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw Error(Errc::ParseError, path.string() + ": missing 'ply' signature");
  }

  std::vector<Element> elements;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key.empty() || key == "comment" || key == "obj_info") continue;
    if (key == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii") throw Error(Errc::ParseError, path.string() + ": only ASCII PLY is supported");
    } else if (key == "element") {
      Element e;
      ss >> e.name >> e.count;
      if (!ss) throw Error(Errc::ParseError, path.string() + ": bad element line");
      elements.push_back(e);
    } else if (key == "property") {
      if (elements.empty()) throw Error(Errc::ParseError, path.string() + ": property before element");
      std::string type;
      std::string name;
      ss >> type;
      if (type == "list") {
        elements.back().has_list = true;
        std::string count_type;
        std::string item_type;
        ss >> count_type >> item_type;
      }
      ss >> name;
      elements.back().types.push_back(type);
      elements.back().properties.push_back(name);
    } else if (key == "end_header") {
      header_done = true;
      break;
    } else {
      throw Error(Errc::ParseError, path.string() + ": unknown header keyword '" + key + "'");
    }
  }
  if (!header_done) throw Error(Errc::ParseError, path.string() + ": header not terminated");

  PointCloud cloud;
  bool found_vertex = false;
  for (const Element& e : elements) {
    if (e.name != "vertex") {
      for (std::size_t i = 0; i < e.count; ++i) {
        if (!std::getline(in, line)) throw Error(Errc::TruncatedFile, path.string() + ": missing element rows");
      }
      continue;
    }
    found_vertex = true;
    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
    for (std::size_t p = 0; p < e.properties.size(); ++p) {
      const std::string& n = e.properties[p];
      const int idx = static_cast<int>(p);
      if (n == "x") ix = idx;
      if (n == "y") iy = idx;
      if (n == "z") iz = idx;
      if (n == "red") ir = idx;
      if (n == "green") ig = idx;
      if (n == "blue") ib = idx;
    }
    if (ix < 0 || iy < 0 || iz < 0) throw Error(Errc::ParseError, path.string() + ": vertex lacks x, y, z");
    const bool colored = ir >= 0 && ig >= 0 && ib >= 0;
    const bool byte_color = colored && e.types[static_cast<std::size_t>(ir)].find("char") != std::string::npos;
    for (std::size_t i = 0; i < e.count; ++i) {
      if (!std::getline(in, line)) throw Error(Errc::TruncatedFile, path.string() + ": missing vertex rows");
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (tokens.size() != e.properties.size()) {
        throw Error(Errc::ParseError, path.string() + ": vertex row has wrong column count");
      }
      for (int idx : {ix, iy, iz}) cloud.points.push_back(parse_number(tokens[static_cast<std::size_t>(idx)], path));
      if (colored) {
        for (int idx : {ir, ig, ib}) {
          const double v = parse_number(tokens[static_cast<std::size_t>(idx)], path);
          cloud.colors.push_back(byte_color ? v / 255.0 : v);
        }
      }
    }
  }
  if (!found_vertex) throw Error(Errc::ParseError, path.string() + ": no vertex element");
  return cloud;
}

void write_pointcloud_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  const std::size_t m = cloud.size();
  const bool colored = !cloud.colors.empty();
  if (colored && cloud.colors.size() != 3 * m) throw Error(Errc::ShapeMismatch, "point/color arrays disagree");
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  out << "ply\nformat ascii 1.0\nelement vertex " << m << "\nproperty float x\nproperty float y\nproperty float z\n";
  if (colored) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  out.precision(9);
  for (std::size_t i = 0; i < m; ++i) {
    out << cloud.points[3 * i] << ' ' << cloud.points[3 * i + 1] << ' ' << cloud.points[3 * i + 2];
    if (colored) {
      for (int k = 0; k < 3; ++k) {
        out << ' ' << static_cast<int>(std::lround(std::clamp(cloud.colors[3 * i + k], 0.0, 1.0) * 255.0));
      }
    }
    out << '\n';
  }
  if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
}

}  // namespace dgd
