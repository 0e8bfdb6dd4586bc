#include "dgd/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dgd/error.hpp"
#include "dgd/image.hpp"
#include "dgd/io.hpp"

namespace dgd {

namespace {

using nlohmann::json;

template <typename V>
V required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error(Errc::ParseError, where + ": missing '" + key + "'");
  try {
    return j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, where + ": bad '" + key + "': " + e.what());
  }
}

FrameRecord parse_frame(const json& f, const std::string& where) {
  if (!f.is_object()) throw Error(Errc::ParseError, where + ": frame is not an object");
  FrameRecord r;
  r.image = required<std::string>(f, "image", where);
  if (f.contains("features") && !f.at("features").is_null()) r.features = required<std::string>(f, "features", where);
  r.time = required<double>(f, "time", where);
  if (!std::isfinite(r.time) || r.time < 0.0 || r.time > 1.0) {
    throw Error(Errc::TimeOutOfRange, where + ": time " + std::to_string(r.time) + " outside [0, 1]");
  }
  const json in = required<json>(f, "intrinsics", where);
  Camera& c = r.camera;
  c.fx = required<double>(in, "fx", where);
  c.fy = required<double>(in, "fy", where);
  c.cx = required<double>(in, "cx", where);
  c.cy = required<double>(in, "cy", where);
  c.width = required<int>(in, "width", where);
  c.height = required<int>(in, "height", where);
  const auto rot = required<std::vector<double>>(f, "rotation", where);
  const auto tr = required<std::vector<double>>(f, "translation", where);
  if (rot.size() != 9 || tr.size() != 3) throw Error(Errc::ParseError, where + ": rotation needs 9 and translation 3 numbers");
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) c.rotation(i, j) = rot[static_cast<std::size_t>(3 * i + j)];
    c.translation[i] = tr[static_cast<std::size_t>(i)];
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(Errc::ParseError, where + ": " + e.what());
  }
  return r;
}

}  // namespace

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingFile, "cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::ParseError, path.string() + ": manifest is not an object");
  if (doc.contains("version") && doc.at("version") != 1) {
    throw Error(Errc::ParseError, path.string() + ": unsupported manifest version");
  }
  DatasetManifest m;
  if (doc.contains("pointcloud") && !doc.at("pointcloud").is_null()) {
    m.pointcloud = required<std::string>(doc, "pointcloud", path.string());
  }
  const json frames = required<json>(doc, "frames", path.string());
  if (!frames.is_array() || frames.empty()) throw Error(Errc::ParseError, path.string() + ": needs at least one frame");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    m.frames.push_back(parse_frame(frames[i], path.string() + " frame " + std::to_string(i)));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  json doc;
  doc["version"] = 1;
  if (!manifest.pointcloud.empty()) doc["pointcloud"] = manifest.pointcloud;
  json frames = json::array();
  for (const FrameRecord& r : manifest.frames) {
    const Camera& c = r.camera;
    json f;
    f["image"] = r.image;
    if (!r.features.empty()) f["features"] = r.features;
    f["time"] = r.time;
    f["intrinsics"] = {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"width", c.width}, {"height", c.height}};
    std::vector<double> rot;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) rot.push_back(c.rotation(i, j));
    }
    f["rotation"] = rot;
    f["translation"] = {c.translation.x(), c.translation.y(), c.translation.z()};
    frames.push_back(f);
  }
  doc["frames"] = frames;
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  out << doc.dump(1) << '\n';
  if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  const std::filesystem::path root = manifest_path.parent_path();
  Dataset ds;
  bool have_dim = false;
  for (std::size_t i = 0; i < m.frames.size(); ++i) {
    const FrameRecord& r = m.frames[i];
    Frame f;
    f.name = r.image;
    f.camera = r.camera;
    f.time = r.time;
    const Image img = read_png(root / r.image, 3);
    if (img.width != r.camera.width || img.height != r.camera.height) {
      throw Error(Errc::DimensionMismatch, r.image + ": image size disagrees with intrinsics");
    }
    f.image = to_float(img);
    if (!r.features.empty()) {
      FeatureMap fm = read_feature_map(root / r.features);
      if (fm.height != img.height || fm.width != img.width) fm = resize_bilinear(fm, img.height, img.width);
      f.feature_dim = fm.channels;
      f.features = std::move(fm.data);
    }
    if (!have_dim) {
      ds.feature_dim = f.feature_dim;
      have_dim = true;
    } else if (f.feature_dim != ds.feature_dim) {
      throw Error(Errc::DimensionMismatch, "frame " + std::to_string(i) + " has C=" + std::to_string(f.feature_dim) +
                                               ", expected " + std::to_string(ds.feature_dim));
    }
    ds.frames.push_back(std::move(f));
  }
  if (!m.pointcloud.empty()) ds.pointcloud = read_pointcloud_ply(root / m.pointcloud);
  return ds;
}

}  // namespace dgd
