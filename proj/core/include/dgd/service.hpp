#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dgd/camera.hpp"
#include "dgd/io.hpp"

namespace dgd {

struct NamedCamera {
  std::string name;
  Camera camera;
  double time = 0.0;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  std::size_t workers = 0;                 // 0: hardware threads
  long max_pixels = 1024L * 1024L;
  std::string cors_origin = "*";
  std::vector<NamedCamera> cameras;        // dataset cameras, addressable by index
};

/// HTTP front end over a read-only checkpoint.
///
///   GET  /meta
///   GET  /render?azimuth&elevation&radius&t&w&h&channels[&fov&tx&ty&tz | &camera]
///   POST /select   {"mode": "click"|"embedding", "pixel": [x, y], "view": {...}, "t", "theta", "embedding": [...]}
///   GET  /timeline?token&t[&view params]
///
/// "view" is either {"camera": index} or orbit parameters as in /render.
class Service {
 public:
  Service(Checkpoint<float> checkpoint, ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds to `port` (0: any free port) and returns the bound port, or -1.
  int bind(int port);
  /// Serves until stop(); call after bind().
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Content hash of a sorted id set (FNV-1a 64, hex).
[[nodiscard]] std::string selection_token(const std::vector<std::size_t>& sorted_ids);

}  // namespace dgd
