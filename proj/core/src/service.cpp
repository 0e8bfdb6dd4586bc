#include "dgd/service.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dgd/error.hpp"
#include "dgd/image.hpp"
#include "dgd/semantics.hpp"
#include "dgd/view.hpp"

namespace dgd {

namespace {

using nlohmann::json;

struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Lookup = std::function<std::optional<std::string>(const std::string&)>;

double number(const Lookup& get, const std::string& key, double fallback) {
  const auto s = get(key);
  if (!s) return fallback;
  double v = 0.0;
  const char* end = s->data() + s->size();
  auto [ptr, ec] = std::from_chars(s->data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) throw BadRequest("parameter '" + key + "' is not a number");
  return v;
}

long integer(const Lookup& get, const std::string& key, long fallback) {
  const double v = number(get, key, static_cast<double>(fallback));
  if (v != std::floor(v)) throw BadRequest("parameter '" + key + "' must be an integer");
  return static_cast<long>(v);
}

double time_param(const Lookup& get) {
  const double t = number(get, "t", 0.0);
  if (t < 0.0 || t > 1.0) throw BadRequest("t must lie in [0, 1]");
  return t;
}

Lookup query_lookup(const httplib::Request& req) {
  return [&req](const std::string& key) -> std::optional<std::string> {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
  };
}

Lookup json_lookup(const json& obj) {
  return [obj](const std::string& key) -> std::optional<std::string> {
    if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (v.is_number()) return v.dump();
    if (v.is_string()) return v.get<std::string>();
    throw BadRequest("view field '" + key + "' must be a number");
  };
}

std::string mask_base64(const Mask& mask) { return httplib::detail::base64_encode(encode_png(mask_to_image(mask))); }

int http_status(Errc code) {
  switch (code) {
    case Errc::EmptyPixel:
      return 422;
    default:
      return 400;
  }
}

json error_body(const std::string& code, const std::string& message) { return {{"error", code}, {"message", message}}; }

}  // namespace

std::string selection_token(const std::vector<std::size_t>& sorted_ids) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t id : sorted_ids) {
    std::uint64_t v = id;
    for (int b = 0; b < 8; ++b) {
      h ^= v & 0xffU;
      h *= 0x100000001b3ULL;
      v >>= 8;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Service::Impl {
  const Checkpoint<float> ckpt;
  const ServiceConfig config;
  std::string meta;
  httplib::Server server;

  struct Selection {
    std::vector<std::size_t> ids;
    Camera camera;
  };
  std::mutex cache_mutex;
  std::map<std::string, Selection> cache;

  Impl(Checkpoint<float> c, ServiceConfig cfg) : ckpt(std::move(c)), config(std::move(cfg)) {
    build_meta();
    const std::size_t workers = config.workers > 0 ? config.workers : std::max(1U, std::thread::hardware_concurrency());
    server.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
    server.set_default_headers({{"Access-Control-Allow-Origin", config.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/meta", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(meta, "application/json");
    });
    server.Get("/render", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { handle_render(req, res); });
    });
    server.Post("/select", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { handle_select(req, res); });
    });
    server.Get("/timeline", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { handle_timeline(req, res); });
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        res.set_content(error_body("HttpError", std::to_string(res.status)).dump(), "application/json");
      }
    });
  }

  void build_meta() {
    json m;
    m["gaussians"] = ckpt.scene.size();
    m["feature_dim"] = ckpt.scene.feature_dim;
    m["time_range"] = {0.0, 1.0};
    m["iteration"] = ckpt.iteration;
    const DeformationConfig& d = ckpt.field.config();
    m["deformation"] = {{"depth", d.depth},
                        {"width", d.width},
                        {"position_bands", d.position.num_bands},
                        {"time_bands", d.time.num_bands}};
    m["max_pixels"] = config.max_pixels;
    json cams = json::array();
    for (std::size_t i = 0; i < config.cameras.size(); ++i) {
      const NamedCamera& nc = config.cameras[i];
      const Camera& c = nc.camera;
      std::vector<double> rot;
      for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 3; ++k) rot.push_back(c.rotation(r, k));
      }
      cams.push_back({{"index", i},
                      {"name", nc.name},
                      {"time", nc.time},
                      {"intrinsics", {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"width", c.width},
                                      {"height", c.height}}},
                      {"rotation", rot},
                      {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}}});
    }
    m["cameras"] = cams;
    meta = m.dump();
  }

  template <typename F>
  void guarded(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const BadRequest& e) {
      res.status = 400;
      res.set_content(error_body("BadRequest", e.what()).dump(), "application/json");
    } catch (const json::exception& e) {
      res.status = 400;
      res.set_content(error_body("BadRequest", e.what()).dump(), "application/json");
    } catch (const Error& e) {
      res.status = http_status(e.code());
      res.set_content(error_body(std::string(errc_name(e.code())), e.what()).dump(), "application/json");
    }
  }

  [[nodiscard]] bool has_view(const Lookup& get) const {
    for (const char* k : {"camera", "azimuth", "elevation", "radius", "w", "h", "fov", "tx", "ty", "tz"}) {
      if (get(k)) return true;
    }
    return false;
  }

  [[nodiscard]] Camera view_camera(const Lookup& get) const {
    if (get("camera")) {
      const long idx = integer(get, "camera", 0);
      if (idx < 0 || static_cast<std::size_t>(idx) >= config.cameras.size()) {
        throw BadRequest("camera index out of range");
      }
      return config.cameras[static_cast<std::size_t>(idx)].camera;
    }
    OrbitView v;
    v.azimuth_deg = number(get, "azimuth", 0.0);
    v.elevation_deg = number(get, "elevation", 0.0);
    v.radius = number(get, "radius", 3.0);
    v.fov_deg = number(get, "fov", 50.0);
    v.target = {number(get, "tx", 0.0), number(get, "ty", 0.0), number(get, "tz", 0.0)};
    const long w = integer(get, "w", 256);
    const long h = integer(get, "h", 256);
    if (w < 1 || h < 1) throw BadRequest("w and h must be positive");
    if (w * h > config.max_pixels) throw BadRequest("image larger than max_pixels");
    if (!(v.radius > 0.0)) throw BadRequest("radius must be positive");
    if (!(v.fov_deg > 0.0 && v.fov_deg < 180.0)) throw BadRequest("fov must lie in (0, 180)");
    if (std::abs(v.elevation_deg) >= 90.0) throw BadRequest("elevation must lie in (-90, 90)");
    v.width = static_cast<int>(w);
    v.height = static_cast<int>(h);
    return orbit_camera(v);
  }

  void handle_render(const httplib::Request& req, httplib::Response& res) const {
    const Lookup get = query_lookup(req);
    const Camera cam = view_camera(get);
    const double t = time_param(get);
    const std::string ch = get("channels").value_or("color");
    const auto channels = parse_channels(ch);
    if (!channels) throw BadRequest("channels must be color, feature-pca or alpha");
    const Image img = render_view<float>(ckpt.scene, &ckpt.field, cam, t, *channels);
    res.set_content(encode_png(img), "image/png");
  }

  std::string remember(const std::vector<std::size_t>& ids, const Camera& cam) {
    std::string token = selection_token(ids);
    std::lock_guard lock(cache_mutex);
    if (cache.size() >= 4096 && cache.count(token) == 0) cache.clear();
    cache[token] = {ids, cam};
    return token;
  }

  void handle_select(const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      throw BadRequest("body is not valid JSON");
    }
    if (!body.is_object()) throw BadRequest("body must be an object");
    const std::string mode = body.value("mode", "");
    const Lookup top = json_lookup(body);
    const double t = time_param(top);
    const double theta = number(top, "theta", kDefaultTheta);
    if (theta < -1.0 || theta > 1.0) throw BadRequest("theta must lie in [-1, 1]");
    const json view = body.value("view", json::object());
    const Lookup vget = json_lookup(view);

    SelectionResult<float> sel;
    std::optional<Camera> cam;
    if (mode == "click") {
      if (!body.contains("pixel") || !body["pixel"].is_array() || body["pixel"].size() != 2) {
        throw BadRequest("click needs pixel [x, y]");
      }
      const int x = body["pixel"][0].get<int>();
      const int y = body["pixel"][1].get<int>();
      cam = view_camera(vget);
      sel = select_by_click<float>(ckpt.scene, &ckpt.field, *cam, t, x, y, theta);
    } else if (mode == "embedding") {
      if (!body.contains("embedding") || !body["embedding"].is_array()) throw BadRequest("embedding must be an array");
      const auto q = body["embedding"].get<std::vector<float>>();
      if (q.size() != ckpt.scene.feature_dim) {
        throw Error(Errc::DimensionMismatch, "embedding has " + std::to_string(q.size()) + " channels, scene has " +
                                                 std::to_string(ckpt.scene.feature_dim));
      }
      sel = select_by_embedding<float>(ckpt.scene, q, theta);
      if (has_view(vget)) cam = view_camera(vget);
    } else {
      throw BadRequest("mode must be click or embedding");
    }

    json out;
    out["count"] = sel.gaussian_ids.size();
    out["ids"] = sel.gaussian_ids;
    out["query_feature"] = sel.query_feature;
    out["t"] = t;
    out["theta"] = theta;
    const auto scores = cosine_scores<float>(ckpt.scene, sel.query_feature);
    constexpr int kBins = 20;
    std::vector<std::size_t> counts(kBins, 0);
    for (float s : scores) {
      if (!std::isfinite(s)) continue;
      const int b = std::clamp(static_cast<int>(std::floor((static_cast<double>(s) + 1.0) * 0.5 * kBins)), 0, kBins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
    std::vector<double> edges;
    for (int b = 0; b <= kBins; ++b) edges.push_back(-1.0 + 2.0 * b / kBins);
    out["histogram"] = {{"edges", edges}, {"counts", counts}};
    if (cam) {
      out["token"] = remember(sel.gaussian_ids, *cam);
      const Mask mask = render_segmentation_mask<float>(ckpt.scene, &ckpt.field, sel.gaussian_ids, *cam, t);
      out["mask"] = mask_base64(mask);
      out["mask_width"] = mask.width;
      out["mask_height"] = mask.height;
    } else {
      out["token"] = remember(sel.gaussian_ids, orbit_camera({}));
      out["mask"] = nullptr;
    }
    res.set_content(out.dump(), "application/json");
  }

  void handle_timeline(const httplib::Request& req, httplib::Response& res) {
    const Lookup get = query_lookup(req);
    const auto token = get("token");
    if (!token) throw BadRequest("token is required");
    Selection sel;
    {
      std::lock_guard lock(cache_mutex);
      const auto it = cache.find(*token);
      if (it == cache.end()) {
        res.status = 404;
        res.set_content(error_body("UnknownToken", "no selection with token " + *token).dump(), "application/json");
        return;
      }
      sel = it->second;
    }
    const double t = time_param(get);
    const Camera cam = has_view(get) ? view_camera(get) : sel.camera;
    const Mask mask = render_segmentation_mask<float>(ckpt.scene, &ckpt.field, sel.ids, cam, t);
    json out{{"token", *token}, {"t", t}, {"count", sel.ids.size()}, {"mask", mask_base64(mask)},
             {"mask_width", mask.width}, {"mask_height", mask.height}};
    res.set_content(out.dump(), "application/json");
  }
};

Service::Service(Checkpoint<float> checkpoint, ServiceConfig config)
    : impl_(std::make_unique<Impl>(std::move(checkpoint), std::move(config))) {}

Service::~Service() { stop(); }

int Service::bind(int port) {
  if (port == 0) return impl_->server.bind_to_any_port(impl_->config.host);
  return impl_->server.bind_to_port(impl_->config.host, port) ? port : -1;
}

bool Service::serve() { return impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace dgd
