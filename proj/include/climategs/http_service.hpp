#pragma once

// JSON-over-HTTP front of a Session. Routes are documented in docs/service_api.md.

#include "climategs/service.hpp"

#include <httplib.h>

namespace climategs {

namespace detail {

inline void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                       const std::string& field = {}) {
  nlohmann::json err = {{"code", code}, {"message", message}};
  if (!field.empty()) err["field"] = field;
  res.status = status;
  res.set_content(nlohmann::json{{"error", err}}.dump(), "application/json");
}

// Runs a handler and maps library exceptions onto structured error payloads.
template <class F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const ParamError& e) {
    send_error(res, 400, "invalid_param", e.what(), e.field());
  } catch (const LoadError& e) {
    send_error(res, 422, "load_failed", e.what());
  } catch (const nlohmann::json::exception& e) {
    send_error(res, 400, "bad_json", e.what());
  } catch (const Error& e) {
    send_error(res, 409, "render_failed", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

inline nlohmann::json timings_json(const RenderResult& r) {
  return {{"style_ms", r.timings.style_ms}, {"raster_ms", r.timings.raster_ms}, {"snow_ms", r.timings.snow_ms},
          {"flood_ms", r.timings.flood_ms}, {"smog_ms", r.timings.smog_ms}, {"total_ms", r.timings.total_ms},
          {"snow_prep_ms", r.snow_prep_ms}, {"snow_cache_hit", r.snow_cache_hit}};
}

inline nlohmann::json frame_json(const RenderResult& r) {
  return {{"frame_id", r.frame_id}, {"width", r.width},         {"height", r.height},
          {"timings", timings_json(r)}, {"png_base64", base64_encode(r.png)}};
}

}  // namespace detail

/// Parses a render request body: {"camera": {...}, "time": t, "passes": [...], "width": w, "height": h}.
inline RenderRequest parse_render_request(const nlohmann::json& doc, const SceneSummary& scene) {
  if (!doc.is_object()) throw ParamError("request", "expected an object");
  int width = 640, height = 360;
  RenderRequest req;
  nlohmann::json cam = {{"azimuth", 30.0}, {"elevation", 25.0}};
  for (const auto& [k, v] : doc.items()) {
    if (k == "camera") cam = v;
    else if (k == "time") {
      if (!v.is_number() || !(v.get<double>() >= 0.0)) throw ParamError("time", "must be a number >= 0");
      req.time = v.get<double>();
    } else if (k == "passes") {
      if (!v.is_array()) throw ParamError("passes", "expected an array of pass names");
      for (const auto& p : v) {
        if (!p.is_string()) throw ParamError("passes", "expected an array of pass names");
        req.passes.enable(p.get<std::string>());
      }
    } else if (k == "width" || k == "height") {
      if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > 8192) throw ParamError(k, "must be in 1..8192");
      (k == "width" ? width : height) = v.get<int>();
    } else {
      throw ParamError(k, "unknown key");
    }
  }
  req.camera = camera_from_json(cam, scene.bounds, width, height);
  return req;
}

/// Numeric ranges the viewer binds its controls to.
inline nlohmann::json service_capabilities() {
  nlohmann::json presets = nlohmann::json::array();
  for (const auto& [name, _] : style_presets()) presets.push_back(name);
  return {{"passes", {"style", "snow", "flood", "smog"}},
          {"pass_order", {"style", "snow", "flood", "smog"}},
          {"style_presets", presets},
          {"ranges",
           {{"smog.density", {0.0, 0.5}},
            {"snow.thickness", {0.0, 0.5}},
            {"snow.wrap", {0.0, 1.0}},
            {"water.level", {-10.0, 10.0}},
            {"water.waves[].steepness", {0.0, 1.0}}}}};
}

inline void register_routes(httplib::Server& server, Session& session) {
  using detail::guarded;

  server.Get("/health", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(nlohmann::json{{"status", "ok"},
                                   {"scene_loaded", session.has_scene()},
                                   {"last_frame_id", session.last_frame_id()},
                                   {"workers", worker_count()}}
                        .dump(),
                    "application/json");
  });

  server.Post("/scene", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      SceneSummary s;
      if (req.get_header_value("Content-Type").rfind("application/json", 0) == 0) {
        const auto doc = nlohmann::json::parse(req.body);
        if (!doc.is_object() || !doc.contains("path") || !doc["path"].is_string())
          throw ParamError("path", "expected {\"path\": string}");
        s = session.load_scene_file(doc["path"].get<std::string>());
      } else {
        s = session.load_scene_bytes(req.body);
      }
      res.set_content(s.to_json().dump(), "application/json");
    });
  });

  server.Get("/params", [&](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      res.set_content(nlohmann::json{{"params", session.effective_params()}, {"capabilities", service_capabilities()}}
                          .dump(),
                      "application/json");
    });
  });

  server.Post("/params", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto effective = session.set_params(nlohmann::json::parse(req.body));
      res.set_content(nlohmann::json{{"params", effective}}.dump(), "application/json");
    });
  });

  server.Post("/render", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto doc = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
      if (!session.has_scene()) throw Error("no scene loaded");
      const RenderResult r = session.render(parse_render_request(doc, session.summary()));
      if (req.get_param_value("format") == "json") {
        res.set_content(detail::frame_json(r).dump(), "application/json");
      } else {
        res.set_header("X-Frame-Id", std::to_string(r.frame_id));
        res.set_header("X-Timing", detail::timings_json(r).dump());
        res.set_content(std::string(r.png.begin(), r.png.end()), "image/png");
      }
    });
  });

  // Server-sent frames. Query: frames (0 = until disconnect), mode=orbit|fixed,
  // width, height, passes (comma list), elevation, radius_scale, azimuth, time_step.
  server.Get("/stream", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!session.has_scene()) throw Error("no scene loaded");
      auto number = [&](const char* key, double fallback) {
        if (!req.has_param(key)) return fallback;
        try {
          return std::stod(req.get_param_value(key));
        } catch (const std::exception&) {
          throw ParamError(key, "expected a number");
        }
      };
      const double frames = number("frames", 10);
      if (!(frames >= 0.0)) throw ParamError("frames", "must be >= 0");
      const std::string mode = req.has_param("mode") ? req.get_param_value("mode") : "orbit";
      if (mode != "orbit" && mode != "fixed") throw ParamError("mode", "expected orbit or fixed");
      const int width = int(number("width", 320)), height = int(number("height", 180));
      const double elevation = number("elevation", 25.0), radius = number("radius_scale", 1.2);
      const double azimuth = number("azimuth", 0.0), time_step = number("time_step", 1.0 / 30.0);
      const PassSet passes = PassSet::parse(req.get_param_value("passes"));
      // Captures by value: the provider outlives this handler. The first camera
      // is validated before committing to a streaming response.
      auto request_for = [=, &session](std::size_t i) {
        const double count = frames > 0 ? frames : 36.0;
        const double az = mode == "orbit" ? azimuth + 360.0 * double(i) / count : azimuth;
        RenderRequest r;
        r.camera = camera_from_json({{"azimuth", az}, {"elevation", elevation}, {"radius_scale", radius}},
                                    session.summary().bounds, width, height);
        r.passes = passes;
        r.time = double(i) * time_step;
        return r;
      };
      (void)request_for(0);
      const auto total = std::size_t(frames);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream",
          [&session, request_for, total, index = std::size_t(0)](std::size_t, httplib::DataSink& sink) mutable {
            if (total > 0 && index >= total) {
              const std::string end = "event: end\ndata: {}\n\n";
              sink.write(end.data(), end.size());
              sink.done();
              return true;
            }
            std::string event;
            try {
              const RenderResult r = session.render(request_for(index++));
              event = "event: frame\ndata: " + detail::frame_json(r).dump() + "\n\n";
            } catch (const std::exception& e) {
              event = "event: error\ndata: " + nlohmann::json{{"message", e.what()}}.dump() + "\n\n";
              sink.write(event.data(), event.size());
              sink.done();
              return true;
            }
            return sink.write(event.data(), event.size());
          });
    });
  });
}

}  // namespace climategs
