#include "climategs/http_service.hpp"
#include "climategs/synthetic.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <thread>

using namespace climategs;
using nlohmann::json;

namespace {

GaussianScene small_scene() { return generate_synthetic_scene(synthetic_preset("sphere")).scene(); }

RenderRequest small_request(const Session& s, const std::string& passes = "") {
  RenderRequest r;
  r.camera = orbit_camera(s.summary().bounds, 30.0, 25.0, 1.2, 64, 36);
  r.passes = PassSet::parse(passes);
  return r;
}

std::string param_field(Session& s, const json& doc) {
  try {
    s.set_params(doc);
  } catch (const ParamError& e) {
    return e.field();
  }
  return "";
}

std::string style_png_base64() {
  Image img(24, 16);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& p : img.pixels) p = Rgb(0.2 + 0.6 * u(rng), 0.1 + 0.3 * u(rng), 0.4 * u(rng));
  return base64_encode(encode_png(img));
}

}  // namespace

TEST(Base64, KnownVectorsAndRoundTrip) {
  auto enc = [](const std::string& s) {
    return base64_encode({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
  for (const std::string s : {"", "f", "fo", "foo", "foob", "fooba", "foobar"}) EXPECT_EQ(base64_decode(enc(s)), s);
  std::string bytes(1000, '\0');
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = char(i * 37 % 256);
  EXPECT_EQ(base64_decode(enc(bytes)), bytes);
  EXPECT_EQ(base64_decode("Zm9v\nYmFy"), "foobar");
  EXPECT_THROW(base64_decode("abc"), ParamError);
  EXPECT_THROW(base64_decode("@@@@"), ParamError);
}

TEST(Session, RenderNeedsScene) {
  Session s;
  EXPECT_FALSE(s.has_scene());
  RenderRequest r;
  EXPECT_THROW(s.render(r), Error);
  EXPECT_EQ(s.summary().count, 0u);
}

TEST(Session, RejectedParamsLeaveStateUnchanged) {
  Session s;
  s.install(small_scene());
  s.set_params(json::parse(R"({"smog": {"density": 0.2}})"));
  const json before = s.effective_params();
  EXPECT_EQ(param_field(s, json::parse(R"({"smog": {"density": 0.4}, "snow": {"wrap": 3}})")), "snow.wrap");
  EXPECT_EQ(param_field(s, json::parse(R"({"style": {"preset": "neon"}})")), "style.preset");
  EXPECT_EQ(param_field(s, json::parse(R"({"smog": {"density": 0.4}, "fog": 1})")), "fog");
  EXPECT_EQ(param_field(s, json::parse(R"({"reset": "yes"})")), "reset");
  EXPECT_EQ(param_field(s, json::parse(R"({"style": {"image_png_base64": "AAAA"}})")), "style.image_png_base64");
  EXPECT_EQ(param_field(s, json::parse(R"({"style": {"transform": {"matrix": [1]}}})")), "style.transform");
  EXPECT_EQ(param_field(s, json::array()), "params");
  EXPECT_EQ(s.effective_params(), before);
}

TEST(Session, IdempotentUpdatesAndIncreasingFrameIds) {
  Session s;
  s.install(small_scene());
  const json doc = json::parse(R"({"smog": {"density": 0.1}, "water": {"level": 0.3}})");
  const json once = s.set_params(doc);
  const json twice = s.set_params(doc);
  EXPECT_EQ(once, twice);
  const auto a = s.render(small_request(s, "flood,smog"));
  const auto b = s.render(small_request(s, "flood,smog"));
  EXPECT_EQ(a.png, b.png);
  EXPECT_LT(a.frame_id, b.frame_id);
  EXPECT_EQ(s.last_frame_id(), b.frame_id);
  const Image img = decode_png(a.png.data(), a.png.size());
  EXPECT_EQ(img.width, 64);
  EXPECT_EQ(img.height, 36);
}

TEST(Session, SnowCacheFollowsPlacementFields) {
  Session s;
  s.install(small_scene());
  s.set_params(json::parse(R"({"snow": {"thickness": 0.1, "grid_spacing": 0.25}})"));
  auto r = s.render(small_request(s, "snow"));
  EXPECT_FALSE(r.snow_cache_hit);
  r = s.render(small_request(s, "snow"));
  EXPECT_TRUE(r.snow_cache_hit);
  s.set_params(json::parse(R"({"snow": {"thickness": 0.2}})"));
  r = s.render(small_request(s, "snow"));
  EXPECT_FALSE(r.snow_cache_hit);
  s.set_params(json::parse(R"({"snow": {"thickness": 0.1}})"));
  r = s.render(small_request(s, "snow"));
  EXPECT_TRUE(r.snow_cache_hit);
  // Lighting does not move the Gaussians.
  s.set_params(json::parse(R"({"snow": {"wrap": 0.9}})"));
  r = s.render(small_request(s, "snow"));
  EXPECT_TRUE(r.snow_cache_hit);
  EXPECT_EQ(s.snow_cache_misses(), 2u);
  EXPECT_EQ(s.snow_cache_hits(), 3u);
  // Without the snow pass the cache is not consulted.
  s.render(small_request(s, "smog"));
  EXPECT_EQ(s.snow_cache_hits() + s.snow_cache_misses(), 5u);
  // A new scene drops the cache.
  s.install(small_scene());
  r = s.render(small_request(s, "snow"));
  EXPECT_FALSE(r.snow_cache_hit);
}

TEST(Session, StylesAndReset) {
  Session s;
  s.install(small_scene());
  const auto plain = s.render(small_request(s, "style"));
  auto eff = s.set_params(json::parse(R"({"style": {"preset": "sepia"}})"));
  EXPECT_EQ(eff["style"]["name"], "sepia");
  const auto sepia = s.render(small_request(s, "style"));
  EXPECT_NE(sepia.png, plain.png);
  // The style pass must be requested for the transform to apply.
  EXPECT_EQ(s.render(small_request(s)).png, plain.png);

  eff = s.set_params(json{{"style", {{"image_png_base64", style_png_base64()}}}});
  EXPECT_EQ(eff["style"]["name"], "image");
  EXPECT_TRUE(eff["style"].contains("matrix") || eff["style"].contains("P"));

  eff = s.set_params(json{{"style", {{"transform", {{"matrix", {2, 0, 0, 0, 1, 0, 0, 0, 1}}, {"bias", {0, 0, 0}}}}}}});
  EXPECT_EQ(eff["style"]["name"], "custom");

  eff = s.set_params(json::parse(R"({"style": null})"));
  EXPECT_TRUE(eff["style"].is_null());

  s.set_params(json::parse(R"({"smog": {"density": 0.3}, "style": {"preset": "warm"}})"));
  eff = s.set_params(json::parse(R"({"reset": true})"));
  EXPECT_EQ(eff["smog"]["density"], 0.0);
  EXPECT_TRUE(eff["style"].is_null());
  // Reset then new values in one document: the values win.
  eff = s.set_params(json::parse(R"({"reset": true, "smog": {"density": 0.2}})"));
  EXPECT_EQ(eff["smog"]["density"], 0.2);
  for (const auto& [name, _] : style_presets()) EXPECT_NO_THROW(s.set_params(json{{"style", {{"preset", name}}}}));
}

TEST(RenderRequestParsing, FieldsAndErrors) {
  SceneSummary sc;
  sc.bounds.extend(Vec3(-1, 0, -1));
  sc.bounds.extend(Vec3(1, 1, 1));
  auto r = parse_render_request(json::parse(R"({"passes": ["smog", "snow"], "time": 1.5, "width": 32, "height": 20})"), sc);
  EXPECT_TRUE(r.passes.smog && r.passes.snow);
  EXPECT_EQ(r.time, 1.5);
  EXPECT_EQ(r.camera.width, 32);
  r = parse_render_request(json::parse(R"({"camera": {"eye": [0, 2, -5], "target": [0, 0, 0]}})"), sc);
  EXPECT_NEAR((r.camera.position() - Vec3(0, 2, -5)).norm(), 0.0, 1e-9);
  auto field = [&](const char* text) {
    try {
      parse_render_request(json::parse(text), sc);
    } catch (const ParamError& e) {
      return e.field();
    }
    return std::string();
  };
  EXPECT_EQ(field(R"({"time": -1})"), "time");
  EXPECT_EQ(field(R"({"passes": ["rain"]})"), "passes");
  EXPECT_EQ(field(R"({"width": 0})"), "width");
  EXPECT_EQ(field(R"({"zoom": 2})"), "zoom");
  EXPECT_EQ(field(R"({"camera": {"azimuth": 0, "elevation": 95}})"), "camera.elevation");
}

class HttpService : public ::testing::Test {
 protected:
  void SetUp() override {
    register_routes(server, session);
    port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(60, 0);
  }
  void TearDown() override {
    server.stop();
    if (thread.joinable()) thread.join();
  }
  void load_scene() {
    std::ostringstream out;
    write_scene(out, small_scene());
    const auto res = client->Post("/scene", out.str(), "application/octet-stream");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200) << res->body;
  }
  static json body(const httplib::Result& res) { return json::parse(res->body); }

  Session session;
  httplib::Server server;
  int port = 0;
  std::thread thread;
  std::unique_ptr<httplib::Client> client;
};

TEST_F(HttpService, HealthAndSceneLoading) {
  auto res = client->Get("/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(body(res)["status"], "ok");
  EXPECT_EQ(body(res)["scene_loaded"], false);

  res = client->Post("/render", "{}", "application/json");
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(body(res)["error"]["code"], "render_failed");

  res = client->Post("/scene", "not a ply", "application/octet-stream");
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(body(res)["error"]["code"], "load_failed");
  res = client->Post("/scene", R"({"path": "/nonexistent/scene.ply"})", "application/json");
  EXPECT_EQ(res->status, 422);
  res = client->Post("/scene", R"({"file": 1})", "application/json");
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(body(res)["error"]["field"], "path");

  load_scene();
  EXPECT_EQ(body(client->Get("/health"))["scene_loaded"], true);
  const std::string path = ::testing::TempDir() + "http_service_scene.ply";
  save_scene(small_scene(), path);
  res = client->Post("/scene", json{{"path", path}}.dump(), "application/json");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(body(res)["count"], small_scene().size());
  EXPECT_TRUE(body(res)["bounds"].is_object());
  std::remove(path.c_str());
}

TEST_F(HttpService, ParamsRoundTripAndRejection) {
  load_scene();
  auto res = client->Get("/params");
  ASSERT_EQ(res->status, 200);
  const json initial = body(res);
  EXPECT_TRUE(initial["capabilities"]["style_presets"].is_array());
  EXPECT_EQ(initial["capabilities"]["pass_order"], json({"style", "snow", "flood", "smog"}));

  res = client->Post("/params", R"({"smog": {"density": 0.25}, "water": {"level": 0.5}})", "application/json");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(body(res)["params"]["smog"]["density"], 0.25);

  res = client->Post("/params", R"({"smog": {"density": 0.4}, "snow": {"thickness": -1}})", "application/json");
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(body(res)["error"]["code"], "invalid_param");
  EXPECT_EQ(body(res)["error"]["field"], "snow.thickness");
  EXPECT_EQ(body(client->Get("/params"))["params"]["smog"]["density"], 0.25);

  res = client->Post("/params", "{broken", "application/json");
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(body(res)["error"]["code"], "bad_json");
}

TEST_F(HttpService, RenderPngAndJson) {
  load_scene();
  auto res = client->Post("/render", R"({"width": 48, "height": 27, "passes": ["smog"]})", "application/json");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  const auto first_id = std::stoull(res->get_header_value("X-Frame-Id"));
  EXPECT_TRUE(json::parse(res->get_header_value("X-Timing")).contains("total_ms"));
  const Image img = decode_png(reinterpret_cast<const std::uint8_t*>(res->body.data()), res->body.size());
  EXPECT_EQ(img.width, 48);
  EXPECT_EQ(img.height, 27);

  res = client->Post("/render?format=json", R"({"width": 48, "height": 27, "passes": ["smog"]})", "application/json");
  ASSERT_EQ(res->status, 200);
  const json frame = body(res);
  EXPECT_GT(frame["frame_id"].get<std::uint64_t>(), first_id);
  const std::string png = base64_decode(frame["png_base64"].get<std::string>());
  EXPECT_EQ(decode_png(reinterpret_cast<const std::uint8_t*>(png.data()), png.size()).width, 48);
  EXPECT_TRUE(frame["timings"].contains("smog_ms"));

  res = client->Post("/render", R"({"passes": ["rain"]})", "application/json");
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(body(res)["error"]["field"], "passes");
  res = client->Post("/render", R"({"camera": {"eye": [0, 0, 0], "target": [0, 0, 0]}})", "application/json");
  EXPECT_EQ(res->status, 400);
}

TEST_F(HttpService, StreamDeliversOrderedFrames) {
  load_scene();
  std::string stream;
  auto res = client->Get("/stream?frames=3&width=32&height=18&passes=smog",
                         [&](const char* data, std::size_t n) {
                           stream.append(data, n);
                           return true;
                         });
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "text/event-stream");
  std::vector<std::string> events;
  std::vector<std::uint64_t> ids;
  std::istringstream in(stream);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("event: ", 0) == 0) events.push_back(line.substr(7));
    if (line.rfind("data: ", 0) == 0 && events.back() == "frame") {
      const json f = json::parse(line.substr(6));
      ids.push_back(f["frame_id"].get<std::uint64_t>());
      EXPECT_EQ(f["width"], 32);
    }
  }
  EXPECT_EQ(events, (std::vector<std::string>{"frame", "frame", "frame", "end"}));
  ASSERT_EQ(ids.size(), 3u);
  EXPECT_LT(ids[0], ids[1]);
  EXPECT_LT(ids[1], ids[2]);

  res = client->Get("/stream?mode=spiral");
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(body(res)["error"]["field"], "mode");
  res = client->Get("/stream?frames=abc");
  EXPECT_EQ(res->status, 400);
}
