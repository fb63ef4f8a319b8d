#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "test_util.hpp"
#include "xar/perception.hpp"

using namespace xar;
using nlohmann::json;

namespace {

// minimal in-process HTTP server (same shape as the embedder test helper)
class ScopedServer {
 public:
  explicit ScopedServer(std::function<void(httplib::Server&)> setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ScopedServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

FrameRecord hint_frame(double t, std::string hint) {
  return {t, std::nullopt, std::move(hint)};
}

DeviationEvent event_with(double t, double old_len, double new_len) {
  return {t, old_len, new_len, std::nullopt};
}

}  // namespace

TEST_CASE("fake captioner returns the hint verbatim") {
  const CaptionBackendConfig cfg;  // fake by default
  CHECK(caption(hint_frame(2.0, "a person's hand with blue and white stripes"), cfg) ==
        "a person's hand with blue and white stripes");
  CHECK(caption(hint_frame(0.0, "an empty corridor"), cfg) == "an empty corridor");
}

TEST_CASE("fake captioner requires a hint") {
  const FrameRecord frame{2.0, std::string("/tmp/img.png"), std::nullopt};
  CHECK_THROWS_AS(caption(frame, CaptionBackendConfig{}), MissingCaptionHint);
  try {
    caption(frame, CaptionBackendConfig{});
    FAIL("expected MissingCaptionHint");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Backend);
  }
}

TEST_CASE("deviation log matches the reference wording exactly") {
  const LogRecord rec = deviation_log(event_with(2.0, 10.0, 12.47213595499958));
  CHECK(rec.t == 2.0);
  CHECK(rec.level == LogLevel::Warn);
  CHECK(rec.node == "explainability_monitor");
  CHECK(rec.msg ==
        "path length increased from 10.000 m to 12.472 m; possible obstacle, distance to the "
        "goal increasing");
}

TEST_CASE("deviation log rounds, not truncates") {
  CHECK(deviation_log(event_with(0.0, 1.0006, 2.9996)).msg ==
        "path length increased from 1.001 m to 3.000 m; possible obstacle, distance to the goal "
        "increasing");
}

TEST_CASE("caption log carries the prefix and timestamp") {
  const LogRecord rec = caption_log(event_with(2.0, 10.0, 12.5), "a cardboard box");
  CHECK(rec.t == 2.0);
  CHECK(rec.level == LogLevel::Info);
  CHECK(rec.node == "explainability_monitor");
  CHECK(rec.msg == "image-to-text: a cardboard box");
}

TEST_CASE("inject_event_logs yields exactly one WARN and one caption INFO") {
  std::mt19937_64 rng(55021);
  std::uniform_real_distribution<double> len(0.1, 40.0);
  for (int round = 0; round < 100; ++round) {
    const double t = len(rng);
    const auto logs =
        inject_event_logs(event_with(t, len(rng), len(rng)), xar::testing::random_sentence(rng));
    REQUIRE(logs.size() == 2);
    CHECK(logs[0].level == LogLevel::Warn);
    CHECK(logs[1].level == LogLevel::Info);
    CHECK(logs[0].t == t);
    CHECK(logs[1].t == t);
    int caption_count = 0;
    for (const LogRecord& rec : logs) {
      CHECK(rec.node == "explainability_monitor");
      if (rec.msg.rfind("image-to-text: ", 0) == 0) ++caption_count;
    }
    CHECK(caption_count == 1);
  }
}

TEST_CASE("inject_event_logs rejects an empty caption") {
  CHECK_THROWS_AS(inject_event_logs(event_with(1.0, 2.0, 3.0), ""), Error);
}

TEST_CASE("http captioner posts the image and reads the caption") {
  const std::string image_path = "/tmp/xar_test_caption_img.bin";
  const std::string payload = std::string("\x89PNG\r\n\x1a\n", 8) + "fake-bytes\x00\xff";
  {
    std::ofstream out(image_path, std::ios::binary);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }

  json seen;
  ScopedServer server([&seen](httplib::Server& s) {
    s.Post("/caption", [&seen](const httplib::Request& req, httplib::Response& res) {
      seen = json::parse(req.body);
      res.set_content(R"({"caption":"a stack of boxes"})", "application/json");
    });
  });

  CaptionBackendConfig cfg;
  cfg.mode = BackendMode::Http;
  cfg.endpoint_url = server.url();
  cfg.model_name = "vlm-small";
  const FrameRecord frame{2.0, image_path, std::string("unused hint")};
  CHECK(caption(frame, cfg) == "a stack of boxes");

  CHECK(seen.at("model") == "vlm-small");
  CHECK(seen.at("prompt") == "Describe the image concisely.");
  // base64 payload decodes back to the exact file bytes
  const std::string b64 = seen.at("image_base64").get<std::string>();
  CHECK(b64.find('\n') == std::string::npos);
  CHECK(detail::base64_encode(payload) == b64);
}

TEST_CASE("http captioner sends null model when unset and honors a custom prompt") {
  const std::string image_path = "/tmp/xar_test_caption_img2.bin";
  {
    std::ofstream out(image_path, std::ios::binary);
    out << "x";
  }
  json seen;
  ScopedServer server([&seen](httplib::Server& s) {
    s.Post("/caption", [&seen](const httplib::Request& req, httplib::Response& res) {
      seen = json::parse(req.body);
      res.set_content(R"({"caption":"ok"})", "application/json");
    });
  });
  CaptionBackendConfig cfg;
  cfg.mode = BackendMode::Http;
  cfg.endpoint_url = server.url();
  cfg.prompt = "What blocks the robot?";
  CHECK(caption(FrameRecord{0.0, image_path, std::nullopt}, cfg) == "ok");
  CHECK(seen.at("model").is_null());
  CHECK(seen.at("prompt") == "What blocks the robot?");
}

TEST_CASE("http captioner error paths") {
  CaptionBackendConfig cfg;
  cfg.mode = BackendMode::Http;

  SECTION("missing image file") {
    cfg.endpoint_url = "http://127.0.0.1:9";
    CHECK_THROWS_AS(caption(FrameRecord{0.0, std::string("/nonexistent/img.png"), std::nullopt}, cfg),
                    MissingImage);
  }
  SECTION("frame without image_ref") {
    cfg.endpoint_url = "http://127.0.0.1:9";
    CHECK_THROWS_AS(caption(hint_frame(0.0, "hint only"), cfg), MissingImage);
  }

  const std::string image_path = "/tmp/xar_test_caption_img3.bin";
  {
    std::ofstream out(image_path, std::ios::binary);
    out << "img";
  }
  const FrameRecord frame{0.0, image_path, std::nullopt};

  SECTION("unreachable endpoint") {
    cfg.endpoint_url = "http://127.0.0.1:9";
    CHECK_THROWS_AS(caption(frame, cfg), BackendUnavailable);
  }
  SECTION("server error status") {
    ScopedServer server([](httplib::Server& s) {
      s.Post("/caption", [](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content("boom", "text/plain");
      });
    });
    cfg.endpoint_url = server.url();
    CHECK_THROWS_AS(caption(frame, cfg), BackendUnavailable);
  }
  SECTION("empty caption in a well-formed reply") {
    ScopedServer server([](httplib::Server& s) {
      s.Post("/caption", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"caption":""})", "application/json");
      });
    });
    cfg.endpoint_url = server.url();
    CHECK_THROWS_AS(caption(frame, cfg), EmptyCaption);
  }
  SECTION("slow server maps to a timeout") {
    ScopedServer server([](httplib::Server& s) {
      s.Post("/caption", [](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1500));
        res.set_content(R"({"caption":"late"})", "application/json");
      });
    });
    cfg.endpoint_url = server.url();
    cfg.timeout_s = 0.5;
    CHECK_THROWS_AS(caption(frame, cfg), BackendTimeout);
  }
}

TEST_CASE("base64 reference vectors") {
  CHECK(detail::base64_encode("") == "");
  CHECK(detail::base64_encode("f") == "Zg==");
  CHECK(detail::base64_encode("fo") == "Zm8=");
  CHECK(detail::base64_encode("foo") == "Zm9v");
  CHECK(detail::base64_encode("foob") == "Zm9vYg==");
  CHECK(detail::base64_encode("fooba") == "Zm9vYmE=");
  CHECK(detail::base64_encode("foobar") == "Zm9vYmFy");
  CHECK(detail::base64_encode(std::string("\x00\xff\x10", 3)) == "AP8Q");
}
