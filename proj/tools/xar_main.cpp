// xar — explainability pipeline for autonomous-robot sessions.
//
// Subcommands: gen-scenario, ingest, ask, serve. Machine-readable output is a
// single JSON object on stdout; diagnostics go to stderr. Exit codes: 0 ok,
// 2 input error, 3 backend error, 4 I/O error.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <optional>
#include <string>

#include "xar/app.hpp"
#include "xar/scenario.hpp"

namespace {

xar::AskService* g_service = nullptr;

void handle_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

struct GlobalFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> store_path;
  std::optional<std::string> backend;
  std::optional<std::string> embed_url;
  std::optional<std::string> vlm_url;
  std::optional<std::string> llm_url;
};

xar::AppConfig resolve_config(const GlobalFlags& flags) {
  xar::AppConfig cfg = xar::load_app_config(flags.config_path);
  if (flags.store_path) cfg.store_path = *flags.store_path;
  if (flags.backend) {
    auto mode = xar::parse_backend_mode(*flags.backend);
    if (!mode) throw xar::ConfigError("--backend must be \"fake\" or \"http\"");
    cfg.embed.mode = *mode;
    cfg.caption.mode = *mode;
    cfg.rag.llm.mode = *mode;
  }
  if (flags.embed_url) cfg.embed.endpoint_url = *flags.embed_url;
  if (flags.vlm_url) cfg.caption.endpoint_url = *flags.vlm_url;
  if (flags.llm_url) cfg.rag.llm.endpoint_url = *flags.llm_url;
  return cfg;
}

bool parse_point(const std::string& text, xar::Point& out) {
  const std::size_t comma = text.find(',');
  if (comma == std::string::npos) return false;
  try {
    std::size_t used = 0;
    const std::string xs = text.substr(0, comma);
    const std::string ys = text.substr(comma + 1);
    out.x = std::stod(xs, &used);
    if (used != xs.size()) return false;
    out.y = std::stod(ys, &used);
    if (used != ys.size()) return false;
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

void add_point_option(CLI::App* cmd, const std::string& name, xar::Point& target,
                      const std::string& description) {
  cmd->add_option_function<std::string>(
         name,
         [&target, name](const std::string& value) {
           if (!parse_point(value, target)) {
             throw CLI::ValidationError(name + ": expected \"x,y\"");
           }
         },
         description)
      ->expected(1);
}

void print_json_line(const nlohmann::ordered_json& j) { std::cout << j.dump() << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"explainability pipeline for autonomous-robot sessions"};
  app.require_subcommand(1);
  app.fallthrough();  // let global flags appear after the subcommand

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "JSON config file");
  app.add_option("--store", flags.store_path, "knowledge-base file path");
  app.add_option("--backend", flags.backend, "backend mode for embed/caption/LLM (fake|http)");
  app.add_option("--embed-url", flags.embed_url, "embedding backend base URL");
  app.add_option("--vlm-url", flags.vlm_url, "caption backend base URL");
  app.add_option("--llm-url", flags.llm_url, "LLM backend base URL");

  // gen-scenario
  auto* gen = app.add_subcommand("gen-scenario", "Write a synthetic obstacle-replan session");
  xar::ScenarioConfig scenario;
  std::string out_path;
  add_point_option(gen, "--start", scenario.start, "start point \"x,y\" (default 0,0)");
  add_point_option(gen, "--goal", scenario.goal, "goal point \"x,y\" (default 10,0)");
  add_point_option(gen, "--detour-apex", scenario.detour_apex,
                   "replanned detour apex \"x,y\" (default 5,2)");
  gen->add_option("--obstacle-time", scenario.obstacle_time,
                  "seconds at which the plan is replanned");
  gen->add_option("--frame-period", scenario.frame_period, "camera frame period in seconds");
  gen->add_option("--caption-hint", scenario.caption_hint,
                  "caption the fake VLM backend returns for each frame");
  gen->add_option("--out", out_path, "output session file, or - for stdout")->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Ingest a session file into the knowledge base");
  std::string session_path;
  ingest->add_option("session", session_path, "session file (JSON Lines)")->required();

  // ask
  auto* ask = app.add_subcommand("ask", "Answer a question against the knowledge base");
  std::string question;
  std::optional<std::size_t> ask_k;
  ask->add_option("question", question, "the question to answer")->required();
  ask->add_option("--k", ask_k, "number of context records to retrieve");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP ask-service");
  std::optional<int> serve_port;
  serve->add_option("--port", serve_port, "listen port (default 8080)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      xar::AppConfig cfg = resolve_config(flags);
      const std::vector<xar::SessionEvent> events = xar::generate(scenario, cfg.monitor);
      const std::string text = xar::write_session(events);
      if (out_path == "-") {
        std::cout << text;
      } else {
        xar::detail::write_text_file(out_path, text);
        nlohmann::ordered_json j;
        j["events"] = events.size();
        j["out"] = out_path;
        print_json_line(j);
      }
    } else if (ingest->parsed()) {
      const xar::AppConfig cfg = resolve_config(flags);
      print_json_line(xar::to_json(xar::run_ingest(session_path, cfg)));
    } else if (ask->parsed()) {
      xar::AppConfig cfg = resolve_config(flags);
      if (ask_k) cfg.rag.k = *ask_k;
      print_json_line(xar::to_json(xar::run_ask(question, cfg)));
    } else if (serve->parsed()) {
      xar::AppConfig cfg = resolve_config(flags);
      if (serve_port) cfg.port = *serve_port;
      xar::AskService service(cfg);
      g_service = &service;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::cerr << "listening on 0.0.0.0:" << cfg.port << " (" << service.store().size()
                << " documents)\n";
      if (!service.listen("0.0.0.0", cfg.port)) {
        g_service = nullptr;
        std::cerr << "error: cannot bind port " << cfg.port << "\n";
        return 4;
      }
      g_service = nullptr;
    }
  } catch (const xar::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return xar::exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
