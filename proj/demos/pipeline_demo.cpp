// End-to-end library walkthrough: generate a synthetic session, ingest it
// through the monitor into the vector store and answer the evaluation
// question with the fake backends. Everything runs in memory.

#include <iostream>
#include <variant>

#include "xar/embedder.hpp"
#include "xar/path_monitor.hpp"
#include "xar/perception.hpp"
#include "xar/rag.hpp"
#include "xar/scenario.hpp"
#include "xar/vector_store.hpp"

int main() {
  using namespace xar;

  const std::vector<SessionEvent> session = generate();
  std::cout << "generated session with " << session.size() << " events\n";

  PathMonitor monitor;
  std::vector<FrameRecord> frames;
  std::vector<LogRecord> logs;
  CaptionBackendConfig caption_cfg;  // fake: echoes the frame's caption hint

  for (const SessionEvent& event : session) {
    if (const auto* rec = std::get_if<LogRecord>(&event)) {
      logs.push_back(*rec);
    } else if (const auto* frame = std::get_if<FrameRecord>(&event)) {
      frames.push_back(*frame);
    } else if (auto dev = monitor.observe_plan(std::get<PlanSnapshot>(event), frames)) {
      std::cout << "deviation at t=" << dev->t << ": " << dev->old_length << " m -> "
                << dev->new_length << " m\n";
      for (LogRecord& injected : inject_event_logs(*dev, caption(*dev->frame, caption_cfg))) {
        logs.push_back(std::move(injected));
      }
    }
  }

  VectorStore store;
  Embedder embedder;  // fake: deterministic feature hashing
  for (const LogRecord& record : logs) store.add(record, embedder.embed(record.msg));
  std::cout << "knowledge base holds " << store.size() << " documents\n\n";

  const std::string question =
      "Pay attention to camera logs. Did the robot encounter any obstacles during "
      "navigation? What type of obstacle?";
  const ExplanationResult result = answer(question, store, RagConfig{}, embedder);

  std::cout << "Q: " << question << "\n\n" << result.prompt << "\n\nA: " << result.answer
            << "\n";
  return 0;
}
