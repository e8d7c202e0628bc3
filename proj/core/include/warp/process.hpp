#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

namespace warp {

struct ProcessOutput {
  std::string stdout_text;
  bool timed_out = false;
  // Exit code, or -signal when killed by a signal.
  int exit_status = 0;
};

// Runs argv[0] (PATH lookup) with `input` on stdin and collects stdout.
// The child is killed once `timeout` elapses. Throws SolverSpawnFailure
// when the program cannot be started.
ProcessOutput run_process(const std::vector<std::string>& argv, std::string_view input,
                          std::chrono::milliseconds timeout);

// Process-wide cap on concurrently running children. A holder blocks
// until fewer than `limit` children are active.
class ChildSlot {
 public:
  explicit ChildSlot(std::size_t limit);
  ~ChildSlot();
  ChildSlot(const ChildSlot&) = delete;
  ChildSlot& operator=(const ChildSlot&) = delete;

  static std::size_t active();
};

}  // namespace warp
