#pragma once

#include <string>
#include <utility>
#include <vector>

namespace epu {

// Collects non-fatal messages (skipped records, omitted months, degenerate statistics).
// Operations take an optional pointer; a null sink drops the message.
class Diagnostics {
 public:
  void note(std::string message) { messages_.push_back(std::move(message)); }

  const std::vector<std::string>& messages() const { return messages_; }
  std::size_t size() const { return messages_.size(); }
  bool empty() const { return messages_.empty(); }
  void clear() { messages_.clear(); }

 private:
  std::vector<std::string> messages_;
};

inline void note(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->note(std::move(message));
}

}  // namespace epu
