#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace gqpp {

using WarningSink = std::function<void(std::string_view)>;

/// Emits a warning through the installed sink (stderr by default).
void warn(std::string_view message);

/// Emits `message` only the first time it is seen by the current sink.
void warn_once(std::string_view message);

/// Replaces the warning sink and returns the previous one. An empty sink
/// silences warnings.
WarningSink set_warning_sink(WarningSink sink);

/// RAII capture of warnings, used by tests and the Python bindings.
class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
  WarningSink previous_;
};

}  // namespace gqpp
