#include "gqpp/log.hpp"

#include <iostream>
#include <mutex>
#include <set>
#include <string>

namespace gqpp {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

std::set<std::string, std::less<>>& seen() {
  static std::set<std::string, std::less<>> s;
  return s;
}

}  // namespace

void warn_once(std::string_view message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (!seen().emplace(message).second) return;
  if (sink()) sink()(message);
}

void warn(std::string_view message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (sink()) sink()(message);
}

WarningSink set_warning_sink(WarningSink s) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  std::swap(sink(), s);
  seen().clear();
  return s;
}

WarningCapture::WarningCapture()
    : previous_(set_warning_sink([this](std::string_view msg) { messages_.emplace_back(msg); })) {}

WarningCapture::~WarningCapture() { set_warning_sink(std::move(previous_)); }

}  // namespace gqpp
