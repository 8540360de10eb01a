#include "diffreg/log.hpp"

#include <iostream>
#include <mutex>

namespace diffreg {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

LogSink& sink() {
  static LogSink s = [](LogLevel level, const std::string& msg) {
    std::cerr << (level == LogLevel::warning ? "warning: " : "") << msg << '\n';
  };
  return s;
}

}  // namespace

LogSink set_log_sink(LogSink s) {
  std::lock_guard lock(sink_mutex());
  LogSink previous = std::move(sink());
  sink() = std::move(s);
  return previous;
}

void log_message(LogLevel level, const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(level, message);
}

}  // namespace diffreg
