#pragma once

#include <functional>
#include <iostream>
#include <string>
#include <utility>

namespace poslink {

using LogSink = std::function<void(const std::string&)>;

inline LogSink& warning_sink() {
  static LogSink sink = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return sink;
}

inline void set_warning_sink(LogSink sink) { warning_sink() = std::move(sink); }

inline void warn(const std::string& msg) {
  if (warning_sink()) warning_sink()(msg);
}

}  // namespace poslink
