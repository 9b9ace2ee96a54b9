#pragma once

#include <functional>
#include <iostream>
#include <string>

namespace avse::log {

using Sink = std::function<void(const std::string&)>;

inline Sink& warning_sink() {
  static Sink sink = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  return sink;
}

inline void warn(const std::string& message) {
  if (warning_sink()) warning_sink()(message);
}

// Redirects warnings for the lifetime of the guard.
class ScopedSink {
 public:
  explicit ScopedSink(Sink s) : saved_(std::exchange(warning_sink(), std::move(s))) {}
  ~ScopedSink() { warning_sink() = std::move(saved_); }
  ScopedSink(const ScopedSink&) = delete;
  ScopedSink& operator=(const ScopedSink&) = delete;

 private:
  Sink saved_;
};

}  // namespace avse::log
