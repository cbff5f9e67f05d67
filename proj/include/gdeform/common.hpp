#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#ifndef GDEFORM_VERSION
#define GDEFORM_VERSION "0.1.0"
#endif

//! Shared infrastructure: error taxonomy, seeding, and a chunked parallel loop.
namespace gdeform {

//! Library version string.
inline const char* version() { return GDEFORM_VERSION; }

//! Raised when user-provided input violates a documented precondition
//! (malformed files, duplicate locations, out-of-range options).
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

//! Raised when a computation fails numerically on valid input
//! (singular systems, non-convergence, degenerate scales).
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

//! Deterministic random engine used everywhere a seed is accepted.
using rng_type = std::mt19937_64;

//! Derives a stream seed from a master seed and a stream index.
//!
//! Uses the splitmix64 finalizer, so distinct (seed, index) pairs map to
//! well-separated engine states and realization r of a simulation can be
//! regenerated without drawing realizations 0..r-1 first.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

//! Formats a double with 17 significant digits, enough for an exact
//! round-trip through text.
inline std::string format_g17(double v) {
  char buf[40];
  int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

//! Parses one double from a token; throws data_error on anything else.
inline double parse_double(std::string_view token) {
  double v = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    throw data_error("invalid number: '" + std::string(token) + "'");
  return v;
}

namespace detail {

inline unsigned resolved_thread_count() {
  if (const char* env = std::getenv("GDEFORM_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

}  // namespace detail

//! Runs body(i) for i in [0, n) across worker threads.
//!
//! Iterations are split into contiguous static chunks, one per worker, so a
//! body that writes only to slot i produces bitwise identical results for any
//! thread count. The GDEFORM_THREADS environment variable overrides the
//! hardware thread count. The first exception thrown by any worker is
//! rethrown on the calling thread.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  unsigned requested = detail::resolved_thread_count();
  std::size_t workers = std::min<std::size_t>(requested, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([&, w, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace gdeform
