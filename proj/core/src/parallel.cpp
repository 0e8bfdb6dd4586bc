#include "dgd/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <thread>
#include <vector>

namespace dgd {

std::size_t default_thread_count() {
  if (const char* env = std::getenv("DGD_THREADS"); env != nullptr) {
    std::size_t value = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec == std::errc{} && ptr == end && value > 0) return value;
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::size_t chunk_count(std::size_t count, std::size_t threads) {
  if (count == 0) return 0;
  return std::clamp<std::size_t>(threads, 1, count);
}

void parallel_chunks(std::size_t count, std::size_t threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
  const std::size_t chunks = chunk_count(count, threads);
  if (chunks == 0) return;
  const auto bounds = [&](std::size_t c) { return count * c / chunks; };
  if (chunks == 1) {
    body(0, count, 0);
    return;
  }

  std::vector<std::exception_ptr> errors(chunks);
  std::vector<std::thread> workers;
  workers.reserve(chunks - 1);
  for (std::size_t c = 1; c < chunks; ++c) {
    workers.emplace_back([&, c] {
      try {
        body(bounds(c), bounds(c + 1), c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  try {
    body(bounds(0), bounds(1), 0);
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace dgd
