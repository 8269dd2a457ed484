#include "epa/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace epa {

std::size_t worker_count() {
  if (const char* env = std::getenv("EPA_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      // fall through to the default
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {
// Nested calls run serially on the calling worker.
thread_local bool inside_worker = false;
}  // namespace

void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = inside_worker ? 1 : std::min(worker_count(), count);
  if (workers <= 1) {
    if (count > 0) body(0, count);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, w, begin, end] {
      inside_worker = true;
      try {
        body(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace epa
