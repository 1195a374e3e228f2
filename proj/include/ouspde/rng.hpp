#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace ouspde {

/// splitmix64 finalizer; scrambles (seed, id, id) tuples into engine seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic random substream addressed by (seed, a, b).
/// The address alone fixes every draw: the engine is the standard-pinned
/// mt19937_64 and the uniform/normal transforms are spelled out below, so
/// the draw sequence is identical across platforms, standard libraries, and
/// worker counts.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0)
      : engine_(mix64(mix64(mix64(seed) + a) + b)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via the polar method (explicit, library-independent).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double v1, v2, s;
    do {
      v1 = 2.0 * uniform() - 1.0;
      v2 = 2.0 * uniform() - 1.0;
      s = v1 * v1 + v2 * v2;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v2 * f;
    have_spare_ = true;
    return v1 * f;
  }

  /// Uniform integer in [0, n) by rejection-free scaling (n << 2^64).
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Runs fn(0), ..., fn(n_jobs-1) on up to `threads` workers (0 = hardware).
/// Jobs must write results into job-indexed slots; under that discipline the
/// output is identical for every worker count. The first job exception is
/// rethrown on the calling thread.
inline void parallel_jobs(int n_jobs, int threads, const std::function<void(int)>& fn) {
  if (n_jobs <= 0) return;
  int n_workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (n_workers < 1) n_workers = 1;
  if (n_workers > n_jobs) n_workers = n_jobs;

  if (n_workers == 1) {
    for (int j = 0; j < n_jobs; ++j) fn(j);
    return;
  }

  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int j = next.fetch_add(1);
      if (j >= n_jobs) return;
      try {
        fn(j);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ouspde
