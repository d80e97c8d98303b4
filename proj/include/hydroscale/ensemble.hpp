#ifndef HYDROSCALE_ENSEMBLE_HPP
#define HYDROSCALE_ENSEMBLE_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <type_traits>
#include <vector>

namespace hydroscale
{

/**
 * Evaluates fn(r) for r = 0..count-1 on up to `threads` workers and returns
 * the results indexed by replicate, so aggregation order never depends on
 * scheduling. The first exception thrown by any replicate is rethrown.
 */
template<typename Fn>
auto run_replicates(std::uint64_t count, unsigned threads, Fn&& fn)
  -> std::vector<std::invoke_result_t<Fn&, std::uint64_t>>
{
  using Result = std::invoke_result_t<Fn&, std::uint64_t>;
  std::vector<Result> out(count);
  if (count == 0) return out;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, count));

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto worker = [&]() {
    while (true) {
      const std::uint64_t r = next.fetch_add(1);
      if (r >= count) return;
      try {
        out[r] = fn(r);
      } catch (...) {
        std::lock_guard<std::mutex> g(failure_lock);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

struct SampleStats
{
  double mean = 0.0;
  double sd = 0.0;      // sample standard deviation (n - 1)
  double std_error = 0.0;  // sd / sqrt(n)
  std::size_t count = 0;
};

/// Accumulated in index order.
inline SampleStats summarize(const std::vector<double>& xs)
{
  SampleStats s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double acc = 0.0;
  for (double x : xs) acc += x;
  s.mean = acc / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double sq = 0.0;
    for (double x : xs) sq += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(sq / static_cast<double>(xs.size() - 1));
    s.std_error = s.sd / std::sqrt(static_cast<double>(xs.size()));
  }
  return s;
}

}  // namespace hydroscale

#endif  // HYDROSCALE_ENSEMBLE_HPP
