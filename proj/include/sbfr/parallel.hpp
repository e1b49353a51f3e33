// parallel.hpp — deterministic block-parallel execution.
//
// Work is split into blocks indexed 0..count-1; each block must be a pure
// function of its index (seed substreams included). Threads race over block
// indices, but callers combine per-block results in index order, so the
// numeric output is bit-identical for any worker count. The worker count is
// capped by the SBFR_THREADS environment variable.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace sbfr {

// Number of workers: programmatic override > SBFR_THREADS > hardware count.
int thread_cap();
// n > 0 forces a cap, n = 0 restores environment-driven behaviour.
void set_thread_cap(int n);

// Fixed block size used when chopping N independent items into blocks, so the
// summation tree never depends on the worker count.
inline constexpr std::size_t kReductionBlock = 1024;

void parallel_blocks(std::size_t count, const std::function<void(std::size_t)>& body);

// Evaluates fn(0..count-1) possibly in parallel and returns results in index
// order. Reduce over the returned vector sequentially for deterministic sums.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, Fn&& fn) {
    std::vector<T> out(count);
    parallel_blocks(count, [&](std::size_t i) { out[i] = fn(i); });
    return out;
}

// Compensated (Neumaier) accumulator; used for the larger Monte Carlo sums.
class KahanSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace sbfr
