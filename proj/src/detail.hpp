#pragma once

// Internal helpers shared by the sensitivity-model solvers.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "drci/distributions.hpp"
#include "drci/dro.hpp"
#include "drci/lp.hpp"

namespace drci::detail {

/// Reweightable sample: outcome values plus the permutation sorting them.
struct WeightedSample {
  std::vector<double> values;
  std::vector<std::size_t> order;   // ascending by value
  std::vector<double> sorted;       // values[order[k]]

  explicit WeightedSample(std::vector<double> v);
};

/// For one prefix of the sorted sample, the extreme target CDF values seen at
/// evaluation points whose cut is exactly that prefix.
struct PrefixRange {
  std::size_t prefix = 0;
  double g_min = 1.0;
  double g_max = 0.0;
};

/// KS evaluation points of F_w against target(. + shift), collapsed by the
/// prefix of the sample they cut. Sorted by prefix.
std::vector<PrefixRange> ks_prefix_ranges(const WeightedSample& sample,
                                          const WeightedEcdf& target,
                                          const ShiftGrid& grid, std::size_t shift_index,
                                          KsMode mode);

/// Adds rows enforcing |F_w(y) - target| <= delta on every evaluation point.
/// Weight k of the sample is LP column `offset + k`; `cap` is the weight
/// upper bound. Returns false when the shift is infeasible on its face.
bool add_ks_rows(LpProblem& lp, std::size_t offset, const WeightedSample& sample,
                 std::span<const PrefixRange> ranges, double delta, double cap);

/// lo <= sum_k coeffs[k] * w_k <= hi as LP rows.
void add_range_rows(LpProblem& lp, std::size_t offset, std::span<const double> coeffs,
                    double lo, double hi);

/// True when `candidate` should replace `incumbent` as the reported optimum:
/// strictly better objective, or a tie broken toward the smaller |shift|.
bool better_candidate(double candidate_obj, double candidate_shift, double incumbent_obj,
                      double incumbent_shift, bool maximize);

unsigned resolve_threads(unsigned requested);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to per-index slots; any exception is rethrown after joining.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  threads = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Fills BoundResult bookkeeping shared by every ATT-style solver.
void finish_att(BoundResult& r, const Dataset& data, std::vector<double> weights,
                double treated_mean);

}  // namespace drci::detail
