// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "flowdisagg/disagg.hpp"

namespace flowdisagg {

/// Mean loss and gradient over a batch of windows.
///
/// Every window's gradient is computed into its own zeroed buffer and the
/// buffers are summed in window order, so the serial and OpenMP paths produce
/// bit-identical results regardless of thread count. Buffers are kept between
/// calls; construct once per training run.
class BatchGradient {
 public:
  BatchGradient(const NetworkParams& shape, std::size_t windows);

  /// Reference implementation: one window at a time on the calling thread.
  LossBreakdown serial(const NetworkParams& params,
                       std::span<const ScaledWindow> windows,
                       LossWeights weights, NetworkParams& grads);

  /// Windows distributed across OpenMP threads (0 = runtime default).
  LossBreakdown parallel(const NetworkParams& params,
                         std::span<const ScaledWindow> windows,
                         LossWeights weights, NetworkParams& grads,
                         int threads = 0);

 private:
  LossBreakdown reduce(std::span<const LossBreakdown> losses,
                       std::size_t count, NetworkParams& grads) const;

  std::vector<NetworkParams> per_window_;
  std::vector<LossBreakdown> losses_;
};

/// Mean loss without gradients.
LossBreakdown batch_loss(const NetworkParams& params,
                         std::span<const ScaledWindow> windows,
                         LossWeights weights);

/// disaggregate_day over each window, in order.
std::vector<DisaggResult> disaggregate_serial(
    const DisaggModel& model, std::span<const FeatureWindow> windows);

/// Same output as disaggregate_serial; days run concurrently.
std::vector<DisaggResult> disaggregate_parallel(
    const DisaggModel& model, std::span<const FeatureWindow> windows,
    int threads = 0);

/// Number of threads OpenMP would use (1 when built without OpenMP).
int available_threads() noexcept;

}  // namespace flowdisagg
