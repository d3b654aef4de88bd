// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/kernels.hpp"

#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "flowdisagg/errors.hpp"

namespace flowdisagg {

int available_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

BatchGradient::BatchGradient(const NetworkParams& shape, std::size_t windows)
    : per_window_(windows, shape.zeros_like()), losses_(windows) {}

LossBreakdown BatchGradient::reduce(std::span<const LossBreakdown> losses,
                                    std::size_t count,
                                    NetworkParams& grads) const {
  grads.set_zero();
  double l1 = 0.0;
  double l2 = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    grads.add(per_window_[i]);
    l1 += losses[i].loss1;
    l2 += losses[i].loss2;
  }
  const double inv = 1.0 / static_cast<double>(count);
  grads.scale(inv);
  LossBreakdown out;
  out.loss1 = l1 * inv;
  out.loss2 = l2 * inv;
  out.total = out.loss1 + out.loss2;
  return out;
}

LossBreakdown BatchGradient::serial(const NetworkParams& params,
                                    std::span<const ScaledWindow> windows,
                                    LossWeights weights,
                                    NetworkParams& grads) {
  if (windows.empty()) throw ConfigError("batch gradient over zero windows");
  if (windows.size() > per_window_.size()) {
    throw ShapeError("batch larger than the gradient buffers");
  }
  WindowWorkspace ws;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    per_window_[i].set_zero();
    losses_[i] =
        window_gradient(params, windows[i], weights, per_window_[i], ws);
  }
  return reduce(losses_, windows.size(), grads);
}

LossBreakdown BatchGradient::parallel(const NetworkParams& params,
                                      std::span<const ScaledWindow> windows,
                                      LossWeights weights,
                                      NetworkParams& grads, int threads) {
  if (windows.empty()) throw ConfigError("batch gradient over zero windows");
  if (windows.size() > per_window_.size()) {
    throw ShapeError("batch larger than the gradient buffers");
  }
  const auto n = static_cast<long>(windows.size());
  std::exception_ptr error;
  std::mutex error_mutex;
#ifdef _OPENMP
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel num_threads(nt)
#endif
  {
    WindowWorkspace ws;
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (long i = 0; i < n; ++i) {
      try {
        auto& g = per_window_[static_cast<std::size_t>(i)];
        g.set_zero();
        losses_[static_cast<std::size_t>(i)] = window_gradient(
            params, windows[static_cast<std::size_t>(i)], weights, g, ws);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  }
  (void)threads;
  if (error) std::rethrow_exception(error);
  return reduce(losses_, windows.size(), grads);
}

LossBreakdown batch_loss(const NetworkParams& params,
                         std::span<const ScaledWindow> windows,
                         LossWeights weights) {
  if (windows.empty()) throw ConfigError("batch loss over zero windows");
  double l1 = 0.0;
  double l2 = 0.0;
  for (const auto& w : windows) {
    const auto l = window_loss(params, w, weights);
    l1 += l.loss1;
    l2 += l.loss2;
  }
  const double inv = 1.0 / static_cast<double>(windows.size());
  LossBreakdown out;
  out.loss1 = l1 * inv;
  out.loss2 = l2 * inv;
  out.total = out.loss1 + out.loss2;
  return out;
}

std::vector<DisaggResult> disaggregate_serial(
    const DisaggModel& model, std::span<const FeatureWindow> windows) {
  std::vector<DisaggResult> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(disaggregate_day(model, w));
  return out;
}

std::vector<DisaggResult> disaggregate_parallel(
    const DisaggModel& model, std::span<const FeatureWindow> windows,
    int threads) {
  std::vector<DisaggResult> out(windows.size());
  const auto n = static_cast<long>(windows.size());
  std::exception_ptr error;
  std::mutex error_mutex;
#ifdef _OPENMP
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(nt)
#endif
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          disaggregate_day(model, windows[static_cast<std::size_t>(i)]);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  (void)threads;
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace flowdisagg
