// SPDX-License-Identifier: Apache-2.0
#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "umri/mri.hpp"

namespace umri {
namespace {

// FFTW's planner is not re-entrant; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct Plan {
  fftw_complex* buf = nullptr;
  fftw_plan plan = nullptr;

  Plan(std::size_t h, std::size_t w, bool inverse) {
    std::lock_guard lock(planner_mutex());
    buf = fftw_alloc_complex(h * w);
    plan = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), buf, buf, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                            FFTW_ESTIMATE);
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(buf);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
};

Plan& plan_for(std::size_t h, std::size_t w, bool inverse) {
  thread_local std::map<std::tuple<std::size_t, std::size_t, bool>, std::unique_ptr<Plan>> cache;
  auto& slot = cache[{h, w, inverse}];
  if (!slot) slot = std::make_unique<Plan>(h, w, inverse);
  return *slot;
}

}  // namespace

ComplexGrid fft2c(const ComplexGrid& img, bool inverse) {
  const std::size_t H = img.height(), W = img.width();
  if (H == 0 || W == 0) return img;
  Plan& p = plan_for(H, W, inverse);
  auto* buf = reinterpret_cast<cdouble*>(p.buf);

  // ifftshift: buf[i] = img[(i + n/2) mod n]
  const std::size_t sh = H / 2, sw = W / 2;
  for (std::size_t r = 0; r < H; ++r) {
    const std::size_t sr = (r + sh) % H;
    for (std::size_t c = 0; c < W; ++c) buf[r * W + c] = img(sr, (c + sw) % W);
  }
  fftw_execute(p.plan);

  // fftshift: out[i] = buf[(i + n - n/2) mod n]
  const double scale = 1.0 / std::sqrt(static_cast<double>(H * W));
  ComplexGrid out(H, W);
  for (std::size_t r = 0; r < H; ++r) {
    const std::size_t sr = (r + H - sh) % H;
    for (std::size_t c = 0; c < W; ++c) out(r, c) = buf[sr * W + (c + W - sw) % W] * scale;
  }
  return out;
}

}  // namespace umri
