#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "asap/geom.hpp"

namespace oracle {

inline bool inside(const asap::BevRect& r, double px, double py) {
  const double dx = px - r.center_x;
  const double dy = py - r.center_y;
  const double c = std::cos(r.yaw);
  const double s = std::sin(r.yaw);
  const double along = c * dx + s * dy;
  const double across = -s * dx + c * dy;
  return std::abs(along) <= r.length / 2 && std::abs(across) <= r.width / 2;
}

// Point-sampled IoU over the joint bounding box of both rectangles.
inline double monte_carlo_iou(const asap::BevRect& a, const asap::BevRect& b,
                              int samples, std::mt19937_64& rng) {
  const double ra = std::hypot(a.width, a.length) / 2;
  const double rb = std::hypot(b.width, b.length) / 2;
  const double x0 = std::min(a.center_x - ra, b.center_x - rb);
  const double x1 = std::max(a.center_x + ra, b.center_x + rb);
  const double y0 = std::min(a.center_y - ra, b.center_y - rb);
  const double y1 = std::max(a.center_y + ra, b.center_y + rb);
  std::uniform_real_distribution<double> ux(x0, x1);
  std::uniform_real_distribution<double> uy(y0, y1);
  long in_both = 0;
  long in_any = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = ux(rng);
    const double y = uy(rng);
    const bool ia = inside(a, x, y);
    const bool ib = inside(b, x, y);
    in_both += ia && ib;
    in_any += ia || ib;
  }
  return in_any == 0 ? 0.0 : static_cast<double>(in_both) / in_any;
}

}  // namespace oracle
