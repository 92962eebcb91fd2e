#include "asap/geom.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "asap/error.hpp"

namespace asap {

namespace {

constexpr double kPi = std::numbers::pi;

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Intersection of segment p-q with the infinite line through a-b.
Vec2 line_intersection(const Vec2& p, const Vec2& q, const Vec2& a,
                       const Vec2& b) {
  const double cp = cross(a, b, p);
  const double cq = cross(a, b, q);
  const double s = cp / (cp - cq);
  return {p.x + s * (q.x - p.x), p.y + s * (q.y - p.y)};
}

// Separating-axis test over the edge normals of both rectangles.
bool separated(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b) {
  auto test_axes = [](const std::array<Vec2, 4>& ref,
                      const std::array<Vec2, 4>& other) {
    for (std::size_t i = 0; i < 2; ++i) {
      const Vec2& p0 = ref[i];
      const Vec2& p1 = ref[i + 1];
      const Vec2 axis{-(p1.y - p0.y), p1.x - p0.x};
      double amin = std::numeric_limits<double>::infinity();
      double amax = -amin;
      double bmin = amin;
      double bmax = -amin;
      for (const auto& p : ref) {
        const double d = p.x * axis.x + p.y * axis.y;
        amin = std::min(amin, d);
        amax = std::max(amax, d);
      }
      for (const auto& p : other) {
        const double d = p.x * axis.x + p.y * axis.y;
        bmin = std::min(bmin, d);
        bmax = std::max(bmax, d);
      }
      if (amax <= bmin || bmax <= amin) return true;
    }
    return false;
  };
  return test_axes(a, b) || test_axes(b, a);
}

}  // namespace

Quaternion Quaternion::normalized(double w, double x, double y, double z) {
  if (!(std::isfinite(w) && std::isfinite(x) && std::isfinite(y) &&
        std::isfinite(z))) {
    throw ValidationError("non-finite quaternion");
  }
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (n == 0.0) throw ValidationError("zero quaternion");
  double s = 1.0 / n;
  if (w < 0.0) s = -s;
  return Quaternion(w * s, x * s, y * s, z * s);
}

Quaternion Quaternion::unit(double w, double x, double y, double z,
                            double tolerance) {
  const double n2 = w * w + x * x + y * y + z * z;
  if (!std::isfinite(n2) || std::abs(std::sqrt(n2) - 1.0) > tolerance) {
    throw ValidationError("unnormalized quaternion");
  }
  // Already unit to rounding: keep the exact bits so files round-trip.
  if (std::abs(n2 - 1.0) <= 1e-14) {
    if (w < 0.0) return Quaternion(-w, -x, -y, -z);
    return Quaternion(w, x, y, z);
  }
  return normalized(w, x, y, z);
}

Quaternion Quaternion::from_yaw(double angle) {
  return normalized(std::cos(angle / 2.0), 0.0, 0.0, std::sin(angle / 2.0));
}

double Quaternion::yaw() const {
  const double siny = 2.0 * (w_ * z_ + x_ * y_);
  const double cosy = 1.0 - 2.0 * (y_ * y_ + z_ * z_);
  return wrap_angle(std::atan2(siny, cosy));
}

double Quaternion::angle_to(const Quaternion& o) const {
  const double d = std::clamp(std::abs(dot(o)), 0.0, 1.0);
  return 2.0 * std::acos(d);
}

std::array<Vec2, 4> BevRect::corners() const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double hl = length / 2.0;
  const double hw = width / 2.0;
  const std::array<Vec2, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  std::array<Vec2, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {center_x + c * local[i].x - s * local[i].y,
              center_y + s * local[i].x + c * local[i].y};
  }
  return out;
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Vec3 lerp_translation(const Vec3& tr_s, const Vec3& tr_e, double t_s,
                      double t_e, double t) {
  if (t_s == t_e) throw ValidationError("zero-length interval");
  if (t_s > t_e || t < t_s || t > t_e) {
    throw ValidationError("extrapolation refused");
  }
  if (t == t_s) return tr_s;
  if (t == t_e) return tr_e;
  // Offset form: components that do not move stay bit-identical.
  const double we = (t - t_s) / (t_e - t_s);
  return {tr_s.x + we * (tr_e.x - tr_s.x), tr_s.y + we * (tr_e.y - tr_s.y),
          tr_s.z + we * (tr_e.z - tr_s.z)};
}

Quaternion slerp(const Quaternion& q_s, const Quaternion& q_e, double u) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw ValidationError("slerp fraction outside [0, 1]");
  }
  if (u == 0.0) return q_s;
  if (u == 1.0 || q_s == q_e) return q_e;

  double d = q_s.dot(q_e);
  double sign = 1.0;
  if (d < 0.0) {
    d = -d;
    sign = -1.0;
  }
  d = std::min(d, 1.0);
  const double theta = std::acos(d);

  double ws;
  double we;
  if (theta < 1e-6) {
    ws = 1.0 - u;
    we = u;
  } else {
    const double sin_theta = std::sin(theta);
    ws = std::sin((1.0 - u) * theta) / sin_theta;
    we = std::sin(u * theta) / sin_theta;
  }
  we *= sign;
  return Quaternion::normalized(ws * q_s.w() + we * q_e.w(),
                                ws * q_s.x() + we * q_e.x(),
                                ws * q_s.y() + we * q_e.y(),
                                ws * q_s.z() + we * q_e.z());
}

double polygon_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    acc += p.x * q.y - q.x * p.y;
  }
  return acc / 2.0;
}

std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject,
                              const std::vector<Vec2>& clip) {
  std::vector<Vec2> out = subject;
  for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const Vec2& a = clip[i];
    const Vec2& b = clip[(i + 1) % clip.size()];
    std::vector<Vec2> in = std::move(out);
    out.clear();
    for (std::size_t j = 0; j < in.size(); ++j) {
      const Vec2& p = in[j];
      const Vec2& q = in[(j + 1) % in.size()];
      const bool p_in = cross(a, b, p) >= 0.0;
      const bool q_in = cross(a, b, q) >= 0.0;
      if (p_in) out.push_back(p);
      if (p_in != q_in) out.push_back(line_intersection(p, q, a, b));
    }
  }
  return out;
}

double bev_iou(const BevRect& a, const BevRect& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  if (separated(ca, cb)) return 0.0;

  const std::vector<Vec2> pa(ca.begin(), ca.end());
  const std::vector<Vec2> pb(cb.begin(), cb.end());
  const double inter = std::max(0.0, polygon_area(clip_convex(pa, pb)));
  const double area_a = a.width * a.length;
  const double area_b = b.width * b.length;
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double center_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace asap
