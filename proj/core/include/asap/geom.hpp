#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace asap {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Unit quaternion, stored normalized with w >= 0.
class Quaternion {
 public:
  // Identity rotation.
  Quaternion() = default;

  // Normalizes the given components. Throws ValidationError on a zero or
  // non-finite input.
  static Quaternion normalized(double w, double x, double y, double z);

  // Accepts components that are already unit length within `tolerance`,
  // otherwise throws ValidationError("unnormalized quaternion").
  static Quaternion unit(double w, double x, double y, double z,
                         double tolerance = 1e-6);

  // Rotation of `angle` radians about +z.
  static Quaternion from_yaw(double angle);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  double dot(const Quaternion& o) const {
    return w_ * o.w_ + x_ * o.x_ + y_ * o.y_ + z_ * o.z_;
  }

  // Heading about +z, in (-pi, pi].
  double yaw() const;

  // Angle of the relative rotation between the two, in [0, pi].
  double angle_to(const Quaternion& o) const;

  std::array<double, 4> wxyz() const { return {w_, x_, y_, z_}; }

  friend bool operator==(const Quaternion&, const Quaternion&) = default;

 private:
  Quaternion(double w, double x, double y, double z)
      : w_(w), x_(x), y_(y), z_(z) {}

  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

// Oriented rectangle on the ground plane. `length` runs along the heading,
// `width` across it.
struct BevRect {
  double center_x = 0.0;
  double center_y = 0.0;
  double width = 1.0;
  double length = 1.0;
  double yaw = 0.0;

  // Corners in counter-clockwise order.
  std::array<Vec2, 4> corners() const;
};

// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

// Linear interpolation of a position between two timed samples. Times may be
// in any unit as long as all three agree.
//   t_s == t_e            -> ValidationError("zero-length interval")
//   t outside [t_s, t_e]  -> ValidationError("extrapolation refused")
Vec3 lerp_translation(const Vec3& tr_s, const Vec3& tr_e, double t_s,
                      double t_e, double t);

// Shortest-arc spherical interpolation; u is the fraction elapsed from q_s,
// so u = 0 gives q_s and u = 1 gives q_e. Falls back to normalized lerp for
// arcs below 1e-6 rad.
Quaternion slerp(const Quaternion& q_s, const Quaternion& q_e, double u);

// Intersection over union of two rotated rectangles, by convex clipping.
double bev_iou(const BevRect& a, const BevRect& b);

// Planar distance between two centers; z is ignored.
double center_distance(const Vec3& a, const Vec3& b);

// Area of a simple polygon (shoelace), positive for counter-clockwise order.
double polygon_area(const std::vector<Vec2>& poly);

// Intersection polygon of two convex counter-clockwise polygons.
std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject,
                              const std::vector<Vec2>& clip);

}  // namespace asap
