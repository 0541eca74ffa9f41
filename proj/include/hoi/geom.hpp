#pragma once

#include <cmath>
#include <stdexcept>

namespace hoi {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    double norm_xy() const { return std::hypot(x, y); }
    Vec3 normalized() const {
        double n = norm();
        if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
        return *this / n;
    }
    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Unit quaternion, (w, x, y, z).
struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Quat() = default;
    Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

    Quat normalized() const {
        double n = norm();
        if (n < 1e-12) throw std::invalid_argument("cannot normalize zero quaternion");
        return {w / n, x / n, y / n, z / n};
    }

    Quat conjugate() const { return {w, -x, -y, -z}; }

    double dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }

    Quat operator*(const Quat& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }

    Vec3 rotate(const Vec3& v) const {
        // q * (0,v) * q^-1 expanded
        Vec3 u{x, y, z};
        Vec3 t = 2.0 * u.cross(v);
        return v + w * t + u.cross(t);
    }

    static Quat from_axis_angle(const Vec3& axis, double angle) {
        Vec3 a = axis.normalized();
        double h = 0.5 * angle;
        double s = std::sin(h);
        return {std::cos(h), a.x * s, a.y * s, a.z * s};
    }

    static Quat yaw(double angle) {
        return {std::cos(0.5 * angle), 0.0, 0.0, std::sin(0.5 * angle)};
    }
};

// Angle of the relative rotation between two unit quaternions, in [0, pi].
inline double quat_angle(const Quat& a, const Quat& b) {
    double d = std::fabs(a.dot(b));
    if (d > 1.0) d = 1.0;
    return 2.0 * std::acos(d);
}

// Shortest-arc spherical linear interpolation between unit quaternions.
inline Quat slerp(const Quat& a, Quat b, double t) {
    if (a.norm() < 1e-12 || b.norm() < 1e-12)
        throw std::invalid_argument("slerp requires nonzero quaternions");
    double d = a.dot(b);
    if (d < 0.0) {  // keep to the same hemisphere
        b = {-b.w, -b.x, -b.y, -b.z};
        d = -d;
    }
    if (d > 1.0) d = 1.0;
    double theta = std::acos(d);
    if (theta < 1e-10) {
        Quat r{a.w + t * (b.w - a.w), a.x + t * (b.x - a.x),
               a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)};
        return r.normalized();
    }
    double s = std::sin(theta);
    double fa = std::sin((1.0 - t) * theta) / s;
    double fb = std::sin(t * theta) / s;
    return {fa * a.w + fb * b.w, fa * a.x + fb * b.x,
            fa * a.y + fb * b.y, fa * a.z + fb * b.z};
}

// Euler angles in radians together with the equivalent unit quaternion.
// Convention: intrinsic XYZ, i.e. R = Rx(rx) * Ry(ry) * Rz(rz).
struct Orientation {
    double rx = 0.0;
    double ry = 0.0;
    double rz = 0.0;
    Quat quat;

    Orientation() = default;
    Orientation(double rx_, double ry_, double rz_) : rx(rx_), ry(ry_), rz(rz_) {
        Quat qx{std::cos(0.5 * rx), std::sin(0.5 * rx), 0.0, 0.0};
        Quat qy{std::cos(0.5 * ry), 0.0, std::sin(0.5 * ry), 0.0};
        Quat qz{std::cos(0.5 * rz), 0.0, 0.0, std::sin(0.5 * rz)};
        quat = (qx * qy * qz).normalized();
    }

    double yaw() const { return rz; }
};

// Column-major-free 3x3 rotation matrix as three world-frame axis vectors.
struct Mat3 {
    Vec3 col0, col1, col2;  // images of local x, y, z axes

    static Mat3 from_quat(const Quat& q) {
        return {q.rotate({1, 0, 0}), q.rotate({0, 1, 0}), q.rotate({0, 0, 1})};
    }

    Vec3 apply(const Vec3& v) const { return col0 * v.x + col1 * v.y + col2 * v.z; }
};

}  // namespace hoi
