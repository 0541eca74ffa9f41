#include "hoi/traj.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace hoi {

void ControlTrack::validate() const {
    if (waypoints.size() < 2)
        throw std::invalid_argument("track needs at least 2 waypoints: " + joint_or_object);
    for (size_t i = 1; i < waypoints.size(); ++i)
        if (waypoints[i].frame <= waypoints[i - 1].frame)
            throw std::invalid_argument("track frames must be strictly increasing: " +
                                        joint_or_object);
}

double ControlTrack::path_length() const {
    double len = 0.0;
    for (size_t i = 1; i < waypoints.size(); ++i)
        len += (waypoints[i].position - waypoints[i - 1].position).norm();
    return len;
}

namespace {
double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }
}  // namespace

std::vector<double> pchip_derivatives(const std::vector<double>& t,
                                      const std::vector<double>& v) {
    const size_t n = t.size();
    if (n < 2 || v.size() != n)
        throw std::invalid_argument("pchip needs >= 2 matching knots");
    std::vector<double> h(n - 1), delta(n - 1), d(n);
    for (size_t i = 0; i + 1 < n; ++i) {
        h[i] = t[i + 1] - t[i];
        if (h[i] <= 0) throw std::invalid_argument("pchip knots must be increasing");
        delta[i] = (v[i + 1] - v[i]) / h[i];
    }
    if (n == 2) {
        d[0] = d[1] = delta[0];
        return d;
    }
    for (size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            double w1 = 2 * h[i] + h[i - 1];
            double w2 = h[i] + 2 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // Fritsch-Carlson one-sided boundary formula with monotonicity clamp.
    auto edge = [](double h0, double h1, double d0, double d1) {
        double d_ = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (sign(d_) != sign(d0))
            d_ = 0.0;
        else if (sign(d0) != sign(d1) && std::fabs(d_) > 3 * std::fabs(d0))
            d_ = 3 * d0;
        return d_;
    };
    d[0] = edge(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return d;
}

double pchip_eval(const std::vector<double>& t, const std::vector<double>& v,
                  const std::vector<double>& d, double x) {
    size_t n = t.size();
    if (x <= t.front()) return v.front() + d.front() * (x - t.front());
    if (x >= t.back()) return v.back() + d.back() * (x - t.back());
    size_t i = std::upper_bound(t.begin(), t.end(), x) - t.begin() - 1;
    if (i >= n - 1) i = n - 2;
    double h = t[i + 1] - t[i];
    double s = (x - t[i]) / h;
    double s2 = s * s, s3 = s2 * s;
    double h00 = 2 * s3 - 3 * s2 + 1;
    double h10 = s3 - 2 * s2 + s;
    double h01 = -2 * s3 + 3 * s2;
    double h11 = s3 - s2;
    return h00 * v[i] + h10 * h * d[i] + h01 * v[i + 1] + h11 * h * d[i + 1];
}

namespace {

// Piecewise Slerp over the oriented subset of the waypoints; unoriented spans
// inherit the interpolation of their flanking oriented neighbors.
std::vector<Quat> orientation_channel(const ControlTrack& track, int start, int end) {
    std::vector<std::pair<int, Quat>> knots;
    for (const auto& w : track.waypoints)
        if (w.orientation) knots.emplace_back(w.frame, w.orientation->quat);
    std::vector<Quat> out(end - start + 1);
    if (knots.empty()) {
        std::fill(out.begin(), out.end(), Quat{});
        return out;
    }
    for (int f = start; f <= end; ++f) {
        Quat q;
        if (f <= knots.front().first)
            q = knots.front().second;
        else if (f >= knots.back().first)
            q = knots.back().second;
        else {
            size_t i = 0;
            while (knots[i + 1].first < f) ++i;
            double u = double(f - knots[i].first) /
                       double(knots[i + 1].first - knots[i].first);
            q = slerp(knots[i].second, knots[i + 1].second, u);
        }
        out[f - start] = q;
    }
    return out;
}

}  // namespace

DenseTrack pchip_densify(const ControlTrack& track) {
    track.validate();
    const auto& wp = track.waypoints;
    std::vector<double> t(wp.size()), x(wp.size()), y(wp.size()), z(wp.size());
    for (size_t i = 0; i < wp.size(); ++i) {
        t[i] = wp[i].frame;
        x[i] = wp[i].position.x;
        y[i] = wp[i].position.y;
        z[i] = wp[i].position.z;
    }
    auto dx = pchip_derivatives(t, x);
    auto dy = pchip_derivatives(t, y);
    auto dz = pchip_derivatives(t, z);

    DenseTrack out;
    out.start_frame = wp.front().frame;
    int end = wp.back().frame;
    out.positions.reserve(end - out.start_frame + 1);
    for (int f = out.start_frame; f <= end; ++f)
        out.positions.push_back({pchip_eval(t, x, dx, f), pchip_eval(t, y, dy, f),
                                 pchip_eval(t, z, dz, f)});
    // Waypoint frames are exact by construction; overwrite to remove the last
    // few ulps of Hermite evaluation error.
    for (const auto& w : wp) out.positions[w.frame - out.start_frame] = w.position;
    out.orientations = orientation_channel(track, out.start_frame, end);
    return out;
}

DenseTrack slerp_densify(const ControlTrack& track) {
    track.validate();
    int oriented = 0;
    for (const auto& w : track.waypoints)
        if (w.orientation) ++oriented;
    if (oriented < 2)
        throw std::invalid_argument("slerp_densify needs >= 2 oriented waypoints");
    DenseTrack out;
    out.start_frame = track.waypoints.front().frame;
    int end = track.waypoints.back().frame;
    out.positions.assign(end - out.start_frame + 1, Vec3{});
    out.orientations = orientation_channel(track, out.start_frame, end);
    return out;
}

std::pair<Vec3, Vec3> sample_contact_points(const std::vector<Vec3>& surface,
                                            const std::pair<Vec3, Vec3>& hands) {
    if (surface.empty()) throw std::invalid_argument("empty object surface");
    auto nearest = [&](const Vec3& hand) {
        size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < surface.size(); ++i) {
            double d = (surface[i] - hand).norm();
            if (d < best_d) {  // strict: ties keep the lowest index
                best_d = d;
                best = i;
            }
        }
        return surface[best];
    };
    return {nearest(hands.first), nearest(hands.second)};
}

std::pair<DenseTrack, DenseTrack> hand_tracks_from_object(
    const DenseTrack& object_track, const std::pair<Vec3, Vec3>& contact_local) {
    DenseTrack left, right;
    left.start_frame = right.start_frame = object_track.start_frame;
    size_t n = object_track.positions.size();
    left.positions.resize(n);
    right.positions.resize(n);
    left.orientations = object_track.orientations;
    right.orientations = object_track.orientations;
    for (size_t i = 0; i < n; ++i) {
        const Quat& q = object_track.orientations[i];
        const Vec3& c = object_track.positions[i];
        left.positions[i] = c + q.rotate(contact_local.first);
        right.positions[i] = c + q.rotate(contact_local.second);
    }
    return {left, right};
}

}  // namespace hoi
