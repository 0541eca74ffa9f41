#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hoi/geom.hpp"

namespace hoi {

struct Waypoint {
    int frame = 0;
    Vec3 position;
    std::optional<Orientation> orientation;
};

struct ControlTrack {
    std::string joint_or_object;
    std::vector<Waypoint> waypoints;

    void validate() const;  // frames strictly increasing, >= 2 waypoints
    double path_length() const;
};

struct DenseTrack {
    int start_frame = 0;
    std::vector<Vec3> positions;      // one entry per frame
    std::vector<Quat> orientations;   // same length as positions

    int end_frame() const { return start_frame + static_cast<int>(positions.size()) - 1; }
    const Vec3& position_at(int frame) const { return positions.at(frame - start_frame); }
    const Quat& orientation_at(int frame) const { return orientations.at(frame - start_frame); }
};

// Per-axis monotone cubic Hermite interpolation (Fritsch-Carlson limiting).
// Orientation channel is filled by piecewise Slerp over waypoints that carry
// orientations; a track with none holds identity.
DenseTrack pchip_densify(const ControlTrack& track);

// Orientation-only densification; requires >= 2 oriented waypoints.
DenseTrack slerp_densify(const ControlTrack& track);

// Scalar PCHIP over (t, v) knots, exposed for reuse and testing.
std::vector<double> pchip_derivatives(const std::vector<double>& t,
                                      const std::vector<double>& v);
double pchip_eval(const std::vector<double>& t, const std::vector<double>& v,
                  const std::vector<double>& d, double x);

// For each hand, the surface point with the smallest euclidean distance;
// ties broken by lowest vertex index.
std::pair<Vec3, Vec3> sample_contact_points(const std::vector<Vec3>& surface,
                                            const std::pair<Vec3, Vec3>& hands);

// Contacts, expressed in the object's local frame, ride rigidly on the object.
std::pair<DenseTrack, DenseTrack> hand_tracks_from_object(
    const DenseTrack& object_track, const std::pair<Vec3, Vec3>& contact_local);

}  // namespace hoi
