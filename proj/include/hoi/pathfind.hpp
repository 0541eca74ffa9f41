#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoi/collide.hpp"
#include "hoi/scene.hpp"
#include "hoi/traj.hpp"

namespace hoi {

struct GridIndex {
    int ix = 0;
    int iy = 0;
    bool operator==(const GridIndex&) const = default;
};

struct OccupancyGrid {
    Vec3 origin;          // world x,y of the min corner of cell (0,0)
    double resolution = 0.05;
    int width = 0;        // cells along x
    int height = 0;       // cells along y
    std::vector<uint8_t> occupied;  // row-major, iy * width + ix

    bool in_bounds(const GridIndex& c) const {
        return c.ix >= 0 && c.ix < width && c.iy >= 0 && c.iy < height;
    }
    bool is_occupied(const GridIndex& c) const {
        return occupied[static_cast<size_t>(c.iy) * width + c.ix] != 0;
    }
    GridIndex world_to_cell(const Vec3& p) const {
        return {static_cast<int>(std::floor((p.x - origin.x) / resolution)),
                static_cast<int>(std::floor((p.y - origin.y) / resolution))};
    }
    Vec3 cell_center(const GridIndex& c, double z) const {
        return {origin.x + (c.ix + 0.5) * resolution,
                origin.y + (c.iy + 0.5) * resolution, z};
    }
};

struct RasterOptions {
    double margin = 0.2;
    double resolution = 0.05;
    // Disk around each relax point where obstacle inflation drops to 0
    // (shrunk by the cell half-diagonal so cell-level checks stay conservative).
    std::vector<Vec3> relax_points;
    double relax_radius = 0.2;
    std::set<std::string> ignore;
};

// A cell is occupied iff the moving footprint centered there (orientation
// fixed, dilated by the cell half-diagonal) intersects any inflated obstacle.
OccupancyGrid rasterize(const SceneState& scene, const OrientedBox& moving_footprint,
                        const RasterOptions& opts);

struct UnreachableError : std::runtime_error {
    size_t frontier_size;
    explicit UnreachableError(size_t n)
        : std::runtime_error("goal unreachable (blocking frontier of " +
                             std::to_string(n) + " cells)"),
          frontier_size(n) {}
};

// 8-connected shortest path (octile heuristic, corner cutting forbidden).
// Returns cell centers in world coordinates, including snapped start/goal.
std::vector<Vec3> astar(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal);

// Greedy line-of-sight shortcutting over supercover cell traversal.
std::vector<Vec3> smooth_path(const OccupancyGrid& grid, const std::vector<Vec3>& path);

// All cells a segment between two cell centers passes through (supercover).
std::vector<GridIndex> supercover_cells(const OccupancyGrid& grid, const Vec3& a,
                                        const Vec3& b);

// Waypoint i is placed at frame start_frame + ceil(dist_i / speed * fps);
// ties bumped forward so frames stay strictly increasing.
ControlTrack schedule(const std::vector<Vec3>& path, int start_frame,
                      double speed = 1.2, double fps = 30.0);

struct RepairResult {
    ControlTrack track;
    double achieved_margin = 0.0;  // largest margin on the ladder that was feasible
    std::vector<Vec3> path;        // smoothed waypoint positions
};

// A* fallback: plans start->goal at the requested margin, stepping the margin
// down when the scene leaves no corridor at full clearance.
RepairResult repair_track(const SceneState& scene, const OrientedBox& moving,
                          const Vec3& start, const Vec3& goal, double margin,
                          const std::set<std::string>& ignore,
                          double resolution = 0.05, int start_frame = 0,
                          double speed = 1.2, double fps = 30.0);

}  // namespace hoi
