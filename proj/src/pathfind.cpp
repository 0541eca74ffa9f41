#include "hoi/pathfind.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace hoi {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

struct Aabb2 {
    double min_x, min_y, max_x, max_y;
};

Aabb2 box_aabb_xy(const OrientedBox& box) {
    Mat3 r = box.axes();
    Vec3 h = box.half();
    double rx = std::fabs(r.col0.x) * h.x + std::fabs(r.col1.x) * h.y +
                std::fabs(r.col2.x) * h.z;
    double ry = std::fabs(r.col0.y) * h.x + std::fabs(r.col1.y) * h.y +
                std::fabs(r.col2.y) * h.z;
    return {box.center.x - rx, box.center.y - ry, box.center.x + rx, box.center.y + ry};
}

}  // namespace

OccupancyGrid rasterize(const SceneState& scene, const OrientedBox& moving_footprint,
                        const RasterOptions& opts) {
    if (opts.resolution <= 0) throw std::invalid_argument("resolution must be > 0");
    moving_footprint.validate();

    Aabb2 foot = box_aabb_xy(moving_footprint);
    double foot_reach = std::max(foot.max_x - foot.min_x, foot.max_y - foot.min_y) * 0.5;
    double pad = foot_reach + opts.margin + 2 * opts.resolution;

    double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
    double max_x = -min_x, max_y = -min_y;
    auto grow = [&](double x, double y) {
        min_x = std::min(min_x, x);
        min_y = std::min(min_y, y);
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
    };
    for (const auto& obj : scene.objects) {
        Aabb2 b = box_aabb_xy(obj.box);
        grow(b.min_x, b.min_y);
        grow(b.max_x, b.max_y);
    }
    grow(scene.human.pelvis.x, scene.human.pelvis.y);
    for (const auto& p : opts.relax_points) grow(p.x, p.y);
    if (!std::isfinite(min_x) || max_x - min_x <= 0 || max_y - min_y <= 0)
        throw std::runtime_error("degenerate scene bounds");

    OccupancyGrid grid;
    grid.resolution = opts.resolution;
    grid.origin = {min_x - pad, min_y - pad, 0.0};
    grid.width = static_cast<int>(std::ceil((max_x + pad - grid.origin.x) / opts.resolution));
    grid.height = static_cast<int>(std::ceil((max_y + pad - grid.origin.y) / opts.resolution));
    grid.occupied.assign(static_cast<size_t>(grid.width) * grid.height, 0);

    const double half_diag = opts.resolution * kSqrt2 * 0.5;
    OrientedBox probe = inflate_box(moving_footprint, half_diag);

    // Per-obstacle candidate cell range to keep this O(cells near obstacles).
    for (const auto& obj : scene.objects) {
        if (opts.ignore.count(obj.name)) continue;
        Aabb2 b = box_aabb_xy(inflate_box(obj.box, opts.margin));
        double reach = foot_reach + half_diag + opts.resolution;
        int ix0 = std::max(0, static_cast<int>(std::floor((b.min_x - reach - grid.origin.x) / opts.resolution)));
        int iy0 = std::max(0, static_cast<int>(std::floor((b.min_y - reach - grid.origin.y) / opts.resolution)));
        int ix1 = std::min(grid.width - 1, static_cast<int>(std::ceil((b.max_x + reach - grid.origin.x) / opts.resolution)));
        int iy1 = std::min(grid.height - 1, static_cast<int>(std::ceil((b.max_y + reach - grid.origin.y) / opts.resolution)));
        for (int iy = iy0; iy <= iy1; ++iy) {
            for (int ix = ix0; ix <= ix1; ++ix) {
                GridIndex c{ix, iy};
                if (grid.is_occupied(c)) continue;
                Vec3 center = grid.cell_center(c, moving_footprint.center.z);
                double m = opts.margin;
                for (const auto& rp : opts.relax_points) {
                    double d = std::hypot(center.x - rp.x, center.y - rp.y);
                    if (d <= opts.relax_radius - half_diag) {
                        m = 0.0;
                        break;
                    }
                }
                probe.center = center;
                if (boxes_intersect(probe, inflate_box(obj.box, m)))
                    grid.occupied[static_cast<size_t>(iy) * grid.width + ix] = 1;
            }
        }
    }
    return grid;
}

namespace {

// Exact octile cost as an integer pair: value = straights + diagonals * sqrt2.
struct StepCost {
    int straights = 0;
    int diagonals = 0;
    double value() const { return straights + diagonals * kSqrt2; }
    bool operator==(const StepCost&) const = default;
};

struct OpenNode {
    double f;
    double g;
    int idx;
    bool operator>(const OpenNode& o) const {
        if (f != o.f) return f > o.f;
        return g < o.g;  // prefer larger g on ties (deeper nodes)
    }
};

double octile(const GridIndex& a, const GridIndex& b) {
    int dx = std::abs(a.ix - b.ix);
    int dy = std::abs(a.iy - b.iy);
    int diag = std::min(dx, dy);
    return (dx + dy - 2 * diag) + diag * kSqrt2;
}

}  // namespace

std::vector<Vec3> astar(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal) {
    GridIndex s = grid.world_to_cell(start);
    GridIndex g = grid.world_to_cell(goal);
    if (!grid.in_bounds(s) || grid.is_occupied(s))
        throw std::runtime_error("start cell is blocked or out of bounds");
    if (!grid.in_bounds(g) || grid.is_occupied(g))
        throw std::runtime_error("goal cell is blocked or out of bounds");

    const int w = grid.width;
    const size_t n = static_cast<size_t>(w) * grid.height;
    std::vector<StepCost> cost(n);
    std::vector<int> parent(n, -1);
    std::vector<uint8_t> closed(n, 0), opened(n, 0);
    auto id = [&](const GridIndex& c) { return c.iy * w + c.ix; };

    std::priority_queue<OpenNode, std::vector<OpenNode>, std::greater<>> open;
    opened[id(s)] = 1;
    open.push({octile(s, g), 0.0, id(s)});
    size_t expanded = 0;

    static const int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};

    while (!open.empty()) {
        OpenNode top = open.top();
        open.pop();
        if (closed[top.idx]) continue;
        if (top.g != cost[top.idx].value()) continue;  // stale entry
        closed[top.idx] = 1;
        ++expanded;
        GridIndex cur{top.idx % w, top.idx / w};
        if (cur == g) {
            std::vector<Vec3> path;
            for (int i = top.idx; i != -1; i = parent[i])
                path.push_back(grid.cell_center({i % w, i / w}, start.z));
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (int k = 0; k < 8; ++k) {
            GridIndex nb{cur.ix + dx8[k], cur.iy + dy8[k]};
            if (!grid.in_bounds(nb) || grid.is_occupied(nb)) continue;
            bool diagonal = dx8[k] != 0 && dy8[k] != 0;
            if (diagonal) {
                // No corner cutting past an occupied orthogonal neighbor.
                if (grid.is_occupied({cur.ix + dx8[k], cur.iy}) ||
                    grid.is_occupied({cur.ix, cur.iy + dy8[k]}))
                    continue;
            }
            int nidx = id(nb);
            if (closed[nidx]) continue;
            StepCost cand = cost[top.idx];
            if (diagonal)
                ++cand.diagonals;
            else
                ++cand.straights;
            if (!opened[nidx] || cand.value() < cost[nidx].value()) {
                cost[nidx] = cand;
                parent[nidx] = top.idx;
                opened[nidx] = 1;
                open.push({cand.value() + octile(nb, g), cand.value(), nidx});
            }
        }
    }
    throw UnreachableError(expanded);
}

std::vector<GridIndex> supercover_cells(const OccupancyGrid& grid, const Vec3& a,
                                        const Vec3& b) {
    // Integer supercover line between the cells holding a and b. Both inputs
    // are cell centers here, so the walk is exact.
    GridIndex ca = grid.world_to_cell(a);
    GridIndex cb = grid.world_to_cell(b);
    std::vector<GridIndex> cells;
    int x = ca.ix, y = ca.iy;
    int dx = cb.ix - ca.ix, dy = cb.iy - ca.iy;
    int sx = dx > 0 ? 1 : -1, sy = dy > 0 ? 1 : -1;
    dx = std::abs(dx);
    dy = std::abs(dy);
    cells.push_back({x, y});
    // Dedu-style supercover: track twice the error term to detect exact
    // corner crossings and include both side cells.
    int ddx = 2 * dx, ddy = 2 * dy;
    if (ddx >= ddy) {
        int errorprev = dx, error = dx;
        for (int i = 0; i < dx; ++i) {
            x += sx;
            error += ddy;
            if (error > ddx) {
                y += sy;
                error -= ddx;
                if (error + errorprev < ddx)
                    cells.push_back({x - sx, y});
                else if (error + errorprev > ddx)
                    cells.push_back({x, y - sy});
                else {  // exact corner: include both
                    cells.push_back({x - sx, y});
                    cells.push_back({x, y - sy});
                }
            }
            cells.push_back({x, y});
            errorprev = error;
        }
    } else {
        int errorprev = dy, error = dy;
        for (int i = 0; i < dy; ++i) {
            y += sy;
            error += ddx;
            if (error > ddy) {
                x += sx;
                error -= ddy;
                if (error + errorprev < ddy)
                    cells.push_back({x, y - sy});
                else if (error + errorprev > ddy)
                    cells.push_back({x - sx, y});
                else {
                    cells.push_back({x, y - sy});
                    cells.push_back({x - sx, y});
                }
            }
            cells.push_back({x, y});
            errorprev = error;
        }
    }
    return cells;
}

namespace {

bool line_of_sight(const OccupancyGrid& grid, const Vec3& a, const Vec3& b) {
    for (const auto& c : supercover_cells(grid, a, b))
        if (!grid.in_bounds(c) || grid.is_occupied(c)) return false;
    return true;
}

}  // namespace

std::vector<Vec3> smooth_path(const OccupancyGrid& grid, const std::vector<Vec3>& path) {
    if (path.size() <= 2) return path;
    std::vector<Vec3> out;
    size_t i = 0;
    out.push_back(path[0]);
    while (i + 1 < path.size()) {
        size_t j = path.size() - 1;
        while (j > i + 1 && !line_of_sight(grid, path[i], path[j])) --j;
        out.push_back(path[j]);
        i = j;
    }
    return out;
}

ControlTrack schedule(const std::vector<Vec3>& path, int start_frame, double speed,
                      double fps) {
    if (path.size() < 2) throw std::invalid_argument("schedule needs >= 2 waypoints");
    if (speed <= 0) throw std::invalid_argument("speed must be > 0");
    ControlTrack track;
    double cum = 0.0;
    int prev_frame = start_frame - 1;
    for (size_t i = 0; i < path.size(); ++i) {
        if (i > 0) cum += (path[i] - path[i - 1]).norm();
        int frame = start_frame + static_cast<int>(std::ceil(cum / speed * fps));
        if (frame <= prev_frame) frame = prev_frame + 1;
        track.waypoints.push_back({frame, path[i], std::nullopt});
        prev_frame = frame;
    }
    return track;
}

namespace {

// Nearest free position for an endpoint whose own cell is blocked (a commanded
// goal may sit inside an obstacle). Keeps the exact point when it is free.
Vec3 snap_to_free(const OccupancyGrid& grid, const Vec3& p, double max_dist) {
    GridIndex c = grid.world_to_cell(p);
    if (grid.in_bounds(c) && !grid.is_occupied(c)) return p;
    int reach = static_cast<int>(std::ceil(max_dist / grid.resolution)) + 1;
    double best = std::numeric_limits<double>::infinity();
    Vec3 best_pos;
    for (int dy = -reach; dy <= reach; ++dy) {
        for (int dx = -reach; dx <= reach; ++dx) {
            GridIndex nb{c.ix + dx, c.iy + dy};
            if (!grid.in_bounds(nb) || grid.is_occupied(nb)) continue;
            Vec3 center = grid.cell_center(nb, p.z);
            double d = std::hypot(center.x - p.x, center.y - p.y);
            if (d <= max_dist && d < best) {
                best = d;
                best_pos = center;
            }
        }
    }
    if (!std::isfinite(best))
        throw std::runtime_error("no free cell within snap radius of endpoint");
    return best_pos;
}

}  // namespace

RepairResult repair_track(const SceneState& scene, const OrientedBox& moving,
                          const Vec3& start, const Vec3& goal, double margin,
                          const std::set<std::string>& ignore, double resolution,
                          int start_frame, double speed, double fps) {
    const double ladder[] = {1.0, 0.75, 0.5, 0.25, 0.1, 0.0};
    const double snap_radius = 0.5;
    std::string last_error = "no margin attempted";
    for (double scale : ladder) {
        RasterOptions opts;
        opts.margin = margin * scale;
        opts.resolution = resolution;
        opts.relax_points = {start, goal};
        opts.relax_radius = margin;
        opts.ignore = ignore;
        try {
            OccupancyGrid grid = rasterize(scene, moving, opts);
            Vec3 s = snap_to_free(grid, start, snap_radius);
            Vec3 g = snap_to_free(grid, goal, snap_radius);
            auto raw = astar(grid, s, g);
            auto smoothed = smooth_path(grid, raw);
            RepairResult result;
            result.path = smoothed;
            result.track = schedule(smoothed, start_frame, speed, fps);
            result.track.joint_or_object = "repair";
            result.achieved_margin = opts.margin;
            ValidateOptions vo;
            vo.margin = opts.margin;
            vo.endpoint_relax_radius = opts.relax_radius;
            vo.ignore = ignore;
            auto check = validate_track(moving, result.track, scene, vo);
            if (check.collided) {
                last_error = "planned track failed revalidation at margin " +
                             std::to_string(opts.margin);
                continue;
            }
            return result;
        } catch (const std::runtime_error& e) {
            last_error = e.what();
        }
    }
    throw std::runtime_error("A* repair failed at every margin: " + last_error);
}

}  // namespace hoi
