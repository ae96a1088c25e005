#pragma once

#include <cstring>
#include <limits>
#include <memory>
#include <optional>

#include "pqlab/common.hpp"

namespace pqlab {

using Loop = std::vector<Vec2>;

namespace polyops {

inline double signed_area(const Loop& loop) {
    double a = 0.0;
    std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = loop[i];
        const Vec2& q = loop[(i + 1) % n];
        a += p.cross(q);
    }
    return 0.5 * a;
}

inline double point_segment_dist(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 ab = b - a;
    double len2 = ab.norm2();
    if (len2 == 0.0) return dist(p, a);
    double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return dist(p, a + t * ab);
}

// Even-odd crossing test. Half-open edge rule makes vertex hits count once.
inline bool point_in_loop(Vec2 p, const Loop& loop) {
    bool inside = false;
    std::size_t n = loop.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = loop[i];
        const Vec2& b = loop[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < xint) inside = !inside;
        }
    }
    return inside;
}

inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    auto orient = [](Vec2 p, Vec2 q, Vec2 r) {
        double v = (q - p).cross(r - p);
        return (v > 0.0) - (v < 0.0);
    };
    int o1 = orient(a, b, c), o2 = orient(a, b, d);
    int o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    auto on_seg = [](Vec2 p, Vec2 q, Vec2 r) {
        return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) &&
               std::min(p.y, r.y) <= q.y && q.y <= std::max(p.y, r.y);
    };
    if (o1 == 0 && on_seg(a, c, b)) return true;
    if (o2 == 0 && on_seg(a, d, b)) return true;
    if (o3 == 0 && on_seg(c, a, d)) return true;
    if (o4 == 0 && on_seg(c, b, d)) return true;
    return false;
}

inline bool loop_is_simple(const Loop& loop) {
    std::size_t n = loop.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 a = loop[i], b = loop[(i + 1) % n];
        if (dist(a, b) == 0.0) return false;
        for (std::size_t j = i + 1; j < n; ++j) {
            // skip edges sharing a vertex
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            Vec2 c = loop[j], d = loop[(j + 1) % n];
            if (segments_intersect(a, b, c, d)) return false;
        }
    }
    return true;
}

inline double dist_to_loop(Vec2 p, const Loop& loop) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i)
        best = std::min(best, point_segment_dist(p, loop[i], loop[(i + 1) % n]));
    return best;
}

// Closest point on the loop boundary to p.
inline Vec2 project_to_loop(Vec2 p, const Loop& loop) {
    double best = std::numeric_limits<double>::infinity();
    Vec2 arg = loop[0];
    std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 a = loop[i], b = loop[(i + 1) % n];
        Vec2 ab = b - a;
        double len2 = ab.norm2();
        double t = len2 == 0.0 ? 0.0 : std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
        Vec2 c = a + t * ab;
        double d = dist(p, c);
        if (d < best) {
            best = d;
            arg = c;
        }
    }
    return arg;
}

}  // namespace polyops

struct StarPiece {
    Loop loop;
    Vec2 center;
};

// Polygonal Lipschitz domain with optional polygonal holes and an optional
// user-supplied star-shaped decomposition (validated, never computed).
struct Domain {
    Loop vertices;
    std::vector<Loop> holes;
    std::vector<StarPiece> star_pieces;

    void validate() const {
        if (!polyops::loop_is_simple(vertices))
            reject("domain: outer loop (index 0) is not simple");
        if (polyops::signed_area(vertices) <= 0.0)
            reject("domain: outer loop (index 0) must be positively oriented");
        for (std::size_t k = 0; k < holes.size(); ++k) {
            if (!polyops::loop_is_simple(holes[k]))
                reject("domain: hole loop ", k + 1, " is not simple");
            for (const Vec2& v : holes[k])
                if (!polyops::point_in_loop(v, vertices))
                    reject("domain: hole loop ", k + 1, " is not strictly inside the outer loop");
        }
    }

    bool contains(Vec2 p) const {
        if (!polyops::point_in_loop(p, vertices)) return false;
        for (const Loop& h : holes)
            if (polyops::point_in_loop(p, h)) return false;
        return true;
    }

    // min over the outer loop and all hole loops
    double boundary_dist(Vec2 p) const {
        double d = polyops::dist_to_loop(p, vertices);
        for (const Loop& h : holes) d = std::min(d, polyops::dist_to_loop(p, h));
        return d;
    }

    Vec2 project_to_boundary(Vec2 p) const {
        Vec2 best = polyops::project_to_loop(p, vertices);
        double bd = dist(p, best);
        for (const Loop& h : holes) {
            Vec2 c = polyops::project_to_loop(p, h);
            if (dist(p, c) < bd) {
                bd = dist(p, c);
                best = c;
            }
        }
        return best;
    }

    void bbox(Vec2& lo, Vec2& hi) const {
        lo = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        hi = {-lo.x, -lo.y};
        for (const Vec2& v : vertices) {
            lo.x = std::min(lo.x, v.x);
            lo.y = std::min(lo.y, v.y);
            hi.x = std::max(hi.x, v.x);
            hi.y = std::max(hi.y, v.y);
        }
    }

    double area() const {
        double a = polyops::signed_area(vertices);
        for (const Loop& h : holes) a -= std::abs(polyops::signed_area(h));
        return a;
    }
};

// Exact point-to-polygon distance, positive strictly inside, zero on the
// boundary, negative outside.
inline double signed_distance(const Domain& dom, Vec2 p) {
    double d = dom.boundary_dist(p);
    if (d == 0.0) return 0.0;
    return dom.contains(p) ? d : -d;
}

// Uniform node grid over an axis-aligned box. nx, ny count cells; nodes are
// (nx+1) x (ny+1). Node (i,j) sits at origin + (i*h, j*h).
struct Grid {
    Vec2 origin;
    double h = 0.0;
    int nx = 0;  // cells in x
    int ny = 0;  // cells in y
    std::vector<std::uint8_t> inside_mask;  // per node, signed_distance >= 0
    std::vector<double> signed_dist;        // per node

    int nodes_x() const { return nx + 1; }
    int nodes_y() const { return ny + 1; }
    std::size_t node_count() const { return static_cast<std::size_t>(nodes_x()) * nodes_y(); }
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * nodes_x() + i; }
    Vec2 node(int i, int j) const { return {origin.x + i * h, origin.y + j * h}; }
    Vec2 extent() const { return {nx * h, ny * h}; }
    bool inside(int i, int j) const { return inside_mask[idx(i, j)] != 0; }

    // clamped bilinear sample of a per-node scalar array
    double interp(const std::vector<double>& values, Vec2 p) const {
        double fx = (p.x - origin.x) / h;
        double fy = (p.y - origin.y) / h;
        fx = std::clamp(fx, 0.0, static_cast<double>(nx));
        fy = std::clamp(fy, 0.0, static_cast<double>(ny));
        int i = std::min(static_cast<int>(fx), nx - 1);
        int j = std::min(static_cast<int>(fy), ny - 1);
        double tx = fx - i, ty = fy - j;
        double v00 = values[idx(i, j)], v10 = values[idx(i + 1, j)];
        double v01 = values[idx(i, j + 1)], v11 = values[idx(i + 1, j + 1)];
        return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 +
               tx * ty * v11;
    }
};

inline constexpr std::size_t kGridNodeCap = 1u << 26;  // ~64M nodes

inline std::shared_ptr<Grid> build_grid(const Domain& dom, double h, double margin,
                                        std::size_t node_cap = kGridNodeCap) {
    if (!(h > 0.0)) reject("build_grid: h must be positive, got ", h);
    if (margin < 0.0) reject("build_grid: margin must be nonnegative, got ", margin);
    dom.validate();
    Vec2 lo, hi;
    dom.bbox(lo, hi);
    lo = lo - Vec2{margin, margin};
    hi = hi + Vec2{margin, margin};
    auto g = std::make_shared<Grid>();
    g->origin = lo;
    g->h = h;
    g->nx = std::max(1, static_cast<int>(std::ceil((hi.x - lo.x) / h - 1e-12)));
    g->ny = std::max(1, static_cast<int>(std::ceil((hi.y - lo.y) / h - 1e-12)));
    std::size_t n = g->node_count();
    if (n > node_cap) {
        reject("build_grid: node count ", n, " exceeds cap ", node_cap, "; requires about ",
               (n * (sizeof(double) + 1)) / (1024 * 1024), " MiB per field layer");
    }
    g->inside_mask.assign(n, 0);
    g->signed_dist.assign(n, 0.0);
    Grid& gr = *g;
    parallel_for(gr.nodes_y(), [&](std::size_t j0, std::size_t j1) {
        for (std::size_t j = j0; j < j1; ++j) {
            for (int i = 0; i < gr.nodes_x(); ++i) {
                double sd = signed_distance(dom, gr.node(i, static_cast<int>(j)));
                std::size_t k = gr.idx(i, static_cast<int>(j));
                gr.signed_dist[k] = sd;
                gr.inside_mask[k] = sd >= 0.0 ? 1 : 0;  // boundary nodes count as inside
            }
        }
    });
    return g;
}

// Mask of inside nodes with d(x, boundary) < width.
inline std::vector<std::uint8_t> boundary_strip_mask(const Grid& grid, double width) {
    if (!(width > 0.0)) reject("boundary_strip_mask: width must be positive, got ", width);
    std::vector<std::uint8_t> m(grid.node_count(), 0);
    for (std::size_t k = 0; k < m.size(); ++k)
        m[k] = (grid.inside_mask[k] && grid.signed_dist[k] < width) ? 1 : 0;
    return m;
}

struct StarCheck {
    bool ok = false;
    Vec2 worst_ray_dir;   // direction of a failing ray (unit), if !ok
    int worst_crossings = 1;
    double margin = 0.0;  // min distance from center to the loop
};

// Samples n_rays directions from the center; the loop is strongly star-shaped
// w.r.t. the center iff every ray crosses the boundary exactly once.
inline StarCheck validate_star_shaped(const Loop& loop, Vec2 center, int n_rays = 256) {
    if (n_rays < 64) reject("validate_star_shaped: n_rays must be >= 64, got ", n_rays);
    if (!polyops::point_in_loop(center, loop))
        reject("validate_star_shaped: center lies outside the loop");
    StarCheck rc;
    rc.ok = true;
    rc.margin = polyops::dist_to_loop(center, loop);
    std::size_t n = loop.size();
    for (int r = 0; r < n_rays; ++r) {
        // small angular offset avoids rays through polygon vertices
        double ang = (r + 0.382) * 2.0 * M_PI / n_rays;
        double c = std::cos(ang), s = std::sin(ang);
        // rotate so the ray is the positive x-axis from the center; count
        // crossings with the half-open edge rule
        int crossings = 0;
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            Vec2 a = loop[i] - center, b = loop[j] - center;
            Vec2 ra{a.x * c + a.y * s, -a.x * s + a.y * c};
            Vec2 rb{b.x * c + b.y * s, -b.x * s + b.y * c};
            if ((ra.y > 0) != (rb.y > 0)) {
                double xint = ra.x + (0.0 - ra.y) / (rb.y - ra.y) * (rb.x - ra.x);
                if (xint > 0.0) ++crossings;
            }
        }
        if (crossings != 1) {
            rc.ok = false;
            rc.worst_ray_dir = {c, s};
            rc.worst_crossings = crossings;
            return rc;
        }
    }
    return rc;
}

// Validates the star decomposition stored on the domain: each piece must be
// strongly star-shaped w.r.t. its center and the pieces must tile the domain
// up to area tolerance 1e-9 * |Omega| (checked by sampling).
inline void validate_star_decomposition(const Domain& dom, int n_rays = 256) {
    if (dom.star_pieces.empty()) reject("domain has no star decomposition");
    for (std::size_t k = 0; k < dom.star_pieces.size(); ++k) {
        StarCheck rc = validate_star_shaped(dom.star_pieces[k].loop, dom.star_pieces[k].center, n_rays);
        if (!rc.ok)
            reject("star piece ", k, " is not star-shaped w.r.t. its center; failing ray (",
                   rc.worst_ray_dir.x, ",", rc.worst_ray_dir.y, ") crosses ", rc.worst_crossings,
                   " times");
    }
    double union_area = 0.0;
    for (const StarPiece& p : dom.star_pieces) union_area += std::abs(polyops::signed_area(p.loop));
    // pieces may overlap; require they at least fill the domain area
    if (union_area < dom.area() * (1.0 - 1e-9))
        reject("star decomposition union area ", union_area, " does not reach domain area ",
               dom.area());
}

// Vector-valued node function on a grid; m components per node, node-major.
struct Field {
    std::shared_ptr<const Grid> grid;
    int m = 1;
    std::vector<double> values;

    Field() = default;
    Field(std::shared_ptr<const Grid> g, int components)
        : grid(std::move(g)), m(components), values(grid->node_count() * components, 0.0) {}

    double& at(std::size_t node, int c) { return values[node * m + c]; }
    double at(std::size_t node, int c) const { return values[node * m + c]; }

    void check_finite(const char* what) const {
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (!std::isfinite(values[k]))
                reject(what, ": non-finite value at node ", k / m, " component ", k % m);
        }
    }
};

}  // namespace pqlab
