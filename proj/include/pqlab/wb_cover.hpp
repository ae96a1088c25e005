#pragma once

#include "pqlab/field_ops.hpp"
#include "pqlab/geometry.hpp"

namespace pqlab {

struct Ball {
    Vec2 center;
    double r = 0.0;
};

struct Covering {
    std::vector<Ball> balls;
    double delta = 0.0;   // dilation constant of the WB triple
    int M = 0;            // overlap multiplicity of the (1+delta)-dilations
    double eps_ov = 0.0;  // pairwise overlap constant
    double r_min = 0.0;
    std::vector<std::vector<int>> neighbor_index;  // adjacency under (1+delta/2)-dilation

    void rebuild_neighbor_index() {
        std::size_t n = balls.size();
        neighbor_index.assign(n, {});
        double f = 1.0 + delta / 2.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (dist(balls[i].center, balls[j].center) < f * (balls[i].r + balls[j].r)) {
                    neighbor_index[i].push_back(static_cast<int>(j));
                    neighbor_index[j].push_back(static_cast<int>(i));
                }
            }
        }
    }
};

struct CoveringAudit {
    double coverage_defect = 0.0;   // uncovered area fraction outside the 8*r_min strip
    int max_multiplicity = 0;       // max of sum chi_{(1+delta)B_i} over probe nodes
    double min_overlap_ratio = 1.0; // min |Bi ∩ Bj| / max(|Bi|,|Bj|) over intersecting pairs
    double c_boundary = 0.0;        // comparability constant: (1/c) d(B_i,∂Ω) <= 2 r_i <= c d(B_i,∂Ω)
    double radius_ratio_bound = 1.0;// max r_i/r_j over (1+delta/2)-neighbors
    bool containment_ok = true;     // (1+delta) B_i ⊂ Ω for all i
    bool passed = false;            // measured values consistent with the declared triple
};

// Strip factor of the guaranteed-coverage region: balls cover
// {x in Omega : d(x, ∂Ω) >= kUncoveredStripFactor * r_min}.
inline constexpr double kUncoveredStripFactor = 8.0;
inline constexpr double kCoverageDefectTol = 1e-3;

// Exact area of the intersection of two disks.
inline double lens_area(const Ball& a, const Ball& b) {
    double d = dist(a.center, b.center);
    double r = a.r, R = b.r;
    if (d >= r + R) return 0.0;
    if (d <= std::abs(R - r)) {
        double rm = std::min(r, R);
        return M_PI * rm * rm;
    }
    double c1 = std::clamp((d * d + r * r - R * R) / (2.0 * d * r), -1.0, 1.0);
    double c2 = std::clamp((d * d + R * R - r * r) / (2.0 * d * R), -1.0, 1.0);
    double t = (-d + r + R) * (d + r - R) * (d - r + R) * (d + r + R);
    return r * r * std::acos(c1) + R * R * std::acos(c2) - 0.5 * std::sqrt(std::max(t, 0.0));
}

namespace detail {

inline double segment_segment_dist(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    if (polyops::segments_intersect(a, b, c, d)) return 0.0;
    return std::min(std::min(polyops::point_segment_dist(a, c, d), polyops::point_segment_dist(b, c, d)),
                    std::min(polyops::point_segment_dist(c, a, b), polyops::point_segment_dist(d, a, b)));
}

// distance from a segment to an axis-aligned square [lo, lo+side]^2
inline double segment_box_dist(Vec2 a, Vec2 b, Vec2 lo, double side) {
    Vec2 hi{lo.x + side, lo.y + side};
    auto in_box = [&](Vec2 p) {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    };
    if (in_box(a) || in_box(b)) return 0.0;
    Vec2 c00 = lo, c10{hi.x, lo.y}, c11 = hi, c01{lo.x, hi.y};
    double d = segment_segment_dist(a, b, c00, c10);
    d = std::min(d, segment_segment_dist(a, b, c10, c11));
    d = std::min(d, segment_segment_dist(a, b, c11, c01));
    d = std::min(d, segment_segment_dist(a, b, c01, c00));
    return d;
}

inline double box_boundary_dist(const Domain& dom, Vec2 lo, double side) {
    double best = std::numeric_limits<double>::infinity();
    auto scan = [&](const Loop& loop) {
        std::size_t n = loop.size();
        for (std::size_t i = 0; i < n; ++i)
            best = std::min(best, segment_box_dist(loop[i], loop[(i + 1) % n], lo, side));
    };
    scan(dom.vertices);
    for (const Loop& h : dom.holes) scan(h);
    return best;
}

struct WhitneyState {
    const Domain* dom;
    double r_min;
    double lambda;
    double min_side;
    std::vector<Ball>* out;
};

// Dyadic Whitney descent: accept a square once it clears the boundary by
// twice its diameter, so the lambda-ball at its center covers the square.
inline void whitney_recurse(WhitneyState& st, Vec2 lo, double side) {
    const double diam = side * std::sqrt(2.0);
    Vec2 center{lo.x + side / 2.0, lo.y + side / 2.0};
    double box_d = box_boundary_dist(*st.dom, lo, side);
    bool box_inside = box_d > 0.0 && st.dom->contains(center);
    if (box_inside && box_d >= 2.0 * diam) {
        double dc = signed_distance(*st.dom, center);
        double r = st.lambda * dc;
        if (r >= st.r_min) st.out->push_back({center, r});
        return;
    }
    if (side < st.min_side) return;
    // cube too close to the boundary (or straddling it): subdivide
    double hs = side / 2.0;
    whitney_recurse(st, lo, hs);
    whitney_recurse(st, {lo.x + hs, lo.y}, hs);
    whitney_recurse(st, {lo.x, lo.y + hs}, hs);
    whitney_recurse(st, {lo.x + hs, lo.y + hs}, hs);
}

}  // namespace detail

CoveringAudit audit_covering(const Covering& cov, const Domain& dom, double probe_h);

// Builds a finite WB-covering: dyadic Whitney squares of Omega, each
// contributing the ball at its center with radius lambda * d(center, ∂Ω);
// balls below r_min are dropped. delta is the largest value <= 1/4 for which
// every (1+delta)-dilation stays inside Omega; M and eps_ov are measured by
// an internal audit and stored on the covering.
inline Covering build_wb_covering(const Domain& dom, double r_min, double lambda = 0.25) {
    if (!(r_min > 0.0) || r_min > 1.0) reject("build_wb_covering: need 0 < r_min <= 1, got ", r_min);
    if (!(lambda > 0.0) || lambda >= 1.0)
        reject("build_wb_covering: need 0 < lambda < 1, got ", lambda);
    const double delta_target = 0.25;
    if ((1.0 + delta_target) * lambda >= 1.0)
        reject("build_wb_covering: (1+delta)*lambda = ", (1.0 + delta_target) * lambda,
               " >= 1; dilated balls would touch the boundary");
    dom.validate();

    Vec2 lo, hi;
    dom.bbox(lo, hi);
    double side = std::max(hi.x - lo.x, hi.y - lo.y);
    Covering cov;
    cov.r_min = r_min;
    detail::WhitneyState st{&dom, r_min, lambda, r_min / 4.0, &cov.balls};
    detail::whitney_recurse(st, lo, side);
    if (cov.balls.empty())
        reject("build_wb_covering: no admissible balls (degenerate domain or r_min too large)");

    // deterministic enumeration order: radius descending, then center lex
    std::sort(cov.balls.begin(), cov.balls.end(), [](const Ball& a, const Ball& b) {
        if (a.r != b.r) return a.r > b.r;
        if (a.center.x != b.center.x) return a.center.x < b.center.x;
        return a.center.y < b.center.y;
    });

    for (const Ball& b : cov.balls)
        if (b.r > 1.0)
            reject("build_wb_covering: ball radius ", b.r,
                   " exceeds 1; rescale the domain or decrease lambda");

    // largest delta <= 1/4 keeping every dilation inside Omega
    double delta = delta_target;
    for (const Ball& b : cov.balls) {
        double sd = signed_distance(dom, b.center);
        delta = std::min(delta, sd / b.r - 1.0);
    }
    if (!(delta > 0.0)) reject("build_wb_covering: no positive dilation margin");
    cov.delta = delta;
    cov.rebuild_neighbor_index();

    // measure M and eps_ov a posteriori and store them as the certified triple
    CoveringAudit audit = audit_covering(cov, dom, r_min / 5.0);
    cov.M = audit.max_multiplicity;
    cov.eps_ov = audit.min_overlap_ratio;
    return cov;
}

inline CoveringAudit audit_covering(const Covering& cov, const Domain& dom, double probe_h) {
    if (!(probe_h > 0.0) || probe_h >= cov.r_min / 4.0)
        reject("audit_covering: probe grid (h=", probe_h, ") must be finer than r_min/4 = ",
               cov.r_min / 4.0);
    CoveringAudit a;
    auto grid = build_grid(dom, probe_h, 0.0);
    const Grid& g = *grid;

    std::vector<std::uint16_t> cover_count(g.node_count(), 0);
    std::vector<std::uint16_t> dilated_count(g.node_count(), 0);
    double f = 1.0 + cov.delta;
    for (const Ball& b : cov.balls) {
        auto rasterize = [&](double radius, std::vector<std::uint16_t>& acc) {
            int i0 = std::max(0, static_cast<int>(std::floor((b.center.x - radius - g.origin.x) / g.h)));
            int j0 = std::max(0, static_cast<int>(std::floor((b.center.y - radius - g.origin.y) / g.h)));
            int i1 = std::min(g.nx, static_cast<int>(std::ceil((b.center.x + radius - g.origin.x) / g.h)));
            int j1 = std::min(g.ny, static_cast<int>(std::ceil((b.center.y + radius - g.origin.y) / g.h)));
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i)
                    if (dist(g.node(i, j), b.center) < radius) ++acc[g.idx(i, j)];
        };
        rasterize(b.r, cover_count);
        rasterize(f * b.r, dilated_count);
    }

    // coverage defect outside the 8*r_min strip
    std::size_t region = 0, uncovered = 0;
    double cut = kUncoveredStripFactor * cov.r_min;
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        if (!g.inside_mask[k] || g.signed_dist[k] < cut) continue;
        ++region;
        if (cover_count[k] == 0) ++uncovered;
    }
    a.coverage_defect = region == 0 ? 0.0 : static_cast<double>(uncovered) / region;

    for (std::size_t k = 0; k < g.node_count(); ++k)
        a.max_multiplicity = std::max<int>(a.max_multiplicity, dilated_count[k]);

    // pairwise overlap ratios via the exact two-circle lens area
    a.min_overlap_ratio = 1.0;
    bool any_pair = false;
    for (std::size_t i = 0; i < cov.balls.size(); ++i) {
        for (std::size_t j = i + 1; j < cov.balls.size(); ++j) {
            const Ball& bi = cov.balls[i];
            const Ball& bj = cov.balls[j];
            if (dist(bi.center, bj.center) >= bi.r + bj.r) continue;
            any_pair = true;
            double lens = lens_area(bi, bj);
            double ratio = lens / (M_PI * std::pow(std::max(bi.r, bj.r), 2));
            a.min_overlap_ratio = std::min(a.min_overlap_ratio, ratio);
        }
    }
    if (!any_pair) a.min_overlap_ratio = 0.0;

    // boundary comparability and containment
    a.c_boundary = 1.0;
    for (const Ball& b : cov.balls) {
        double sd = signed_distance(dom, b.center);
        if (sd < (1.0 + cov.delta) * b.r) a.containment_ok = false;
        double d_ball = sd - b.r;  // distance from the ball (as a set) to the boundary
        if (d_ball <= 0.0) {
            a.containment_ok = false;
            continue;
        }
        double ratio = std::max((2.0 * b.r) / d_ball, d_ball / (2.0 * b.r));
        a.c_boundary = std::max(a.c_boundary, ratio);
    }

    // neighbor radius comparability under (1+delta/2)-dilation
    a.radius_ratio_bound = 1.0;
    for (std::size_t i = 0; i < cov.neighbor_index.size(); ++i) {
        for (int j : cov.neighbor_index[i]) {
            double ratio = cov.balls[i].r / cov.balls[j].r;
            a.radius_ratio_bound = std::max(a.radius_ratio_bound, std::max(ratio, 1.0 / ratio));
        }
    }

    bool mult_ok = cov.M == 0 || a.max_multiplicity <= cov.M;
    bool overlap_ok = a.min_overlap_ratio >= cov.eps_ov - 1e-12;
    a.passed = a.containment_ok && mult_ok && overlap_ok && a.coverage_defect < kCoverageDefectTol;
    return a;
}

// Indices j != i with factor*B_i ∩ factor*B_j != ∅, from center distances.
inline std::vector<int> neighbors(const Covering& cov, int i, double factor) {
    if (i < 0 || i >= static_cast<int>(cov.balls.size()))
        reject("neighbors: ball index ", i, " out of range [0,", cov.balls.size(), ")");
    const double admissible[3] = {1.0, 1.0 + cov.delta / 2.0, 1.0 + cov.delta};
    bool ok = false;
    for (double a : admissible) ok = ok || std::abs(factor - a) < 1e-12;
    if (!ok)
        reject("neighbors: factor ", factor, " must be one of 1, 1+delta/2, 1+delta for delta=",
               cov.delta);
    std::vector<int> out;
    for (std::size_t j = 0; j < cov.balls.size(); ++j) {
        if (static_cast<int>(j) == i) continue;
        if (dist(cov.balls[i].center, cov.balls[j].center) <
            factor * (cov.balls[i].r + cov.balls[j].r))
            out.push_back(static_cast<int>(j));
    }
    return out;
}

}  // namespace pqlab
