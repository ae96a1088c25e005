#pragma once

#include "pqlab/geometry.hpp"

namespace pqlab {

// Centered finite-difference gradient, one-sided on the bbox edges.
// Output has 2*m components ordered (c0_dx, c0_dy, c1_dx, c1_dy, ...).
inline Field gradient(const Field& f) {
    const Grid& g = *f.grid;
    Field out(f.grid, 2 * f.m);
    int nxn = g.nodes_x(), nyn = g.nodes_y();
    parallel_for(nyn, [&](std::size_t j0, std::size_t j1) {
        for (std::size_t j = j0; j < j1; ++j) {
            for (int i = 0; i < nxn; ++i) {
                std::size_t k = g.idx(i, static_cast<int>(j));
                for (int c = 0; c < f.m; ++c) {
                    int il = std::max(i - 1, 0), ir = std::min(i + 1, nxn - 1);
                    int jl = std::max(static_cast<int>(j) - 1, 0);
                    int jr = std::min(static_cast<int>(j) + 1, nyn - 1);
                    double dx = (f.at(g.idx(ir, static_cast<int>(j)), c) -
                                 f.at(g.idx(il, static_cast<int>(j)), c)) /
                                ((ir - il) * g.h);
                    double dy = (f.at(g.idx(i, jr), c) - f.at(g.idx(i, jl), c)) / ((jr - jl) * g.h);
                    out.at(k, 2 * c) = dx;
                    out.at(k, 2 * c + 1) = dy;
                }
            }
        }
    });
    return out;
}

inline double node_norm2(const Field& f, std::size_t node) {
    double s = 0.0;
    for (int c = 0; c < f.m; ++c) s += f.at(node, c) * f.at(node, c);
    return s;
}

// L^p norm over the nodes selected by `mask` (node quadrature weight h^2).
inline double lp_norm(const Field& f, double p, const std::vector<std::uint8_t>& mask) {
    const Grid& g = *f.grid;
    std::vector<double> terms;
    terms.reserve(g.node_count() / 2);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        if (!mask[k]) continue;
        terms.push_back(std::pow(node_norm2(f, k), p * 0.5));
    }
    return std::pow(pairwise_sum(terms) * g.h * g.h, 1.0 / p);
}

inline double linf_norm(const Field& f, const std::vector<std::uint8_t>& mask) {
    double s = 0.0;
    for (std::size_t k = 0; k < f.grid->node_count(); ++k)
        if (mask[k]) s = std::max(s, std::sqrt(node_norm2(f, k)));
    return s;
}

inline std::vector<std::uint8_t> inside_mask_of(const Grid& g) { return g.inside_mask; }

inline std::vector<std::uint8_t> ball_mask(const Grid& g, Vec2 center, double radius) {
    std::vector<std::uint8_t> m(g.node_count(), 0);
    for (int j = 0; j < g.nodes_y(); ++j)
        for (int i = 0; i < g.nodes_x(); ++i)
            if (dist(g.node(i, j), center) <= radius) m[g.idx(i, j)] = 1;
    return m;
}

inline Field field_diff(const Field& a, const Field& b) {
    if (a.m != b.m || a.values.size() != b.values.size()) reject("field_diff: shape mismatch");
    Field out = a;
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] -= b.values[k];
    return out;
}

// W^{1,p} norm (||f||_p^p + ||Df||_p^p)^{1/p} over masked nodes.
inline double w1p_norm(const Field& f, double p, const std::vector<std::uint8_t>& mask) {
    double a = lp_norm(f, p, mask);
    double b = lp_norm(gradient(f), p, mask);
    return std::pow(std::pow(a, p) + std::pow(b, p), 1.0 / p);
}

// Rectangular node window [i0, i0+nx) x [j0, j0+ny) holding a sparse scalar
// field; used for per-ball cutoffs and partition weights.
struct WindowField {
    int i0 = 0, j0 = 0;
    int nx = 0, ny = 0;  // node counts in the window
    std::vector<double> values;

    std::size_t widx(int i, int j) const {
        return static_cast<std::size_t>(j - j0) * nx + (i - i0);
    }
    bool contains(int i, int j) const {
        return i >= i0 && i < i0 + nx && j >= j0 && j < j0 + ny;
    }
    double value_at(int i, int j) const { return contains(i, j) ? values[widx(i, j)] : 0.0; }
};

inline WindowField make_window(const Grid& g, Vec2 center, double radius) {
    WindowField w;
    w.i0 = std::max(0, static_cast<int>(std::floor((center.x - radius - g.origin.x) / g.h)) - 1);
    w.j0 = std::max(0, static_cast<int>(std::floor((center.y - radius - g.origin.y) / g.h)) - 1);
    int i1 = std::min(g.nx, static_cast<int>(std::ceil((center.x + radius - g.origin.x) / g.h)) + 1);
    int j1 = std::min(g.ny, static_cast<int>(std::ceil((center.y + radius - g.origin.y) / g.h)) + 1);
    w.nx = std::max(0, i1 - w.i0 + 1);
    w.ny = std::max(0, j1 - w.j0 + 1);
    w.values.assign(static_cast<std::size_t>(w.nx) * w.ny, 0.0);
    return w;
}

}  // namespace pqlab
