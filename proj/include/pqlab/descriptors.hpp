#pragma once

#include "pqlab/field_ops.hpp"

namespace pqlab {

// Analytic scalar test/boundary functions used by experiment configs.
struct FieldDescriptor {
    enum class Type { zero, affine, bump, radial_power, log_log, interface_tanh } type =
        Type::zero;
    // affine: a0 + ax x + ay y
    double a0 = 0.0, ax = 0.0, ay = 0.0;
    // bump / radial_power / log_log
    Vec2 center{0.5, 0.5};
    double radius = 0.25;     // bump support radius
    double amplitude = 1.0;   // overall scale
    double beta = 0.5;        // radial_power exponent
    double cap = 50.0;        // log_log value cap
    double background = 0.0;  // additive smooth background amplitude
    // interface_tanh: amplitude * tanh((x - center.x)/width)
    double width = 0.05;

    double operator()(Vec2 x) const {
        switch (type) {
            case Type::zero:
                return 0.0;
            case Type::affine:
                return a0 + ax * x.x + ay * x.y;
            case Type::bump: {
                double r2 = (x - center).norm2() / (radius * radius);
                double v = r2 >= 1.0 ? 0.0 : amplitude * std::pow(1.0 - r2, 3);
                return v + background_term(x);
            }
            case Type::radial_power: {
                double r = std::max((x - center).norm(), 1e-300);
                return amplitude * std::pow(r, beta) + background_term(x);
            }
            case Type::log_log: {
                double r = std::max((x - center).norm(), 1e-300);
                double v = amplitude * std::log(std::abs(std::log(std::min(r, 0.5))));
                return std::min(v, cap) + background_term(x);
            }
            case Type::interface_tanh:
                return amplitude * std::tanh((x.x - center.x) / width) + background_term(x);
        }
        return 0.0;
    }

    double background_term(Vec2 x) const {
        if (background == 0.0) return 0.0;
        return background * std::sin(M_PI * x.x) * std::sin(M_PI * x.y);
    }
};

inline Field sample_descriptor(const FieldDescriptor& d, std::shared_ptr<const Grid> grid) {
    Field f(grid, 1);
    const Grid& g = *grid;
    for (int j = 0; j < g.nodes_y(); ++j)
        for (int i = 0; i < g.nodes_x(); ++i) f.at(g.idx(i, j), 0) = d(g.node(i, j));
    f.check_finite("descriptor field");
    return f;
}

}  // namespace pqlab
