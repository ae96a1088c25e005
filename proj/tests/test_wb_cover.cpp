#include <catch2/catch_amalgamated.hpp>

#include "pqlab/wb_cover.hpp"

using namespace pqlab;

namespace {

Domain unit_square() {
    Domain d;
    d.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    return d;
}

Domain ngon(int n, double radius) {
    Domain d;
    for (int k = 0; k < n; ++k) {
        double a = 2.0 * M_PI * k / n;
        d.vertices.push_back({radius * std::cos(a), radius * std::sin(a)});
    }
    return d;
}

}  // namespace

TEST_CASE("build_wb_covering on the unit square passes its own audit") {
    Domain d = unit_square();
    Covering cov = build_wb_covering(d, 0.02, 0.25);
    REQUIRE_FALSE(cov.balls.empty());
    CHECK(cov.delta == Catch::Approx(0.25));

    for (const Ball& b : cov.balls) {
        CHECK(b.r >= 0.02);
        CHECK(b.r <= 1.0);
        double sd = signed_distance(d, b.center);
        CHECK(sd >= (1.0 + cov.delta) * b.r);  // dilations stay inside
        CHECK(b.r == Catch::Approx(0.25 * sd));
    }

    CoveringAudit audit = audit_covering(cov, d, 0.02 / 5.0);
    CHECK(audit.passed);
    CHECK(audit.coverage_defect < 1e-3);
    CHECK(audit.max_multiplicity <= cov.M);
    CHECK(audit.min_overlap_ratio >= cov.eps_ov - 1e-12);
    CHECK(audit.containment_ok);
}

TEST_CASE("coverage holds on the region away from the truncation strip") {
    Domain d = unit_square();
    double r_min = 0.02;
    Covering cov = build_wb_covering(d, r_min, 0.25);
    auto grid = build_grid(d, r_min / 5.0, 0.0);
    for (int j = 0; j < grid->nodes_y(); ++j) {
        for (int i = 0; i < grid->nodes_x(); ++i) {
            std::size_t k = grid->idx(i, j);
            if (!grid->inside_mask[k]) continue;
            if (grid->signed_dist[k] < kUncoveredStripFactor * r_min) continue;
            bool covered = false;
            for (const Ball& b : cov.balls)
                if (dist(grid->node(i, j), b.center) < b.r) {
                    covered = true;
                    break;
                }
            REQUIRE(covered);
        }
    }
}

TEST_CASE("lambda too large for the dilation is rejected") {
    Domain d = unit_square();
    CHECK_THROWS_MATCHES(build_wb_covering(d, 0.05, 0.85), rejection,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("boundary")));
}

TEST_CASE("degenerate request yields rejection") {
    Domain d = unit_square();
    // r_min so large no Whitney square survives
    CHECK_THROWS_AS(build_wb_covering(d, 0.9, 0.25), rejection);
}

TEST_CASE("duplicated ball raises multiplicity and maxes the overlap ratio") {
    Domain d = unit_square();
    Covering cov = build_wb_covering(d, 0.05, 0.25);
    CoveringAudit before = audit_covering(cov, d, 0.005);

    Covering dup = cov;
    dup.balls.push_back(dup.balls.front());
    dup.rebuild_neighbor_index();
    CoveringAudit after = audit_covering(dup, d, 0.005);
    CHECK(after.max_multiplicity == before.max_multiplicity + 1);
    // the duplicate pair overlaps itself entirely
    CHECK(lens_area(dup.balls.front(), dup.balls.back()) ==
          Catch::Approx(M_PI * dup.balls.front().r * dup.balls.front().r));
}

TEST_CASE("single ball audit on a disk domain") {
    Domain d = ngon(64, 1.0);
    Covering cov;
    cov.r_min = 0.02;
    cov.delta = 0.25;
    cov.balls = {{{0.0, 0.0}, 0.5}};
    cov.M = 1;
    cov.eps_ov = 0.0;
    cov.rebuild_neighbor_index();
    CoveringAudit audit = audit_covering(cov, d, 0.004);
    CHECK(audit.max_multiplicity == 1);
    // uncovered annulus fraction on {d >= 8 r_min}: region is the disk of
    // radius ~ R_in - 0.16 around 0, ball covers radius 0.5
    CHECK(audit.coverage_defect > 0.0);
    double rin = std::cos(M_PI / 64.0);                  // inradius of the 64-gon
    double region = rin - kUncoveredStripFactor * 0.02;  // region radius
    double expect = 1.0 - (0.5 * 0.5) / (region * region);
    CHECK(audit.coverage_defect == Catch::Approx(expect).margin(0.02));
}

TEST_CASE("overlap lens area formula") {
    Ball a{{0, 0}, 1.0};
    SECTION("disjoint") { CHECK(lens_area(a, {{3, 0}, 1.0}) == 0.0); }
    SECTION("contained") { CHECK(lens_area(a, {{0.1, 0}, 0.2}) == Catch::Approx(M_PI * 0.04)); }
    SECTION("half-overlap vs quadrature oracle") {
        Ball b{{1.0, 0}, 1.0};
        // oracle: 2D midpoint quadrature of the indicator product
        int n = 2000;
        double cell = 4.0 / n, acc = 0.0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                Vec2 p{-2.0 + (i + 0.5) * cell, -2.0 + (j + 0.5) * cell};
                if (p.norm() < 1.0 && dist(p, b.center) < 1.0) acc += cell * cell;
            }
        CHECK(lens_area(a, b) == Catch::Approx(acc).epsilon(1e-3));
    }
}

TEST_CASE("neighbors: symmetry, separation, audit consistency") {
    Domain d = unit_square();
    Covering cov = build_wb_covering(d, 0.04, 0.25);
    CoveringAudit audit = audit_covering(cov, d, 0.008);

    double factor = 1.0 + cov.delta / 2.0;
    for (int i = 0; i < static_cast<int>(cov.balls.size()); ++i) {
        auto ni = neighbors(cov, i, factor);
        for (int j : ni) {
            auto nj = neighbors(cov, j, factor);
            CHECK(std::find(nj.begin(), nj.end(), i) != nj.end());
            double ratio = cov.balls[i].r / cov.balls[j].r;
            CHECK(std::max(ratio, 1.0 / ratio) <= audit.radius_ratio_bound + 1e-12);
        }
    }

    SECTION("far balls are not neighbors at factor 1+delta") {
        Covering two;
        two.delta = 0.25;
        two.r_min = 0.1;
        two.balls = {{{0.2, 0.2}, 0.1}, {{0.8, 0.8}, 0.1}};
        two.rebuild_neighbor_index();
        CHECK(neighbors(two, 0, 1.25).empty());
    }
    SECTION("bad factor and index are rejected") {
        CHECK_THROWS_AS(neighbors(cov, 0, 2.0), rejection);
        CHECK_THROWS_AS(neighbors(cov, -1, 1.0), rejection);
        CHECK_THROWS_AS(neighbors(cov, static_cast<int>(cov.balls.size()), 1.0), rejection);
    }
}

TEST_CASE("boundary comparability constant is reported and moderate") {
    Domain d = ngon(64, 1.0);
    Covering cov = build_wb_covering(d, 0.1, 0.25);
    CoveringAudit audit = audit_covering(cov, d, 0.02);
    CHECK(audit.c_boundary >= 1.0);
    CHECK(audit.c_boundary < 10.0);
    CHECK(audit.max_multiplicity <= 40);  // reported value for this catalog domain
}

TEST_CASE("ball enumeration order is radius-descending lexicographic") {
    Domain d = unit_square();
    Covering cov = build_wb_covering(d, 0.03, 0.25);
    for (std::size_t i = 1; i < cov.balls.size(); ++i) {
        const Ball& a = cov.balls[i - 1];
        const Ball& b = cov.balls[i];
        bool ordered = a.r > b.r || (a.r == b.r && (a.center.x < b.center.x ||
                                                    (a.center.x == b.center.x &&
                                                     a.center.y <= b.center.y)));
        CHECK(ordered);
    }
}

TEST_CASE("audit rejects an over-coarse probe grid") {
    Domain d = unit_square();
    Covering cov = build_wb_covering(d, 0.05, 0.25);
    CHECK_THROWS_AS(audit_covering(cov, d, 0.05), rejection);
}
