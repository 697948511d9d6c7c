#include "oracles.hpp"

#include "pdm/errors.hpp"
#include "pdm/geom.hpp"
#include "pdm/sampling.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using pdm::Point;

namespace {

std::vector<Point> random_points(pdm::Pcg64& rng, int count, int n, double scale = 1.0) {
    std::vector<Point> pts(count, Point(n));
    for (auto& p : pts) {
        for (auto& c : p) {
            c = scale * (2.0 * rng.uniform() - 1.0);
        }
    }
    return pts;
}

std::vector<Point> inscribed_with_origin(pdm::Pcg64& rng, int k) {
    for (;;) {
        std::vector<Point> u(k + 1, Point(k));
        for (auto& p : u) {
            pdm::sample_unit_sphere_into(rng, k, p.data());
        }
        if (pdm::visible_facet_count(pdm::smallest_circumsphere(u)) == 0) {
            return u;
        }
    }
}

double norm(const Point& p) {
    double s = 0.0;
    for (double c : p) {
        s += c * c;
    }
    return std::sqrt(s);
}

} // namespace

TEST_CASE("smallest circumsphere of an edge is its midpoint sphere") {
    const std::vector<Point> e{{0, 0}, {2, 0}};
    const auto s = pdm::smallest_circumsphere(e);
    CHECK(s.center[0] == doctest::Approx(1.0));
    CHECK(s.center[1] == doctest::Approx(0.0));
    CHECK(s.radius == doctest::Approx(1.0));
    CHECK(s.barycentric[0] == doctest::Approx(0.5));
    CHECK(s.barycentric[1] == doctest::Approx(0.5));
}

TEST_CASE("right triangle: center at the hypotenuse midpoint") {
    const std::vector<Point> exact{{0, 0}, {2, 0}, {0, 2}};
    const auto s = pdm::smallest_circumsphere(exact);
    CHECK(s.center[0] == doctest::Approx(1.0));
    CHECK(s.center[1] == doctest::Approx(1.0));
    CHECK(s.radius == doctest::Approx(std::sqrt(2.0)));
    CHECK(s.signs[0] == 0);
    CHECK_THROWS_AS(pdm::visible_facet_count(s), pdm::AmbiguousSign);

    const std::vector<Point> perturbed{{-1e-3, -2e-3}, {2, 0}, {0, 2}};
    const auto p = pdm::smallest_circumsphere(perturbed);
    CHECK(p.center[0] == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(pdm::visible_facet_count(p) == 0);
}

TEST_CASE("regular tetrahedron on the unit sphere") {
    const double a = 1.0 / std::sqrt(3.0);
    const std::vector<Point> t{{a, a, a}, {a, -a, -a}, {-a, a, -a}, {-a, -a, a}};
    const auto s = pdm::smallest_circumsphere(t);
    for (double c : s.center) {
        CHECK(std::fabs(c) < 1e-12);
    }
    CHECK(s.radius == doctest::Approx(1.0).epsilon(1e-12));
    for (double z : s.barycentric) {
        CHECK(z == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("degenerate simplices are rejected") {
    const std::vector<Point> collinear{{0, 0}, {1, 0}, {2, 0}};
    CHECK_THROWS_AS(pdm::smallest_circumsphere(collinear), pdm::DegenerateSimplex);
    const std::vector<Point> coincident{{1, 1, 1}, {1, 1, 1}};
    CHECK_THROWS_AS(pdm::smallest_circumsphere(coincident), pdm::DegenerateSimplex);
    pdm::Tolerances loose;
    loose.affine_rank = 0.1;
    const std::vector<Point> thin{{0, 0}, {1, 0}, {0.5, 0.01}};
    CHECK_THROWS_AS(pdm::smallest_circumsphere(thin, loose), pdm::DegenerateSimplex);
    CHECK_NOTHROW(pdm::smallest_circumsphere(thin));
}

TEST_CASE("circumsphere invariants against the rational oracle") {
    pdm::Pcg64 rng(11);
    for (int n = 2; n <= 4; ++n) {
        for (int k = 1; k <= n; ++k) {
            for (int trial = 0; trial < 40; ++trial) {
                const auto v = random_points(rng, k + 1, n, 3.0);
                const auto s = pdm::smallest_circumsphere(v);
                const auto o = oracle::circumsphere(v);
                double sum = 0.0;
                for (int i = 0; i <= k; ++i) {
                    sum += s.barycentric[i];
                    Point d(n);
                    for (int j = 0; j < n; ++j) {
                        d[j] = v[i][j] - s.center[j];
                    }
                    CHECK(std::fabs(norm(d) - s.radius) <= 1e-9 * (1.0 + s.radius));
                    const int expect = o.barycentric[i] > 0 ? 1 : (o.barycentric[i] < 0 ? -1 : 0);
                    CHECK(s.signs[i] == expect);
                    CHECK(s.barycentric[i] ==
                          doctest::Approx(static_cast<double>(o.barycentric[i])).epsilon(1e-7));
                }
                CHECK(std::fabs(sum - 1.0) <= 1e-10);
                // Center in the affine hull: it equals its own barycentric combination.
                for (int j = 0; j < n; ++j) {
                    double comb = 0.0;
                    for (int i = 0; i <= k; ++i) {
                        comb += s.barycentric[i] * v[i][j];
                    }
                    CHECK(std::fabs(comb - s.center[j]) <= 1e-9 * (1.0 + s.radius));
                }
            }
        }
    }
}

TEST_CASE("visible facets") {
    const double r3 = std::sqrt(3.0) / 2.0;
    const std::vector<Point> equilateral{{1, 0}, {-0.5, r3}, {-0.5, -r3}};
    CHECK(pdm::visible_facet_count(pdm::smallest_circumsphere(equilateral)) == 0);

    // Circumcenter of (0,0),(4,0),(2,0.6) solves 4 + y^2 = (0.6 - y)^2.
    const std::vector<Point> obtuse{{0, 0}, {4, 0}, {2, 0.6}};
    const auto s = pdm::smallest_circumsphere(obtuse);
    CHECK(s.center[1] == doctest::Approx((0.36 - 4.0) / 1.2));
    CHECK(pdm::visible_facet_count(s) == 1);
    CHECK(s.signs[2] == -1);

    // Zero visible facets exactly when the center is in the open simplex,
    // decided by the rational oracle.
    pdm::Pcg64 rng(5);
    for (int n = 2; n <= 4; ++n) {
        for (int trial = 0; trial < 100; ++trial) {
            const auto v = random_points(rng, n + 1, n);
            const auto o = oracle::circumsphere(v);
            bool inside = true;
            for (const auto& z : o.barycentric) {
                inside = inside && z > 0;
            }
            CHECK((pdm::visible_facet_count(pdm::smallest_circumsphere(v)) == 0) == inside);
        }
    }
}

TEST_CASE("simplex volume") {
    CHECK(pdm::simplex_volume(std::vector<Point>{{0, 0}, {1, 0}, {0, 1}}) == doctest::Approx(0.5));
    CHECK(pdm::simplex_volume(std::vector<Point>{{0, 0, 0}, {0, 0, 3}}) == doctest::Approx(3.0));
    CHECK(pdm::simplex_volume(std::vector<Point>{{0, 0}, {1, 0}, {2, 0}}) == 0.0);
    CHECK(pdm::simplex_volume(std::vector<Point>{{0, 0, 0, 0}, {1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0},
                                                 {0, 0, 0, 1}}) == doctest::Approx(1.0 / 24.0));
}

TEST_CASE("signed cone sums") {
    const std::vector<Point> seg{{1.0}, {-1.0}};
    const std::vector<int> plus2{1, 1};
    const auto p = pdm::signed_cone_sum(seg, plus2);
    CHECK(p.cone_volumes[0] == doctest::Approx(1.0));
    CHECK(p.cone_volumes[1] == doctest::Approx(1.0));
    CHECK(p.signed_sum == doctest::Approx(2.0));
    CHECK(p.minus_count == 0);

    const double r3 = std::sqrt(3.0) / 2.0;
    const std::vector<Point> tri{{1, 0}, {-0.5, r3}, {-0.5, -r3}};
    const std::vector<int> plus3{1, 1, 1};
    CHECK(pdm::signed_cone_sum(tri, plus3).signed_sum == doctest::Approx(3.0 * std::sqrt(3.0) / 4.0));
    const std::vector<int> bad{1, 0, 1};
    CHECK_THROWS_AS(pdm::signed_cone_sum(tri, bad), pdm::ConfigError);
    const std::vector<Point> off_sphere{{2, 0}, {-0.5, r3}, {-0.5, -r3}};
    CHECK_THROWS_AS(pdm::signed_cone_sum(off_sphere, plus3), pdm::ConfigError);
}

TEST_CASE("reflection and visibility laws on origin-containing inscribed simplices") {
    // For k = 1 a single reflection makes the two points coincide.
    pdm::Pcg64 rng(2024);
    for (int k = 2; k <= 4; ++k) {
        for (int trial = 0; trial < 30; ++trial) {
            const auto u = inscribed_with_origin(rng, k);
            for (unsigned mask = 0; mask < (1u << (k + 1)); ++mask) {
                std::vector<int> t(k + 1);
                std::vector<Point> tu(k + 1);
                std::vector<Point> neg(k + 1);
                for (int i = 0; i <= k; ++i) {
                    t[i] = (mask >> i) & 1u ? -1 : 1;
                    tu[i] = u[i];
                    for (auto& c : tu[i]) {
                        c *= t[i];
                    }
                    neg[i] = tu[i];
                    for (auto& c : neg[i]) {
                        c = -c;
                    }
                }
                const auto prof = pdm::signed_cone_sum(u, t);
                const int m = prof.minus_count;
                CHECK(std::fabs(std::fabs(prof.signed_sum) - pdm::simplex_volume(tu)) <= 1e-10);
                if (m <= 1) {
                    CHECK(prof.signed_sum > 0);
                }
                if (m >= k) {
                    CHECK(prof.signed_sum < 0);
                }
                const auto st = pdm::smallest_circumsphere(tu);
                const int vis = pdm::visible_facet_count(st);
                CHECK(vis == (prof.signed_sum > 0 ? m : k - m + 1));
                if (m == 1) {
                    CHECK(vis == 1);
                }
                const auto sn = pdm::smallest_circumsphere(neg);
                CHECK(sn.signs == st.signs);
                CHECK(pdm::simplex_volume(neg) == doctest::Approx(pdm::simplex_volume(tu)));
            }
        }
    }
}

TEST_CASE("in_sphere examples") {
    const std::vector<Point> circle{{1, 0}, {-1, 0}, {0, 1}};
    CHECK(pdm::in_sphere(circle, {0, 0}) == 1);
    CHECK(pdm::in_sphere(circle, {2, 0}) == -1);
    CHECK(pdm::in_sphere(circle, {0, -1}) == 0);
    const std::vector<Point> reversed{{-1, 0}, {1, 0}, {0, 1}};
    CHECK(pdm::in_sphere(reversed, {0, 0}) == 1);
    const std::vector<Point> flat{{0, 0}, {1, 0}, {2, 0}};
    CHECK_THROWS_AS(pdm::in_sphere(flat, {0, 1}), pdm::DegenerateSimplex);
    CHECK(pdm::orientation(circle) == -1);
    CHECK(pdm::orientation(reversed) == 1);
}

TEST_CASE("in_sphere is exact near the sphere") {
    pdm::Pcg64 rng(99);
    for (int n = 2; n <= 4; ++n) {
        for (int trial = 0; trial < 60; ++trial) {
            const auto v = random_points(rng, n + 1, n);
            const auto s = pdm::smallest_circumsphere(v);
            // A query at distance r from the center along a random direction,
            // nudged by a few ulps either way.
            Point dir(n);
            pdm::sample_unit_sphere_into(rng, n, dir.data());
            Point q(n);
            for (int j = 0; j < n; ++j) {
                q[j] = s.center[j] + s.radius * dir[j];
            }
            const auto o = oracle::circumsphere(v);
            CHECK(pdm::in_sphere(v, q) == oracle::inside_sign(o, q));
            for (int step = -3; step <= 3; ++step) {
                Point r = q;
                for (int j = 0; j < n; ++j) {
                    for (int s2 = 0; s2 < std::abs(step); ++s2) {
                        r[j] = std::nextafter(r[j], step > 0 ? s.center[j] : 2 * q[j] - s.center[j]);
                    }
                }
                CHECK(pdm::in_sphere(v, r) == oracle::inside_sign(o, r));
            }
            // Vertices themselves lie on the sphere.
            CHECK(pdm::in_sphere(v, v[0]) == 0);
        }
    }
}

TEST_CASE("kernel predicates agree with their exact versions") {
    pdm::Pcg64 rng(3);
    for (int n = 2; n <= 4; ++n) {
        for (int trial = 0; trial < 200; ++trial) {
            const auto v = random_points(rng, n + 2, n);
            std::vector<pdm::kernel::Coord> s;
            for (int i = 0; i <= n; ++i) {
                s.push_back(v[i].data());
            }
            CHECK(pdm::kernel::orient(s, n) == pdm::kernel::orient_exact(s, n));
            CHECK(pdm::kernel::in_sphere(s, v[n + 1].data(), n) ==
                  pdm::kernel::in_sphere_exact(s, v[n + 1].data(), n));
        }
    }
}

TEST_CASE("smallest-circumsphere membership is exact") {
    pdm::Pcg64 rng(17);
    for (int n = 2; n <= 4; ++n) {
        for (int k = 1; k < n; ++k) {
            for (int trial = 0; trial < 50; ++trial) {
                const auto v = random_points(rng, k + 1, n);
                const auto q = random_points(rng, 1, n)[0];
                std::vector<pdm::kernel::Coord> s;
                for (const auto& p : v) {
                    s.push_back(p.data());
                }
                const auto o = oracle::circumsphere(v);
                CHECK(pdm::kernel::in_smallest_circumsphere_exact(s, q.data(), n) == oracle::inside_sign(o, q));
                const auto sph = pdm::smallest_circumsphere(v);
                CHECK(pdm::kernel::in_smallest_circumsphere(s, sph.center.data(), sph.radius * sph.radius,
                                                            q.data(), n, {}) == oracle::inside_sign(o, q));
                CHECK(pdm::kernel::in_smallest_circumsphere(s, sph.center.data(), sph.radius * sph.radius,
                                                            v[0].data(), n, {}) == 0);
            }
        }
    }
}
