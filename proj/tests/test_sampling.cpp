#include "pdm/errors.hpp"
#include "pdm/sampling.hpp"

#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

TEST_CASE("generator is deterministic and substreams differ") {
    pdm::Pcg64 a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        CHECK(x == b());
        CHECK(x != c());
    }
    auto s0 = pdm::Pcg64::substream(7, 0);
    auto s1 = pdm::Pcg64::substream(7, 1);
    auto s0b = pdm::Pcg64::substream(7, 0);
    CHECK(s0() != s1());
    s0b();
    CHECK(s0() == s0b());
    pdm::Pcg64 u(1);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("Poisson variates have the right mean and variance") {
    for (double mean : {0.5, 5.0, 29.0, 31.0, 200.0, 1e4}) {
        pdm::Pcg64 rng(static_cast<std::uint64_t>(mean * 10));
        const int draws = 40000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < draws; ++i) {
            const double x = static_cast<double>(pdm::poisson_variate(mean, rng));
            s += x;
            s2 += x * x;
        }
        const double m = s / draws;
        const double var = s2 / draws - m * m;
        CHECK(std::fabs(m - mean) < 4.0 * std::sqrt(mean / draws));
        // Variance of the sample variance is about 2 mean^2 / draws for large means.
        CHECK(std::fabs(var - mean) < 5.0 * std::sqrt((2.0 * mean * mean + mean) / draws));
    }
    pdm::Pcg64 rng(1);
    CHECK(pdm::poisson_variate(0.0, rng) == 0);
    CHECK_THROWS_AS(pdm::poisson_variate(-1.0, rng), pdm::ConfigError);
}

TEST_CASE("expected point counts") {
    auto mean_count = [](pdm::Region region, double density, int trials) {
        double s = 0.0;
        for (int t = 0; t < trials; ++t) {
            pdm::ProcessConfig cfg{density, static_cast<std::uint64_t>(t + 1), region};
            s += static_cast<double>(pdm::sample_poisson(cfg).size());
        }
        return s / trials;
    };
    CHECK(pdm::Region::cube(2, 1.0).volume() == doctest::Approx(1.0));
    CHECK(pdm::Region::ball(2, 1.0).volume() == doctest::Approx(std::numbers::pi));
    const double m1 = mean_count(pdm::Region::cube(2, 1.0), 1.0, 20000);
    CHECK(std::fabs(m1 - 1.0) < 4.0 * std::sqrt(1.0 / 20000));
    const double mb = mean_count(pdm::Region::ball(2, 1.0), 1.0, 20000);
    CHECK(std::fabs(mb - std::numbers::pi) < 4.0 * std::sqrt(std::numbers::pi / 20000));
    const double big = mean_count(pdm::Region::cube(2, 100.0), 1.0, 100);
    CHECK(std::fabs(big - 1e4) < 3.0 * std::sqrt(1e4 / 100));
}

TEST_CASE("samples lie in the region and are reproducible") {
    const auto ball = pdm::Region::ball(3, 2.0, {1, 1, 1});
    pdm::ProcessConfig cfg{5.0, 99, ball};
    const auto a = pdm::sample_poisson(cfg);
    const auto b = pdm::sample_poisson(cfg);
    CHECK(a.coords == b.coords);
    CHECK(a.seed == 99);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(ball.contains(a.point(i)));
    }
    const auto torus = pdm::Region::cube(2, 10.0, true);
    const auto c = pdm::sample_poisson({1.0, 3, torus});
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (int j = 0; j < 2; ++j) {
            const double x = c.data(i)[j];
            CHECK(((x + 10.0) - 10.0) == x);
            CHECK(((x - 10.0) + 10.0) == x);
        }
    }
}

TEST_CASE("guards") {
    CHECK_THROWS_AS(pdm::sample_poisson({1.0, 1, pdm::Region::cube(3, 1e3)}), pdm::OverflowRisk);
    pdm::ProcessConfig capped{1.0, 1, pdm::Region::cube(2, 10.0)};
    capped.max_expected_points = 50;
    CHECK_THROWS_AS(pdm::sample_poisson(capped), pdm::OverflowRisk);
    CHECK_THROWS_AS(pdm::sample_poisson({0.0, 1, pdm::Region::cube(2, 1.0)}), pdm::ConfigError);
    CHECK_THROWS_AS(pdm::Region::cube(2, -1.0), pdm::ConfigError);
    CHECK_THROWS_AS(pdm::Region::ball(2, 0.0), pdm::ConfigError);
}

TEST_CASE("chi-square uniformity and sub-box independence") {
    const auto box = pdm::Region::cube(2, 316.0);
    const auto cloud = pdm::sample_poisson({1.0, 2718, box});
    REQUIRE(cloud.size() > 90000);
    const int bins = 20;
    std::vector<double> counts(bins * bins, 0.0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const int bx = std::min(bins - 1, static_cast<int>(cloud.data(i)[0] / 316.0 * bins));
        const int by = std::min(bins - 1, static_cast<int>(cloud.data(i)[1] / 316.0 * bins));
        counts[by * bins + bx] += 1.0;
    }
    const double expect = static_cast<double>(cloud.size()) / (bins * bins);
    double chi2 = 0.0;
    for (double c : counts) {
        chi2 += (c - expect) * (c - expect) / expect;
    }
    boost::math::chi_squared dist(bins * bins - 1);
    CHECK(boost::math::cdf(dist, chi2) < 0.999);

    // Counts in the left and right halves of a small box across trials are
    // uncorrelated.
    const int trials = 3000;
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (int t = 0; t < trials; ++t) {
        const auto c = pdm::sample_poisson({1.0, static_cast<std::uint64_t>(t + 1000), pdm::Region::cube(2, 6.0)});
        double left = 0, right = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            (c.data(i)[0] < 3.0 ? left : right) += 1.0;
        }
        sx += left;
        sy += right;
        sxy += left * right;
        sxx += left * left;
        syy += right * right;
    }
    const double cov = sxy / trials - (sx / trials) * (sy / trials);
    const double corr = cov / std::sqrt((sxx / trials - std::pow(sx / trials, 2)) *
                                        (syy / trials - std::pow(sy / trials, 2)));
    CHECK(std::fabs(corr) < 4.0 / std::sqrt(trials));
}

TEST_CASE("unit sphere samples") {
    const auto pts = pdm::sample_unit_sphere(3, 1000000, 8);
    double mean[3] = {0, 0, 0};
    for (const auto& p : pts) {
        CHECK(std::fabs(std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) - 1.0) <= 1e-12);
        for (int j = 0; j < 3; ++j) {
            mean[j] += p[j];
        }
    }
    for (double m : mean) {
        CHECK(std::fabs(m / 1e6) < 3e-3);
    }
    const auto s0 = pdm::sample_unit_sphere(1, 1000000, 9);
    double plus = 0;
    for (const auto& p : s0) {
        CHECK((p[0] == 1.0 || p[0] == -1.0));
        plus += p[0] > 0;
    }
    CHECK(std::fabs(plus / 1e6 - 0.5) < 3.0 * 0.5 / 1000.0);
    CHECK_THROWS_AS(pdm::sample_unit_sphere(0, 10, 1), pdm::ConfigError);
}

TEST_CASE("point cloud serialization round-trips") {
    const auto cloud = pdm::sample_poisson({2.0, 5, pdm::Region::cube(3, 3.0)});
    std::stringstream csv;
    pdm::write_cloud_csv(csv, cloud);
    CHECK(csv.str().rfind("dim,n_points,seed\n3,", 0) == 0);
    const auto back = pdm::read_cloud_csv(csv, cloud.region);
    CHECK(back.coords == cloud.coords);
    CHECK(back.seed == 5);
    std::stringstream bin;
    pdm::write_cloud_binary(bin, cloud);
    CHECK(bin.str().size() == 24 + 8 * cloud.coords.size());
    const auto back2 = pdm::read_cloud_binary(bin);
    CHECK(back2.coords == cloud.coords);
    CHECK(back2.dim == 3);
    std::stringstream bad("x,y\n");
    CHECK_THROWS_AS(pdm::read_cloud_csv(bad), pdm::ConfigError);
}
