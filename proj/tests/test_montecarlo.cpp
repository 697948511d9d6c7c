#include "pdm/errors.hpp"
#include "pdm/montecarlo.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

namespace {

bool within_sigmas(double value, double expect, double stderr_, double sigmas = 3.0) {
    return std::fabs(value - expect) <= sigmas * stderr_;
}

int count_lines(const std::string& s) {
    int lines = 0;
    for (char c : s) {
        lines += c == '\n' ? 1 : 0;
    }
    return lines;
}

} // namespace

TEST_CASE("Wendel probabilities") {
    const auto w1 = pdm::wendel_check(1, 200000, 4);
    CHECK(within_sigmas(w1.value, 0.5, w1.std_error));
    for (int k : {2, 3, 4}) {
        const auto w = pdm::wendel_check(k, 1000000, 10 + k);
        CAPTURE(k);
        CHECK(w.samples == 1000000);
        CHECK(within_sigmas(w.value, std::ldexp(1.0, -k), w.std_error));
    }
}

TEST_CASE("Wendel probability by enumeration of sign patterns") {
    // For generic u on the sphere, exactly 2 of the 2^{k+1} reflections
    // contain the origin; the Monte Carlo kernel must agree on each orbit.
    pdm::Pcg64 rng(5);
    for (int k = 2; k <= 4; ++k) {
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> u((k + 1) * k);
            for (int i = 0; i <= k; ++i) {
                pdm::sample_unit_sphere_into(rng, k, u.data() + i * k);
            }
            int containing = 0;
            for (int mask = 0; mask < (1 << (k + 1)); ++mask) {
                std::vector<pdm::Point> pts(k + 1, pdm::Point(k));
                for (int i = 0; i <= k; ++i) {
                    for (int c = 0; c < k; ++c) {
                        pts[i][c] = ((mask >> i) & 1 ? -1.0 : 1.0) * u[i * k + c];
                    }
                }
                const auto sphere = pdm::smallest_circumsphere(pts);
                containing += pdm::visible_facet_count(sphere) == 0 ? 1 : 0;
            }
            CHECK(containing == 2);
        }
    }
}

TEST_CASE("spherical expectations by Monte Carlo") {
    for (int n = 2; n <= 4; ++n) {
        const auto d = pdm::estimate_spherical_expectation(1, 1, n, 100000, 3, pdm::SphereMethod::direct);
        CHECK(within_sigmas(d.value, std::ldexp(1.0, n - 1), d.std_error));
        const auto r = pdm::estimate_spherical_expectation(1, 1, n, 100000, 3, pdm::SphereMethod::reduced);
        CHECK(r.value == std::ldexp(1.0, n - 1));
        CHECK(r.std_error == 0.0);
    }
    const auto e = pdm::estimate_spherical_expectation(2, 2, 3, 1000000, 9, pdm::SphereMethod::direct);
    CHECK(within_sigmas(e.value, pdm::constant_C(2, 2, 3) / pdm::factor_f(2, 3), e.std_error));
    CHECK(e.value == doctest::Approx(4.85 / (2 * M_PI * M_PI)).epsilon(0.01));

    for (int n = 2; n <= 4; ++n) {
        for (int k = 1; k <= n; ++k) {
            for (int ell = 1; ell <= k; ++ell) {
                CAPTURE(n);
                CAPTURE(k);
                CAPTURE(ell);
                const auto d = pdm::estimate_spherical_expectation(ell, k, n, 200000, 21, pdm::SphereMethod::direct);
                const auto r = pdm::estimate_spherical_expectation(ell, k, n, 200000, 22, pdm::SphereMethod::reduced);
                // 51 simultaneous comparisons; 4 sigma keeps the family-wise
                // false alarm rate below 1%.
                CHECK(within_sigmas(d.value, r.value, std::hypot(d.std_error, r.std_error), 4.0));
                const double c = pdm::constant_C(ell, k, n) / pdm::factor_f(k, n);
                CHECK(within_sigmas(d.value, c, d.std_error, 4.0));
                CHECK(within_sigmas(r.value, c, r.std_error + 1e-15, 4.0));
            }
        }
    }
    CHECK_THROWS_AS(pdm::estimate_spherical_expectation(1, 2, 3, 100, 1, pdm::SphereMethod::direct), pdm::ConfigError);
    CHECK_THROWS_AS(pdm::estimate_spherical_expectation(0, 2, 3, 100000, 1, pdm::SphereMethod::direct),
                    pdm::ConfigError);
    CHECK_THROWS_AS(pdm::estimate_spherical_expectation(1, 3, 2, 100000, 1, pdm::SphereMethod::direct),
                    pdm::ConfigError);
    CHECK(pdm::sphere_method_from_string("reduced") == pdm::SphereMethod::reduced);
    CHECK_THROWS_AS(pdm::sphere_method_from_string("other"), pdm::ConfigError);
}

TEST_CASE("estimators are reproducible and independent of the thread count") {
    pdm::set_thread_limit(1);
    const auto a = pdm::estimate_spherical_expectation(2, 3, 4, 300000, 77, pdm::SphereMethod::direct);
    pdm::set_thread_limit(3);
    const auto b = pdm::estimate_spherical_expectation(2, 3, 4, 300000, 77, pdm::SphereMethod::direct);
    pdm::set_thread_limit(0);
    const auto c = pdm::estimate_spherical_expectation(2, 3, 4, 300000, 78, pdm::SphereMethod::direct);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
    CHECK(a.value != c.value);
    const auto j = pdm::to_json(a, "E", {{"ell", 2}});
    for (const char* key : {"quantity", "params", "value", "stderr", "samples", "seed", "wall_time"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["seed"] == 77);
}

TEST_CASE("Blaschke-Petkantschin identity") {
    for (auto [k, n] : {std::pair{1, 2}, std::pair{2, 2}, std::pair{2, 3}, std::pair{1, 3}}) {
        CAPTURE(k);
        CAPTURE(n);
        const auto bp = pdm::bp_identity_check(k, n, 400000, 5);
        CHECK(bp.exact == doctest::Approx(std::pow(M_PI, 0.5 * n * (k + 1))));
        CHECK(within_sigmas(bp.lhs.value, bp.exact, bp.lhs.std_error));
        CHECK(within_sigmas(bp.rhs.value, bp.exact, bp.rhs.std_error));
        CHECK(bp.agree(0.02));
    }
    CHECK_THROWS_AS(pdm::bp_identity_check(2, 4, 1000, 1), pdm::ConfigError);
    CHECK_THROWS_AS(pdm::bp_identity_check(3, 2, 1000, 1), pdm::ConfigError);
}

TEST_CASE("empirical constants on small tori") {
    const auto runs = pdm::estimate_constants_empirical(2, 1.0, pdm::Region::cube(2, 30, true), 3, 17);
    REQUIRE(runs.trials.size() == 3);
    CHECK(runs.invariants_ok());
    for (const auto& t : runs.trials) {
        const auto& d = t.census.simplex_counts;
        CHECK(d[0] == static_cast<long>(t.points));
        CHECK(d[1] == 3 * d[0]);
        CHECK(d[2] == 2 * d[0]);
        CHECK(t.checks.size() == 7);
    }
    CHECK(runs.report.D[1] == doctest::Approx(3.0).epsilon(0.08));
    CHECK(runs.report.C_provenance[2][2] == pdm::Provenance::mosaic_mc);
    CHECK(runs.report.D_stderr[1] > 0.0);

    const auto again = pdm::estimate_constants_empirical(2, 1.0, pdm::Region::cube(2, 30, true), 3, 17);
    CHECK(again.report.C[1][2] == runs.report.C[1][2]);

    const auto j = pdm::to_json(runs);
    CHECK(j["trials"].size() == 3);
    CHECK(j["C"][2][2]["provenance"] == "mosaic-mc");
    CHECK(j["C"][2][2].contains("stderr"));
    CHECK(j["invariants_ok"] == true);

    CHECK_THROWS_AS(pdm::estimate_constants_empirical(2, 1.0, pdm::Region::cube(2, 30, false), 1, 1),
                    pdm::ConfigError);
    CHECK_THROWS_AS(pdm::estimate_constants_empirical(4, 1.0, pdm::Region::cube(4, 2, true), 1, 1),
                    pdm::TorusTooSparse);
    CHECK_THROWS_AS(pdm::estimate_constants_empirical(5, 1.0, pdm::Region::cube(5, 2, true), 1, 1),
                    pdm::UnsupportedDimension);
}

TEST_CASE("trial invariants detect corrupted counts") {
    pdm::ProcessConfig config;
    config.seed = 3;
    config.region = pdm::Region::cube(3, 6, true);
    const auto cloud = pdm::sample_poisson(config);
    pdm::TriangulateOptions topt;
    topt.topology = pdm::Topology::torus;
    const auto mosaic = pdm::triangulate(cloud, topt);
    const auto dec = pdm::decompose(mosaic, cloud);
    auto cen = pdm::census(dec.intervals, config.region, 1.0);
    for (const auto& c : pdm::check_trial_invariants(mosaic, dec, cen)) {
        CAPTURE(c.name);
        CAPTURE(c.detail);
        CHECK(c.ok);
    }
    cen.counts[1][2] += 1;
    bool combination_ok = true;
    for (const auto& c : pdm::check_trial_invariants(mosaic, dec, cen)) {
        if (c.name == "interval_to_simplex_counts") {
            combination_ok = c.ok;
        }
    }
    CHECK_FALSE(combination_ok);
    auto broken = dec;
    broken.rad.interval[1][0] = broken.rad.interval[1][1];
    bool partition_ok = true;
    for (const auto& c : pdm::check_trial_invariants(mosaic, broken, cen)) {
        if (c.name == "interval_partition") {
            partition_ok = c.ok;
        }
    }
    CHECK_FALSE(partition_ok);
}

TEST_CASE("radius distributions against the Gamma laws") {
    const auto runs = pdm::estimate_constants_empirical(2, 1.0, pdm::Region::cube(2, 60, true), 4, 23);
    for (auto t : {pdm::RadiusTarget::interval(1, 1), pdm::RadiusTarget::interval(1, 2),
                   pdm::RadiusTarget::interval(2, 2), pdm::RadiusTarget::simplex(1), pdm::RadiusTarget::simplex(2)}) {
        const auto cmp = pdm::compare_radius_distribution(runs, t);
        CAPTURE(t.label());
        CHECK(cmp.sample_count >= 10000);
        CHECK(cmp.passes());
        CHECK(cmp.dkw_threshold == doctest::Approx(std::sqrt(std::log(2000.0) / (2.0 * cmp.sample_count))));
        CHECK(std::is_sorted(cmp.radii.begin(), cmp.radii.end()));
        CHECK(cmp.theory(cmp.radii.back() * 10) == doctest::Approx(1.0));
        double share = 0.0;
        for (const auto& m : cmp.trial_mixture) {
            share += m[0];
        }
        CHECK(share == doctest::Approx(1.0));
    }
    const auto tri = pdm::compare_radius_distribution(runs, pdm::RadiusTarget::simplex(2));
    CHECK(tri.intensity == doctest::Approx(2.0));
    CHECK(tri.theory_cdf == "radius_cdf_simplex(j=2,n=2)");

    std::ostringstream cdf, dens, svg;
    pdm::write_cdf_csv(cdf, tri, 50);
    CHECK(cdf.str().rfind("r,empirical_cdf,theory_cdf,theory_cdf_nominal\n", 0) == 0);
    CHECK(count_lines(cdf.str()) == 52);
    // The grid ends beyond the largest radius, where the empirical CDF is 1.
    const std::string last = cdf.str().substr(cdf.str().rfind('\n', cdf.str().size() - 2) + 1);
    CHECK(last.find(",1,") != std::string::npos);
    pdm::write_density_csv(dens, tri, 30);
    CHECK(count_lines(dens.str()) == 31);
    pdm::write_distribution_svg(svg, tri, "seed 23");
    CHECK(svg.str().find("<svg") != std::string::npos);
    CHECK(svg.str().find("<!-- seed 23 -->") != std::string::npos);
    CHECK(pdm::to_json(tri)["pass"] == tri.passes());

    CHECK_THROWS_AS(pdm::compare_radius_distribution(runs, pdm::RadiusTarget::simplex(3)), pdm::ConfigError);
    CHECK_THROWS_AS(pdm::compare_radius_distribution(runs, pdm::RadiusTarget::interval(2, 1)), pdm::ConfigError);
}

TEST_CASE("boundary effect study") {
    pdm::BoundaryOptions opt;
    opt.tail_simplices = 2e5;
    const auto study = pdm::boundary_effect_study(2, 1.0, {4, 8, 16}, 3, 31, opt);
    REQUIRE(study.rows.size() == 3);
    for (const auto& row : study.rows) {
        CHECK(row.contractible_trials == row.trials);
        CHECK(row.k1_mean > 0.0);
        CHECK(row.ratio > 0.0);
    }
    CHECK(study.ratios_decreasing());
    REQUIRE(study.tail.size() == 3);
    CHECK(study.tail_total > 150000);
    for (const auto& t : study.tail) {
        CAPTURE(t.r0);
        CHECK(std::fabs(t.fraction - t.theory) <= 5 * t.std_error + 1e-6);
    }
    CHECK(study.envelope(1.0) == doctest::Approx(study.tail[0].fraction));
    CHECK(study.envelope(1.5) == doctest::Approx(study.tail[1].fraction));
    const auto j = pdm::to_json(study);
    CHECK(j["rows"].size() == 3);
    CHECK(j.contains("tail_below_envelope"));

    CHECK_THROWS_AS(pdm::boundary_effect_study(2, 1.0, {8, 4}, 1, 1, opt), pdm::ConfigError);
    pdm::BoundaryOptions tight = opt;
    tight.margin = 0.5;
    CHECK_THROWS_AS(pdm::boundary_effect_study(2, 1.0, {6}, 1, 1, tight), pdm::MarginTooSmall);
}
