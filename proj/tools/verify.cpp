#include "cli.hpp"
#include "reference_values.hpp"

#include "pdm/delaunay.hpp"
#include "pdm/errors.hpp"
#include "pdm/geom.hpp"
#include "pdm/montecarlo.hpp"
#include "pdm/morse.hpp"
#include "pdm/sampling.hpp"
#include "pdm/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>

namespace pdm::cli {

using nlohmann::json;

namespace {

using Suite = std::function<void(std::uint64_t, std::vector<Check>&)>;

void add(std::vector<Check>& out, const char* suite, std::string name, bool pass, json data = nullptr) {
    out.push_back({suite, std::move(name), pass, std::move(data)});
}

Point gaussian_point(Pcg64& rng, int n, double scale = 1.0) {
    Point p(n);
    for (auto& x : p) {
        x = scale * rng.normal();
    }
    return p;
}

/// |det[v_1 - v_0, ..., v_k - v_0]| / k! for k+1 points of R^k.
double full_volume(const std::vector<Point>& v) {
    const int k = static_cast<int>(v.size()) - 1;
    std::vector<double> m(static_cast<std::size_t>(k * k));
    for (int i = 0; i < k; ++i) {
        for (int c = 0; c < k; ++c) {
            m[i * k + c] = v[i + 1][c] - v[0][c];
        }
    }
    return std::fabs(kernel::det(m.data(), k)) / std::tgamma(k + 1.0);
}

double dist(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return std::sqrt(s);
}

// geometry

void suite_geometry(std::uint64_t seed, std::vector<Check>& out) {
    Pcg64 rng = Pcg64::substream(seed, 1);
    for (int n = 2; n <= 4; ++n) {
        for (int k = 1; k <= n; ++k) {
            double worst_radius = 0.0, worst_hull = 0.0;
            for (int trial = 0; trial < 200; ++trial) {
                std::vector<Point> v(k + 1);
                for (auto& p : v) {
                    p = gaussian_point(rng, n);
                }
                const Circumsphere s = smallest_circumsphere(v);
                // Hull residuals are relative to the size of the summed terms.
                Point recon(n, 0.0);
                double bsum = 0.0, babs = 0.0, scale = 0.0;
                for (int i = 0; i <= k; ++i) {
                    worst_radius = std::max(worst_radius, std::fabs(dist(v[i], s.center) - s.radius) / s.radius);
                    bsum += s.barycentric[i];
                    babs += std::fabs(s.barycentric[i]);
                    scale += std::fabs(s.barycentric[i]) * dist(v[i], Point(n, 0.0));
                    for (int c = 0; c < n; ++c) {
                        recon[c] += s.barycentric[i] * v[i][c];
                    }
                }
                worst_hull = std::max({worst_hull, std::fabs(bsum - 1.0) / babs, dist(recon, s.center) / scale});
            }
            add(out, "geometry", "circumsphere_residual_n" + std::to_string(n) + "_k" + std::to_string(k),
                worst_radius < 1e-10 && worst_hull < 1e-10,
                {{"max_relative_radius_residual", worst_radius}, {"max_affine_hull_residual", worst_hull}});
        }
    }
    for (int n = 2; n <= 4; ++n) {
        bool ok = true;
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<Point> v(n + 1);
            for (auto& p : v) {
                p = gaussian_point(rng, n);
            }
            const int o = orientation(v);
            const int a = static_cast<int>(rng.uniform() * (n + 1)) % (n + 1);
            const int b = (a + 1 + static_cast<int>(rng.uniform() * n) % n) % (n + 1);
            std::swap(v[a], v[b]);
            ok = ok && o != 0 && orientation(v) == -o;
            Point q = gaussian_point(rng, n);
            const int s1 = in_sphere(v, q);
            std::swap(v[a], v[b]);
            ok = ok && in_sphere(v, q) == s1;
        }
        add(out, "geometry", "orientation_antisymmetry_n" + std::to_string(n), ok);
    }
    // Inscribed simplices containing the origin: the all-plus signed cone sum
    // is the volume, and every reflection pattern t satisfies |sigma_t| = Vol(t u).
    for (int k = 2; k <= 4; ++k) {
        double worst = 0.0;
        int found = 0;
        while (found < 100) {
            std::vector<Point> u(k + 1);
            for (auto& p : u) {
                p = gaussian_point(rng, k);
                const double r = dist(p, Point(k, 0.0));
                for (auto& x : p) {
                    x /= r;
                }
            }
            const Circumsphere s = smallest_circumsphere(u);
            if (std::any_of(s.signs.begin(), s.signs.end(), [](int x) { return x <= 0; })) {
                continue;
            }
            ++found;
            const std::vector<int> plus(k + 1, 1);
            // Residuals are relative to the total cone volume.
            const double vol = full_volume(u);
            const auto all_plus = signed_cone_sum(u, plus);
            double cones = 0.0;
            for (double c : all_plus.cone_volumes) {
                cones += c;
            }
            worst = std::max(worst, std::fabs(all_plus.signed_sum - vol) / cones);
            for (unsigned mask = 1; mask < (1u << (k + 1)); ++mask) {
                std::vector<int> t(k + 1);
                std::vector<Point> tu(u);
                for (int i = 0; i <= k; ++i) {
                    t[i] = (mask >> i) & 1u ? -1 : 1;
                    for (auto& x : tu[i]) {
                        x *= t[i];
                    }
                }
                const double vt = full_volume(tu);
                worst = std::max(worst, std::fabs(std::fabs(signed_cone_sum(u, t).signed_sum) - vt) / cones);
            }
        }
        add(out, "geometry", "signed_cone_volume_k" + std::to_string(k), worst < 1e-10,
            {{"max_relative_residual", worst}, {"simplices", found}});
    }
}

// mosaic and morse

struct SmallTorus {
    int n;
    double side;
};

constexpr SmallTorus kSmallTori[] = {{2, 30.0}, {3, 9.0}, {4, 5.0}};

void suite_mosaic(std::uint64_t seed, std::vector<Check>& out) {
    for (const auto& t : kSmallTori) {
        ProcessConfig config;
        config.density = 1.0;
        config.seed = mix64(seed ^ static_cast<std::uint64_t>(t.n));
        config.region = Region::cube(t.n, t.side, true);
        const PointCloud cloud = sample_poisson(config);
        const Mosaic m = triangulate(cloud, Topology::torus);
        const DelaunayReport rep = verify_delaunay(m, cloud);
        const std::string tag = "_n" + std::to_string(t.n);
        add(out, "mosaic", "empty_circumspheres" + tag, rep.ok,
            {{"points", cloud.size()}, {"top_simplices", rep.top_simplices}});
        add(out, "mosaic", "torus_euler_zero" + tag, m.euler_characteristic() == 0,
            {{"euler_characteristic", m.euler_characteristic()}});
        bool two = true;
        for (std::size_t i = 0; i < m.count(t.n - 1); ++i) {
            two = two && m.cofaces(t.n - 1, i).size() == 2;
        }
        add(out, "mosaic", "ridge_two_cofaces" + tag, two);
        json counts = json::array();
        for (int j = 0; j <= t.n; ++j) {
            counts.push_back(m.count(j));
        }
        add(out, "mosaic", "top_count_ratio" + tag,
            2 * m.count(t.n - 1) == static_cast<std::size_t>(t.n + 1) * m.count(t.n), {{"simplex_counts", counts}});

        ProcessConfig euclid = config;
        euclid.region = Region::cube(t.n, t.side, false);
        const PointCloud ec = sample_poisson(euclid);
        const Mosaic em = triangulate(ec, Topology::euclidean);
        const DelaunayReport erep = verify_delaunay(em, ec);
        add(out, "mosaic", "euclidean_empty_circumspheres" + tag, erep.ok && em.euler_characteristic() == 1,
            {{"points", ec.size()}, {"euler_characteristic", em.euler_characteristic()}});
    }
}

void suite_morse(std::uint64_t seed, std::vector<Check>& out) {
    for (const auto& t : kSmallTori) {
        const auto runs = estimate_constants_empirical(t.n, 1.0, Region::cube(t.n, t.side, true), 2, seed);
        for (const auto& trial : runs.trials) {
            for (const auto& c : trial.checks) {
                add(out, "morse", c.name + "_n" + std::to_string(t.n) + "_trial" + std::to_string(trial.index), c.ok,
                    c.detail.empty() ? json(nullptr) : json{{"detail", c.detail}});
            }
        }
    }
}

// theory

void suite_theory(std::uint64_t, std::vector<Check>& out) {
    auto table_check = [&out](const reference::PrintedEntry& e) {
        const double v = e.ell < 0 ? constant_D(e.k, e.n) : constant_C(e.ell, e.k, e.n);
        const std::string name = (e.ell < 0 ? "table_D" + std::to_string(e.k)
                                            : "table_C" + std::to_string(e.ell) + std::to_string(e.k)) +
                                 "_n" + std::to_string(e.n);
        // Printed tables truncate to two decimals.
        add(out, "theory", name, reference::truncate2(v) == e.printed, {{"value", v}, {"printed", e.printed}});
    };
    for (const auto& e : reference::kIntervalTable) {
        table_check(e);
    }
    for (const auto& e : reference::kSimplexTable) {
        table_check(e);
    }
    for (const auto& e : reference::kExactTable) {
        const PiNumber x = e.ell < 0 ? constant_D_exact(e.k, e.n) : constant_C_exact(e.ell, e.k, e.n);
        const double v = e.ell < 0 ? constant_D(e.k, e.n) : constant_C(e.ell, e.k, e.n);
        const std::string name = (e.ell < 0 ? "exact_D" + std::to_string(e.k)
                                            : "exact_C" + std::to_string(e.ell) + std::to_string(e.k)) +
                                 "_n" + std::to_string(e.n);
        const double rel = std::fabs(v - e.value) / e.value;
        add(out, "theory", name, x.to_string() == e.text && rel < 1e-12 && std::fabs(x.to_double() - e.value) < 1e-12 * e.value,
            {{"exact", x.to_string()}, {"expected", e.text}, {"relative_error", rel}});
    }
    for (int n = 2; n <= 4; ++n) {
        PiNumber alt_d, alt_c;
        for (int j = 0; j <= n; ++j) {
            alt_d += (j % 2 == 0 ? PiNumber(1) : PiNumber(-1)) * constant_D_exact(j, n);
            alt_c += (j % 2 == 0 ? PiNumber(1) : PiNumber(-1)) * constant_C_exact(j, j, n);
        }
        const std::string tag = "_n" + std::to_string(n);
        add(out, "theory", "alternating_D_sum" + tag, alt_d.is_zero(), {{"sum", alt_d.to_string()}});
        add(out, "theory", "alternating_critical_sum" + tag, alt_c.is_zero(), {{"sum", alt_c.to_string()}});
        const PiNumber ridge = constant_D_exact(n - 1, n) * PiNumber::rational(2) -
                               constant_D_exact(n, n) * PiNumber::rational(n + 1);
        add(out, "theory", "ridge_top_relation" + tag, ridge.is_zero());
        PiNumber worst;
        bool combo = true;
        for (int j = 0; j <= n; ++j) {
            PiNumber d;
            for (int k = j; k <= n; ++k) {
                for (int ell = 0; ell <= j; ++ell) {
                    const long b = static_cast<long>(std::lround(std::tgamma(k - ell + 1.0) /
                                                                 (std::tgamma(j - ell + 1.0) * std::tgamma(k - j + 1.0))));
                    d += PiNumber(b) * constant_C_exact(ell, k, n);
                }
            }
            combo = combo && (d - constant_D_exact(j, n)).is_zero();
        }
        add(out, "theory", "interval_to_simplex_counts" + tag, combo);
    }
    const double triple = triple_circle_moment();
    const double expect = 3.0 / (32.0 * std::numbers::pi);
    add(out, "theory", "triple_circle_moment", std::fabs(triple - expect) < 1e-10,
        {{"value", triple}, {"expected", expect}});
}

// Monte Carlo suites

void suite_bp(std::uint64_t seed, std::vector<Check>& out) {
    for (auto [k, n] : {std::pair{1, 2}, std::pair{2, 2}, std::pair{2, 3}}) {
        const BpResult r = bp_identity_check(k, n, 1000000, seed);
        json j = to_json(r);
        add(out, "bp", "blaschke_petkantschin_k" + std::to_string(k) + "_n" + std::to_string(n), r.agree(),
            strip_timing(j));
    }
}

void suite_wendel(std::uint64_t seed, std::vector<Check>& out) {
    for (int k = 1; k <= 4; ++k) {
        const EstimatorResult w = wendel_check(k, 1000000, mix64(seed + static_cast<std::uint64_t>(k)));
        const double expect = std::ldexp(1.0, -k);
        add(out, "wendel", "origin_containment_k" + std::to_string(k),
            std::fabs(w.value - expect) <= 3.0 * w.std_error,
            {{"value", w.value}, {"stderr", w.std_error}, {"expected", expect}, {"samples", w.samples}});
    }
}

void suite_boundary(std::uint64_t seed, std::vector<Check>& out) {
    const BoundaryStudy s = boundary_effect_study(2, 1.0, {10.0, 20.0, 40.0}, 10, seed);
    const json j = strip_timing(to_json(s));
    add(out, "boundary", "ratio_decreasing", s.ratios_decreasing(), j["rows"]);
    add(out, "boundary", "tail_below_envelope", s.tail_below_envelope(),
        {{"tail", j["tail"]}, {"envelope_at_test_radius", s.envelope(s.test_radius)}});
    bool contractible = true;
    for (const auto& row : s.rows) {
        contractible = contractible && row.contractible_trials == row.trials;
    }
    add(out, "boundary", "k0_contractible", contractible);
}

const std::map<std::string, Suite>& suites() {
    static const std::map<std::string, Suite> table = {
        {"geometry", suite_geometry}, {"mosaic", suite_mosaic}, {"morse", suite_morse},     {"theory", suite_theory},
        {"bp", suite_bp},             {"wendel", suite_wendel}, {"boundary", suite_boundary},
    };
    return table;
}

constexpr const char* kOrder[] = {"geometry", "mosaic", "morse", "theory", "bp", "wendel", "boundary"};

} // namespace

std::vector<std::string> suite_names() {
    std::vector<std::string> names(std::begin(kOrder), std::end(kOrder));
    names.emplace_back("all");
    return names;
}

std::vector<Check> run_suite(const std::string& suite, std::uint64_t seed) {
    std::vector<Check> out;
    for (const char* name : kOrder) {
        if (suite == "all" || suite == name) {
            suites().at(name)(seed, out);
        }
    }
    if (out.empty()) {
        throw ConfigError("unknown suite '" + suite + "'");
    }
    return out;
}

} // namespace pdm::cli
