#include "pdm/montecarlo.hpp"

#include "pdm/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace pdm {

namespace {

constexpr int kMaxSphereDim = 8;
constexpr double kDkwAlpha = 0.001;

std::atomic<int> g_thread_limit{0};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Runs f(0..count-1) on up to thread_limit() workers. Exceptions are
/// rethrown for the lowest failing index.
template <class F>
void parallel_for(std::size_t count, F&& f) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_limit()), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            f(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back(body);
    }
    body();
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

/// Welford accumulator with Chan's merge.
struct Moments {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        count += 1.0;
        const double d = x - mean;
        mean += d / count;
        m2 += d * (x - mean);
    }
    void merge(const Moments& o) {
        if (o.count == 0.0) {
            return;
        }
        const double total = count + o.count;
        const double d = o.mean - mean;
        mean += d * o.count / total;
        m2 += o.m2 + d * d * count * o.count / total;
        count = total;
    }
    double std_error() const { return count > 1.0 ? std::sqrt(m2 / (count - 1.0) / count) : 0.0; }
};

/// Mean of draw(rng) over `samples` draws in fixed batches, batch b drawing
/// from Pcg64::substream(seed, stream_base + b).
template <class Draw>
EstimatorResult run_batched(std::uint64_t samples, std::uint64_t seed, std::uint64_t stream_base, Draw&& draw) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t batches = (samples + kBatchSize - 1) / kBatchSize;
    std::vector<Moments> parts(batches);
    parallel_for(batches, [&](std::size_t b) {
        Pcg64 rng = Pcg64::substream(seed, stream_base + b);
        const std::uint64_t todo = std::min<std::uint64_t>(kBatchSize, samples - b * kBatchSize);
        Moments m;
        for (std::uint64_t i = 0; i < todo; ++i) {
            m.add(draw(rng));
        }
        parts[b] = m;
    });
    Moments total;
    for (const auto& m : parts) {
        total.merge(m);
    }
    EstimatorResult r;
    r.value = total.mean;
    r.std_error = total.std_error();
    r.samples = samples;
    r.seed = seed;
    r.wall_time = seconds_since(start);
    return r;
}

double det_small(double* a, int m) {
    double d = 1.0;
    for (int c = 0; c < m; ++c) {
        int piv = c;
        for (int r = c + 1; r < m; ++r) {
            if (std::fabs(a[r * m + c]) > std::fabs(a[piv * m + c])) {
                piv = r;
            }
        }
        if (a[piv * m + c] == 0.0) {
            return 0.0;
        }
        if (piv != c) {
            for (int j = 0; j < m; ++j) {
                std::swap(a[c * m + j], a[piv * m + j]);
            }
            d = -d;
        }
        d *= a[c * m + c];
        for (int r = c + 1; r < m; ++r) {
            const double f = a[r * m + c] / a[c * m + c];
            for (int j = c + 1; j < m; ++j) {
                a[r * m + j] -= f * a[c * m + j];
            }
        }
    }
    return d;
}

/// Signed cone volumes of k+1 points of R^k (row-major): c_i is the volume
/// of the simplex with vertex i replaced by the origin, signed so that the
/// c_i sum to the signed volume of the simplex.
void signed_cones(int k, const double* pts, double* cones) {
    double factorial = 1.0;
    for (int i = 2; i <= k; ++i) {
        factorial *= i;
    }
    double sub[kMaxSphereDim * kMaxSphereDim];
    for (int i = 0; i <= k; ++i) {
        int row = 0;
        for (int r = 0; r <= k; ++r) {
            if (r == i) {
                continue;
            }
            std::copy(pts + r * k, pts + (r + 1) * k, sub + row * k);
            ++row;
        }
        const double d = det_small(sub, k);
        cones[i] = ((i % 2 == 0) ? d : -d) / factorial;
    }
}

void draw_sphere_tuple(Pcg64& rng, int k, double* pts) {
    for (int i = 0; i <= k; ++i) {
        sample_unit_sphere_into(rng, k, pts + i * k);
    }
}

double binomial(int n, int r) {
    if (r < 0 || r > n) {
        return 0.0;
    }
    double b = 1.0;
    for (int i = 1; i <= r; ++i) {
        b = b * (n - r + i) / i;
    }
    return b;
}

long binomial_int(int n, int r) { return std::lround(binomial(n, r)); }

void require_sphere_dim(int k) {
    if (k < 1 || k > kMaxSphereDim) {
        throw ConfigError("sphere dimension k must lie in 1.." + std::to_string(kMaxSphereDim));
    }
}

std::string fmt_double(double x, int precision = 6) {
    std::ostringstream ss;
    ss.precision(precision);
    ss << x;
    return ss.str();
}

} // namespace

void set_thread_limit(int threads) { g_thread_limit.store(std::max(0, threads)); }

int thread_limit() {
    const int t = g_thread_limit.load();
    if (t > 0) {
        return t;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

nlohmann::json to_json(const EstimatorResult& r, const std::string& quantity, const nlohmann::json& params) {
    return {{"quantity", quantity}, {"params", params},   {"value", r.value},         {"stderr", r.std_error},
            {"samples", r.samples}, {"seed", r.seed},     {"wall_time", r.wall_time}};
}

const char* to_string(SphereMethod m) { return m == SphereMethod::direct ? "direct" : "reduced"; }

SphereMethod sphere_method_from_string(const std::string& s) {
    if (s == "direct") {
        return SphereMethod::direct;
    }
    if (s == "reduced") {
        return SphereMethod::reduced;
    }
    throw ConfigError("unknown sphere method '" + s + "'");
}

EstimatorResult estimate_spherical_expectation(int ell, int k, int n, std::uint64_t samples, std::uint64_t seed,
                                               SphereMethod method) {
    require_sphere_dim(k);
    if (ell < 1 || ell > k || k > n) {
        throw ConfigError("spherical expectation needs 1 <= ell <= k <= n");
    }
    if (samples < 10000) {
        throw ConfigError("spherical expectation needs at least 10^4 samples");
    }
    const int a = n - k + 1;
    const int minus = k - ell;
    if (method == SphereMethod::direct) {
        return run_batched(samples, seed, 0, [k, a, minus](Pcg64& rng) {
            double pts[(kMaxSphereDim + 1) * kMaxSphereDim] = {};
            double cones[kMaxSphereDim + 1];
            draw_sphere_tuple(rng, k, pts);
            signed_cones(k, pts, cones);
            double total = 0.0;
            for (int i = 0; i <= k; ++i) {
                total += cones[i];
            }
            if (total == 0.0) {
                return 0.0;
            }
            int visible = 0;
            for (int i = 0; i <= k; ++i) {
                visible += (cones[i] * total < 0.0) ? 1 : 0;
            }
            return visible == minus ? std::pow(std::fabs(total), a) : 0.0;
        });
    }
    const double scale = binomial(k + 1, minus) / std::ldexp(1.0, k);
    return run_batched(samples, seed, 0, [k, a, minus, scale](Pcg64& rng) {
        double pts[(kMaxSphereDim + 1) * kMaxSphereDim] = {};
        double cones[kMaxSphereDim + 1];
        draw_sphere_tuple(rng, k, pts);
        signed_cones(k, pts, cones);
        double sigma = 0.0;
        for (int i = 0; i <= k; ++i) {
            sigma += (i < k + 1 - minus) ? std::fabs(cones[i]) : -std::fabs(cones[i]);
        }
        return sigma > 0.0 ? scale * std::pow(sigma, a) : 0.0;
    });
}

EstimatorResult wendel_check(int k, std::uint64_t samples, std::uint64_t seed) {
    require_sphere_dim(k);
    if (samples < 1) {
        throw ConfigError("wendel_check needs at least one sample");
    }
    return run_batched(samples, seed, 0, [k](Pcg64& rng) {
        double pts[(kMaxSphereDim + 1) * kMaxSphereDim] = {};
        double cones[kMaxSphereDim + 1];
        draw_sphere_tuple(rng, k, pts);
        signed_cones(k, pts, cones);
        double total = 0.0;
        for (int i = 0; i <= k; ++i) {
            total += cones[i];
        }
        if (total == 0.0) {
            return 0.0;
        }
        for (int i = 0; i <= k; ++i) {
            if (cones[i] * total <= 0.0) {
                return 0.0;
            }
        }
        return 1.0;
    });
}

// Mosaic trials.

std::vector<TrialCheck> check_trial_invariants(const Mosaic& mosaic, const Decomposition& dec,
                                               const IntervalCensus& census) {
    const int n = mosaic.dim();
    std::vector<TrialCheck> checks;
    auto add = [&](std::string name, bool ok, std::string detail) {
        checks.push_back({std::move(name), ok, std::move(detail)});
    };

    {
        std::vector<std::array<long, kMaxDim + 1>> members(dec.intervals.size());
        bool ok = true;
        std::string detail;
        for (int j = 0; j <= n && ok; ++j) {
            for (std::size_t i = 0; i < mosaic.count(j); ++i) {
                const int id = dec.rad.interval[j][i];
                if (id < 0 || static_cast<std::size_t>(id) >= dec.intervals.size()) {
                    ok = false;
                    detail = "simplex without interval in dimension " + std::to_string(j);
                    break;
                }
                ++members[id][j];
            }
        }
        for (std::size_t id = 0; id < dec.intervals.size() && ok; ++id) {
            const auto& iv = dec.intervals[id];
            for (int j = 0; j <= n; ++j) {
                const long expect = (j < iv.ell || j > iv.k) ? 0 : binomial_int(iv.k - iv.ell, j - iv.ell);
                if (members[id][j] != expect) {
                    ok = false;
                    detail = "interval " + std::to_string(id) + " holds " + std::to_string(members[id][j]) + " " +
                             std::to_string(j) + "-simplices, expected " + std::to_string(expect);
                    break;
                }
            }
        }
        add("interval_partition", ok, detail);
    }

    {
        bool ok = true;
        std::string detail;
        for (int j = 0; j <= n; ++j) {
            long sum = 0;
            for (int k = j; k <= n; ++k) {
                for (int ell = 0; ell <= j; ++ell) {
                    sum += binomial_int(k - ell, j - ell) * census.counts[ell][k];
                }
            }
            const long actual = static_cast<long>(mosaic.count(j));
            if (sum != actual) {
                ok = false;
                detail += "d_" + std::to_string(j) + "=" + std::to_string(actual) + " vs " + std::to_string(sum) + "; ";
            }
        }
        add("interval_to_simplex_counts", ok, detail);
    }

    const long euler = mosaic.euler_characteristic();
    add("torus_euler_zero", euler == 0, "chi=" + std::to_string(euler));
    const long morse = census.critical_alternating_sum();
    add("morse_relation", morse == euler, "sum (-1)^k c_kk=" + std::to_string(morse));

    {
        long bad = 0;
        for (std::size_t i = 0; i < mosaic.count(n - 1); ++i) {
            bad += mosaic.cofaces(n - 1, i).size() != 2 ? 1 : 0;
        }
        add("ridge_two_cofaces", bad == 0, std::to_string(bad) + " ridges without two cofaces");
    }
    {
        const long lhs = 2 * static_cast<long>(mosaic.count(n - 1));
        const long rhs = (n + 1) * static_cast<long>(mosaic.count(n));
        add("ridge_top_ratio", lhs == rhs, std::to_string(lhs) + " vs " + std::to_string(rhs));
    }
    {
        const std::size_t v = monotonicity_violations(mosaic, dec.rad);
        add("radius_monotone", v == 0, std::to_string(v) + " violations");
    }
    return checks;
}

bool MosaicTrial::invariants_ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const TrialCheck& c) { return c.ok; });
}

bool EmpiricalConstants::invariants_ok() const {
    return std::all_of(trials.begin(), trials.end(), [](const MosaicTrial& t) { return t.invariants_ok(); });
}

EmpiricalConstants estimate_constants_empirical(int n, double density, const Region& region, int trials,
                                                std::uint64_t seed) {
    if (n < 2 || n > kMaxDim) {
        throw UnsupportedDimension("mosaic simulation supports n = 2, 3, 4");
    }
    if (region.kind != Region::Kind::box || !region.periodic || region.dim != n) {
        throw ConfigError("empirical constants need a periodic box of dimension " + std::to_string(n));
    }
    if (trials < 1) {
        throw ConfigError("trials must be at least 1");
    }
    if (!(density > 0.0)) {
        throw ConfigError("density must be positive");
    }
    const auto start = std::chrono::steady_clock::now();
    EmpiricalConstants out;
    out.density = density;
    out.region = region;
    out.seed = seed;
    out.trials.resize(trials);
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        const auto trial_start = std::chrono::steady_clock::now();
        MosaicTrial& trial = out.trials[t];
        trial.index = static_cast<int>(t);
        trial.seed = mix64(seed ^ mix64(t + 1));
        ProcessConfig config;
        config.density = density;
        config.seed = trial.seed;
        config.region = region;
        const PointCloud cloud = sample_poisson(config);
        trial.points = cloud.size();
        TriangulateOptions topt;
        topt.topology = Topology::torus;
        topt.seed = trial.seed;
        const Mosaic mosaic = triangulate(cloud, topt);
        const Decomposition dec = decompose(mosaic, cloud);
        trial.census = census(dec.intervals, region, density);
        trial.checks = check_trial_invariants(mosaic, dec, trial.census);
        trial.wall_time = seconds_since(trial_start);
    });

    ConstantReport& rep = out.report;
    rep.n = n;
    const double norm = density * region.volume();
    for (int k = 0; k <= n; ++k) {
        for (int ell = 0; ell <= k; ++ell) {
            Moments m;
            for (const auto& t : out.trials) {
                m.add(static_cast<double>(t.census.counts[ell][k]) / norm);
            }
            rep.C[ell][k] = m.mean;
            rep.C_stderr[ell][k] = m.std_error();
            rep.C_provenance[ell][k] = Provenance::mosaic_mc;
        }
    }
    for (int j = 0; j <= n; ++j) {
        Moments m;
        for (const auto& t : out.trials) {
            m.add(static_cast<double>(t.census.simplex_counts[j]) / norm);
        }
        rep.D[j] = m.mean;
        rep.D_stderr[j] = m.std_error();
        rep.D_provenance[j] = Provenance::mosaic_mc;
    }
    out.wall_time = seconds_since(start);
    return out;
}

// Radius distributions.

RadiusTarget RadiusTarget::simplex(int j) {
    RadiusTarget t;
    t.j = j;
    return t;
}

RadiusTarget RadiusTarget::interval(int ell, int k) {
    RadiusTarget t;
    t.ell = ell;
    t.k = k;
    return t;
}

std::string RadiusTarget::label() const {
    if (is_simplex()) {
        return "j=" + std::to_string(j);
    }
    return "(" + std::to_string(ell) + "," + std::to_string(k) + ")";
}

namespace {

double target_cdf(const RadiusTarget& t, int n, double density, double r) {
    return t.is_simplex() ? radius_cdf_simplex(t.j, n, density, r) : radius_cdf_interval(t.ell, t.k, n, density, r);
}

} // namespace

double CdfComparison::theory(double r) const {
    if (trial_mixture.empty()) {
        return theory_nominal(r);
    }
    double f = 0.0;
    for (const auto& [share, rho] : trial_mixture) {
        f += share * target_cdf(target, n, rho, r);
    }
    return f;
}

double CdfComparison::theory_nominal(double r) const { return target_cdf(target, n, density, r); }

double CdfComparison::theory_density(double r) const {
    return target.is_simplex() ? radius_pdf_simplex(target.j, n, density, r)
                               : radius_pdf_interval(target.ell, target.k, n, density, r);
}

CdfComparison compare_radius_distribution(const EmpiricalConstants& runs, RadiusTarget target) {
    CdfComparison cmp;
    cmp.n = runs.report.n;
    cmp.target = target;
    cmp.density = runs.density;
    const int n = cmp.n;
    if (target.is_simplex()) {
        if (target.j > n) {
            throw ConfigError("simplex dimension exceeds the mosaic dimension");
        }
        cmp.theory_cdf = "radius_cdf_simplex(j=" + std::to_string(target.j) + ",n=" + std::to_string(n) + ")";
        cmp.intensity = constant_D(target.j, n);
    } else {
        if (target.ell < 0 || target.ell > target.k || target.k > n || target.k < 1) {
            throw ConfigError("interval type needs 0 <= ell <= k <= n and k >= 1");
        }
        cmp.theory_cdf = "radius_cdf_interval(ell=" + std::to_string(target.ell) + ",k=" + std::to_string(target.k) +
                         ",n=" + std::to_string(n) + ")";
        cmp.intensity = constant_C(target.ell, target.k, n);
    }
    for (const auto& t : runs.trials) {
        cmp.volume += t.census.region_volume;
        const std::size_t before = cmp.radii.size();
        if (target.is_simplex()) {
            const auto r = t.census.simplex_radii(target.j);
            cmp.radii.insert(cmp.radii.end(), r.begin(), r.end());
        } else {
            const auto& r = t.census.radii[target.ell][target.k];
            cmp.radii.insert(cmp.radii.end(), r.begin(), r.end());
        }
        cmp.trial_mixture.push_back(
            {static_cast<double>(cmp.radii.size() - before), static_cast<double>(t.points) / t.census.region_volume});
    }
    std::sort(cmp.radii.begin(), cmp.radii.end());
    const std::size_t count = cmp.radii.size();
    cmp.sample_count = count;
    if (count == 0) {
        cmp.ks_distance = 1.0;
        cmp.dkw_threshold = 0.0;
        return cmp;
    }
    cmp.dkw_threshold = std::sqrt(std::log(2.0 / kDkwAlpha) / (2.0 * static_cast<double>(count)));
    for (auto& m : cmp.trial_mixture) {
        m[0] /= static_cast<double>(count);
    }
    double ks = 0.0, ks_nominal = 0.0;
    const double total = static_cast<double>(count);
    for (std::size_t i = 0; i < count;) {
        std::size_t j = i;
        while (j < count && cmp.radii[j] == cmp.radii[i]) {
            ++j;
        }
        const double lo = static_cast<double>(i) / total, hi = static_cast<double>(j) / total;
        const double f = cmp.theory(cmp.radii[i]);
        const double g = cmp.theory_nominal(cmp.radii[i]);
        ks = std::max({ks, std::fabs(f - lo), std::fabs(hi - f)});
        ks_nominal = std::max({ks_nominal, std::fabs(g - lo), std::fabs(hi - g)});
        i = j;
    }
    cmp.ks_distance = ks;
    cmp.ks_nominal = ks_nominal;
    return cmp;
}

CdfComparison estimate_radius_distribution(int n, RadiusTarget target, double density, const Region& region,
                                           int trials, std::uint64_t seed) {
    return compare_radius_distribution(estimate_constants_empirical(n, density, region, trials, seed), target);
}

namespace {

double plot_range(const CdfComparison& cmp) {
    if (cmp.radii.empty()) {
        return 1.0;
    }
    const double top = cmp.radii.back();
    return top > 0.0 ? top * 1.02 : 1.0;
}

double empirical_cdf(const CdfComparison& cmp, double r) {
    if (cmp.radii.empty()) {
        return 0.0;
    }
    const auto it = std::upper_bound(cmp.radii.begin(), cmp.radii.end(), r);
    return static_cast<double>(it - cmp.radii.begin()) / static_cast<double>(cmp.radii.size());
}

std::vector<double> binned_density(const CdfComparison& cmp, int bins, double width) {
    std::vector<double> counts(bins, 0.0);
    for (double r : cmp.radii) {
        const int b = std::min(bins - 1, static_cast<int>(r / width));
        counts[b] += 1.0;
    }
    const double norm = cmp.density * cmp.volume * width;
    for (auto& c : counts) {
        c = norm > 0.0 ? c / norm : 0.0;
    }
    return counts;
}

} // namespace

void write_cdf_csv(std::ostream& os, const CdfComparison& cmp, int points) {
    os << "r,empirical_cdf,theory_cdf,theory_cdf_nominal\n";
    const double range = plot_range(cmp);
    os.precision(10);
    for (int i = 0; i <= points; ++i) {
        const double r = range * i / points;
        os << r << ',' << empirical_cdf(cmp, r) << ',' << cmp.theory(r) << ',' << cmp.theory_nominal(r) << '\n';
    }
}

void write_density_csv(std::ostream& os, const CdfComparison& cmp, int bins) {
    os << "r,empirical_density,theory_density\n";
    const double width = plot_range(cmp) / bins;
    const auto dens = binned_density(cmp, bins, width);
    os.precision(10);
    for (int b = 0; b < bins; ++b) {
        const double r = (b + 0.5) * width;
        os << r << ',' << dens[b] << ',' << cmp.intensity * cmp.theory_density(r) << '\n';
    }
}

void write_distribution_svg(std::ostream& os, const CdfComparison& cmp, const std::string& provenance) {
    constexpr double W = 360, H = 260, M = 40;
    const double range = plot_range(cmp);
    const int bins = 60;
    const double width = range / bins;
    const auto dens = binned_density(cmp, bins, width);
    std::vector<double> theory_dens(201);
    double ymax = 0.0;
    for (int i = 0; i <= 200; ++i) {
        theory_dens[i] = cmp.intensity * cmp.theory_density(range * i / 200);
        ymax = std::max(ymax, theory_dens[i]);
    }
    for (double d : dens) {
        ymax = std::max(ymax, d);
    }
    ymax = ymax > 0.0 ? ymax * 1.05 : 1.0;

    auto px = [&](int panel, double r) { return panel * (W + M) + M + r / range * (W - M); };
    auto py = [&](double v, double vmax) { return H - M - v / vmax * (H - 2 * M); };

    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<!-- " << provenance << " -->\n";
    os << "<!-- target " << cmp.target.label() << " n=" << cmp.n << " samples=" << cmp.sample_count
       << " ks=" << fmt_double(cmp.ks_distance) << " dkw=" << fmt_double(cmp.dkw_threshold) << " -->\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * (W + M) << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int panel = 0; panel < 2; ++panel) {
        const double x0 = px(panel, 0.0), x1 = px(panel, range);
        os << "<line x1=\"" << x0 << "\" y1=\"" << H - M << "\" x2=\"" << x1 << "\" y2=\"" << H - M
           << "\" stroke=\"black\"/>\n";
        os << "<line x1=\"" << x0 << "\" y1=\"" << M << "\" x2=\"" << x0 << "\" y2=\"" << H - M
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << x1 - 10 << "\" y=\"" << H - M + 16 << "\" font-size=\"11\">" << fmt_double(range, 3)
           << "</text>\n";
        os << "<text x=\"" << x0 - 4 << "\" y=\"" << H - M + 16 << "\" font-size=\"11\">0</text>\n";
        os << "<text x=\"" << (x0 + x1) / 2 - 4 << "\" y=\"" << H - 8 << "\" font-size=\"12\">r</text>\n";
    }
    os << "<text x=\"" << M << "\" y=\"" << M - 12 << "\" font-size=\"12\">CDF " << cmp.target.label()
       << ", n=" << cmp.n << "</text>\n";
    os << "<text x=\"" << W + 2 * M << "\" y=\"" << M - 12 << "\" font-size=\"12\">intensity density, max "
       << fmt_double(ymax, 3) << "</text>\n";

    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (int i = 0; i <= 200; ++i) {
        const double r = range * i / 200;
        os << px(0, r) << ',' << py(empirical_cdf(cmp, r), 1.0) << ' ';
    }
    os << "\"/>\n<polyline fill=\"none\" stroke=\"#d62728\" stroke-dasharray=\"4 3\" points=\"";
    for (int i = 0; i <= 200; ++i) {
        const double r = range * i / 200;
        os << px(0, r) << ',' << py(cmp.theory(r), 1.0) << ' ';
    }
    os << "\"/>\n";
    for (int b = 0; b < bins; ++b) {
        const double xa = px(1, b * width), xb = px(1, (b + 1) * width);
        const double y = py(dens[b], ymax);
        os << "<rect x=\"" << xa << "\" y=\"" << y << "\" width=\"" << std::max(0.0, xb - xa - 0.5) << "\" height=\""
           << (H - M) - y << "\" fill=\"#1f77b4\" fill-opacity=\"0.45\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"";
    for (int i = 0; i <= 200; ++i) {
        os << px(1, range * i / 200) << ',' << py(theory_dens[i], ymax) << ' ';
    }
    os << "\"/>\n</svg>\n";
}

// Blaschke-Petkantschin identity.

double BpResult::combined_stderr() const { return std::hypot(lhs.std_error, rhs.std_error); }

bool BpResult::agree(double rel_tol, double sigmas) const {
    const double diff = std::fabs(lhs.value - rhs.value);
    return diff <= sigmas * combined_stderr() && diff <= rel_tol * std::fabs(lhs.value);
}

BpResult bp_identity_check(int k, int n, std::uint64_t samples, std::uint64_t seed) {
    if (k < 1 || k > n || n > 3) {
        throw ConfigError("bp_identity_check needs 1 <= k <= n <= 3");
    }
    if (samples < 1) {
        throw ConfigError("bp_identity_check needs at least one sample");
    }
    BpResult out;
    out.k = k;
    out.n = n;
    const int d = n * (k + 1);
    out.exact = std::pow(std::numbers::pi, 0.5 * d);

    // Left side: x ~ N(0, I), weight f(x) / q(x).
    const double log_lhs_scale = 0.5 * d * std::log(2.0 * std::numbers::pi);
    out.lhs = run_batched(samples, seed, 0, [d, log_lhs_scale](Pcg64& rng) {
        double norm2 = 0.0;
        for (int i = 0; i < d; ++i) {
            const double x = rng.normal();
            norm2 += x * x;
        }
        return std::exp(log_lhs_scale - 0.5 * norm2);
    });

    // Right side: L uniform, u_i uniform on the unit sphere of L,
    // r^2 ~ Gamma(nk/2, rate beta(u)) and z Gaussian given (r, u), both
    // proportional to the factors of f(z + r u) r^{nk-1}.
    const double kp1 = k + 1.0;
    const double shape = 0.5 * n * k;
    const double log_const = std::log(grassmannian_measure(k, n)) + kp1 * std::log(unit_sphere_surface(k));
    const double z_sd = std::sqrt(1.0 / (2.0 * kp1));
    out.rhs = run_batched(samples, seed, 1ull << 40, [=](Pcg64& rng) {
        double frame[3 * 3];
        for (int c = 0; c < k; ++c) {
            for (;;) {
                for (int i = 0; i < n; ++i) {
                    frame[c * n + i] = rng.normal();
                }
                for (int p = 0; p < c; ++p) {
                    double dot = 0.0;
                    for (int i = 0; i < n; ++i) {
                        dot += frame[c * n + i] * frame[p * n + i];
                    }
                    for (int i = 0; i < n; ++i) {
                        frame[c * n + i] -= dot * frame[p * n + i];
                    }
                }
                double len = 0.0;
                for (int i = 0; i < n; ++i) {
                    len += frame[c * n + i] * frame[c * n + i];
                }
                if (len > 1e-12) {
                    len = std::sqrt(len);
                    for (int i = 0; i < n; ++i) {
                        frame[c * n + i] /= len;
                    }
                    break;
                }
            }
        }
        double u[(3 + 1) * 3];
        for (int i = 0; i <= k; ++i) {
            sample_unit_sphere_into(rng, k, u + i * k);
        }
        double edges[3 * 3];
        for (int i = 1; i <= k; ++i) {
            for (int e = 0; e < k; ++e) {
                edges[(i - 1) * k + e] = u[i * k + e] - u[e];
            }
        }
        const double kvol = std::fabs(det_small(edges, k));
        // s = sum of the u_i mapped into R^n; beta = sum |u_i - mean|^2.
        double s[3] = {0.0, 0.0, 0.0};
        double s2 = 0.0;
        for (int c = 0; c < n; ++c) {
            for (int i = 0; i <= k; ++i) {
                for (int e = 0; e < k; ++e) {
                    s[c] += u[i * k + e] * frame[e * n + c];
                }
            }
            s2 += s[c] * s[c];
        }
        const double beta = kp1 - s2 / kp1;
        if (kvol == 0.0 || !(beta > 0.0)) {
            return 0.0;
        }
        double r2 = 0.0;
        const double r_sd = std::sqrt(0.5 / beta);
        for (int i = 0; i < n * k; ++i) {
            const double g = r_sd * rng.normal();
            r2 += g * g;
        }
        const double r = std::sqrt(r2);
        double z[3];
        double dz2 = 0.0;
        for (int c = 0; c < n; ++c) {
            const double dz = z_sd * rng.normal();
            z[c] = dz - r * s[c] / kp1;
            dz2 += dz * dz;
        }
        double sum_sq = 0.0;
        for (int i = 0; i <= k; ++i) {
            for (int c = 0; c < n; ++c) {
                double x = z[c];
                for (int e = 0; e < k; ++e) {
                    x += r * u[i * k + e] * frame[e * n + c];
                }
                sum_sq += x * x;
            }
        }
        const double log_qz = 0.5 * n * std::log(kp1 / std::numbers::pi) - kp1 * dz2;
        const double log_qr = std::log(2.0) + shape * std::log(beta) + (2.0 * shape - 1.0) * std::log(r) - beta * r2 -
                              std::lgamma(shape);
        const double log_w = log_const - sum_sq + (n * k - 1.0) * std::log(r) + (n - k + 1.0) * std::log(kvol) -
                             log_qz - log_qr;
        return std::exp(log_w);
    });
    return out;
}

// Boundary study.

double BoundaryStudy::envelope(double r0) const { return std::exp(envelope_a - envelope_b * std::pow(r0, n)); }

bool BoundaryStudy::ratios_decreasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double se = std::hypot(rows[i - 1].ratio_stderr, rows[i].ratio_stderr);
        if (!(rows[i].ratio < rows[i - 1].ratio + se)) {
            return false;
        }
    }
    return !rows.empty();
}

bool BoundaryStudy::tail_below_envelope() const {
    if (tail.empty() || !std::isfinite(envelope_a) || !std::isfinite(envelope_b)) {
        return false;
    }
    return tail.back().fraction < envelope(test_radius);
}

BoundaryStudy boundary_effect_study(int n, double density, const std::vector<double>& radii, int trials,
                                    std::uint64_t seed, const BoundaryOptions& options) {
    if (n < 2 || n > kMaxDim) {
        throw UnsupportedDimension("boundary study supports n = 2, 3, 4");
    }
    if (trials < 1 || radii.empty() || !(density > 0.0)) {
        throw ConfigError("boundary study needs radii, trials >= 1 and a positive density");
    }
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1]))) {
            throw ConfigError("boundary study radii must be positive and increasing");
        }
    }
    if (options.fit_radii.size() != 2 || !(options.fit_radii[0] < options.fit_radii[1])) {
        throw ConfigError("boundary study needs two increasing fit radii");
    }
    const auto start = std::chrono::steady_clock::now();
    BoundaryStudy study;
    study.n = n;
    study.density = density;
    study.seed = seed;
    study.test_radius = options.test_radius;
    const double unit = std::pow(density, -1.0 / n);
    const double margin = options.margin * unit;

    struct Outcome {
        long k1 = 0;
        long k0_minus_k1 = 0;
        bool contractible = false;
    };
    std::vector<Outcome> outcomes(radii.size() * trials);
    parallel_for(outcomes.size(), [&](std::size_t job) {
        const double R = radii[job / trials];
        const double half = R + margin;
        ProcessConfig config;
        config.density = density;
        config.seed = mix64(seed ^ mix64(job + 1));
        config.region = Region::box(std::vector<double>(n, 2.0 * half), false, Point(n, -half));
        const PointCloud cloud = sample_poisson(config);
        TriangulateOptions topt;
        topt.seed = config.seed;
        const Mosaic mosaic = triangulate(cloud, topt);
        const Restriction res = restrict_K0_K1(mosaic, cloud, Region::ball(n, R, Point(n, 0.0)), options.rule);
        outcomes[job] = {res.k1_total, res.k0_minus_k1, res.euler_k0() == 1};
    });
    for (std::size_t i = 0; i < radii.size(); ++i) {
        BoundaryRow row;
        row.radius = radii[i];
        row.trials = trials;
        Moments ratio, k1, diff;
        const double norm = density * unit_ball_volume(n) * std::pow(radii[i], n);
        for (int t = 0; t < trials; ++t) {
            const Outcome& o = outcomes[i * trials + t];
            k1.add(static_cast<double>(o.k1));
            diff.add(static_cast<double>(o.k0_minus_k1));
            ratio.add(static_cast<double>(o.k0_minus_k1) / norm);
            row.contractible_trials += o.contractible ? 1 : 0;
        }
        row.k1_mean = k1.mean;
        row.k0_minus_k1_mean = diff.mean;
        row.ratio = ratio.mean;
        row.ratio_stderr = ratio.std_error();
        study.rows.push_back(row);
    }

    // Tail of the top simplex circumradius on a separate large torus sample.
    const double side = std::pow(options.tail_simplices / (constant_D(n, n) * density), 1.0 / n);
    ProcessConfig config;
    config.density = density;
    config.seed = mix64(seed ^ 0x7a11ULL);
    config.region = Region::cube(n, side, true);
    const PointCloud cloud = sample_poisson(config);
    TriangulateOptions topt;
    topt.topology = Topology::torus;
    topt.seed = config.seed;
    const Mosaic mosaic = triangulate(cloud, topt);
    std::vector<double> tops(mosaic.count(n));
    {
        std::vector<double> coords((n + 1) * n);
        std::array<kernel::Coord, kMaxDim + 1> verts{};
        double center[kMaxDim], bary[kMaxDim + 1];
        int signs[kMaxDim + 1];
        const Tolerances tol;
        for (std::size_t i = 0; i < tops.size(); ++i) {
            const auto s = mosaic.simplex(n, i);
            for (int v = 0; v <= n; ++v) {
                mosaic.node_coords(s[v], coords.data() + v * n);
                verts[v] = coords.data() + v * n;
            }
            tops[i] = std::sqrt(kernel::circumsphere({verts.data(), static_cast<std::size_t>(n + 1)}, n, center, bary,
                                                     signs, tol));
        }
    }
    study.tail_total = tops.size();
    std::vector<double> grid = options.fit_radii;
    grid.push_back(options.test_radius);
    for (double r0 : grid) {
        TailRow row;
        row.r0 = r0;
        row.exceed = static_cast<std::size_t>(std::count_if(tops.begin(), tops.end(), [r0](double r) { return r > r0; }));
        const double total = static_cast<double>(tops.size());
        row.fraction = total > 0.0 ? static_cast<double>(row.exceed) / total : 0.0;
        row.std_error = total > 0.0 ? std::sqrt(row.fraction * (1.0 - row.fraction) / total) : 0.0;
        row.theory = 1.0 - radius_cdf_simplex(n, n, density, r0);
        study.tail.push_back(row);
    }
    const double l1 = std::log(study.tail[0].fraction), l2 = std::log(study.tail[1].fraction);
    const double s1 = std::pow(grid[0], n), s2 = std::pow(grid[1], n);
    study.envelope_b = (l1 - l2) / (s2 - s1);
    study.envelope_a = l1 + study.envelope_b * s1;
    study.wall_time = seconds_since(start);
    return study;
}

// JSON.

nlohmann::json to_json(const ConstantReport& report) {
    nlohmann::json C = nlohmann::json::array();
    for (int ell = 0; ell <= report.n; ++ell) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k <= report.n; ++k) {
            if (ell > k) {
                row.push_back(nullptr);
                continue;
            }
            nlohmann::json e = {{"value", report.C[ell][k]},
                                {"provenance", to_string(report.C_provenance[ell][k])}};
            if (!report.C_exact[ell][k].empty()) {
                e["exact"] = report.C_exact[ell][k];
            }
            if (report.C_provenance[ell][k] != Provenance::closed_form) {
                e["stderr"] = report.C_stderr[ell][k];
            }
            row.push_back(e);
        }
        C.push_back(row);
    }
    nlohmann::json D = nlohmann::json::array();
    for (int j = 0; j <= report.n; ++j) {
        nlohmann::json e = {{"value", report.D[j]}, {"provenance", to_string(report.D_provenance[j])}};
        if (!report.D_exact[j].empty()) {
            e["exact"] = report.D_exact[j];
        }
        if (report.D_provenance[j] != Provenance::closed_form) {
            e["stderr"] = report.D_stderr[j];
        }
        D.push_back(e);
    }
    return {{"n", report.n}, {"C", C}, {"D", D}};
}

nlohmann::json to_json(const EmpiricalConstants& runs) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : runs.trials) {
        nlohmann::json checks = nlohmann::json::array();
        for (const auto& c : t.checks) {
            checks.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
        }
        nlohmann::json counts = nlohmann::json::array();
        for (int ell = 0; ell <= runs.report.n; ++ell) {
            nlohmann::json row = nlohmann::json::array();
            for (int k = 0; k <= runs.report.n; ++k) {
                row.push_back(t.census.counts[ell][k]);
            }
            counts.push_back(row);
        }
        nlohmann::json d = nlohmann::json::array();
        for (int j = 0; j <= runs.report.n; ++j) {
            d.push_back(t.census.simplex_counts[j]);
        }
        trials.push_back({{"index", t.index},
                          {"seed", t.seed},
                          {"points", t.points},
                          {"interval_counts", counts},
                          {"simplex_counts", d},
                          {"checks", checks},
                          {"invariants_ok", t.invariants_ok()},
                          {"wall_time", t.wall_time}});
    }
    nlohmann::json out = to_json(runs.report);
    out["density"] = runs.density;
    out["volume"] = runs.region.volume();
    out["seed"] = runs.seed;
    out["trials"] = trials;
    out["invariants_ok"] = runs.invariants_ok();
    out["wall_time"] = runs.wall_time;
    return out;
}

nlohmann::json to_json(const CdfComparison& cmp) {
    return {{"quantity", "radius_distribution"},
            {"n", cmp.n},
            {"target", cmp.target.label()},
            {"density", cmp.density},
            {"volume", cmp.volume},
            {"theory_cdf", cmp.theory_cdf},
            {"intensity", cmp.intensity},
            {"ks_distance", cmp.ks_distance},
            {"ks_nominal", cmp.ks_nominal},
            {"dkw_threshold", cmp.dkw_threshold},
            {"sample_count", cmp.sample_count},
            {"pass", cmp.passes()}};
}

nlohmann::json to_json(const BpResult& bp) {
    const nlohmann::json params = {{"k", bp.k}, {"n", bp.n}};
    return {{"quantity", "bp_identity"},
            {"params", params},
            {"exact", bp.exact},
            {"lhs", to_json(bp.lhs, "bp_lhs", params)},
            {"rhs", to_json(bp.rhs, "bp_rhs", params)},
            {"combined_stderr", bp.combined_stderr()},
            {"agree", bp.agree()}};
}

nlohmann::json to_json(const BoundaryStudy& study) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : study.rows) {
        rows.push_back({{"R", r.radius},
                        {"trials", r.trials},
                        {"k1_mean", r.k1_mean},
                        {"k0_minus_k1_mean", r.k0_minus_k1_mean},
                        {"ratio", r.ratio},
                        {"ratio_stderr", r.ratio_stderr},
                        {"contractible_trials", r.contractible_trials}});
    }
    nlohmann::json tail = nlohmann::json::array();
    for (const auto& t : study.tail) {
        tail.push_back({{"r0", t.r0},
                        {"exceed", t.exceed},
                        {"fraction", t.fraction},
                        {"stderr", t.std_error},
                        {"theory", t.theory},
                        {"envelope", study.envelope(t.r0)}});
    }
    return {{"quantity", "boundary_effect"},
            {"n", study.n},
            {"density", study.density},
            {"seed", study.seed},
            {"rows", rows},
            {"tail", tail},
            {"tail_total", study.tail_total},
            {"envelope_a", study.envelope_a},
            {"envelope_b", study.envelope_b},
            {"ratios_decreasing", study.ratios_decreasing()},
            {"tail_below_envelope", study.tail_below_envelope()},
            {"wall_time", study.wall_time}};
}

} // namespace pdm
