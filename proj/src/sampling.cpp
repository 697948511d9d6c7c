#include "pdm/sampling.hpp"

#include "pdm/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace pdm {
namespace {

constexpr unsigned __int128 kPcgMultiplier =
    (static_cast<unsigned __int128>(0x2360ED051FC65DA4ULL) << 64) | 0x4385DF649FCCF645ULL;

double log_factorial(std::uint64_t k) { return std::lgamma(static_cast<double>(k) + 1.0); }

// Hoermann's PTRS for mean >= 30.
std::uint64_t poisson_ptrs(double mean, Pcg64& rng) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) {
            return static_cast<std::uint64_t>(kf);
        }
        if (kf < 0.0 || (us < 0.013 && v > us)) {
            continue;
        }
        const auto k = static_cast<std::uint64_t>(kf);
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -mean + kf * loglam - log_factorial(k)) {
            return k;
        }
    }
}

std::uint64_t poisson_inversion(double mean, Pcg64& rng) {
    const double u = rng.uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t x = 0;
    while (u > cdf && x < 1000) {
        ++x;
        p *= mean / static_cast<double>(x);
        cdf += p;
    }
    return x;
}

// Dyadic quantum such that x + side and x - side are exact for every
// multiple x of the quantum in [0, side).
double dyadic_quantum(double side) {
    const int e = std::ilogb(4.0 * side) + 1;
    return std::ldexp(1.0, e - 52);
}

} // namespace

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Pcg64::Pcg64(std::uint64_t seed, std::uint64_t stream) {
    const unsigned __int128 init_state =
        (static_cast<unsigned __int128>(mix64(seed)) << 64) | mix64(seed ^ 0xD1B54A32D192ED03ULL);
    const unsigned __int128 init_seq =
        (static_cast<unsigned __int128>(mix64(stream)) << 64) | mix64(stream + 0x8CB92BA72F3D8DD7ULL);
    inc_ = (init_seq << 1) | 1u;
    state_ = 0;
    step();
    state_ += init_state;
    step();
}

Pcg64 Pcg64::substream(std::uint64_t seed, std::uint64_t index) {
    return Pcg64(mix64(seed ^ mix64(index + 1)), index);
}

void Pcg64::step() { state_ = state_ * kPcgMultiplier + inc_; }

Pcg64::result_type Pcg64::operator()() {
    step();
    const auto hi = static_cast<std::uint64_t>(state_ >> 64);
    const auto lo = static_cast<std::uint64_t>(state_);
    const int rot = static_cast<int>(state_ >> 122);
    return std::rotr(hi ^ lo, rot);
}

double Pcg64::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Pcg64::normal() {
    // Marsaglia polar method; the second variate is cached.
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

std::uint64_t poisson_variate(double mean, Pcg64& rng) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw ConfigError("Poisson mean must be finite and non-negative");
    }
    if (mean == 0.0) {
        return 0;
    }
    return mean < 30.0 ? poisson_inversion(mean, rng) : poisson_ptrs(mean, rng);
}

Region Region::box(std::vector<double> sides, bool periodic, Point lower) {
    Region r;
    r.kind = Kind::box;
    r.dim = static_cast<int>(sides.size());
    r.sides = std::move(sides);
    r.lower = lower.empty() ? Point(r.dim, 0.0) : std::move(lower);
    r.periodic = periodic;
    r.validate();
    return r;
}

Region Region::cube(int n, double side, bool periodic) {
    return box(std::vector<double>(static_cast<size_t>(n), side), periodic);
}

Region Region::ball(int n, double radius, Point center) {
    Region r;
    r.kind = Kind::ball;
    r.dim = n;
    r.radius = radius;
    r.center = center.empty() ? Point(n, 0.0) : std::move(center);
    r.validate();
    return r;
}

void Region::validate() const {
    if (dim < 1) {
        throw ConfigError("region dimension must be at least 1");
    }
    if (kind == Kind::box) {
        if (static_cast<int>(sides.size()) != dim || static_cast<int>(lower.size()) != dim) {
            throw ConfigError("box extents do not match the dimension");
        }
        for (double s : sides) {
            if (!(s > 0.0) || !std::isfinite(s)) {
                throw ConfigError("box sides must be positive");
            }
        }
    } else {
        if (!(radius > 0.0) || !std::isfinite(radius)) {
            throw ConfigError("ball radius must be positive");
        }
        if (static_cast<int>(center.size()) != dim) {
            throw ConfigError("ball center does not match the dimension");
        }
    }
}

double Region::volume() const {
    if (kind == Kind::box) {
        double v = 1.0;
        for (double s : sides) {
            v *= s;
        }
        return v;
    }
    const double nu = std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0 + 1.0);
    return nu * std::pow(radius, dim);
}

bool Region::contains(std::span<const double> x) const {
    if (kind == Kind::box) {
        for (int i = 0; i < dim; ++i) {
            if (x[i] < lower[i] || x[i] >= lower[i] + sides[i]) {
                return false;
            }
        }
        return true;
    }
    double d2 = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = x[i] - center[i];
        d2 += d * d;
    }
    return d2 < radius * radius;
}

double Region::shortest_side() const {
    if (kind == Kind::ball) {
        return 2.0 * radius;
    }
    return *std::min_element(sides.begin(), sides.end());
}

std::vector<Point> PointCloud::points() const {
    std::vector<Point> out(size());
    for (size_t i = 0; i < out.size(); ++i) {
        auto p = point(i);
        out[i].assign(p.begin(), p.end());
    }
    return out;
}

PointCloud PointCloud::from_points(const std::vector<Point>& pts, Region region, std::uint64_t seed) {
    PointCloud c;
    c.dim = region.dim;
    c.region = std::move(region);
    c.seed = seed;
    c.coords.reserve(pts.size() * c.dim);
    for (const auto& p : pts) {
        if (static_cast<int>(p.size()) != c.dim) {
            throw ConfigError("point dimension does not match region");
        }
        c.coords.insert(c.coords.end(), p.begin(), p.end());
    }
    return c;
}

PointCloud sample_poisson(const ProcessConfig& config) {
    const Region& region = config.region;
    region.validate();
    if (!(config.density > 0.0) || !std::isfinite(config.density)) {
        throw ConfigError("density must be positive");
    }
    const double mean = config.density * region.volume();
    if (mean > config.max_expected_points) {
        throw OverflowRisk("expected point count " + std::to_string(mean) + " exceeds the cap");
    }
    Pcg64 rng(config.seed);
    const auto count = poisson_variate(mean, rng);
    PointCloud cloud;
    cloud.dim = region.dim;
    cloud.region = region;
    cloud.seed = config.seed;
    cloud.coords.reserve(count * region.dim);
    const int n = region.dim;
    std::vector<double> x(n);
    for (std::uint64_t i = 0; i < count; ++i) {
        if (region.kind == Region::Kind::box) {
            for (int j = 0; j < n; ++j) {
                double u = rng.uniform() * region.sides[j];
                if (region.periodic) {
                    const double q = dyadic_quantum(region.sides[j]);
                    u = std::floor(u / q) * q;
                    if (u >= region.sides[j]) {
                        u = std::nextafter(region.sides[j], 0.0);
                    }
                }
                x[j] = region.lower[j] + u;
            }
        } else {
            double d2;
            do {
                d2 = 0.0;
                for (int j = 0; j < n; ++j) {
                    x[j] = (2.0 * rng.uniform() - 1.0) * region.radius;
                    d2 += x[j] * x[j];
                }
            } while (d2 >= region.radius * region.radius);
            for (int j = 0; j < n; ++j) {
                x[j] += region.center[j];
            }
        }
        cloud.coords.insert(cloud.coords.end(), x.begin(), x.end());
    }
    return cloud;
}

void sample_unit_sphere_into(Pcg64& rng, int k, double* out) {
    for (;;) {
        double norm2 = 0.0;
        for (int j = 0; j < k; ++j) {
            out[j] = rng.normal();
            norm2 += out[j] * out[j];
        }
        if (norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (int j = 0; j < k; ++j) {
                out[j] *= inv;
            }
            if (k == 1) {
                out[0] = out[0] > 0 ? 1.0 : -1.0;
            }
            return;
        }
    }
}

std::vector<Point> sample_unit_sphere(int k, int count, std::uint64_t seed) {
    if (k < 1 || count < 1) {
        throw ConfigError("sample_unit_sphere needs k >= 1 and count >= 1");
    }
    Pcg64 rng(seed);
    std::vector<Point> out(static_cast<size_t>(count), Point(k));
    for (auto& p : out) {
        sample_unit_sphere_into(rng, k, p.data());
    }
    return out;
}

namespace {

Region bounding_region(int dim, const std::vector<double>& coords) {
    Point lo(dim, std::numeric_limits<double>::infinity());
    Point hi(dim, -std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < coords.size(); ++i) {
        const int j = static_cast<int>(i % dim);
        lo[j] = std::min(lo[j], coords[i]);
        hi[j] = std::max(hi[j], coords[i]);
    }
    std::vector<double> sides(dim);
    for (int j = 0; j < dim; ++j) {
        if (!(hi[j] >= lo[j])) {
            lo[j] = 0.0;
            hi[j] = 1.0;
        }
        sides[j] = std::max(std::nextafter(hi[j] - lo[j], 1e300), 1e-300);
    }
    return Region::box(std::move(sides), false, std::move(lo));
}

} // namespace

void write_cloud_csv(std::ostream& os, const PointCloud& cloud) {
    os << "dim,n_points,seed\n" << cloud.dim << ',' << cloud.size() << ',' << cloud.seed << '\n';
    const auto old = os.precision(17);
    for (size_t i = 0; i < cloud.size(); ++i) {
        for (int j = 0; j < cloud.dim; ++j) {
            os << (j ? "," : "") << cloud.coords[i * cloud.dim + j];
        }
        os << '\n';
    }
    os.precision(old);
}

PointCloud read_cloud_csv(std::istream& is, Region region) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("dim,n_points,seed", 0) != 0) {
        throw ConfigError("point cloud CSV must start with the header dim,n_points,seed");
    }
    if (!std::getline(is, line)) {
        throw ConfigError("point cloud CSV is missing its header values");
    }
    int dim = 0;
    std::uint64_t count = 0, seed = 0;
    char c1 = 0, c2 = 0;
    std::istringstream hs(line);
    if (!(hs >> dim >> c1 >> count >> c2 >> seed) || c1 != ',' || c2 != ',' || dim < 1) {
        throw ConfigError("malformed point cloud CSV header values");
    }
    std::vector<double> coords;
    coords.reserve(count * dim);
    for (std::uint64_t i = 0; i < count; ++i) {
        if (!std::getline(is, line)) {
            throw ConfigError("point cloud CSV ended early");
        }
        std::istringstream ls(line);
        for (int j = 0; j < dim; ++j) {
            double v;
            if (!(ls >> v)) {
                throw ConfigError("malformed coordinate in point cloud CSV");
            }
            coords.push_back(v);
            if (j + 1 < dim) {
                char comma;
                ls >> comma;
            }
        }
    }
    PointCloud cloud;
    cloud.dim = dim;
    cloud.seed = seed;
    cloud.region = region.dim == 0 ? bounding_region(dim, coords) : std::move(region);
    cloud.coords = std::move(coords);
    return cloud;
}

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) {
        throw ConfigError("truncated binary point cloud");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return v;
}

} // namespace

void write_cloud_binary(std::ostream& os, const PointCloud& cloud) {
    put_u64(os, static_cast<std::uint64_t>(cloud.dim));
    put_u64(os, cloud.size());
    put_u64(os, cloud.seed);
    for (double c : cloud.coords) {
        put_u64(os, std::bit_cast<std::uint64_t>(c));
    }
}

PointCloud read_cloud_binary(std::istream& is, Region region) {
    PointCloud cloud;
    cloud.dim = static_cast<int>(get_u64(is));
    const auto count = get_u64(is);
    cloud.seed = get_u64(is);
    if (cloud.dim < 1 || cloud.dim > 64) {
        throw ConfigError("invalid dimension in binary point cloud");
    }
    cloud.coords.resize(count * cloud.dim);
    for (auto& c : cloud.coords) {
        c = std::bit_cast<double>(get_u64(is));
    }
    cloud.region = region.dim == 0 ? bounding_region(cloud.dim, cloud.coords) : std::move(region);
    return cloud;
}

} // namespace pdm
