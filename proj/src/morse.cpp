#include "pdm/morse.hpp"

#include "pdm/errors.hpp"
#include "pdm/spatial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace pdm {

namespace {

long binom(int n, int k) {
    if (k < 0 || k > n) {
        return 0;
    }
    long r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

struct GridFrame {
    std::vector<double> lower;
    std::vector<double> sides;
    bool periodic = false;
};

GridFrame grid_frame(const Mosaic& mosaic, const PointCloud& cloud) {
    const int n = cloud.dim;
    GridFrame f;
    if (mosaic.is_torus()) {
        f.lower = mosaic.region().lower;
        f.sides = mosaic.region().sides;
        f.periodic = true;
        return f;
    }
    f.lower.assign(n, std::numeric_limits<double>::infinity());
    std::vector<double> upper(n, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int j = 0; j < n; ++j) {
            f.lower[j] = std::min(f.lower[j], cloud.data(i)[j]);
            upper[j] = std::max(upper[j], cloud.data(i)[j]);
        }
    }
    f.sides.resize(n);
    for (int j = 0; j < n; ++j) {
        f.sides[j] = std::max(upper[j] - f.lower[j], 1e-300) * (1.0 + 1e-12) + 1e-300;
    }
    return f;
}

} // namespace

Decomposition decompose(const Mosaic& mosaic, const PointCloud& cloud, const DecomposeOptions& options) {
    const int n = mosaic.dim();
    if (cloud.dim != n || cloud.size() != mosaic.point_count()) {
        throw ConfigError("cloud does not match the mosaic");
    }
    const GridFrame frame = grid_frame(mosaic, cloud);
    double volume = 1.0;
    for (double s : frame.sides) {
        volume *= s;
    }
    const double cell = std::pow(volume / static_cast<double>(std::max<std::size_t>(cloud.size(), 1)), 1.0 / n);
    const SpatialGrid grid(cloud.coords.data(), cloud.size(), n, frame.lower.data(), frame.sides.data(),
                           frame.periodic, cell);

    Decomposition out;
    RadiusFunction& rad = out.rad;
    rad.dim = n;
    std::array<std::vector<std::uint8_t>, kMaxDim + 1> negative;

    double coords[(kMaxDim + 1) * kMaxDim];
    kernel::Coord ptrs[kMaxDim + 1];
    int offsets[(kMaxDim + 1) * kMaxDim] = {};
    int pids[kMaxDim + 1] = {};
    double bary[kMaxDim + 1];
    int signs[kMaxDim + 1];

    for (int j = 0; j <= n; ++j) {
        const std::size_t count = mosaic.count(j);
        rad.value[j].assign(count, 0.0);
        rad.sphere_radius[j].assign(count, 0.0);
        rad.sphere_center[j].assign(count * n, 0.0);
        rad.empty[j].assign(count, 0);
        rad.interval[j].assign(count, -1);
        negative[j].assign(count, 0);
        for (std::size_t s = 0; s < count; ++s) {
            const auto t = mosaic.simplex(j, s);
            for (int i = 0; i <= j; ++i) {
                mosaic.node_coords(t[i], coords + i * n);
                ptrs[i] = coords + i * n;
                pids[i] = mosaic.node_point(t[i]);
                if (mosaic.is_torus()) {
                    mosaic.node_offset(t[i], offsets + i * n);
                }
            }
            double* center = rad.sphere_center[j].data() + s * n;
            const double r2 = kernel::circumsphere({ptrs, static_cast<std::size_t>(j + 1)}, n, center, bary,
                                                   signs, options.tol);
            rad.sphere_radius[j][s] = std::sqrt(r2);
            bool empty = true;
            if (j > 0 && (j < n || options.check_top_simplices)) {
                const double reach = std::sqrt(r2) * (1.0 + 1e-6) + 1e-300;
                const double far = r2 * (1.0 + 4.0 * options.tol.sphere_filter);
                grid.visit_ball(center, reach, [&](int id, const double* q, const int* shift) {
                    for (int i = 0; i <= j; ++i) {
                        if (pids[i] != id) {
                            continue;
                        }
                        bool same = true;
                        if (mosaic.is_torus()) {
                            for (int c = 0; c < n; ++c) {
                                same = same && offsets[i * n + c] == shift[c];
                            }
                        }
                        if (same) {
                            return true;
                        }
                    }
                    double d2 = 0.0;
                    for (int c = 0; c < n; ++c) {
                        const double d = q[c] - center[c];
                        d2 += d * d;
                    }
                    if (d2 > far) {
                        return true;
                    }
                    if (kernel::in_smallest_circumsphere({ptrs, static_cast<std::size_t>(j + 1)}, center, r2, q,
                                                         n, options.tol) > 0) {
                        empty = false;
                        return false;
                    }
                    return true;
                });
            }
            rad.empty[j][s] = empty ? 1 : 0;
            if (empty) {
                std::uint8_t mask = 0;
                for (int i = 0; i <= j; ++i) {
                    if (signs[i] == 0) {
                        throw AmbiguousSign("circumcenter of an empty simplex lies on the affine hull of a facet");
                    }
                    if (signs[i] < 0) {
                        mask = static_cast<std::uint8_t>(mask | (1u << i));
                    }
                }
                negative[j][s] = mask;
            }
        }
    }

    int member[kMaxDim + 1];
    for (int k = 0; k <= n; ++k) {
        for (std::size_t s = 0; s < mosaic.count(k); ++s) {
            if (rad.empty[k][s] == 0) {
                continue;
            }
            const auto u = mosaic.simplex(k, s);
            const std::uint8_t mask = negative[k][s];
            Interval iv;
            iv.upper.assign(u.begin(), u.end());
            for (int i = 0; i <= k; ++i) {
                if ((mask >> i & 1u) == 0) {
                    iv.lower.push_back(u[i]);
                }
            }
            if (mosaic.is_torus()) {
                iv.lower = mosaic.normalize(iv.lower);
            }
            iv.k = k;
            iv.ell = static_cast<int>(iv.lower.size()) - 1;
            iv.radius = rad.sphere_radius[k][s];
            iv.center.assign(rad.sphere_center[k].begin() + s * n, rad.sphere_center[k].begin() + (s + 1) * n);
            const int id = static_cast<int>(out.intervals.size());

            // Members are the faces of U containing L: subsets of the removed vertices added to L.
            std::vector<int> removed;
            for (int i = 0; i <= k; ++i) {
                if ((mask >> i & 1u) != 0) {
                    removed.push_back(i);
                }
            }
            const unsigned subsets = 1u << removed.size();
            for (unsigned bits = 0; bits < subsets; ++bits) {
                int size = 0;
                for (int i = 0; i <= k; ++i) {
                    const auto it = std::find(removed.begin(), removed.end(), i);
                    if (it == removed.end() || (bits >> (it - removed.begin()) & 1u) != 0) {
                        member[size++] = u[i];
                    }
                }
                mosaic.normalize_inplace(member, size);
                const long idx = mosaic.find({member, static_cast<std::size_t>(size)});
                if (idx < 0) {
                    throw PartitionViolation("interval member is not a simplex of the mosaic");
                }
                int& slot = rad.interval[size - 1][idx];
                if (slot >= 0) {
                    throw PartitionViolation("simplex covered by two intervals (dimension " +
                                             std::to_string(size - 1) + ")");
                }
                slot = id;
                rad.value[size - 1][idx] = iv.radius;
            }
            out.intervals.push_back(std::move(iv));
        }
    }
    for (int j = 0; j <= n; ++j) {
        for (int slot : rad.interval[j]) {
            if (slot < 0) {
                throw PartitionViolation("simplex not covered by any interval (dimension " + std::to_string(j) + ")");
            }
        }
    }
    return out;
}

RadiusFunction radius_function(const Mosaic& mosaic, const PointCloud& cloud) {
    return decompose(mosaic, cloud).rad;
}

std::vector<Interval> interval_decomposition(const Mosaic& mosaic, const PointCloud& cloud) {
    return decompose(mosaic, cloud).intervals;
}

std::size_t monotonicity_violations(const Mosaic& mosaic, const RadiusFunction& rad, double rel_tol) {
    std::size_t bad = 0;
    for (int j = 0; j < mosaic.dim(); ++j) {
        for (std::size_t s = 0; s < mosaic.count(j); ++s) {
            const double p = rad.value[j][s];
            for (int c : mosaic.cofaces(j, s)) {
                const double q = rad.value[j + 1][c];
                if (p > q * (1.0 + rel_tol)) {
                    ++bad;
                }
            }
        }
    }
    return bad;
}

long IntervalCensus::critical_alternating_sum() const {
    long s = 0;
    for (int i = 0; i <= dim; ++i) {
        s += (i % 2 == 0 ? 1 : -1) * counts[i][i];
    }
    return s;
}

long IntervalCensus::euler_characteristic() const {
    long s = 0;
    for (int j = 0; j <= dim; ++j) {
        s += (j % 2 == 0 ? 1 : -1) * simplex_counts[j];
    }
    return s;
}

std::vector<double> IntervalCensus::simplex_radii(int j) const {
    std::vector<double> out;
    for (int k = j; k <= dim; ++k) {
        for (int ell = 0; ell <= j; ++ell) {
            const long copies = binom(k - ell, k - j);
            for (double r : radii[ell][k]) {
                out.insert(out.end(), static_cast<std::size_t>(copies), r);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

IntervalCensus census(const std::vector<Interval>& intervals, const Region& region, double density) {
    IntervalCensus c;
    c.dim = region.dim;
    c.region_volume = region.volume();
    c.density = density;
    const bool all = region.kind == Region::Kind::box && region.periodic;
    for (const auto& iv : intervals) {
        if (!all && !region.contains(iv.center)) {
            continue;
        }
        ++c.counts[iv.ell][iv.k];
        c.radii[iv.ell][iv.k].push_back(iv.radius);
    }
    for (int j = 0; j <= c.dim; ++j) {
        long d = 0;
        for (int k = j; k <= c.dim; ++k) {
            for (int ell = 0; ell <= j; ++ell) {
                d += binom(k - ell, k - j) * c.counts[ell][k];
            }
        }
        c.simplex_counts[j] = d;
    }
    return c;
}

long Restriction::euler_k0() const {
    long s = 0;
    for (int j = 0; j <= kMaxDim; ++j) {
        s += (j % 2 == 0 ? 1 : -1) * k0_counts[j];
    }
    return s;
}

namespace {

// Solves the (m+1)x(m+1) system of the affine minimum-norm problem over the
// points in `set`. Returns false when the system is singular.
bool affine_min_norm(const std::vector<double>& pts, int dim, const std::vector<int>& set, std::vector<double>& mu) {
    const int m = static_cast<int>(set.size());
    const int w = m + 2;
    std::vector<double> a(static_cast<std::size_t>(m + 1) * w, 0.0);
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            double s = 0.0;
            for (int j = 0; j < dim; ++j) {
                s += pts[set[r] * dim + j] * pts[set[c] * dim + j];
            }
            a[r * w + c] = s;
        }
        a[r * w + m] = 1.0;
        a[m * w + r] = 1.0;
    }
    a[m * w + m + 1] = 1.0;
    for (int col = 0; col <= m; ++col) {
        int piv = col;
        for (int r = col + 1; r <= m; ++r) {
            if (std::fabs(a[r * w + col]) > std::fabs(a[piv * w + col])) {
                piv = r;
            }
        }
        if (std::fabs(a[piv * w + col]) < 1e-300) {
            return false;
        }
        for (int c = 0; c < w; ++c) {
            std::swap(a[piv * w + c], a[col * w + c]);
        }
        for (int r = 0; r <= m; ++r) {
            if (r == col) {
                continue;
            }
            const double f = a[r * w + col] / a[col * w + col];
            for (int c = col; c < w; ++c) {
                a[r * w + c] -= f * a[col * w + c];
            }
        }
    }
    mu.resize(m);
    for (int r = 0; r < m; ++r) {
        mu[r] = a[r * w + m + 1] / a[r * w + r];
    }
    return true;
}

} // namespace

double distance_to_hull(const std::vector<double>& pts, int dim) {
    const int count = static_cast<int>(pts.size()) / dim;
    if (count == 0) {
        throw ConfigError("distance_to_hull needs at least one point");
    }
    auto dot = [&](const double* a, const double* b) {
        double s = 0.0;
        for (int j = 0; j < dim; ++j) {
            s += a[j] * b[j];
        }
        return s;
    };
    double scale = 0.0;
    int first = 0;
    for (int i = 0; i < count; ++i) {
        const double q = dot(&pts[i * dim], &pts[i * dim]);
        scale = std::max(scale, q);
        if (q < dot(&pts[first * dim], &pts[first * dim])) {
            first = i;
        }
    }
    const double eps = 1e-12 * scale;
    std::vector<int> set{first};
    std::vector<double> lambda{1.0};
    std::vector<double> x(pts.begin() + first * dim, pts.begin() + (first + 1) * dim);
    std::vector<double> mu;
    auto rebuild = [&] {
        std::fill(x.begin(), x.end(), 0.0);
        for (std::size_t a = 0; a < set.size(); ++a) {
            for (int j = 0; j < dim; ++j) {
                x[j] += lambda[a] * pts[set[a] * dim + j];
            }
        }
    };
    for (int major = 0; major < 64 * (count + dim); ++major) {
        int best = 0;
        double best_dot = std::numeric_limits<double>::infinity();
        for (int i = 0; i < count; ++i) {
            const double d = dot(x.data(), &pts[i * dim]);
            if (d < best_dot) {
                best_dot = d;
                best = i;
            }
        }
        if (dot(x.data(), x.data()) - best_dot <= eps ||
            std::find(set.begin(), set.end(), best) != set.end() || static_cast<int>(set.size()) > dim) {
            break;
        }
        set.push_back(best);
        lambda.push_back(0.0);
        for (;;) {
            if (!affine_min_norm(pts, dim, set, mu)) {
                set.pop_back();
                lambda.pop_back();
                rebuild();
                return std::sqrt(dot(x.data(), x.data()));
            }
            if (std::all_of(mu.begin(), mu.end(), [](double v) { return v > 1e-14; })) {
                lambda = mu;
                rebuild();
                break;
            }
            double theta = 1.0;
            for (std::size_t a = 0; a < set.size(); ++a) {
                if (mu[a] <= 1e-14) {
                    theta = std::min(theta, lambda[a] / (lambda[a] - mu[a]));
                }
            }
            std::vector<int> keep_set;
            std::vector<double> keep_lambda;
            for (std::size_t a = 0; a < set.size(); ++a) {
                const double v = theta * mu[a] + (1.0 - theta) * lambda[a];
                if (v > 1e-14) {
                    keep_set.push_back(set[a]);
                    keep_lambda.push_back(v);
                }
            }
            if (keep_set.empty()) {
                keep_set.push_back(set.back());
                keep_lambda.push_back(1.0);
            }
            const double total = [&] {
                double s = 0.0;
                for (double v : keep_lambda) {
                    s += v;
                }
                return s;
            }();
            for (double& v : keep_lambda) {
                v /= total;
            }
            set = std::move(keep_set);
            lambda = std::move(keep_lambda);
            rebuild();
            if (set.size() == 1) {
                break;
            }
        }
    }
    return std::sqrt(dot(x.data(), x.data()));
}

Restriction restrict_K0_K1(const Mosaic& mosaic, const PointCloud& cloud, const Region& ball,
                           const Decomposition& dec, K0Rule rule) {
    const int n = mosaic.dim();
    if (mosaic.is_torus()) {
        throw ConfigError("K0/K1 restriction needs a euclidean mosaic");
    }
    if (ball.kind != Region::Kind::ball || ball.dim != n) {
        throw ConfigError("K0/K1 restriction needs a ball region of the mosaic dimension");
    }
    const double* o = ball.center.data();
    const double radius = ball.radius;
    auto dist = [&](const double* p) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            s += (p[j] - o[j]) * (p[j] - o[j]);
        }
        return std::sqrt(s);
    };

    const auto& centers = dec.rad.sphere_center[n];
    const auto& radii = dec.rad.sphere_radius[n];
    const std::size_t tops = mosaic.count(n);
    double reach = 0.0;
    std::vector<std::uint8_t> touches(tops, 0);
    for (std::size_t t = 0; t < tops; ++t) {
        if (dist(&centers[t * n]) <= radius + radii[t]) {
            touches[t] = 1;
            reach = std::max(reach, radii[t]);
        }
    }
    if (reach == 0.0) {
        throw MarginTooSmall("no Delaunay simplex meets the ball");
    }
    const double grown = radius + 2.0 * reach;
    const Region& window = cloud.region;
    bool inside = true;
    if (window.kind == Region::Kind::box) {
        for (int j = 0; j < n; ++j) {
            inside = inside && o[j] - grown >= window.lower[j] && o[j] + grown <= window.lower[j] + window.sides[j];
        }
    } else {
        inside = dist(window.center.data()) + grown <= window.radius;
    }
    if (!inside) {
        throw MarginTooSmall("sampling window does not contain the ball grown by " + std::to_string(2.0 * reach));
    }
    for (std::size_t p = 0; p < cloud.size(); ++p) {
        if (mosaic.hull_point(static_cast<int>(p)) && dist(cloud.data(p)) <= grown) {
            throw MarginTooSmall("a convex hull point lies near the ball");
        }
    }

    Restriction res;
    for (int j = 0; j <= n; ++j) {
        res.membership[j].assign(mosaic.count(j), Membership::outside);
    }
    if (rule == K0Rule::witness) {
        int face[kMaxDim + 1];
        for (std::size_t t = 0; t < tops; ++t) {
            if (touches[t] == 0) {
                continue;
            }
            const auto tt = mosaic.simplex(n, t);
            for (unsigned bits = 1; bits < (1u << (n + 1)); ++bits) {
                int size = 0;
                for (int i = 0; i <= n; ++i) {
                    if ((bits >> i & 1u) != 0) {
                        face[size++] = tt[i];
                    }
                }
                const long idx = mosaic.find({face, static_cast<std::size_t>(size)});
                res.membership[size - 1][idx] = Membership::k0_only;
            }
        }
    } else {
        // Voronoi face of Q = convex hull of the circumcenters of its top cofaces.
        std::vector<int> level, next;
        std::vector<double> pts;
        for (int j = 0; j <= n; ++j) {
            for (std::size_t s = 0; s < mosaic.count(j); ++s) {
                level.assign(1, static_cast<int>(s));
                for (int d = j; d < n; ++d) {
                    next.clear();
                    for (int q : level) {
                        const auto cf = mosaic.cofaces(d, q);
                        next.insert(next.end(), cf.begin(), cf.end());
                    }
                    std::sort(next.begin(), next.end());
                    next.erase(std::unique(next.begin(), next.end()), next.end());
                    level.swap(next);
                }
                bool in = false;
                bool far = false;
                for (int j2 = 0; j2 < n && !far; ++j2) {
                    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                    for (int t : level) {
                        lo = std::min(lo, centers[t * n + j2]);
                        hi = std::max(hi, centers[t * n + j2]);
                    }
                    far = lo > o[j2] + radius || hi < o[j2] - radius;
                }
                if (far) {
                    continue;
                }
                for (int t : level) {
                    if (dist(&centers[t * n]) <= radius) {
                        in = true;
                        break;
                    }
                }
                if (!in && level.size() > 1) {
                    pts.clear();
                    for (int t : level) {
                        for (int c = 0; c < n; ++c) {
                            pts.push_back(centers[t * n + c] - o[c]);
                        }
                    }
                    in = distance_to_hull(pts, n) <= radius;
                }
                if (in) {
                    res.membership[j][s] = Membership::k0_only;
                }
            }
        }
    }
    for (int j = 0; j <= n; ++j) {
        for (std::size_t s = 0; s < mosaic.count(j); ++s) {
            const Interval& iv = dec.intervals[dec.rad.interval[j][s]];
            if (ball.contains(iv.center)) {
                res.membership[j][s] = Membership::k1;
            }
            if (res.membership[j][s] != Membership::outside) {
                ++res.k0_counts[j];
            }
            if (res.membership[j][s] == Membership::k1) {
                ++res.k1_counts[j];
                ++res.k1_total;
            } else if (res.membership[j][s] == Membership::k0_only) {
                ++res.k0_minus_k1;
            }
        }
    }
    return res;
}

Restriction restrict_K0_K1(const Mosaic& mosaic, const PointCloud& cloud, const Region& ball, K0Rule rule) {
    return restrict_K0_K1(mosaic, cloud, ball, decompose(mosaic, cloud), rule);
}

void write_intervals_csv(std::ostream& os, const Mosaic& mosaic, const std::vector<Interval>& intervals) {
    const int n = mosaic.dim();
    os << "ell,k,radius";
    for (int j = 0; j < n; ++j) {
        os << ",c" << j + 1;
    }
    os << ",lower,upper\n";
    os.precision(17);
    const Region& region = mosaic.region();
    auto join = [&](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            s += (i ? " " : "") + std::to_string(v[i]);
        }
        return s;
    };
    for (const auto& iv : intervals) {
        os << iv.ell << ',' << iv.k << ',' << iv.radius;
        for (int j = 0; j < n; ++j) {
            double c = iv.center[j];
            if (mosaic.is_torus()) {
                c -= std::floor((c - region.lower[j]) / region.sides[j]) * region.sides[j];
            }
            os << ',' << c;
        }
        os << ',' << join(iv.lower) << ',' << join(iv.upper) << '\n';
    }
}

} // namespace pdm
