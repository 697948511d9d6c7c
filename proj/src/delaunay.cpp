#include "pdm/delaunay.hpp"

#include "pdm/errors.hpp"
#include "pdm/spatial_grid.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <tuple>

namespace pdm {

using Tuple = std::array<int, kMaxDim + 1>;

const char* to_string(Topology t) { return t == Topology::torus ? "torus" : "euclidean"; }

Topology topology_from_string(const std::string& s) {
    if (s == "torus") {
        return Topology::torus;
    }
    if (s == "euclidean") {
        return Topology::euclidean;
    }
    throw ConfigError("unknown topology '" + s + "' (expected euclidean or torus)");
}

namespace {

int pow3(int n) {
    int p = 1;
    for (int i = 0; i < n; ++i) {
        p *= 3;
    }
    return p;
}

void decode_offset(int code, int n, int* offset) {
    for (int j = 0; j < n; ++j) {
        offset[j] = code % 3 - 1;
        code /= 3;
    }
}

int encode_offset(const int* offset, int n) {
    int code = 0;
    for (int j = n - 1; j >= 0; --j) {
        code = code * 3 + (offset[j] + 1);
    }
    return code;
}

bool tuple_less(const int* a, const int* b, int size) {
    return std::lexicographical_compare(a, a + size, b, b + size);
}

} // namespace

// ---------------------------------------------------------------------------
// Mosaic

void Mosaic::normalize_inplace(int* nodes, int size) const {
    if (!is_torus()) {
        std::sort(nodes, nodes + size);
        return;
    }
    int lowest = 0;
    for (int i = 1; i < size; ++i) {
        if (nodes[i] / images_ < nodes[lowest] / images_) {
            lowest = i;
        }
    }
    int base[kMaxDim];
    decode_offset(nodes[lowest] % images_, dim_, base);
    for (int i = 0; i < size; ++i) {
        int off[kMaxDim];
        decode_offset(nodes[i] % images_, dim_, off);
        for (int j = 0; j < dim_; ++j) {
            off[j] -= base[j];
            if (off[j] < -1 || off[j] > 1) {
                throw TorusTooSparse("simplex spans more than one period of the torus");
            }
        }
        nodes[i] = (nodes[i] / images_) * images_ + encode_offset(off, dim_);
    }
    std::sort(nodes, nodes + size);
}

std::vector<int> Mosaic::normalize(std::span<const int> nodes) const {
    std::vector<int> out(nodes.begin(), nodes.end());
    normalize_inplace(out.data(), static_cast<int>(out.size()));
    return out;
}

void Mosaic::node_offset(int node, int* offset) const {
    if (!is_torus()) {
        std::fill(offset, offset + dim_, 0);
        return;
    }
    decode_offset(node % images_, dim_, offset);
}

int Mosaic::node_of(int point, const int* offset) const {
    return is_torus() ? point * images_ + encode_offset(offset, dim_) : point;
}

void Mosaic::node_coords(int node, double* out) const {
    const int pid = node_point(node);
    const double* x = points_.data() + static_cast<std::size_t>(pid) * dim_;
    if (!is_torus()) {
        std::copy(x, x + dim_, out);
        return;
    }
    int off[kMaxDim];
    decode_offset(node % images_, dim_, off);
    for (int j = 0; j < dim_; ++j) {
        out[j] = off[j] == 0 ? x[j] : x[j] + off[j] * region_.sides[j];
    }
}

std::span<const int> Mosaic::cofaces(int j, std::size_t index) const {
    if (j >= dim_) {
        return {};
    }
    const auto& st = coface_start_[j];
    return {coface_items_[j].data() + st[index], static_cast<std::size_t>(st[index + 1] - st[index])};
}

long Mosaic::find(std::span<const int> tuple) const {
    const int j = static_cast<int>(tuple.size()) - 1;
    if (j < 0 || j > dim_) {
        return -1;
    }
    const int w = j + 1;
    const auto& flat = simplices_[j];
    long lo = 0, hi = static_cast<long>(count(j));
    while (lo < hi) {
        const long mid = (lo + hi) / 2;
        if (tuple_less(flat.data() + mid * w, tuple.data(), w)) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    if (lo < static_cast<long>(count(j)) && std::equal(tuple.begin(), tuple.end(), flat.data() + lo * w)) {
        return lo;
    }
    return -1;
}

long Mosaic::euler_characteristic() const {
    long chi = 0;
    for (int j = 0; j <= dim_; ++j) {
        chi += (j % 2 == 0 ? 1 : -1) * static_cast<long>(count(j));
    }
    return chi;
}

Mosaic Mosaic::from_top_simplices(int dim, Topology topology, const PointCloud& cloud,
                                  const std::vector<Tuple>& tops) {
    if (dim < 1 || dim > kMaxDim) {
        throw UnsupportedDimension("mosaic dimension must be between 1 and 4");
    }
    Mosaic m;
    m.dim_ = dim;
    m.topology_ = topology;
    m.images_ = topology == Topology::torus ? pow3(dim) : 1;
    m.region_ = cloud.region;
    m.points_ = cloud.coords;
    const int top_size = dim + 1;

    std::array<std::vector<Tuple>, kMaxDim + 1> faces;
    for (const auto& t : tops) {
        for (unsigned mask = 1; mask < (1u << top_size); ++mask) {
            Tuple f{};
            int size = 0;
            for (int i = 0; i < top_size; ++i) {
                if (mask & (1u << i)) {
                    f[size++] = t[i];
                }
            }
            m.normalize_inplace(f.data(), size);
            for (int i = size; i <= kMaxDim; ++i) {
                f[i] = -1;
            }
            faces[size - 1].push_back(f);
        }
    }
    for (int j = 0; j <= dim; ++j) {
        auto& list = faces[j];
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        auto& flat = m.simplices_[j];
        flat.reserve(list.size() * (j + 1));
        for (const auto& f : list) {
            flat.insert(flat.end(), f.begin(), f.begin() + j + 1);
        }
        list.clear();
        list.shrink_to_fit();
    }
    for (int j = 0; j < dim; ++j) {
        std::vector<std::pair<int, int>> pairs;
        const int w = j + 2;
        pairs.reserve(m.count(j + 1) * w);
        for (std::size_t q = 0; q < m.count(j + 1); ++q) {
            const auto s = m.simplex(j + 1, q);
            for (int drop = 0; drop < w; ++drop) {
                int f[kMaxDim + 1];
                int size = 0;
                for (int i = 0; i < w; ++i) {
                    if (i != drop) {
                        f[size++] = s[i];
                    }
                }
                m.normalize_inplace(f, size);
                const long idx = m.find({f, static_cast<std::size_t>(size)});
                if (idx < 0) {
                    throw PartitionViolation("face lattice is not closed");
                }
                pairs.emplace_back(static_cast<int>(idx), static_cast<int>(q));
            }
        }
        std::sort(pairs.begin(), pairs.end());
        auto& start = m.coface_start_[j];
        auto& items = m.coface_items_[j];
        start.assign(m.count(j) + 1, 0);
        items.resize(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            ++start[pairs[i].first + 1];
            items[i] = pairs[i].second;
        }
        for (std::size_t i = 0; i + 1 < start.size(); ++i) {
            start[i + 1] += start[i];
        }
    }
    if (topology == Topology::euclidean) {
        m.hull_.assign(m.point_count(), 0);
        const int r = dim - 1;
        for (std::size_t i = 0; i < m.count(r); ++i) {
            if (m.cofaces(r, i).size() == 1) {
                for (int v : m.simplex(r, i)) {
                    m.hull_[v] = 1;
                }
            }
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Bowyer-Watson engine

namespace {

class Engine {
public:
    Engine(int n, const std::vector<double>& coords, std::uint64_t seed)
        : n_(n), count_(static_cast<int>(coords.size() / n)), x_(coords), rng_(seed) {
        const int key_bits = n_ > 1 ? 63 / (n_ - 1) : 63;
        if (key_bits < 31 && static_cast<long>(count_) + n_ + 1 >= (1L << key_bits)) {
            throw OverflowRisk("too many points for the ridge key packing");
        }
        bootstrap();
    }

    void run() {
        std::vector<int> order(count_);
        std::iota(order.begin(), order.end(), 0);
        for (int i = count_ - 1; i > 0; --i) {
            const int j = static_cast<int>(rng_() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[i], order[j]);
        }
        for (int p : order) {
            insert(p);
        }
    }

    template <class F>
    void for_each_top(F&& f) const {
        for (std::size_t s = 0; s < verts_.size(); ++s) {
            if (!alive_[s]) {
                continue;
            }
            bool real = true;
            for (int i = 0; i <= n_; ++i) {
                real = real && verts_[s][i] < count_;
            }
            if (real) {
                f(static_cast<int>(s), verts_[s]);
            }
        }
    }

    const double* point(int v) const { return x_.data() + static_cast<std::size_t>(v) * n_; }

    /// Circumcenter and squared radius; false when the cached value is unreliable.
    bool cached_sphere(int s, double* center, double& r2) const {
        if (!cache_ok_[s]) {
            return false;
        }
        std::copy_n(sphere_[s].data(), n_, center);
        r2 = sphere_[s][n_];
        return true;
    }

private:
    void bootstrap() {
        std::array<double, kMaxDim> lo, hi;
        lo.fill(std::numeric_limits<double>::infinity());
        hi.fill(-std::numeric_limits<double>::infinity());
        for (int v = 0; v < count_; ++v) {
            for (int j = 0; j < n_; ++j) {
                lo[j] = std::min(lo[j], point(v)[j]);
                hi[j] = std::max(hi[j], point(v)[j]);
            }
        }
        double diam2 = 0.0;
        for (int j = 0; j < n_; ++j) {
            diam2 += (hi[j] - lo[j]) * (hi[j] - lo[j]);
        }
        const double scale = 1e3 * std::max(std::sqrt(diam2), 1e-300);
        const double reach = 2.0 * (n_ + 1) * scale;
        for (int i = 0; i <= n_; ++i) {
            for (int j = 0; j < n_; ++j) {
                const double c = 0.5 * (lo[j] + hi[j]) - scale;
                x_.push_back(i > 0 && j == i - 1 ? c + reach : c);
            }
        }
        Tuple v{};
        Tuple nb{};
        for (int i = 0; i <= n_; ++i) {
            v[i] = count_ + i;
            nb[i] = -1;
        }
        const int s = allocate(v, nb);
        vinc_.assign(count_ + n_ + 1, s);
        build_hint_grid(lo.data(), hi.data());
        last_ = s;
    }

    void build_hint_grid(const double* lo, const double* hi) {
        long cells = 1;
        const double per_dim = std::max(1.0, std::floor(std::pow(static_cast<double>(count_), 1.0 / n_)));
        for (int j = 0; j < n_; ++j) {
            hint_lo_[j] = lo[j];
            hint_cells_[j] = static_cast<int>(per_dim);
            hint_width_[j] = std::max(hi[j] - lo[j], 1e-300) / hint_cells_[j];
            cells *= hint_cells_[j];
        }
        hint_.assign(static_cast<std::size_t>(cells), -1);
    }

    long hint_cell(const long* c) const {
        long cell = 0;
        for (int j = n_ - 1; j >= 0; --j) {
            cell = cell * hint_cells_[j] + c[j];
        }
        return cell;
    }

    void hint_coords(const double* p, long* c) const {
        for (int j = 0; j < n_; ++j) {
            c[j] = std::clamp(static_cast<long>(std::floor((p[j] - hint_lo_[j]) / hint_width_[j])), 0L,
                              static_cast<long>(hint_cells_[j] - 1));
        }
    }

    int start_simplex(const double* p) const {
        long c[kMaxDim];
        hint_coords(p, c);
        const int v = hint_[hint_cell(c)];
        if (v >= 0) {
            return vinc_[v];
        }
        for (int ring = 1; ring <= 2; ++ring) {
            long lo[kMaxDim], hi[kMaxDim], cur[kMaxDim];
            for (int j = 0; j < n_; ++j) {
                lo[j] = std::max(0L, c[j] - ring);
                hi[j] = std::min(static_cast<long>(hint_cells_[j] - 1), c[j] + ring);
                cur[j] = lo[j];
            }
            for (;;) {
                const int u = hint_[hint_cell(cur)];
                if (u >= 0) {
                    return vinc_[u];
                }
                int j = 0;
                while (j < n_ && cur[j] == hi[j]) {
                    cur[j] = lo[j];
                    ++j;
                }
                if (j == n_) {
                    break;
                }
                ++cur[j];
            }
        }
        return last_;
    }

    int allocate(const Tuple& v, const Tuple& nb) {
        int s;
        if (!free_.empty()) {
            s = free_.back();
            free_.pop_back();
            verts_[s] = v;
            nbrs_[s] = nb;
            alive_[s] = 1;
        } else {
            s = static_cast<int>(verts_.size());
            verts_.push_back(v);
            nbrs_.push_back(nb);
            alive_.push_back(1);
            sphere_.emplace_back();
            cache_ok_.push_back(0);
            visit_.push_back(0);
            cavity_.push_back(0);
        }
        compute_sphere(s);
        return s;
    }

    void compute_sphere(int s) {
        // Solve 2 (x_i - x_0) . w = |x_i - x_0|^2 with partial pivoting.
        double a[kMaxDim][kMaxDim + 1];
        const double* x0 = point(verts_[s][0]);
        double max_entry = 0.0;
        for (int i = 0; i < n_; ++i) {
            const double* xi = point(verts_[s][i + 1]);
            double b = 0.0;
            for (int j = 0; j < n_; ++j) {
                const double e = xi[j] - x0[j];
                a[i][j] = 2.0 * e;
                b += e * e;
                max_entry = std::max(max_entry, std::fabs(a[i][j]));
            }
            a[i][n_] = b;
        }
        double min_pivot = std::numeric_limits<double>::infinity();
        for (int col = 0; col < n_; ++col) {
            int piv = col;
            for (int r = col + 1; r < n_; ++r) {
                if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) {
                    piv = r;
                }
            }
            if (piv != col) {
                for (int c = 0; c <= n_; ++c) {
                    std::swap(a[piv][c], a[col][c]);
                }
            }
            const double p = a[col][col];
            min_pivot = std::min(min_pivot, std::fabs(p));
            if (p == 0.0) {
                cache_ok_[s] = 0;
                return;
            }
            for (int r = col + 1; r < n_; ++r) {
                const double f = a[r][col] / p;
                for (int c = col; c <= n_; ++c) {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
        double w[kMaxDim];
        for (int i = n_ - 1; i >= 0; --i) {
            double v = a[i][n_];
            for (int c = i + 1; c < n_; ++c) {
                v -= a[i][c] * w[c];
            }
            w[i] = v / a[i][i];
        }
        double r2 = 0.0;
        for (int j = 0; j < n_; ++j) {
            sphere_[s][j] = x0[j] + w[j];
            r2 += w[j] * w[j];
        }
        sphere_[s][n_] = r2;
        cache_ok_[s] = std::isfinite(r2) && min_pivot > 1e-6 * max_entry;
    }

    int orient_with(const Tuple& v, int replace, int p) const {
        kernel::Coord pts[kMaxDim + 1];
        for (int i = 0; i <= n_; ++i) {
            pts[i] = point(i == replace ? p : v[i]);
        }
        return kernel::orient({pts, static_cast<std::size_t>(n_ + 1)}, n_);
    }

    bool conflict(int s, const double* p) const {
        if (cache_ok_[s]) {
            double d2 = 0.0;
            for (int j = 0; j < n_; ++j) {
                const double d = p[j] - sphere_[s][j];
                d2 += d * d;
            }
            const double r2 = sphere_[s][n_];
            if (d2 < r2 * (1.0 - 1e-7)) {
                return true;
            }
            if (d2 > r2 * (1.0 + 1e-7)) {
                return false;
            }
        }
        kernel::Coord pts[kMaxDim + 1];
        for (int i = 0; i <= n_; ++i) {
            pts[i] = point(verts_[s][i]);
        }
        return kernel::in_sphere({pts, static_cast<std::size_t>(n_ + 1)}, p, n_) > 0;
    }

    int locate(int p, int s) {
        const std::size_t limit = 64 + 4 * verts_.size();
        for (std::size_t steps = 0; steps < limit; ++steps) {
            const int r = static_cast<int>(rng_() % static_cast<std::uint64_t>(n_ + 1));
            bool moved = false;
            for (int t = 0; t <= n_; ++t) {
                const int i = (r + t) % (n_ + 1);
                const int o = nbrs_[s][i];
                if (o < 0) {
                    continue;
                }
                if (orient_with(verts_[s], i, p) < 0) {
                    s = o;
                    moved = true;
                    break;
                }
            }
            if (!moved) {
                return s;
            }
        }
        for (std::size_t t = 0; t < verts_.size(); ++t) {
            if (!alive_[t]) {
                continue;
            }
            bool inside = true;
            for (int i = 0; i <= n_ && inside; ++i) {
                inside = orient_with(verts_[t], i, p) >= 0;
            }
            if (inside) {
                return static_cast<int>(t);
            }
        }
        throw DegenerateInput("point location failed");
    }

    void insert(int p) {
        const double* xp = point(p);
        const int s0 = locate(p, start_simplex(xp));
        ++epoch_;
        cavity_list_.clear();
        stack_.clear();
        visit_[s0] = epoch_;
        cavity_[s0] = epoch_;
        cavity_list_.push_back(s0);
        stack_.push_back(s0);
        while (!stack_.empty()) {
            const int t = stack_.back();
            stack_.pop_back();
            for (int i = 0; i <= n_; ++i) {
                const int o = nbrs_[t][i];
                if (o < 0 || visit_[o] == epoch_) {
                    continue;
                }
                visit_[o] = epoch_;
                if (conflict(o, xp)) {
                    cavity_[o] = epoch_;
                    cavity_list_.push_back(o);
                    stack_.push_back(o);
                }
            }
        }
        ridges_.clear();
        created_.clear();
        for (const int s : cavity_list_) {
            for (int i = 0; i <= n_; ++i) {
                const int o = nbrs_[s][i];
                if (o >= 0 && cavity_[o] == epoch_) {
                    continue;
                }
                Tuple v = verts_[s];
                v[i] = p;
                Tuple nb{};
                nb.fill(-1);
                nb[i] = o;
                const int t = allocate(v, nb);
                if (orient_with(v, -1, -1) <= 0) {
                    throw DegenerateInput("points are not in general position (flat simplex at insertion)");
                }
                created_.push_back(t);
                if (o >= 0) {
                    for (int j = 0; j <= n_; ++j) {
                        if (nbrs_[o][j] == s) {
                            nbrs_[o][j] = t;
                            break;
                        }
                    }
                }
                for (int j = 0; j <= n_; ++j) {
                    if (j == i) {
                        continue;
                    }
                    int ids[kMaxDim];
                    int m = 0;
                    for (int q = 0; q <= n_; ++q) {
                        if (q != i && q != j) {
                            ids[m++] = v[q];
                        }
                    }
                    std::sort(ids, ids + m);
                    std::uint64_t key = 0;
                    const int bits = n_ > 1 ? 63 / (n_ - 1) : 63;
                    for (int q = 0; q < m; ++q) {
                        key = (key << bits) | static_cast<std::uint64_t>(ids[q]);
                    }
                    ridges_.emplace_back(key, t, j);
                }
            }
        }
        std::sort(ridges_.begin(), ridges_.end());
        if (ridges_.size() % 2 != 0) {
            throw DegenerateInput("cavity boundary is not a closed sphere");
        }
        for (std::size_t r = 0; r < ridges_.size(); r += 2) {
            const auto& [k1, t1, j1] = ridges_[r];
            const auto& [k2, t2, j2] = ridges_[r + 1];
            if (k1 != k2 || (r + 2 < ridges_.size() && std::get<0>(ridges_[r + 2]) == k1)) {
                throw DegenerateInput("cavity boundary is not a closed sphere");
            }
            nbrs_[t1][j1] = t2;
            nbrs_[t2][j2] = t1;
        }
        for (const int s : cavity_list_) {
            alive_[s] = 0;
            free_.push_back(s);
        }
        for (const int t : created_) {
            for (int i = 0; i <= n_; ++i) {
                vinc_[verts_[t][i]] = t;
            }
        }
        last_ = created_.empty() ? last_ : created_.back();
        long c[kMaxDim];
        hint_coords(xp, c);
        hint_[hint_cell(c)] = p;
    }

    int n_;
    int count_;
    std::vector<double> x_;
    Pcg64 rng_;
    std::vector<Tuple> verts_, nbrs_;
    std::vector<std::array<double, kMaxDim + 1>> sphere_;
    std::vector<unsigned char> cache_ok_, alive_;
    std::vector<int> visit_, cavity_;
    std::vector<int> free_, vinc_, hint_;
    std::array<double, kMaxDim> hint_lo_{}, hint_width_{};
    std::array<int, kMaxDim> hint_cells_{};
    int epoch_ = 0;
    int last_ = 0;
    std::vector<int> cavity_list_, stack_, created_;
    std::vector<std::tuple<std::uint64_t, int, int>> ridges_;
};

void check_cloud(const PointCloud& cloud) {
    if (cloud.dim < 2 || cloud.dim > kMaxDim) {
        throw UnsupportedDimension("mosaics are supported for n = 2, 3, 4 (got " + std::to_string(cloud.dim) + ")");
    }
    for (double c : cloud.coords) {
        if (!std::isfinite(c)) {
            throw ConfigError("non-finite coordinate in point cloud");
        }
    }
}

double default_margin_factor(int n) {
    switch (n) {
    case 2:
        return 3.0;
    case 3:
        return 2.2;
    default:
        return 2.0;
    }
}

Mosaic triangulate_euclidean(const PointCloud& cloud, std::uint64_t seed) {
    const int n = cloud.dim;
    if (cloud.size() < static_cast<std::size_t>(n + 1)) {
        throw DegenerateInput("need at least n+1 points");
    }
    Engine engine(n, cloud.coords, seed);
    engine.run();
    std::vector<Tuple> tops;
    engine.for_each_top([&](int, const Tuple& v) {
        Tuple t = v;
        for (int i = n + 1; i <= kMaxDim; ++i) {
            t[i] = -1;
        }
        tops.push_back(t);
    });
    if (tops.empty()) {
        throw DegenerateInput("points do not span R^n");
    }
    return Mosaic::from_top_simplices(n, Topology::euclidean, cloud, tops);
}

Mosaic triangulate_torus(const PointCloud& cloud, const TriangulateOptions& options) {
    const int n = cloud.dim;
    const Region& region = cloud.region;
    if (region.kind != Region::Kind::box || !region.periodic) {
        throw ConfigError("torus mode needs a periodic box region");
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (!region.contains(cloud.point(i))) {
            throw ConfigError("torus point lies outside the fundamental domain");
        }
    }
    const double half = 0.5 * region.shortest_side();
    if (cloud.size() < static_cast<std::size_t>(n + 1)) {
        throw TorusTooSparse("fewer than n+1 points in the torus");
    }
    const double density = static_cast<double>(cloud.size()) / region.volume();
    const double factor = options.margin_factor > 0.0 ? options.margin_factor : default_margin_factor(n);
    double margin = std::min(half, factor * std::pow(density, -1.0 / n));
    const int images = pow3(n);

    for (;;) {
        std::vector<double> coords;
        std::vector<int> node_of_image;
        for (std::size_t pid = 0; pid < cloud.size(); ++pid) {
            const double* x = cloud.data(pid);
            for (int code = 0; code < images; ++code) {
                int off[kMaxDim];
                decode_offset(code, n, off);
                bool keep = true;
                double y[kMaxDim];
                for (int j = 0; j < n && keep; ++j) {
                    y[j] = off[j] == 0 ? x[j] : x[j] + off[j] * region.sides[j];
                    const double lo = region.lower[j] - margin;
                    const double hi = region.lower[j] + region.sides[j] + margin;
                    keep = y[j] >= lo && y[j] < hi;
                }
                if (keep) {
                    coords.insert(coords.end(), y, y + n);
                    node_of_image.push_back(static_cast<int>(pid) * images + code);
                }
            }
        }
        Engine engine(n, coords, options.seed);
        engine.run();

        std::vector<Tuple> tops;
        double max_radius = 0.0;
        std::vector<double> center(n);
        std::vector<double> bary(n + 1);
        std::vector<int> signs(n + 1);
        const double slack = 1e-9 * region.shortest_side();
        engine.for_each_top([&](int s, const Tuple& v) {
            double r2;
            if (!engine.cached_sphere(s, center.data(), r2)) {
                kernel::Coord pts[kMaxDim + 1];
                for (int i = 0; i <= n; ++i) {
                    pts[i] = engine.point(v[i]);
                }
                r2 = kernel::circumsphere({pts, static_cast<std::size_t>(n + 1)}, n, center.data(), bary.data(),
                                          signs.data(), Tolerances{0.0, 1e-4, 0.0, 1e-6});
            }
            for (int j = 0; j < n; ++j) {
                const double lo = region.lower[j] - slack;
                const double hi = region.lower[j] + region.sides[j] + slack;
                if (!(center[j] >= lo && center[j] < hi)) {
                    return;
                }
            }
            max_radius = std::max(max_radius, std::sqrt(r2));
            Tuple t{};
            t.fill(-1);
            for (int i = 0; i <= n; ++i) {
                t[i] = node_of_image[v[i]];
            }
            tops.push_back(t);
        });
        const bool margin_ok = max_radius <= margin;
        if (!margin_ok) {
            if (margin < half) {
                margin = std::min(half, 2.0 * margin);
                continue;
            }
            throw TorusTooSparse("circumradius " + std::to_string(max_radius) +
                                 " reaches half the shortest box side " + std::to_string(half));
        }
        Mosaic mosaic = Mosaic::from_top_simplices(n, Topology::torus, cloud, tops);
        bool closed = true;
        for (std::size_t i = 0; i < mosaic.count(n - 1) && closed; ++i) {
            closed = mosaic.cofaces(n - 1, i).size() == 2;
        }
        if (closed) {
            return mosaic;
        }
        if (margin < half) {
            margin = std::min(half, 2.0 * margin);
            continue;
        }
        throw TorusTooSparse("periodic triangulation failed its ridge-pairing certificate");
    }
}

} // namespace

Mosaic triangulate(const PointCloud& cloud, const TriangulateOptions& options) {
    check_cloud(cloud);
    if (options.topology == Topology::torus) {
        return triangulate_torus(cloud, options);
    }
    return triangulate_euclidean(cloud, options.seed);
}

Mosaic triangulate(const PointCloud& cloud, Topology topology) {
    TriangulateOptions options;
    options.topology = topology;
    return triangulate(cloud, options);
}

// ---------------------------------------------------------------------------
// Verification and export

DelaunayReport verify_delaunay(const Mosaic& mosaic, const PointCloud& cloud) {
    DelaunayReport report;
    const int n = mosaic.dim();
    auto fail = [&](std::string msg) {
        report.ok = false;
        if (report.failures.size() < 20) {
            report.failures.push_back(std::move(msg));
        }
    };
    if (cloud.dim != n || cloud.size() != mosaic.point_count()) {
        fail("cloud does not match the mosaic");
        return report;
    }
    const Region& region = cloud.region;
    std::vector<double> lower(n), sides(n);
    if (mosaic.is_torus()) {
        lower = region.lower;
        sides = region.sides;
    } else {
        std::vector<double> lo(n, std::numeric_limits<double>::infinity());
        std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            for (int j = 0; j < n; ++j) {
                lo[j] = std::min(lo[j], cloud.data(i)[j]);
                hi[j] = std::max(hi[j], cloud.data(i)[j]);
            }
        }
        for (int j = 0; j < n; ++j) {
            lower[j] = lo[j];
            sides[j] = std::max(hi[j] - lo[j], 1e-12) * (1.0 + 1e-12);
        }
    }
    const double vol = std::accumulate(sides.begin(), sides.end(), 1.0, std::multiplies<>());
    const double cell = std::pow(vol / std::max<double>(1.0, static_cast<double>(cloud.size())), 1.0 / n);
    SpatialGrid grid(cloud.coords.data(), cloud.size(), n, lower.data(), sides.data(), mosaic.is_torus(), cell);

    std::vector<double> vc(static_cast<std::size_t>(n + 1) * n);
    std::vector<double> center(n), bary(n + 1);
    std::vector<int> signs(n + 1);
    for (std::size_t s = 0; s < mosaic.count(n); ++s) {
        const auto tuple = mosaic.simplex(n, s);
        kernel::Coord pts[kMaxDim + 1];
        int vp[kMaxDim + 1];
        int voff[kMaxDim + 1][kMaxDim];
        for (int i = 0; i <= n; ++i) {
            mosaic.node_coords(tuple[i], vc.data() + i * n);
            pts[i] = vc.data() + i * n;
            vp[i] = mosaic.node_point(tuple[i]);
            mosaic.node_offset(tuple[i], voff[i]);
        }
        const std::span<const kernel::Coord> simplex{pts, static_cast<std::size_t>(n + 1)};
        if (kernel::orient(simplex, n) == 0) {
            fail("top simplex " + std::to_string(s) + " has zero volume");
            continue;
        }
        double r2;
        try {
            r2 = kernel::circumsphere(simplex, n, center.data(), bary.data(), signs.data(),
                                      Tolerances{0.0, 1e-4, 0.0, 1e-6});
        } catch (const Error&) {
            fail("top simplex " + std::to_string(s) + " is degenerate");
            continue;
        }
        ++report.top_simplices;
        const double reach = std::sqrt(r2) * (1.0 + 1e-6) + 1e-12;
        grid.visit_ball(center.data(), reach, [&](int pid, const double* image, const int* shift) {
            for (int i = 0; i <= n; ++i) {
                if (vp[i] == pid && std::equal(voff[i], voff[i] + n, shift)) {
                    return;
                }
            }
            ++report.checked_points;
            double d2 = 0.0;
            for (int j = 0; j < n; ++j) {
                d2 += (image[j] - center[j]) * (image[j] - center[j]);
            }
            if (d2 > r2 * (1.0 + 1e-6)) {
                return;
            }
            if (kernel::in_sphere(simplex, image, n) > 0) {
                fail("point " + std::to_string(pid) + " lies inside the circumball of top simplex " +
                     std::to_string(s));
            }
        });
    }
    for (int j = 1; j <= n; ++j) {
        for (std::size_t s = 0; s < mosaic.count(j); ++s) {
            const auto tuple = mosaic.simplex(j, s);
            for (int drop = 0; drop <= j; ++drop) {
                std::vector<int> f;
                for (int i = 0; i <= j; ++i) {
                    if (i != drop) {
                        f.push_back(tuple[i]);
                    }
                }
                if (mosaic.find(mosaic.normalize(f)) < 0) {
                    fail("face lattice is not closed at dimension " + std::to_string(j));
                }
            }
        }
    }
    for (std::size_t s = 0; s < mosaic.count(n - 1); ++s) {
        const std::size_t c = mosaic.cofaces(n - 1, s).size();
        if (mosaic.is_torus() ? c != 2 : (c < 1 || c > 2)) {
            fail("ridge " + std::to_string(s) + " has " + std::to_string(c) + " top cofaces");
        }
    }
    return report;
}

std::vector<std::vector<std::vector<int>>> enumerate_faces(const Mosaic& mosaic) {
    std::vector<std::vector<std::vector<int>>> out(mosaic.dim() + 1);
    for (int j = 0; j <= mosaic.dim(); ++j) {
        out[j].reserve(mosaic.count(j));
        for (std::size_t s = 0; s < mosaic.count(j); ++s) {
            const auto t = mosaic.simplex(j, s);
            out[j].emplace_back(t.begin(), t.end());
        }
    }
    return out;
}

void write_mosaic_json(std::ostream& os, const Mosaic& mosaic) {
    using nlohmann::json;
    const int n = mosaic.dim();
    json j;
    j["dim"] = n;
    j["topology"] = to_string(mosaic.topology());
    if (mosaic.is_torus()) {
        j["box"] = mosaic.region().sides;
    }
    std::vector<int> nodes;
    for (int d = 0; d <= n; ++d) {
        for (std::size_t s = 0; s < mosaic.count(d); ++s) {
            for (int v : mosaic.simplex(d, s)) {
                nodes.push_back(v);
            }
        }
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    json vertices = json::array();
    std::vector<double> x(n);
    std::vector<int> off(n);
    for (int v : nodes) {
        mosaic.node_coords(v, x.data());
        mosaic.node_offset(v, off.data());
        vertices.push_back({{"id", v}, {"point", mosaic.node_point(v)}, {"offset", off}, {"coords", x}});
    }
    j["vertices"] = std::move(vertices);
    json simplices = json::array();
    for (int d = 0; d <= n; ++d) {
        json level = json::array();
        for (std::size_t s = 0; s < mosaic.count(d); ++s) {
            const auto t = mosaic.simplex(d, s);
            level.push_back(std::vector<int>(t.begin(), t.end()));
        }
        simplices.push_back(std::move(level));
    }
    j["simplices"] = std::move(simplices);
    os << j.dump() << '\n';
}

} // namespace pdm
