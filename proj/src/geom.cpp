#include "pdm/geom.hpp"

#include "pdm/errors.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace pdm {
namespace {

constexpr double kUnitRoundoff = std::numeric_limits<double>::epsilon() / 2;

// Cofactor expansion along the rows of an m x m matrix, restricted to the
// columns in `cols`. Used for both double and exact rational entries.
template <class T>
T cofactor_det(const T* a, int m, int row, unsigned cols) {
    if (row == m - 1) {
        return a[row * m + std::countr_zero(cols)];
    }
    if (row == m - 2) {
        const int c0 = std::countr_zero(cols);
        const int c1 = std::countr_zero(cols & (cols - 1));
        const T* r0 = a + row * m;
        const T* r1 = r0 + m;
        return T(r0[c0] * r1[c1] - r0[c1] * r1[c0]);
    }
    T sum = 0;
    bool negate = false;
    for (unsigned rest = cols; rest != 0; rest &= rest - 1) {
        const int c = std::countr_zero(rest);
        const T& entry = a[row * m + c];
        if (entry != 0) {
            T term = entry * cofactor_det(a, m, row + 1, cols & ~(1u << c));
            if (negate) {
                sum -= term;
            } else {
                sum += term;
            }
        }
        negate = !negate;
    }
    return sum;
}

template <class T>
T determinant(const T* a, int m) {
    if (m == 0) {
        return T(1);
    }
    return cofactor_det(a, m, 0, (1u << m) - 1);
}

int sign_of(const mpq_class& v) { return sgn(v); }

int sign_of(double v) { return (v > 0) - (v < 0); }

// Forward error bound of the cofactor expansion: entries carry relative error
// up to entry_ops * u, and the permanent of |a| is bounded by the product of
// absolute row sums.
double det_error_bound(const double* a, int m, int entry_ops) {
    double perm = 1.0;
    for (int i = 0; i < m; ++i) {
        double row = 0.0;
        for (int j = 0; j < m; ++j) {
            row += std::fabs(a[i * m + j]);
        }
        perm *= row;
    }
    const double ops = m * (m + 1) / 2.0 + m + m * entry_ops + 2.0;
    return 2.0 * ops * kUnitRoundoff * perm;
}

void fill_orient_matrix(std::span<const kernel::Coord> pts, int n, double* a) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            a[i * n + j] = pts[i + 1][j] - pts[0][j];
        }
    }
}

void fill_lifted_matrix(std::span<const kernel::Coord> simplex, kernel::Coord q, int n, double* a) {
    const int m = n + 1;
    for (int i = 0; i < m; ++i) {
        double lift = 0.0;
        for (int j = 0; j < n; ++j) {
            const double b = simplex[i][j] - q[j];
            a[i * m + j] = b;
            lift += b * b;
        }
        a[i * m + n] = lift;
    }
}

// Exact solution of the Gram system G lambda = b with G_ij = e_i . e_j and
// b_i = |e_i|^2 / 2, where e_i = x_i - x_0.
std::vector<mpq_class> exact_lambda(std::span<const kernel::Coord> verts, int n) {
    const int k = static_cast<int>(verts.size()) - 1;
    std::vector<mpq_class> e(static_cast<size_t>(k) * n);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < n; ++j) {
            e[i * n + j] = mpq_class(verts[i + 1][j]) - mpq_class(verts[0][j]);
        }
    }
    std::vector<mpq_class> g(static_cast<size_t>(k) * (k + 1));
    const int w = k + 1;
    for (int i = 0; i < k; ++i) {
        for (int l = 0; l < k; ++l) {
            mpq_class s = 0;
            for (int j = 0; j < n; ++j) {
                s += e[i * n + j] * e[l * n + j];
            }
            g[i * w + l] = s;
        }
        g[i * w + k] = g[i * w + i] / 2;
    }
    for (int col = 0; col < k; ++col) {
        int piv = -1;
        for (int r = col; r < k; ++r) {
            if (g[r * w + col] != 0) {
                piv = r;
                break;
            }
        }
        if (piv < 0) {
            throw DegenerateSimplex("vertices are affinely dependent");
        }
        if (piv != col) {
            for (int c = 0; c < w; ++c) {
                std::swap(g[piv * w + c], g[col * w + c]);
            }
        }
        for (int r = col + 1; r < k; ++r) {
            if (g[r * w + col] == 0) {
                continue;
            }
            const mpq_class f = g[r * w + col] / g[col * w + col];
            for (int c = col; c < w; ++c) {
                g[r * w + c] -= f * g[col * w + c];
            }
        }
    }
    std::vector<mpq_class> lambda(k);
    for (int i = k - 1; i >= 0; --i) {
        mpq_class s = g[i * w + k];
        for (int c = i + 1; c < k; ++c) {
            s -= g[i * w + c] * lambda[c];
        }
        lambda[i] = s / g[i * w + i];
    }
    return lambda;
}

std::vector<kernel::Coord> pointers(std::span<const Point> pts) {
    std::vector<kernel::Coord> out;
    out.reserve(pts.size());
    for (const auto& p : pts) {
        out.push_back(p.data());
    }
    return out;
}

int common_dimension(std::span<const Point> pts) {
    if (pts.empty()) {
        throw ConfigError("empty vertex list");
    }
    const size_t n = pts.front().size();
    for (const auto& p : pts) {
        if (p.size() != n) {
            throw ConfigError("vertices have mismatched dimensions");
        }
        for (double c : p) {
            if (!std::isfinite(c)) {
                throw ConfigError("non-finite coordinate");
            }
        }
    }
    return static_cast<int>(n);
}

} // namespace

namespace kernel {

double det(const double* a, int m) { return determinant(a, m); }

int orient_exact(std::span<const Coord> pts, int n) {
    std::vector<mpq_class> a(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            a[i * n + j] = mpq_class(pts[i + 1][j]) - mpq_class(pts[0][j]);
        }
    }
    return sign_of(determinant(a.data(), n));
}

int orient(std::span<const Coord> pts, int n) {
    double a[kMaxDim * kMaxDim] = {};
    if (n > kMaxDim) {
        return orient_exact(pts, n);
    }
    fill_orient_matrix(pts, n, a);
    const double d = determinant(a, n);
    if (std::fabs(d) > det_error_bound(a, n, 1)) {
        return sign_of(d);
    }
    return orient_exact(pts, n);
}

int in_sphere_exact(std::span<const Coord> simplex, Coord q, int n) {
    const int m = n + 1;
    std::vector<mpq_class> a(static_cast<size_t>(m) * m);
    for (int i = 0; i < m; ++i) {
        mpq_class lift = 0;
        for (int j = 0; j < n; ++j) {
            mpq_class b = mpq_class(simplex[i][j]) - mpq_class(q[j]);
            lift += b * b;
            a[i * m + j] = b;
        }
        a[i * m + n] = lift;
    }
    const int lifted = sign_of(determinant(a.data(), m));
    const int o = orient_exact(simplex, n);
    return lifted * o * ((n % 2 == 0) ? 1 : -1);
}

int in_sphere(std::span<const Coord> simplex, Coord q, int n) {
    if (n > kMaxDim) {
        return in_sphere_exact(simplex, q, n);
    }
    const int m = n + 1;
    double a[(kMaxDim + 1) * (kMaxDim + 1)] = {};
    fill_lifted_matrix(simplex, q, n, a);
    const double d = determinant(a, m);
    if (std::fabs(d) <= det_error_bound(a, m, n + 3)) {
        return in_sphere_exact(simplex, q, n);
    }
    const int o = orient(simplex, n);
    return sign_of(d) * o * ((n % 2 == 0) ? 1 : -1);
}

void barycentric_signs_exact(std::span<const Coord> verts, int n, int* signs) {
    const auto lambda = exact_lambda(verts, n);
    mpq_class first = 1;
    for (size_t i = 0; i < lambda.size(); ++i) {
        first -= lambda[i];
        signs[i + 1] = sign_of(lambda[i]);
    }
    signs[0] = sign_of(first);
}

int in_smallest_circumsphere_exact(std::span<const Coord> verts, Coord q, int n) {
    const auto lambda = exact_lambda(verts, n);
    const int k = static_cast<int>(lambda.size());
    // With w = z - x_0 and p = q - x_0: r^2 - |q - z|^2 = 2 p.w - |p|^2.
    mpq_class value = 0;
    for (int j = 0; j < n; ++j) {
        mpq_class w = 0;
        for (int i = 0; i < k; ++i) {
            w += lambda[i] * (mpq_class(verts[i + 1][j]) - mpq_class(verts[0][j]));
        }
        const mpq_class p = mpq_class(q[j]) - mpq_class(verts[0][j]);
        value += 2 * p * w - p * p;
    }
    return sign_of(value);
}

int in_smallest_circumsphere(std::span<const Coord> verts, const double* center, double r2,
                             Coord q, int n, const Tolerances& tol) {
    double d2 = 0.0;
    for (int j = 0; j < n; ++j) {
        const double d = q[j] - center[j];
        d2 += d * d;
    }
    const double diff = r2 - d2;
    const double band = tol.sphere_filter * std::max(r2, d2) + 1e-300;
    if (diff > band) {
        return 1;
    }
    if (diff < -band) {
        return -1;
    }
    return in_smallest_circumsphere_exact(verts, q, n);
}

double circumsphere(std::span<const Coord> verts, int n, double* center, double* bary, int* signs,
                    const Tolerances& tol) {
    const int k = static_cast<int>(verts.size()) - 1;
    if (k < 0 || k > n) {
        throw ConfigError("circumsphere needs between 1 and n+1 vertices");
    }
    if (k == 0) {
        std::copy_n(verts[0], n, center);
        bary[0] = 1.0;
        signs[0] = 1;
        return 0.0;
    }
    std::vector<double> e(static_cast<size_t>(k) * n);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < n; ++j) {
            e[i * n + j] = verts[i + 1][j] - verts[0][j];
        }
    }
    const int w = k + 1;
    std::vector<double> g(static_cast<size_t>(k) * w);
    double max_diag = 0.0;
    for (int i = 0; i < k; ++i) {
        for (int l = 0; l <= i; ++l) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) {
                s += e[i * n + j] * e[l * n + j];
            }
            g[i * w + l] = s;
            g[l * w + i] = s;
        }
        g[i * w + k] = 0.5 * g[i * w + i];
        max_diag = std::max(max_diag, g[i * w + i]);
    }
    if (!(max_diag > 0.0)) {
        throw DegenerateSimplex("coincident vertices");
    }
    double min_pivot = std::numeric_limits<double>::infinity();
    for (int col = 0; col < k; ++col) {
        int piv = col;
        for (int r = col + 1; r < k; ++r) {
            if (std::fabs(g[r * w + col]) > std::fabs(g[piv * w + col])) {
                piv = r;
            }
        }
        if (piv != col) {
            for (int c = 0; c < w; ++c) {
                std::swap(g[piv * w + c], g[col * w + c]);
            }
        }
        const double p = g[col * w + col];
        min_pivot = std::min(min_pivot, std::fabs(p));
        if (p == 0.0) {
            break;
        }
        for (int r = col + 1; r < k; ++r) {
            const double f = g[r * w + col] / p;
            for (int c = col; c < w; ++c) {
                g[r * w + c] -= f * g[col * w + c];
            }
        }
    }
    const double ratio = min_pivot / max_diag;
    const double rel_height = std::sqrt(ratio);
    if (!(rel_height >= tol.affine_rank)) {
        throw DegenerateSimplex("simplex is rank-deficient (relative height " +
                                std::to_string(rel_height) + ")");
    }
    double lambda[kMaxDim + 1] = {};
    std::vector<double> lambda_big;
    double* lam = lambda;
    if (k > kMaxDim) {
        lambda_big.resize(k);
        lam = lambda_big.data();
    }
    if (rel_height < tol.exact_solve_rank) {
        const auto exact = exact_lambda(verts, n);
        for (int i = 0; i < k; ++i) {
            lam[i] = exact[i].get_d();
        }
    } else {
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i * w + k];
            for (int c = i + 1; c < k; ++c) {
                s -= g[i * w + c] * lam[c];
            }
            lam[i] = s / g[i * w + i];
        }
    }
    double first = 1.0;
    for (int i = 0; i < k; ++i) {
        first -= lam[i];
        bary[i + 1] = lam[i];
    }
    bary[0] = first;
    double r2 = 0.0;
    for (int j = 0; j < n; ++j) {
        double off = 0.0;
        for (int i = 0; i < k; ++i) {
            off += lam[i] * e[i * n + j];
        }
        center[j] = verts[0][j] + off;
        r2 += off * off;
    }
    const double threshold = tol.sign_threshold / ratio;
    bool uncertain = false;
    for (int i = 0; i <= k; ++i) {
        signs[i] = sign_of(bary[i]);
        if (std::fabs(bary[i]) < threshold) {
            uncertain = true;
        }
    }
    if (uncertain) {
        barycentric_signs_exact(verts, n, signs);
    }
    return r2;
}

} // namespace kernel

Circumsphere smallest_circumsphere(std::span<const Point> vertices, const Tolerances& tol) {
    const int n = common_dimension(vertices);
    const int k = static_cast<int>(vertices.size()) - 1;
    if (k > n) {
        throw ConfigError("more than n+1 vertices");
    }
    const auto ptrs = pointers(vertices);
    Circumsphere out;
    out.center.resize(n);
    out.barycentric.resize(k + 1);
    out.signs.resize(k + 1);
    const double r2 =
        kernel::circumsphere(ptrs, n, out.center.data(), out.barycentric.data(), out.signs.data(), tol);
    out.radius = std::sqrt(r2);
    return out;
}

int visible_facet_count(const Circumsphere& sphere) {
    int count = 0;
    for (int s : sphere.signs) {
        if (s == 0) {
            throw AmbiguousSign("barycentric coordinate is exactly zero");
        }
        count += (s < 0);
    }
    return count;
}

double simplex_volume(std::span<const Point> vertices) {
    const int n = common_dimension(vertices);
    const int k = static_cast<int>(vertices.size()) - 1;
    if (k > n) {
        throw ConfigError("more than n+1 vertices");
    }
    if (k == 0) {
        return 1.0;
    }
    std::vector<double> e(static_cast<size_t>(k) * n);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < n; ++j) {
            e[i * n + j] = vertices[i + 1][j] - vertices[0][j];
        }
    }
    std::vector<double> g(static_cast<size_t>(k) * k);
    for (int i = 0; i < k; ++i) {
        for (int l = 0; l < k; ++l) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) {
                s += e[i * n + j] * e[l * n + j];
            }
            g[i * k + l] = s;
        }
    }
    // The Gram matrix is positive semidefinite, so elimination needs no pivoting.
    double d = 1.0;
    for (int col = 0; col < k; ++col) {
        const double p = g[col * k + col];
        if (!(p > 0.0)) {
            return 0.0;
        }
        d *= p;
        for (int r = col + 1; r < k; ++r) {
            const double f = g[r * k + col] / p;
            for (int c = col; c < k; ++c) {
                g[r * k + c] -= f * g[col * k + c];
            }
        }
    }
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) {
        fact *= i;
    }
    return std::sqrt(std::max(d, 0.0)) / fact;
}

SignedConeProfile signed_cone_sum(std::span<const Point> unit_points, std::span<const int> signature) {
    const int k = common_dimension(unit_points);
    if (static_cast<int>(unit_points.size()) != k + 1) {
        throw ConfigError("signed_cone_sum needs k+1 points in R^k");
    }
    if (signature.size() != unit_points.size()) {
        throw ConfigError("signature length must be k+1");
    }
    for (const auto& u : unit_points) {
        double norm2 = 0.0;
        for (double c : u) {
            norm2 += c * c;
        }
        if (std::fabs(std::sqrt(norm2) - 1.0) > 1e-9) {
            throw ConfigError("signed_cone_sum expects points on the unit sphere");
        }
    }
    SignedConeProfile out;
    out.signature.assign(signature.begin(), signature.end());
    out.cone_volumes.resize(k + 1);
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) {
        fact *= i;
    }
    std::vector<double> minor(static_cast<size_t>(k) * k);
    double total = 0.0;
    double scale = 0.0;
    for (int i = 0; i <= k; ++i) {
        int row = 0;
        for (int p = 0; p <= k; ++p) {
            if (p == i) {
                continue;
            }
            std::copy(unit_points[p].begin(), unit_points[p].end(), minor.begin() + row * k);
            ++row;
        }
        const double d = determinant(minor.data(), k);
        out.cone_volumes[i] = std::fabs(d) / fact;
        total += (i % 2 == 0) ? d : -d;
        scale += std::fabs(d);
    }
    if (!(std::fabs(total) > 1e-12 * scale)) {
        throw DegenerateSimplex("inscribed points do not span R^k");
    }
    for (int i = 0; i <= k; ++i) {
        if (signature[i] != 1 && signature[i] != -1) {
            throw ConfigError("signature entries must be +1 or -1");
        }
        out.signed_sum += signature[i] * out.cone_volumes[i];
        out.minus_count += (signature[i] < 0);
    }
    return out;
}

int in_sphere(std::span<const Point> simplex, const Point& query) {
    const int n = common_dimension(simplex);
    if (static_cast<int>(simplex.size()) != n + 1 || query.size() != static_cast<size_t>(n)) {
        throw ConfigError("in_sphere needs n+1 simplex vertices and a query in R^n");
    }
    const auto ptrs = pointers(simplex);
    if (kernel::orient(ptrs, n) == 0) {
        throw DegenerateSimplex("in_sphere on a flat simplex");
    }
    return kernel::in_sphere(ptrs, query.data(), n);
}

int orientation(std::span<const Point> simplex) {
    const int n = common_dimension(simplex);
    if (static_cast<int>(simplex.size()) != n + 1) {
        throw ConfigError("orientation needs n+1 points in R^n");
    }
    return kernel::orient(pointers(simplex), n);
}

} // namespace pdm
