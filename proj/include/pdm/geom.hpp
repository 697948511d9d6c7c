#pragma once

#include <array>
#include <span>
#include <vector>

namespace pdm {

/// Largest ambient dimension handled by the mosaic code paths.
inline constexpr int kMaxDim = 4;

using Point = std::vector<double>;

/// Numeric thresholds of the geometry layer. The underlying model works with
/// exact reals, so every value here is an implementation choice.
struct Tolerances {
    /// A simplex is rejected as degenerate when its smallest relative height
    /// (square root of the smallest Gram pivot over the largest diagonal
    /// entry) falls below this value.
    double affine_rank = 1e-9;
    /// Below this relative height the circumcenter is solved in exact
    /// rational arithmetic instead of floating point.
    double exact_solve_rank = 1e-4;
    /// A barycentric coordinate whose magnitude is below
    /// sign_threshold * condition estimate gets its sign recomputed exactly.
    double sign_threshold = 1e-10;
    /// Relative band around the sphere in which float membership tests are
    /// not trusted and the exact predicate decides.
    double sphere_filter = 1e-6;
};

struct Circumsphere {
    Point center;
    double radius = 0.0;
    /// Barycentric coordinates of the center with respect to the vertices.
    std::vector<double> barycentric;
    /// Certified sign of every barycentric coordinate: -1, +1, or 0 when the
    /// coordinate is exactly zero.
    std::vector<int> signs;
};

struct SignedConeProfile {
    std::vector<double> cone_volumes;
    std::vector<int> signature;
    double signed_sum = 0.0;
    int minus_count = 0;
};

/// Sphere through k+1 affinely independent points of R^n with its center in
/// their affine hull. Throws DegenerateSimplex for rank-deficient input.
Circumsphere smallest_circumsphere(std::span<const Point> vertices, const Tolerances& tol = {});

/// Number of facets visible from the center (strictly negative barycentric
/// coordinates). Throws AmbiguousSign when a coordinate is exactly zero.
int visible_facet_count(const Circumsphere& sphere);

/// k-dimensional volume of the simplex spanned by k+1 points; 0 when degenerate.
double simplex_volume(std::span<const Point> vertices);

/// Cone volumes v_i (vertex i replaced by the origin) of a simplex inscribed
/// in S^{k-1} and the signed sum of the v_i under the given signature.
SignedConeProfile signed_cone_sum(std::span<const Point> unit_points,
                                  std::span<const int> signature);

/// +1 if query lies strictly inside the circumsphere of the n+1 simplex
/// vertices, -1 strictly outside, 0 on the sphere. The sign is exact.
int in_sphere(std::span<const Point> simplex, const Point& query);

/// Exact sign of det[x_1 - x_0, ..., x_n - x_0] for n+1 points in R^n.
int orientation(std::span<const Point> simplex);

/// Pointer-based kernels used by the hot loops of triangulation,
/// decomposition and sampling. Coordinates are read as n consecutive doubles.
namespace kernel {

using Coord = const double*;

int orient(std::span<const Coord> pts, int n);
int in_sphere(std::span<const Coord> simplex, Coord query, int n);

/// Exact orient/in_sphere, bypassing the floating-point filter.
int orient_exact(std::span<const Coord> pts, int n);
int in_sphere_exact(std::span<const Coord> simplex, Coord query, int n);

/// Floating-point smallest circumsphere of k+1 points in R^n with exact
/// sign certification. center must hold n doubles, bary and signs k+1.
/// Returns the squared radius.
double circumsphere(std::span<const Coord> verts, int n, double* center, double* bary, int* signs,
                    const Tolerances& tol);

/// Exact sign of r^2 - |q - z|^2 for the smallest circumsphere (z, r) of verts.
int in_smallest_circumsphere_exact(std::span<const Coord> verts, Coord query, int n);

/// Filtered version of the above, using a precomputed float sphere.
int in_smallest_circumsphere(std::span<const Coord> verts, const double* center, double r2,
                             Coord query, int n, const Tolerances& tol);

/// Exact signs of the barycentric coordinates of the smallest circumcenter.
void barycentric_signs_exact(std::span<const Coord> verts, int n, int* signs);

/// Determinant of an m x m row-major matrix (m <= 5) by cofactor expansion.
double det(const double* a, int m);

} // namespace kernel
} // namespace pdm
