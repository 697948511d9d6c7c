#pragma once

#include "pdm/delaunay.hpp"
#include "pdm/geom.hpp"
#include "pdm/sampling.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace pdm {

/// An interval [L, U] of the radius function. Vertex tuples are node ids of
/// the mosaic, sorted.
struct Interval {
    std::vector<int> lower;
    std::vector<int> upper;
    int ell = 0;
    int k = 0;
    double radius = 0.0;
    Point center;

    bool singular() const { return ell == k; }
};

/// Per-simplex data of the radius function, indexed like the mosaic.
struct RadiusFunction {
    int dim = 0;
    /// Rad(Q): the smallest empty circumsphere radius.
    std::array<std::vector<double>, kMaxDim + 1> value;
    /// Radius of the smallest circumsphere of Q itself.
    std::array<std::vector<double>, kMaxDim + 1> sphere_radius;
    /// Center of the smallest circumsphere of Q, dim doubles per simplex.
    std::array<std::vector<double>, kMaxDim + 1> sphere_center;
    /// 1 when the smallest circumsphere of Q is empty.
    std::array<std::vector<std::uint8_t>, kMaxDim + 1> empty;
    /// Index of the interval containing Q.
    std::array<std::vector<int>, kMaxDim + 1> interval;
};

/// Intervals sorted by (k, ell, upper tuple) together with the radius
/// function they induce.
struct Decomposition {
    std::vector<Interval> intervals;
    RadiusFunction rad;
};

struct DecomposeOptions {
    Tolerances tol;
    /// When set, top simplices are tested for emptiness like every other
    /// simplex instead of being taken as Delaunay.
    bool check_top_simplices = false;
};

/// Computes the radius function and its interval decomposition. Raises
/// PartitionViolation if the intervals do not cover each simplex once.
Decomposition decompose(const Mosaic& mosaic, const PointCloud& cloud, const DecomposeOptions& options = {});

RadiusFunction radius_function(const Mosaic& mosaic, const PointCloud& cloud);
std::vector<Interval> interval_decomposition(const Mosaic& mosaic, const PointCloud& cloud);

/// Number of pairs P ⊂ Q (codimension one) with Rad(P) > Rad(Q) beyond a
/// relative tolerance.
std::size_t monotonicity_violations(const Mosaic& mosaic, const RadiusFunction& rad, double rel_tol = 1e-9);

struct IntervalCensus {
    int dim = 0;
    /// counts[ell][k] = c_{ell,k}.
    std::array<std::array<long, kMaxDim + 1>, kMaxDim + 1> counts{};
    /// d_j from the interval counts.
    std::array<long, kMaxDim + 1> simplex_counts{};
    double region_volume = 0.0;
    double density = 1.0;
    /// Radius of every counted interval, grouped by type.
    std::array<std::array<std::vector<double>, kMaxDim + 1>, kMaxDim + 1> radii;

    long critical_alternating_sum() const;
    long euler_characteristic() const;
    /// Rad values of the counted j-simplices, each interval contributing
    /// binom(k - ell, k - j) copies of its radius.
    std::vector<double> simplex_radii(int j) const;
};

/// Counts intervals with center in the region. For a periodic box every
/// interval counts once (one per translation class).
IntervalCensus census(const std::vector<Interval>& intervals, const Region& region, double density);

enum class Membership : std::uint8_t { outside = 0, k0_only = 1, k1 = 2 };

enum class K0Rule {
    /// Q is in K0 iff its Voronoi face meets the ball.
    voronoi,
    /// Q is in K0 iff some n-simplex sharing Q has a circumball meeting the ball.
    witness
};

struct Restriction {
    std::array<std::vector<Membership>, kMaxDim + 1> membership;
    std::array<long, kMaxDim + 1> k0_counts{};
    std::array<long, kMaxDim + 1> k1_counts{};
    long k1_total = 0;
    long k0_minus_k1 = 0;

    long euler_k0() const;
};

/// K0 and K1 for a ball in a euclidean mosaic. Raises MarginTooSmall unless
/// the window contains the ball grown by twice the largest circumradius of
/// the top simplices whose circumball meets it, with no hull point inside.
Restriction restrict_K0_K1(const Mosaic& mosaic, const PointCloud& cloud, const Region& ball,
                           const Decomposition& decomposition, K0Rule rule = K0Rule::voronoi);
Restriction restrict_K0_K1(const Mosaic& mosaic, const PointCloud& cloud, const Region& ball,
                           K0Rule rule = K0Rule::voronoi);

/// Euclidean distance from the origin to the convex hull of points (dim
/// doubles each), by Wolfe's minimum-norm-point algorithm.
double distance_to_hull(const std::vector<double>& points, int dim);

/// CSV rows `ell,k,radius,c_1..c_n,lower,upper` with vertex lists joined by
/// spaces. Torus centers are wrapped into the fundamental domain.
void write_intervals_csv(std::ostream& os, const Mosaic& mosaic, const std::vector<Interval>& intervals);

} // namespace pdm
