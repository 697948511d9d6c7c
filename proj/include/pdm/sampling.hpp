#pragma once

#include "pdm/geom.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pdm {

/// PCG-XSL-RR 128/64 generator. Satisfies UniformRandomBitGenerator.
class Pcg64 {
public:
    using result_type = std::uint64_t;

    explicit Pcg64(std::uint64_t seed, std::uint64_t stream = 0);

    /// Independent generator for trial `index` of a run seeded with `seed`.
    static Pcg64 substream(std::uint64_t seed, std::uint64_t index);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal variate.
    double normal();

private:
    void step();
    unsigned __int128 state_ = 0;
    unsigned __int128 inc_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Final mixer of splitmix64; used to derive substream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Poisson variate: inversion for mean < 30, transformed rejection above.
std::uint64_t poisson_variate(double mean, Pcg64& rng);

/// Sampling window: an axis-parallel box (optionally periodic) or a ball.
struct Region {
    enum class Kind { box, ball };

    Kind kind = Kind::box;
    int dim = 0;
    /// Box: side lengths and lower corner.
    std::vector<double> sides;
    Point lower;
    bool periodic = false;
    /// Ball: radius and center.
    double radius = 0.0;
    Point center;

    static Region box(std::vector<double> sides, bool periodic = false, Point lower = {});
    static Region cube(int n, double side, bool periodic = false);
    static Region ball(int n, double radius, Point center = {});

    double volume() const;
    bool contains(std::span<const double> x) const;
    double shortest_side() const;
    void validate() const;
};

struct ProcessConfig {
    double density = 1.0;
    std::uint64_t seed = 0;
    Region region;
    /// OverflowRisk is raised when density * volume exceeds this cap.
    double max_expected_points = 1e8;
};

/// One realization of a Poisson process: dimension, window, and points
/// stored row-major in `coords`.
struct PointCloud {
    int dim = 0;
    Region region;
    std::uint64_t seed = 0;
    std::vector<double> coords;

    std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
    std::span<const double> point(std::size_t i) const {
        return {coords.data() + i * dim, static_cast<std::size_t>(dim)};
    }
    const double* data(std::size_t i) const { return coords.data() + i * dim; }
    std::vector<Point> points() const;

    static PointCloud from_points(const std::vector<Point>& pts, Region region, std::uint64_t seed = 0);
};

/// Homogeneous Poisson sample in the configured region, reproducible from
/// the seed. Coordinates in periodic boxes are snapped to a dyadic grid so
/// that translating by a side length is exact in floating point.
PointCloud sample_poisson(const ProcessConfig& config);

/// `count` uniform points on the unit sphere S^{k-1} in R^k.
std::vector<Point> sample_unit_sphere(int k, int count, std::uint64_t seed);

/// Writes one uniform point of S^{k-1} into out[0..k).
void sample_unit_sphere_into(Pcg64& rng, int k, double* out);

// PointCloud serialization.
void write_cloud_csv(std::ostream& os, const PointCloud& cloud);
/// Reads the CSV form. The region is not part of the format and must be
/// supplied; an empty region is replaced by the bounding box of the points.
PointCloud read_cloud_csv(std::istream& is, Region region = {});
void write_cloud_binary(std::ostream& os, const PointCloud& cloud);
PointCloud read_cloud_binary(std::istream& is, Region region = {});

} // namespace pdm
