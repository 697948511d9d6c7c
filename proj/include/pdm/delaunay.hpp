#pragma once

#include "pdm/geom.hpp"
#include "pdm/sampling.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pdm {

enum class Topology { euclidean, torus };

const char* to_string(Topology t);
Topology topology_from_string(const std::string& s);

/// Delaunay simplicial complex with its full face lattice.
///
/// Vertices are nodes. In euclidean mode a node id is the point id. In torus
/// mode a node is a point id together with a translation offset in
/// {-1,0,1}^n, encoded as point_id * 3^n + code(offset). Every simplex is
/// stored once per translation class, normalized so that its vertex with the
/// smallest point id carries offset 0; tuples are sorted node ids, and each
/// dimension lists its simplices in lexicographic order.
class Mosaic {
public:
    Mosaic() = default;

    /// Builds the face lattice from top-dimensional tuples. Tuples are
    /// normalized first; duplicates are merged.
    static Mosaic from_top_simplices(int dim, Topology topology, const PointCloud& cloud,
                                     const std::vector<std::array<int, kMaxDim + 1>>& tops);

    int dim() const { return dim_; }
    Topology topology() const { return topology_; }
    bool is_torus() const { return topology_ == Topology::torus; }

    std::size_t count(int j) const { return simplices_[j].size() / (j + 1); }
    std::span<const int> simplex(int j, std::size_t index) const {
        return {simplices_[j].data() + index * (j + 1), static_cast<std::size_t>(j + 1)};
    }
    /// Indices of the (j+1)-dimensional cofaces of simplex (j, index).
    std::span<const int> cofaces(int j, std::size_t index) const;
    /// Index of a normalized tuple in dimension tuple.size()-1, or -1.
    long find(std::span<const int> tuple) const;
    /// Normalizes an arbitrary vertex tuple of this mosaic.
    std::vector<int> normalize(std::span<const int> nodes) const;
    /// Normalizes in place; returns the tuple length.
    void normalize_inplace(int* nodes, int size) const;

    int node_point(int node) const { return is_torus() ? node / images_ : node; }
    void node_offset(int node, int* offset) const;
    void node_coords(int node, double* out) const;
    int node_of(int point, const int* offset) const;
    int center_code() const { return (images_ - 1) / 2; }

    std::size_t point_count() const { return points_.size() / (dim_ == 0 ? 1 : dim_); }
    const std::vector<double>& point_coords() const { return points_; }
    const Region& region() const { return region_; }
    /// Euclidean mode: true for points on the convex hull of the cloud.
    bool hull_point(int point) const { return !hull_.empty() && hull_[point] != 0; }

    long euler_characteristic() const;

private:
    int dim_ = 0;
    Topology topology_ = Topology::euclidean;
    int images_ = 1;
    Region region_;
    std::vector<double> points_;
    std::array<std::vector<int>, kMaxDim + 1> simplices_;
    std::array<std::vector<int>, kMaxDim> coface_start_;
    std::array<std::vector<int>, kMaxDim> coface_items_;
    std::vector<unsigned char> hull_;
};

struct TriangulateOptions {
    Topology topology = Topology::euclidean;
    /// Seed of the random insertion order.
    std::uint64_t seed = 0x5eed;
    /// Initial torus padding, in units of the mean interpoint distance.
    double margin_factor = 0.0;
};

/// Delaunay mosaic of a cloud in R^n (n = 2, 3, 4) or on the flat torus
/// given by a periodic box region.
Mosaic triangulate(const PointCloud& cloud, const TriangulateOptions& options = {});
Mosaic triangulate(const PointCloud& cloud, Topology topology);

struct DelaunayReport {
    bool ok = true;
    std::size_t top_simplices = 0;
    std::size_t checked_points = 0;
    std::vector<std::string> failures;
};

/// Checks empty open circumballs (exact in_sphere against all points, or
/// their periodic images), closure of the face lattice, nonzero volumes and
/// the two-coface property of ridges in torus mode.
DelaunayReport verify_delaunay(const Mosaic& mosaic, const PointCloud& cloud);

/// Per-dimension simplex lists in lexicographic order.
std::vector<std::vector<std::vector<int>>> enumerate_faces(const Mosaic& mosaic);

void write_mosaic_json(std::ostream& os, const Mosaic& mosaic);

} // namespace pdm
