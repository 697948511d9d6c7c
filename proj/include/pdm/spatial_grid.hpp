#pragma once

#include "pdm/geom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <type_traits>
#include <vector>

namespace pdm {

/// Uniform bucket grid over a box, optionally periodic. Ball queries report
/// every point (or periodic image) in the cells overlapping the query box.
class SpatialGrid {
public:
    SpatialGrid() = default;

    /// coords: count points of dimension dim, row-major. In periodic mode all
    /// points must lie in [lower, lower + sides).
    SpatialGrid(const double* coords, std::size_t count, int dim, const double* lower,
                const double* sides, bool periodic, double cell_side)
        : coords_(coords), dim_(dim), periodic_(periodic) {
        long total = 1;
        for (int j = 0; j < dim; ++j) {
            lower_[j] = lower[j];
            sides_[j] = sides[j];
            const double want = std::max(cell_side, sides[j] * 1e-6);
            cells_[j] = static_cast<int>(std::clamp(std::floor(sides[j] / want), 1.0, 1024.0));
            width_[j] = sides[j] / cells_[j];
            total *= cells_[j];
        }
        while (total > static_cast<long>(4 * count + 64)) {
            total = 1;
            for (int j = 0; j < dim; ++j) {
                cells_[j] = std::max(1, cells_[j] / 2);
                width_[j] = sides[j] / cells_[j];
                total *= cells_[j];
            }
        }
        start_.assign(static_cast<std::size_t>(total) + 1, 0);
        std::vector<int> cell_of(count);
        for (std::size_t i = 0; i < count; ++i) {
            cell_of[i] = cell_index(coords + i * dim);
            ++start_[cell_of[i] + 1];
        }
        for (std::size_t c = 0; c + 1 < start_.size(); ++c) {
            start_[c + 1] += start_[c];
        }
        items_.resize(count);
        std::vector<int> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < count; ++i) {
            items_[fill[cell_of[i]]++] = static_cast<int>(i);
        }
    }

    int dim() const { return dim_; }
    bool periodic() const { return periodic_; }

    /// Calls f(point_id, image_coords, shift) for every point whose cell meets
    /// the cube of half-width r around c. shift[j] is the number of periods
    /// added in coordinate j (always 0 in non-periodic mode). A callback
    /// returning bool stops the scan by returning false.
    template <class F>
    void visit_ball(const double* c, double r, F&& f) const {
        std::array<long, kMaxDim> lo{}, hi{}, cur{};
        for (int j = 0; j < dim_; ++j) {
            lo[j] = static_cast<long>(std::floor((c[j] - r - lower_[j]) / width_[j]));
            hi[j] = static_cast<long>(std::floor((c[j] + r - lower_[j]) / width_[j]));
            if (!periodic_) {
                lo[j] = std::clamp<long>(lo[j], 0, cells_[j] - 1);
                hi[j] = std::clamp<long>(hi[j], 0, cells_[j] - 1);
            }
            cur[j] = lo[j];
        }
        std::array<double, kMaxDim> image{};
        std::array<int, kMaxDim> shift{};
        for (;;) {
            long cell = 0;
            for (int j = dim_ - 1; j >= 0; --j) {
                long w = cur[j];
                shift[j] = 0;
                if (periodic_) {
                    const long q = floor_div(w, cells_[j]);
                    w -= q * cells_[j];
                    shift[j] = static_cast<int>(q);
                }
                cell = cell * cells_[j] + w;
            }
            for (int t = start_[cell]; t < start_[cell + 1]; ++t) {
                const int id = items_[t];
                const double* x = coords_ + static_cast<std::size_t>(id) * dim_;
                for (int j = 0; j < dim_; ++j) {
                    image[j] = shift[j] == 0 ? x[j] : x[j] + shift[j] * sides_[j];
                }
                if constexpr (std::is_same_v<decltype(f(id, image.data(), shift.data())), bool>) {
                    if (!f(id, image.data(), shift.data())) {
                        return;
                    }
                } else {
                    f(id, image.data(), shift.data());
                }
            }
            int j = 0;
            while (j < dim_ && cur[j] == hi[j]) {
                cur[j] = lo[j];
                ++j;
            }
            if (j == dim_) {
                break;
            }
            ++cur[j];
        }
    }

private:
    static long floor_div(long a, long b) {
        long q = a / b;
        if ((a % b != 0) && ((a < 0) != (b < 0))) {
            --q;
        }
        return q;
    }

    int cell_index(const double* x) const {
        long cell = 0;
        for (int j = dim_ - 1; j >= 0; --j) {
            long w = static_cast<long>(std::floor((x[j] - lower_[j]) / width_[j]));
            w = std::clamp<long>(w, 0, cells_[j] - 1);
            cell = cell * cells_[j] + w;
        }
        return static_cast<int>(cell);
    }

    const double* coords_ = nullptr;
    int dim_ = 0;
    bool periodic_ = false;
    std::array<double, kMaxDim> lower_{}, sides_{}, width_{};
    std::array<int, kMaxDim> cells_{};
    std::vector<int> start_;
    std::vector<int> items_;
};

} // namespace pdm
