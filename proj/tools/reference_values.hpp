#pragma once

#include <numbers>

namespace pdm::reference {

/// A printed two-decimal table entry: C_{ell,k}^n, or D_j^n when ell < 0.
struct PrintedEntry {
    int n;
    int ell;
    int k;
    double printed;
};

/// Intensities of interval types, n = 2, 3, 4.
inline constexpr PrintedEntry kIntervalTable[] = {
    {2, 0, 0, 1.00},  {2, 0, 1, 0.00},  {2, 0, 2, 0.00},  {2, 1, 1, 2.00},  {2, 1, 2, 1.00},  {2, 2, 2, 1.00},
    {3, 0, 0, 1.00},  {3, 0, 1, 0.00},  {3, 0, 2, 0.00},  {3, 0, 3, 0.00},  {3, 1, 1, 4.00},  {3, 1, 2, 2.55},
    {3, 1, 3, 1.21},  {3, 2, 2, 4.85},  {3, 2, 3, 3.70},  {3, 3, 3, 1.85},  {4, 0, 0, 1.00},  {4, 0, 1, 0.00},
    {4, 0, 2, 0.00},  {4, 0, 3, 0.00},  {4, 0, 4, 0.00},  {4, 1, 1, 8.00},  {4, 1, 2, 5.66},  {4, 1, 3, 3.55},
    {4, 1, 4, 1.66},  {4, 2, 2, 17.66}, {4, 2, 3, 18.96}, {4, 2, 4, 11.14}, {4, 3, 3, 15.40}, {4, 3, 4, 14.22},
    {4, 4, 4, 4.74},
};

/// Intensities of simplices; `k` holds j.
inline constexpr PrintedEntry kSimplexTable[] = {
    {2, -1, 0, 1.00}, {2, -1, 1, 3.00},  {2, -1, 2, 2.00},  {3, -1, 0, 1.00},  {3, -1, 1, 7.76},  {3, -1, 2, 13.53},
    {3, -1, 3, 6.76}, {4, -1, 0, 1.00},  {4, -1, 1, 18.88}, {4, -1, 2, 65.55}, {4, -1, 3, 79.44}, {4, -1, 4, 31.77},
};

/// Exact values with their textual forms; ell < 0 marks D_k^n.
struct ExactEntry {
    int n;
    int ell;
    int k;
    double value;
    const char* text;
};

inline constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

inline constexpr ExactEntry kExactTable[] = {
    {2, 1, 1, 2.0, "2"},
    {2, 1, 2, 1.0, "1"},
    {2, 2, 2, 1.0, "1"},
    {3, 1, 1, 4.0, "4"},
    {3, 1, 2, 9 * kPi2 / 16 - 3, "9*pi^2/16 - 3"},
    {3, 2, 2, 3 * kPi2 / 16 + 3, "3*pi^2/16 + 3"},
    {3, 1, 3, 69 * kPi2 / 560, "69*pi^2/560"},
    {3, 2, 3, 3 * kPi2 / 8, "3*pi^2/8"},
    {3, 3, 3, 3 * kPi2 / 16, "3*pi^2/16"},
    {4, 1, 1, 8.0, "8"},
    {4, 1, 2, 17.0 / 3, "17/3"},
    {4, 2, 2, 53.0 / 3, "53/3"},
    {4, 1, 3, 32.0 / 9, "32/9"},
    {4, 2, 3, 512.0 / 27, "512/27"},
    {4, 3, 3, 416.0 / 27, "416/27"},
    {4, 1, 4, 5.0 / 3, "5/3"},
    {4, 2, 4, 301.0 / 27, "301/27"},
    {4, 3, 4, 128.0 / 9, "128/9"},
    {4, 4, 4, 128.0 / 27, "128/27"},
    {2, -1, 1, 3.0, "3"},
    {2, -1, 2, 2.0, "2"},
    {3, -1, 1, 24 * kPi2 / 35 + 1, "24*pi^2/35 + 1"},
    {3, -1, 2, 48 * kPi2 / 35, "48*pi^2/35"},
    {3, -1, 3, 24 * kPi2 / 35, "24*pi^2/35"},
    {4, -1, 1, 170.0 / 9, "170/9"},
    {4, -1, 2, 590.0 / 9, "590/9"},
    {4, -1, 3, 715.0 / 9, "715/9"},
    {4, -1, 4, 286.0 / 9, "286/9"},
};

/// Two-decimal truncation, the convention of the printed tables.
inline double truncate2(double x) {
    return static_cast<double>(static_cast<long long>(x * 100.0 + 1e-9)) / 100.0;
}

} // namespace pdm::reference
