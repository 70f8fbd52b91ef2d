#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace brm {

/// Disk membership over integer cell offsets: dx^2 + dy^2 <= r^2.
/// One predicate shared by map generation, the brute-force oracle and
/// frame feature extraction so ratios stay directly comparable.
inline bool in_disk(std::int64_t dx, std::int64_t dy, double radius_sq) {
    return static_cast<double>(dx * dx + dy * dy) <= radius_sq;
}

/// Half chord widths of the disk of radius r: for dy in [-R, R] (R =
/// floor(r)), chord dx spans [-w[dy+R], w[dy+R]]. Derived from in_disk so
/// the decomposition matches the predicate exactly.
inline std::vector<int> disk_half_chords(double radius) {
    const double r2 = radius * radius;
    const int full = static_cast<int>(std::floor(radius));
    std::vector<int> half(2 * full + 1, 0);
    for (int dy = -full; dy <= full; ++dy) {
        int w = static_cast<int>(std::floor(std::sqrt(std::max(0.0, r2 - static_cast<double>(dy) * dy))));
        while (in_disk(w + 1, dy, r2)) ++w;
        while (w > 0 && !in_disk(w, dy, r2)) --w;
        half[dy + full] = w;
    }
    return half;
}

/// Number of integer offsets inside the disk of radius r.
inline std::int64_t disk_cell_count(double radius) {
    std::int64_t n = 0;
    for (int w : disk_half_chords(radius)) n += 2 * w + 1;
    return n;
}

}  // namespace brm
