#include "brm/feature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "brm/disk.hpp"
#include "brm/error.hpp"

namespace brm {

FrameMask square_crop(const BitGrid& mask, int index, double t) {
    const int w = mask.width(), h = mask.height();
    if (w < h) throw Error("bad_frame", "frame is taller than wide; cannot square-crop");
    if (w == h) return {index, t, mask};
    const int left = (w - h) / 2;  // odd surplus drops the right column
    BitGrid out(h, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < h; ++x)
            if (mask.get(left + x, y)) out.set(x, y, true);
    return {index, t, std::move(out)};
}

double pixel_radius(int k, int n, int h) {
    if (n < 1 || k < 1 || k > n) throw Error("bad_layer", "layer index must satisfy 1 <= k <= n");
    if (h < 1) throw Error("bad_frame", "frame side must be positive");
    return (h / 2.0) * (n + 1 - k) / n;
}

FeatureVector extract_with_radii(const FrameMask& frame, std::span<const double> radii_px) {
    if (frame.bits.width() != frame.bits.height())
        throw Error("bad_frame", "frame must be square; crop first");
    const int h = frame.side();
    const int c = h / 2;
    FeatureVector f;
    f.reserve(radii_px.size());
    double prev = std::numeric_limits<double>::infinity();
    for (double r : radii_px) {
        if (!(r >= 1.0)) throw Error("bad_layer", "disk radius below one pixel");
        if (!(r < prev)) throw Error("bad_layer", "disk radii must strictly decrease");
        prev = r;
        const auto chords = disk_half_chords(r);
        const int full = static_cast<int>(chords.size()) / 2;
        std::int64_t building = 0, total = 0;
        for (int dy = -full; dy <= full; ++dy) {
            const int y = c + dy;
            if (y < 0 || y >= h) continue;
            const int w = chords[dy + full];
            const int x0 = std::max(c - w, 0);
            const int x1 = std::min(c + w, h - 1);
            if (x0 > x1) continue;
            total += x1 - x0 + 1;
            building += frame.bits.count_row_range(y, x0, x1);
        }
        f.push_back(static_cast<double>(building) / total);
    }
    return f;
}

FeatureVector extract(const FrameMask& frame, int n) {
    if (n < 1) throw Error("bad_layer", "feature count must be at least 1");
    const int h = frame.side();
    if (pixel_radius(n, n, h) < 1.0)
        throw Error("bad_frame", "innermost disk radius below one pixel; frame too small for n");
    std::vector<double> radii(n);
    for (int k = 1; k <= n; ++k) radii[k - 1] = pixel_radius(k, n, h);
    return extract_with_radii(frame, radii);
}

void append_feature_csv(std::ostream& out, int frame_index, const FeatureVector& f) {
    out << frame_index;
    char buf[32];
    for (double v : f) {
        std::snprintf(buf, sizeof(buf), ",%.9f", v);
        out << buf;
    }
    out << "\n";
}

}  // namespace brm
