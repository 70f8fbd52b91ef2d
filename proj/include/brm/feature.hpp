#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <vector>

#include "brm/bitgrid.hpp"

namespace brm {

/// Square binary downward frame, true = building.
struct FrameMask {
    int index = 0;
    double t = 0;
    BitGrid bits;

    int side() const { return bits.width(); }
};

using FeatureVector = std::vector<double>;

/// Centered h x h crop of a w x h mask (w >= h). For odd w-h the extra
/// column is dropped on the right.
FrameMask square_crop(const BitGrid& mask, int index = 0, double t = 0);

/// Pixel radius of layer k of n for an h-pixel frame: (h/2)*(n+1-k)/n.
double pixel_radius(int k, int n, int h);

/// n concentric building ratios f_k = B_k / S_k with radii from
/// pixel_radius(). Disks are centered at pixel (h/2, h/2); S_k counts the
/// disk pixels that lie inside the frame (for even h the two farthest
/// axis pixels of the outermost disk fall outside and are excluded).
FeatureVector extract(const FrameMask& frame, int n);

/// Same ratios for explicit pixel radii (strictly decreasing).
FeatureVector extract_with_radii(const FrameMask& frame, std::span<const double> radii_px);

/// CSV row: frame_index, f_1..f_n.
void append_feature_csv(std::ostream& out, int frame_index, const FeatureVector& f);

}  // namespace brm
