#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "brm/error.hpp"

namespace brm {

/// Packed row-major bit grid. Bits outside [0,w) in the last word of a
/// row are kept zero so whole-word comparisons and popcounts are valid.
class BitGrid {
public:
    BitGrid() = default;

    BitGrid(int width, int height) : w_(width), h_(height) {
        if (width <= 0 || height <= 0)
            throw Error("bad_dims", "BitGrid dimensions must be positive");
        row_words_ = (width + 63) / 64;
        words_.assign(static_cast<std::size_t>(row_words_) * height, 0);
    }

    int width() const { return w_; }
    int height() const { return h_; }
    bool empty() const { return words_.empty(); }

    bool get(int x, int y) const {
        const auto& w = words_[word_index(x, y)];
        return (w >> (x & 63)) & 1u;
    }

    void set(int x, int y, bool v) {
        auto& w = words_[word_index(x, y)];
        const std::uint64_t m = std::uint64_t{1} << (x & 63);
        if (v)
            w |= m;
        else
            w &= ~m;
    }

    /// Sets cells x0..x1 inclusive in row y.
    void set_row_range(int y, int x0, int x1) {
        if (x0 > x1) return;
        const std::size_t base = static_cast<std::size_t>(y) * row_words_;
        int w0 = x0 >> 6, w1 = x1 >> 6;
        const std::uint64_t lo = ~std::uint64_t{0} << (x0 & 63);
        const std::uint64_t hi = ~std::uint64_t{0} >> (63 - (x1 & 63));
        if (w0 == w1) {
            words_[base + w0] |= lo & hi;
            return;
        }
        words_[base + w0] |= lo;
        for (int w = w0 + 1; w < w1; ++w) words_[base + w] = ~std::uint64_t{0};
        words_[base + w1] |= hi;
    }

    /// Popcount of cells x0..x1 inclusive in row y. Caller clamps to [0,w).
    std::int64_t count_row_range(int y, int x0, int x1) const {
        if (x0 > x1) return 0;
        const std::size_t base = static_cast<std::size_t>(y) * row_words_;
        int w0 = x0 >> 6, w1 = x1 >> 6;
        const std::uint64_t lo = ~std::uint64_t{0} << (x0 & 63);
        const std::uint64_t hi = ~std::uint64_t{0} >> (63 - (x1 & 63));
        if (w0 == w1) return std::popcount(words_[base + w0] & lo & hi);
        std::int64_t c = std::popcount(words_[base + w0] & lo);
        for (int w = w0 + 1; w < w1; ++w) c += std::popcount(words_[base + w]);
        c += std::popcount(words_[base + w1] & hi);
        return c;
    }

    std::int64_t count_all() const {
        std::int64_t c = 0;
        for (auto w : words_) c += std::popcount(w);
        return c;
    }

    bool operator==(const BitGrid&) const = default;

private:
    std::size_t word_index(int x, int y) const {
        return static_cast<std::size_t>(y) * row_words_ + (x >> 6);
    }

    int w_ = 0, h_ = 0;
    int row_words_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace brm
