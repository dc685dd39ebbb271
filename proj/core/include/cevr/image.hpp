#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cevr {

// Planar (channel-major) image of doubles. Pixel (c, y, x) lives at
// c*H*W + y*W + x, the same layout nn::Tensor uses, so images cross into
// the network without reshuffling.
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels = 3, double fill = 0.0);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return channels_; }
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
    double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

    std::span<double> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
    std::span<const double> plane(int c) const {
        return {data_.data() + c * plane_size(), plane_size()};
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool same_shape(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int c, int y, int x) const noexcept {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

// Display-referred RGB image with every value finite and inside [0, 1].
class LdrImage {
public:
    LdrImage() = default;
    // Validates the invariants; throws cevr::Error on violation.
    explicit LdrImage(Image pixels);

    // Clamps into [0, 1] instead of rejecting out-of-range values.
    static LdrImage clamped(Image pixels);

    const Image& pixels() const noexcept { return pixels_; }
    int height() const noexcept { return pixels_.height(); }
    int width() const noexcept { return pixels_.width(); }
    double at(int c, int y, int x) const { return pixels_.at(c, y, x); }

    friend bool operator==(const LdrImage&, const LdrImage&) = default;

private:
    Image pixels_;
};

// Linear relative radiance, strictly positive and finite, three channels.
class RadianceMap {
public:
    RadianceMap() = default;
    explicit RadianceMap(Image pixels);

    const Image& pixels() const noexcept { return pixels_; }
    int height() const noexcept { return pixels_.height(); }
    int width() const noexcept { return pixels_.width(); }
    double at(int c, int y, int x) const { return pixels_.at(c, y, x); }

private:
    Image pixels_;
};

// Relative exposure value in log2 units of exposure-time ratio.
class EvStep {
public:
    constexpr EvStep() = default;
    explicit EvStep(double value);

    double value() const noexcept { return value_; }
    // Inside the range covered by training data.
    bool in_supported_range() const noexcept { return value_ >= -3.0 && value_ <= 3.0; }

    friend auto operator<=>(const EvStep&, const EvStep&) = default;

private:
    double value_ = 0.0;
};

// Parses the EV part of a stack filename stem: "-2.5", "0", "+3".
EvStep parse_ev(const std::string& text);
// Inverse of parse_ev: explicit sign for non-zero values, trailing zeros trimmed.
std::string format_ev(EvStep ev);

struct StackEntry {
    LdrImage image;
    EvStep ev;
};

// Ordered exposures of one scene: EVs strictly increasing, equal dimensions.
class LdrStack {
public:
    LdrStack() = default;
    // Sorts by EV and validates; duplicate EVs or size mismatches throw.
    explicit LdrStack(std::vector<StackEntry> entries);

    const std::vector<StackEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const StackEntry& operator[](std::size_t i) const { return entries_[i]; }
    int height() const { return entries_.empty() ? 0 : entries_.front().image.height(); }
    int width() const { return entries_.empty() ? 0 : entries_.front().image.width(); }

    // Entry with EV exactly zero, or nullptr.
    const StackEntry* reference() const noexcept;
    std::vector<EvStep> evs() const;

private:
    std::vector<StackEntry> entries_;
};

// Rec. 709 luma of an RGB image, returned as a single-channel image.
Image luma(const Image& rgb);

}  // namespace cevr
