#include "cevr/image.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "cevr/error.hpp"

namespace cevr {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid argument";
        case ErrorKind::DimensionMismatch: return "dimension mismatch";
        case ErrorKind::FileNotFound: return "file not found";
        case ErrorKind::UnsupportedFormat: return "unsupported format";
        case ErrorKind::IoFailure: return "I/O failure";
        case ErrorKind::ParseError: return "parse error";
        case ErrorKind::PaddingRequired: return "padding required";
        case ErrorKind::RankDeficient: return "rank-deficient system";
        case ErrorKind::MissingModel: return "missing model";
        case ErrorKind::ConfigMismatch: return "config mismatch";
    }
    return "unknown";
}

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
    require(height > 0 && width > 0 && channels > 0, ErrorKind::InvalidArgument,
            "image dimensions must be positive");
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

LdrImage::LdrImage(Image pixels) : pixels_(std::move(pixels)) {
    require(pixels_.channels() == 3, ErrorKind::InvalidArgument, "LDR image needs 3 channels");
    for (double v : pixels_.values()) {
        require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorKind::InvalidArgument,
                "LDR pixel outside [0, 1]");
    }
}

LdrImage LdrImage::clamped(Image pixels) {
    for (double& v : pixels.values()) {
        v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    }
    return LdrImage(std::move(pixels));
}

RadianceMap::RadianceMap(Image pixels) : pixels_(std::move(pixels)) {
    require(pixels_.channels() == 3, ErrorKind::InvalidArgument, "radiance map needs 3 channels");
    for (double v : pixels_.values()) {
        require(std::isfinite(v) && v > 0.0, ErrorKind::InvalidArgument,
                "radiance must be finite and positive");
    }
}

EvStep::EvStep(double value) : value_(value) {
    require(std::isfinite(value), ErrorKind::InvalidArgument, "EV step must be finite");
}

EvStep parse_ev(const std::string& text) {
    std::string_view view(text);
    if (!view.empty() && view.front() == '+') view.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(view.data(), view.data() + view.size(), value);
    if (view.empty() || ec != std::errc() || ptr != view.data() + view.size() ||
        !std::isfinite(value)) {
        fail(ErrorKind::ParseError, "cannot parse EV from '" + text + "'");
    }
    return EvStep(value == 0.0 ? 0.0 : value);
}

std::string format_ev(EvStep ev) {
    const double v = ev.value();
    if (v == 0.0) return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.4f", v);
    std::string s(buf);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
}

LdrStack::LdrStack(std::vector<StackEntry> entries) : entries_(std::move(entries)) {
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const StackEntry& a, const StackEntry& b) { return a.ev < b.ev; });
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& img = entries_[i].image;
        require(img.height() > 0, ErrorKind::InvalidArgument, "stack entry is empty");
        if (i == 0) continue;
        require(entries_[i].ev != entries_[i - 1].ev, ErrorKind::InvalidArgument,
                "duplicate EV " + format_ev(entries_[i].ev) + " in stack");
        require(img.height() == entries_[0].image.height() &&
                    img.width() == entries_[0].image.width(),
                ErrorKind::DimensionMismatch, "stack images differ in size");
    }
}

const StackEntry* LdrStack::reference() const noexcept {
    for (const auto& e : entries_) {
        if (e.ev.value() == 0.0) return &e;
    }
    return nullptr;
}

std::vector<EvStep> LdrStack::evs() const {
    std::vector<EvStep> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.ev);
    return out;
}

Image luma(const Image& rgb) {
    require(rgb.channels() == 3, ErrorKind::InvalidArgument, "luma needs an RGB image");
    Image out(rgb.height(), rgb.width(), 1);
    const auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
    auto y = out.plane(0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = 0.2126 * r[i] + 0.7152 * g[i] + 0.0722 * b[i];
    }
    return out;
}

}  // namespace cevr
