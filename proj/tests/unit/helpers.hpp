#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "cevr/image.hpp"
#include "cevr/nn/autograd.hpp"

namespace cevr::testing {

inline Image random_image(int h, int w, int c, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Image img(h, w, c);
    for (double& v : img.values()) v = u(rng);
    return img;
}

inline LdrImage random_ldr(int h, int w, std::uint64_t seed) { return LdrImage(random_image(h, w, 3, seed)); }

inline nn::Tensor random_tensor(nn::Shape s, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    nn::Tensor t(s);
    for (double& v : t.data) v = u(rng);
    return t;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("cevr_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace cevr::testing
