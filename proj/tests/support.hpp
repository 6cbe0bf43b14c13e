#ifndef GSEC_TESTS_SUPPORT_HPP
#define GSEC_TESTS_SUPPORT_HPP

#include <filesystem>
#include <random>
#include <string>

#include "gsec/data_io.hpp"
#include "gsec/numerics.hpp"

namespace gsec::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = normal(rng);
    return m;
}

// Rows drawn as softmax of Gaussian logits with a random sharpness.
inline SoftAssignment random_stochastic(std::size_t rows, std::size_t cols, Rng& rng) {
    std::uniform_real_distribution<double> sharp(0.2, 3.0);
    Matrix logits = random_matrix(rows, cols, rng);
    SoftAssignment out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const double t = sharp(rng);
        for (std::size_t c = 0; c < cols; ++c) logits(r, c) *= t;
        const auto p = softmax(logits.row(r));
        std::copy(p.begin(), p.end(), out.row(r).begin());
    }
    return out;
}

inline Labels random_labels(std::size_t n, std::size_t k, Rng& rng) {
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(k - 1));
    Labels out(n);
    for (auto& l : out) l = pick(rng);
    return out;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("gsec-" + tag + "-" + std::to_string(rd()));
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

}  // namespace gsec::testing

#endif  // GSEC_TESTS_SUPPORT_HPP
