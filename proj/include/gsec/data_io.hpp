#ifndef GSEC_DATA_IO_HPP
#define GSEC_DATA_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gsec/numerics.hpp"

namespace gsec {

using Rng = std::mt19937_64;
using Labels = std::vector<std::uint32_t>;

// SplitMix64 mix of (seed, stream); used to give every sub-task its own seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// .gsec / .gsecl framing:
//   bytes 0..3   ASCII "GSEC"
//   bytes 4..7   format version, u32 little-endian
//   embeddings:  n (u64 LE), d (u64 LE), n*d float32 LE, row-major
//   labels:      n (u64 LE), n uint32 LE
inline constexpr char kMagic[4] = {'G', 'S', 'E', 'C'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::uint32_t kLabelVersion = 1;

void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

void write_labels(const Labels& labels, const std::filesystem::path& path);
Labels read_labels(const std::filesystem::path& path);

// Comma-separated rows of reals. A first row that does not parse as numbers
// is treated as a header and skipped.
EmbeddingMatrix read_embeddings_csv(const std::filesystem::path& path);

struct Dataset {
    EmbeddingMatrix images;
    std::optional<EmbeddingMatrix> texts;
    std::optional<Labels> labels;
    std::vector<std::string> ids;

    std::size_t size() const { return images.rows(); }

    // Throws ShapeError/DomainError when the row counts or ids are inconsistent.
    void validate() const;

    // Dataset made of the listed rows (duplicates allowed). Ids of repeated
    // rows get a "#<copy>" suffix so they stay unique.
    Dataset subset(std::span<const std::size_t> indices) const;
};

// Ids "0", "1", ... "n-1".
std::vector<std::string> default_ids(std::size_t n);

struct SyntheticSpec {
    std::size_t n = 600;
    std::size_t dim = 16;
    std::size_t text_dim = 0;  // 0 = same as dim
    std::size_t clusters = 3;
    double separation = 10.0;
    double modality_noise = 0.5;
    std::uint64_t seed = 0;
};

// K isotropic unit-variance Gaussian clusters whose closest pair of centers is
// exactly `separation` apart. Texts are a random orthogonal map of the images
// plus isotropic noise. Labels are balanced round-robin.
Dataset generate_synthetic(const SyntheticSpec& spec);

struct BootstrapSample {
    std::uint64_t seed = 0;
    std::vector<std::size_t> indices;
};

std::vector<BootstrapSample> bootstrap(const Dataset& dataset, std::size_t run_count, std::uint64_t seed);
std::vector<BootstrapSample> bootstrap(std::size_t n, std::size_t run_count, std::uint64_t seed);

enum class Modality { image, text };

struct NeighborIndex {
    std::size_t k = 0;
    Modality modality = Modality::image;
    std::vector<std::size_t> neighbors;  // n * k, row-major

    std::size_t size() const { return k == 0 ? 0 : neighbors.size() / k; }
    std::span<const std::size_t> row(std::size_t i) const { return {neighbors.data() + i * k, k}; }
};

// Exact k nearest neighbors by cosine similarity, self excluded, rows sorted by
// descending similarity with ties broken by lower index.
NeighborIndex build_neighbor_index(const Matrix& points, std::size_t k, Modality modality = Modality::image);

std::size_t sample_neighbor(const NeighborIndex& index, std::size_t i, Rng& rng);

}  // namespace gsec

#endif  // GSEC_DATA_IO_HPP
