#ifndef GSEC_SEMANTIC_HPP
#define GSEC_SEMANTIC_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gsec/clients.hpp"
#include "gsec/data_io.hpp"
#include "gsec/numerics.hpp"

namespace gsec {

// Pre-cluster count: max(ceil(n / 300), 3K), capped at n.
std::size_t cluster_count(std::size_t n, std::size_t expected_clusters);

struct KMeansConfig {
    std::size_t max_iterations = 100;
    std::size_t restarts = 5;
};

struct KMeansResult {
    Matrix centers;
    std::vector<std::size_t> assignment;
    double inertia = 0.0;
    // Inertia after every assignment step of the winning restart.
    std::vector<double> inertia_history;
    std::size_t iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding; stops when assignments are
// unchanged. Restart r is seeded with derive_seed(seed, r); the lowest inertia wins.
KMeansResult kmeans(const Matrix& points, std::size_t clusters, const KMeansConfig& config, std::uint64_t seed);

// One restart of kmeans() with the given seed.
KMeansResult kmeans_single(const Matrix& points, std::size_t clusters, std::size_t max_iterations,
                           std::uint64_t seed);

struct RepresentativeSelection {
    // Sample indices per cluster, closest to the center first.
    std::vector<std::vector<std::size_t>> per_cluster;
    std::vector<std::string> warnings;

    std::size_t total() const;
};

// Sorts each cluster by distance to its center and picks `per_cluster` members
// at evenly spaced ranks (both ends included). Small clusters are taken whole.
RepresentativeSelection select_representatives(const KMeansResult& result, const Matrix& points,
                                               std::size_t per_cluster);

inline constexpr std::string_view kDescriptionPrompt =
    "Identify and describe the main object in this image. Respond with the format: "
    "'This image contains a [object] characterized by [attribute1], [attribute2], and [attribute3]'";
inline constexpr std::string_view kDescriptionLead = "This image contains a";

std::string build_prompt();

struct ClassDescription {
    std::string sample_id;
    std::size_t sample_index = 0;
    std::size_t cluster = 0;
    std::string text;
    std::vector<double> embedding;
};

struct DescriptionPolicy {
    std::size_t max_retries = 1;
    std::size_t max_in_flight = 4;
    // Where images live for live clients: uri = image_root / <sample id> + image_suffix.
    std::string image_root;
    std::string image_suffix = ".png";
};

// Coerces a reply into the description template; empty replies throw FormatError.
std::string normalize_description(const std::string& reply);

// One description per representative, in selection order.
std::vector<ClassDescription> generate_descriptions(const RepresentativeSelection& reps,
                                                    const std::vector<std::string>& ids, MllmClient& client,
                                                    const DescriptionPolicy& policy = {});

// Row j holds the embedding of description j; also stored back into each description.
Matrix encode_descriptions(std::vector<ClassDescription>& descriptions, TextEncoderClient& encoder);

// Mean embedding of the descriptions of each pre-cluster (clusters without
// descriptions are skipped).
Matrix aggregate_per_cluster(const std::vector<ClassDescription>& descriptions, const Matrix& embeddings);

// p(class j | image i) = softmax_j(cos(v_i, t_j) / temperature).
Matrix class_weights(const Matrix& images, const Matrix& class_embeddings, double temperature);

// t_i = sum_j p(class j | image i) * t_j.
Matrix synthesize_text_embeddings(const Matrix& images, const Matrix& class_embeddings, double temperature);

enum class DescriptionGranularity { per_representative, per_cluster };

struct SemanticConfig {
    std::size_t expected_clusters = 10;
    double temperature = 0.04;
    std::size_t reps_per_cluster = 5;
    KMeansConfig kmeans;
    DescriptionGranularity granularity = DescriptionGranularity::per_representative;
    DescriptionPolicy policy;
};

struct SemanticResult {
    std::size_t pre_clusters = 0;
    KMeansResult kmeans;
    RepresentativeSelection representatives;
    std::vector<ClassDescription> descriptions;
    Matrix class_embeddings;
    Matrix text_embeddings;
};

SemanticResult run_semantic(const Dataset& dataset, const SemanticConfig& config, MllmClient& mllm,
                            TextEncoderClient& encoder, std::uint64_t seed);

// Line-delimited JSON, one {"sample_id", "cluster", "text"} object per line.
void write_descriptions_jsonl(const std::vector<ClassDescription>& descriptions, const std::filesystem::path& path);
std::vector<ClassDescription> read_descriptions_jsonl(const std::filesystem::path& path);

}  // namespace gsec

#endif  // GSEC_SEMANTIC_HPP
