#ifndef GSEC_EVALUATION_HPP
#define GSEC_EVALUATION_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "gsec/data_io.hpp"
#include "gsec/pipeline.hpp"

namespace gsec {

struct ContingencyTable {
    std::size_t pred_classes = 0;
    std::size_t true_classes = 0;
    std::size_t n = 0;
    std::vector<std::size_t> counts;  // pred_classes x true_classes, row-major

    std::size_t at(std::size_t pred, std::size_t truth) const { return counts[pred * true_classes + truth]; }
};

// Label values are used as indices, so the table spans 0..max label.
ContingencyTable contingency(const Labels& pred, const Labels& truth);

// Kuhn-Munkres on a rows x cols profit matrix (rectangular is fine).
// Returns, for each row, the matched column or -1 when rows > cols.
std::vector<long> max_weight_assignment(const std::vector<std::vector<double>>& profit);

// Each predicted cluster mapped to the ground-truth class it is matched with.
// Clusters left unmatched receive fresh ids above every truth label.
std::vector<std::uint32_t> cluster_to_class(const Labels& pred, const Labels& truth);
Labels align_to_truth(const Labels& pred, const Labels& truth);

double accuracy(const Labels& pred, const Labels& truth);
double nmi(const Labels& pred, const Labels& truth);
double ari(const Labels& pred, const Labels& truth);

struct ClusteringScores {
    double acc = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
};

ClusteringScores score(const Labels& pred, const Labels& truth);

// ---- bias / variance ----

struct BVEntry {
    Configuration configuration = Configuration::gsec;
    double bias = 0.0;
    double variance = 0.0;
    std::optional<double> soft_variance;
    std::size_t run_count = 0;
    std::vector<double> run_accuracy;
};

// 0-1 loss decomposition of R hard predictions of the same samples. Each run
// is aligned to the truth first; the majority vote (lowest label on ties) is
// the main prediction.
BVEntry decompose(const std::vector<Labels>& runs, const Labels& truth);

// Mean over samples and runs of 0.5 * ||p_r - mean_r p_r||^2, each run's
// columns permuted onto the truth classes first.
double soft_variance(const std::vector<SoftAssignment>& runs, const Labels& truth);

struct BVOptions {
    std::size_t runs = 10;
    std::uint64_t seed = 0;
    std::size_t workers = 4;
    bool soft = false;
    PipelineSettings settings;
};

// Trains `configuration` on `options.runs` bootstrap resamples of `data` and
// decomposes their predictions on the full original data.
BVEntry bias_variance(const Modalities& data, const Labels& truth, Configuration configuration,
                      const BVOptions& options);

// ---- ablation matrix ----

struct AblationRow {
    Configuration configuration = Configuration::gsec;
    std::uint64_t seed = 0;
    ClusteringScores scores;
};

// Fails up front with a ConfigError naming every missing modality.
std::vector<AblationRow> ablation_matrix(const Modalities& data, const Labels& truth,
                                         const std::vector<Configuration>& configurations,
                                         const std::vector<std::uint64_t>& seeds, const PipelineSettings& settings);

void write_bias_variance_csv(const std::vector<BVEntry>& entries, const std::filesystem::path& path);
void write_bias_variance_jsonl(const std::vector<BVEntry>& entries, const std::filesystem::path& path);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

}  // namespace gsec

#endif  // GSEC_EVALUATION_HPP
