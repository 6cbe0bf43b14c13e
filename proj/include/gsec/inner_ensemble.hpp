#ifndef GSEC_INNER_ENSEMBLE_HPP
#define GSEC_INNER_ENSEMBLE_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gsec/data_io.hpp"
#include "gsec/numerics.hpp"

namespace gsec {

enum class ModulatorInit {
    random_sign,  // independent +-1 entries
    ones,         // all 1 (members differ only through their biases)
    near_one,     // 1 + U(-0.5, 0.5): same sign pattern, diverse magnitudes
};

// m members sharing one weight matrix. Member k computes
//   l_k(x) = s_k * (W (r_k * x)) + b_k     (element-wise products)
struct BatchEnsembleLayer {
    Matrix weight;      // out x in, shared
    Matrix input_mod;   // m x in   (r_k rows)
    Matrix output_mod;  // m x out  (s_k rows)
    Matrix bias;        // m x out  (b_k rows)

    std::size_t members() const { return input_mod.rows(); }
    std::size_t input_dim() const { return weight.cols(); }
    std::size_t output_dim() const { return weight.rows(); }

    // W ~ U(-1/sqrt(in), 1/sqrt(in)), b = 0, modulators per `init`.
    static BatchEnsembleLayer create(std::size_t input_dim, std::size_t output_dim, std::size_t members,
                                     ModulatorInit init, Rng& rng);
    // Same shapes, every entry zero. Used as a gradient accumulator.
    static BatchEnsembleLayer zeros_like(const BatchEnsembleLayer& other);

    void validate() const;

    std::vector<double> member_forward(std::size_t k, std::span<const double> x) const;
    // Softmax of each member's logits, averaged over members.
    std::vector<double> ensemble_assign(std::span<const double> x) const;
    // ensemble_assign for every row of `inputs`.
    SoftAssignment assign_all(const Matrix& inputs) const;
};

struct InnerModel {
    BatchEnsembleLayer image_branch;
    BatchEnsembleLayer text_branch;

    std::size_t clusters() const { return image_branch.output_dim(); }
    void validate() const;

    static InnerModel create(std::size_t image_dim, std::size_t text_dim, std::size_t clusters,
                             std::size_t members, ModulatorInit init, std::uint64_t seed);
    static InnerModel zeros_like(const InnerModel& other);
};

// Parameter vector order: image branch (W, r, s, b), then text branch (W, r, s, b).
std::vector<double> flatten(const InnerModel& model);
void unflatten(InnerModel& model, std::span<const double> params);

// ---- losses over n x K soft assignments ----

enum class ConfidenceForm {
    log_of_sum,   // -log sum_i <y_i^v, y_i^t>
    sum_of_logs,  // -sum_i log <y_i^v, y_i^t>
};

// sum_i KL(y_i^t || y_i^{v,N}) + KL(y_i^v || y_i^{t,N})
double loss_dist(const SoftAssignment& text, const SoftAssignment& image_neighbor, const SoftAssignment& image,
                 const SoftAssignment& text_neighbor);
double loss_conf(const SoftAssignment& image, const SoftAssignment& text,
                 ConfidenceForm form = ConfidenceForm::log_of_sum);
// H(mean_i y_i^v) + H(mean_i y_i^t)
double loss_bal(const SoftAssignment& image, const SoftAssignment& text);
// (y^v + y^t) / 2
SoftAssignment inner_average(const SoftAssignment& image, const SoftAssignment& text);

struct InnerLossParts {
    double dist = 0.0;
    double conf = 0.0;
    double bal = 0.0;
    double total = 0.0;  // dist + conf - bal
};

// Loss of the samples `rows` against fixed neighbor targets (one target row per
// entry of `rows`). When `grad` is non-null it receives dL/dparams; neighbor
// targets are constants. `reduction` applies to the per-sample sums (L_dist and
// the sum-of-logs confidence); the log-of-sum confidence and L_bal are unaffected.
InnerLossParts inner_loss(const InnerModel& model, const Matrix& images, const Matrix& texts,
                          std::span<const std::size_t> rows, const SoftAssignment& image_neighbor_targets,
                          const SoftAssignment& text_neighbor_targets, ConfidenceForm form,
                          InnerModel* grad = nullptr, Reduction reduction = Reduction::sum);

// Draws v_i^N and t_i^N for every entry of `rows` and returns the assignments
// of those neighbors through the matching branch.
std::pair<SoftAssignment, SoftAssignment> neighbor_assign(const InnerModel& model, const Matrix& images,
                                                          const Matrix& texts, std::span<const std::size_t> rows,
                                                          const NeighborIndex& image_index,
                                                          const NeighborIndex& text_index, Rng& rng);

enum class NeighborSchedule { per_step, per_epoch };

struct InnerTrainConfig {
    std::size_t clusters = 10;
    std::size_t epochs = 100;
    std::size_t batch_size = 1024;
    double learning_rate = 0.001;
    std::size_t ensemble_size = 24;
    std::size_t neighbor_k = 10;
    std::uint64_t seed = 0;
    std::size_t patience = 10;
    double min_improvement = 1e-5;
    ConfidenceForm confidence = ConfidenceForm::log_of_sum;
    NeighborSchedule neighbor_schedule = NeighborSchedule::per_step;
    ModulatorInit modulator_init = ModulatorInit::near_one;
    bool train_modulators = true;
    Reduction reduction = Reduction::mean;

    void validate() const;
};

struct InnerEpochRecord {
    std::size_t epoch = 0;  // 0 = before training
    InnerLossParts loss;
};

struct InnerTrainResult {
    InnerModel model;
    std::vector<InnerEpochRecord> history;
    bool early_stopped = false;
};

// Mini-batch Adam on L_inner. History entries are full-dataset losses against
// a fixed neighbor draw, so epochs are comparable.
class InnerTrainer {
public:
    InnerTrainer(Matrix images, Matrix texts, const InnerTrainConfig& config);
    // Caller-supplied model and neighbor indices (tests, reductions).
    InnerTrainer(Matrix images, Matrix texts, const InnerTrainConfig& config, InnerModel model,
                 NeighborIndex image_index, NeighborIndex text_index);

    // One optimizer update on `rows`; returns the batch loss before the update.
    InnerLossParts step(std::span<const std::size_t> rows);
    void run_epoch();
    InnerLossParts evaluate() const;
    InnerTrainResult train();

    const InnerModel& model() const { return model_; }
    std::size_t epochs_completed() const { return epoch_; }

private:
    void draw_epoch_neighbors();

    Matrix images_;
    Matrix texts_;
    InnerTrainConfig config_;
    InnerModel model_;
    NeighborIndex image_index_;
    NeighborIndex text_index_;
    std::vector<OptimizerState> states_;
    Rng rng_;
    std::size_t epoch_ = 0;
    std::size_t batch_ = 0;
    std::vector<std::size_t> epoch_image_neighbors_;
    std::vector<std::size_t> epoch_text_neighbors_;
};

InnerTrainResult train_inner(const Matrix& images, const Matrix& texts, const InnerTrainConfig& config);

// y_hat = (y^v + y^t) / 2 on clean inputs.
SoftAssignment inner_predict(const InnerModel& model, const Matrix& images, const Matrix& texts);

}  // namespace gsec

#endif  // GSEC_INNER_ENSEMBLE_HPP
