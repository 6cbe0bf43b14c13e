#ifndef GSEC_OUTER_ENSEMBLE_HPP
#define GSEC_OUTER_ENSEMBLE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "gsec/data_io.hpp"
#include "gsec/numerics.hpp"

namespace gsec {

// Softmax head on the concatenation [v; t]. With hidden_width == 0 it is a
// single affine map; otherwise affine -> tanh -> affine.
struct TaskEncoder {
    Matrix w1;  // (hidden or K) x input
    Matrix b1;  // 1 x (hidden or K)
    Matrix w2;  // K x hidden, empty when linear
    Matrix b2;  // 1 x K, empty when linear

    bool linear() const { return w2.empty(); }
    std::size_t input_dim() const { return w1.cols(); }
    std::size_t clusters() const { return linear() ? w1.rows() : w2.rows(); }

    static TaskEncoder create(std::size_t input_dim, std::size_t clusters, std::size_t hidden_width, Rng& rng);
    static TaskEncoder zeros_like(const TaskEncoder& other);
    void validate() const;
};

std::vector<double> flatten(const TaskEncoder& encoder);
void unflatten(TaskEncoder& encoder, std::span<const double> params);

// Row-wise [a_i; b_i]. `b` may have zero columns.
Matrix concat_columns(const Matrix& a, const Matrix& b);

std::vector<double> encoder_forward(const TaskEncoder& encoder, std::span<const double> image,
                                    std::span<const double> text);
// encoder_forward for every row of an already concatenated input matrix.
SoftAssignment encoder_predict(const TaskEncoder& encoder, const Matrix& inputs);

enum class AlignTarget {
    inner,    // CE(y, y_hat) = -sum_c y_hat_c log y_c   (inner prediction is the target)
    encoder,  // -sum_c y_c log y_hat_c
};

double loss_align(const SoftAssignment& predicted, const SoftAssignment& inner,
                  AlignTarget target = AlignTarget::inner, Reduction reduction = Reduction::sum);

struct OuterLossParts {
    double align = 0.0;
    double entropy = 0.0;  // H(mean_i y_i)
    double total = 0.0;    // align - entropy
};

OuterLossParts loss_outer(const SoftAssignment& predicted, const SoftAssignment& inner,
                          AlignTarget target = AlignTarget::inner, Reduction reduction = Reduction::sum);

// Loss on the samples `rows` of `inputs` against inner targets (one per row of
// `inputs`). Fills `grad` when non-null.
OuterLossParts outer_loss(const TaskEncoder& encoder, const Matrix& inputs, const SoftAssignment& inner,
                          std::span<const std::size_t> rows, AlignTarget target, TaskEncoder* grad = nullptr,
                          Reduction reduction = Reduction::sum);

struct OuterTrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 1024;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;
    std::size_t hidden_width = 0;
    std::size_t patience = 10;
    double min_improvement = 1e-5;
    AlignTarget target = AlignTarget::inner;
    Reduction reduction = Reduction::mean;

    void validate() const;
};

struct OuterEpochRecord {
    std::size_t epoch = 0;
    OuterLossParts loss;
};

struct OuterTrainResult {
    TaskEncoder encoder;
    std::vector<OuterEpochRecord> history;
    bool early_stopped = false;
};

class OuterTrainer {
public:
    // `inputs` rows are [v_i; t_i]; `inner` is held fixed.
    OuterTrainer(Matrix inputs, SoftAssignment inner, const OuterTrainConfig& config);
    OuterTrainer(Matrix inputs, SoftAssignment inner, const OuterTrainConfig& config, TaskEncoder encoder);

    OuterLossParts step(std::span<const std::size_t> rows);
    void run_epoch();
    OuterLossParts evaluate() const;
    OuterTrainResult train();

    const TaskEncoder& encoder() const { return encoder_; }

private:
    Matrix inputs_;
    SoftAssignment inner_;
    OuterTrainConfig config_;
    TaskEncoder encoder_;
    std::vector<OptimizerState> states_;
    Rng rng_;
    std::size_t epoch_ = 0;
    std::size_t batch_ = 0;
};

OuterTrainResult train_outer(const Matrix& inputs, const SoftAssignment& inner, const OuterTrainConfig& config);

// Row-wise argmax, lowest index on ties.
std::vector<std::uint32_t> argmax_rows(const SoftAssignment& probs);
std::vector<std::uint32_t> final_assignments(const TaskEncoder& encoder, const Matrix& inputs);

}  // namespace gsec

#endif  // GSEC_OUTER_ENSEMBLE_HPP
