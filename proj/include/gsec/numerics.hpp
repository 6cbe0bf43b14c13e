#ifndef GSEC_NUMERICS_HPP
#define GSEC_NUMERICS_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gsec/error.hpp"

namespace gsec {

// Dense row-major matrix. Losses and gradients use double; stored
// embeddings use float (see EmbeddingMatrix).
template <typename T>
class BasicMatrix {
public:
    using value_type = T;

    BasicMatrix() = default;
    BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw ShapeError("matrix data length does not match rows * cols");
        }
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    template <typename U>
    BasicMatrix<U> cast() const {
        return BasicMatrix<U>(rows_, cols_, std::vector<U>(data_.begin(), data_.end()));
    }

    friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using EmbeddingMatrix = BasicMatrix<float>;

// n x K row-stochastic matrix of cluster probabilities.
using SoftAssignment = Matrix;

// Floor applied to every probability that enters a logarithm.
inline constexpr double kProbFloor = 1e-12;

// Tolerance on |sum - 1| for a valid probability row.
inline constexpr double kProbRowTolerance = 1e-6;

// How per-sample loss terms are combined over a batch: the plain sum, or the
// sum divided by the number of samples.
enum class Reduction { sum, mean };

std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

// Row-wise softmax of every row of `logits`.
Matrix softmax_rows(const Matrix& logits, double temperature = 1.0);

double kl_divergence(std::span<const double> p, std::span<const double> q);
double entropy(std::span<const double> p);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

bool is_prob_row(std::span<const double> p, double tolerance = kProbRowTolerance);

// Column means of a matrix (the average distribution of a SoftAssignment).
std::vector<double> column_mean(const Matrix& m);

// Backpropagates dL/dp through p = softmax(z) (temperature 1), returning dL/dz.
std::vector<double> softmax_backward(std::span<const double> p, std::span<const double> grad_p);

// ---- adaptive-moment optimizer ----

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t step = 0;

    explicit OptimizerState(std::size_t parameter_count = 0)
        : first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0) {}
};

void adam_step(std::span<double> params, std::span<const double> grads,
               OptimizerState& state, const AdamConfig& config);

// ---- gradient checking ----

// Evaluates the loss at `params` and writes the analytic gradient into `grad`.
using LossAndGradient = std::function<double(std::span<const double> params, std::span<double> grad)>;

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Relative error is |a - f| / max(|a|, |f|, kGradientCheckFloor).
inline constexpr double kGradientCheckFloor = 1e-6;

GradientCheckResult check_gradient(const LossAndGradient& loss_fn, std::span<const double> params,
                                   double perturbation = 1e-5);

}  // namespace gsec

#endif  // GSEC_NUMERICS_HPP
