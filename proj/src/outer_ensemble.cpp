#include "gsec/outer_ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gsec/error.hpp"

namespace gsec {

TaskEncoder TaskEncoder::create(std::size_t input_dim, std::size_t clusters, std::size_t hidden_width, Rng& rng) {
    if (input_dim == 0 || clusters == 0) throw DomainError("TaskEncoder: dimensions must be positive");
    auto init = [&rng](std::size_t rows, std::size_t cols) {
        Matrix m(rows, cols);
        const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
        std::uniform_real_distribution<double> uniform(-bound, bound);
        for (auto& v : m.data()) v = uniform(rng);
        return m;
    };
    TaskEncoder enc;
    if (hidden_width == 0) {
        enc.w1 = init(clusters, input_dim);
        enc.b1 = Matrix(1, clusters, 0.0);
    } else {
        enc.w1 = init(hidden_width, input_dim);
        enc.b1 = Matrix(1, hidden_width, 0.0);
        enc.w2 = init(clusters, hidden_width);
        enc.b2 = Matrix(1, clusters, 0.0);
    }
    return enc;
}

TaskEncoder TaskEncoder::zeros_like(const TaskEncoder& other) {
    TaskEncoder z;
    z.w1 = Matrix(other.w1.rows(), other.w1.cols(), 0.0);
    z.b1 = Matrix(other.b1.rows(), other.b1.cols(), 0.0);
    z.w2 = Matrix(other.w2.rows(), other.w2.cols(), 0.0);
    z.b2 = Matrix(other.b2.rows(), other.b2.cols(), 0.0);
    return z;
}

void TaskEncoder::validate() const {
    if (b1.rows() != 1 || b1.cols() != w1.rows()) throw ShapeError("TaskEncoder: first bias shape");
    if (!linear() && (w2.cols() != w1.rows() || b2.rows() != 1 || b2.cols() != w2.rows())) {
        throw ShapeError("TaskEncoder: second layer shape");
    }
    for (const Matrix* m : {&w1, &b1, &w2, &b2}) {
        for (double v : m->data()) {
            if (!std::isfinite(v)) throw InvalidInputError("TaskEncoder: non-finite parameter");
        }
    }
}

namespace {

template <typename Enc, typename Fn>
void for_each_tensor(Enc& enc, Fn&& fn) {
    fn(enc.w1);
    fn(enc.b1);
    fn(enc.w2);
    fn(enc.b2);
}

struct EncoderForward {
    std::vector<double> hidden;  // tanh activations, empty when linear
    std::vector<double> probs;
};

EncoderForward forward_row(const TaskEncoder& enc, std::span<const double> x) {
    EncoderForward f;
    std::vector<double> a(enc.w1.rows());
    for (std::size_t o = 0; o < a.size(); ++o) a[o] = dot(enc.w1.row(o), x) + enc.b1(0, o);
    if (enc.linear()) {
        f.probs = softmax(a);
        return f;
    }
    f.hidden.resize(a.size());
    for (std::size_t o = 0; o < a.size(); ++o) f.hidden[o] = std::tanh(a[o]);
    std::vector<double> z(enc.w2.rows());
    for (std::size_t o = 0; o < z.size(); ++o) z[o] = dot(enc.w2.row(o), f.hidden) + enc.b2(0, o);
    f.probs = softmax(z);
    return f;
}

void backward_row(const TaskEncoder& enc, std::span<const double> x, const EncoderForward& f,
                  std::span<const double> grad_probs, TaskEncoder& grad) {
    const auto dz = softmax_backward(f.probs, grad_probs);
    std::vector<double> da;
    if (enc.linear()) {
        da = dz;
    } else {
        da.assign(enc.w1.rows(), 0.0);
        for (std::size_t o = 0; o < dz.size(); ++o) {
            grad.b2(0, o) += dz[o];
            auto gw = grad.w2.row(o);
            const auto w = enc.w2.row(o);
            for (std::size_t h = 0; h < f.hidden.size(); ++h) {
                gw[h] += dz[o] * f.hidden[h];
                da[h] += dz[o] * w[h];
            }
        }
        for (std::size_t h = 0; h < da.size(); ++h) da[h] *= 1.0 - f.hidden[h] * f.hidden[h];
    }
    for (std::size_t o = 0; o < da.size(); ++o) {
        grad.b1(0, o) += da[o];
        auto gw = grad.w1.row(o);
        for (std::size_t j = 0; j < x.size(); ++j) gw[j] += da[o] * x[j];
    }
}

double floored_log(double p) { return std::log(std::max(p, kProbFloor)); }
double plogp_derivative(double p) { return p > kProbFloor ? std::log(p) + 1.0 : std::log(kProbFloor); }

}  // namespace

std::vector<double> flatten(const TaskEncoder& encoder) {
    std::vector<double> out;
    for_each_tensor(encoder, [&out](const Matrix& m) { out.insert(out.end(), m.data().begin(), m.data().end()); });
    return out;
}

void unflatten(TaskEncoder& encoder, std::span<const double> params) {
    std::size_t expected = 0;
    for_each_tensor(encoder, [&expected](Matrix& m) { expected += m.size(); });
    if (params.size() != expected) throw ShapeError("unflatten: parameter count mismatch");
    std::size_t offset = 0;
    for_each_tensor(encoder, [&](Matrix& m) {
        std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(offset), m.size(), m.data().begin());
        offset += m.size();
    });
}

Matrix concat_columns(const Matrix& a, const Matrix& b) {
    if (b.cols() > 0 && a.rows() != b.rows()) throw ShapeError("concat_columns: row counts differ");
    Matrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto row = out.row(i);
        std::copy(a.row(i).begin(), a.row(i).end(), row.begin());
        if (b.cols() > 0) std::copy(b.row(i).begin(), b.row(i).end(), row.begin() + static_cast<std::ptrdiff_t>(a.cols()));
    }
    return out;
}

std::vector<double> encoder_forward(const TaskEncoder& encoder, std::span<const double> image,
                                    std::span<const double> text) {
    if (image.size() + text.size() != encoder.input_dim()) {
        throw ShapeError("encoder_forward: input has " + std::to_string(image.size() + text.size()) +
                         " values, encoder expects " + std::to_string(encoder.input_dim()));
    }
    std::vector<double> x(image.begin(), image.end());
    x.insert(x.end(), text.begin(), text.end());
    return forward_row(encoder, x).probs;
}

SoftAssignment encoder_predict(const TaskEncoder& encoder, const Matrix& inputs) {
    if (inputs.cols() != encoder.input_dim()) throw ShapeError("encoder_predict: input dimension mismatch");
    SoftAssignment out(inputs.rows(), encoder.clusters());
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        const auto p = forward_row(encoder, inputs.row(i)).probs;
        std::copy(p.begin(), p.end(), out.row(i).begin());
    }
    return out;
}

double loss_align(const SoftAssignment& predicted, const SoftAssignment& inner, AlignTarget target,
                  Reduction reduction) {
    if (predicted.rows() != inner.rows() || predicted.cols() != inner.cols()) {
        throw ShapeError("loss_align: assignment shapes differ");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double y = predicted.data()[i];
        const double y_hat = inner.data()[i];
        total -= target == AlignTarget::inner ? y_hat * floored_log(y) : y * floored_log(y_hat);
    }
    if (reduction == Reduction::mean && predicted.rows() > 0) total /= static_cast<double>(predicted.rows());
    return total;
}

OuterLossParts loss_outer(const SoftAssignment& predicted, const SoftAssignment& inner, AlignTarget target,
                          Reduction reduction) {
    OuterLossParts parts;
    parts.align = loss_align(predicted, inner, target, reduction);
    parts.entropy = entropy(column_mean(predicted));
    parts.total = parts.align - parts.entropy;
    return parts;
}

OuterLossParts outer_loss(const TaskEncoder& encoder, const Matrix& inputs, const SoftAssignment& inner,
                          std::span<const std::size_t> rows, AlignTarget target, TaskEncoder* grad,
                          Reduction reduction) {
    if (inputs.cols() != encoder.input_dim()) throw ShapeError("outer_loss: input dimension mismatch");
    if (inner.rows() != inputs.rows() || inner.cols() != encoder.clusters()) {
        throw ShapeError("outer_loss: inner targets must be n x K");
    }
    std::vector<EncoderForward> fwd;
    fwd.reserve(rows.size());
    SoftAssignment predicted(rows.size(), encoder.clusters());
    SoftAssignment targets(rows.size(), encoder.clusters());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= inputs.rows()) throw DomainError("outer_loss: row index out of range");
        fwd.push_back(forward_row(encoder, inputs.row(rows[i])));
        std::copy(fwd.back().probs.begin(), fwd.back().probs.end(), predicted.row(i).begin());
        std::copy(inner.row(rows[i]).begin(), inner.row(rows[i]).end(), targets.row(i).begin());
    }
    const auto parts = loss_outer(predicted, targets, target, reduction);
    if (grad == nullptr) return parts;

    *grad = TaskEncoder::zeros_like(encoder);
    const auto mean = column_mean(predicted);
    const double inv_b = 1.0 / static_cast<double>(rows.size());
    const double scale = reduction == Reduction::mean ? inv_b : 1.0;
    std::vector<double> gy(encoder.clusters());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < gy.size(); ++c) {
            const double y = predicted(i, c);
            const double y_hat = targets(i, c);
            if (target == AlignTarget::inner) {
                gy[c] = y > kProbFloor ? -scale * y_hat / y : 0.0;
            } else {
                gy[c] = -scale * floored_log(y_hat);
            }
            gy[c] += plogp_derivative(mean[c]) * inv_b;
        }
        backward_row(encoder, inputs.row(rows[i]), fwd[i], gy, *grad);
    }
    return parts;
}

// ---- training ----

void OuterTrainConfig::validate() const {
    if (epochs == 0 || batch_size == 0 || patience == 0) {
        throw ConfigError("outer training: epochs, batch size and patience must be positive");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("outer training: learning rate must be finite and nonnegative");
    }
}

namespace {

constexpr std::uint64_t kOuterInitStream = 0x4f494e4954ULL;
constexpr std::uint64_t kOuterTrainStream = 0x4f545241494eULL;

std::vector<Matrix*> tensors(TaskEncoder& enc) { return {&enc.w1, &enc.b1, &enc.w2, &enc.b2}; }

TaskEncoder initial_encoder(const Matrix& inputs, const SoftAssignment& inner, const OuterTrainConfig& config) {
    Rng rng(derive_seed(config.seed, kOuterInitStream));
    return TaskEncoder::create(inputs.cols(), inner.cols(), config.hidden_width, rng);
}

}  // namespace

OuterTrainer::OuterTrainer(Matrix inputs, SoftAssignment inner, const OuterTrainConfig& config)
    : OuterTrainer(inputs, inner, config, initial_encoder(inputs, inner, config)) {}

OuterTrainer::OuterTrainer(Matrix inputs, SoftAssignment inner, const OuterTrainConfig& config, TaskEncoder encoder)
    : inputs_(std::move(inputs)),
      inner_(std::move(inner)),
      config_(config),
      encoder_(std::move(encoder)),
      rng_(derive_seed(config.seed, kOuterTrainStream)) {
    config_.validate();
    encoder_.validate();
    if (inputs_.rows() != inner_.rows()) throw ShapeError("outer training: one inner prediction per sample required");
    if (inputs_.rows() == 0) throw DomainError("outer training: empty dataset");
    for (Matrix* t : tensors(encoder_)) states_.emplace_back(t->size());
}

OuterLossParts OuterTrainer::step(std::span<const std::size_t> rows) {
    TaskEncoder grad;
    const auto parts = outer_loss(encoder_, inputs_, inner_, rows, config_.target, &grad, config_.reduction);
    if (!std::isfinite(parts.total)) {
        std::ostringstream msg;
        msg << "outer training diverged at epoch " << epoch_ + 1 << ", batch " << batch_ << ": L_align=" << parts.align
            << " H=" << parts.entropy << " L_outer=" << parts.total;
        throw NumericalAbort(msg.str());
    }
    const AdamConfig adam{config_.learning_rate};
    auto params = tensors(encoder_);
    auto grads = tensors(grad);
    for (std::size_t t = 0; t < params.size(); ++t) {
        if (params[t]->empty()) continue;
        adam_step(params[t]->data(), grads[t]->data(), states_[t], adam);
    }
    ++batch_;
    return parts;
}

void OuterTrainer::run_epoch() {
    const std::size_t n = inputs_.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng_);
    batch_ = 0;
    for (std::size_t start = 0; start < n; start += config_.batch_size) {
        const std::size_t end = std::min(n, start + config_.batch_size);
        step(std::span<const std::size_t>(order.data() + start, end - start));
    }
    ++epoch_;
}

OuterLossParts OuterTrainer::evaluate() const {
    std::vector<std::size_t> all(inputs_.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return outer_loss(encoder_, inputs_, inner_, all, config_.target, nullptr, config_.reduction);
}

OuterTrainResult OuterTrainer::train() {
    OuterTrainResult result;
    result.history.push_back({epoch_, evaluate()});
    while (epoch_ < config_.epochs) {
        run_epoch();
        const auto loss = evaluate();
        if (!std::isfinite(loss.total)) {
            throw NumericalAbort("outer training diverged after epoch " + std::to_string(epoch_));
        }
        result.history.push_back({epoch_, loss});
        const std::size_t h = result.history.size();
        if (h > config_.patience) {
            const double reference = result.history[h - 1 - config_.patience].loss.total;
            double best = reference;
            for (std::size_t e = h - config_.patience; e < h; ++e) best = std::min(best, result.history[e].loss.total);
            if (reference - best < config_.min_improvement) {
                result.early_stopped = true;
                break;
            }
        }
    }
    result.encoder = encoder_;
    return result;
}

OuterTrainResult train_outer(const Matrix& inputs, const SoftAssignment& inner, const OuterTrainConfig& config) {
    return OuterTrainer(inputs, inner, config).train();
}

std::vector<std::uint32_t> argmax_rows(const SoftAssignment& probs) {
    std::vector<std::uint32_t> out(probs.rows(), 0);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const auto row = probs.row(i);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c] > row[best]) best = c;
        }
        out[i] = static_cast<std::uint32_t>(best);
    }
    return out;
}

std::vector<std::uint32_t> final_assignments(const TaskEncoder& encoder, const Matrix& inputs) {
    return argmax_rows(encoder_predict(encoder, inputs));
}

}  // namespace gsec
