#include "gsec/inner_ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "gsec/error.hpp"

namespace gsec {

// ---- layer ----

BatchEnsembleLayer BatchEnsembleLayer::create(std::size_t input_dim, std::size_t output_dim, std::size_t members,
                                              ModulatorInit init, Rng& rng) {
    if (input_dim == 0 || output_dim == 0 || members == 0) {
        throw DomainError("BatchEnsembleLayer: dimensions and member count must be positive");
    }
    BatchEnsembleLayer layer;
    layer.weight = Matrix(output_dim, input_dim);
    layer.input_mod = Matrix(members, input_dim, 1.0);
    layer.output_mod = Matrix(members, output_dim, 1.0);
    layer.bias = Matrix(members, output_dim, 0.0);

    const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (auto& w : layer.weight.data()) w = uniform(rng);
    if (init == ModulatorInit::random_sign) {
        std::bernoulli_distribution coin(0.5);
        for (auto& v : layer.input_mod.data()) v = coin(rng) ? 1.0 : -1.0;
        for (auto& v : layer.output_mod.data()) v = coin(rng) ? 1.0 : -1.0;
    } else if (init == ModulatorInit::near_one) {
        std::uniform_real_distribution<double> jitter(0.5, 1.5);
        for (auto& v : layer.input_mod.data()) v = jitter(rng);
        for (auto& v : layer.output_mod.data()) v = jitter(rng);
    }
    return layer;
}

BatchEnsembleLayer BatchEnsembleLayer::zeros_like(const BatchEnsembleLayer& other) {
    BatchEnsembleLayer z;
    z.weight = Matrix(other.weight.rows(), other.weight.cols(), 0.0);
    z.input_mod = Matrix(other.input_mod.rows(), other.input_mod.cols(), 0.0);
    z.output_mod = Matrix(other.output_mod.rows(), other.output_mod.cols(), 0.0);
    z.bias = Matrix(other.bias.rows(), other.bias.cols(), 0.0);
    return z;
}

void BatchEnsembleLayer::validate() const {
    const std::size_t m = members();
    if (m == 0) throw ShapeError("BatchEnsembleLayer: no members");
    if (input_mod.cols() != input_dim() || output_mod.rows() != m || output_mod.cols() != output_dim() ||
        bias.rows() != m || bias.cols() != output_dim()) {
        throw ShapeError("BatchEnsembleLayer: inconsistent parameter shapes");
    }
    for (const Matrix* p : {&weight, &input_mod, &output_mod, &bias}) {
        for (double v : p->data()) {
            if (!std::isfinite(v)) throw InvalidInputError("BatchEnsembleLayer: non-finite parameter");
        }
    }
}

namespace {

// u = W (r_k * x)
void shared_product(const BatchEnsembleLayer& layer, std::size_t k, std::span<const double> x,
                    std::span<double> u) {
    const auto r = layer.input_mod.row(k);
    const std::size_t in = layer.input_dim();
    for (std::size_t o = 0; o < layer.output_dim(); ++o) {
        const auto w = layer.weight.row(o);
        double acc = 0.0;
        for (std::size_t j = 0; j < in; ++j) acc += w[j] * (r[j] * x[j]);
        u[o] = acc;
    }
}

}  // namespace

std::vector<double> BatchEnsembleLayer::member_forward(std::size_t k, std::span<const double> x) const {
    if (k >= members()) throw DomainError("member_forward: member index out of range");
    if (x.size() != input_dim()) {
        throw ShapeError("member_forward: input has " + std::to_string(x.size()) + " values, layer expects " +
                         std::to_string(input_dim()));
    }
    std::vector<double> z(output_dim());
    shared_product(*this, k, x, z);
    const auto s = output_mod.row(k);
    const auto b = bias.row(k);
    for (std::size_t o = 0; o < z.size(); ++o) z[o] = s[o] * z[o] + b[o];
    return z;
}

std::vector<double> BatchEnsembleLayer::ensemble_assign(std::span<const double> x) const {
    std::vector<double> y(output_dim(), 0.0);
    for (std::size_t k = 0; k < members(); ++k) {
        const auto p = softmax(member_forward(k, x));
        for (std::size_t c = 0; c < y.size(); ++c) y[c] += p[c];
    }
    for (double& v : y) v /= static_cast<double>(members());
    return y;
}

SoftAssignment BatchEnsembleLayer::assign_all(const Matrix& inputs) const {
    SoftAssignment out(inputs.rows(), output_dim());
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        const auto y = ensemble_assign(inputs.row(i));
        std::copy(y.begin(), y.end(), out.row(i).begin());
    }
    return out;
}

// ---- model ----

void InnerModel::validate() const {
    image_branch.validate();
    text_branch.validate();
    if (image_branch.members() != text_branch.members()) {
        throw ShapeError("InnerModel: branches have different ensemble sizes");
    }
    if (image_branch.output_dim() != text_branch.output_dim()) {
        throw ShapeError("InnerModel: branches have different cluster counts");
    }
}

InnerModel InnerModel::create(std::size_t image_dim, std::size_t text_dim, std::size_t clusters,
                              std::size_t members, ModulatorInit init, std::uint64_t seed) {
    Rng rng(seed);
    InnerModel model;
    model.image_branch = BatchEnsembleLayer::create(image_dim, clusters, members, init, rng);
    model.text_branch = BatchEnsembleLayer::create(text_dim, clusters, members, init, rng);
    return model;
}

InnerModel InnerModel::zeros_like(const InnerModel& other) {
    return {BatchEnsembleLayer::zeros_like(other.image_branch), BatchEnsembleLayer::zeros_like(other.text_branch)};
}

namespace {

template <typename Model, typename Fn>
void for_each_tensor(Model& model, Fn&& fn) {
    for (auto* branch : {&model.image_branch, &model.text_branch}) {
        fn(branch->weight);
        fn(branch->input_mod);
        fn(branch->output_mod);
        fn(branch->bias);
    }
}

}  // namespace

std::vector<double> flatten(const InnerModel& model) {
    std::vector<double> out;
    for_each_tensor(model, [&out](const Matrix& m) { out.insert(out.end(), m.data().begin(), m.data().end()); });
    return out;
}

void unflatten(InnerModel& model, std::span<const double> params) {
    std::size_t expected = 0;
    for_each_tensor(model, [&expected](Matrix& m) { expected += m.size(); });
    if (params.size() != expected) throw ShapeError("unflatten: parameter count mismatch");
    std::size_t offset = 0;
    for_each_tensor(model, [&](Matrix& m) {
        std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(offset), m.size(), m.data().begin());
        offset += m.size();
    });
}

// ---- losses ----

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": assignment shapes differ");
    }
}

double floored_log(double p) { return std::log(std::max(p, kProbFloor)); }

// d/dp of p * log(max(p, floor)), the p-dependent part of KL and entropy terms
double plogp_derivative(double p) { return p > kProbFloor ? std::log(p) + 1.0 : std::log(kProbFloor); }

}  // namespace

double loss_dist(const SoftAssignment& text, const SoftAssignment& image_neighbor, const SoftAssignment& image,
                 const SoftAssignment& text_neighbor) {
    require_same_shape(text, image_neighbor, "loss_dist");
    require_same_shape(text, image, "loss_dist");
    require_same_shape(text, text_neighbor, "loss_dist");
    double total = 0.0;
    for (std::size_t i = 0; i < text.rows(); ++i) {
        total += kl_divergence(text.row(i), image_neighbor.row(i));
        total += kl_divergence(image.row(i), text_neighbor.row(i));
    }
    return total;
}

double loss_conf(const SoftAssignment& image, const SoftAssignment& text, ConfidenceForm form) {
    require_same_shape(image, text, "loss_conf");
    if (form == ConfidenceForm::log_of_sum) {
        double sum = 0.0;
        for (std::size_t i = 0; i < image.rows(); ++i) sum += dot(image.row(i), text.row(i));
        return -floored_log(sum);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < image.rows(); ++i) total -= floored_log(dot(image.row(i), text.row(i)));
    return total;
}

double loss_bal(const SoftAssignment& image, const SoftAssignment& text) {
    require_same_shape(image, text, "loss_bal");
    return entropy(column_mean(image)) + entropy(column_mean(text));
}

SoftAssignment inner_average(const SoftAssignment& image, const SoftAssignment& text) {
    require_same_shape(image, text, "inner_average");
    SoftAssignment out(image.rows(), image.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = 0.5 * (image.data()[i] + text.data()[i]);
    return out;
}

// ---- batched forward / backward ----

namespace {

struct BranchForward {
    std::size_t members = 0;
    std::size_t classes = 0;
    std::vector<double> shared;  // rows * m * K values of W (r_k * x)
    std::vector<double> probs;   // rows * m * K member softmax outputs
    SoftAssignment y;

    std::size_t offset(std::size_t i, std::size_t k) const { return (i * members + k) * classes; }
};

BranchForward branch_forward(const BatchEnsembleLayer& layer, const Matrix& inputs,
                             std::span<const std::size_t> rows) {
    if (inputs.cols() != layer.input_dim()) {
        throw ShapeError("branch input dimension " + std::to_string(inputs.cols()) + " differs from layer input " +
                         std::to_string(layer.input_dim()));
    }
    BranchForward f;
    f.members = layer.members();
    f.classes = layer.output_dim();
    const std::size_t block = f.members * f.classes;
    f.shared.resize(rows.size() * block);
    f.probs.resize(rows.size() * block);
    f.y = SoftAssignment(rows.size(), f.classes, 0.0);
    std::vector<double> z(f.classes);
    const double inv_m = 1.0 / static_cast<double>(f.members);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto x = inputs.row(rows[i]);
        for (std::size_t k = 0; k < f.members; ++k) {
            std::span<double> u(f.shared.data() + f.offset(i, k), f.classes);
            shared_product(layer, k, x, u);
            const auto s = layer.output_mod.row(k);
            const auto b = layer.bias.row(k);
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < f.classes; ++c) {
                z[c] = s[c] * u[c] + b[c];
                top = std::max(top, z[c]);
            }
            if (!std::isfinite(top)) throw NumericalAbort("non-finite logits in ensemble forward pass");
            // softmax written in place; this loop dominates training time
            double* p = f.probs.data() + f.offset(i, k);
            double total = 0.0;
            for (std::size_t c = 0; c < f.classes; ++c) {
                p[c] = std::exp(z[c] - top);
                total += p[c];
            }
            for (std::size_t c = 0; c < f.classes; ++c) {
                p[c] /= total;
                f.y(i, c) += p[c] * inv_m;
            }
        }
    }
    return f;
}

void branch_backward(const BatchEnsembleLayer& layer, const Matrix& inputs, std::span<const std::size_t> rows,
                     const BranchForward& f, const Matrix& grad_y, BatchEnsembleLayer& grad) {
    const std::size_t in = layer.input_dim();
    const double inv_m = 1.0 / static_cast<double>(f.members);
    std::vector<double> gp(f.classes);
    std::vector<double> du(f.classes);
    std::vector<double> dz(f.classes);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto x = inputs.row(rows[i]);
        const auto gy = grad_y.row(i);
        for (std::size_t c = 0; c < f.classes; ++c) gp[c] = gy[c] * inv_m;
        for (std::size_t k = 0; k < f.members; ++k) {
            std::span<const double> p(f.probs.data() + f.offset(i, k), f.classes);
            std::span<const double> u(f.shared.data() + f.offset(i, k), f.classes);
            const double pg = dot(p, gp);
            for (std::size_t c = 0; c < f.classes; ++c) dz[c] = p[c] * (gp[c] - pg);
            const auto s = layer.output_mod.row(k);
            const auto r = layer.input_mod.row(k);
            auto gs = grad.output_mod.row(k);
            auto gb = grad.bias.row(k);
            auto gr = grad.input_mod.row(k);
            for (std::size_t c = 0; c < f.classes; ++c) {
                gs[c] += dz[c] * u[c];
                gb[c] += dz[c];
                du[c] = dz[c] * s[c];
            }
            for (std::size_t c = 0; c < f.classes; ++c) {
                const auto w = layer.weight.row(c);
                auto gw = grad.weight.row(c);
                const double d = du[c];
                for (std::size_t j = 0; j < in; ++j) {
                    gw[j] += d * r[j] * x[j];
                    gr[j] += d * w[j] * x[j];
                }
            }
        }
    }
}

}  // namespace

InnerLossParts inner_loss(const InnerModel& model, const Matrix& images, const Matrix& texts,
                          std::span<const std::size_t> rows, const SoftAssignment& image_neighbor_targets,
                          const SoftAssignment& text_neighbor_targets, ConfidenceForm form, InnerModel* grad,
                          Reduction reduction) {
    if (images.rows() != texts.rows()) throw ShapeError("inner_loss: image and text row counts differ");
    if (image_neighbor_targets.rows() != rows.size() || text_neighbor_targets.rows() != rows.size()) {
        throw ShapeError("inner_loss: one neighbor target row is needed per sample");
    }
    for (std::size_t r : rows) {
        if (r >= images.rows()) throw DomainError("inner_loss: row index out of range");
    }
    const auto fv = branch_forward(model.image_branch, images, rows);
    const auto ft = branch_forward(model.text_branch, texts, rows);
    const SoftAssignment& yv = fv.y;
    const SoftAssignment& yt = ft.y;

    const std::size_t b = rows.size();
    const double scale = reduction == Reduction::mean ? 1.0 / static_cast<double>(b) : 1.0;
    InnerLossParts parts;
    parts.dist = scale * loss_dist(yt, image_neighbor_targets, yv, text_neighbor_targets);
    parts.conf = loss_conf(yv, yt, form);
    if (form == ConfidenceForm::sum_of_logs) parts.conf *= scale;
    parts.bal = loss_bal(yv, yt);
    parts.total = parts.dist + parts.conf - parts.bal;
    if (grad == nullptr) return parts;

    const std::size_t kc = yv.cols();
    Matrix gv(b, kc, 0.0);
    Matrix gt(b, kc, 0.0);

    // distillation (neighbor targets held fixed)
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t c = 0; c < kc; ++c) {
            gt(i, c) += scale * (plogp_derivative(yt(i, c)) - floored_log(image_neighbor_targets(i, c)));
            gv(i, c) += scale * (plogp_derivative(yv(i, c)) - floored_log(text_neighbor_targets(i, c)));
        }
    }

    // confidence
    if (form == ConfidenceForm::log_of_sum) {
        double sum = 0.0;
        for (std::size_t i = 0; i < b; ++i) sum += dot(yv.row(i), yt.row(i));
        if (sum > kProbFloor) {
            for (std::size_t i = 0; i < b; ++i) {
                for (std::size_t c = 0; c < kc; ++c) {
                    gv(i, c) -= yt(i, c) / sum;
                    gt(i, c) -= yv(i, c) / sum;
                }
            }
        }
    } else {
        for (std::size_t i = 0; i < b; ++i) {
            const double inner = dot(yv.row(i), yt.row(i));
            if (inner <= kProbFloor) continue;
            for (std::size_t c = 0; c < kc; ++c) {
                gv(i, c) -= scale * yt(i, c) / inner;
                gt(i, c) -= scale * yv(i, c) / inner;
            }
        }
    }

    // balance enters with a minus sign: d(-H(mean))/dy_ic = plogp'(mean_c) / B
    const auto mv = column_mean(yv);
    const auto mt = column_mean(yt);
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t c = 0; c < kc; ++c) {
        const double dv = plogp_derivative(mv[c]) * inv_b;
        const double dt = plogp_derivative(mt[c]) * inv_b;
        for (std::size_t i = 0; i < b; ++i) {
            gv(i, c) += dv;
            gt(i, c) += dt;
        }
    }

    *grad = InnerModel::zeros_like(model);
    branch_backward(model.image_branch, images, rows, fv, gv, grad->image_branch);
    branch_backward(model.text_branch, texts, rows, ft, gt, grad->text_branch);
    return parts;
}

std::pair<SoftAssignment, SoftAssignment> neighbor_assign(const InnerModel& model, const Matrix& images,
                                                          const Matrix& texts, std::span<const std::size_t> rows,
                                                          const NeighborIndex& image_index,
                                                          const NeighborIndex& text_index, Rng& rng) {
    std::vector<std::size_t> image_neighbors(rows.size());
    std::vector<std::size_t> text_neighbors(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        image_neighbors[i] = sample_neighbor(image_index, rows[i], rng);
        text_neighbors[i] = sample_neighbor(text_index, rows[i], rng);
    }
    return {branch_forward(model.image_branch, images, image_neighbors).y,
            branch_forward(model.text_branch, texts, text_neighbors).y};
}

// ---- training ----

void InnerTrainConfig::validate() const {
    if (clusters < 2) throw ConfigError("inner training: need at least two clusters");
    if (epochs == 0 || batch_size == 0 || ensemble_size == 0 || neighbor_k == 0 || patience == 0) {
        throw ConfigError("inner training: epochs, batch size, ensemble size, neighbor k and patience must be positive");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("inner training: learning rate must be finite and nonnegative");
    }
}

namespace {

constexpr std::uint64_t kReportStream = 0x5245504f5254ULL;
constexpr std::uint64_t kTrainStream = 0x545241494eULL;
constexpr std::uint64_t kInitStream = 0x494e4954ULL;

std::vector<Matrix*> tensors(InnerModel& model) {
    return {&model.image_branch.weight, &model.image_branch.input_mod, &model.image_branch.output_mod,
            &model.image_branch.bias,   &model.text_branch.weight,     &model.text_branch.input_mod,
            &model.text_branch.output_mod, &model.text_branch.bias};
}

bool is_modulator(std::size_t tensor_index) {
    const std::size_t local = tensor_index % 4;
    return local == 1 || local == 2;
}

}  // namespace

InnerTrainer::InnerTrainer(Matrix images, Matrix texts, const InnerTrainConfig& config)
    : images_(std::move(images)), texts_(std::move(texts)), config_(config), rng_(derive_seed(config.seed, kTrainStream)) {
    config_.validate();
    if (images_.rows() != texts_.rows()) throw ShapeError("inner training: image and text row counts differ");
    if (images_.rows() < 2) throw DomainError("inner training: need at least two samples");
    const std::size_t k = std::min(config_.neighbor_k, images_.rows() - 1);
    image_index_ = build_neighbor_index(images_, k, Modality::image);
    text_index_ = build_neighbor_index(texts_, k, Modality::text);
    model_ = InnerModel::create(images_.cols(), texts_.cols(), config_.clusters, config_.ensemble_size,
                                config_.modulator_init, derive_seed(config_.seed, kInitStream));
    for (Matrix* t : tensors(model_)) states_.emplace_back(t->size());
}

InnerTrainer::InnerTrainer(Matrix images, Matrix texts, const InnerTrainConfig& config, InnerModel model,
                           NeighborIndex image_index, NeighborIndex text_index)
    : images_(std::move(images)),
      texts_(std::move(texts)),
      config_(config),
      model_(std::move(model)),
      image_index_(std::move(image_index)),
      text_index_(std::move(text_index)),
      rng_(derive_seed(config.seed, kTrainStream)) {
    config_.validate();
    model_.validate();
    if (images_.rows() != texts_.rows()) throw ShapeError("inner training: image and text row counts differ");
    if (image_index_.size() != images_.rows() || text_index_.size() != texts_.rows()) {
        throw ShapeError("inner training: neighbor index size differs from sample count");
    }
    for (Matrix* t : tensors(model_)) states_.emplace_back(t->size());
}

void InnerTrainer::draw_epoch_neighbors() {
    const std::size_t n = images_.rows();
    epoch_image_neighbors_.resize(n);
    epoch_text_neighbors_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        epoch_image_neighbors_[i] = sample_neighbor(image_index_, i, rng_);
        epoch_text_neighbors_[i] = sample_neighbor(text_index_, i, rng_);
    }
}

InnerLossParts InnerTrainer::step(std::span<const std::size_t> rows) {
    SoftAssignment image_targets;
    SoftAssignment text_targets;
    if (config_.neighbor_schedule == NeighborSchedule::per_epoch && !epoch_image_neighbors_.empty()) {
        std::vector<std::size_t> vn(rows.size());
        std::vector<std::size_t> tn(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            vn[i] = epoch_image_neighbors_[rows[i]];
            tn[i] = epoch_text_neighbors_[rows[i]];
        }
        image_targets = branch_forward(model_.image_branch, images_, vn).y;
        text_targets = branch_forward(model_.text_branch, texts_, tn).y;
    } else {
        std::tie(image_targets, text_targets) =
            neighbor_assign(model_, images_, texts_, rows, image_index_, text_index_, rng_);
    }

    InnerModel grad;
    const auto parts =
        inner_loss(model_, images_, texts_, rows, image_targets, text_targets, config_.confidence, &grad, config_.reduction);
    if (!std::isfinite(parts.total)) {
        std::ostringstream msg;
        msg << "inner training diverged at epoch " << epoch_ + 1 << ", batch " << batch_ << ": L_dist=" << parts.dist
            << " L_conf=" << parts.conf << " L_bal=" << parts.bal << " L_inner=" << parts.total;
        throw NumericalAbort(msg.str());
    }

    const AdamConfig adam{config_.learning_rate};
    auto params = tensors(model_);
    auto grads = tensors(grad);
    for (std::size_t t = 0; t < params.size(); ++t) {
        if (!config_.train_modulators && is_modulator(t)) continue;
        adam_step(params[t]->data(), grads[t]->data(), states_[t], adam);
    }
    ++batch_;
    return parts;
}

void InnerTrainer::run_epoch() {
    const std::size_t n = images_.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng_);
    if (config_.neighbor_schedule == NeighborSchedule::per_epoch) draw_epoch_neighbors();
    batch_ = 0;
    for (std::size_t start = 0; start < n; start += config_.batch_size) {
        const std::size_t end = std::min(n, start + config_.batch_size);
        step(std::span<const std::size_t>(order.data() + start, end - start));
    }
    ++epoch_;
}

InnerLossParts InnerTrainer::evaluate() const {
    std::vector<std::size_t> all(images_.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    Rng report_rng(derive_seed(config_.seed, kReportStream));
    const auto [vn, tn] = neighbor_assign(model_, images_, texts_, all, image_index_, text_index_, report_rng);
    return inner_loss(model_, images_, texts_, all, vn, tn, config_.confidence, nullptr, config_.reduction);
}

InnerTrainResult InnerTrainer::train() {
    InnerTrainResult result;
    result.history.push_back({epoch_, evaluate()});
    while (epoch_ < config_.epochs) {
        run_epoch();
        const auto loss = evaluate();
        if (!std::isfinite(loss.total)) {
            std::ostringstream msg;
            msg << "inner training diverged after epoch " << epoch_ << ": L_dist=" << loss.dist
                << " L_conf=" << loss.conf << " L_bal=" << loss.bal;
            throw NumericalAbort(msg.str());
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
    result.model = model_;
    return result;
}

InnerTrainResult train_inner(const Matrix& images, const Matrix& texts, const InnerTrainConfig& config) {
    return InnerTrainer(images, texts, config).train();
}

SoftAssignment inner_predict(const InnerModel& model, const Matrix& images, const Matrix& texts) {
    return inner_average(model.image_branch.assign_all(images), model.text_branch.assign_all(texts));
}

}  // namespace gsec
