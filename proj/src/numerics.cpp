#include "gsec/numerics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace gsec {

namespace {

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw InvalidInputError(std::string(what) + ": non-finite input");
        }
    }
}

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw ShapeError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
    }
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits, double temperature) {
    if (!(temperature > 0.0)) {
        throw DomainError("softmax: temperature must be positive");
    }
    require_finite(logits, "softmax");
    std::vector<double> out(logits.size());
    if (logits.empty()) {
        return out;
    }
    double max_logit = logits[0];
    for (double v : logits) max_logit = std::max(max_logit, v);
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp((logits[i] - max_logit) / temperature);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

Matrix softmax_rows(const Matrix& logits, double temperature) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto p = softmax(logits.row(r), temperature);
        std::copy(p.begin(), p.end(), out.row(r).begin());
    }
    return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    require_same_length(p, q, "kl_divergence");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        total += p[i] * (std::log(std::max(p[i], kProbFloor)) - std::log(std::max(q[i], kProbFloor)));
    }
    return total;
}

double entropy(std::span<const double> p) {
    double total = 0.0;
    for (double v : p) {
        if (v <= 0.0) continue;
        total -= v * std::log(std::max(v, kProbFloor));
    }
    return total;
}

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "dot");
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
    return total;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "cosine_similarity");
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw DomainError("cosine_similarity: zero-norm vector");
    }
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

bool is_prob_row(std::span<const double> p, double tolerance) {
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) return false;
        total += v;
    }
    return std::abs(total - 1.0) <= tolerance;
}

std::vector<double> column_mean(const Matrix& m) {
    std::vector<double> mean(m.cols(), 0.0);
    if (m.rows() == 0) return mean;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) mean[c] += row[c];
    }
    for (double& v : mean) v /= static_cast<double>(m.rows());
    return mean;
}

std::vector<double> softmax_backward(std::span<const double> p, std::span<const double> grad_p) {
    require_same_length(p, grad_p, "softmax_backward");
    const double inner = dot(p, grad_p);
    std::vector<double> grad_z(p.size());
    for (std::size_t c = 0; c < p.size(); ++c) grad_z[c] = p[c] * (grad_p[c] - inner);
    return grad_z;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               OptimizerState& state, const AdamConfig& config) {
    if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
        state.second_moment.size() != params.size()) {
        throw ShapeError("adam_step: parameter, gradient and moment shapes differ");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(config.beta1, t);
    const double correction2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = config.beta1 * m + (1.0 - config.beta1) * grads[i];
        v = config.beta2 * v + (1.0 - config.beta2) * grads[i] * grads[i];
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

GradientCheckResult check_gradient(const LossAndGradient& loss_fn, std::span<const double> params,
                                   double perturbation) {
    if (!(perturbation > 0.0)) {
        throw DomainError("check_gradient: perturbation must be positive");
    }
    std::vector<double> x(params.begin(), params.end());
    std::vector<double> analytic(x.size(), 0.0);
    std::vector<double> scratch(x.size(), 0.0);

    const double base = loss_fn(x, analytic);
    if (!std::isfinite(base)) {
        throw InvalidInputError("check_gradient: non-finite loss at base point");
    }

    GradientCheckResult result;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + perturbation;
        const double plus = loss_fn(x, scratch);
        x[i] = saved - perturbation;
        const double minus = loss_fn(x, scratch);
        x[i] = saved;
        if (!std::isfinite(plus) || !std::isfinite(minus)) {
            throw InvalidInputError("check_gradient: non-finite loss at perturbed point " +
                                    std::to_string(i));
        }
        const double numeric = (plus - minus) / (2.0 * perturbation);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), kGradientCheckFloor});
        const double rel = std::abs(analytic[i] - numeric) / denom;
        if (i == 0 || rel > result.max_relative_error) {
            result = {rel, i, analytic[i], numeric};
        }
    }
    return result;
}

}  // namespace gsec
