#include "gsec/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gsec/error.hpp"

namespace gsec {

namespace {

void require_same_length(const Labels& pred, const Labels& truth, const char* what) {
    if (pred.size() != truth.size()) {
        throw ShapeError(std::string(what) + ": " + std::to_string(pred.size()) + " predictions for " +
                         std::to_string(truth.size()) + " labels");
    }
}

std::size_t label_span(const Labels& labels) {
    return labels.empty() ? 0 : static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

ContingencyTable contingency(const Labels& pred, const Labels& truth) {
    require_same_length(pred, truth, "contingency");
    ContingencyTable t;
    t.pred_classes = label_span(pred);
    t.true_classes = label_span(truth);
    t.n = pred.size();
    t.counts.assign(t.pred_classes * t.true_classes, 0);
    for (std::size_t i = 0; i < pred.size(); ++i) ++t.counts[pred[i] * t.true_classes + truth[i]];
    return t;
}

std::vector<long> max_weight_assignment(const std::vector<std::vector<double>>& profit) {
    const std::size_t rows = profit.size();
    const std::size_t cols = rows == 0 ? 0 : profit.front().size();
    for (const auto& r : profit) {
        if (r.size() != cols) throw ShapeError("max_weight_assignment: ragged profit matrix");
    }
    const std::size_t n = std::max(rows, cols);
    if (n == 0) return {};
    auto cost = [&](std::size_t i, std::size_t j) {
        return (i < rows && j < cols) ? -profit[i][j] : 0.0;
    };

    // Shortest augmenting path form with potentials; 1-based with a virtual column 0.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<long> result(rows, -1);
    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t i = match[j];
        if (i >= 1 && i <= rows && j <= cols) result[i - 1] = static_cast<long>(j - 1);
    }
    return result;
}

std::vector<std::uint32_t> cluster_to_class(const Labels& pred, const Labels& truth) {
    const auto table = contingency(pred, truth);
    std::vector<std::vector<double>> profit(table.pred_classes, std::vector<double>(table.true_classes, 0.0));
    for (std::size_t p = 0; p < table.pred_classes; ++p) {
        for (std::size_t t = 0; t < table.true_classes; ++t) profit[p][t] = static_cast<double>(table.at(p, t));
    }
    const auto match = max_weight_assignment(profit);
    std::vector<std::uint32_t> mapping(table.pred_classes);
    auto fresh = static_cast<std::uint32_t>(table.true_classes);
    for (std::size_t p = 0; p < table.pred_classes; ++p) {
        mapping[p] = match[p] >= 0 ? static_cast<std::uint32_t>(match[p]) : fresh++;
    }
    return mapping;
}

Labels align_to_truth(const Labels& pred, const Labels& truth) {
    const auto mapping = cluster_to_class(pred, truth);
    Labels out(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) out[i] = mapping[pred[i]];
    return out;
}

double accuracy(const Labels& pred, const Labels& truth) {
    require_same_length(pred, truth, "accuracy");
    if (pred.empty()) throw DomainError("accuracy: no samples");
    const auto aligned = align_to_truth(pred, truth);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < aligned.size(); ++i) hits += aligned[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double nmi(const Labels& pred, const Labels& truth) {
    require_same_length(pred, truth, "nmi");
    if (pred.empty()) throw DomainError("nmi: no samples");
    const auto t = contingency(pred, truth);
    const double n = static_cast<double>(t.n);
    std::vector<double> rows(t.pred_classes, 0.0), cols(t.true_classes, 0.0);
    for (std::size_t p = 0; p < t.pred_classes; ++p) {
        for (std::size_t c = 0; c < t.true_classes; ++c) {
            rows[p] += static_cast<double>(t.at(p, c));
            cols[c] += static_cast<double>(t.at(p, c));
        }
    }
    auto h = [n](const std::vector<double>& marginal) {
        double out = 0.0;
        for (double m : marginal) {
            if (m > 0.0) out -= (m / n) * std::log(m / n);
        }
        return out;
    };
    const double h_pred = h(rows);
    const double h_true = h(cols);
    if (h_pred == 0.0 && h_true == 0.0) return 1.0;  // both single-cluster: same partition
    if (h_pred == 0.0 || h_true == 0.0) return 0.0;
    double mi = 0.0;
    for (std::size_t p = 0; p < t.pred_classes; ++p) {
        for (std::size_t c = 0; c < t.true_classes; ++c) {
            const double nij = static_cast<double>(t.at(p, c));
            if (nij > 0.0) mi += (nij / n) * std::log(n * nij / (rows[p] * cols[c]));
        }
    }
    return std::clamp(mi / std::sqrt(h_pred * h_true), 0.0, 1.0);
}

double ari(const Labels& pred, const Labels& truth) {
    require_same_length(pred, truth, "ari");
    if (pred.empty()) throw DomainError("ari: no samples");
    const auto t = contingency(pred, truth);
    std::vector<double> rows(t.pred_classes, 0.0), cols(t.true_classes, 0.0);
    double index = 0.0;
    for (std::size_t p = 0; p < t.pred_classes; ++p) {
        for (std::size_t c = 0; c < t.true_classes; ++c) {
            const double nij = static_cast<double>(t.at(p, c));
            rows[p] += nij;
            cols[c] += nij;
            index += choose2(nij);
        }
    }
    double sum_rows = 0.0, sum_cols = 0.0;
    for (double r : rows) sum_rows += choose2(r);
    for (double c : cols) sum_cols += choose2(c);
    const double pairs = choose2(static_cast<double>(t.n));
    const double expected = pairs > 0.0 ? sum_rows * sum_cols / pairs : 0.0;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    // Zero denominator only when both partitions are all singletons or both a
    // single block, i.e. identical.
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

ClusteringScores score(const Labels& pred, const Labels& truth) {
    return {accuracy(pred, truth), nmi(pred, truth), ari(pred, truth)};
}

// ---- bias / variance ----

BVEntry decompose(const std::vector<Labels>& runs, const Labels& truth) {
    if (runs.size() < 2) throw DomainError("bias/variance needs at least 2 runs");
    if (truth.empty()) throw DomainError("bias/variance: no samples");
    BVEntry entry;
    entry.run_count = runs.size();
    std::vector<Labels> aligned;
    aligned.reserve(runs.size());
    for (const auto& run : runs) {
        require_same_length(run, truth, "bias/variance");
        aligned.push_back(align_to_truth(run, truth));
        entry.run_accuracy.push_back(accuracy(run, truth));
    }
    const double r_count = static_cast<double>(runs.size());
    double wrong = 0.0;
    double spread = 0.0;
    std::map<std::uint32_t, std::size_t> votes;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        votes.clear();
        for (const auto& run : aligned) ++votes[run[i]];
        std::uint32_t main = 0;
        std::size_t best = 0;
        for (const auto& [label, count] : votes) {
            if (count > best) {
                best = count;
                main = label;
            }
        }
        if (main != truth[i]) wrong += 1.0;
        spread += (r_count - static_cast<double>(best)) / r_count;
    }
    const double n = static_cast<double>(truth.size());
    entry.bias = wrong / n;
    entry.variance = spread / n;
    return entry;
}

double soft_variance(const std::vector<SoftAssignment>& runs, const Labels& truth) {
    if (runs.size() < 2) throw DomainError("soft variance needs at least 2 runs");
    const std::size_t n = truth.size();
    std::size_t width = label_span(truth);
    for (const auto& p : runs) width += p.cols();
    std::vector<Matrix> aligned;
    const std::size_t classes = label_span(truth);
    for (const auto& p : runs) {
        if (p.rows() != n) throw ShapeError("soft variance: probability rows differ from label count");
        // match columns to classes on the probability mass they share
        std::vector<std::vector<double>> profit(p.cols(), std::vector<double>(classes, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < p.cols(); ++c) profit[c][truth[i]] += p(i, c);
        }
        const auto match = max_weight_assignment(profit);
        std::size_t fresh = classes;
        Matrix m(n, width, 0.0);
        std::vector<std::size_t> column(p.cols());
        for (std::size_t c = 0; c < p.cols(); ++c) column[c] = match[c] >= 0 ? static_cast<std::size_t>(match[c]) : fresh++;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < p.cols(); ++c) m(i, column[c]) += p(i, c);
        }
        aligned.push_back(std::move(m));
    }
    double total = 0.0;
    std::vector<double> mean(width);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(mean.begin(), mean.end(), 0.0);
        for (const auto& m : aligned) {
            for (std::size_t c = 0; c < width; ++c) mean[c] += m(i, c) / static_cast<double>(aligned.size());
        }
        for (const auto& m : aligned) {
            double sq = 0.0;
            for (std::size_t c = 0; c < width; ++c) sq += (m(i, c) - mean[c]) * (m(i, c) - mean[c]);
            total += 0.5 * sq;
        }
    }
    return total / static_cast<double>(n * aligned.size());
}

namespace {

template <typename Job>
void run_pool(std::size_t jobs, std::size_t workers, Job&& job) {
    std::vector<std::exception_ptr> errors(jobs);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
            try {
                job(j);
            } catch (...) {
                errors[j] = std::current_exception();
            }
        }
    };
    const std::size_t count = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(jobs, 1));
    if (count == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < count; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::size_t truth_classes(const Labels& truth) {
    const std::size_t k = label_span(truth);
    if (k < 2) throw DomainError("ground truth must contain at least 2 classes");
    return k;
}

}  // namespace

BVEntry bias_variance(const Modalities& data, const Labels& truth, Configuration configuration,
                      const BVOptions& options) {
    if (options.runs < 2) throw ConfigError("bias/variance: run count must be >= 2");
    if (truth.size() != data.images.rows()) throw ShapeError("bias/variance: labels differ from sample count");
    text_input(configuration, data);  // fail before training when a modality is missing
    const std::size_t clusters = truth_classes(truth);
    const auto samples = bootstrap(data.images.rows(), options.runs, options.seed);

    std::vector<Labels> predictions(samples.size());
    std::vector<SoftAssignment> probabilities(samples.size());
    run_pool(samples.size(), options.workers, [&](std::size_t r) {
        const auto run = train_pipeline(configuration, data.subset(samples[r].indices), options.settings, clusters,
                                        samples[r].seed);
        probabilities[r] = predict_proba(run, data);
        predictions[r] = argmax_rows(probabilities[r]);
    });

    BVEntry entry = decompose(predictions, truth);
    entry.configuration = configuration;
    if (options.soft) entry.soft_variance = soft_variance(probabilities, truth);
    return entry;
}

std::vector<AblationRow> ablation_matrix(const Modalities& data, const Labels& truth,
                                         const std::vector<Configuration>& configurations,
                                         const std::vector<std::uint64_t>& seeds, const PipelineSettings& settings) {
    if (truth.size() != data.images.rows()) throw ShapeError("ablation: labels differ from sample count");
    std::string missing;
    for (auto c : configurations) {
        try {
            text_input(c, data);
        } catch (const ConfigError& e) {
            missing += std::string(missing.empty() ? "" : "; ") + e.what();
        }
    }
    if (!missing.empty()) throw ConfigError("ablation inputs missing: " + missing);
    const std::size_t clusters = truth_classes(truth);

    std::vector<AblationRow> rows;
    for (auto c : configurations) {
        for (auto seed : seeds) {
            const auto run = train_pipeline(c, data, settings, clusters, seed);
            rows.push_back({c, seed, score(predict(run, data), truth)});
        }
    }
    return rows;
}

namespace {

std::ofstream open_report(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << std::setprecision(10);
    return out;
}

}  // namespace

void write_bias_variance_csv(const std::vector<BVEntry>& entries, const std::filesystem::path& path) {
    auto out = open_report(path);
    out << "configuration,bias,variance,soft_variance,run_count,mean_run_acc\n";
    for (const auto& e : entries) {
        double mean_acc = 0.0;
        for (double a : e.run_accuracy) mean_acc += a / static_cast<double>(e.run_accuracy.size());
        out << to_string(e.configuration) << ',' << e.bias << ',' << e.variance << ',';
        if (e.soft_variance) out << *e.soft_variance;
        out << ',' << e.run_count << ',' << mean_acc << '\n';
    }
}

void write_bias_variance_jsonl(const std::vector<BVEntry>& entries, const std::filesystem::path& path) {
    auto out = open_report(path);
    for (const auto& e : entries) {
        nlohmann::ordered_json j = {{"configuration", to_string(e.configuration)},
                                    {"bias", e.bias},
                                    {"variance", e.variance},
                                    {"run_count", e.run_count},
                                    {"run_accuracy", e.run_accuracy}};
        if (e.soft_variance) j["soft_variance"] = *e.soft_variance;
        out << j.dump() << '\n';
    }
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
    auto out = open_report(path);
    out << "configuration,seed,acc,nmi,ari\n";
    for (const auto& r : rows) {
        out << to_string(r.configuration) << ',' << r.seed << ',' << r.scores.acc << ',' << r.scores.nmi << ','
            << r.scores.ari << '\n';
    }
}

}  // namespace gsec
