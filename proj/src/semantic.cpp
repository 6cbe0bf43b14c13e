#include "gsec/semantic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "gsec/error.hpp"

namespace gsec {

std::size_t cluster_count(std::size_t n, std::size_t expected_clusters) {
    if (n == 0) throw DomainError("cluster_count: n must be >= 1");
    if (expected_clusters < 2) throw DomainError("cluster_count: K must be >= 2");
    const std::size_t by_size = (n + 299) / 300;
    return std::min(std::max(by_size, 3 * expected_clusters), n);
}

// ---- k-means ----

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        total += diff * diff;
    }
    return total;
}

Matrix kmeans_plus_plus(const Matrix& points, std::size_t clusters, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centers(clusters, points.cols());
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<bool> taken(n, false);

    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    for (std::size_t c = 0; c < clusters; ++c) {
        if (c > 0) {
            double total = 0.0;
            for (double v : best) total += v;
            if (total > 0.0) {
                const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
                double running = 0.0;
                pick = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    running += best[i];
                    if (running > target && best[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
                while (best[pick] == 0.0 && pick > 0) --pick;
            } else {
                // every remaining point coincides with a chosen center
                std::vector<std::size_t> free;
                for (std::size_t i = 0; i < n; ++i)
                    if (!taken[i]) free.push_back(i);
                pick = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
            }
        }
        taken[pick] = true;
        std::copy_n(points.row(pick).begin(), points.cols(), centers.row(c).begin());
        for (std::size_t i = 0; i < n; ++i) {
            best[i] = std::min(best[i], squared_distance(points.row(i), centers.row(c)));
        }
    }
    return centers;
}

}  // namespace

KMeansResult kmeans_single(const Matrix& points, std::size_t clusters, std::size_t max_iterations,
                           std::uint64_t seed) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    if (clusters == 0) throw DomainError("kmeans: need at least one cluster");
    if (clusters > n) {
        throw DomainError("kmeans: " + std::to_string(clusters) + " clusters for " + std::to_string(n) + " points");
    }
    Rng rng(seed);
    KMeansResult result;
    result.centers = kmeans_plus_plus(points, clusters, rng);
    result.assignment.assign(n, 0);

    std::vector<double> cost(n, 0.0);
    for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iterations, 1); ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best_c = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < clusters; ++c) {
                const double dist = squared_distance(points.row(i), result.centers.row(c));
                if (dist < best_d) {
                    best_d = dist;
                    best_c = c;
                }
            }
            if (iter == 0 || best_c != result.assignment[i]) changed = true;
            result.assignment[i] = best_c;
            cost[i] = best_d;
            inertia += best_d;
        }
        result.inertia = inertia;
        result.inertia_history.push_back(inertia);
        result.iterations = iter + 1;
        if (!changed) break;

        Matrix sums(clusters, d, 0.0);
        std::vector<std::size_t> counts(clusters, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = result.assignment[i];
            ++counts[c];
            for (std::size_t j = 0; j < d; ++j) sums(c, j) += points(i, j);
        }
        std::vector<bool> used(n, false);
        for (std::size_t c = 0; c < clusters; ++c) {
            if (counts[c] > 0) {
                for (std::size_t j = 0; j < d; ++j) result.centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
                continue;
            }
            // Empty cluster: move the center onto the worst-served point.
            std::size_t far = 0;
            double far_cost = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!used[i] && cost[i] > far_cost) {
                    far_cost = cost[i];
                    far = i;
                }
            }
            used[far] = true;
            cost[far] = 0.0;
            std::copy_n(points.row(far).begin(), d, result.centers.row(c).begin());
        }
    }
    return result;
}

KMeansResult kmeans(const Matrix& points, std::size_t clusters, const KMeansConfig& config, std::uint64_t seed) {
    const std::size_t restarts = std::max<std::size_t>(config.restarts, 1);
    KMeansResult best;
    for (std::size_t r = 0; r < restarts; ++r) {
        auto run = kmeans_single(points, clusters, config.max_iterations, derive_seed(seed, r));
        if (r == 0 || run.inertia < best.inertia) best = std::move(run);
    }
    return best;
}

// ---- representatives ----

std::size_t RepresentativeSelection::total() const {
    std::size_t count = 0;
    for (const auto& c : per_cluster) count += c.size();
    return count;
}

RepresentativeSelection select_representatives(const KMeansResult& result, const Matrix& points,
                                               std::size_t per_cluster) {
    if (per_cluster == 0) throw DomainError("select_representatives: need at least one representative");
    if (result.assignment.size() != points.rows()) {
        throw ShapeError("select_representatives: assignment length differs from point count");
    }
    const std::size_t clusters = result.centers.rows();
    std::vector<std::vector<std::pair<double, std::size_t>>> members(clusters);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const std::size_t c = result.assignment[i];
        if (c >= clusters) throw DomainError("select_representatives: cluster id out of range");
        members[c].emplace_back(squared_distance(points.row(i), result.centers.row(c)), i);
    }

    RepresentativeSelection sel;
    sel.per_cluster.resize(clusters);
    for (std::size_t c = 0; c < clusters; ++c) {
        auto& m = members[c];
        if (m.empty()) {
            sel.warnings.push_back("cluster " + std::to_string(c) + " is empty; skipped");
            continue;
        }
        std::sort(m.begin(), m.end());
        const std::size_t size = m.size();
        if (size <= per_cluster) {
            for (const auto& e : m) sel.per_cluster[c].push_back(e.second);
            continue;
        }
        for (std::size_t j = 0; j < per_cluster; ++j) {
            // ceil(j * (size - 1) / (r - 1))
            const std::size_t pos =
                per_cluster == 1 ? 0 : (j * (size - 1) + per_cluster - 2) / (per_cluster - 1);
            sel.per_cluster[c].push_back(m[pos].second);
        }
    }
    return sel;
}

// ---- descriptions ----

std::string build_prompt() { return std::string(kDescriptionPrompt); }

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n\"'");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n\"'");
    return s.substr(first, last - first + 1);
}

bool follows_template(const std::string& reply) { return reply.find(kDescriptionLead) != std::string::npos; }

}  // namespace

std::string normalize_description(const std::string& reply) {
    std::string flat = reply;
    std::replace(flat.begin(), flat.end(), '\n', ' ');
    std::replace(flat.begin(), flat.end(), '\r', ' ');
    flat = trim(flat);
    if (flat.empty()) throw FormatError("empty description");
    if (const auto at = flat.find(kDescriptionLead); at != std::string::npos) {
        return trim(flat.substr(at));
    }
    return std::string(kDescriptionLead) + " " + flat;
}

std::vector<ClassDescription> generate_descriptions(const RepresentativeSelection& reps,
                                                    const std::vector<std::string>& ids, MllmClient& client,
                                                    const DescriptionPolicy& policy) {
    std::vector<ClassDescription> out;
    for (std::size_t c = 0; c < reps.per_cluster.size(); ++c) {
        for (std::size_t idx : reps.per_cluster[c]) {
            if (idx >= ids.size()) throw DomainError("generate_descriptions: sample index out of range");
            ClassDescription d;
            d.sample_id = ids[idx];
            d.sample_index = idx;
            d.cluster = c;
            out.push_back(std::move(d));
        }
    }
    if (out.empty()) throw DomainError("generate_descriptions: no representatives");

    const std::string prompt = build_prompt();
    auto describe_one = [&](ClassDescription& d) {
        ImageRef image;
        image.sample_id = d.sample_id;
        if (!policy.image_root.empty()) {
            image.uri = (std::filesystem::path(policy.image_root) / (d.sample_id + policy.image_suffix)).string();
        }
        std::string reply;
        for (std::size_t attempt = 0;; ++attempt) {
            const bool last = attempt >= policy.max_retries;
            try {
                reply = client.describe(prompt, image);
            } catch (const ClientError& e) {
                if (last) throw ClientError(e.what(), d.sample_id);
                continue;
            }
            if (follows_template(reply) || last) break;
        }
        if (trim(reply).empty()) throw FormatError("empty description for sample " + d.sample_id);
        d.text = normalize_description(reply);
    };

    const std::size_t workers = std::clamp<std::size_t>(policy.max_in_flight, 1, out.size());
    std::vector<std::exception_ptr> errors(out.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < out.size(); i = next++) {
            try {
                describe_one(out[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

Matrix encode_descriptions(std::vector<ClassDescription>& descriptions, TextEncoderClient& encoder) {
    if (descriptions.empty()) throw DomainError("encode_descriptions: no descriptions");
    std::vector<std::string> texts;
    texts.reserve(descriptions.size());
    for (const auto& d : descriptions) texts.push_back(d.text);
    auto vectors = encoder.encode(texts);
    if (vectors.size() != descriptions.size()) {
        throw ClientError("text encoder returned " + std::to_string(vectors.size()) + " vectors for " +
                          std::to_string(descriptions.size()) + " descriptions");
    }
    const std::size_t dim = vectors.front().size();
    if (dim == 0) throw FormatError("text encoder returned empty vectors");
    Matrix out(descriptions.size(), dim);
    for (std::size_t j = 0; j < vectors.size(); ++j) {
        if (vectors[j].size() != dim) {
            throw ClientError("text encoder returned vectors of differing length", descriptions[j].sample_id);
        }
        for (double v : vectors[j]) {
            if (!std::isfinite(v)) throw ClientError("non-finite text embedding", descriptions[j].sample_id);
        }
        std::copy(vectors[j].begin(), vectors[j].end(), out.row(j).begin());
        descriptions[j].embedding = std::move(vectors[j]);
    }
    return out;
}

Matrix aggregate_per_cluster(const std::vector<ClassDescription>& descriptions, const Matrix& embeddings) {
    if (descriptions.size() != embeddings.rows()) {
        throw ShapeError("aggregate_per_cluster: description count differs from embedding rows");
    }
    std::map<std::size_t, std::pair<std::vector<double>, std::size_t>> sums;
    for (std::size_t j = 0; j < descriptions.size(); ++j) {
        auto& [sum, count] = sums[descriptions[j].cluster];
        sum.resize(embeddings.cols(), 0.0);
        for (std::size_t c = 0; c < embeddings.cols(); ++c) sum[c] += embeddings(j, c);
        ++count;
    }
    Matrix out(sums.size(), embeddings.cols());
    std::size_t row = 0;
    for (const auto& [cluster, entry] : sums) {
        for (std::size_t c = 0; c < embeddings.cols(); ++c) {
            out(row, c) = entry.first[c] / static_cast<double>(entry.second);
        }
        ++row;
    }
    return out;
}

// ---- weighted text embeddings ----

namespace {

std::vector<double> row_norms(const Matrix& m, const char* what) {
    std::vector<double> norms(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        norms[r] = norm(m.row(r));
        if (norms[r] == 0.0 || !std::isfinite(norms[r])) {
            throw DomainError(std::string(what) + " row " + std::to_string(r) + " has zero or non-finite norm");
        }
    }
    return norms;
}

}  // namespace

Matrix class_weights(const Matrix& images, const Matrix& class_embeddings, double temperature) {
    if (!(temperature > 0.0)) throw DomainError("class_weights: temperature must be positive");
    if (class_embeddings.rows() == 0) throw DomainError("class_weights: no class embeddings");
    if (images.cols() != class_embeddings.cols()) {
        throw ShapeError("class_weights: image dimension " + std::to_string(images.cols()) +
                         " differs from text dimension " + std::to_string(class_embeddings.cols()));
    }
    const auto image_norms = row_norms(images, "image");
    const auto class_norms = row_norms(class_embeddings, "class embedding");
    const std::size_t m = class_embeddings.rows();
    Matrix weights(images.rows(), m);
    std::vector<double> sims(m);
    for (std::size_t i = 0; i < images.rows(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            sims[j] = dot(images.row(i), class_embeddings.row(j)) / (image_norms[i] * class_norms[j]);
        }
        const auto p = softmax(sims, temperature);
        std::copy(p.begin(), p.end(), weights.row(i).begin());
    }
    return weights;
}

Matrix synthesize_text_embeddings(const Matrix& images, const Matrix& class_embeddings, double temperature) {
    const Matrix weights = class_weights(images, class_embeddings, temperature);
    const std::size_t dt = class_embeddings.cols();
    Matrix out(images.rows(), dt, 0.0);
    for (std::size_t i = 0; i < images.rows(); ++i) {
        auto t = out.row(i);
        for (std::size_t j = 0; j < class_embeddings.rows(); ++j) {
            const double w = weights(i, j);
            const auto e = class_embeddings.row(j);
            for (std::size_t c = 0; c < dt; ++c) t[c] += w * e[c];
        }
    }
    return out;
}

SemanticResult run_semantic(const Dataset& dataset, const SemanticConfig& config, MllmClient& mllm,
                            TextEncoderClient& encoder, std::uint64_t seed) {
    dataset.validate();
    const Matrix images = dataset.images.cast<double>();
    SemanticResult result;
    result.pre_clusters = cluster_count(images.rows(), config.expected_clusters);
    result.kmeans = kmeans(images, result.pre_clusters, config.kmeans, seed);
    result.representatives = select_representatives(result.kmeans, images, config.reps_per_cluster);
    result.descriptions = generate_descriptions(result.representatives, dataset.ids, mllm, config.policy);
    Matrix encoded = encode_descriptions(result.descriptions, encoder);
    result.class_embeddings = config.granularity == DescriptionGranularity::per_cluster
                                  ? aggregate_per_cluster(result.descriptions, encoded)
                                  : std::move(encoded);
    result.text_embeddings = synthesize_text_embeddings(images, result.class_embeddings, config.temperature);
    return result;
}

void write_descriptions_jsonl(const std::vector<ClassDescription>& descriptions, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    for (const auto& d : descriptions) {
        nlohmann::ordered_json line = {{"sample_id", d.sample_id}, {"cluster", d.cluster}, {"text", d.text}};
        out << line.dump() << '\n';
    }
}

std::vector<ClassDescription> read_descriptions_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<ClassDescription> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ClassDescription d;
            d.sample_id = j.at("sample_id").get<std::string>();
            d.cluster = j.at("cluster").get<std::size_t>();
            d.text = j.at("text").get<std::string>();
            out.push_back(std::move(d));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace gsec
