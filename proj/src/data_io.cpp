#include "gsec/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "binary_io.hpp"

namespace gsec {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// ---- binary formats ----

void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    std::vector<char> out;
    out.reserve(24 + matrix.size() * 4);
    out.insert(out.end(), kMagic, kMagic + 4);
    detail::put_u32(out, kEmbeddingVersion);
    detail::put_u64(out, matrix.rows());
    detail::put_u64(out, matrix.cols());
    for (float v : matrix.data()) detail::put_f32(out, v);
    detail::write_file(path, out);
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    detail::Reader in(bytes, path.string());
    in.expect_magic({kMagic, 4});
    const auto version = in.u32("version");
    if (version != kEmbeddingVersion) {
        throw FormatError(path.string() + ": unsupported embedding format version " + std::to_string(version));
    }
    const auto n = in.u64("row count");
    const auto d = in.u64("column count");
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d / 4) {
        throw CorruptionError(path.string() + ": implausible shape");
    }
    const std::uint64_t payload = n * d * 4;
    if (in.remaining() != payload) {
        throw CorruptionError(path.string() + ": payload is " + std::to_string(in.remaining()) +
                              " bytes, header implies " + std::to_string(payload));
    }
    EmbeddingMatrix m(n, d);
    for (auto& v : m.data()) v = in.f32("payload");
    return m;
}

void write_labels(const Labels& labels, const std::filesystem::path& path) {
    std::vector<char> out;
    out.reserve(16 + labels.size() * 4);
    out.insert(out.end(), kMagic, kMagic + 4);
    detail::put_u32(out, kLabelVersion);
    detail::put_u64(out, labels.size());
    for (auto v : labels) detail::put_u32(out, v);
    detail::write_file(path, out);
}

Labels read_labels(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    detail::Reader in(bytes, path.string());
    in.expect_magic({kMagic, 4});
    const auto version = in.u32("version");
    if (version != kLabelVersion) {
        throw FormatError(path.string() + ": unsupported label format version " + std::to_string(version));
    }
    const auto n = in.u64("label count");
    if (n > in.remaining() / 4 || in.remaining() != n * 4) {
        throw CorruptionError(path.string() + ": payload length does not match label count");
    }
    Labels labels(n);
    for (auto& v : labels) v = in.u32("payload");
    return labels;
}

EmbeddingMatrix read_embeddings_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<float> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<float> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                const float v = std::stof(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
                if (used != cell.size()) numeric = false;
                row.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;
            }
            throw FormatError(path.string() + ": non-numeric value in row " + std::to_string(rows + 1));
        }
        first = false;
        if (rows == 0) cols = row.size();
        if (row.size() != cols) {
            throw FormatError(path.string() + ": row " + std::to_string(rows + 1) + " has " +
                              std::to_string(row.size()) + " columns, expected " + std::to_string(cols));
        }
        values.insert(values.end(), row.begin(), row.end());
        ++rows;
    }
    return EmbeddingMatrix(rows, cols, std::move(values));
}

// ---- dataset ----

std::vector<std::string> default_ids(std::size_t n) {
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
    return ids;
}

void Dataset::validate() const {
    const std::size_t n = images.rows();
    if (texts && texts->rows() != n) {
        throw ShapeError("dataset: text embeddings have " + std::to_string(texts->rows()) +
                         " rows, images have " + std::to_string(n));
    }
    if (labels && labels->size() != n) {
        throw ShapeError("dataset: " + std::to_string(labels->size()) + " labels for " + std::to_string(n) +
                         " images");
    }
    if (ids.size() != n) {
        throw ShapeError("dataset: " + std::to_string(ids.size()) + " ids for " + std::to_string(n) + " images");
    }
    std::unordered_set<std::string> seen(ids.begin(), ids.end());
    if (seen.size() != ids.size()) {
        throw DomainError("dataset: sample ids are not unique");
    }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    const std::size_t d = images.cols();
    out.images = EmbeddingMatrix(indices.size(), d);
    if (texts) out.texts = EmbeddingMatrix(indices.size(), texts->cols());
    if (labels) out.labels = Labels(indices.size());
    std::unordered_map<std::size_t, std::size_t> copies;
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const std::size_t src = indices[r];
        if (src >= size()) throw DomainError("dataset subset: index out of range");
        std::copy_n(images.row(src).begin(), d, out.images.row(r).begin());
        if (texts) std::copy_n(texts->row(src).begin(), texts->cols(), out.texts->row(r).begin());
        if (labels) (*out.labels)[r] = (*labels)[src];
        const std::size_t copy = copies[src]++;
        out.ids.push_back(copy == 0 ? ids[src] : ids[src] + "#" + std::to_string(copy));
    }
    return out;
}

// ---- synthetic data ----

namespace {

// Orthonormalizes the rows of `m` in place (modified Gram-Schmidt).
void orthonormalize_rows(Matrix& m, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (int attempt = 0;; ++attempt) {
            auto row = m.row(r);
            for (std::size_t q = 0; q < r; ++q) {
                const double proj = dot(row, m.row(q));
                for (std::size_t c = 0; c < m.cols(); ++c) row[c] -= proj * m(q, c);
            }
            const double len = norm(row);
            if (len > 1e-10) {
                for (double& v : row) v /= len;
                break;
            }
            if (attempt > 8) throw DomainError("orthonormalization failed");
            for (double& v : row) v = normal(rng);
        }
    }
}

Matrix random_orthogonal_map(std::size_t out_dim, std::size_t in_dim, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const bool tall = out_dim > in_dim;
    Matrix g(tall ? in_dim : out_dim, tall ? out_dim : in_dim);
    for (auto& v : g.data()) v = normal(rng);
    orthonormalize_rows(g, rng);
    if (!tall) return g;
    Matrix t(out_dim, in_dim);
    for (std::size_t r = 0; r < out_dim; ++r)
        for (std::size_t c = 0; c < in_dim; ++c) t(r, c) = g(c, r);
    return t;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.clusters < 2) throw DomainError("generate_synthetic: need at least 2 clusters");
    if (spec.n < spec.clusters) {
        throw DomainError("generate_synthetic: n (" + std::to_string(spec.n) + ") must be >= K (" +
                          std::to_string(spec.clusters) + ")");
    }
    if (spec.dim < 2) throw DomainError("generate_synthetic: dimension must be >= 2");
    if (!(spec.separation >= 0.0) || !std::isfinite(spec.separation)) {
        throw DomainError("generate_synthetic: separation must be finite and nonnegative");
    }
    if (!(spec.modality_noise >= 0.0) || !std::isfinite(spec.modality_noise)) {
        throw DomainError("generate_synthetic: modality noise must be finite and nonnegative");
    }
    const std::size_t d = spec.dim;
    const std::size_t dt = spec.text_dim == 0 ? d : spec.text_dim;
    const std::size_t k = spec.clusters;

    Rng rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Matrix centers(k, d);
    for (auto& v : centers.data()) v = normal(rng);
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            double sq = 0.0;
            for (std::size_t c = 0; c < d; ++c) sq += (centers(a, c) - centers(b, c)) * (centers(a, c) - centers(b, c));
            min_dist = std::min(min_dist, std::sqrt(sq));
        }
    }
    const double scale = spec.separation / min_dist;
    for (auto& v : centers.data()) v *= scale;

    const Matrix map = random_orthogonal_map(dt, d, rng);

    Dataset ds;
    ds.images = EmbeddingMatrix(spec.n, d);
    ds.texts = EmbeddingMatrix(spec.n, dt);
    ds.labels = Labels(spec.n);
    ds.ids = default_ids(spec.n);
    std::vector<double> point(d);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const auto label = static_cast<std::uint32_t>(i % k);
        (*ds.labels)[i] = label;
        for (std::size_t c = 0; c < d; ++c) {
            point[c] = centers(label, c) + normal(rng);
            ds.images(i, c) = static_cast<float>(point[c]);
        }
        for (std::size_t r = 0; r < dt; ++r) {
            const double value = dot(map.row(r), point) + spec.modality_noise * normal(rng);
            (*ds.texts)(i, r) = static_cast<float>(value);
        }
    }
    return ds;
}

// ---- bootstrap ----

std::vector<BootstrapSample> bootstrap(std::size_t n, std::size_t run_count, std::uint64_t seed) {
    if (n == 0) throw DomainError("bootstrap: empty dataset");
    if (run_count == 0) throw DomainError("bootstrap: run_count must be >= 1");
    std::vector<BootstrapSample> samples(run_count);
    for (std::size_t r = 0; r < run_count; ++r) {
        samples[r].seed = derive_seed(seed, r);
        Rng rng(samples[r].seed);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        samples[r].indices.resize(n);
        for (auto& idx : samples[r].indices) idx = pick(rng);
    }
    return samples;
}

std::vector<BootstrapSample> bootstrap(const Dataset& dataset, std::size_t run_count, std::uint64_t seed) {
    return bootstrap(dataset.size(), run_count, seed);
}

// ---- neighbors ----

NeighborIndex build_neighbor_index(const Matrix& points, std::size_t k, Modality modality) {
    const std::size_t n = points.rows();
    if (k == 0) throw DomainError("build_neighbor_index: k must be >= 1");
    if (k >= n) {
        throw DomainError("build_neighbor_index: k (" + std::to_string(k) + ") must be < n (" +
                          std::to_string(n) + ")");
    }
    Matrix unit = points;
    for (std::size_t i = 0; i < n; ++i) {
        auto row = unit.row(i);
        const double len = norm(row);
        if (len == 0.0) {
            throw DomainError("build_neighbor_index: row " + std::to_string(i) + " has zero norm");
        }
        for (double& v : row) v /= len;
    }

    NeighborIndex index;
    index.k = k;
    index.modality = modality;
    index.neighbors.resize(n * k);
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        scored.clear();
        const auto a = unit.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            scored.emplace_back(dot(a, unit.row(j)), j);
        }
        auto better = [](const auto& x, const auto& y) {
            return x.first > y.first || (x.first == y.first && x.second < y.second);
        };
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), better);
        for (std::size_t c = 0; c < k; ++c) index.neighbors[i * k + c] = scored[c].second;
    }
    return index;
}

std::size_t sample_neighbor(const NeighborIndex& index, std::size_t i, Rng& rng) {
    if (i >= index.size()) throw DomainError("sample_neighbor: sample index out of range");
    std::uniform_int_distribution<std::size_t> pick(0, index.k - 1);
    return index.row(i)[pick(rng)];
}

}  // namespace gsec
