#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "gsec/data_io.hpp"
#include "gsec/evaluation.hpp"
#include "gsec/semantic.hpp"
#include "support.hpp"

using namespace gsec;
using gsec::testing::TempDir;

namespace {

std::vector<char> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

EmbeddingMatrix random_embeddings(std::size_t n, std::size_t d, Rng& rng) {
    std::normal_distribution<float> normal(0.0f, 10.0f);
    EmbeddingMatrix m(n, d);
    for (auto& v : m.data()) v = normal(rng);
    return m;
}

}  // namespace

TEST_CASE("embedding files round-trip bit-exactly") {
    TempDir dir("io");
    Rng rng(11);
    for (auto [n, d] : std::vector<std::pair<std::size_t, std::size_t>>{{0, 5}, {1, 1}, {7, 3}, {64, 16}}) {
        auto m = random_embeddings(n, d, rng);
        if (n > 1) {
            m(0, 0) = -0.0f;
            m(1, 0) = std::numeric_limits<float>::denorm_min();
        }
        write_embeddings(m, dir / "m.gsec");
        const auto back = read_embeddings(dir / "m.gsec");
        CHECK(back.rows() == n);
        CHECK(back.cols() == d);
        CHECK(std::memcmp(back.data().data(), m.data().data(), m.size() * sizeof(float)) == 0);
        CHECK(std::filesystem::file_size(dir / "m.gsec") == 24 + 4 * n * d);
    }
}

TEST_CASE("header layout") {
    TempDir dir("hdr");
    EmbeddingMatrix m(2, 3, 1.0f);
    write_embeddings(m, dir / "m.gsec");
    const auto bytes = slurp(dir / "m.gsec");
    REQUIRE(bytes.size() == 24 + 24);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "GSEC");
    CHECK(bytes[4] == 1);
    CHECK(bytes[8] == 2);
    CHECK(bytes[16] == 3);
}

TEST_CASE("corrupt embedding files are rejected") {
    TempDir dir("bad");
    EmbeddingMatrix m(4, 2, 0.5f);
    write_embeddings(m, dir / "m.gsec");
    const auto good = slurp(dir / "m.gsec");

    SUBCASE("truncated payload") {
        auto bytes = good;
        bytes.resize(bytes.size() - 3);
        dump(dir / "t.gsec", bytes);
        CHECK_THROWS_AS(read_embeddings(dir / "t.gsec"), CorruptionError);
    }
    SUBCASE("truncated header") {
        dump(dir / "t.gsec", std::vector<char>(good.begin(), good.begin() + 10));
        CHECK_THROWS_AS(read_embeddings(dir / "t.gsec"), CorruptionError);
    }
    SUBCASE("excess payload") {
        auto bytes = good;
        bytes.push_back(0);
        dump(dir / "t.gsec", bytes);
        CHECK_THROWS_AS(read_embeddings(dir / "t.gsec"), CorruptionError);
    }
    SUBCASE("bad magic") {
        auto bytes = good;
        bytes[0] = 'X';
        dump(dir / "t.gsec", bytes);
        CHECK_THROWS_AS(read_embeddings(dir / "t.gsec"), FormatError);
    }
    SUBCASE("unknown version") {
        auto bytes = good;
        bytes[4] = 9;
        dump(dir / "t.gsec", bytes);
        CHECK_THROWS_AS(read_embeddings(dir / "t.gsec"), FormatError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(read_embeddings(dir / "nope.gsec"), FormatError); }
}

TEST_CASE("label files round-trip") {
    TempDir dir("labels");
    Rng rng(3);
    for (std::size_t n : {0u, 1u, 100u}) {
        Labels labels = gsec::testing::random_labels(n, 7, rng);
        if (n > 0) labels[0] = 0xFFFFFFFFu;
        write_labels(labels, dir / "l.gsecl");
        CHECK(read_labels(dir / "l.gsecl") == labels);
    }
    auto bytes = slurp(dir / "l.gsecl");
    bytes.pop_back();
    dump(dir / "l.gsecl", bytes);
    CHECK_THROWS_AS(read_labels(dir / "l.gsecl"), CorruptionError);
}

TEST_CASE("csv embeddings") {
    TempDir dir("csv");
    {
        std::ofstream out(dir / "h.csv");
        out << "a,b,c\n1,2,3\n4.5,-6,7e-1\n";
    }
    const auto m = read_embeddings_csv(dir / "h.csv");
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m(1, 2) == doctest::Approx(0.7f));
    {
        std::ofstream out(dir / "n.csv");
        out << "1,2\n3,4\n";
    }
    CHECK(read_embeddings_csv(dir / "n.csv").rows() == 2);
    {
        std::ofstream out(dir / "r.csv");
        out << "1,2\n3\n";
    }
    CHECK_THROWS_AS(read_embeddings_csv(dir / "r.csv"), FormatError);
}

TEST_CASE("synthetic data") {
    SyntheticSpec spec;
    spec.n = 300;
    spec.seed = 9;
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    CHECK(a.images == b.images);
    CHECK(*a.texts == *b.texts);
    CHECK(*a.labels == *b.labels);
    a.validate();
    CHECK(a.size() == 300);
    CHECK(a.images.cols() == 16);
    CHECK(a.texts->cols() == 16);

    std::vector<std::size_t> counts(3, 0);
    for (auto l : *a.labels) ++counts[l];
    CHECK(counts == std::vector<std::size_t>{100, 100, 100});

    spec.seed = 10;
    CHECK_FALSE(generate_synthetic(spec).images == a.images);

    spec.text_dim = 5;
    CHECK(generate_synthetic(spec).texts->cols() == 5);

    SUBCASE("separation 10 is easy for k-means") {
        const auto km = kmeans(a.images.cast<double>(), 3, KMeansConfig{}, 1);
        const Labels pred(km.assignment.begin(), km.assignment.end());
        CHECK(accuracy(pred, *a.labels) >= 0.99);
    }
    SUBCASE("invalid specs") {
        SyntheticSpec bad;
        bad.n = 2;
        bad.clusters = 3;
        CHECK_THROWS_AS(generate_synthetic(bad), DomainError);
        bad = {};
        bad.clusters = 1;
        CHECK_THROWS_AS(generate_synthetic(bad), DomainError);
        bad = {};
        bad.separation = -1.0;
        CHECK_THROWS_AS(generate_synthetic(bad), DomainError);
    }
}

TEST_CASE("dataset subset keeps ids unique") {
    SyntheticSpec spec;
    spec.n = 10;
    const auto data = generate_synthetic(spec);
    const std::vector<std::size_t> rows = {3, 3, 0, 3};
    const auto sub = data.subset(rows);
    sub.validate();
    CHECK(sub.ids == std::vector<std::string>{"3", "3#1", "0", "3#2"});
    CHECK((*sub.labels)[1] == (*data.labels)[3]);
    CHECK(sub.images(1, 4) == data.images(3, 4));
}

TEST_CASE("bootstrap") {
    const auto a = bootstrap(50, 4, 7);
    const auto b = bootstrap(50, 4, 7);
    REQUIRE(a.size() == 4);
    for (std::size_t r = 0; r < 4; ++r) {
        CHECK(a[r].indices == b[r].indices);
        CHECK(a[r].seed == derive_seed(7, r));
        CHECK(a[r].indices.size() == 50);
        for (auto i : a[r].indices) CHECK(i < 50);
    }
    CHECK(a[0].indices != a[1].indices);
    // with replacement: about 1 - 1/e of the rows are distinct
    std::set<std::size_t> distinct(a[0].indices.begin(), a[0].indices.end());
    CHECK(distinct.size() < 50);
    CHECK_THROWS_AS(bootstrap(0, 2, 1), DomainError);
}

TEST_CASE("derive_seed separates streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 20; ++s) {
        for (std::uint64_t t = 0; t < 20; ++t) seen.insert(derive_seed(s, t));
    }
    CHECK(seen.size() == 400);
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST_CASE("neighbor index") {
    // points on a circle at angles 0, 10, 20, 200 degrees
    Matrix pts(4, 2);
    const double deg[] = {0.0, 10.0, 20.0, 200.0};
    for (std::size_t i = 0; i < 4; ++i) {
        pts(i, 0) = std::cos(deg[i] * M_PI / 180.0) * (i + 1.0);
        pts(i, 1) = std::sin(deg[i] * M_PI / 180.0) * (i + 1.0);
    }
    const auto idx = build_neighbor_index(pts, 2, Modality::text);
    CHECK(idx.size() == 4);
    CHECK(idx.modality == Modality::text);
    CHECK(std::vector<std::size_t>(idx.row(0).begin(), idx.row(0).end()) == std::vector<std::size_t>{1, 2});
    CHECK(std::vector<std::size_t>(idx.row(1).begin(), idx.row(1).end()) == std::vector<std::size_t>{0, 2});
    CHECK(std::vector<std::size_t>(idx.row(3).begin(), idx.row(3).end()) == std::vector<std::size_t>{0, 1});

    SUBCASE("ties go to the lower index and self is excluded") {
        Matrix same(4, 2, 1.0);
        const auto tied = build_neighbor_index(same, 2);
        CHECK(std::vector<std::size_t>(tied.row(0).begin(), tied.row(0).end()) == std::vector<std::size_t>{1, 2});
        CHECK(std::vector<std::size_t>(tied.row(2).begin(), tied.row(2).end()) == std::vector<std::size_t>{0, 1});
    }
    SUBCASE("sampling stays inside the row") {
        Rng rng(4);
        for (int t = 0; t < 50; ++t) {
            const auto j = sample_neighbor(idx, 0, rng);
            CHECK((j == 1 || j == 2));
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(build_neighbor_index(pts, 4), DomainError);
        CHECK_THROWS_AS(build_neighbor_index(pts, 0), DomainError);
        Matrix zero = pts;
        zero(2, 0) = zero(2, 1) = 0.0;
        CHECK_THROWS_AS(build_neighbor_index(zero, 1), DomainError);
    }
}

TEST_CASE("neighbor index matches a brute-force scan") {
    Rng rng(12);
    const Matrix pts = gsec::testing::random_matrix(50, 8, rng);
    const auto idx = build_neighbor_index(pts, 5);
    for (std::size_t i = 0; i < 50; ++i) {
        std::vector<std::pair<double, std::size_t>> scored;
        for (std::size_t j = 0; j < 50; ++j) {
            if (j != i) scored.emplace_back(-cosine_similarity(pts.row(i), pts.row(j)), j);
        }
        std::sort(scored.begin(), scored.end());
        for (std::size_t r = 0; r < 5; ++r) CHECK(idx.row(i)[r] == scored[r].second);
    }
}

TEST_CASE("neighbor draws are uniform") {
    Rng rng(13);
    const Matrix pts = gsec::testing::random_matrix(20, 4, rng);
    const auto idx = build_neighbor_index(pts, 5);
    std::map<std::size_t, std::size_t> counts;
    const std::size_t draws = 100000;
    for (std::size_t t = 0; t < draws; ++t) ++counts[sample_neighbor(idx, 3, rng)];
    REQUIRE(counts.size() == 5);
    double chi2 = 0.0;
    const double expected = static_cast<double>(draws) / 5.0;
    for (const auto& [j, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 13.28);  // chi-square, 4 degrees of freedom, p = 0.01
}

TEST_CASE("bootstrap keeps about 1 - 1/e distinct rows") {
    double total = 0.0;
    const std::size_t n = 1000, reps = 50;
    for (const auto& s : bootstrap(n, reps, 14)) {
        total += static_cast<double>(std::set<std::size_t>(s.indices.begin(), s.indices.end()).size()) / n;
    }
    CHECK(std::abs(total / reps - (1.0 - std::exp(-1.0))) <= 0.02);
}
