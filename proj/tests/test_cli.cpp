#include <doctest.h>

#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "commands.hpp"
#include "gsec/data_io.hpp"
#include "gsec/evaluation.hpp"
#include "support.hpp"

using namespace gsec;
using gsec::testing::TempDir;

namespace {

int invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "gsec");
    return gsec::cli::run(args);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int synth(const TempDir& dir, const std::string& sub, std::size_t n = 150) {
    return invoke({"synth", "-o", (dir / sub).string(), "--seed", "3", "-n", std::to_string(n)});
}

}  // namespace

TEST_CASE("synth is reproducible and re-ingests") {
    TempDir dir("cli-synth");
    REQUIRE(synth(dir, "a") == 0);
    REQUIRE(synth(dir, "b") == 0);
    for (const char* f : {"images.gsec", "texts.gsec", "labels.gsecl", "manifest-synth.json"}) {
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    SyntheticSpec spec;
    spec.n = 150;
    spec.seed = 3;
    const auto data = generate_synthetic(spec);
    CHECK(read_embeddings(dir / "a" / "images.gsec") == data.images);
    CHECK(read_labels(dir / "a" / "labels.gsecl") == *data.labels);

    const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest-synth.json"));
    CHECK(manifest.at("command") == "synth");
    CHECK(manifest.at("seed") == 3);
    CHECK(manifest.at("artifacts").size() == 3);
}

TEST_CASE("synth rejects more clusters than samples") {
    TempDir dir("cli-bad");
    CHECK(invoke({"synth", "-o", dir.path().string(), "-n", "2", "-k", "3"}) != 0);
}

TEST_CASE("parse errors and unknown names are config errors") {
    CHECK(invoke({"train", "--bogus"}) == cli::kExitConfig);
    CHECK(invoke({"frobnicate"}) == cli::kExitConfig);
    TempDir dir("cli-conf");
    REQUIRE(synth(dir, "d") == 0);
    const auto d = (dir / "d").string();
    CHECK(invoke({"train", "-o", (dir / "t").string(), "--images", d + "/images.gsec", "--texts", d + "/texts.gsec",
               "-c", "Image+Text", "-k", "3"}) == cli::kExitConfig);
    CHECK(invoke({"train", "-o", (dir / "t").string(), "--images", d + "/images.gsec", "--confidence", "maybe"}) ==
          cli::kExitConfig);
}

TEST_CASE("train, eval and the artifact contract") {
    TempDir dir("cli-train");
    REQUIRE(synth(dir, "d") == 0);
    const auto d = (dir / "d").string();
    const std::vector<std::string> base = {"train", "--images", d + "/images.gsec", "--texts", d + "/texts.gsec",
                                           "-c", "Image+M-Text", "-k", "3", "--epochs", "60", "--outer-epochs", "60",
                                           "--batch-size", "50", "--lr", "0.01", "--seed", "4"};
    auto with_out = [&](const std::string& out) {
        auto args = base;
        args.insert(args.end(), {"-o", (dir / out).string()});
        return args;
    };
    REQUIRE(invoke(with_out("r1")) == 0);
    REQUIRE(invoke(with_out("r2")) == 0);
    for (const char* f : {"inner.ckpt", "outer.ckpt", "assignments.gsecl", "inner_loss.csv", "manifest-train.json"}) {
        CHECK(slurp(dir / "r1" / f) == slurp(dir / "r2" / f));
    }
    std::ifstream inner(dir / "r1" / "inner_loss.csv"), outer(dir / "r1" / "outer_loss.csv");
    std::string header;
    std::getline(inner, header);
    CHECK(header == "epoch,L_dist,L_conf,L_bal,L_inner");
    std::getline(outer, header);
    CHECK(header == "epoch,L_align,H(p_bar),L_outer");

    const auto pred = (dir / "r1" / "assignments.gsecl").string();
    REQUIRE(invoke({"eval", "-o", (dir / "e").string(), "--pred", pred, "--labels", d + "/labels.gsecl"}) == 0);
    const auto metrics = nlohmann::json::parse(slurp(dir / "e" / "metrics.json"));
    const auto p = read_labels(pred), t = read_labels(d + "/labels.gsecl");
    CHECK(metrics.at("acc").get<double>() == doctest::Approx(accuracy(p, t)));
    CHECK(metrics.at("nmi").get<double>() == doctest::Approx(nmi(p, t)));
    CHECK(metrics.at("ari").get<double>() == doctest::Approx(ari(p, t)));
    CHECK(metrics.at("acc").get<double>() >= 0.95);

    SUBCASE("a perfect prediction scores one everywhere") {
        REQUIRE(invoke({"eval", "-o", (dir / "p").string(), "--pred", d + "/labels.gsecl", "--labels",
                     d + "/labels.gsecl"}) == 0);
        const auto perfect = nlohmann::json::parse(slurp(dir / "p" / "metrics.json"));
        CHECK(perfect.at("acc") == 1.0);
        CHECK(perfect.at("nmi") == 1.0);
        CHECK(perfect.at("ari") == 1.0);
    }
    SUBCASE("eval without labels") {
        CHECK(invoke({"eval", "-o", (dir / "x").string(), "--pred", pred}) == cli::kExitConfig);
    }
}

TEST_CASE("missing inputs name the gap") {
    TempDir dir("cli-missing");
    REQUIRE(synth(dir, "d") == 0);
    const auto d = (dir / "d").string();
    CHECK(invoke({"train", "-o", (dir / "t").string(), "--images", d + "/images.gsec", "-c", "GSEC", "-k", "3"}) ==
          cli::kExitConfig);
    CHECK(invoke({"train", "-o", (dir / "t").string(), "--images", d + "/images.gsec", "--texts", d + "/nope.gsec",
               "-k", "3"}) == cli::kExitConfig);
    CHECK(invoke({"train", "-o", (dir / "t").string(), "--images", d + "/images.gsec", "-k", "1"}) == cli::kExitConfig);
}

TEST_CASE("semantic in mock mode") {
    TempDir dir("cli-sem");
    REQUIRE(synth(dir, "d", 200) == 0);
    const auto images = (dir / "d" / "images.gsec").string();
    REQUIRE(invoke({"semantic", "-o", (dir / "s1").string(), "--images", images, "-k", "3", "--seed", "5"}) == 0);
    REQUIRE(invoke({"semantic", "-o", (dir / "s2").string(), "--images", images, "-k", "3", "--seed", "5"}) == 0);
    CHECK(slurp(dir / "s1" / "text_embeddings.gsec") == slurp(dir / "s2" / "text_embeddings.gsec"));
    CHECK(slurp(dir / "s1" / "manifest-semantic.json") == slurp(dir / "s2" / "manifest-semantic.json"));
    CHECK(read_embeddings(dir / "s1" / "text_embeddings.gsec").rows() == 200);

    SUBCASE("live mode against a closed port is a client error") {
        int port = 0;
        {
            httplib::Server probe;
            port = probe.bind_to_any_port("127.0.0.1");
        }
        const std::string url = "http://127.0.0.1:" + std::to_string(port);
        CHECK(invoke({"semantic", "-o", (dir / "live").string(), "--images", images, "-k", "3", "--live", "--mllm-url",
                   url, "--encoder-url", url, "--timeout", "2", "--max-retries", "0"}) == cli::kExitClient);
    }
    SUBCASE("live mode needs endpoints") {
        CHECK(invoke({"semantic", "-o", (dir / "live").string(), "--images", images, "--live"}) == cli::kExitConfig);
    }
}

TEST_CASE("config file with flag overrides") {
    TempDir dir("cli-cfg");
    {
        std::ofstream cfg(dir / "run.toml");
        cfg << "[synth]\nn = 90\nclusters = 3\nseed = 8\nout = \"" << (dir / "from-file").generic_string() << "\"\n";
    }
    REQUIRE(invoke({"--config", (dir / "run.toml").string(), "synth"}) == 0);
    CHECK(read_labels(dir / "from-file" / "labels.gsecl").size() == 90);
    REQUIRE(invoke({"--config", (dir / "run.toml").string(), "synth", "-n", "60"}) == 0);
    CHECK(read_labels(dir / "from-file" / "labels.gsecl").size() == 60);
}

TEST_CASE("bias-variance and ablate commands") {
    TempDir dir("cli-bv");
    REQUIRE(synth(dir, "d", 120) == 0);
    const auto d = (dir / "d").string();
    const std::vector<std::string> common = {"--images", d + "/images.gsec", "--texts", d + "/texts.gsec",
                                             "--labels", d + "/labels.gsecl", "-k", "3", "--epochs", "5",
                                             "--outer-epochs", "5", "--ensemble-size", "2"};
    auto args = std::vector<std::string>{"bias-variance", "-o", (dir / "bv").string(), "--runs", "2",
                                         "--configurations", "Image", "Image+M-Text", "--soft-variance"};
    args.insert(args.end(), common.begin(), common.end());
    REQUIRE(invoke(args) == 0);
    std::ifstream csv(dir / "bv" / "bias_variance.csv");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 3);
    CHECK(std::filesystem::exists(dir / "bv" / "bias_variance.jsonl"));

    auto bad = args;
    bad[6] = "Image+Text";
    bad[2] = (dir / "bv2").string();
    CHECK(invoke(bad) == cli::kExitConfig);

    auto ab = std::vector<std::string>{"ablate", "-o", (dir / "ab").string(), "--configurations", "Image",
                                       "--seeds", "1", "2"};
    ab.insert(ab.end(), common.begin(), common.end());
    REQUIRE(invoke(ab) == 0);
    std::ifstream abl(dir / "ab" / "ablation.csv");
    std::getline(abl, line);
    CHECK(line == "configuration,seed,acc,nmi,ari");
}
