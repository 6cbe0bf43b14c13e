#include <doctest.h>

#include <fstream>

#include "gsec/checkpoint.hpp"
#include "gsec/evaluation.hpp"
#include "gsec/pipeline.hpp"
#include "support.hpp"

using namespace gsec;
using gsec::testing::TempDir;

TEST_CASE("configuration names") {
    for (auto c : kAllConfigurations) CHECK(parse_configuration(to_string(c)) == c);
    CHECK(parse_configuration("image_gtext") == Configuration::image_gtext);
    CHECK(parse_configuration("gsec") == Configuration::gsec);
    CHECK(parse_configuration("IMAGE+ENSEMBLE") == Configuration::image_ensemble);
    CHECK_THROWS_AS(parse_configuration("Image+Text"), ConfigError);
    CHECK(uses_ensemble(Configuration::gsec));
    CHECK_FALSE(uses_ensemble(Configuration::image_gtext));
    CHECK(uses_text(Configuration::image_mtext));
    CHECK_FALSE(uses_text(Configuration::image_ensemble));
}

TEST_CASE("stage configs") {
    PipelineSettings s;
    s.ensemble_size = 7;
    const auto [single_inner, single_outer] = stage_configs(Configuration::image, s, 4, 9);
    CHECK(single_inner.ensemble_size == 1);
    CHECK_FALSE(single_inner.train_modulators);
    CHECK(single_inner.modulator_init == ModulatorInit::ones);
    CHECK(single_inner.clusters == 4);
    const auto [ens_inner, ens_outer] = stage_configs(Configuration::gsec, s, 4, 9);
    CHECK(ens_inner.ensemble_size == 7);
    CHECK(ens_inner.train_modulators);
    CHECK(ens_inner.seed != ens_outer.seed);
    CHECK(ens_inner.seed == single_inner.seed);
    (void)single_outer;
}

TEST_CASE("modality selection") {
    Modalities data;
    data.images = Matrix(4, 2, 1.0);
    data.generated_text = Matrix(4, 3, 2.0);
    CHECK(&text_input(Configuration::image, data) == &data.images);
    CHECK(&text_input(Configuration::gsec, data) == &*data.generated_text);
    CHECK_THROWS_AS(text_input(Configuration::image_mtext, data), ConfigError);
    CHECK(encoder_input(Configuration::image_ensemble, data).cols() == 2);
    CHECK(encoder_input(Configuration::image_gtext, data).cols() == 5);
    const std::vector<std::size_t> rows = {3, 3, 0};
    const auto sub = data.subset(rows);
    CHECK(sub.images.rows() == 3);
    CHECK(sub.generated_text->rows() == 3);
    CHECK_FALSE(sub.matched_text.has_value());
}

TEST_CASE("end-to-end pipeline on separated data") {
    SyntheticSpec spec;
    spec.n = 300;
    spec.seed = 10;
    const auto ds = generate_synthetic(spec);
    Modalities data;
    data.images = ds.images.cast<double>();
    data.matched_text = ds.texts->cast<double>();
    PipelineSettings s;
    s.inner.epochs = 60;
    s.inner.batch_size = 64;
    s.inner.learning_rate = 0.01;
    s.outer.epochs = 60;
    s.outer.batch_size = 64;
    s.outer.learning_rate = 0.01;
    s.ensemble_size = 4;

    const auto run = train_pipeline(Configuration::image_mtext, data, s, 3, 11);
    const auto pred = predict(run, data);
    CHECK(accuracy(pred, *ds.labels) >= 0.95);
    const auto again = train_pipeline(Configuration::image_mtext, data, s, 3, 11);
    CHECK(predict(again, data) == pred);
    const auto probs = predict_proba(run, data);
    CHECK(probs.rows() == 300);
    CHECK(probs.cols() == 3);
}

TEST_CASE("checkpoints") {
    TempDir dir("ckpt");
    const auto model = InnerModel::create(4, 5, 3, 2, ModulatorInit::near_one, 12);
    write_checkpoint(to_checkpoint(model, R"({"seed":12})"), dir / "inner.ckpt");
    const auto back = read_checkpoint(dir / "inner.ckpt");
    CHECK(back.metadata == R"({"seed":12})");
    CHECK(flatten(inner_from_checkpoint(back)) == flatten(model));
    CHECK_THROWS_AS(back.get("nope"), FormatError);

    Rng rng(13);
    for (std::size_t hidden : {0u, 3u}) {
        const auto enc = TaskEncoder::create(6, 3, hidden, rng);
        write_checkpoint(to_checkpoint(enc), dir / "outer.ckpt");
        const auto e2 = encoder_from_checkpoint(read_checkpoint(dir / "outer.ckpt"));
        CHECK(flatten(e2) == flatten(enc));
        CHECK(e2.linear() == enc.linear());
    }

    SUBCASE("corruption") {
        std::ifstream in(dir / "inner.ckpt", std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        {
            std::ofstream out(dir / "short.ckpt", std::ios::binary);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 8));
        }
        CHECK_THROWS_AS(read_checkpoint(dir / "short.ckpt"), CorruptionError);
        bytes[0] = 'Z';
        {
            std::ofstream out(dir / "magic.ckpt", std::ios::binary);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        }
        CHECK_THROWS_AS(read_checkpoint(dir / "magic.ckpt"), FormatError);
    }
    SUBCASE("wrong tensor set") {
        Checkpoint c;
        c.tensors.emplace_back("w1", Matrix(2, 2, 1.0));
        CHECK_THROWS_AS(inner_from_checkpoint(c), FormatError);
    }
}
