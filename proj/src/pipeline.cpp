#include "gsec/pipeline.hpp"

#include <algorithm>
#include <cctype>

#include "gsec/error.hpp"

namespace gsec {

namespace {

struct ConfigurationName {
    Configuration id;
    std::string_view display;
    std::string_view snake;
};

constexpr std::array<ConfigurationName, 5> kNames = {{
    {Configuration::image, "Image", "image"},
    {Configuration::image_ensemble, "Image+Ensemble", "image_ensemble"},
    {Configuration::image_mtext, "Image+M-Text", "image_mtext"},
    {Configuration::image_gtext, "Image+G-Text", "image_gtext"},
    {Configuration::gsec, "GSEC", "gsec"},
}};

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> indices) {
    Matrix out(indices.size(), m.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= m.rows()) throw DomainError("row index out of range");
        std::copy(m.row(indices[i]).begin(), m.row(indices[i]).end(), out.row(i).begin());
    }
    return out;
}

}  // namespace

std::string_view to_string(Configuration configuration) {
    for (const auto& n : kNames) {
        if (n.id == configuration) return n.display;
    }
    return "unknown";
}

Configuration parse_configuration(std::string_view name) {
    const std::string wanted = lowercase(name);
    std::string accepted;
    for (const auto& n : kNames) {
        if (wanted == lowercase(n.display) || wanted == n.snake) return n.id;
        accepted += (accepted.empty() ? "" : ", ") + std::string(n.display);
    }
    throw ConfigError("unknown configuration '" + std::string(name) + "' (expected one of " + accepted + ")");
}

bool uses_ensemble(Configuration configuration) {
    return configuration == Configuration::image_ensemble || configuration == Configuration::gsec;
}

bool uses_text(Configuration configuration) {
    return configuration != Configuration::image && configuration != Configuration::image_ensemble;
}

Modalities Modalities::subset(std::span<const std::size_t> indices) const {
    Modalities out;
    out.images = take_rows(images, indices);
    if (matched_text) out.matched_text = take_rows(*matched_text, indices);
    if (generated_text) out.generated_text = take_rows(*generated_text, indices);
    return out;
}

const Matrix& text_input(Configuration configuration, const Modalities& data) {
    switch (configuration) {
        case Configuration::image_mtext:
            if (!data.matched_text) {
                throw ConfigError(std::string(to_string(configuration)) +
                                  " needs user-supplied text embeddings (--texts), none were given");
            }
            return *data.matched_text;
        case Configuration::image_gtext:
        case Configuration::gsec:
            if (!data.generated_text) {
                throw ConfigError(std::string(to_string(configuration)) +
                                  " needs generated text embeddings (run the semantic step first)");
            }
            return *data.generated_text;
        default:
            return data.images;
    }
}

std::pair<InnerTrainConfig, OuterTrainConfig> stage_configs(Configuration configuration,
                                                            const PipelineSettings& settings, std::size_t clusters,
                                                            std::uint64_t seed) {
    InnerTrainConfig inner = settings.inner;
    inner.clusters = clusters;
    inner.seed = derive_seed(seed, 1);
    if (uses_ensemble(configuration)) {
        inner.ensemble_size = settings.ensemble_size;
    } else {
        inner.ensemble_size = 1;
        inner.modulator_init = ModulatorInit::ones;
        inner.train_modulators = false;
    }
    OuterTrainConfig outer = settings.outer;
    outer.seed = derive_seed(seed, 2);
    return {inner, outer};
}

Matrix encoder_input(Configuration configuration, const Modalities& data) {
    if (!uses_text(configuration)) return data.images;
    return concat_columns(data.images, text_input(configuration, data));
}

PipelineRun train_pipeline(Configuration configuration, const Modalities& data, const PipelineSettings& settings,
                           std::size_t clusters, std::uint64_t seed) {
    const Matrix& texts = text_input(configuration, data);
    if (texts.rows() != data.images.rows()) throw ShapeError("text and image row counts differ");
    const auto [inner_cfg, outer_cfg] = stage_configs(configuration, settings, clusters, seed);

    PipelineRun run;
    run.configuration = configuration;
    run.inner = train_inner(data.images, texts, inner_cfg);
    const SoftAssignment y_hat = inner_predict(run.inner.model, data.images, texts);
    run.outer = train_outer(encoder_input(configuration, data), y_hat, outer_cfg);
    return run;
}

SoftAssignment predict_proba(const PipelineRun& run, const Modalities& data) {
    return encoder_predict(run.outer.encoder, encoder_input(run.configuration, data));
}

Labels predict(const PipelineRun& run, const Modalities& data) { return argmax_rows(predict_proba(run, data)); }

}  // namespace gsec
