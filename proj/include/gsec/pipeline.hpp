#ifndef GSEC_PIPELINE_HPP
#define GSEC_PIPELINE_HPP

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "gsec/data_io.hpp"
#include "gsec/inner_ensemble.hpp"
#include "gsec/outer_ensemble.hpp"

namespace gsec {

// The five settings compared in the bias/variance study and the ablations.
enum class Configuration {
    image,           // single model, image embeddings only
    image_ensemble,  // bi-layer ensemble, image embeddings only
    image_mtext,     // single model, user-supplied text embeddings
    image_gtext,     // single model, generated text embeddings
    gsec,            // bi-layer ensemble, generated text embeddings
};

inline constexpr std::array<Configuration, 5> kAllConfigurations = {
    Configuration::image, Configuration::image_ensemble, Configuration::image_mtext, Configuration::image_gtext,
    Configuration::gsec};

std::string_view to_string(Configuration configuration);
// Accepts the display names ("Image+G-Text") and the snake_case ids ("image_gtext").
Configuration parse_configuration(std::string_view name);

bool uses_ensemble(Configuration configuration);
bool uses_text(Configuration configuration);

// Image embeddings plus whichever text modalities are available.
struct Modalities {
    Matrix images;
    std::optional<Matrix> matched_text;    // user-supplied (M-Text)
    std::optional<Matrix> generated_text;  // from the semantic step (G-Text)

    // Rows listed in `indices`, for every present modality.
    Modalities subset(std::span<const std::size_t> indices) const;
};

// Text matrix the configuration trains on; the image matrix itself for
// image-only settings. Throws ConfigError when the needed modality is absent.
const Matrix& text_input(Configuration configuration, const Modalities& data);

struct PipelineSettings {
    InnerTrainConfig inner;
    OuterTrainConfig outer;
    // Members used by the ensemble settings; single-model settings use one
    // member with frozen unit modulators.
    std::size_t ensemble_size = 24;
};

// Inner and outer configs for one run: the cluster count, the member layout
// of `configuration`, and `seed` applied to both stages.
std::pair<InnerTrainConfig, OuterTrainConfig> stage_configs(Configuration configuration,
                                                            const PipelineSettings& settings, std::size_t clusters,
                                                            std::uint64_t seed);

struct PipelineRun {
    Configuration configuration = Configuration::gsec;
    InnerTrainResult inner;
    OuterTrainResult outer;
};

// Inner stage, then the outer encoder against the frozen inner average.
PipelineRun train_pipeline(Configuration configuration, const Modalities& data, const PipelineSettings& settings,
                           std::size_t clusters, std::uint64_t seed);

// Encoder input for `configuration`: [v; t] with text, v alone otherwise.
Matrix encoder_input(Configuration configuration, const Modalities& data);

SoftAssignment predict_proba(const PipelineRun& run, const Modalities& data);
Labels predict(const PipelineRun& run, const Modalities& data);

}  // namespace gsec

#endif  // GSEC_PIPELINE_HPP
