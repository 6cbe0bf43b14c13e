#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "gsec/checkpoint.hpp"
#include "gsec/clients.hpp"
#include "gsec/error.hpp"
#include "gsec/evaluation.hpp"
#include "gsec/semantic.hpp"

namespace gsec::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// ---- option groups shared by several subcommands ----

struct Common {
    std::string out = "gsec-out";
    std::uint64_t seed = 0;
};

struct Inputs {
    std::string images;
    std::string texts;
    std::string generated_texts;
    std::string labels;
};

struct TrainOptions {
    std::size_t clusters = 10;
    std::size_t epochs = 100;
    std::size_t outer_epochs = 100;
    std::size_t batch_size = 1024;
    double learning_rate = 0.001;
    std::size_t ensemble_size = 24;
    std::size_t neighbor_k = 10;
    std::size_t patience = 10;
    double min_improvement = 1e-5;
    std::string confidence = "log_of_sum";
    std::string neighbor_schedule = "per_step";
    std::string modulator_init = "near_one";
    std::string reduction = "mean";
    std::size_t hidden_width = 0;
    std::string align_target = "inner";
};

struct SynthOptions {
    Common common;
    SyntheticSpec spec;
};

struct SemanticOptions {
    Common common;
    std::string images;
    std::size_t clusters = 10;
    double temperature = 0.04;
    std::size_t reps = 5;
    std::size_t kmeans_restarts = 5;
    std::size_t kmeans_iterations = 100;
    std::string granularity = "per_representative";
    std::size_t max_in_flight = 4;
    std::size_t max_retries = 1;
    bool live = false;
    std::string mllm_url;
    std::string mllm_model;
    std::string encoder_url;
    std::string encoder_model;
    std::string token_env = "GSEC_API_TOKEN";
    int timeout = 120;
    std::string image_root;
    std::string image_suffix = ".png";
};

struct TrainCommand {
    Common common;
    Inputs inputs;
    std::string configuration = "gsec";
    TrainOptions train;
};

struct EvalOptions {
    Common common;
    std::string pred;
    std::string labels;
};

struct BiasVarianceOptions {
    Common common;
    Inputs inputs;
    std::vector<std::string> configurations;
    std::size_t runs = 10;
    std::size_t workers = 0;
    bool soft = false;
    TrainOptions train;
};

struct AblateOptions {
    Common common;
    Inputs inputs;
    std::vector<std::string> configurations;
    std::vector<std::uint64_t> seeds = {0};
    TrainOptions train;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-o,--out", c.out, "Output directory")->capture_default_str();
    cmd->add_option("--seed", c.seed, "Global seed")->capture_default_str();
}

const std::vector<std::string> kConfidence = {"log_of_sum", "sum_of_logs"};
const std::vector<std::string> kSchedules = {"per_step", "per_epoch"};
const std::vector<std::string> kInits = {"near_one", "random_sign", "ones"};
const std::vector<std::string> kReductions = {"mean", "sum"};
const std::vector<std::string> kAlign = {"inner", "encoder"};
const std::vector<std::string> kGranularity = {"per_representative", "per_cluster"};

void add_train_options(CLI::App* cmd, TrainOptions& t) {
    cmd->add_option("-k,--clusters", t.clusters, "Number of clusters K")->capture_default_str();
    cmd->add_option("--epochs", t.epochs, "Inner-stage epochs")->capture_default_str();
    cmd->add_option("--outer-epochs", t.outer_epochs, "Outer-stage epochs")->capture_default_str();
    cmd->add_option("--batch-size", t.batch_size)->capture_default_str();
    cmd->add_option("--lr", t.learning_rate, "Adam learning rate for both stages")->capture_default_str();
    cmd->add_option("--ensemble-size", t.ensemble_size, "BatchEnsemble members m")->capture_default_str();
    cmd->add_option("--neighbor-k", t.neighbor_k)->capture_default_str();
    cmd->add_option("--patience", t.patience, "Early-stop window in epochs")->capture_default_str();
    cmd->add_option("--min-improvement", t.min_improvement)->capture_default_str();
    cmd->add_option("--confidence", t.confidence)->check(CLI::IsMember(kConfidence))->capture_default_str();
    cmd->add_option("--neighbor-schedule", t.neighbor_schedule)->check(CLI::IsMember(kSchedules))->capture_default_str();
    cmd->add_option("--modulator-init", t.modulator_init)->check(CLI::IsMember(kInits))->capture_default_str();
    cmd->add_option("--reduction", t.reduction, "Per-sample loss reduction")
        ->check(CLI::IsMember(kReductions))
        ->capture_default_str();
    cmd->add_option("--hidden-width", t.hidden_width, "Task encoder hidden units (0 = linear)")->capture_default_str();
    cmd->add_option("--align-target", t.align_target)->check(CLI::IsMember(kAlign))->capture_default_str();
}

Json to_json(const TrainOptions& t) {
    return {{"clusters", t.clusters},
            {"epochs", t.epochs},
            {"outer_epochs", t.outer_epochs},
            {"batch_size", t.batch_size},
            {"learning_rate", t.learning_rate},
            {"ensemble_size", t.ensemble_size},
            {"neighbor_k", t.neighbor_k},
            {"patience", t.patience},
            {"min_improvement", t.min_improvement},
            {"confidence", t.confidence},
            {"neighbor_schedule", t.neighbor_schedule},
            {"modulator_init", t.modulator_init},
            {"reduction", t.reduction},
            {"hidden_width", t.hidden_width},
            {"align_target", t.align_target}};
}

Json to_json(const Inputs& in) {
    return {{"images", in.images}, {"texts", in.texts}, {"generated_texts", in.generated_texts}, {"labels", in.labels}};
}

PipelineSettings to_settings(const TrainOptions& t) {
    PipelineSettings s;
    s.ensemble_size = t.ensemble_size;
    s.inner.epochs = t.epochs;
    s.inner.batch_size = t.batch_size;
    s.inner.learning_rate = t.learning_rate;
    s.inner.neighbor_k = t.neighbor_k;
    s.inner.patience = t.patience;
    s.inner.min_improvement = t.min_improvement;
    s.inner.confidence = t.confidence == "sum_of_logs" ? ConfidenceForm::sum_of_logs : ConfidenceForm::log_of_sum;
    s.inner.neighbor_schedule = t.neighbor_schedule == "per_epoch" ? NeighborSchedule::per_epoch
                                                                   : NeighborSchedule::per_step;
    s.inner.modulator_init = t.modulator_init == "random_sign" ? ModulatorInit::random_sign
                             : t.modulator_init == "ones"      ? ModulatorInit::ones
                                                               : ModulatorInit::near_one;
    const Reduction reduction = t.reduction == "sum" ? Reduction::sum : Reduction::mean;
    s.inner.reduction = reduction;
    s.outer.epochs = t.outer_epochs;
    s.outer.batch_size = t.batch_size;
    s.outer.learning_rate = t.learning_rate;
    s.outer.patience = t.patience;
    s.outer.min_improvement = t.min_improvement;
    s.outer.hidden_width = t.hidden_width;
    s.outer.target = t.align_target == "encoder" ? AlignTarget::encoder : AlignTarget::inner;
    s.outer.reduction = reduction;
    if (t.clusters < 2) throw ConfigError("--clusters must be at least 2");
    if (t.ensemble_size == 0) throw ConfigError("--ensemble-size must be positive");
    return s;
}

// ---- file helpers ----

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) throw ConfigError(std::string("missing required input ") + flag);
    if (!fs::exists(path)) throw ConfigError(std::string("input file for ") + flag + " not found: " + path);
}

Matrix load_matrix(const std::string& path, const char* flag) {
    require_file(path, flag);
    const bool csv = fs::path(path).extension() == ".csv";
    return (csv ? read_embeddings_csv(path) : read_embeddings(path)).cast<double>();
}

Labels load_labels(const std::string& path, const char* flag) {
    require_file(path, flag);
    return read_labels(path);
}

Modalities load_modalities(const Inputs& in) {
    Modalities data;
    data.images = load_matrix(in.images, "--images");
    if (!in.texts.empty()) data.matched_text = load_matrix(in.texts, "--texts");
    if (!in.generated_texts.empty()) data.generated_text = load_matrix(in.generated_texts, "--generated-texts");
    for (const auto* t : {&data.matched_text, &data.generated_text}) {
        if (*t && (*t)->rows() != data.images.rows()) {
            throw ConfigError("text embeddings have " + std::to_string((*t)->rows()) + " rows, images have " +
                              std::to_string(data.images.rows()));
        }
    }
    return data;
}

std::vector<Configuration> parse_configurations(const std::vector<std::string>& names) {
    if (names.empty()) return {kAllConfigurations.begin(), kAllConfigurations.end()};
    std::vector<Configuration> out;
    for (const auto& n : names) out.push_back(parse_configuration(n));
    return out;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

std::string file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Collects artifact names as they are written and emits the run manifest.
class RunOutput {
public:
    RunOutput(std::string command, const Common& common, Json config)
        : command_(std::move(command)), dir_(common.out), seed_(common.seed), config_(std::move(config)) {
        fs::create_directories(dir_);
    }

    fs::path path(const std::string& name) {
        artifacts_.push_back(name);
        return dir_ / name;
    }

    std::string metadata() const {
        Json j = {{"command", command_}, {"seed", seed_}, {"config", config_}};
        return j.dump();
    }

    void finish() {
        Json artifacts = Json::array();
        for (const auto& name : artifacts_) {
            const auto bytes = file_bytes(dir_ / name);
            artifacts.push_back({{"file", name}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
        }
        Json manifest = {{"command", command_},
                         {"seed", seed_},
                         {"config_hash", hex64(fnv1a64(config_.dump()))},
                         {"config", config_},
                         {"artifacts", artifacts}};
        std::ofstream out(dir_ / ("manifest-" + command_ + ".json"), std::ios::trunc);
        out << manifest.dump(2) << '\n';
        if (!out) throw Error("cannot write manifest in " + dir_.string());
        std::cout << "wrote " << artifacts_.size() << " artifacts and manifest-" << command_ << ".json to "
                  << dir_.string() << '\n';
    }

private:
    std::string command_;
    fs::path dir_;
    std::uint64_t seed_;
    Json config_;
    std::vector<std::string> artifacts_;
};

std::ofstream open_text(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << std::setprecision(10);
    return out;
}

// ---- subcommands ----

void cmd_synth(const SynthOptions& o) {
    SyntheticSpec spec = o.spec;
    spec.seed = o.common.seed;
    const Dataset data = generate_synthetic(spec);
    Json config = {{"n", spec.n},
                   {"dim", spec.dim},
                   {"text_dim", spec.text_dim},
                   {"clusters", spec.clusters},
                   {"separation", spec.separation},
                   {"modality_noise", spec.modality_noise}};
    RunOutput out("synth", o.common, config);
    write_embeddings(data.images, out.path("images.gsec"));
    write_embeddings(*data.texts, out.path("texts.gsec"));
    write_labels(*data.labels, out.path("labels.gsecl"));
    out.finish();
}

void cmd_semantic(const SemanticOptions& o) {
    Dataset data;
    data.images = [&] {
        require_file(o.images, "--images");
        return fs::path(o.images).extension() == ".csv" ? read_embeddings_csv(o.images) : read_embeddings(o.images);
    }();
    data.ids = default_ids(data.size());

    SemanticConfig cfg;
    cfg.expected_clusters = o.clusters;
    cfg.temperature = o.temperature;
    cfg.reps_per_cluster = o.reps;
    cfg.kmeans.restarts = o.kmeans_restarts;
    cfg.kmeans.max_iterations = o.kmeans_iterations;
    cfg.granularity = o.granularity == "per_cluster" ? DescriptionGranularity::per_cluster
                                                     : DescriptionGranularity::per_representative;
    cfg.policy.max_in_flight = o.max_in_flight;
    cfg.policy.max_retries = o.max_retries;
    cfg.policy.image_root = o.image_root;
    cfg.policy.image_suffix = o.image_suffix;

    std::unique_ptr<MllmClient> mllm;
    std::unique_ptr<TextEncoderClient> encoder;
    if (o.live) {
        if (o.mllm_url.empty() || o.encoder_url.empty()) {
            throw ConfigError("--live needs --mllm-url and --encoder-url");
        }
        mllm = std::make_unique<HttpMllmClient>(EndpointConfig{o.mllm_url, o.mllm_model, o.token_env, "", o.timeout});
        encoder = std::make_unique<HttpTextEncoderClient>(
            EndpointConfig{o.encoder_url, o.encoder_model, o.token_env, "", o.timeout});
    } else {
        mllm = std::make_unique<MockMllmClient>(o.common.seed);
        encoder = std::make_unique<MockTextEncoder>(data.images.cols(), o.common.seed);
    }

    Json config = {{"images", o.images},
                   {"clusters", o.clusters},
                   {"temperature", o.temperature},
                   {"reps", o.reps},
                   {"kmeans_restarts", o.kmeans_restarts},
                   {"kmeans_iterations", o.kmeans_iterations},
                   {"granularity", o.granularity},
                   {"live", o.live},
                   {"mllm_url", o.mllm_url},
                   {"mllm_model", o.mllm_model},
                   {"encoder_url", o.encoder_url},
                   {"encoder_model", o.encoder_model},
                   {"image_root", o.image_root},
                   {"image_suffix", o.image_suffix}};
    const auto result = run_semantic(data, cfg, *mllm, *encoder, o.common.seed);
    for (const auto& w : result.representatives.warnings) std::cerr << "warning: " << w << '\n';

    RunOutput out("semantic", o.common, config);
    write_embeddings(result.text_embeddings.cast<float>(), out.path("text_embeddings.gsec"));
    write_embeddings(result.class_embeddings.cast<float>(), out.path("class_embeddings.gsec"));
    write_descriptions_jsonl(result.descriptions, out.path("descriptions.jsonl"));
    std::cout << result.pre_clusters << " pre-clusters, " << result.descriptions.size() << " descriptions\n";
    out.finish();
}

void cmd_train(const TrainCommand& o) {
    const Configuration configuration = parse_configuration(o.configuration);
    Inputs inputs = o.inputs;
    if (uses_text(configuration) && inputs.texts.empty()) {
        throw ConfigError("configuration " + std::string(to_string(configuration)) +
                          " needs text embeddings; pass --texts");
    }
    if (!uses_text(configuration)) inputs.texts.clear();
    Modalities data = load_modalities(inputs);
    // The one text file serves whichever text modality the configuration reads.
    data.generated_text = data.matched_text;
    const PipelineSettings settings = to_settings(o.train);

    Json config = {{"configuration", to_string(configuration)},
                   {"images", inputs.images},
                   {"texts", inputs.texts},
                   {"train", to_json(o.train)}};
    RunOutput out("train", o.common, config);
    const auto run = train_pipeline(configuration, data, settings, o.train.clusters, o.common.seed);

    write_checkpoint(to_checkpoint(run.inner.model, out.metadata()), out.path("inner.ckpt"));
    write_checkpoint(to_checkpoint(run.outer.encoder, out.metadata()), out.path("outer.ckpt"));
    {
        auto csv = open_text(out.path("inner_loss.csv"));
        csv << "epoch,L_dist,L_conf,L_bal,L_inner\n";
        for (const auto& r : run.inner.history) {
            csv << r.epoch << ',' << r.loss.dist << ',' << r.loss.conf << ',' << r.loss.bal << ',' << r.loss.total
                << '\n';
        }
    }
    {
        auto csv = open_text(out.path("outer_loss.csv"));
        csv << "epoch,L_align,H(p_bar),L_outer\n";
        for (const auto& r : run.outer.history) {
            csv << r.epoch << ',' << r.loss.align << ',' << r.loss.entropy << ',' << r.loss.total << '\n';
        }
    }
    const Labels assignments = predict(run, data);
    write_labels(assignments, out.path("assignments.gsecl"));
    {
        const auto ids = default_ids(assignments.size());
        auto csv = open_text(out.path("assignments.csv"));
        csv << "sample_id,cluster\n";
        for (std::size_t i = 0; i < assignments.size(); ++i) csv << ids[i] << ',' << assignments[i] << '\n';
    }
    std::cout << to_string(configuration) << ": inner " << run.inner.history.size() - 1 << " epochs, outer "
              << run.outer.history.size() - 1 << " epochs\n";
    out.finish();
}

void cmd_eval(const EvalOptions& o) {
    if (o.labels.empty()) throw ConfigError("metrics require ground-truth labels; pass --labels");
    const Labels pred = load_labels(o.pred, "--pred");
    const Labels truth = load_labels(o.labels, "--labels");
    if (pred.size() != truth.size()) {
        throw ShapeError("--pred has " + std::to_string(pred.size()) + " labels, --labels has " +
                         std::to_string(truth.size()));
    }
    const auto s = score(pred, truth);
    RunOutput out("eval", o.common, Json{{"pred", o.pred}, {"labels", o.labels}});
    {
        std::ofstream json(out.path("metrics.json"), std::ios::trunc);
        json << Json{{"n", pred.size()}, {"acc", s.acc}, {"nmi", s.nmi}, {"ari", s.ari}}.dump(2) << '\n';
    }
    {
        auto csv = open_text(out.path("metrics.csv"));
        csv << "metric,value\nacc," << s.acc << "\nnmi," << s.nmi << "\nari," << s.ari << '\n';
    }
    std::cout << std::setprecision(4) << "ACC " << s.acc << "  NMI " << s.nmi << "  ARI " << s.ari << '\n';
    out.finish();
}

void cmd_bias_variance(const BiasVarianceOptions& o) {
    const auto configurations = parse_configurations(o.configurations);
    const Modalities data = load_modalities(o.inputs);
    const Labels truth = load_labels(o.inputs.labels, "--labels");
    std::string missing;
    for (auto c : configurations) {
        try {
            text_input(c, data);
        } catch (const ConfigError& e) {
            missing += std::string(missing.empty() ? "" : "; ") + e.what();
        }
    }
    if (!missing.empty()) throw ConfigError(missing);

    BVOptions options;
    options.runs = o.runs;
    options.seed = o.common.seed;
    options.workers = o.workers > 0 ? o.workers : std::max(1u, std::thread::hardware_concurrency());
    options.soft = o.soft;
    options.settings = to_settings(o.train);
    const std::size_t clusters = o.train.clusters;
    if (clusters != static_cast<std::size_t>(*std::max_element(truth.begin(), truth.end())) + 1) {
        std::cerr << "note: bias/variance uses the number of ground-truth classes as K\n";
    }

    Json names = Json::array();
    for (auto c : configurations) names.push_back(to_string(c));
    Json config = {{"inputs", to_json(o.inputs)},
                   {"configurations", names},
                   {"runs", o.runs},
                   {"soft_variance", o.soft},
                   {"train", to_json(o.train)}};
    RunOutput out("bias-variance", o.common, config);
    std::vector<BVEntry> entries;
    for (auto c : configurations) {
        entries.push_back(bias_variance(data, truth, c, options));
        std::cout << std::setprecision(4) << to_string(c) << ": bias " << entries.back().bias << ", variance "
                  << entries.back().variance << '\n';
    }
    write_bias_variance_csv(entries, out.path("bias_variance.csv"));
    write_bias_variance_jsonl(entries, out.path("bias_variance.jsonl"));
    out.finish();
}

void cmd_ablate(const AblateOptions& o) {
    const auto configurations = parse_configurations(o.configurations);
    const Modalities data = load_modalities(o.inputs);
    const Labels truth = load_labels(o.inputs.labels, "--labels");
    Json names = Json::array();
    for (auto c : configurations) names.push_back(to_string(c));
    Json config = {
        {"inputs", to_json(o.inputs)}, {"configurations", names}, {"seeds", o.seeds}, {"train", to_json(o.train)}};
    const auto rows = ablation_matrix(data, truth, configurations, o.seeds, to_settings(o.train));
    RunOutput out("ablate", o.common, config);
    write_ablation_csv(rows, out.path("ablation.csv"));
    for (const auto& r : rows) {
        std::cout << std::setprecision(4) << to_string(r.configuration) << " seed " << r.seed << ": ACC "
                  << r.scores.acc << " NMI " << r.scores.nmi << " ARI " << r.scores.ari << '\n';
    }
    out.finish();
}

void add_inputs(CLI::App* cmd, Inputs& in, bool labels, bool generated) {
    cmd->add_option("--images", in.images, "Image embeddings (.gsec or .csv)")->required();
    cmd->add_option("--texts", in.texts, "Text embeddings (.gsec or .csv)");
    if (generated) cmd->add_option("--generated-texts", in.generated_texts, "Text embeddings from `semantic`");
    if (labels) cmd->add_option("--labels", in.labels, "Ground-truth labels (.gsecl)")->required();
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Clustering with generated text priors and a bi-layer ensemble"};
    app.name(args.empty() ? "gsec" : fs::path(args.front()).filename().string());
    app.set_config("--config", "", "Read options from a TOML/INI file; flags given on the command line win");
    app.require_subcommand(1);

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic two-modality dataset");
    add_common(synth_cmd, synth.common);
    synth_cmd->add_option("-n,--n", synth.spec.n)->capture_default_str();
    synth_cmd->add_option("--dim", synth.spec.dim)->capture_default_str();
    synth_cmd->add_option("--text-dim", synth.spec.text_dim, "0 = same as --dim")->capture_default_str();
    synth_cmd->add_option("-k,--clusters", synth.spec.clusters)->capture_default_str();
    synth_cmd->add_option("--separation", synth.spec.separation)->capture_default_str();
    synth_cmd->add_option("--modality-noise", synth.spec.modality_noise)->capture_default_str();

    SemanticOptions semantic;
    auto* semantic_cmd = app.add_subcommand("semantic", "Build generated text embeddings from image embeddings");
    add_common(semantic_cmd, semantic.common);
    semantic_cmd->add_option("--images", semantic.images)->required();
    semantic_cmd->add_option("-k,--clusters", semantic.clusters, "Expected cluster count K")->capture_default_str();
    semantic_cmd->add_option("--temperature", semantic.temperature)->capture_default_str();
    semantic_cmd->add_option("--reps", semantic.reps, "Representatives per pre-cluster")->capture_default_str();
    semantic_cmd->add_option("--kmeans-restarts", semantic.kmeans_restarts)->capture_default_str();
    semantic_cmd->add_option("--kmeans-iterations", semantic.kmeans_iterations)->capture_default_str();
    semantic_cmd->add_option("--granularity", semantic.granularity)
        ->check(CLI::IsMember(kGranularity))
        ->capture_default_str();
    semantic_cmd->add_option("--max-in-flight", semantic.max_in_flight)->capture_default_str();
    semantic_cmd->add_option("--max-retries", semantic.max_retries)->capture_default_str();
    semantic_cmd->add_flag("--live", semantic.live, "Use HTTP endpoints instead of the mock clients");
    semantic_cmd->add_option("--mllm-url", semantic.mllm_url);
    semantic_cmd->add_option("--mllm-model", semantic.mllm_model);
    semantic_cmd->add_option("--encoder-url", semantic.encoder_url);
    semantic_cmd->add_option("--encoder-model", semantic.encoder_model);
    semantic_cmd->add_option("--token-env", semantic.token_env)->capture_default_str();
    semantic_cmd->add_option("--timeout", semantic.timeout, "Seconds per request")->capture_default_str();
    semantic_cmd->add_option("--image-root", semantic.image_root, "Directory holding <sample id><suffix> images");
    semantic_cmd->add_option("--image-suffix", semantic.image_suffix)->capture_default_str();

    TrainCommand train;
    auto* train_cmd = app.add_subcommand("train", "Train the inner ensemble, then the task encoder");
    add_common(train_cmd, train.common);
    add_inputs(train_cmd, train.inputs, false, false);
    train_cmd->add_option("-c,--configuration", train.configuration, "Image, Image+Ensemble, ..., GSEC")
        ->capture_default_str();
    add_train_options(train_cmd, train.train);

    EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("eval", "Score hard assignments against ground truth");
    add_common(eval_cmd, eval.common);
    eval_cmd->add_option("--pred", eval.pred, "Predicted assignments (.gsecl)")->required();
    eval_cmd->add_option("--labels", eval.labels, "Ground-truth labels (.gsecl)");

    BiasVarianceOptions bv;
    auto* bv_cmd = app.add_subcommand("bias-variance", "Bootstrap bias/variance decomposition per configuration");
    add_common(bv_cmd, bv.common);
    add_inputs(bv_cmd, bv.inputs, true, true);
    bv_cmd->add_option("--configurations", bv.configurations, "Subset of the five configurations (default all)");
    bv_cmd->add_option("--runs", bv.runs, "Bootstrap runs R")->capture_default_str();
    bv_cmd->add_option("--workers", bv.workers, "Parallel trainings (0 = hardware threads)")->capture_default_str();
    bv_cmd->add_flag("--soft-variance", bv.soft, "Also report the probability-vector variance");
    add_train_options(bv_cmd, bv.train);

    AblateOptions ablate;
    auto* ablate_cmd = app.add_subcommand("ablate", "ACC/NMI/ARI per configuration and seed");
    add_common(ablate_cmd, ablate.common);
    add_inputs(ablate_cmd, ablate.inputs, true, true);
    ablate_cmd->add_option("--configurations", ablate.configurations, "Default: all five");
    ablate_cmd->add_option("--seeds", ablate.seeds)->capture_default_str();
    add_train_options(ablate_cmd, ablate.train);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (synth_cmd->parsed()) cmd_synth(synth);
        if (semantic_cmd->parsed()) cmd_semantic(semantic);
        if (train_cmd->parsed()) cmd_train(train);
        if (eval_cmd->parsed()) cmd_eval(eval);
        if (bv_cmd->parsed()) cmd_bias_variance(bv);
        if (ablate_cmd->parsed()) cmd_ablate(ablate);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kExitFormat;
    } catch (const ClientError& e) {
        std::cerr << "client error: " << e.what();
        if (!e.sample_id().empty()) std::cerr << " (sample " << e.sample_id() << ')';
        std::cerr << '\n';
        return kExitClient;
    } catch (const NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace gsec::cli
