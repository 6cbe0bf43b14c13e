#include "gsec/clients.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "gsec/data_io.hpp"
#include "gsec/error.hpp"

namespace gsec {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---- mocks ----

namespace {

constexpr std::array<const char*, 12> kObjects = {
    "bird", "car", "dog", "cat", "ship", "truck", "horse", "deer", "airplane", "frog", "flower", "chair"};
constexpr std::array<const char*, 16> kAttributes = {
    "a slender shape", "bright colors", "a metallic surface", "soft fur", "sharp edges", "a rounded body",
    "a plain background", "strong contrast", "fine texture", "a dark outline", "a glossy finish",
    "an outdoor setting", "long legs", "large wheels", "a striped pattern", "muted tones"};

}  // namespace

std::string MockMllmClient::describe(const std::string& /*prompt*/, const ImageRef& image) {
    Rng rng(derive_seed(seed_, fnv1a64(image.sample_id)));
    auto pick = [&rng](std::size_t count) {
        return std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
    };
    const char* object = kObjects[pick(kObjects.size())];
    std::array<std::size_t, 3> attrs{};
    for (std::size_t a = 0; a < attrs.size(); ++a) {
        // distinct attributes
        do {
            attrs[a] = pick(kAttributes.size());
        } while ((a > 0 && attrs[a] == attrs[0]) || (a > 1 && attrs[a] == attrs[1]));
    }
    return std::string("This image contains a ") + object + " characterized by " + kAttributes[attrs[0]] + ", " +
           kAttributes[attrs[1]] + ", and " + kAttributes[attrs[2]];
}

std::vector<double> MockTextEncoder::encode_one(const std::string& text) const {
    Rng rng(derive_seed(seed_, fnv1a64(text)));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim_);
    double sq = 0.0;
    for (auto& x : v) {
        x = normal(rng);
        sq += x * x;
    }
    const double len = std::sqrt(sq);
    for (auto& x : v) x /= len;
    return v;
}

std::vector<std::vector<double>> MockTextEncoder::encode(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(encode_one(t));
    return out;
}

// ---- HTTP ----

namespace {

using nlohmann::json;

json post_json(const EndpointConfig& config, const std::string& default_path, const json& body,
               const std::string& sample_id) {
    if (config.base_url.empty()) {
        throw ConfigError("endpoint base URL is not configured");
    }
    httplib::Client client(config.base_url);
    client.set_connection_timeout(config.timeout_seconds, 0);
    client.set_read_timeout(config.timeout_seconds, 0);
    client.set_write_timeout(config.timeout_seconds, 0);

    httplib::Headers headers;
    if (!config.token_env.empty()) {
        if (const char* token = std::getenv(config.token_env.c_str()); token && *token) {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }
    const std::string path = config.path.empty() ? default_path : config.path;
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw ClientError("request to " + config.base_url + path + " failed: " + httplib::to_string(res.error()),
                          sample_id);
    }
    if (res->status < 200 || res->status >= 300) {
        throw ClientError("endpoint " + config.base_url + path + " returned HTTP " + std::to_string(res->status),
                          sample_id);
    }
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw ClientError(std::string("unparseable response: ") + e.what(), sample_id);
    }
}

}  // namespace

HttpMllmClient::HttpMllmClient(EndpointConfig config) : config_(std::move(config)) {}

std::string HttpMllmClient::describe(const std::string& prompt, const ImageRef& image) {
    std::string url = image.uri;
    if (url.empty()) {
        if (image.payload_base64.empty()) {
            throw ClientError("no image reference or payload", image.sample_id);
        }
        url = "data:" + image.mime_type + ";base64," + image.payload_base64;
    }
    json body = {
        {"model", config_.model},
        {"temperature", 0},
        {"messages",
         json::array({{{"role", "user"},
                       {"content", json::array({{{"type", "text"}, {"text", prompt}},
                                                {{"type", "image_url"}, {"image_url", {{"url", url}}}}})}}})},
    };
    const json reply = post_json(config_, "/v1/chat/completions", body, image.sample_id);
    try {
        const auto& content = reply.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const json::exception& e) {
        throw ClientError(std::string("malformed chat completion: ") + e.what(), image.sample_id);
    }
}

HttpTextEncoderClient::HttpTextEncoderClient(EndpointConfig config) : config_(std::move(config)) {}

std::vector<std::vector<double>> HttpTextEncoderClient::encode(const std::vector<std::string>& texts) {
    json body = {{"model", config_.model}, {"input", texts}};
    const json reply = post_json(config_, "/v1/embeddings", body, {});
    std::vector<std::vector<double>> out(texts.size());
    try {
        const auto& data = reply.at("data");
        if (data.size() != texts.size()) {
            throw ClientError("embedding endpoint returned " + std::to_string(data.size()) + " vectors for " +
                              std::to_string(texts.size()) + " inputs");
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            // honour an explicit index when the server reorders
            const std::size_t slot = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
            if (slot >= out.size()) throw ClientError("embedding index out of range");
            out[slot] = data[i].at("embedding").get<std::vector<double>>();
        }
    } catch (const json::exception& e) {
        throw ClientError(std::string("malformed embedding response: ") + e.what());
    }
    for (const auto& v : out) {
        for (double x : v) {
            if (!std::isfinite(x)) throw ClientError("embedding endpoint returned a non-finite value");
        }
    }
    return out;
}

}  // namespace gsec
