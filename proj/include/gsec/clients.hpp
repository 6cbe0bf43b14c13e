#ifndef GSEC_CLIENTS_HPP
#define GSEC_CLIENTS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace gsec {

// What an MLLM is shown for one representative sample. Either a path/URL the
// endpoint can resolve, or a base64 payload that is sent inline.
struct ImageRef {
    std::string sample_id;
    std::string uri;
    std::string payload_base64;
    std::string mime_type = "image/png";
};

class MllmClient {
public:
    virtual ~MllmClient() = default;
    // Returns the raw response text. Throws ClientError on transport failure.
    virtual std::string describe(const std::string& prompt, const ImageRef& image) = 0;
};

class TextEncoderClient {
public:
    virtual ~TextEncoderClient() = default;
    // One vector per input string, in order.
    virtual std::vector<std::vector<double>> encode(const std::vector<std::string>& texts) = 0;
};

// Fills the description template with attribute words picked by a seeded
// hash of the sample id.
class MockMllmClient : public MllmClient {
public:
    explicit MockMllmClient(std::uint64_t seed = 0) : seed_(seed) {}
    std::string describe(const std::string& prompt, const ImageRef& image) override;

private:
    std::uint64_t seed_;
};

// Maps each string to a unit vector by expanding a seeded hash of its bytes.
class MockTextEncoder : public TextEncoderClient {
public:
    MockTextEncoder(std::size_t dim, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {}
    std::vector<std::vector<double>> encode(const std::vector<std::string>& texts) override;
    std::vector<double> encode_one(const std::string& text) const;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

struct EndpointConfig {
    std::string base_url;                       // e.g. http://localhost:8000
    std::string model;
    std::string token_env = "GSEC_API_TOKEN";   // bearer token read from this variable, if set
    std::string path;                           // defaults per client when empty
    int timeout_seconds = 120;
};

// OpenAI-style chat completion: POST {base}/v1/chat/completions with the prompt
// and the image as an image_url content part; the reply is choices[0].message.content.
class HttpMllmClient : public MllmClient {
public:
    explicit HttpMllmClient(EndpointConfig config);
    std::string describe(const std::string& prompt, const ImageRef& image) override;

private:
    EndpointConfig config_;
};

// OpenAI-style embeddings: POST {base}/v1/embeddings {"model", "input": [...]}
// and read data[i].embedding.
class HttpTextEncoderClient : public TextEncoderClient {
public:
    explicit HttpTextEncoderClient(EndpointConfig config);
    std::vector<std::vector<double>> encode(const std::vector<std::string>& texts) override;

private:
    EndpointConfig config_;
};

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace gsec

#endif  // GSEC_CLIENTS_HPP
