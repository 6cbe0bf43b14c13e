#include "gsec/checkpoint.hpp"

#include "binary_io.hpp"
#include "gsec/error.hpp"

namespace gsec {

const Matrix& Checkpoint::get(const std::string& name) const {
    for (const auto& [key, value] : tensors) {
        if (key == name) return value;
    }
    throw FormatError("checkpoint has no tensor '" + name + "'");
}

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    std::vector<char> out(std::begin(kMagic), std::end(kMagic));
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u64(out, checkpoint.metadata.size());
    out.insert(out.end(), checkpoint.metadata.begin(), checkpoint.metadata.end());
    detail::put_u64(out, checkpoint.tensors.size());
    std::uint64_t offset = 0;
    for (const auto& [name, m] : checkpoint.tensors) {
        detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        detail::put_u64(out, m.rows());
        detail::put_u64(out, m.cols());
        detail::put_u64(out, offset);
        offset += 8 * m.size();
    }
    for (const auto& entry : checkpoint.tensors) {
        for (double v : entry.second.data()) detail::put_f64(out, v);
    }
    detail::write_file(path, out);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    detail::Reader in(bytes, path.string());
    in.expect_magic(std::string_view(kMagic, 4));
    const auto version = in.u32("version");
    if (version != kCheckpointVersion) {
        throw FormatError(path.string() + ": checkpoint version " + std::to_string(version) + " is not supported");
    }
    Checkpoint cp;
    cp.metadata = in.bytes(in.u64("metadata length"), "metadata");
    const auto count = in.u64("tensor count");
    struct Entry {
        std::string name;
        std::uint64_t rows, cols, offset;
    };
    std::vector<Entry> table;
    for (std::uint64_t t = 0; t < count; ++t) {
        Entry e;
        e.name = in.bytes(in.u32("tensor name length"), "tensor name");
        e.rows = in.u64("rows");
        e.cols = in.u64("cols");
        e.offset = in.u64("offset");
        if (e.cols != 0 && e.rows > (std::uint64_t{1} << 40) / e.cols) throw CorruptionError(path.string() + ": tensor too large");
        table.push_back(std::move(e));
    }
    const std::size_t payload = in.position();
    std::uint64_t expected_end = 0;
    for (const auto& e : table) {
        in.seek(payload);
        in.need(e.offset, "tensor offset");
        in.seek(payload + e.offset);
        Matrix m(e.rows, e.cols);
        for (auto& v : m.data()) v = in.f64("tensor payload");
        expected_end = std::max<std::uint64_t>(expected_end, e.offset + 8 * e.rows * e.cols);
        cp.tensors.emplace_back(e.name, std::move(m));
    }
    if (bytes.size() - payload != expected_end) {
        throw CorruptionError(path.string() + ": payload size does not match the tensor table");
    }
    return cp;
}

namespace {

void add_layer(Checkpoint& cp, const std::string& prefix, const BatchEnsembleLayer& layer) {
    cp.tensors.emplace_back(prefix + ".weight", layer.weight);
    cp.tensors.emplace_back(prefix + ".input_mod", layer.input_mod);
    cp.tensors.emplace_back(prefix + ".output_mod", layer.output_mod);
    cp.tensors.emplace_back(prefix + ".bias", layer.bias);
}

BatchEnsembleLayer get_layer(const Checkpoint& cp, const std::string& prefix) {
    BatchEnsembleLayer layer;
    layer.weight = cp.get(prefix + ".weight");
    layer.input_mod = cp.get(prefix + ".input_mod");
    layer.output_mod = cp.get(prefix + ".output_mod");
    layer.bias = cp.get(prefix + ".bias");
    return layer;
}

}  // namespace

Checkpoint to_checkpoint(const InnerModel& model, std::string metadata) {
    Checkpoint cp;
    cp.metadata = std::move(metadata);
    add_layer(cp, "image", model.image_branch);
    add_layer(cp, "text", model.text_branch);
    return cp;
}

InnerModel inner_from_checkpoint(const Checkpoint& checkpoint) {
    InnerModel model;
    model.image_branch = get_layer(checkpoint, "image");
    model.text_branch = get_layer(checkpoint, "text");
    try {
        model.validate();
    } catch (const Error& e) {
        throw FormatError(std::string("inner checkpoint: ") + e.what());
    }
    return model;
}

Checkpoint to_checkpoint(const TaskEncoder& encoder, std::string metadata) {
    Checkpoint cp;
    cp.metadata = std::move(metadata);
    cp.tensors = {{"w1", encoder.w1}, {"b1", encoder.b1}, {"w2", encoder.w2}, {"b2", encoder.b2}};
    return cp;
}

TaskEncoder encoder_from_checkpoint(const Checkpoint& checkpoint) {
    TaskEncoder enc;
    enc.w1 = checkpoint.get("w1");
    enc.b1 = checkpoint.get("b1");
    enc.w2 = checkpoint.get("w2");
    enc.b2 = checkpoint.get("b2");
    try {
        enc.validate();
    } catch (const Error& e) {
        throw FormatError(std::string("encoder checkpoint: ") + e.what());
    }
    return enc;
}

}  // namespace gsec
