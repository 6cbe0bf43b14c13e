#ifndef GSEC_SRC_BINARY_IO_HPP
#define GSEC_SRC_BINARY_IO_HPP

// Little-endian byte helpers shared by the file formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "gsec/error.hpp"

namespace gsec::detail {

template <typename U>
void put_le(std::vector<char>& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
    }
}

inline void put_u32(std::vector<char>& out, std::uint32_t v) { put_le(out, v); }
inline void put_u64(std::vector<char>& out, std::uint64_t v) { put_le(out, v); }
inline void put_f32(std::vector<char>& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::vector<char>& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

// Bounds-checked cursor over a byte buffer.
class Reader {
public:
    Reader(const std::vector<char>& bytes, std::string source)
        : bytes_(bytes), source_(std::move(source)) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t position() const { return pos_; }

    void expect_magic(std::string_view magic) {
        need(magic.size(), "magic");
        if (std::memcmp(bytes_.data() + pos_, magic.data(), magic.size()) != 0) {
            throw FormatError(source_ + ": bad magic");
        }
        pos_ += magic.size();
    }

    std::uint32_t u32(const char* field) { return get<std::uint32_t>(field); }
    std::uint64_t u64(const char* field) { return get<std::uint64_t>(field); }
    float f32(const char* field) { return std::bit_cast<float>(get<std::uint32_t>(field)); }
    double f64(const char* field) { return std::bit_cast<double>(get<std::uint64_t>(field)); }

    std::string bytes(std::size_t count, const char* field) {
        need(count, field);
        std::string out(bytes_.data() + pos_, count);
        pos_ += count;
        return out;
    }

    void seek(std::size_t pos) {
        if (pos > bytes_.size()) throw CorruptionError(source_ + ": offset past end of file");
        pos_ = pos;
    }

    void need(std::size_t count, const char* field) const {
        if (count > remaining()) {
            throw CorruptionError(source_ + ": truncated while reading " + field);
        }
    }

private:
    template <typename U>
    U get(const char* field) {
        need(sizeof(U), field);
        U value = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            value |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(U);
        return value;
    }

    const std::vector<char>& bytes_;
    std::string source_;
    std::size_t pos_ = 0;
};

inline std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace gsec::detail

#endif  // GSEC_SRC_BINARY_IO_HPP
