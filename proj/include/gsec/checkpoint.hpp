#ifndef GSEC_CHECKPOINT_HPP
#define GSEC_CHECKPOINT_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gsec/inner_ensemble.hpp"
#include "gsec/outer_ensemble.hpp"

namespace gsec {

// Named float64 tensors plus a free-form metadata string.
//
//   "GSEC", u32 version (2), u64 metadata length, metadata bytes,
//   u64 tensor count, then per tensor: u32 name length, name,
//   u64 rows, u64 cols, u64 payload offset; finally the payload block.
struct Checkpoint {
    std::string metadata;
    std::vector<std::pair<std::string, Matrix>> tensors;

    const Matrix& get(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 2;

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

Checkpoint to_checkpoint(const InnerModel& model, std::string metadata = {});
InnerModel inner_from_checkpoint(const Checkpoint& checkpoint);

Checkpoint to_checkpoint(const TaskEncoder& encoder, std::string metadata = {});
TaskEncoder encoder_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace gsec

#endif  // GSEC_CHECKPOINT_HPP
