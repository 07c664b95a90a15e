#pragma once

#include <string>
#include <utility>
#include <vector>

#include "iotid/nn/tensor.hpp"

namespace iotid::nn {

// Versioned binary checkpoint: magic "IOTM", format version u16, an
// architecture tag string, then per-tensor records
// {name_len u16 + name, rank u8, dims u32 each, values f64}, little-endian.

struct Checkpoint {
    std::string arch;
    std::vector<std::pair<std::string, Tensor>> tensors;
};

void write_checkpoint(const std::string& path, const std::string& arch,
                      const std::vector<const Param*>& params);
Checkpoint read_checkpoint(const std::string& path);

// Copies checkpoint tensors into params, matched by name. Every param must
// be present with the exact shape.
void apply_checkpoint(const Checkpoint& ck, const std::vector<Param*>& params);

}  // namespace iotid::nn
