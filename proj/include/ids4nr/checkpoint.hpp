#pragma once

#include <string>

#include "ids4nr/model.hpp"

namespace ids4nr {

// Text manifest (names, shapes, config) followed by the tensors as
// contiguous little-endian float32 arrays, in manifest order.
void save_checkpoint(const ModelState& model, const std::string& path);

// Throws CorruptCheckpointError on any manifest/shape/payload mismatch with
// the given dataset.
ModelState load_checkpoint(const std::string& path, const Dataset& data);

}  // namespace ids4nr
