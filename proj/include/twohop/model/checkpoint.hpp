#pragma once

#include <filesystem>

#include "twohop/model/tokenizer.hpp"
#include "twohop/model/toy_transformer.hpp"

namespace twohop::model {

// Single-file binary checkpoint: magic + version, a JSON header holding the
// config and tokenizer, the parameter tensors in enumeration order, and a
// trailing content hash over everything before it. Little-endian throughout.
void save_checkpoint(const ToyConfig& cfg, const ToyTensorsT<float>& params, const Tokenizer& tok,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
    ToyConfig config;
    ToyTensorsT<float> params;
    Tokenizer tokenizer;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace twohop::model
