#pragma once

#include <string>

#include "spdnet/model.hpp"

namespace spdnet {

std::string to_string(ActKind k);
ActKind act_kind_from_string(const std::string& s);
std::string to_string(BiasMode m);
BiasMode bias_mode_from_string(const std::string& s);
std::string conv_to_string(const std::vector<ConvSpec>& conv);
std::vector<ConvSpec> conv_from_string(const std::string& s);

// Versioned textual dump: the full model config followed by every raw
// parameter with a shape header. Values are written as hexfloats, so
// save -> load reproduces every double bit-exactly.
void save_checkpoint(const std::string& path, const Model& model);

// Rebuilds the model from the embedded config and loads the parameters,
// rejecting unknown versions and any name or shape mismatch.
Model load_checkpoint(const std::string& path);

}  // namespace spdnet
