// Checkpoint container: a small JSON header (entry names, shapes, string
// metadata) followed by the concatenated matrices as little-endian IEEE-754
// doubles. Round-trips are bit-exact, NaN payloads and signed zeros included.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "fedlf/matrix.hpp"
#include "fedlf/model.hpp"

namespace fedlf {

struct Checkpoint {
    std::vector<std::string> names;
    std::vector<Matrix> values;
    std::map<std::string, std::string> meta;

    int find(const std::string& name) const;  // -1 if absent
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const std::string& path);

}  // namespace fedlf
