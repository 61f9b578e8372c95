#pragma once

#include <json.hpp>
#include <string>

#include "relief/params.hpp"

namespace relief {

/// Flat binary parameter container: an 8-byte magic, a u64 header length,
/// a JSON header listing {name, rows, cols, offset} per parameter plus a
/// free-form `meta` object, then the raw little-endian f64 payload
/// (column-major, concatenated in header order).
void save_checkpoint(const std::string& path, const ParamSet& params, const nlohmann::json& meta);

struct Checkpoint {
    ParamSet params;
    nlohmann::json meta;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace relief
