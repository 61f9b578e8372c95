#pragma once

#include "relief/tape.hpp"

namespace relief {

/// Sinusoidal coordinate encoding: [p?, sin(2^0 pi p), cos(2^0 pi p), ...,
/// sin(2^{L-1} pi p), cos(2^{L-1} pi p)], blocks interleaved per frequency.
struct EncodingConfig {
    int num_freqs = 6;
    bool include_input = true;

    Eigen::Index out_dim(Eigen::Index in_dim) const {
        return in_dim * ((include_input ? 1 : 0) + 2 * num_freqs);
    }
};

// Columns are points; rows are coordinates.
Mat positional_encode(const Mat& p, const EncodingConfig& cfg);
Value positional_encode(Tape& tape, Value p, const EncodingConfig& cfg);

}  // namespace relief
