#include "relief/encoding.hpp"

#include <cmath>

namespace relief {

Mat positional_encode(const Mat& p, const EncodingConfig& cfg) {
    const Eigen::Index d = p.rows();
    const Eigen::Index n = p.cols();
    Mat out(cfg.out_dim(d), n);
    Eigen::Index row = 0;
    if (cfg.include_input) {
        out.topRows(d) = p;
        row += d;
    }
    for (int k = 0; k < cfg.num_freqs; ++k) {
        const double w = std::pow(2.0, k) * M_PI;
        out.middleRows(row, d) = (w * p).array().sin();
        out.middleRows(row + d, d) = (w * p).array().cos();
        row += 2 * d;
    }
    return out;
}

Value positional_encode(Tape& tape, Value p, const EncodingConfig& cfg) {
    if (cfg.num_freqs == 0 && cfg.include_input) return p;
    Value out{};
    bool first = true;
    auto push_block = [&](Value blk) {
        out = first ? blk : tape.concat_rows(out, blk);
        first = false;
    };
    if (cfg.include_input) push_block(p);
    for (int k = 0; k < cfg.num_freqs; ++k) {
        const Value scaled = tape.scale(p, std::pow(2.0, k) * M_PI);
        push_block(tape.sin(scaled));
        push_block(tape.cos(scaled));
    }
    return out;
}

}  // namespace relief
