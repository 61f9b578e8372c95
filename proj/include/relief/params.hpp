#pragma once

#include <string>
#include <vector>

#include "relief/tape.hpp"

namespace relief {

/// Ordered, named collection of dense parameters. Order is stable and is the
/// contract between bindings, gradients, optimizer state, and checkpoints.
class ParamSet {
public:
    void add(std::string name, Mat value);
    bool contains(const std::string& name) const;
    Mat& operator[](const std::string& name);
    const Mat& operator[](const std::string& name) const;

    size_t size() const { return values_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    std::vector<Mat>& values() { return values_; }
    const std::vector<Mat>& values() const { return values_; }

    /// Merge another set under this one (names must not collide).
    void append(const ParamSet& other);
    /// Extract the subset whose names start with `prefix`.
    ParamSet subset(const std::string& prefix) const;

private:
    int find(const std::string& name) const;

    std::vector<std::string> names_;
    std::vector<Mat> values_;
};

/// Per-parameter gradients, aligned with a ParamSet's order.
struct Gradients {
    std::vector<Mat> g;
};

/// Leaf bindings of a ParamSet on one tape (one leaf per parameter, same order).
struct TapeBinding {
    std::vector<Value> leaves;
};

TapeBinding bind(Tape& tape, const ParamSet& params);

/// Runs backward and packages the result; shapes are checked against params.
Gradients backward(Tape& tape, Value loss, const TapeBinding& binding);

}  // namespace relief
