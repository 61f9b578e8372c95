#include "relief/params.hpp"

#include <stdexcept>

namespace relief {

void ParamSet::add(std::string name, Mat value) {
    if (contains(name)) throw std::invalid_argument("ParamSet: duplicate parameter " + name);
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
}

bool ParamSet::contains(const std::string& name) const { return find(name) >= 0; }

int ParamSet::find(const std::string& name) const {
    for (size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    return -1;
}

Mat& ParamSet::operator[](const std::string& name) {
    const int i = find(name);
    if (i < 0) throw std::invalid_argument("ParamSet: unknown parameter " + name);
    return values_[i];
}

const Mat& ParamSet::operator[](const std::string& name) const {
    const int i = find(name);
    if (i < 0) throw std::invalid_argument("ParamSet: unknown parameter " + name);
    return values_[i];
}

void ParamSet::append(const ParamSet& other) {
    for (size_t i = 0; i < other.size(); ++i) add(other.names_[i], other.values_[i]);
}

ParamSet ParamSet::subset(const std::string& prefix) const {
    ParamSet out;
    for (size_t i = 0; i < names_.size(); ++i)
        if (names_[i].rfind(prefix, 0) == 0) out.add(names_[i], values_[i]);
    return out;
}

TapeBinding bind(Tape& tape, const ParamSet& params) {
    TapeBinding b;
    b.leaves.reserve(params.size());
    for (const Mat& m : params.values()) b.leaves.push_back(tape.leaf(m));
    return b;
}

Gradients backward(Tape& tape, Value loss, const TapeBinding& binding) {
    Gradients out;
    out.g = tape.gradients(loss, binding.leaves);
    return out;
}

}  // namespace relief
