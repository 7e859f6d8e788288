#include <cmath>
#include <random>

#include "mug/error.hpp"
#include "mug/model.hpp"

namespace mug::model {

namespace {

std::vector<double> unit_vector(std::uint64_t seed, std::size_t dim) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(dim);
    double norm = 0.0;
    for (double& x : v) {
        x = g(rng);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

}  // namespace

TextEncoder::TextEncoder(data::Vocabulary vocabulary, std::size_t dim) : vocabulary_(std::move(vocabulary)), dim_(dim) {
    if (dim == 0) throw ConfigError("text embedding width must be positive");
    for (Modality m : {Modality::Audio, Modality::Visual}) {
        auto& table = table_[static_cast<std::size_t>(m)];
        table.reserve(vocabulary_.size() * dim);
        for (const std::string& name : vocabulary_.names()) {
            const auto v = unit_vector(fnv1a(prompt(m, name)), dim);
            table.insert(table.end(), v.begin(), v.end());
        }
    }
}

std::string TextEncoder::prompt(Modality m, const std::string& category) {
    std::string words = category;
    for (char& ch : words)
        if (ch == '_') ch = ' ';
    return (m == Modality::Audio ? "this is a sound of " : "A photo of ") + words;
}

Tensor TextEncoder::category_vector(Modality m, std::size_t category) const {
    if (category >= vocabulary_.size()) throw VocabularyError("category index out of range");
    const auto& table = table_[static_cast<std::size_t>(m)];
    const auto begin = table.begin() + static_cast<std::ptrdiff_t>(category * dim_);
    return Tensor::from_vector({dim_}, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(dim_)));
}

Tensor TextEncoder::embed(const data::LabelMatrix& labels, Modality m) const {
    if (labels.classes() != vocabulary_.size()) throw ShapeError("label matrix width does not match text vocabulary");
    const auto& table = table_[static_cast<std::size_t>(m)];
    const std::size_t T = labels.segments();
    std::vector<double> out(T * dim_, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const auto classes = labels.row_classes(t);
        if (classes.empty()) continue;
        for (std::size_t c : classes)
            for (std::size_t k = 0; k < dim_; ++k) out[t * dim_ + k] += table[c * dim_ + k];
        for (std::size_t k = 0; k < dim_; ++k) out[t * dim_ + k] /= static_cast<double>(classes.size());
    }
    return Tensor::from_vector({T, dim_}, std::move(out));
}

Tensor TextEncoder::embed(const std::vector<std::vector<std::string>>& segments, Modality m) const {
    data::LabelMatrix labels(segments.size(), vocabulary_.size());
    for (std::size_t t = 0; t < segments.size(); ++t)
        for (const std::string& name : segments[t]) labels.set(t, vocabulary_.index(name), true);
    return embed(labels, m);
}

}  // namespace mug::model
