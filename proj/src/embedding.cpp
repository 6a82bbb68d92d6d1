#include "kg/embedding.hpp"

#include <cmath>

#include "kg/common.hpp"
#include "kg/text.hpp"

namespace kg::embedding {

OfflineEmbedder::OfflineEmbedder(EmbeddingConfig config) : config_(config) {
    if (config_.dimension < 2) throw ConfigError("embedding dimension must be >= 2");
}

std::string OfflineEmbedder::id() const {
    return "offline-d" + std::to_string(config_.dimension) + "-s" + std::to_string(config_.seed);
}

std::vector<float> OfflineEmbedder::embed(const std::string& input) {
    if (input.empty()) throw ValidationError("cannot embed empty text");
    auto tokens = text::tokenize(input);
    if (tokens.empty()) throw ValidationError("text has no tokens to embed");

    std::vector<double> acc(config_.dimension, 0.0);
    for (const auto& token : tokens) {
        for (std::uint64_t k = 0; k < 3; ++k) {
            std::uint64_t h = text::stable_hash(token, config_.seed * 3 + k);
            std::size_t pos = static_cast<std::size_t>(h % config_.dimension);
            double sign = ((h >> 32) & 1ULL) ? 1.0 : -1.0;
            acc[pos] += sign;
        }
    }

    double norm_sq = 0.0;
    for (double v : acc) norm_sq += v * v;
    if (norm_sq <= 0.0) throw ValidationError("embedding collapsed to the zero vector");
    double inv_norm = 1.0 / std::sqrt(norm_sq);

    std::vector<float> out(config_.dimension);
    for (int i = 0; i < config_.dimension; ++i) {
        out[i] = static_cast<float>(acc[i] * inv_norm);
    }
    return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbeddingConfig& config) {
    if (config.provider == "offline") return std::make_unique<OfflineEmbedder>(config);
    throw ConfigError("unknown embedding provider: " + config.provider);
}

double similarity(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw ValidationError("embedding dimension mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return dot;
}

}  // namespace kg::embedding
