#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace kg::embedding {

struct EmbeddingConfig {
    std::string provider = "offline";
    int dimension = 768;
    std::uint64_t seed = 42;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    /// Unit-L2 vector; deterministic per (text, provider id, seed).
    virtual std::vector<float> embed(const std::string& text) = 0;
    virtual int dimension() const = 0;
    virtual std::string id() const = 0;
};

/// Dependency-free hashing embedder: each token lands on 3 signed positions
/// of the vector (seeded stable hash), accumulated and L2-normalized.
class OfflineEmbedder : public Embedder {
public:
    explicit OfflineEmbedder(EmbeddingConfig config);
    std::vector<float> embed(const std::string& text) override;
    int dimension() const override { return config_.dimension; }
    std::string id() const override;

private:
    EmbeddingConfig config_;
};

std::unique_ptr<Embedder> make_embedder(const EmbeddingConfig& config);

/// Dot product; equals cosine similarity for the unit vectors embed() emits.
double similarity(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace kg::embedding
