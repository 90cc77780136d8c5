#ifndef UWDIFF_CLIP_BACKEND_HPP_
#define UWDIFF_CLIP_BACKEND_HPP_

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "uwdiff/core/image.hpp"
#include "uwdiff/core/tensor.hpp"

namespace uwdiff {

// Frozen vision/text embedding backend. Images and prompt-token matrices
// map into one joint space; embeddings come back L2-normalized. The
// backend also exposes vector-Jacobian products so classifier gradients
// can be chained to pixels (guidance) and to prompt tokens (prompt
// learning) without the backend's internals leaking out.
class EmbeddingBackend {
  public:
    virtual ~EmbeddingBackend() = default;

    virtual std::string id() const = 0;
    virtual int embed_dim() const = 0;    // joint space dimension
    virtual int token_dim() const = 0;    // per-token feature dimension
    virtual int token_count() const = 0;  // tokens per prompt

    virtual std::vector<double> embed_image(const Image& img) const = 0;
    // d(loss)/d(pixels) given d(loss)/d(embedding).
    virtual Image image_vjp(const Image& img, const std::vector<double>& de) const = 0;

    virtual std::vector<double> embed_tokens(const Tensor& tokens) const = 0;
    // d(loss)/d(tokens) given d(loss)/d(embedding).
    virtual Tensor tokens_vjp(const Tensor& tokens, const std::vector<double>& de) const = 0;
};

// Wraps a backend, counting calls and adding a fixed busy-wait per vision
// call. Stands in for a heavyweight vision tower when the per-step cost
// profile matters (throughput experiments) but the numerics should stay
// identical to the wrapped backend.
class CostedBackend : public EmbeddingBackend {
  public:
    CostedBackend(std::shared_ptr<const EmbeddingBackend> inner, double vision_cost_ms)
        : inner_(std::move(inner)), cost_ms_(vision_cost_ms) {}

    std::string id() const override { return inner_->id() + "+costed"; }
    int embed_dim() const override { return inner_->embed_dim(); }
    int token_dim() const override { return inner_->token_dim(); }
    int token_count() const override { return inner_->token_count(); }

    std::vector<double> embed_image(const Image& img) const override {
        burn();
        ++vision_calls_;
        return inner_->embed_image(img);
    }
    Image image_vjp(const Image& img, const std::vector<double>& de) const override {
        burn();
        ++vision_calls_;
        return inner_->image_vjp(img, de);
    }
    std::vector<double> embed_tokens(const Tensor& tokens) const override {
        return inner_->embed_tokens(tokens);
    }
    Tensor tokens_vjp(const Tensor& tokens, const std::vector<double>& de) const override {
        return inner_->tokens_vjp(tokens, de);
    }

    int64_t vision_calls() const { return vision_calls_; }

  private:
    void burn() const {
        const auto until = std::chrono::steady_clock::now() +
                           std::chrono::duration<double, std::milli>(cost_ms_);
        volatile double sink = 0.0;
        while (std::chrono::steady_clock::now() < until) sink = sink + 1.0;
        (void)sink;
    }

    std::shared_ptr<const EmbeddingBackend> inner_;
    double cost_ms_;
    mutable int64_t vision_calls_ = 0;
};

}  // namespace uwdiff

#endif  // UWDIFF_CLIP_BACKEND_HPP_
