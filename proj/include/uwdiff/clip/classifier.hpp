#ifndef UWDIFF_CLIP_CLASSIFIER_HPP_
#define UWDIFF_CLIP_CLASSIFIER_HPP_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uwdiff/clip/backend.hpp"
#include "uwdiff/core/hash.hpp"
#include "uwdiff/core/rng.hpp"
#include "uwdiff/core/tensor.hpp"
#include "uwdiff/nn/adam.hpp"

namespace uwdiff {

// Learned prompt-token matrices for the two classes.
struct PromptPair {
    Tensor natural;     // {token_count, token_dim}
    Tensor underwater;  // {token_count, token_dim}
    std::string backend_id;
    int64_t training_steps = 0;
};

// Binary classifier over a frozen embedding backend: softmax over the
// cosine similarities between the image embedding and the two prompt
// embeddings. With unit-norm embeddings the cosines live in [-1,1], so
// p_natural is bounded away from 0 and 1:
//   p in [1/(1+e^2), e^2/(1+e^2)] ~= [0.1192, 0.8808].
class ClipClassifier {
  public:
    ClipClassifier(std::shared_ptr<const EmbeddingBackend> backend, PromptPair prompts)
        : backend_(std::move(backend)), prompts_(std::move(prompts)) {
        refresh_text_embeddings();
    }

    // Re-embeds the prompts; call after mutating the token matrices.
    void refresh_text_embeddings() {
        w_nat_ = backend_->embed_tokens(prompts_.natural);
        w_uw_ = backend_->embed_tokens(prompts_.underwater);
    }

    double p_natural(const Image& img) const {
        const std::vector<double> e = backend_->embed_image(img);
        return p_natural_of(e);
    }

    // The guidance target probability: how "underwater" the image looks.
    double underwater_prob(const Image& img) const { return 1.0 - p_natural(img); }

    // grad_pixels log p_underwater. With c_n = w_n.e and c_u = w_u.e,
    // d log p_u / d e = p_n (w_u - w_n); the backend VJP carries that to
    // the pixels through the projection and the embedding normalization.
    Image log_underwater_grad(const Image& img) const {
        const std::vector<double> e = backend_->embed_image(img);
        const double pn = p_natural_of(e);
        std::vector<double> de(e.size());
        for (size_t i = 0; i < e.size(); ++i) de[i] = pn * (w_uw_[i] - w_nat_[i]);
        return backend_->image_vjp(img, de);
    }

    const PromptPair& prompts() const { return prompts_; }
    const EmbeddingBackend& backend() const { return *backend_; }

    static constexpr double kMinP = 1.0 / (1.0 + 7.38905609893065);  // 1/(1+e^2)
    static constexpr double kMaxP = 7.38905609893065 / (1.0 + 7.38905609893065);

  private:
    double p_natural_of(const std::vector<double>& e) const {
        double cn = 0.0, cu = 0.0;
        for (size_t i = 0; i < e.size(); ++i) {
            cn += w_nat_[i] * e[i];
            cu += w_uw_[i] * e[i];
        }
        const double m = cn > cu ? cn : cu;
        const double en = std::exp(cn - m), eu = std::exp(cu - m);
        return en / (en + eu);
    }

    std::shared_ptr<const EmbeddingBackend> backend_;
    PromptPair prompts_;
    std::vector<double> w_nat_, w_uw_;
};

struct LabeledImage {
    Image image;
    int label;  // 1 = natural, 0 = underwater
};

struct PromptTrainConfig {
    int steps = 400;
    int batch_size = 8;
    double lr = 1e-3;
    uint64_t seed = 0;
};

// Learns the two prompt-token matrices by binary cross-entropy on labeled
// images; the backend stays frozen. Softmax gradients: with target
// q = label, dLoss/dc_n = p_n - q and dLoss/dc_u = q - p_n, each chained
// into the token matrices through the backend's token VJP.
inline PromptPair learn_prompts(std::shared_ptr<const EmbeddingBackend> backend,
                                const std::vector<LabeledImage>& data,
                                const PromptTrainConfig& cfg,
                                std::vector<double>* loss_log = nullptr) {
    if (data.empty()) throw std::invalid_argument("no labeled images");
    const int64_t N = backend->token_count();
    const int64_t E = backend->token_dim();

    PromptPair prompts;
    prompts.backend_id = backend->id();
    prompts.natural = Tensor({N, E});
    prompts.underwater = Tensor({N, E});
    Rng init(splitmix64(cfg.seed ^ 0x70726f6d7074ULL));
    const double sc = 1.0 / std::sqrt(static_cast<double>(E));
    for (int64_t i = 0; i < prompts.natural.numel(); ++i) prompts.natural[i] = sc * init.normal();
    for (int64_t i = 0; i < prompts.underwater.numel(); ++i)
        prompts.underwater[i] = sc * init.normal();

    // Embeddings of the training images never change; compute once.
    std::vector<std::vector<double>> embeds;
    embeds.reserve(data.size());
    for (const LabeledImage& li : data) embeds.push_back(backend->embed_image(li.image));

    Adam opt;
    const int slot_n = opt.add_slot(prompts.natural.numel());
    const int slot_u = opt.add_slot(prompts.underwater.numel());
    Rng rng(splitmix64(cfg.seed ^ 0x626365ULL));

    for (int step = 0; step < cfg.steps; ++step) {
        const std::vector<double> wn = backend->embed_tokens(prompts.natural);
        const std::vector<double> wu = backend->embed_tokens(prompts.underwater);

        std::vector<double> de_n(wn.size(), 0.0), de_u(wu.size(), 0.0);
        double loss = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const size_t idx = static_cast<size_t>(rng.uniform_below(data.size()));
            const std::vector<double>& e = embeds[idx];
            double cn = 0.0, cu = 0.0;
            for (size_t i = 0; i < e.size(); ++i) {
                cn += wn[i] * e[i];
                cu += wu[i] * e[i];
            }
            const double m = cn > cu ? cn : cu;
            const double en = std::exp(cn - m), eu = std::exp(cu - m);
            const double pn = en / (en + eu);
            const double q = static_cast<double>(data[idx].label);
            loss += -(q * std::log(pn) + (1.0 - q) * std::log(1.0 - pn));
            const double gn = (pn - q) / cfg.batch_size;
            for (size_t i = 0; i < e.size(); ++i) {
                de_n[i] += gn * e[i];
                de_u[i] -= gn * e[i];
            }
        }
        loss /= cfg.batch_size;
        if (loss_log) loss_log->push_back(loss);

        const Tensor gtok_n = backend->tokens_vjp(prompts.natural, de_n);
        const Tensor gtok_u = backend->tokens_vjp(prompts.underwater, de_u);
        opt.begin_step();
        opt.update(slot_n, prompts.natural, gtok_n, cfg.lr);
        opt.update(slot_u, prompts.underwater, gtok_u, cfg.lr);
    }
    prompts.training_steps = cfg.steps;
    return prompts;
}

// Prompt blob: "UWPB" | u32 version | u64 meta_len | meta JSON |
// natural tokens | underwater tokens | u64 fnv1a64 checksum.
inline void save_prompts(const std::string& path, const PromptPair& p) {
    nlohmann::json meta = {{"format", "uwdiff-prompts"},
                           {"token_count", p.natural.dim(0)},
                           {"token_dim", p.natural.dim(1)},
                           {"backend_id", p.backend_id},
                           {"training_steps", p.training_steps}};
    const std::string meta_str = meta.dump();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write prompt blob: " + path);
    f.write("UWPB", 4);
    const uint32_t version = 1;
    f.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const uint64_t meta_len = meta_str.size();
    f.write(reinterpret_cast<const char*>(&meta_len), sizeof(meta_len));
    f.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    uint64_t checksum = 0xcbf29ce484222325ULL;
    for (const Tensor* t : {&p.natural, &p.underwater}) {
        const size_t bytes = static_cast<size_t>(t->numel()) * sizeof(double);
        f.write(reinterpret_cast<const char*>(t->data()),
                static_cast<std::streamsize>(bytes));
        checksum = fnv1a64(t->data(), bytes, checksum);
    }
    f.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
}

inline PromptPair load_prompts(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open prompt blob: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "UWPB")
        throw std::runtime_error("not a prompt blob: " + path);
    uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != 1) throw std::runtime_error("unsupported prompt blob version");
    uint64_t meta_len = 0;
    f.read(reinterpret_cast<char*>(&meta_len), sizeof(meta_len));
    std::string meta_str(meta_len, '\0');
    f.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    const nlohmann::json meta = nlohmann::json::parse(meta_str);

    PromptPair p;
    const int64_t N = meta.at("token_count").get<int64_t>();
    const int64_t E = meta.at("token_dim").get<int64_t>();
    p.natural = Tensor({N, E});
    p.underwater = Tensor({N, E});
    p.backend_id = meta.at("backend_id").get<std::string>();
    p.training_steps = meta.at("training_steps").get<int64_t>();

    uint64_t checksum = 0xcbf29ce484222325ULL;
    for (Tensor* t : {&p.natural, &p.underwater}) {
        const size_t bytes = static_cast<size_t>(t->numel()) * sizeof(double);
        f.read(reinterpret_cast<char*>(t->data()), static_cast<std::streamsize>(bytes));
        checksum = fnv1a64(t->data(), bytes, checksum);
    }
    uint64_t stored = 0;
    f.read(reinterpret_cast<char*>(&stored), sizeof(stored));
    if (!f || stored != checksum) throw std::runtime_error("prompt blob corrupt: " + path);
    return p;
}

}  // namespace uwdiff

#endif  // UWDIFF_CLIP_CLASSIFIER_HPP_
