#ifndef UWDIFF_CLIP_PROJECTION_BACKEND_HPP_
#define UWDIFF_CLIP_PROJECTION_BACKEND_HPP_

#include <cblas.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwdiff/clip/backend.hpp"
#include "uwdiff/core/hash.hpp"
#include "uwdiff/core/image.hpp"
#include "uwdiff/core/rng.hpp"
#include "uwdiff/nn/autograd.hpp"

namespace uwdiff {

// Linear-projection embedding backend. Vision side: bilinear resize to a
// fixed S x S grid, flatten, multiply by W_img, L2-normalize. Text side:
// mean-pool the prompt token matrix, multiply by W_txt, L2-normalize.
// Weights are frozen; they come from a seed or from a weight blob on disk,
// so a stronger projection trained elsewhere can be dropped in without
// touching callers.
class ProjectionBackend : public EmbeddingBackend {
  public:
    ProjectionBackend(int input_size, int embed_dim, int token_count, int token_dim,
                      std::vector<double> w_img, std::vector<double> w_txt)
        : s_(input_size), d_(embed_dim), n_(token_count), e_(token_dim),
          w_img_(std::move(w_img)), w_txt_(std::move(w_txt)) {
        ensure_single_thread_blas();
        if (w_img_.size() != static_cast<size_t>(d_) * flat_dim())
            throw std::invalid_argument("w_img size mismatch");
        if (w_txt_.size() != static_cast<size_t>(d_) * e_)
            throw std::invalid_argument("w_txt size mismatch");
        // The id is a content hash, so a reloaded blob keeps the identity
        // its prompt blobs were trained against.
        const int32_t dims[4] = {s_, d_, n_, e_};
        uint64_t h = fnv1a64(dims, sizeof(dims));
        h = fnv1a64(w_img_.data(), w_img_.size() * sizeof(double), h);
        h = fnv1a64(w_txt_.data(), w_txt_.size() * sizeof(double), h);
        id_ = "proj-" + hex64(h);
    }

    static std::shared_ptr<ProjectionBackend> seeded(uint64_t seed, int input_size = 16,
                                                     int embed_dim = 64,
                                                     int token_count = 77,
                                                     int token_dim = 32) {
        Rng rng(splitmix64(seed ^ 0x636c6970ULL));
        const int64_t flat = 3LL * input_size * input_size;
        std::vector<double> wi(static_cast<size_t>(embed_dim * flat));
        const double si = 1.0 / std::sqrt(static_cast<double>(flat));
        for (double& v : wi) v = si * rng.normal();
        std::vector<double> wt(static_cast<size_t>(embed_dim * token_dim));
        const double st = 1.0 / std::sqrt(static_cast<double>(token_dim));
        for (double& v : wt) v = st * rng.normal();
        return std::make_shared<ProjectionBackend>(input_size, embed_dim, token_count, token_dim,
                                                   std::move(wi), std::move(wt));
    }

    std::string id() const override { return id_; }
    int embed_dim() const override { return d_; }
    int token_dim() const override { return e_; }
    int token_count() const override { return n_; }
    int input_size() const { return s_; }

    std::vector<double> embed_image(const Image& img) const override {
        const std::vector<double> flat = flatten(img);
        std::vector<double> z(static_cast<size_t>(d_));
        cblas_dgemv(CblasRowMajor, CblasNoTrans, d_, static_cast<int>(flat_dim()), 1.0,
                    w_img_.data(), static_cast<int>(flat_dim()), flat.data(), 1, 0.0,
                    z.data(), 1);
        normalize(z);
        return z;
    }

    Image image_vjp(const Image& img, const std::vector<double>& de) const override {
        const std::vector<double> flat = flatten(img);
        std::vector<double> z(static_cast<size_t>(d_));
        cblas_dgemv(CblasRowMajor, CblasNoTrans, d_, static_cast<int>(flat_dim()), 1.0,
                    w_img_.data(), static_cast<int>(flat_dim()), flat.data(), 1, 0.0,
                    z.data(), 1);
        const std::vector<double> dz = normalize_vjp(z, de);

        std::vector<double> dflat(static_cast<size_t>(flat_dim()));
        cblas_dgemv(CblasRowMajor, CblasTrans, d_, static_cast<int>(flat_dim()), 1.0,
                    w_img_.data(), static_cast<int>(flat_dim()), dz.data(), 1, 0.0,
                    dflat.data(), 1);

        Image small(3, s_, s_);
        std::copy(dflat.begin(), dflat.end(), small.vec().begin());
        return bilinear_resize_vjp(small, img.height(), img.width());
    }

    std::vector<double> embed_tokens(const Tensor& tokens) const override {
        check_tokens(tokens);
        std::vector<double> mean(static_cast<size_t>(e_), 0.0);
        for (int64_t i = 0; i < n_; ++i)
            for (int64_t j = 0; j < e_; ++j) mean[static_cast<size_t>(j)] += tokens[i * e_ + j];
        for (double& v : mean) v /= static_cast<double>(n_);

        std::vector<double> z(static_cast<size_t>(d_));
        cblas_dgemv(CblasRowMajor, CblasNoTrans, d_, e_, 1.0, w_txt_.data(), e_,
                    mean.data(), 1, 0.0, z.data(), 1);
        normalize(z);
        return z;
    }

    Tensor tokens_vjp(const Tensor& tokens, const std::vector<double>& de) const override {
        check_tokens(tokens);
        std::vector<double> mean(static_cast<size_t>(e_), 0.0);
        for (int64_t i = 0; i < n_; ++i)
            for (int64_t j = 0; j < e_; ++j) mean[static_cast<size_t>(j)] += tokens[i * e_ + j];
        for (double& v : mean) v /= static_cast<double>(n_);

        std::vector<double> z(static_cast<size_t>(d_));
        cblas_dgemv(CblasRowMajor, CblasNoTrans, d_, e_, 1.0, w_txt_.data(), e_,
                    mean.data(), 1, 0.0, z.data(), 1);
        const std::vector<double> dz = normalize_vjp(z, de);

        std::vector<double> dmean(static_cast<size_t>(e_));
        cblas_dgemv(CblasRowMajor, CblasTrans, d_, e_, 1.0, w_txt_.data(), e_, dz.data(),
                    1, 0.0, dmean.data(), 1);

        Tensor dtok({n_, e_});
        for (int64_t i = 0; i < n_; ++i)
            for (int64_t j = 0; j < e_; ++j)
                dtok[i * e_ + j] = dmean[static_cast<size_t>(j)] / static_cast<double>(n_);
        return dtok;
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write backend blob: " + path);
        f.write("UWEB", 4);
        const int32_t dims[4] = {s_, d_, n_, e_};
        f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
        uint64_t checksum = 0xcbf29ce484222325ULL;
        for (const std::vector<double>* w : {&w_img_, &w_txt_}) {
            f.write(reinterpret_cast<const char*>(w->data()),
                    static_cast<std::streamsize>(w->size() * sizeof(double)));
            checksum = fnv1a64(w->data(), w->size() * sizeof(double), checksum);
        }
        f.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
    }

    static std::shared_ptr<ProjectionBackend> load(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open backend blob: " + path);
        char magic[4];
        f.read(magic, 4);
        if (!f || std::string(magic, 4) != "UWEB")
            throw std::runtime_error("not a backend blob: " + path);
        int32_t dims[4];
        f.read(reinterpret_cast<char*>(dims), sizeof(dims));
        const int s = dims[0], d = dims[1], n = dims[2], e = dims[3];
        std::vector<double> wi(static_cast<size_t>(d) * 3 * s * s);
        std::vector<double> wt(static_cast<size_t>(d) * e);
        uint64_t checksum = 0xcbf29ce484222325ULL;
        for (std::vector<double>* w : {&wi, &wt}) {
            f.read(reinterpret_cast<char*>(w->data()),
                   static_cast<std::streamsize>(w->size() * sizeof(double)));
            checksum = fnv1a64(w->data(), w->size() * sizeof(double), checksum);
        }
        uint64_t stored = 0;
        f.read(reinterpret_cast<char*>(&stored), sizeof(stored));
        if (!f || stored != checksum)
            throw std::runtime_error("backend blob corrupt: " + path);
        return std::make_shared<ProjectionBackend>(s, d, n, e, std::move(wi), std::move(wt));
    }

  private:
    int64_t flat_dim() const { return 3LL * s_ * s_; }

    std::vector<double> flatten(const Image& img) const {
        const Image r = bilinear_resize(img, s_, s_);
        return r.vec();
    }

    static void normalize(std::vector<double>& z) {
        double nrm = 0.0;
        for (double v : z) nrm += v * v;
        nrm = std::sqrt(nrm);
        if (nrm < 1e-12) nrm = 1e-12;
        for (double& v : z) v /= nrm;
    }

    // VJP of e = z/|z| : dz = (de - e (e . de)) / |z|.
    static std::vector<double> normalize_vjp(const std::vector<double>& z,
                                             const std::vector<double>& de) {
        double nrm = 0.0;
        for (double v : z) nrm += v * v;
        nrm = std::sqrt(nrm);
        if (nrm < 1e-12) nrm = 1e-12;
        std::vector<double> e(z.size());
        for (size_t i = 0; i < z.size(); ++i) e[i] = z[i] / nrm;
        double dot = 0.0;
        for (size_t i = 0; i < z.size(); ++i) dot += e[i] * de[i];
        std::vector<double> dz(z.size());
        for (size_t i = 0; i < z.size(); ++i) dz[i] = (de[i] - e[i] * dot) / nrm;
        return dz;
    }

    void check_tokens(const Tensor& tokens) const {
        if (tokens.rank() != 2 || tokens.dim(0) != n_ || tokens.dim(1) != e_)
            throw std::invalid_argument("prompt token matrix has wrong shape");
    }

    int s_, d_, n_, e_;
    std::vector<double> w_img_, w_txt_;
    std::string id_;
};

}  // namespace uwdiff

#endif  // UWDIFF_CLIP_PROJECTION_BACKEND_HPP_
