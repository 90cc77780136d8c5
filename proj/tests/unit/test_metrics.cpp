#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include "uwdiff/core/image.hpp"
#include "uwdiff/core/rng.hpp"
#include "uwdiff/io/image_io.hpp"
#include "uwdiff/metrics/ciede2000.hpp"
#include "uwdiff/metrics/cpbd.hpp"
#include "uwdiff/metrics/evaluate.hpp"
#include "uwdiff/metrics/psnr.hpp"
#include "uwdiff/metrics/ssim.hpp"
#include "uwdiff/metrics/uciqe.hpp"
#include "uwdiff/metrics/uiqm.hpp"

namespace {

const std::string kDataDir = UWDIFF_TEST_DATA_DIR;

nlohmann::json load_golden() {
    std::ifstream f(kDataDir + "/metrics_golden.json");
    REQUIRE(f.good());
    return nlohmann::json::parse(f);
}

std::map<std::string, uwdiff::Image> load_corpus(const nlohmann::json& golden) {
    std::map<std::string, uwdiff::Image> corpus;
    for (const auto& entry : golden.at("images")) {
        const auto name = entry.at("file").get<std::string>();
        corpus.emplace(name, uwdiff::load_image(kDataDir + "/corpus/" + name));
    }
    return corpus;
}

}  // namespace

TEST_CASE("corpus no-reference metrics match the frozen reference values", "[metrics]") {
    const nlohmann::json golden = load_golden();
    const auto corpus = load_corpus(golden);
    for (const auto& entry : golden.at("images")) {
        const auto name = entry.at("file").get<std::string>();
        INFO(name);
        const uwdiff::Image& img = corpus.at(name);

        const uwdiff::UiqmBreakdown uq = uwdiff::uiqm_breakdown(img);
        CHECK_THAT(uq.uicm, Catch::Matchers::WithinAbs(entry.at("uicm").get<double>(), 1e-7));
        CHECK_THAT(uq.uism, Catch::Matchers::WithinAbs(entry.at("uism").get<double>(), 1e-7));
        CHECK_THAT(uq.uiconm, Catch::Matchers::WithinAbs(entry.at("uiconm").get<double>(), 1e-7));
        CHECK_THAT(uq.uiqm, Catch::Matchers::WithinAbs(entry.at("uiqm").get<double>(), 1e-7));

        // The reference pipeline converts to Lab through a slightly
        // differently rounded matrix, hence the looser bound here.
        const uwdiff::UciqeBreakdown uc = uwdiff::uciqe_breakdown(img);
        CHECK_THAT(uc.sigma_chroma,
                   Catch::Matchers::WithinAbs(entry.at("sigma_chroma").get<double>(), 5e-4));
        CHECK_THAT(uc.luma_contrast,
                   Catch::Matchers::WithinAbs(entry.at("luma_contrast").get<double>(), 5e-4));
        CHECK_THAT(uc.mean_saturation,
                   Catch::Matchers::WithinAbs(entry.at("mean_saturation").get<double>(), 5e-4));
        CHECK_THAT(uc.uciqe, Catch::Matchers::WithinAbs(entry.at("uciqe").get<double>(), 5e-4));

        const uwdiff::CpbdResult cp = uwdiff::cpbd(img);
        CHECK_THAT(cp.value, Catch::Matchers::WithinAbs(entry.at("cpbd").get<double>(), 1e-9));
        CHECK(cp.no_edges == entry.at("no_edges").get<bool>());
    }
}

TEST_CASE("corpus full-reference metrics match the frozen reference values", "[metrics]") {
    const nlohmann::json golden = load_golden();
    const auto corpus = load_corpus(golden);
    for (const auto& pair : golden.at("pairs")) {
        const auto na = pair.at("a").get<std::string>();
        const auto nb = pair.at("b").get<std::string>();
        INFO(na << " vs " << nb);
        const uwdiff::Image& a = corpus.at(na);
        const uwdiff::Image& b = corpus.at(nb);
        CHECK_THAT(uwdiff::psnr(a, b),
                   Catch::Matchers::WithinAbs(pair.at("psnr").get<double>(), 1e-8));
        CHECK_THAT(uwdiff::ssim(a, b),
                   Catch::Matchers::WithinAbs(pair.at("ssim").get<double>(), 1e-9));
        CHECK_THAT(uwdiff::mean_ciede2000(a, b),
                   Catch::Matchers::WithinAbs(pair.at("ciede2000").get<double>(), 2e-2));
    }
}

TEST_CASE("identical images saturate the full-reference metrics", "[metrics]") {
    uwdiff::Image img(3, 32, 32);
    uwdiff::Rng rng(7);
    for (double& v : img.vec()) v = rng.uniform();
    CHECK(uwdiff::psnr(img, img) == 100.0);
    CHECK_THAT(uwdiff::ssim(img, img), Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK(uwdiff::mean_ciede2000(img, img) == 0.0);
}

TEST_CASE("psnr is symmetric and tracks noise level", "[metrics]") {
    uwdiff::Image clean(3, 24, 24);
    std::fill(clean.vec().begin(), clean.vec().end(), 0.5);
    uwdiff::Rng rng(11);
    uwdiff::Image small = clean, large = clean;
    for (int64_t i = 0; i < clean.numel(); ++i) {
        const double n = rng.normal();
        small.vec()[static_cast<size_t>(i)] += 0.01 * n;
        large.vec()[static_cast<size_t>(i)] += 0.10 * n;
    }
    CHECK(uwdiff::psnr(clean, small) == uwdiff::psnr(small, clean));
    CHECK(uwdiff::psnr(clean, small) > uwdiff::psnr(clean, large) + 15.0);
}

TEST_CASE("blur lowers ssim and sharpness scores", "[metrics]") {
    // Checkerboard against its box-blurred copy.
    uwdiff::Image sharp(3, 64, 64);
    for (int64_t y = 0; y < 64; ++y)
        for (int64_t x = 0; x < 64; ++x) {
            const double v = ((x / 8 + y / 8) % 2 == 0) ? 0.15 : 0.85;
            for (int c = 0; c < 3; ++c) sharp.at(c, y, x) = v;
        }
    uwdiff::Image blurred(3, 64, 64);
    for (int c = 0; c < 3; ++c)
        for (int64_t y = 0; y < 64; ++y)
            for (int64_t x = 0; x < 64; ++x) {
                double acc = 0.0;
                for (int64_t dy = -2; dy <= 2; ++dy)
                    for (int64_t dx = -2; dx <= 2; ++dx) {
                        const int64_t yy = std::clamp<int64_t>(y + dy, 0, 63);
                        const int64_t xx = std::clamp<int64_t>(x + dx, 0, 63);
                        acc += sharp.at(c, yy, xx);
                    }
                blurred.at(c, y, x) = acc / 25.0;
            }
    CHECK(uwdiff::ssim(sharp, blurred) < 0.9);
    const auto cp_sharp = uwdiff::cpbd(sharp);
    const auto cp_blur = uwdiff::cpbd(blurred);
    REQUIRE_FALSE(cp_sharp.no_edges);
    REQUIRE_FALSE(cp_blur.no_edges);
    CHECK(cp_sharp.value > cp_blur.value);
}

TEST_CASE("constant images report the no-edge flag", "[metrics]") {
    uwdiff::Image flat(3, 64, 64);
    std::fill(flat.vec().begin(), flat.vec().end(), 0.4);
    const auto cp = uwdiff::cpbd(flat);
    CHECK(cp.no_edges);
    CHECK(cp.value == 0.0);
}

TEST_CASE("evaluation rows, mean aggregation and csv layout", "[metrics]") {
    uwdiff::Image a(3, 64, 64), b(3, 64, 64);
    uwdiff::Rng rng(3);
    for (double& v : a.vec()) v = 0.2 + 0.6 * rng.uniform();
    for (int64_t i = 0; i < b.numel(); ++i)
        b.vec()[static_cast<size_t>(i)] = a.vec()[static_cast<size_t>(i)] * 0.9 + 0.05;

    const uwdiff::MetricsRow with_ref = uwdiff::evaluate_image("s1", a, &b);
    const uwdiff::MetricsRow without_ref = uwdiff::evaluate_image("s2", a, nullptr);
    CHECK(with_ref.psnr > 0.0);
    CHECK(std::isnan(without_ref.psnr));
    CHECK(std::isnan(without_ref.ssim));
    CHECK(std::isnan(without_ref.ciede2000));
    CHECK(without_ref.uiqm == with_ref.uiqm);
    CHECK(without_ref.uciqe == with_ref.uciqe);

    const uwdiff::MetricsRow mean = uwdiff::mean_metrics({with_ref, without_ref});
    CHECK(mean.psnr == with_ref.psnr);  // NaN rows are skipped per column
    CHECK_THAT(mean.uiqm, Catch::Matchers::WithinAbs(with_ref.uiqm, 1e-12));

    const std::string csv = uwdiff::metrics_csv({with_ref, without_ref});
    CHECK(csv.rfind("id,psnr,ssim,uiqm,uciqe,cpbd,ciede2000\n", 0) == 0);
    CHECK(csv.find("\nMEAN,") != std::string::npos);
    CHECK(csv.find("s2,nan,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 2 rows + mean
}

TEST_CASE("image files round trip through 8-bit quantization", "[metrics][io]") {
    uwdiff::Image img(3, 20, 31);
    uwdiff::Rng rng(19);
    for (double& v : img.vec()) v = rng.uniform();
    const std::string path = "roundtrip_test.png";
    uwdiff::save_image(path, img);
    const uwdiff::Image back = uwdiff::load_image(path);
    REQUIRE(back.height() == 20);
    REQUIRE(back.width() == 31);
    double max_err = 0.0;
    for (int64_t i = 0; i < img.numel(); ++i)
        max_err = std::max(max_err, std::abs(back.vec()[static_cast<size_t>(i)] -
                                             img.vec()[static_cast<size_t>(i)]));
    CHECK(max_err <= 0.5 / 255.0 + 1e-12);
    uwdiff::Image again = uwdiff::load_image(path);
    CHECK(again.vec() == back.vec());
    std::remove(path.c_str());
}
