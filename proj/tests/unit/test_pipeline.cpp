#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include "uwdiff/color/convert.hpp"
#include "uwdiff/color/transfer.hpp"
#include "uwdiff/core/rng.hpp"
#include "uwdiff/data/synthesis.hpp"
#include "uwdiff/io/image_io.hpp"
#include "uwdiff/io/manifest.hpp"
#include "uwdiff/pipeline/config.hpp"
#include "uwdiff/pipeline/rundir.hpp"

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("uwdiff_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& rel = "") const { return (path / rel).string(); }
};

uwdiff::Image random_image(uint64_t seed, double lo, double hi, int64_t h = 24, int64_t w = 24) {
    uwdiff::Image img(3, h, w);
    uwdiff::Rng rng(seed);
    for (double& v : img.vec()) v = lo + (hi - lo) * rng.uniform();
    return img;
}

}  // namespace

TEST_CASE("config file parsing, overrides and typed access", "[pipeline]") {
    const std::string text =
        "train.batch_size = 8\n"
        "# full-line comment\n"
        "train.lr = 1e-4   # trailing comment\n"
        "sampler.kind = ddim\n"
        "guidance.enabled = true\n"
        "\n";
    uwdiff::Config cfg = uwdiff::Config::parse(text);
    CHECK(cfg.get_int("train.batch_size", 0) == 8);
    CHECK(cfg.get_double("train.lr", 0.0) == 1e-4);
    CHECK(cfg.get_string("sampler.kind", "") == "ddim");
    CHECK(cfg.get_bool("guidance.enabled", false));
    CHECK(cfg.get_int("absent", 42) == 42);
    CHECK_THROWS(cfg.require_string("absent"));
    CHECK_THROWS(cfg.get_int("sampler.kind", 0));
    CHECK_THROWS(uwdiff::Config::parse("novalue\n"));

    uwdiff::Config overrides;
    overrides.set("train.lr", "5e-5");
    cfg.merge_from(overrides);
    CHECK(cfg.get_double("train.lr", 0.0) == 5e-5);

    // dump is sorted and reparses to the same map
    const uwdiff::Config again = uwdiff::Config::parse(cfg.dump());
    CHECK(again.items() == cfg.items());
}

TEST_CASE("manifest round trip preserves records and split", "[pipeline]") {
    TempDir tmp("manifest");
    uwdiff::Manifest m;
    m.split = "val";
    uwdiff::ManifestRecord a;
    a.id = "s01";
    a.degraded_path = "degraded/s01.png";
    a.reference_path = "/abs/ref/s01.png";
    a.template_path = "/abs/tpl/t3.png";
    a.seed = 12345;
    a.has_seed = true;
    uwdiff::ManifestRecord b;
    b.id = "s02";
    b.reference_path = "/abs/ref/s02.png";
    m.records = {a, b};

    const std::string path = tmp.str("m.jsonl");
    uwdiff::save_manifest(path, m);
    const uwdiff::Manifest back = uwdiff::load_manifest(path);
    REQUIRE(back.records.size() == 2);
    CHECK(back.split == "val");
    CHECK(back.records[0].id == "s01");
    CHECK(back.records[0].degraded_path == "degraded/s01.png");
    CHECK(back.records[0].template_path == "/abs/tpl/t3.png");
    CHECK(back.records[0].has_seed);
    CHECK(back.records[0].seed == 12345);
    CHECK_FALSE(back.records[1].has_seed);
    CHECK(back.records[1].degraded_path.empty());

    CHECK(uwdiff::resolve_manifest_path(path, "degraded/s01.png") ==
          tmp.str("degraded/s01.png"));
    CHECK(uwdiff::resolve_manifest_path(path, "/abs/x.png") == "/abs/x.png");

    CHECK_THROWS(uwdiff::load_manifest(tmp.str("missing.jsonl")));
    uwdiff::write_text_file(tmp.str("bad.jsonl"), "{\"kind\":\"other\"}\n");
    CHECK_THROWS(uwdiff::load_manifest(tmp.str("bad.jsonl")));
}

TEST_CASE("run directory snapshots config and fingerprints outputs", "[pipeline]") {
    TempDir tmp("rundir");
    uwdiff::RunDir run(tmp.str("run1"));
    uwdiff::Config cfg;
    cfg.set("a.b", "1");
    run.snapshot_config(cfg);
    uwdiff::write_text_file(run.path("result.csv"), "id,x\nr1,2\n");
    run.add_output("result.csv");
    run.write_summary("test-cmd", {{"rows", 1}});

    const nlohmann::json summary = nlohmann::json::parse(uwdiff::read_text_file(run.path("summary.json")));
    CHECK(summary.at("command") == "test-cmd");
    CHECK(summary.at("details").at("rows") == 1);
    const std::string fp = summary.at("outputs").at("result.csv").get<std::string>();
    CHECK(fp.size() == 16);
    CHECK(fp == uwdiff::file_fingerprint(run.path("result.csv")));
    CHECK(uwdiff::read_text_file(run.path("config.snapshot.txt")) == "a.b = 1\n");
}

TEST_CASE("synthesis produces template-statistics-matched pairs", "[pipeline]") {
    TempDir tmp("synth");
    fs::create_directories(tmp.str("refs"));
    fs::create_directories(tmp.str("pool"));

    // Mid-range references and two strongly cast templates. Everything is
    // kept away from the gamut boundary so clamping stays rare.
    for (int i = 0; i < 3; ++i)
        uwdiff::save_image(tmp.str("refs/ref" + std::to_string(i) + ".png"),
                           random_image(100 + static_cast<uint64_t>(i), 0.35, 0.65));
    uwdiff::Image cast_a = random_image(200, 0.3, 0.5);
    for (int64_t p = 0; p < 24 * 24; ++p) cast_a.plane(0)[p] *= 0.55;  // red loss
    uwdiff::save_image(tmp.str("pool/t0.png"), cast_a);
    uwdiff::Image cast_b = random_image(201, 0.4, 0.6);
    for (int64_t p = 0; p < 24 * 24; ++p) cast_b.plane(2)[p] = 0.25 + 0.3 * cast_b.plane(2)[p];
    uwdiff::save_image(tmp.str("pool/t1.png"), cast_b);

    const uwdiff::Manifest refs = uwdiff::manifest_from_reference_dir(tmp.str("refs"), "train");
    REQUIRE(refs.records.size() == 3);
    CHECK(refs.records[0].id == "ref0");

    uwdiff::SynthesisConfig cfg;
    cfg.seed = 7;
    const auto pool = uwdiff::list_image_files(tmp.str("pool"));
    REQUIRE(pool.size() == 2);
    const uwdiff::SynthesisOutcome out =
        uwdiff::synthesize_pairs(refs, pool, tmp.str("out"), cfg);

    REQUIRE(out.manifest.records.size() == 3);
    const std::string mpath = tmp.str("out/manifest.jsonl");
    REQUIRE(fs::exists(mpath));
    const uwdiff::Manifest loaded = uwdiff::load_manifest(mpath);
    REQUIRE(loaded.records.size() == 3);
    CHECK(loaded.split == "train");

    for (const auto& r : loaded.records) {
        REQUIRE(r.has_seed);
        const std::string dpath = uwdiff::resolve_manifest_path(mpath, r.degraded_path);
        REQUIRE(fs::exists(dpath));
        // Lab statistics of the degraded output track its template's,
        // up to 8-bit quantization of the stored PNG.
        const uwdiff::Image degraded = uwdiff::load_image(dpath);
        const uwdiff::Image tpl = uwdiff::load_image(r.template_path);
        const auto ds = uwdiff::lab_channel_stats(uwdiff::srgb_to_lab(degraded));
        const auto ts = uwdiff::lab_channel_stats(uwdiff::srgb_to_lab(tpl));
        for (int c = 0; c < 3; ++c) {
            CHECK_THAT(ds.mean[c], Catch::Matchers::WithinAbs(ts.mean[c], 0.25));
            CHECK_THAT(ds.stddev[c], Catch::Matchers::WithinAbs(ts.stddev[c], 0.25));
        }
    }

    // Per-record seeds come from the global seed and the record index.
    CHECK(loaded.records[0].seed == uwdiff::item_seed(7, 0));
    CHECK(loaded.records[2].seed == uwdiff::item_seed(7, 2));

    // Same seed reruns bit-identically; the training loader accepts the output.
    const uwdiff::SynthesisOutcome again =
        uwdiff::synthesize_pairs(refs, pool, tmp.str("out2"), cfg);
    CHECK(uwdiff::file_fingerprint(tmp.str("out/degraded/ref1.png")) ==
          uwdiff::file_fingerprint(tmp.str("out2/degraded/ref1.png")));
    CHECK(again.clamped_pixels == out.clamped_pixels);

    const auto pairs = uwdiff::load_pairs(mpath);
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0].reference.width() == 24);
    CHECK(pairs[0].degraded.width() == 24);
}

TEST_CASE("synthesis rejects bad inputs", "[pipeline]") {
    TempDir tmp("synthbad");
    fs::create_directories(tmp.str("refs"));
    uwdiff::save_image(tmp.str("refs/a.png"), random_image(1, 0.3, 0.7));
    const uwdiff::Manifest refs = uwdiff::manifest_from_reference_dir(tmp.str("refs"), "train");

    CHECK_THROWS(uwdiff::synthesize_pairs(refs, {}, tmp.str("out"), {}));
    uwdiff::Manifest dup = refs;
    dup.records.push_back(dup.records[0]);
    CHECK_THROWS(
        uwdiff::synthesize_pairs(dup, {tmp.str("refs/a.png")}, tmp.str("out"), {}));
    CHECK_THROWS(uwdiff::synthesize_pairs(uwdiff::Manifest{}, {tmp.str("refs/a.png")},
                                          tmp.str("out"), {}));
}
