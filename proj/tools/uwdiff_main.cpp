// Command-line front end for the underwater enhancement pipeline.
//
// Subcommands mirror the pipeline stages: synth -> pretrain ->
// learn-prompts -> finetune -> enhance -> evaluate, plus diagnose for
// classifier score curves. Every run writes its artifacts into --out
// together with a config snapshot and a summary.json carrying content
// fingerprints of the outputs.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "uwdiff/clip/classifier.hpp"
#include "uwdiff/clip/projection_backend.hpp"
#include "uwdiff/clip/score_curve.hpp"
#include "uwdiff/core/rng.hpp"
#include "uwdiff/data/synthesis.hpp"
#include "uwdiff/denoiser/checkpoint.hpp"
#include "uwdiff/denoiser/train.hpp"
#include "uwdiff/denoiser/unet.hpp"
#include "uwdiff/diffusion/schedule.hpp"
#include "uwdiff/guidance/enhance.hpp"
#include "uwdiff/guidance/finetune.hpp"
#include "uwdiff/io/image_io.hpp"
#include "uwdiff/io/manifest.hpp"
#include "uwdiff/metrics/evaluate.hpp"
#include "uwdiff/pipeline/config.hpp"
#include "uwdiff/pipeline/rundir.hpp"

namespace {

namespace fs = std::filesystem;
using uwdiff::Config;

struct CommonOpts {
    std::string config_path;
    std::string out;
    uint64_t seed = 0;
    bool deterministic = true;  // always on; kept for provenance in summaries
};

void add_common(CLI::App* cmd, CommonOpts* o) {
    cmd->add_option("--config", o->config_path, "config file (dotted.key = value lines)");
    cmd->add_option("--out", o->out, "output directory")->required();
    cmd->add_option("--seed", o->seed, "global seed for this run");
    cmd->add_flag("--deterministic,!--no-deterministic", o->deterministic,
                  "runs are always deterministic for a fixed seed; recorded in the summary");
}

Config load_config(const CommonOpts& o) {
    Config cfg;
    if (!o.config_path.empty()) cfg = Config::load(o.config_path);
    return cfg;
}

void note_common(Config* cfg, const CommonOpts& o) {
    cfg->set("run.seed", std::to_string(o.seed));
    cfg->set("run.deterministic", o.deterministic ? "true" : "false");
}

uwdiff::DenoiserConfig model_config(const Config& cfg) {
    uwdiff::DenoiserConfig mc;
    mc.base_channels = static_cast<int>(cfg.get_int("model.base_channels", mc.base_channels));
    mc.levels = static_cast<int>(cfg.get_int("model.levels", mc.levels));
    mc.time_dim = static_cast<int>(cfg.get_int("model.time_dim", mc.time_dim));
    return mc;
}

uwdiff::Schedule schedule_config(const Config& cfg) {
    return uwdiff::Schedule::linear(static_cast<int>(cfg.get_int("schedule.steps", 2000)),
                                    cfg.get_double("schedule.beta_start", 1e-6),
                                    cfg.get_double("schedule.beta_end", 1e-2));
}

std::string csv_training_log(const std::vector<uwdiff::TrainLogRow>& log) {
    std::string out = "step,loss,lr,wallclock_s\n";
    char buf[160];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof(buf), "%lld,%.10g,%.10g,%.6f\n",
                      static_cast<long long>(r.step), r.loss, r.lr, r.wallclock_s);
        out += buf;
    }
    return out;
}

std::shared_ptr<uwdiff::ProjectionBackend> backend_from_config(const Config& cfg, uint64_t seed) {
    return uwdiff::ProjectionBackend::seeded(
        seed, static_cast<int>(cfg.get_int("clip.image_size", 16)),
        static_cast<int>(cfg.get_int("clip.embed_dim", 64)),
        static_cast<int>(cfg.get_int("clip.token_count", 77)),
        static_cast<int>(cfg.get_int("clip.token_dim", 32)));
}

uwdiff::ClipClassifier load_classifier(const std::string& backend_path,
                                       const std::string& prompts_path) {
    auto backend = uwdiff::ProjectionBackend::load(backend_path);
    uwdiff::PromptPair prompts = uwdiff::load_prompts(prompts_path);
    if (prompts.backend_id != backend->id())
        throw std::runtime_error("prompt blob was trained for backend " + prompts.backend_id +
                                 " but got " + backend->id());
    return uwdiff::ClipClassifier(std::move(backend), std::move(prompts));
}

// ----------------------------------------------------------------- synth

int run_synth(const CommonOpts& o, const std::string& manifest_path, const std::string& refs_dir,
              const std::string& pool_dir, const std::string& split) {
    Config cfg = load_config(o);
    note_common(&cfg, o);

    uwdiff::Manifest refs;
    if (!manifest_path.empty())
        refs = uwdiff::load_manifest(manifest_path);
    else
        refs = uwdiff::manifest_from_reference_dir(refs_dir, split);
    if (!manifest_path.empty() && !refs_dir.empty())
        throw CLI::ValidationError("--manifest and --refs are mutually exclusive");

    uwdiff::SynthesisConfig sc;
    sc.seed = o.seed;
    sc.split = split;
    const auto pool = uwdiff::list_image_files(pool_dir);

    uwdiff::RunDir run(o.out);
    const uwdiff::SynthesisOutcome outcome = uwdiff::synthesize_pairs(refs, pool, o.out, sc);
    run.snapshot_config(cfg);
    run.add_output("manifest.jsonl");
    run.write_summary("synth", {{"pairs", outcome.manifest.records.size()},
                                {"templates", pool.size()},
                                {"clamped_pixels", outcome.clamped_pixels}});
    std::cout << "synth: " << outcome.manifest.records.size() << " pairs from " << pool.size()
              << " templates -> " << o.out << "\n";
    return 0;
}

// -------------------------------------------------------------- pretrain

int run_pretrain(const CommonOpts& o, const std::string& data_path) {
    Config cfg = load_config(o);
    note_common(&cfg, o);

    const auto pairs = uwdiff::load_pairs(data_path);
    const uwdiff::Schedule sched = schedule_config(cfg);
    uwdiff::Denoiser model(model_config(cfg));
    {
        uwdiff::Rng rng(uwdiff::splitmix64(o.seed));
        model.init_params(rng);
    }

    uwdiff::TrainConfig tc;
    tc.batch_size = static_cast<int>(cfg.get_int("train.batch_size", tc.batch_size));
    tc.steps = static_cast<int>(cfg.get_int("train.steps", tc.steps));
    tc.lr = cfg.get_double("train.lr", tc.lr);
    tc.augment = cfg.get_bool("train.augment", tc.augment);
    tc.log_every = static_cast<int>(cfg.get_int("train.log_every", tc.log_every));
    tc.seed = o.seed;

    uwdiff::RunDir run(o.out);
    run.snapshot_config(cfg);

    std::vector<uwdiff::TrainLogRow> log;
    uwdiff::DenoiserTrainer trainer(model, sched, tc);
    trainer.run(pairs, &log);

    uwdiff::save_checkpoint(run.path("model.ckpt"), model, sched, "pretrained", tc.steps);
    uwdiff::write_text_file(run.path("training_log.csv"), csv_training_log(log));
    run.add_output("model.ckpt");
    run.add_output("training_log.csv");
    run.write_summary("pretrain", {{"steps", tc.steps},
                                   {"pairs", pairs.size()},
                                   {"final_loss", log.empty() ? 0.0 : log.back().loss}});
    std::cout << "pretrain: " << tc.steps << " steps on " << pairs.size() << " pairs -> "
              << run.path("model.ckpt") << "\n";
    return 0;
}

// ---------------------------------------------------------- learn-prompts

int run_learn_prompts(const CommonOpts& o, const std::string& data_path) {
    Config cfg = load_config(o);
    note_common(&cfg, o);

    const uwdiff::Manifest m = uwdiff::load_manifest(data_path);
    std::vector<uwdiff::LabeledImage> labeled;
    for (const auto& r : m.records) {
        if (!r.degraded_path.empty())
            labeled.push_back({uwdiff::load_image(uwdiff::resolve_manifest_path(
                                   data_path, r.degraded_path)),
                               0});
        if (!r.reference_path.empty())
            labeled.push_back({uwdiff::load_image(uwdiff::resolve_manifest_path(
                                   data_path, r.reference_path)),
                               1});
    }

    auto backend = backend_from_config(cfg, o.seed);
    uwdiff::PromptTrainConfig pc;
    pc.steps = static_cast<int>(cfg.get_int("prompts.steps", pc.steps));
    pc.batch_size = static_cast<int>(cfg.get_int("prompts.batch_size", pc.batch_size));
    pc.lr = cfg.get_double("prompts.lr", pc.lr);
    pc.seed = o.seed;

    std::vector<double> loss_log;
    const uwdiff::PromptPair prompts = uwdiff::learn_prompts(backend, labeled, pc, &loss_log);

    uwdiff::ClipClassifier clf(backend, prompts);
    int64_t correct = 0;
    for (const auto& s : labeled) {
        const double p_u = clf.underwater_prob(s.image);
        if ((s.label == 0) == (p_u > 0.5)) ++correct;
    }

    uwdiff::RunDir run(o.out);
    run.snapshot_config(cfg);
    backend->save(run.path("backend.bin"));
    uwdiff::save_prompts(run.path("prompts.bin"), prompts);
    std::string losses = "step,loss\n";
    for (size_t i = 0; i < loss_log.size(); ++i)
        losses += std::to_string(i + 1) + "," + std::to_string(loss_log[i]) + "\n";
    uwdiff::write_text_file(run.path("prompt_loss.csv"), losses);
    run.add_output("backend.bin");
    run.add_output("prompts.bin");
    run.add_output("prompt_loss.csv");
    run.write_summary("learn-prompts",
                      {{"examples", labeled.size()},
                       {"train_accuracy",
                        static_cast<double>(correct) / static_cast<double>(labeled.size())},
                       {"final_loss", loss_log.empty() ? 0.0 : loss_log.back()}});
    std::cout << "learn-prompts: " << labeled.size() << " examples, train accuracy "
              << static_cast<double>(correct) / static_cast<double>(labeled.size()) << " -> "
              << run.path("prompts.bin") << "\n";
    return 0;
}

// -------------------------------------------------------------- finetune

int run_finetune(const CommonOpts& o, const std::string& from_ckpt, const std::string& data_path,
                 const std::string& prompts_path, const std::string& backend_path, double lambda,
                 double t_m, bool no_clip) {
    Config cfg = load_config(o);
    note_common(&cfg, o);

    uwdiff::LoadedCheckpoint ckpt = uwdiff::load_checkpoint(from_ckpt);
    const auto pairs = uwdiff::load_pairs(data_path);

    uwdiff::FinetuneConfig fc;
    fc.batch_size = static_cast<int>(cfg.get_int("finetune.batch_size", fc.batch_size));
    fc.epochs = static_cast<int>(cfg.get_int("finetune.epochs", fc.epochs));
    fc.t_stride = static_cast<int>(cfg.get_int("finetune.t_stride", fc.t_stride));
    fc.lr = cfg.get_double("finetune.lr", fc.lr);
    fc.augment = cfg.get_bool("finetune.augment", fc.augment);
    fc.seed = o.seed;
    fc.guidance.lambda = lambda;
    fc.guidance.t_m = t_m;
    fc.guidance.rms_clip = cfg.get_double("guidance.rms_clip", fc.guidance.rms_clip);
    fc.guidance.enabled = !no_clip;

    std::unique_ptr<uwdiff::ClipClassifier> clf;
    std::vector<const uwdiff::ClipClassifier*> classifiers;
    if (fc.guidance.enabled) {
        if (prompts_path.empty() || backend_path.empty())
            throw CLI::ValidationError("guided fine-tuning needs --prompts and --backend");
        clf = std::make_unique<uwdiff::ClipClassifier>(
            load_classifier(backend_path, prompts_path));
        classifiers.push_back(clf.get());
    }

    uwdiff::RunDir run(o.out);
    run.snapshot_config(cfg);

    std::vector<uwdiff::EpochStats> stats;
    uwdiff::FinetuneTrainer trainer(ckpt.model, ckpt.schedule, classifiers, fc);
    trainer.run(pairs, &stats);

    int64_t new_steps = ckpt.step_count;
    for (const auto& s : stats) new_steps += s.steps;
    const std::string stage = fc.guidance.enabled ? "finetuned-guided" : "finetuned-unguided";
    uwdiff::save_checkpoint(run.path("model.ckpt"), ckpt.model, ckpt.schedule, stage, new_steps,
                            {{"guidance",
                              {{"lambda", fc.guidance.lambda},
                               {"t_m", fc.guidance.t_m},
                               {"rms_clip", fc.guidance.rms_clip},
                               {"enabled", fc.guidance.enabled}}}});

    std::string stats_csv = "epoch,steps,mean_loss,wallclock_s,clip_wallclock_s\n";
    char buf[160];
    for (size_t e = 0; e < stats.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%lld,%.10g,%.6f,%.6f\n", e + 1,
                      static_cast<long long>(stats[e].steps), stats[e].mean_loss,
                      stats[e].wallclock_s, stats[e].clip_wallclock_s);
        stats_csv += buf;
    }
    uwdiff::write_text_file(run.path("epoch_stats.csv"), stats_csv);
    run.add_output("model.ckpt");
    run.add_output("epoch_stats.csv");
    run.write_summary("finetune", {{"stage", stage},
                                   {"epochs", fc.epochs},
                                   {"lambda", fc.guidance.lambda},
                                   {"t_m", fc.guidance.t_m},
                                   {"final_mean_loss", stats.empty() ? 0.0 : stats.back().mean_loss}});
    std::cout << "finetune: stage " << stage << ", " << stats.size() << " epochs -> "
              << run.path("model.ckpt") << "\n";
    return 0;
}

// --------------------------------------------------------------- enhance

int run_enhance(const CommonOpts& o, const std::string& model_path, const std::string& in_dir,
                const std::string& sampler, int steps, double eta, bool clamp_x0) {
    Config cfg = load_config(o);
    note_common(&cfg, o);
    cfg.set("enhance.clamp_x0", clamp_x0 ? "true" : "false");

    uwdiff::LoadedCheckpoint ckpt = uwdiff::load_checkpoint(model_path);
    const auto files = uwdiff::list_image_files(in_dir);
    if (files.empty()) throw std::runtime_error("no images in " + in_dir);

    uwdiff::EnhanceConfig ec;
    ec.sampler.kind = sampler;
    ec.sampler.steps = steps;
    ec.sampler.eta = eta;
    ec.sampler.clamp = {clamp_x0, 0.0, 1.0};

    uwdiff::RunDir run(o.out);
    run.snapshot_config(cfg);
    for (size_t i = 0; i < files.size(); ++i) {
        ec.seed = uwdiff::item_seed(o.seed, static_cast<uint64_t>(i));
        const uwdiff::Image degraded = uwdiff::load_image(files[i]);
        const uwdiff::Image restored =
            uwdiff::enhance_image(ckpt.model, ckpt.schedule, degraded, ec);
        const std::string name = fs::path(files[i]).stem().string() + ".png";
        uwdiff::save_image(run.path(name), restored);
        run.add_output(name);
        std::cout << "enhance: " << files[i] << " -> " << run.path(name) << "\n";
    }
    run.write_summary("enhance", {{"images", files.size()},
                                  {"sampler", ec.sampler.kind},
                                  {"steps", ec.sampler.steps},
                                  {"eta", ec.sampler.eta},
                                  {"clamp_x0", clamp_x0},
                                  {"model_stage", ckpt.stage}});
    return 0;
}

// -------------------------------------------------------------- evaluate

int run_evaluate(const CommonOpts& o, const std::string& in_dir, const std::string& ref_dir) {
    Config cfg = load_config(o);
    note_common(&cfg, o);

    const auto files = uwdiff::list_image_files(in_dir);
    if (files.empty()) throw std::runtime_error("no images in " + in_dir);

    std::vector<uwdiff::MetricsRow> rows;
    int warned = 0;
    for (const std::string& f : files) {
        const std::string stem = fs::path(f).stem().string();
        const uwdiff::Image img = uwdiff::load_image(f);
        std::unique_ptr<uwdiff::Image> ref;
        if (!ref_dir.empty()) {
            for (const char* ext : {".png", ".jpg", ".jpeg"}) {
                const fs::path cand = fs::path(ref_dir) / (stem + ext);
                if (fs::exists(cand)) {
                    ref = std::make_unique<uwdiff::Image>(uwdiff::load_image(cand.string()));
                    break;
                }
            }
        }
        rows.push_back(uwdiff::evaluate_image(stem, img, ref.get()));
        if (rows.back().cpbd_no_edges) {
            ++warned;
            std::cerr << "evaluate: warning: no edges found in " << f
                      << "; sharpness score reported as 0\n";
        }
    }

    uwdiff::RunDir run(o.out);
    run.snapshot_config(cfg);
    uwdiff::write_metrics_csv(run.path("metrics.csv"), rows);
    run.add_output("metrics.csv");
    const uwdiff::MetricsRow mean = uwdiff::mean_metrics(rows);
    run.write_summary("evaluate", {{"images", rows.size()},
                                   {"no_edge_warnings", warned},
                                   {"mean",
                                    {{"psnr", mean.psnr},
                                     {"ssim", mean.ssim},
                                     {"uiqm", mean.uiqm},
                                     {"uciqe", mean.uciqe},
                                     {"cpbd", mean.cpbd},
                                     {"ciede2000", mean.ciede2000}}}});
    char line[256];
    std::snprintf(line, sizeof(line),
                  "evaluate: MEAN psnr=%.4g ssim=%.4g uiqm=%.4g uciqe=%.4g cpbd=%.4g "
                  "ciede2000=%.4g over %zu images\n",
                  mean.psnr, mean.ssim, mean.uiqm, mean.uciqe, mean.cpbd, mean.ciede2000,
                  rows.size());
    std::cout << line;
    return 0;
}

// -------------------------------------------------------------- diagnose

int run_diagnose(const CommonOpts& o, const std::string& model_path,
                 const std::string& prompts_path, const std::string& backend_path,
                 const std::string& image_path) {
    Config cfg = load_config(o);
    note_common(&cfg, o);

    uwdiff::LoadedCheckpoint ckpt = uwdiff::load_checkpoint(model_path);
    const uwdiff::ClipClassifier clf = load_classifier(backend_path, prompts_path);
    const uwdiff::Image img = uwdiff::load_image(image_path);

    const int T = ckpt.schedule.T();
    const int stride = std::max(1, static_cast<int>(cfg.get_int("diagnose.t_stride", T / 50)));
    std::vector<int> ts;
    for (int t = stride; t <= T; t += stride) ts.push_back(t);

    const auto curve = uwdiff::underwater_score_curve(clf, ckpt.schedule, img, ts, o.seed);

    uwdiff::RunDir run(o.out);
    run.snapshot_config(cfg);
    std::string csv = "t,underwater_prob,grad_rms\n";
    char buf[120];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g\n", p.t, p.underwater_prob, p.grad_rms);
        csv += buf;
    }
    uwdiff::write_text_file(run.path("score_curve.csv"), csv);
    run.add_output("score_curve.csv");
    const double p_clean = clf.underwater_prob(img);
    run.write_summary("diagnose", {{"image", image_path},
                                   {"clean_underwater_prob", p_clean},
                                   {"points", curve.size()},
                                   {"model_stage", ckpt.stage}});
    std::cout << "diagnose: clean underwater probability " << p_clean << ", " << curve.size()
              << " noisy probes -> " << run.path("score_curve.csv") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"underwater image enhancement by classifier-steered conditional diffusion"};
    app.require_subcommand(1);

    CommonOpts synth_o, pre_o, prompts_o, ft_o, enh_o, eval_o, diag_o;

    auto* synth = app.add_subcommand("synth", "build a paired dataset by color-statistics transfer");
    std::string synth_manifest, synth_refs, synth_pool, synth_split = "train";
    add_common(synth, &synth_o);
    synth->add_option("--manifest", synth_manifest, "manifest of clean reference records");
    synth->add_option("--refs", synth_refs, "directory of clean reference images");
    synth->add_option("--pool", synth_pool, "directory with degradation template images")
        ->required();
    synth->add_option("--split", synth_split, "split tag for the output manifest");

    auto* pre = app.add_subcommand("pretrain", "train the conditional noise predictor");
    std::string pre_data;
    add_common(pre, &pre_o);
    pre->add_option("--data", pre_data, "training manifest (paired)")->required();

    auto* prompts = app.add_subcommand("learn-prompts", "fit the two prompt-token matrices");
    std::string prompts_data;
    add_common(prompts, &prompts_o);
    prompts->add_option("--data", prompts_data, "paired manifest; degraded=0, reference=1")
        ->required();

    auto* ft = app.add_subcommand("finetune", "classifier-steered fine-tuning of a checkpoint");
    std::string ft_from, ft_data, ft_prompts, ft_backend;
    double ft_lambda = 0.4, ft_tm = 1.0;
    bool ft_no_clip = false;
    add_common(ft, &ft_o);
    ft->add_option("--from", ft_from, "pretrained checkpoint")->required();
    ft->add_option("--data", ft_data, "training manifest (paired)")->required();
    ft->add_option("--prompts", ft_prompts, "prompt blob from learn-prompts");
    ft->add_option("--backend", ft_backend, "embedding backend blob from learn-prompts");
    ft->add_option("--lambda", ft_lambda, "blend weight; steering term scales by (1-lambda)");
    ft->add_option("--tm", ft_tm, "truncation fraction; steering active for t <= round(tm*T)");
    ft->add_flag("--no-clip", ft_no_clip, "disable the classifier term (plain continuation)");

    auto* enh = app.add_subcommand("enhance", "restore degraded images with a trained model");
    std::string enh_model, enh_in, enh_sampler = "ddim";
    int enh_steps = 50;
    double enh_eta = 0.0;
    bool enh_clamp_x0 = true;
    add_common(enh, &enh_o);
    enh->add_option("--model", enh_model, "checkpoint to sample from")->required();
    enh->add_option("--in", enh_in, "directory of degraded images")->required();
    enh->add_option("--sampler", enh_sampler, "ddpm or ddim");
    enh->add_option("--steps", enh_steps, "sampling steps (ddim; 0 = full schedule)");
    enh->add_option("--eta", enh_eta, "ddim stochasticity in [0,1]");
    enh->add_flag("--clamp-x0,!--no-clamp-x0", enh_clamp_x0,
                  "bound the implied x0 to [0,1] inside each reverse step");

    auto* ev = app.add_subcommand("evaluate", "quality metrics for a directory of images");
    std::string eval_in, eval_ref;
    add_common(ev, &eval_o);
    ev->add_option("--in", eval_in, "directory of images to score")->required();
    ev->add_option("--ref", eval_ref, "directory of same-stem reference images");

    auto* diag = app.add_subcommand("diagnose", "classifier score curve across noise levels");
    std::string diag_model, diag_prompts, diag_backend, diag_image;
    add_common(diag, &diag_o);
    diag->add_option("--model", diag_model, "checkpoint (for its noise schedule)")->required();
    diag->add_option("--prompts", diag_prompts, "prompt blob")->required();
    diag->add_option("--backend", diag_backend, "embedding backend blob")->required();
    diag->add_option("--image", diag_image, "probe image")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed())
            return run_synth(synth_o, synth_manifest, synth_refs, synth_pool, synth_split);
        if (pre->parsed()) return run_pretrain(pre_o, pre_data);
        if (prompts->parsed()) return run_learn_prompts(prompts_o, prompts_data);
        if (ft->parsed())
            return run_finetune(ft_o, ft_from, ft_data, ft_prompts, ft_backend, ft_lambda, ft_tm,
                                ft_no_clip);
        if (enh->parsed()) return run_enhance(enh_o, enh_model, enh_in, enh_sampler, enh_steps,
                                              enh_eta, enh_clamp_x0);
        if (ev->parsed()) return run_evaluate(eval_o, eval_in, eval_ref);
        if (diag->parsed())
            return run_diagnose(diag_o, diag_model, diag_prompts, diag_backend, diag_image);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
