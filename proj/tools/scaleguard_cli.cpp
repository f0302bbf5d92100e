// Command-line front end: corpus generation, attack crafting, calibration,
// detection, evaluation, adaptive sweeps and reports.

#include "scaleguard/adaptive.hpp"
#include "scaleguard/attack.hpp"
#include "scaleguard/codec.hpp"
#include "scaleguard/corpus.hpp"
#include "scaleguard/detectors.hpp"
#include "scaleguard/errors.hpp"
#include "scaleguard/pipeline.hpp"
#include "scaleguard/serialization.hpp"

#include "CLI11.hpp"

#include <fmt/format.h>

#include <cstdio>
#include <iostream>
#include <optional>

namespace sg = scaleguard;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool resume = false;
    std::string debug_dir;
    std::optional<int> threads;
    bool quiet = false;
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--config", c.config, "Run configuration (JSON)");
    app->add_option("--seed", c.seed, "Override the configured seed");
    app->add_option("--out", c.out, "Override the output directory");
    app->add_flag("--resume", c.resume, "Reuse finished stages from the output directory");
    app->add_option("--debug-dir", c.debug_dir, "Write per-image detector diagnostics here");
    app->add_option("--threads", c.threads, "Worker threads (0: all cores)");
    app->add_flag("-q,--quiet", c.quiet, "No progress output");
}

sg::RunConfig load_config(const Common& c)
{
    sg::Json j = sg::Json::object();
    if (!c.config.empty()) {
        try {
            j = sg::read_json(c.config);
        } catch (const sg::Error& e) {
            throw sg::ConfigError(e.what());
        }
    }
    if (c.seed) {
        j["seed"] = *c.seed;
    }
    if (!j.contains("seed")) {
        throw sg::ConfigError("a seed is required (config field 'seed' or --seed)");
    }
    if (!c.out.empty()) {
        j["output"] = c.out;
    }
    if (!c.debug_dir.empty()) {
        j["debug_dir"] = c.debug_dir;
    }
    if (c.threads) {
        j["threads"] = *c.threads;
    }
    return sg::run_config_from_json(j);
}

int run_stages(const Common& c, sg::Stage until)
{
    const sg::RunConfig cfg = load_config(c);
    sg::PipelineOptions opts;
    opts.resume = c.resume;
    opts.until = until;
    if (!c.quiet) {
        opts.log = [](const std::string& msg) { std::cerr << msg << '\n'; };
    }
    const sg::PipelineResult res = sg::run_pipeline(cfg, opts);
    if (!c.quiet) {
        std::cerr << fmt::format("{}: done ({} units computed) in {}\n", sg::to_string(until), res.computed,
                                 cfg.output.string());
    }
    return 0;
}

sg::Size2 parse_size(const std::vector<int>& v)
{
    if (v.size() != 2 || v[0] <= 0 || v[1] <= 0) {
        throw sg::ConfigError("sizes take two positive integers: rows cols");
    }
    return {v[0], v[1]};
}

struct SingleAttack {
    std::string source;
    std::string donor;
    std::string algorithm = "nearest";
    std::vector<int> dst;
    std::string scenario = "global";
    std::string backdoor = "box";
    double epsilon = 1.0;
    double alpha = 0.3;
    std::string record;
};

int craft_single(const SingleAttack& a)
{
    const sg::RasterImage source = sg::read_image(a.source);
    sg::AttackConfig cfg;
    cfg.epsilon = a.epsilon;
    cfg.alpha = a.alpha;
    cfg.scenario = sg::parse_scenario(a.scenario);
    cfg.backdoor = sg::BackdoorPattern::standard(sg::parse_backdoor(a.backdoor));
    const sg::ScaleSpec spec{sg::parse_algorithm(a.algorithm), source.size(), parse_size(a.dst)};
    std::optional<sg::RasterImage> donor;
    if (!a.donor.empty()) {
        donor = sg::read_image(a.donor);
        if (donor->size() != spec.dst) {
            donor = sg::resize(*donor, sg::Algorithm::bilinear, spec.dst);
        }
    }
    const sg::RasterImage target = sg::make_target(source, spec, cfg, donor ? &*donor : nullptr);
    const sg::AttackRecord rec = sg::craft_attack(source, target, spec, cfg);
    sg::save_attack_record(a.record, rec, spec, cfg);
    std::cout << fmt::format("o1 {} (linf {}, {:.2f} dB)  o2 {} ({:.2f} dB)\n", rec.success.o1, rec.linf_to_target,
                             rec.goal_o1_db, rec.success.o2, rec.goal_o2_db);
    return rec.success.both() ? 0 : 1;
}

struct DetectArgs {
    std::string image;
    std::string algorithm = "nearest";
    std::vector<int> dst;
    std::vector<std::string> detectors;
    std::string profile;
};

int detect_single(const DetectArgs& a)
{
    const sg::RasterImage img = sg::read_image(a.image);
    const sg::ScaleSpec spec{sg::parse_algorithm(a.algorithm), img.size(), parse_size(a.dst)};
    sg::ImageAnalysis analysis(img, spec);
    if (!a.profile.empty()) {
        const sg::Json p = sg::read_json(a.profile);
        const sg::DetectorInfo& info = sg::detector_info(p.at("id").get<std::string>());
        const double score = sg::detector_score(info, analysis, sg::params_from_json(p.at("params")));
        const sg::Direction dir = sg::parse_direction(p.at("direction").get<std::string>());
        const bool flag = sg::flags_attack(score, p.at("threshold").get<double>(), dir);
        std::cout << fmt::format("{} {} {}\n", info.id, score, flag ? "attack" : "benign");
        return 0;
    }
    std::vector<std::string> ids = a.detectors;
    if (ids.empty()) {
        for (const auto& d : sg::detector_catalog()) {
            ids.push_back(d.id);
        }
    }
    for (const auto& id : ids) {
        const sg::DetectorInfo& info = sg::detector_info(id);
        if (!sg::detector_applicable(info, spec)) {
            std::cout << fmt::format("{} n/a\n", id);
            continue;
        }
        std::cout << fmt::format("{} {}\n", id, sg::detector_score(info, analysis, info.defaults));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Image-scaling attack crafting, detection and evaluation"};
    app.require_subcommand(1);

    Common common;
    auto* corpus = app.add_subcommand("corpus", "Generate (or ingest) the image corpus");
    add_common(corpus, common);

    auto* attack = app.add_subcommand("attack", "Craft attack records for the corpus, or a single one");
    add_common(attack, common);
    SingleAttack single;
    attack->add_option("--source", single.source, "Single mode: source image");
    attack->add_option("--donor", single.donor, "Single mode: donor image for global/overlay targets");
    attack->add_option("--algorithm", single.algorithm, "Single mode: nearest, bilinear or bicubic");
    attack->add_option("--dst", single.dst, "Single mode: target rows cols")->expected(2);
    attack->add_option("--scenario", single.scenario, "Single mode: global, local or overlay");
    attack->add_option("--backdoor", single.backdoor, "Single mode: box, circle or rainbow");
    attack->add_option("--epsilon", single.epsilon, "Single mode: max-norm budget on the scaled output");
    attack->add_option("--alpha", single.alpha, "Single mode: overlay blending factor");
    attack->add_option("--record", single.record, "Single mode: output record directory");

    auto* calibrate = app.add_subcommand("calibrate", "Score the corpus and calibrate detector profiles");
    add_common(calibrate, common);

    auto* detect = app.add_subcommand("detect", "Score one image");
    DetectArgs det;
    detect->add_option("--image", det.image, "Image to score")->required();
    detect->add_option("--algorithm", det.algorithm, "Scaling algorithm of the victim pipeline");
    detect->add_option("--dst", det.dst, "Victim target size: rows cols")->required()->expected(2);
    detect->add_option("--detector", det.detectors, "Detector ids (default: all)");
    detect->add_option("--profile", det.profile, "Calibrated profile JSON; prints a verdict");

    auto* evaluate = app.add_subcommand("evaluate", "Calibrate and evaluate on the test splits");
    add_common(evaluate, common);
    auto* adaptive = app.add_subcommand("adaptive", "Run the configured adaptive-attack sweeps");
    add_common(adaptive, common);
    auto* report = app.add_subcommand("report", "Run every stage and write CSV and JSON reports");
    add_common(report, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (corpus->parsed()) {
            return run_stages(common, sg::Stage::corpus);
        }
        if (attack->parsed()) {
            if (!single.source.empty()) {
                if (single.record.empty() || single.dst.empty()) {
                    throw sg::ConfigError("single attacks need --record and --dst");
                }
                return craft_single(single);
            }
            return run_stages(common, sg::Stage::attacks);
        }
        if (calibrate->parsed()) {
            return run_stages(common, sg::Stage::evaluate);
        }
        if (detect->parsed()) {
            return detect_single(det);
        }
        if (evaluate->parsed()) {
            return run_stages(common, sg::Stage::evaluate);
        }
        if (adaptive->parsed()) {
            return run_stages(common, sg::Stage::adaptive);
        }
        if (report->parsed()) {
            return run_stages(common, sg::Stage::report);
        }
    } catch (const sg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const sg::InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const sg::StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitStage;
    }
    return 0;
}
