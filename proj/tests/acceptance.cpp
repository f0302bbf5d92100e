// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance --work DIR [--keep]

#include "reference.hpp"
#include "properties.hpp"

#include "scaleguard/pipeline.hpp"
#include "scaleguard/scaling.hpp"

#include "CLI11.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

using namespace scaleguard;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool ok = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Report values may be the strings "inf" / "-inf".
double num(const Json& j)
{
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (s == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
        return std::numeric_limits<double>::quiet_NaN();
    }
    return j.get<double>();
}

double mean_of(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

// Tolerance across split seeds for the local-scenario bounds.
constexpr double kSeedTolerance = 5.0;

const std::vector<std::string> kGlobalMethods{
    "down_up_psnr",     "down_up_mse",     "down_up_ssim",      "down_up_histogram", "down_up_color_scattering",
    "min_filter_mse",   "min_filter_ssim", "max_filter_mse",    "max_filter_ssim",   "clean_median_psnr",
    "clean_median_ssim", "clean_random_psnr", "clean_random_ssim"};

Json peak_spectrum_w5() { return {{"id", "peak_spectrum"}, {"grid", {{{"w", 5}}}}}; }

// Default desk corpus: narrow intensity range, sources at 2, 3 and 4 times 112.
Json global_config(const fs::path& out)
{
    return {{"seed", 3},
            {"output", out.string()},
            {"corpus", {{"synthetic", {{"count", 100}, {"seed", 3}}}}},
            {"algorithms", {"nearest"}},
            {"detectors", {peak_spectrum_w5(), "peak_distance", "down_up_psnr", "clean_median_ssim", "csp"}},
            {"ensembles", {{{"name", "best4_majority"}, {"best", 4}, {"strategy", "majority"}}}},
            {"split_seeds", {1, 2}},
            {"target_fpr", 0.01},
            {"adaptive",
             {{{"kind", "suppress"}, {"parameters", {1.0, 0.5, 0.2, 0.1}}, {"detectors", {"peak_spectrum"}},
               {"window_half", 5}},
              {{"kind", "add_peaks"}, {"parameters", {50.0}}, {"detectors", {"peak_distance"}}}}},
            {"save_adaptive_images", false}};
}

// Natural intensity range; the backdoor dominates the narrow corpus's histograms.
Json local_config(const fs::path& out, const std::string& backdoor, const std::string& calibration,
                  bool all_detectors)
{
    Json detectors = Json::array({peak_spectrum_w5(), "peak_distance", "patch_clean", "targeted_patch_clean"});
    if (all_detectors) {
        detectors.push_back("csp");
        for (const auto& id : kGlobalMethods) {
            detectors.push_back(id);
        }
    }
    Json j = {{"seed", 3},
              {"output", out.string()},
              {"corpus",
               {{"synthetic", {{"count", 100}, {"seed", 3}, {"mean", {50, 200}}, {"contrast", {35, 65}}}}}},
              {"algorithms", {"nearest"}},
              {"attack", {{"scenario", "local"}, {"backdoor", backdoor}}},
              {"detectors", detectors},
              {"split_seeds", {1, 2}},
              {"target_fpr", 0.01},
              {"save_adaptive_images", false}};
    if (!calibration.empty()) {
        j["calibration_backdoor"] = calibration;
    }
    return j;
}

class Runs {
public:
    explicit Runs(fs::path work) : work_(std::move(work)) {}

    const Json& get(const std::string& name, const std::function<Json(const fs::path&)>& make)
    {
        auto it = reports_.find(name);
        if (it != reports_.end()) {
            return it->second;
        }
        const auto t0 = Clock::now();
        const RunConfig cfg = run_config_from_json(make(work_ / name));
        PipelineOptions opts;
        opts.resume = true;
        const PipelineResult res = run_pipeline(cfg, opts);
        std::cerr << fmt::format("  run {} finished in {:.0f} s\n", name, seconds_since(t0));
        return reports_.emplace(name, res.report).first->second;
    }

    const fs::path& work() const { return work_; }

private:
    fs::path work_;
    std::map<std::string, Json> reports_;
};

const Json& detector_summary(const Json& report, const std::string& id)
{
    return report.at("summary").at("nearest").at("detectors").at(id);
}

double accuracy(const Json& report, const std::string& id)
{
    return num(detector_summary(report, id).at("accuracy").at(0));
}

const Json& adaptive_run(const Json& report, const std::string& kind, double parameter)
{
    for (const Json& r : report.at("details").at("nearest").at("adaptive").at("runs")) {
        if (r.at("kind") == kind && std::abs(num(r.at("parameter")) - parameter) < 1e-12) {
            return r;
        }
    }
    throw std::runtime_error(fmt::format("no adaptive run {}={}", kind, parameter));
}

// Mean over split seeds of one numeric field of the per-seed adaptive entries.
double adaptive_mean(const Json& run, const std::string& detector, const std::string& field)
{
    std::vector<double> v;
    for (const Json& s : run.at("detectors").at(detector)) {
        v.push_back(field == "accuracy" ? num(s.at("test").at("accuracy")) : num(s.at(field)));
    }
    return mean_of(v);
}

Verdict scaling_oracle()
{
    const auto t0 = Clock::now();
    Rng rng(2024);
    int worst = 0;
    int specs = 0;
    for (Algorithm alg : {Algorithm::nearest, Algorithm::bilinear, Algorithm::bicubic}) {
        for (int k = 0; k < 50; ++k) {
            const ScaleSpec spec = sgtest::random_spec(rng, alg, 64);
            const RasterImage img = sgtest::random_image(rng, spec.src.rows, spec.src.cols, 1 + 2 * (k % 2));
            worst = std::max(worst, max_abs_diff(scale(img, spec), sgtest::reference_scale(img, spec)));
            ++specs;
        }
    }
    const double t = seconds_since(t0);
    return {worst <= 1 && t < 30.0, fmt::format("{} specs, max abs diff {}, {:.2f} s", specs, worst, t)};
}

Verdict attack_feasibility(const fs::path& work)
{
    const fs::path out = work / "feasibility";
    const Json j = {{"seed", 5},
                    {"output", out.string()},
                    {"corpus", {{"synthetic", {{"count", 100}, {"seed", 5}}}}},
                    {"algorithms", {"nearest", "bilinear", "bicubic"}},
                    {"detectors", {"peak_spectrum"}}};
    const RunConfig cfg = run_config_from_json(j);
    PipelineOptions opts;
    opts.until = Stage::attacks;
    opts.resume = true;
    const auto t0 = Clock::now();
    run_pipeline(cfg, opts);
    const double t = seconds_since(t0);

    bool ok = t < 300.0;
    std::string detail;
    for (const char* alg : {"nearest", "bilinear", "bicubic"}) {
        const Json index = read_json(out / "attacks" / (std::string(alg) + "-global") / "index.json");
        const Json& records = index.at("records");
        int good = 0;
        const int bound = std::string(alg) == "nearest" ? 0 : static_cast<int>(cfg.attack.epsilon) + 1;
        for (const Json& r : records) {
            good += r.at("linf").get<int>() <= bound ? 1 : 0;
        }
        const double share = 100.0 * good / static_cast<double>(records.size());
        ok = ok && !records.empty() && (bound == 0 ? good == static_cast<int>(records.size()) : share >= 95.0);
        detail += fmt::format("{} linf<={} {:.0f}% of {}; ", alg, bound, share, records.size());
    }
    return {ok, detail + fmt::format("{:.0f} s", t)};
}

Verdict global_detection(const Json& report)
{
    const double ps = accuracy(report, "peak_spectrum");
    const double pd = accuracy(report, "peak_distance");
    const double du = accuracy(report, "down_up_psnr");
    const double cm = accuracy(report, "clean_median_ssim");
    const double csp = accuracy(report, "csp");
    const Json& att = report.at("summary").at("nearest").at("attacks").at(0);
    const bool ok = ps >= 97.0 && pd >= 97.0 && du >= 95.0 && cm >= 95.0 && csp <= 75.0;
    return {ok, fmt::format("{} attacks / {} sources; peak_spectrum {:.2f}, peak_distance {:.2f}, down_up_psnr {:.2f}, "
                            "clean_median_ssim {:.2f}, csp {:.2f}",
                            att.at("dual_goal_successes").get<int>(), att.at("attempted").get<int>(), ps, pd, du, cm,
                            csp)};
}

Verdict local_detection(const Json& report)
{
    const double ps = accuracy(report, "peak_spectrum");
    const double pc = accuracy(report, "patch_clean");
    const double tpc = accuracy(report, "targeted_patch_clean");
    bool ok = ps >= 80.0 - kSeedTolerance && pc >= 65.0 - kSeedTolerance && tpc >= 65.0 - kSeedTolerance;
    std::string worst_id;
    double worst = -1.0;
    std::vector<std::string> over;
    for (const auto& id : kGlobalMethods) {
        const double a = accuracy(report, id);
        if (a > worst) {
            worst = a;
            worst_id = id;
        }
        if (a > 65.0 + kSeedTolerance) {
            over.push_back(fmt::format("{} {:.2f}", id, a));
        }
    }
    ok = ok && over.empty();
    std::string detail = fmt::format("peak_spectrum {:.2f}, patch_clean {:.2f}, targeted_patch_clean {:.2f}; "
                                     "highest global method {} {:.2f}",
                                     ps, pc, tpc, worst_id, worst);
    if (!over.empty()) {
        detail += fmt::format(" (above 65 + {:.0f}: {})", kSeedTolerance, fmt::join(over, ", "));
    }
    return {ok, detail};
}

Verdict ensemble(const Json& report)
{
    const Json& e = report.at("summary").at("nearest").at("ensembles").at("best4_majority");
    const double acc = num(e.at("accuracy").at(0));
    const double fpr = num(e.at("fpr").at(0));
    double best = 0.0;
    std::string best_id;
    for (const auto& [id, s] : report.at("summary").at("nearest").at("detectors").items()) {
        if (num(s.at("accuracy").at(0)) > best) {
            best = num(s.at("accuracy").at(0));
            best_id = id;
        }
    }
    return {fpr == 0.0 && acc >= best - 1.0,
            fmt::format("majority of 4: accuracy {:.2f}, FPR {:.2f}; best single {} {:.2f}", acc, fpr, best_id, best)};
}

Verdict suppression(const Json& report)
{
    const double factors[] = {1.0, 0.5, 0.2, 0.1};
    std::vector<double> rate;
    std::vector<double> acc;
    double min_psnr = std::numeric_limits<double>::infinity();
    for (double f : factors) {
        const Json& run = adaptive_run(report, "suppress", f);
        rate.push_back(adaptive_mean(run, "peak_spectrum", "attack_detection_rate"));
        acc.push_back(adaptive_mean(run, "peak_spectrum", "accuracy"));
        min_psnr = std::min(min_psnr, num(run.at("psnr_to_attack").at("min")));
    }
    bool monotone = true;
    for (std::size_t k = 1; k < rate.size(); ++k) {
        monotone = monotone && rate[k] <= rate[k - 1] + 1e-9;
    }
    const double drop = rate[0] - rate[2];
    return {drop >= 30.0 && min_psnr >= 15.0 && monotone,
            fmt::format("peak_spectrum detection rate f=1/.5/.2/.1: {:.1f}/{:.1f}/{:.1f}/{:.1f} (drop {:.1f}); "
                        "accuracy incl. benign {:.1f}/{:.1f}/{:.1f}/{:.1f}; min PSNR(A~,A) {:.1f} dB",
                        rate[0], rate[1], rate[2], rate[3], drop, acc[0], acc[1], acc[2], acc[3], min_psnr)};
}

Verdict peak_addition(const Json& report)
{
    const Json& run = adaptive_run(report, "add_peaks", 50.0);
    const double rate = adaptive_mean(run, "peak_distance", "attack_detection_rate");
    const double acc = adaptive_mean(run, "peak_distance", "accuracy");
    const double share = adaptive_mean(run, "peak_distance", "psnr_to_attack_ge20_share");
    return {rate < 50.0 && share >= 80.0,
            fmt::format("peak_distance detection rate {:.1f} (accuracy incl. benign {:.1f}); "
                        "PSNR(A~,A) >= 20 dB on {:.1f}%",
                        rate, acc, share)};
}

Verdict property_suites(const fs::path& work)
{
    const std::pair<const char*, std::function<sgtest::SuiteResult()>> suites[] = {
        {"spectrum", sgtest::spectrum_suite},
        {"mask", sgtest::mask_suite},
        {"stochastic", sgtest::stochasticity_suite},
        {"calibration", sgtest::calibration_suite},
        {"voting", sgtest::voting_suite},
        {"determinism", [&] { return sgtest::determinism_suite(work / "determinism"); }},
    };
    bool ok = true;
    std::vector<std::string> parts;
    for (const auto& [name, run] : suites) {
        const sgtest::SuiteResult r = run();
        const bool pass = r.ok && r.seconds < 60.0;
        ok = ok && pass;
        parts.push_back(pass ? fmt::format("{} {:.1f}s", name, r.seconds)
                             : fmt::format("{} FAILED ({}, {:.1f}s)", name, r.detail, r.seconds));
    }
    return {ok, fmt::format("{}", fmt::join(parts, ", "))};
}

Verdict backdoor_transfer(Runs& runs, const Json& box_box)
{
    bool ok = true;
    std::vector<std::string> parts;
    parts.push_back(fmt::format("box/box {:.2f}", accuracy(box_box, "peak_spectrum")));
    for (const std::string bd : {"circle", "rainbow"}) {
        const Json& same =
            runs.get(bd + "-same", [&](const fs::path& out) { return local_config(out, bd, "", false); });
        const Json& cross =
            runs.get(bd + "-from-box", [&](const fs::path& out) { return local_config(out, bd, "box", false); });
        const double a_same = accuracy(same, "peak_spectrum");
        const double a_cross = accuracy(cross, "peak_spectrum");
        ok = ok && std::abs(a_cross - a_same) <= 5.0;
        parts.push_back(fmt::format("{}: same {:.2f}, box-calibrated {:.2f} (delta {:+.2f})", bd, a_same, a_cross,
                                    a_cross - a_same));
    }
    return {ok, fmt::format("peak_spectrum {}", fmt::join(parts, "; "))};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria"};
    fs::path work = fs::temp_directory_path() / "scaleguard-acceptance";
    bool keep = false;
    app.add_option("--work", work, "Scratch directory for the runs");
    app.add_flag("--keep", keep, "Keep the scratch directory");
    CLI11_PARSE(app, argc, argv);

    fs::remove_all(work);
    fs::create_directories(work);
    Runs runs(work);

    int failures = 0;
    auto report = [&](int n, const char* name, const std::function<Verdict()>& check) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        failures += v.ok ? 0 : 1;
        std::cout << fmt::format("{} [{}] {}: {}", v.ok ? "PASS" : "FAIL", n, name, v.detail) << std::endl;
    };

    auto global = [&]() -> const Json& { return runs.get("global", global_config); };
    auto local = [&]() -> const Json& {
        return runs.get("local-box", [](const fs::path& out) { return local_config(out, "box", "", true); });
    };

    report(1, "scaling oracle", scaling_oracle);
    report(2, "attack feasibility", [&] { return attack_feasibility(work); });
    report(3, "global detection", [&] { return global_detection(global()); });
    report(4, "local detection", [&] { return local_detection(local()); });
    report(5, "ensemble", [&] { return ensemble(global()); });
    report(6, "adaptive suppression", [&] { return suppression(global()); });
    report(7, "adaptive peak addition", [&] { return peak_addition(global()); });
    report(8, "property suites", [&] { return property_suites(work); });
    report(9, "backdoor transfer", [&] { return backdoor_transfer(runs, local()); });

    std::cout << fmt::format("{} of 9 criteria passed", 9 - failures) << std::endl;
    if (!keep) {
        fs::remove_all(work);
    }
    return failures == 0 ? 0 : 1;
}
