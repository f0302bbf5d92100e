#include "scaleguard/pipeline.hpp"

#include "scaleguard/codec.hpp"
#include "scaleguard/errors.hpp"
#include "scaleguard/metrics.hpp"
#include "scaleguard/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

namespace scaleguard {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- helpers

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fingerprint(const Json& j) { return fmt::format("{:016x}", fnv1a(j.dump())); }

std::string params_key(const Params& p) { return to_json(p).dump(); }

template <typename F>
void parallel_for(std::size_t n, int threads, F&& body)
{
    const auto workers = static_cast<std::size_t>(
        std::max(1, threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency())));
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::size_t first_index = n;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    // Keep the lowest failing index so errors are reproducible.
                    if (i < first_index) {
                        first_index = i;
                        first_error = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

struct Summary {
    double mean = 0.0;
    double std = 0.0;
};

Summary summarize(const std::vector<double>& v)
{
    if (v.empty()) {
        return {};
    }
    return {std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()), sample_std(v)};
}

Json confusion_json(const Confusion& c)
{
    return {{"accuracy", c.accuracy()}, {"tpr", c.tpr()}, {"fpr", c.fpr()},
            {"tp", c.tp},             {"fp", c.fp},     {"tn", c.tn},
            {"fn", c.fn}};
}

Json distribution_json(std::vector<double> v)
{
    if (v.empty()) {
        return Json::object();
    }
    return {{"n", v.size()},
            {"min", real_to_json(*std::min_element(v.begin(), v.end()))},
            {"q25", real_to_json(quantile(v, 0.25))},
            {"median", real_to_json(quantile(v, 0.5))},
            {"q75", real_to_json(quantile(v, 0.75))},
            {"max", real_to_json(*std::max_element(v.begin(), v.end()))}};
}

std::string config_error_context(const char* field, const std::exception& e)
{
    return std::string("config field '") + field + "': " + e.what();
}

// ----------------------------------------------------------------- context

struct Sample {
    std::string id; // corpus entry id; benign and attack versions share it
    ScaleSpec spec;
};

/// Per-set attack outcome, as stored in the set index.
struct AttackOutcome {
    std::string id;
    bool success = false;
    bool o1 = false;
    bool o2 = false;
    double o2_db = 0.0;
    int linf = 0;
    int attempts = 0;
    std::string donor;
    bool converged = true;
    ScaleSpec spec;
};

struct AttackSet {
    std::string name;
    fs::path dir;
    std::vector<AttackOutcome> outcomes;

    std::vector<std::string> successful_ids() const
    {
        std::vector<std::string> out;
        for (const auto& o : outcomes) {
            if (o.success) {
                out.push_back(o.id);
            }
        }
        return out;
    }
};

using ScoreColumns = std::map<std::string, std::map<std::string, std::vector<double>>>; // det -> params -> per id

struct ScoreTable {
    std::vector<std::string> ids;
    ScoreColumns scores;
};

struct AlgorithmScores {
    ScoreTable benign;
    ScoreTable train_attacks;
    ScoreTable test_attacks;
    std::vector<std::string> detectors;      // applicable to every sample
    std::map<std::string, std::string> skipped; // detector -> reason
};

struct Context {
    const RunConfig& cfg;
    const PipelineOptions& opts;
    std::size_t computed = 0;
    fs::path corpus_dir;
    CorpusManifest manifest;
    std::vector<RasterImage> images;
    Json stage_prints = Json::object();

    void log(const std::string& msg) const
    {
        if (opts.log) {
            opts.log(msg);
        }
    }

    Size2 dst() const { return cfg.synthetic ? cfg.synthetic->dst : cfg.dst; }
};

bool stage_current(const Context& ctx, const fs::path& file)
{
    if (!ctx.opts.resume || !fs::exists(file)) {
        return false;
    }
    try {
        return read_json(file).value("fingerprint", "") == ctx.stage_prints.value(file.string(), "");
    } catch (const Error&) {
        return false;
    }
}

std::vector<DetectorRequest> requested_detectors(const RunConfig& cfg)
{
    if (!cfg.detectors.empty()) {
        return cfg.detectors;
    }
    std::vector<DetectorRequest> all;
    for (const DetectorInfo& d : detector_catalog()) {
        all.push_back({d.id, {}});
    }
    return all;
}

const std::vector<Params>& grid_of(const DetectorRequest& r)
{
    return r.grid.empty() ? detector_info(r.id).grid : r.grid;
}

// Grid of a configured detector, or the catalog grid when it is not configured.
const std::vector<Params>& configured_grid(const RunConfig& cfg, const std::string& id)
{
    for (const DetectorRequest& r : cfg.detectors) {
        if (r.id == id) {
            return grid_of(r);
        }
    }
    return detector_info(id).grid;
}

std::vector<Sample> samples_for(const Context& ctx, Algorithm alg)
{
    std::vector<Sample> out;
    for (const CorpusEntry& e : ctx.manifest.entries) {
        ScaleSpec spec{alg, {e.rows, e.cols}, ctx.dst()};
        if (spec.is_attackable()) {
            out.push_back({e.id, spec});
        }
    }
    return out;
}

std::string set_name(Algorithm alg, const AttackConfig& cfg)
{
    std::string name = std::string(to_string(alg)) + "-" + std::string(to_string(cfg.scenario));
    if (cfg.scenario == Scenario::local) {
        name += "-" + std::string(to_string(cfg.backdoor.kind));
    }
    return name;
}

// ------------------------------------------------------------ corpus stage

void stage_corpus(Context& ctx)
{
    const RunConfig& cfg = ctx.cfg;
    if (cfg.synthetic) {
        ctx.corpus_dir = cfg.output / "corpus";
        const fs::path stamp = ctx.corpus_dir / "stage.json";
        const Json print = {{"stage", "corpus"}, {"spec", to_json(*cfg.synthetic)}};
        ctx.stage_prints[stamp.string()] = fingerprint(print);
        if (stage_current(ctx, stamp) && fs::exists(ctx.corpus_dir / "manifest.json")) {
            ctx.manifest = load_manifest(ctx.corpus_dir);
            ctx.log("corpus: up to date");
        } else {
            ctx.log(fmt::format("corpus: generating {} images", cfg.synthetic->count));
            try {
                ctx.manifest = generate_corpus(*cfg.synthetic, ctx.corpus_dir);
            } catch (const Error& e) {
                throw StageError("corpus", ctx.corpus_dir.string(), e.what());
            }
            write_json(stamp, {{"fingerprint", ctx.stage_prints[stamp.string()]}});
            ++ctx.computed;
        }
    } else {
        ctx.corpus_dir = cfg.corpus_dir;
        try {
            ctx.manifest = ingest_directory(cfg.corpus_dir);
        } catch (const Error& e) {
            throw StageError("corpus", cfg.corpus_dir.string(), e.what());
        }
        ctx.stage_prints["corpus"] = fingerprint(to_json(ctx.manifest));
    }
    ctx.images.resize(ctx.manifest.entries.size());
    for (std::size_t i = 0; i < ctx.images.size(); ++i) {
        try {
            ctx.images[i] = load_entry(ctx.corpus_dir, ctx.manifest.entries[i]);
        } catch (const Error& e) {
            throw StageError("corpus", ctx.manifest.entries[i].id, e.what());
        }
    }
}

std::string corpus_print(const Context& ctx)
{
    if (ctx.cfg.synthetic) {
        return ctx.stage_prints.value((ctx.corpus_dir / "stage.json").string(), "");
    }
    return ctx.stage_prints.value("corpus", "");
}

// ------------------------------------------------------------ attack stage

Json outcome_json(const AttackOutcome& o)
{
    return {{"id", o.id},         {"success", o.success}, {"o1", o.o1},
            {"o2", o.o2},         {"o2_db", real_to_json(o.o2_db)},
            {"linf", o.linf},     {"attempts", o.attempts},
            {"donor", o.donor},   {"converged", o.converged},
            {"spec", to_json(o.spec)}};
}

AttackOutcome outcome_from_json(const Json& j)
{
    AttackOutcome o;
    o.id = j.at("id").get<std::string>();
    o.success = j.at("success").get<bool>();
    o.o1 = j.at("o1").get<bool>();
    o.o2 = j.at("o2").get<bool>();
    o.o2_db = real_from_json(j.at("o2_db"));
    o.linf = j.at("linf").get<int>();
    o.attempts = j.at("attempts").get<int>();
    o.donor = j.at("donor").get<std::string>();
    o.converged = j.at("converged").get<bool>();
    o.spec = scale_spec_from_json(j.at("spec"));
    return o;
}

AttackSet stage_attacks(Context& ctx, Algorithm alg, const AttackConfig& acfg)
{
    AttackSet set;
    set.name = set_name(alg, acfg);
    set.dir = ctx.cfg.output / "attacks" / set.name;
    const fs::path index = set.dir / "index.json";
    const Json print = {{"stage", "attacks"},
                        {"corpus", corpus_print(ctx)},
                        {"algorithm", std::string(to_string(alg))},
                        {"attack", to_json(acfg)},
                        {"donor_attempts", ctx.cfg.donor_attempts},
                        {"seed", ctx.cfg.seed}};
    const std::string fp = fingerprint(print);
    ctx.stage_prints[index.string()] = fp;

    if (stage_current(ctx, index)) {
        const Json stored = read_json(index);
        for (const Json& j : stored.at("records")) {
            set.outcomes.push_back(outcome_from_json(j));
        }
        ctx.log(fmt::format("attacks {}: up to date", set.name));
        return set;
    }

    const std::vector<Sample> samples = samples_for(ctx, alg);
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < ctx.manifest.entries.size(); ++i) {
        position[ctx.manifest.entries[i].id] = i;
    }
    const bool needs_donor = acfg.scenario != Scenario::local;
    const int attempts = needs_donor ? std::max(1, ctx.cfg.donor_attempts) : 1;
    const std::size_t n_images = ctx.images.size();
    if (needs_donor && n_images < 2) {
        throw StageError("attacks", set.name, "the scenario needs at least two images for donors");
    }

    // Records already on disk from an interrupted run with the same settings.
    fs::create_directories(set.dir);
    const fs::path progress = set.dir / "progress.json";
    const bool reuse = ctx.opts.resume && fs::exists(progress) && read_json(progress).value("fingerprint", "") == fp;
    write_json(progress, {{"fingerprint", fp}});

    set.outcomes.resize(samples.size());
    std::atomic<std::size_t> crafted{0};
    ctx.log(fmt::format("attacks {}: crafting {} records", set.name, samples.size()));
    parallel_for(samples.size(), ctx.cfg.threads, [&](std::size_t k) {
        const Sample& s = samples[k];
        const fs::path dir = set.dir / s.id;
        AttackOutcome& out = set.outcomes[k];
        try {
            const fs::path attempt_file = dir / "attempt.json";
            if (reuse && fs::exists(attempt_file) && fs::exists(dir / "meta.json")) {
                out = outcome_from_json(read_json(attempt_file));
                return;
            }
            const std::size_t i = position.at(s.id);
            const RasterImage& source = ctx.images[i];
            Rng donors(mix_seed(ctx.cfg.seed, 0xD000 + i));
            AttackRecord best;
            for (int t = 1; t <= attempts; ++t) {
                RasterImage donor;
                std::string donor_id;
                if (needs_donor) {
                    std::size_t j = donors.below(n_images - 1);
                    j += j >= i ? 1 : 0;
                    donor = resize(ctx.images[j], Algorithm::bilinear, s.spec.dst);
                    donor_id = ctx.manifest.entries[j].id;
                }
                const RasterImage target = make_target(source, s.spec, acfg, needs_donor ? &donor : nullptr);
                AttackRecord rec = craft_attack(source, target, s.spec, acfg);
                const bool better = t == 1 || rec.success.both() || rec.goal_o2_db > best.goal_o2_db;
                if (better) {
                    best = std::move(rec);
                    out.donor = donor_id;
                }
                out.attempts = t;
                if (best.success.both()) {
                    break;
                }
            }
            save_attack_record(dir, best, s.spec, acfg);
            out.id = s.id;
            out.success = best.success.both();
            out.o1 = best.success.o1;
            out.o2 = best.success.o2;
            out.o2_db = best.goal_o2_db;
            out.linf = best.linf_to_target;
            out.converged = best.solver_converged;
            out.spec = s.spec;
            write_json(attempt_file, outcome_json(out));
            ++crafted;
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError("attacks", s.id, e.what());
        }
    });
    ctx.computed += crafted;

    Json records = Json::array();
    std::size_t ok = 0;
    for (const auto& o : set.outcomes) {
        records.push_back(outcome_json(o));
        ok += o.success ? 1 : 0;
    }
    write_json(index, {{"fingerprint", fp}, {"records", records}});
    ctx.log(fmt::format("attacks {}: {} of {} dual-goal successes", set.name, ok, set.outcomes.size()));
    return set;
}

// ------------------------------------------------------------- score stage

struct ScoreJob {
    std::string id;
    const RasterImage* image = nullptr;
    RasterImage owned;
    ScaleSpec spec;
};

void score_images(Context& ctx, std::vector<ScoreJob>& jobs, const std::vector<DetectorRequest>& detectors,
                  ScoreTable& table, const std::string& set_label, Algorithm alg)
{
    table.ids.clear();
    for (const auto& j : jobs) {
        table.ids.push_back(j.id);
    }
    for (const auto& r : detectors) {
        for (const Params& p : grid_of(r)) {
            table.scores[r.id][params_key(p)].assign(jobs.size(), std::numeric_limits<double>::quiet_NaN());
        }
    }
    std::mutex table_mutex;
    parallel_for(jobs.size(), ctx.cfg.threads, [&](std::size_t k) {
        const ScoreJob& job = jobs[k];
        const RasterImage& img = job.image != nullptr ? *job.image : job.owned;
        ImageAnalysis analysis(img, job.spec);
        const std::uint64_t seed = mix_seed(ctx.cfg.seed, fnv1a(job.id));
        std::vector<std::tuple<std::string, std::string, double>> row;
        for (const auto& r : detectors) {
            const DetectorInfo& info = detector_info(r.id);
            if (!detector_applicable(info, job.spec)) {
                continue;
            }
            for (const Params& p : grid_of(r)) {
                double score = std::numeric_limits<double>::quiet_NaN();
                PatchDiagnostics diag;
                const bool want_diag = ctx.cfg.debug_dir.has_value()
                                       && (info.id == "patch_clean" || info.id == "targeted_patch_clean");
                try {
                    score = detector_score(info, analysis, p, seed, want_diag ? &diag : nullptr);
                } catch (const DegenerateSpec&) {
                    // Left as NaN; the detector is then reported as not applicable.
                } catch (const std::exception& e) {
                    throw StageError("scores", job.id, info.id + ": " + e.what());
                }
                row.emplace_back(r.id, params_key(p), score);
                if (want_diag && !std::isnan(score)) {
                    const fs::path dir = *ctx.cfg.debug_dir / std::string(to_string(alg)) / set_label / job.id;
                    fs::create_directories(dir);
                    Json patches = Json::array();
                    for (std::size_t q = 0; q < diag.values.size(); ++q) {
                        patches.push_back(real_to_json(diag.values[q]));
                    }
                    write_json(dir / (info.id + ".json"), {{"params", to_json(p)}, {"values", patches}});
                    write_png_if_changed(dir / (info.id + "-filtered.png"), diag.filtered);
                }
            }
        }
        if (ctx.cfg.debug_dir) {
            const fs::path dir = *ctx.cfg.debug_dir / std::string(to_string(alg)) / set_label / job.id;
            fs::create_directories(dir);
            write_spectrum_png16(dir / "spectrum.png", analysis.spectrum());
            write_spectrum_pfm(dir / "spectrum.pfm", analysis.spectrum());
            write_json(dir / "peaks.json", to_json(expected_peaks(job.spec)));
        }
        std::lock_guard lock(table_mutex);
        for (const auto& [det, key, score] : row) {
            table.scores[det][key][k] = score;
        }
    });
}

Json table_json(const ScoreTable& t)
{
    Json scores = Json::object();
    for (const auto& [det, by_params] : t.scores) {
        for (const auto& [key, values] : by_params) {
            Json col = Json::array();
            for (double v : values) {
                col.push_back(real_to_json(v));
            }
            scores[det][key] = col;
        }
    }
    return {{"ids", t.ids}, {"scores", scores}};
}

ScoreTable table_from_json(const Json& j)
{
    ScoreTable t;
    t.ids = j.at("ids").get<std::vector<std::string>>();
    for (const auto& [det, by_params] : j.at("scores").items()) {
        for (const auto& [key, values] : by_params.items()) {
            auto& col = t.scores[det][key];
            for (const Json& v : values) {
                col.push_back(real_from_json(v));
            }
        }
    }
    return t;
}

std::vector<ScoreJob> attack_jobs(const AttackSet& set)
{
    std::vector<ScoreJob> jobs;
    for (const auto& o : set.outcomes) {
        if (!o.success) {
            continue;
        }
        ScoreJob j;
        j.id = o.id;
        try {
            j.owned = read_image(set.dir / o.id / "A.png");
        } catch (const Error& e) {
            throw StageError("scores", o.id, e.what());
        }
        j.spec = o.spec;
        jobs.push_back(std::move(j));
    }
    return jobs;
}

AlgorithmScores stage_scores(Context& ctx, Algorithm alg, const AttackSet& train_set, const AttackSet& test_set)
{
    const std::vector<DetectorRequest> detectors = requested_detectors(ctx.cfg);
    Json det_json = Json::array();
    for (const auto& r : detectors) {
        Json grid = Json::array();
        for (const Params& p : grid_of(r)) {
            grid.push_back(to_json(p));
        }
        det_json.push_back({{"id", r.id}, {"grid", grid}});
    }
    const fs::path file = ctx.cfg.output / "scores" / (std::string(to_string(alg)) + ".json");
    const Json print = {{"stage", "scores"},
                        {"corpus", corpus_print(ctx)},
                        {"train", ctx.stage_prints.value((train_set.dir / "index.json").string(), "")},
                        {"test", ctx.stage_prints.value((test_set.dir / "index.json").string(), "")},
                        {"detectors", det_json},
                        {"seed", ctx.cfg.seed}};
    const std::string fp = fingerprint(print);
    ctx.stage_prints[file.string()] = fp;

    AlgorithmScores out;
    if (stage_current(ctx, file)) {
        const Json j = read_json(file);
        out.benign = table_from_json(j.at("benign"));
        out.train_attacks = table_from_json(j.at("train_attacks"));
        out.test_attacks = table_from_json(j.at("test_attacks"));
        ctx.log(fmt::format("scores {}: up to date", to_string(alg)));
    } else {
        std::vector<ScoreJob> benign;
        std::map<std::string, std::size_t> position;
        for (std::size_t i = 0; i < ctx.manifest.entries.size(); ++i) {
            position[ctx.manifest.entries[i].id] = i;
        }
        for (const Sample& s : samples_for(ctx, alg)) {
            ScoreJob j;
            j.id = s.id;
            j.image = &ctx.images[position.at(s.id)];
            j.spec = s.spec;
            benign.push_back(std::move(j));
        }
        ctx.log(fmt::format("scores {}: {} benign images", to_string(alg), benign.size()));
        score_images(ctx, benign, detectors, out.benign, "benign", alg);
        std::vector<ScoreJob> test_jobs = attack_jobs(test_set);
        ctx.log(fmt::format("scores {}: {} attack images", to_string(alg), test_jobs.size()));
        score_images(ctx, test_jobs, detectors, out.test_attacks, test_set.name, alg);
        if (train_set.name == test_set.name) {
            out.train_attacks = out.test_attacks;
        } else {
            std::vector<ScoreJob> train_jobs = attack_jobs(train_set);
            ctx.log(fmt::format("scores {}: {} training attack images", to_string(alg), train_jobs.size()));
            score_images(ctx, train_jobs, detectors, out.train_attacks, train_set.name, alg);
        }
        fs::create_directories(file.parent_path());
        write_json(file, {{"fingerprint", fp},
                          {"benign", table_json(out.benign)},
                          {"train_attacks", table_json(out.train_attacks)},
                          {"test_attacks", table_json(out.test_attacks)}});
        ctx.computed += benign.size() + test_jobs.size();
    }

    for (const auto& r : detectors) {
        bool complete = true;
        for (const ScoreTable* t : {&out.benign, &out.train_attacks, &out.test_attacks}) {
            for (const auto& [key, values] : t->scores.at(r.id)) {
                complete = complete && std::none_of(values.begin(), values.end(), [](double v) { return std::isnan(v); });
            }
        }
        if (complete) {
            out.detectors.push_back(r.id);
        } else {
            out.skipped[r.id] = "not applicable to every image of this algorithm (dense sampling mask or no expected peaks)";
        }
    }
    return out;
}

// ---------------------------------------------------------- evaluate stage

struct Split {
    std::set<std::string> calibration;
    std::set<std::string> validation;
    std::set<std::string> test;
};

Split make_split(std::vector<std::string> ids, std::uint64_t seed)
{
    std::sort(ids.begin(), ids.end());
    Rng rng(mix_seed(seed, 0x5B11));
    for (std::size_t i = ids.size(); i > 1; --i) {
        std::swap(ids[i - 1], ids[rng.below(i)]);
    }
    const std::size_t n_train = ids.size() / 2;
    const std::size_t n_cal = n_train / 2;
    Split s;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        (i < n_cal ? s.calibration : i < n_train ? s.validation : s.test).insert(ids[i]);
    }
    return s;
}

std::vector<ScoredSample> gather(const ScoreTable& benign, const ScoreTable& attacks, const std::string& det,
                                 const std::string& key, const std::set<std::string>& subset)
{
    std::vector<ScoredSample> out;
    for (const auto* t : {&benign, &attacks}) {
        const auto& col = t->scores.at(det).at(key);
        for (std::size_t i = 0; i < t->ids.size(); ++i) {
            if (subset.contains(t->ids[i])) {
                out.push_back({t->ids[i], t == &attacks, col[i]});
            }
        }
    }
    return out;
}

struct Profile {
    std::string id;
    Params params;
    std::string key;
    Direction direction = Direction::high_is_attack;
    double threshold = 0.0;
    bool fixed = false;
    Confusion validation;
    Confusion test;
};

Json profile_json(const Profile& p, double target_fpr, const Split& split, std::uint64_t seed)
{
    return {{"id", p.id},
            {"params", to_json(p.params)},
            {"direction", std::string(to_string(p.direction))},
            {"threshold", p.threshold},
            {"fixed_rule", p.fixed},
            {"calibration",
             {{"target_fpr", target_fpr},
              {"split_seed", seed},
              {"calibration_sources", split.calibration.size()},
              {"validation_sources", split.validation.size()},
              {"test_sources", split.test.size()}}}};
}

Json stage_evaluate(Context& ctx, Algorithm alg, const AlgorithmScores& scores)
{
    const RunConfig& cfg = ctx.cfg;
    const std::vector<DetectorRequest> requests = requested_detectors(cfg);
    Json seeds = Json::array();
    for (std::uint64_t split_seed : cfg.split_seeds) {
        const Split split = make_split(scores.benign.ids, split_seed);
        std::set<std::string> train = split.calibration;
        train.insert(split.validation.begin(), split.validation.end());

        std::vector<Profile> profiles;
        Json det_json = Json::object();
        for (const auto& r : requests) {
            if (std::find(scores.detectors.begin(), scores.detectors.end(), r.id) == scores.detectors.end()) {
                continue;
            }
            const DetectorInfo& info = detector_info(r.id);
            const std::vector<Params>& grid = grid_of(r);
            Profile prof;
            prof.id = r.id;
            prof.direction = info.direction;
            try {
                std::size_t chosen = 0;
                if (info.fixed_threshold) {
                    prof.fixed = true;
                    prof.threshold = *info.fixed_threshold;
                    const auto val = gather(scores.benign, scores.train_attacks, r.id, params_key(grid[0]),
                                            split.validation);
                    prof.validation = evaluate_threshold(val, prof.threshold, prof.direction);
                } else {
                    std::vector<std::vector<ScoredSample>> cal_tables;
                    std::vector<std::vector<ScoredSample>> val_tables;
                    for (const Params& p : grid) {
                        cal_tables.push_back(gather(scores.benign, scores.train_attacks, r.id, params_key(p),
                                                    split.calibration));
                        val_tables.push_back(gather(scores.benign, scores.train_attacks, r.id, params_key(p),
                                                    split.validation));
                    }
                    const auto train_threshold = [&](std::size_t k) {
                        const auto train_samples = gather(scores.benign, scores.train_attacks, r.id,
                                                          params_key(grid[k]), train);
                        return calibrate_threshold(benign_scores(train_samples), info.direction, cfg.target_fpr);
                    };
                    if (grid.size() > 1) {
                        const CalibratedPoint best = grid_search(cal_tables, val_tables, info.direction,
                                                                 cfg.target_fpr);
                        chosen = best.index;
                        prof.validation = best.validation;
                        prof.threshold = train_threshold(chosen);
                    } else {
                        // Nothing to search: calibrate on the whole training half right away.
                        prof.threshold = train_threshold(0);
                        prof.validation = evaluate_threshold(val_tables[0], prof.threshold, prof.direction);
                    }
                }
                prof.params = grid[chosen];
                prof.key = params_key(prof.params);
                const auto train_samples = gather(scores.benign, scores.train_attacks, r.id, prof.key, train);
                const auto test_samples = gather(scores.benign, scores.test_attacks, r.id, prof.key, split.test);
                require_disjoint(train_samples, test_samples, "train/test");
                prof.test = evaluate_threshold(test_samples, prof.threshold, prof.direction);

                std::vector<double> benign_test;
                std::vector<double> attack_test;
                for (const auto& s : test_samples) {
                    (s.attack ? attack_test : benign_test).push_back(s.score);
                }
                det_json[r.id] = {{"params", to_json(prof.params)},
                                  {"threshold", prof.threshold},
                                  {"direction", std::string(to_string(prof.direction))},
                                  {"validation", confusion_json(prof.validation)},
                                  {"test", confusion_json(prof.test)},
                                  {"test_scores",
                                   {{"benign", distribution_json(benign_test)},
                                    {"attack", distribution_json(attack_test)}}}};
            } catch (const StageError&) {
                throw;
            } catch (const std::exception& e) {
                throw StageError("evaluate", r.id, e.what());
            }
            const fs::path pdir = cfg.output / "profiles" / std::string(to_string(alg))
                                  / fmt::format("seed-{}", split_seed);
            fs::create_directories(pdir);
            write_json(pdir / (r.id + ".json"), profile_json(prof, cfg.target_fpr, split, split_seed));
            profiles.push_back(std::move(prof));
        }

        Json ens_json = Json::object();
        for (const EnsembleRequest& er : cfg.ensembles) {
            std::vector<const Profile*> ranked;
            for (const Profile& p : profiles) {
                if (!p.fixed) {
                    ranked.push_back(&p);
                }
            }
            std::stable_sort(ranked.begin(), ranked.end(), [](const Profile* a, const Profile* b) {
                if (a->validation.accuracy() != b->validation.accuracy()) {
                    return a->validation.accuracy() > b->validation.accuracy();
                }
                return a->validation.fpr() < b->validation.fpr();
            });
            ranked.resize(std::min(ranked.size(), static_cast<std::size_t>(er.best)));
            if (ranked.empty()) {
                continue;
            }
            std::vector<std::vector<ScoredSample>> member_samples;
            std::vector<std::string> names;
            for (const Profile* p : ranked) {
                member_samples.push_back(gather(scores.benign, scores.test_attacks, p->id, p->key, split.test));
                names.push_back(p->id);
            }
            Confusion c;
            // std::vector<bool> cannot back a span.
            const auto verdicts = std::make_unique<bool[]>(ranked.size());
            for (std::size_t k = 0; k < member_samples[0].size(); ++k) {
                for (std::size_t m = 0; m < ranked.size(); ++m) {
                    verdicts[m] = flags_attack(member_samples[m][k].score, ranked[m]->threshold, ranked[m]->direction);
                }
                const bool flag = ensemble_vote(std::span<const bool>(verdicts.get(), ranked.size()), er.strategy);
                const bool attack = member_samples[0][k].attack;
                (attack ? (flag ? c.tp : c.fn) : (flag ? c.fp : c.tn)) += 1;
            }
            ens_json[er.name] = {{"members", names},
                                 {"strategy", std::string(to_string(er.strategy))},
                                 {"test", confusion_json(c)}};
        }

        seeds.push_back({{"seed", split_seed},
                         {"sizes",
                          {{"calibration", split.calibration.size()},
                           {"validation", split.validation.size()},
                           {"test", split.test.size()}}},
                         {"detectors", det_json},
                         {"ensembles", ens_json}});
    }
    Json skipped = Json::object();
    for (const auto& [id, why] : scores.skipped) {
        skipped[id] = why;
    }
    Json out = {{"algorithm", std::string(to_string(alg))}, {"seeds", seeds}, {"not_applicable", skipped}};
    const fs::path file = cfg.output / "evaluation" / (std::string(to_string(alg)) + ".json");
    fs::create_directories(file.parent_path());
    write_json(file, out);
    return out;
}

// ---------------------------------------------------------- adaptive stage

Json stage_adaptive(Context& ctx, Algorithm alg, const AttackSet& test_set, const AlgorithmScores& scores,
                    const Json& evaluation)
{
    const RunConfig& cfg = ctx.cfg;
    Json requests = Json::array();
    for (const auto& r : cfg.adaptive) {
        requests.push_back({{"kind", std::string(to_string(r.kind))}, {"parameters", r.parameters},
                            {"detectors", r.detectors}, {"window_half", r.window_half}});
    }
    const fs::path file = cfg.output / "adaptive" / (std::string(to_string(alg)) + "-scores.json");
    const Json print = {{"stage", "adaptive"},
                        {"attacks", ctx.stage_prints.value((test_set.dir / "index.json").string(), "")},
                        {"requests", requests},
                        {"save_images", cfg.save_adaptive_images},
                        {"seed", cfg.seed}};
    const std::string fp = fingerprint(print);
    ctx.stage_prints[file.string()] = fp;

    // kind/param -> { det -> params key -> scores, psnr_to_attack, o1, o2 } aligned with successful ids
    Json raw;
    const std::vector<std::string> ids = test_set.successful_ids();
    if (stage_current(ctx, file)) {
        raw = read_json(file);
        ctx.log(fmt::format("adaptive {}: up to date", to_string(alg)));
    } else {
        raw = {{"fingerprint", fp}, {"ids", ids}, {"runs", Json::array()}};
        std::vector<LoadedAttackRecord> records(ids.size());
        for (std::size_t k = 0; k < ids.size(); ++k) {
            try {
                records[k] = load_attack_record(test_set.dir / ids[k]);
            } catch (const std::exception& e) {
                throw StageError("adaptive", ids[k], e.what());
            }
        }
        for (const AdaptiveRequest& req : cfg.adaptive) {
            for (double param : req.parameters) {
                const std::string tag = req.kind == AdaptiveKind::suppress
                                            ? fmt::format("suppress_w{}_{}", req.window_half, param)
                                            : fmt::format("{}_{}", to_string(req.kind), param);
                ctx.log(fmt::format("adaptive {}: {} on {} attacks", to_string(alg), tag, ids.size()));
                std::vector<double> to_attack(ids.size());
                std::vector<double> o1(ids.size());
                std::vector<double> o2(ids.size());
                std::map<std::string, std::map<std::string, std::vector<double>>> det_scores;
                for (const auto& d : req.detectors) {
                    for (const Params& p : configured_grid(cfg, d)) {
                        det_scores[d][params_key(p)].assign(ids.size(), 0.0);
                    }
                }
                std::mutex m;
                parallel_for(ids.size(), cfg.threads, [&](std::size_t k) {
                    const LoadedAttackRecord& lr = records[k];
                    AdaptiveRecord ar;
                    try {
                        ar = run_adaptive(lr.record, lr.spec, req.kind, param, req.window_half);
                    } catch (const std::exception& e) {
                        throw StageError("adaptive", ids[k], e.what());
                    }
                    if (cfg.save_adaptive_images) {
                        save_adaptive_record(test_set.dir / ids[k] / "adaptive" / tag, ar);
                    }
                    ImageAnalysis analysis(ar.image, lr.spec);
                    const std::uint64_t seed = mix_seed(cfg.seed, fnv1a(ids[k]));
                    std::vector<std::tuple<std::string, std::string, double>> row;
                    for (const auto& d : req.detectors) {
                        const DetectorInfo& info = detector_info(d);
                        for (const Params& p : configured_grid(cfg, d)) {
                            double s = std::numeric_limits<double>::quiet_NaN();
                            try {
                                s = detector_score(info, analysis, p, seed);
                            } catch (const DegenerateSpec&) {
                            } catch (const std::exception& e) {
                                throw StageError("adaptive", ids[k], d + ": " + e.what());
                            }
                            row.emplace_back(d, params_key(p), s);
                        }
                    }
                    std::lock_guard lock(m);
                    to_attack[k] = ar.psnr_to_attack;
                    o1[k] = ar.goal_o1_db;
                    o2[k] = ar.goal_o2_db;
                    for (const auto& [d, key, s] : row) {
                        det_scores[d][key][k] = s;
                    }
                });
                auto arr = [](const std::vector<double>& v) {
                    Json a = Json::array();
                    for (double x : v) {
                        a.push_back(real_to_json(x));
                    }
                    return a;
                };
                Json dj = Json::object();
                for (const auto& [d, by] : det_scores) {
                    for (const auto& [key, v] : by) {
                        dj[d][key] = arr(v);
                    }
                }
                raw["runs"].push_back({{"kind", std::string(to_string(req.kind))},
                                       {"parameter", param},
                                       {"window_half", req.window_half},
                                       {"psnr_to_attack", arr(to_attack)},
                                       {"o1_proxy", arr(o1)},
                                       {"o2", arr(o2)},
                                       {"scores", dj}});
                ctx.computed += ids.size();
            }
        }
        fs::create_directories(file.parent_path());
        write_json(file, raw);
    }

    // Detection on the adaptive images of each test split, with the profiles
    // calibrated on the unmodified attacks.
    Json runs = Json::array();
    for (const Json& run : raw.at("runs")) {
        std::vector<double> to_attack;
        std::vector<double> o1;
        std::vector<double> o2;
        for (const Json& x : run.at("psnr_to_attack")) {
            to_attack.push_back(real_from_json(x));
        }
        for (const Json& x : run.at("o1_proxy")) {
            o1.push_back(real_from_json(x));
        }
        for (const Json& x : run.at("o2")) {
            o2.push_back(real_from_json(x));
        }
        Json per_det = Json::object();
        for (const auto& [d, by] : run.at("scores").items()) {
            Json per_seed = Json::array();
            for (const Json& seed_eval : evaluation.at("seeds")) {
                const std::uint64_t split_seed = seed_eval.at("seed").get<std::uint64_t>();
                if (!seed_eval.at("detectors").contains(d)) {
                    continue;
                }
                const Json& prof = seed_eval.at("detectors").at(d);
                const Params params = params_from_json(prof.at("params"));
                const double threshold = prof.at("threshold").get<double>();
                const Direction dir = parse_direction(prof.at("direction").get<std::string>());
                const Split split = make_split(scores.benign.ids, split_seed);
                const Json& col = by.at(params_key(params));
                Confusion c;
                c.fp = prof.at("test").at("fp").get<std::size_t>();
                c.tn = prof.at("test").at("tn").get<std::size_t>();
                std::vector<double> psnr_test;
                std::size_t psnr_ok = 0;
                for (std::size_t k = 0; k < ids.size(); ++k) {
                    if (!split.test.contains(ids[k])) {
                        continue;
                    }
                    const bool flag = flags_attack(real_from_json(col.at(k)), threshold, dir);
                    (flag ? c.tp : c.fn) += 1;
                    psnr_test.push_back(to_attack[k]);
                    psnr_ok += to_attack[k] >= 20.0 ? 1 : 0;
                }
                per_seed.push_back({{"seed", split_seed},
                                    {"params", to_json(params)},
                                    {"test", confusion_json(c)},
                                    {"attack_detection_rate", c.tpr()},
                                    {"psnr_to_attack_min", psnr_test.empty() ? Json(nullptr)
                                                                             : real_to_json(*std::min_element(
                                                                                   psnr_test.begin(), psnr_test.end()))},
                                    {"psnr_to_attack_ge20_share",
                                     psnr_test.empty() ? 0.0
                                                       : 100.0 * static_cast<double>(psnr_ok)
                                                             / static_cast<double>(psnr_test.size())}});
            }
            per_det[d] = per_seed;
        }
        auto finite_mean = [](const std::vector<double>& v) {
            double s = 0.0;
            std::size_t n = 0;
            for (double x : v) {
                if (std::isfinite(x)) {
                    s += x;
                    ++n;
                }
            }
            return n == 0 ? std::numeric_limits<double>::infinity() : s / static_cast<double>(n);
        };
        runs.push_back({{"kind", run.at("kind")},
                        {"parameter", run.at("parameter")},
                        {"window_half", run.at("window_half")},
                        {"psnr_to_attack", distribution_json(to_attack)},
                        {"mean_psnr_to_attack", real_to_json(finite_mean(to_attack))},
                        {"mean_o1_proxy_psnr_to_target", real_to_json(finite_mean(o1))},
                        {"mean_o2_psnr_to_source", real_to_json(finite_mean(o2))},
                        {"detectors", per_det}});
    }
    Json out = {{"algorithm", std::string(to_string(alg))}, {"attacks", ids.size()}, {"runs", runs}};
    write_json(cfg.output / "adaptive" / (std::string(to_string(alg)) + ".json"), out);
    return out;
}

// ------------------------------------------------------------ report stage

Json attack_summary(const AttackSet& set)
{
    std::map<std::string, std::pair<int, int>> by_ratio;
    std::size_t ok = 0;
    std::vector<double> o2;
    std::size_t linf_ok = 0;
    for (const auto& o : set.outcomes) {
        const std::string ratio = fmt::format("{:g}x{:g}", o.spec.ratio_rows(), o.spec.ratio_cols());
        by_ratio[ratio].second += 1;
        by_ratio[ratio].first += o.success ? 1 : 0;
        ok += o.success ? 1 : 0;
        o2.push_back(o.o2_db);
        linf_ok += o.o1 ? 1 : 0;
    }
    Json ratios = Json::object();
    for (const auto& [r, counts] : by_ratio) {
        ratios[r] = {{"successes", counts.first}, {"attempted", counts.second}};
    }
    return {{"set", set.name},
            {"attempted", set.outcomes.size()},
            {"dual_goal_successes", ok},
            {"o1_satisfied", linf_ok},
            {"o2_psnr_db", distribution_json(o2)},
            {"by_ratio", ratios}};
}

struct CsvRow {
    std::string scenario;
    std::string algorithm;
    std::string kind;
    std::string name;
    std::string setting;
    std::vector<double> acc;
    std::vector<double> tpr;
    std::vector<double> fpr;
    std::string params;
};

std::string csv_escape(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return out + "\"";
}

Json stage_report(Context& ctx, const Json& per_algorithm)
{
    const RunConfig& cfg = ctx.cfg;
    std::vector<CsvRow> rows;
    Json summary = Json::object();
    const std::string scenario(to_string(cfg.attack.scenario));
    for (const auto& [alg, block] : per_algorithm.items()) {
        const Json& ev = block.at("evaluation");
        std::map<std::string, CsvRow> det_rows;
        std::map<std::string, CsvRow> ens_rows;
        for (const Json& s : ev.at("seeds")) {
            for (const auto& [d, r] : s.at("detectors").items()) {
                CsvRow& row = det_rows[d];
                row.scenario = scenario;
                row.algorithm = alg;
                row.kind = "detector";
                row.name = d;
                row.acc.push_back(r.at("test").at("accuracy").get<double>());
                row.tpr.push_back(r.at("test").at("tpr").get<double>());
                row.fpr.push_back(r.at("test").at("fpr").get<double>());
                row.params += (row.params.empty() ? "" : " ") + r.at("params").dump();
            }
            for (const auto& [e, r] : s.at("ensembles").items()) {
                CsvRow& row = ens_rows[e];
                row.scenario = scenario;
                row.algorithm = alg;
                row.kind = "ensemble";
                row.name = e;
                row.acc.push_back(r.at("test").at("accuracy").get<double>());
                row.tpr.push_back(r.at("test").at("tpr").get<double>());
                row.fpr.push_back(r.at("test").at("fpr").get<double>());
                std::string members;
                for (const Json& m : r.at("members")) {
                    members += (members.empty() ? "" : "+") + m.get<std::string>();
                }
                row.params += (row.params.empty() ? "" : " ") + members;
            }
        }
        Json alg_summary = Json::object();
        auto add = [&](std::map<std::string, CsvRow>& src, const char* key) {
            Json part = Json::object();
            for (auto& [name, row] : src) {
                const Summary a = summarize(row.acc);
                const Summary t = summarize(row.tpr);
                const Summary f = summarize(row.fpr);
                part[name] = {{"accuracy", {a.mean, a.std}}, {"tpr", {t.mean, t.std}}, {"fpr", {f.mean, f.std}}};
                rows.push_back(row);
            }
            alg_summary[key] = part;
        };
        add(det_rows, "detectors");
        add(ens_rows, "ensembles");

        if (block.contains("adaptive")) {
            Json part = Json::array();
            for (const Json& run : block.at("adaptive").at("runs")) {
                const std::string kind = run.at("kind").get<std::string>();
                std::string setting = fmt::format("{}={}", kind, run.at("parameter").get<double>());
                if (kind == "suppress") {
                    setting += fmt::format(" w={}", run.at("window_half").get<int>());
                }
                for (const auto& [d, per_seed] : run.at("detectors").items()) {
                    CsvRow row{scenario, alg, "adaptive", d, setting, {}, {}, {}, ""};
                    std::vector<double> detection;
                    for (const Json& s : per_seed) {
                        row.acc.push_back(s.at("test").at("accuracy").get<double>());
                        row.tpr.push_back(s.at("test").at("tpr").get<double>());
                        row.fpr.push_back(s.at("test").at("fpr").get<double>());
                        detection.push_back(s.at("attack_detection_rate").get<double>());
                    }
                    const Summary a = summarize(row.acc);
                    const Summary t = summarize(detection);
                    part.push_back({{"setting", setting},
                                    {"detector", d},
                                    {"accuracy", {a.mean, a.std}},
                                    {"attack_detection_rate", {t.mean, t.std}},
                                    {"mean_psnr_to_attack", run.at("mean_psnr_to_attack")},
                                    {"mean_o1_proxy_psnr_to_target", run.at("mean_o1_proxy_psnr_to_target")},
                                    {"mean_o2_psnr_to_source", run.at("mean_o2_psnr_to_source")}});
                    rows.push_back(std::move(row));
                }
            }
            alg_summary["adaptive"] = part;
        }
        alg_summary["attacks"] = block.at("attacks");
        alg_summary["not_applicable"] = ev.at("not_applicable");
        summary[alg] = alg_summary;
    }

    std::ostringstream csv;
    csv << "scenario,algorithm,kind,name,setting,accuracy_mean,accuracy_std,tpr_mean,tpr_std,fpr_mean,fpr_std,"
           "seeds,params\n";
    for (const CsvRow& r : rows) {
        const Summary a = summarize(r.acc);
        const Summary t = summarize(r.tpr);
        const Summary f = summarize(r.fpr);
        csv << fmt::format("{},{},{},{},{},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{},{}\n", r.scenario, r.algorithm,
                           r.kind, r.name, r.setting, a.mean, a.std, t.mean, t.std, f.mean, f.std, r.acc.size(),
                           csv_escape(r.params));
    }
    const fs::path dir = cfg.output / "reports";
    fs::create_directories(dir);
    write_text_if_changed(dir / "report.csv", csv.str());
    Json report = {{"scenario", scenario},
                   {"target_fpr", cfg.target_fpr},
                   {"split_seeds", cfg.split_seeds},
                   {"o1_metric", "PSNR(scale(A), T) as a proxy; no victim model is involved"},
                   {"o2_gate_db", cfg.attack.o2_gate_db},
                   {"summary", summary},
                   {"details", per_algorithm}};
    write_json(dir / "report.json", report);
    return report;
}

} // namespace

// ------------------------------------------------------------------ config

std::string_view to_string(Stage s)
{
    switch (s) {
    case Stage::corpus:
        return "corpus";
    case Stage::attacks:
        return "attacks";
    case Stage::scores:
        return "scores";
    case Stage::evaluate:
        return "evaluate";
    case Stage::adaptive:
        return "adaptive";
    case Stage::report:
        return "report";
    }
    return "unknown";
}

double sample_std(std::span<const double> v)
{
    if (v.size() < 2) {
        return 0.0;
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

RunConfig run_config_from_json(const Json& j)
{
    if (!j.is_object()) {
        throw ConfigError("run config must be a JSON object");
    }
    RunConfig cfg;
    const char* field = "seed";
    try {
        if (!j.contains("seed")) {
            throw ConfigError("a seed is required");
        }
        cfg.seed = j.at("seed").get<std::uint64_t>();
        field = "output";
        cfg.output = j.value("output", cfg.output.string());
        field = "corpus";
        if (j.contains("corpus")) {
            const Json& c = j.at("corpus");
            if (c.contains("directory")) {
                cfg.synthetic.reset();
                cfg.corpus_dir = c.at("directory").get<std::string>();
            } else {
                cfg.synthetic = corpus_spec_from_json(c.value("synthetic", Json::object()));
            }
        }
        field = "dst";
        if (j.contains("dst")) {
            cfg.dst = {j.at("dst").at(0).get<int>(), j.at("dst").at(1).get<int>()};
        }
        field = "algorithms";
        if (j.contains("algorithms")) {
            cfg.algorithms.clear();
            for (const Json& a : j.at("algorithms")) {
                cfg.algorithms.push_back(parse_algorithm(a.get<std::string>()));
            }
        }
        field = "attack";
        if (j.contains("attack")) {
            cfg.attack = attack_config_from_json(j.at("attack"));
        }
        field = "calibration_backdoor";
        if (j.contains("calibration_backdoor") && !j.at("calibration_backdoor").is_null()) {
            cfg.calibration_backdoor = backdoor_from_json(j.at("calibration_backdoor"));
        }
        field = "donor_attempts";
        cfg.donor_attempts = j.value("donor_attempts", cfg.donor_attempts);
        field = "detectors";
        if (j.contains("detectors")) {
            for (const Json& d : j.at("detectors")) {
                DetectorRequest r;
                if (d.is_string()) {
                    r.id = d.get<std::string>();
                } else {
                    r.id = d.at("id").get<std::string>();
                    for (const Json& p : d.value("grid", Json::array())) {
                        r.grid.push_back(params_from_json(p));
                    }
                }
                cfg.detectors.push_back(std::move(r));
            }
        }
        field = "ensembles";
        if (j.contains("ensembles")) {
            for (const Json& e : j.at("ensembles")) {
                EnsembleRequest r;
                r.name = e.at("name").get<std::string>();
                r.best = e.value("best", r.best);
                const std::string strategy = e.value("strategy", "majority");
                if (strategy == "majority") {
                    r.strategy = VoteStrategy::majority;
                } else if (strategy == "one_winner_takes_all") {
                    r.strategy = VoteStrategy::one_winner_takes_all;
                } else {
                    throw ConfigError("unknown ensemble strategy '" + strategy + "'");
                }
                cfg.ensembles.push_back(std::move(r));
            }
        }
        field = "target_fpr";
        cfg.target_fpr = j.value("target_fpr", cfg.target_fpr);
        field = "split_seeds";
        cfg.split_seeds = j.value("split_seeds", cfg.split_seeds);
        field = "adaptive";
        if (j.contains("adaptive")) {
            for (const Json& a : j.at("adaptive")) {
                AdaptiveRequest r;
                r.kind = parse_adaptive(a.at("kind").get<std::string>());
                r.parameters = a.at("parameters").get<std::vector<double>>();
                r.detectors = a.at("detectors").get<std::vector<std::string>>();
                r.window_half = a.value("window_half", r.window_half);
                cfg.adaptive.push_back(std::move(r));
            }
        }
        field = "save_adaptive_images";
        cfg.save_adaptive_images = j.value("save_adaptive_images", cfg.save_adaptive_images);
        field = "threads";
        cfg.threads = j.value("threads", cfg.threads);
        field = "debug_dir";
        if (j.contains("debug_dir") && !j.at("debug_dir").is_null()) {
            cfg.debug_dir = j.at("debug_dir").get<std::string>();
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(config_error_context(field, e));
    }
    validate_run_config(cfg);
    return cfg;
}

Json to_json(const RunConfig& cfg)
{
    Json j;
    j["seed"] = cfg.seed;
    j["output"] = cfg.output.string();
    if (cfg.synthetic) {
        j["corpus"] = {{"synthetic", to_json(*cfg.synthetic)}};
    } else {
        j["corpus"] = {{"directory", cfg.corpus_dir.string()}};
    }
    j["dst"] = {cfg.dst.rows, cfg.dst.cols};
    Json algs = Json::array();
    for (Algorithm a : cfg.algorithms) {
        algs.push_back(std::string(to_string(a)));
    }
    j["algorithms"] = algs;
    j["attack"] = to_json(cfg.attack);
    j["calibration_backdoor"] = cfg.calibration_backdoor ? to_json(*cfg.calibration_backdoor) : Json(nullptr);
    j["donor_attempts"] = cfg.donor_attempts;
    Json dets = Json::array();
    for (const auto& d : cfg.detectors) {
        Json grid = Json::array();
        for (const Params& p : d.grid) {
            grid.push_back(to_json(p));
        }
        dets.push_back({{"id", d.id}, {"grid", grid}});
    }
    j["detectors"] = dets;
    Json ens = Json::array();
    for (const auto& e : cfg.ensembles) {
        ens.push_back({{"name", e.name}, {"best", e.best}, {"strategy", std::string(to_string(e.strategy))}});
    }
    j["ensembles"] = ens;
    j["target_fpr"] = cfg.target_fpr;
    j["split_seeds"] = cfg.split_seeds;
    Json ad = Json::array();
    for (const auto& a : cfg.adaptive) {
        ad.push_back({{"kind", std::string(to_string(a.kind))}, {"parameters", a.parameters},
                      {"detectors", a.detectors}, {"window_half", a.window_half}});
    }
    j["adaptive"] = ad;
    j["save_adaptive_images"] = cfg.save_adaptive_images;
    j["threads"] = cfg.threads;
    j["debug_dir"] = cfg.debug_dir ? Json(cfg.debug_dir->string()) : Json(nullptr);
    return j;
}

void validate_run_config(const RunConfig& cfg)
{
    try {
        if (cfg.algorithms.empty()) {
            throw ConfigError("at least one algorithm is required");
        }
        if (!cfg.synthetic && cfg.corpus_dir.empty()) {
            throw ConfigError("either a synthetic corpus or a corpus directory is required");
        }
        if (cfg.synthetic && cfg.synthetic->count < kMinCorpusCount) {
            throw ConfigError("synthetic corpora need at least " + std::to_string(kMinCorpusCount) + " images");
        }
        validate_config(cfg.attack);
        for (const auto& d : cfg.detectors) {
            detector_info(d.id);
        }
        for (const auto& a : cfg.adaptive) {
            for (const auto& d : a.detectors) {
                detector_info(d);
            }
            if (a.window_half < 0) {
                throw ConfigError("adaptive window_half must be non-negative");
            }
            if (a.parameters.empty()) {
                throw ConfigError("adaptive sweep '" + std::string(to_string(a.kind)) + "' lists no parameters");
            }
        }
        if (!(cfg.target_fpr >= 0.0 && cfg.target_fpr < 1.0)) {
            throw ConfigError("target_fpr must lie in [0, 1)");
        }
        if (cfg.split_seeds.empty()) {
            throw ConfigError("at least one split seed is required");
        }
        if (cfg.calibration_backdoor && cfg.attack.scenario != Scenario::local) {
            throw ConfigError("calibration_backdoor only applies to the local scenario");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

// ---------------------------------------------------------------- pipeline

PipelineResult run_pipeline(const RunConfig& cfg, const PipelineOptions& opts)
{
    validate_run_config(cfg);
    Context ctx{cfg, opts, 0, {}, {}, {}, Json::object()};
    fs::create_directories(cfg.output);
    write_json(cfg.output / "config.json", to_json(cfg));

    stage_corpus(ctx);
    if (opts.until == Stage::corpus) {
        return {{}, ctx.computed};
    }

    Json per_algorithm = Json::object();
    for (Algorithm alg : cfg.algorithms) {
        const AttackSet test_set = stage_attacks(ctx, alg, cfg.attack);
        AttackSet train_set = test_set;
        if (cfg.calibration_backdoor) {
            AttackConfig calib = cfg.attack;
            calib.backdoor = *cfg.calibration_backdoor;
            if (set_name(alg, calib) != test_set.name) {
                train_set = stage_attacks(ctx, alg, calib);
            }
        }
        if (opts.until == Stage::attacks) {
            continue;
        }
        const AlgorithmScores scores = stage_scores(ctx, alg, train_set, test_set);
        if (opts.until == Stage::scores) {
            continue;
        }
        Json block = {{"evaluation", stage_evaluate(ctx, alg, scores)}};
        Json attacks = Json::array({attack_summary(test_set)});
        if (train_set.name != test_set.name) {
            attacks.push_back(attack_summary(train_set));
        }
        block["attacks"] = attacks;
        if (opts.until != Stage::evaluate && !cfg.adaptive.empty()) {
            block["adaptive"] = stage_adaptive(ctx, alg, test_set, scores, block.at("evaluation"));
        }
        per_algorithm[std::string(to_string(alg))] = block;
    }
    if (opts.until != Stage::report) {
        return {{}, ctx.computed};
    }
    return {stage_report(ctx, per_algorithm), ctx.computed};
}

} // namespace scaleguard
