#include "scaleguard/attack.hpp"

#include "scaleguard/box_lsq.hpp"
#include "scaleguard/codec.hpp"
#include "scaleguard/errors.hpp"
#include "scaleguard/metrics.hpp"
#include "scaleguard/serialization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace scaleguard {

namespace fs = std::filesystem;

namespace {

// Each of the two stages gets this share of epsilon; the rest absorbs the
// stage coupling and the final quantization of A.
constexpr double kStageShare = 0.25;

constexpr int kDiskRadius = 10;

std::array<std::uint8_t, 3> hsv_to_rgb(double hue_deg, double sat, double val)
{
    const double c = val * sat;
    const double h = std::fmod(hue_deg, 360.0) / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
    }
    const double m = val - c;
    return {quantize(255.0 * (r + m)), quantize(255.0 * (g + m)), quantize(255.0 * (b + m))};
}

bool pattern_covers(const BackdoorPattern& p, int i, int j)
{
    if (p.kind != BackdoorKind::circle) {
        return true;
    }
    const int radius = (p.extent - 1) / 2;
    return (i - radius) * (i - radius) + (j - radius) * (j - radius) <= radius * radius;
}

// Colour of pattern cell (i, j); black for box and circle, a diagonal hue
// sweep for rainbow.
std::array<std::uint8_t, 3> pattern_color(const BackdoorPattern& p, int i, int j)
{
    if (p.kind != BackdoorKind::rainbow) {
        return {0, 0, 0};
    }
    const int period = p.extent;
    return hsv_to_rgb(360.0 * ((i + j) % period) / period, 1.0, 1.0);
}

bool single_tap(const AxisOperator& op)
{
    for (int k = 0; k < op.dst_len(); ++k) {
        if (op.row(k).size() != 1) {
            return false;
        }
    }
    return true;
}

} // namespace

std::string_view to_string(Scenario s)
{
    switch (s) {
    case Scenario::global:
        return "global";
    case Scenario::local:
        return "local";
    case Scenario::overlay:
        return "overlay";
    }
    return "unknown";
}

std::string_view to_string(BackdoorKind k)
{
    switch (k) {
    case BackdoorKind::box:
        return "box";
    case BackdoorKind::circle:
        return "circle";
    case BackdoorKind::rainbow:
        return "rainbow";
    }
    return "unknown";
}

std::string_view to_string(Corner c)
{
    switch (c) {
    case Corner::lower_left:
        return "lower_left";
    case Corner::lower_right:
        return "lower_right";
    case Corner::upper_left:
        return "upper_left";
    case Corner::upper_right:
        return "upper_right";
    }
    return "unknown";
}

Scenario parse_scenario(std::string_view name)
{
    for (Scenario s : {Scenario::global, Scenario::local, Scenario::overlay}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw InvalidArgument("unknown scenario '" + std::string(name) + "'");
}

BackdoorKind parse_backdoor(std::string_view name)
{
    for (BackdoorKind k : {BackdoorKind::box, BackdoorKind::circle, BackdoorKind::rainbow}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw InvalidArgument("unknown backdoor '" + std::string(name) + "'");
}

Corner parse_corner(std::string_view name)
{
    for (Corner c : {Corner::lower_left, Corner::lower_right, Corner::upper_left, Corner::upper_right}) {
        if (to_string(c) == name) {
            return c;
        }
    }
    throw InvalidArgument("unknown corner '" + std::string(name) + "'");
}

BackdoorPattern BackdoorPattern::standard(BackdoorKind kind)
{
    switch (kind) {
    case BackdoorKind::circle:
        return {kind, Corner::upper_right, 2 * kDiskRadius + 1};
    case BackdoorKind::box:
    case BackdoorKind::rainbow:
        break;
    }
    return {kind, Corner::lower_left, 15};
}

int pattern_pixel_count(const BackdoorPattern& pattern)
{
    int n = 0;
    for (int i = 0; i < pattern.extent; ++i) {
        for (int j = 0; j < pattern.extent; ++j) {
            n += pattern_covers(pattern, i, j) ? 1 : 0;
        }
    }
    return n;
}

RasterImage stamp_backdoor(const RasterImage& img, const BackdoorPattern& pattern)
{
    if (pattern.extent <= 0 || pattern.extent > img.height() || pattern.extent > img.width()) {
        throw InvalidArgument("backdoor extent " + std::to_string(pattern.extent) + " does not fit a "
                              + std::to_string(img.height()) + "x" + std::to_string(img.width()) + " target");
    }
    const bool bottom = pattern.anchor == Corner::lower_left || pattern.anchor == Corner::lower_right;
    const bool right = pattern.anchor == Corner::lower_right || pattern.anchor == Corner::upper_right;
    const int top = bottom ? img.height() - pattern.extent : 0;
    const int left = right ? img.width() - pattern.extent : 0;

    RasterImage out = img;
    for (int i = 0; i < pattern.extent; ++i) {
        for (int j = 0; j < pattern.extent; ++j) {
            if (!pattern_covers(pattern, i, j)) {
                continue;
            }
            const auto rgb = pattern_color(pattern, i, j);
            if (img.channels() == 3) {
                for (int ch = 0; ch < 3; ++ch) {
                    out.at(top + i, left + j, ch) = rgb[static_cast<std::size_t>(ch)];
                }
            } else {
                out.at(top + i, left + j) = quantize(0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]);
            }
        }
    }
    return out;
}

void validate_config(const AttackConfig& cfg)
{
    if (!(cfg.epsilon >= 0.0)) {
        throw InvalidArgument("epsilon must be non-negative");
    }
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
        throw InvalidArgument("alpha must lie in [0, 1]");
    }
}

RasterImage make_target(const RasterImage& source, const ScaleSpec& spec, const AttackConfig& cfg,
                        const RasterImage* donor)
{
    validate_config(cfg);
    if (cfg.scenario != Scenario::local) {
        if (donor == nullptr) {
            throw InvalidArgument(std::string(to_string(cfg.scenario)) + " scenario needs a donor image");
        }
        if (donor->size() != spec.dst) {
            throw DimensionMismatch("donor must match the target dimensions");
        }
        if (donor->channels() != source.channels()) {
            throw DimensionMismatch("donor and source channel counts differ");
        }
    }
    switch (cfg.scenario) {
    case Scenario::global:
        return *donor;
    case Scenario::local:
        return stamp_backdoor(scale(source, spec), cfg.backdoor);
    case Scenario::overlay: {
        const RasterImage base = scale(source, spec);
        RasterImage out(base.height(), base.width(), base.channels());
        auto d = donor->data();
        auto b = base.data();
        auto o = out.data();
        for (std::size_t i = 0; i < o.size(); ++i) {
            o[i] = quantize(cfg.alpha * d[i] + (1.0 - cfg.alpha) * b[i]);
        }
        return out;
    }
    }
    throw InvalidArgument("unknown scenario");
}

AttackRecord craft_attack(const RasterImage& source, const RasterImage& target, const ScaleSpec& spec,
                          const AttackConfig& cfg)
{
    validate_config(cfg);
    validate_downscale(spec);
    if (source.size() != spec.src) {
        throw DimensionMismatch("source does not match the ScaleSpec's source dimensions");
    }
    if (target.size() != spec.dst || target.channels() != source.channels()) {
        throw DimensionMismatch("target does not match the ScaleSpec's target dimensions");
    }

    const SamplingOperator op = build_sampling_operator(spec);
    AttackRecord rec;
    rec.source = source;
    rec.target = target;

    if (max_abs_diff(scale(source, op), target) <= cfg.epsilon) {
        rec.attack = source; // already feasible; no change is the smallest one
    } else if (single_tap(op.left) && single_tap(op.right)) {
        RasterImage a = source;
        for (int k = 0; k < spec.dst.rows; ++k) {
            const int r = op.left.row(k).front().index;
            for (int l = 0; l < spec.dst.cols; ++l) {
                const int c = op.right.row(l).front().index;
                for (int ch = 0; ch < source.channels(); ++ch) {
                    a.at(r, c, ch) = target.at(k, l, ch);
                }
            }
        }
        rec.attack = std::move(a);
    } else {
        const double stage_eps = kStageShare * cfg.epsilon;
        const int m = spec.src.rows;
        const int n = spec.src.cols;
        const int m_out = spec.dst.rows;
        const int n_out = spec.dst.cols;
        RasterImage a(m, n, source.channels());

        std::vector<double> column(static_cast<std::size_t>(m));
        std::vector<double> col_targets(static_cast<std::size_t>(m_out));
        std::vector<double> row_buf(static_cast<std::size_t>(n));
        std::vector<double> row_targets(static_cast<std::size_t>(n_out));

        for (int ch = 0; ch < source.channels(); ++ch) {
            const Plane s = source.plane(ch);
            const Plane t = target.plane(ch);

            // Column stage on the horizontally mixed source (m x n').
            Plane mixed(m, n_out);
            for (int i = 0; i < m; ++i) {
                for (int l = 0; l < n_out; ++l) {
                    double acc = 0.0;
                    for (const Tap& tap : op.right.row(l)) {
                        acc += tap.weight * s(i, tap.index);
                    }
                    mixed(i, l) = acc;
                }
            }
            Plane intermediate(m, n_out);
            for (int l = 0; l < n_out; ++l) {
                for (int i = 0; i < m; ++i) {
                    column[static_cast<std::size_t>(i)] = mixed(i, l);
                }
                for (int k = 0; k < m_out; ++k) {
                    col_targets[static_cast<std::size_t>(k)] = t(k, l);
                }
                const SolveResult res = solve_min_change(column, op.left, col_targets, stage_eps);
                rec.solver_converged = rec.solver_converged && res.feasible;
                rec.solver_iterations = std::max(rec.solver_iterations, res.iterations);
                for (int i = 0; i < m; ++i) {
                    intermediate(i, l) = res.x[static_cast<std::size_t>(i)];
                }
            }

            // Row stage on the source itself.
            Plane out(m, n);
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < n; ++j) {
                    row_buf[static_cast<std::size_t>(j)] = s(i, j);
                }
                for (int l = 0; l < n_out; ++l) {
                    row_targets[static_cast<std::size_t>(l)] = intermediate(i, l);
                }
                const SolveResult res = solve_min_change(row_buf, op.right, row_targets, stage_eps);
                rec.solver_converged = rec.solver_converged && res.feasible;
                rec.solver_iterations = std::max(rec.solver_iterations, res.iterations);
                for (int j = 0; j < n; ++j) {
                    out(i, j) = res.x[static_cast<std::size_t>(j)];
                }
            }
            a.store(ch, out);
        }
        rec.attack = std::move(a);
    }

    validate_attack(rec, spec, cfg);
    return rec;
}

SuccessFlags validate_attack(AttackRecord& rec, const ScaleSpec& spec, const AttackConfig& cfg)
{
    const RasterImage scaled = scale(rec.attack, spec);
    rec.linf_to_target = max_abs_diff(scaled, rec.target);
    rec.goal_o1_db = psnr(scaled, rec.target);
    rec.goal_o2_db = psnr(rec.attack, rec.source);
    rec.success.o1 = rec.linf_to_target <= cfg.epsilon;
    rec.success.o2 = rec.goal_o2_db >= cfg.o2_gate_db;
    return rec.success;
}

void save_attack_record(const fs::path& dir, const AttackRecord& rec, const ScaleSpec& spec, const AttackConfig& cfg)
{
    fs::create_directories(dir);
    write_png_if_changed(dir / "S.png", rec.source);
    write_png_if_changed(dir / "T.png", rec.target);
    write_png_if_changed(dir / "A.png", rec.attack);
    Json meta = {{"spec", to_json(spec)},
                 {"config", to_json(cfg)},
                 {"goals",
                  {{"o1_psnr_db", real_to_json(rec.goal_o1_db)},
                   {"o2_psnr_db", real_to_json(rec.goal_o2_db)},
                   {"linf_to_target", rec.linf_to_target}}},
                 {"solver", {{"converged", rec.solver_converged}, {"iterations", rec.solver_iterations}}},
                 {"success", {{"o1", rec.success.o1}, {"o2", rec.success.o2}}}};
    write_json(dir / "meta.json", meta);
}

LoadedAttackRecord load_attack_record(const fs::path& dir)
{
    const Json meta = read_json(dir / "meta.json");
    LoadedAttackRecord out;
    out.spec = scale_spec_from_json(meta.at("spec"));
    out.config = attack_config_from_json(meta.at("config"));
    out.record.source = read_image(dir / "S.png");
    out.record.target = read_image(dir / "T.png");
    out.record.attack = read_image(dir / "A.png");
    const Json& goals = meta.at("goals");
    out.record.goal_o1_db = real_from_json(goals.at("o1_psnr_db"));
    out.record.goal_o2_db = real_from_json(goals.at("o2_psnr_db"));
    out.record.linf_to_target = goals.at("linf_to_target").get<int>();
    out.record.solver_converged = meta.at("solver").at("converged").get<bool>();
    out.record.solver_iterations = meta.at("solver").at("iterations").get<int>();
    out.record.success.o1 = meta.at("success").at("o1").get<bool>();
    out.record.success.o2 = meta.at("success").at("o2").get<bool>();
    return out;
}

} // namespace scaleguard
