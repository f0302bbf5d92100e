#include "doctest.h"

#include "reference.hpp"

#include "scaleguard/attack.hpp"
#include "scaleguard/box_lsq.hpp"
#include "scaleguard/errors.hpp"
#include "scaleguard/metrics.hpp"

#include <cmath>
#include <filesystem>

using namespace scaleguard;
using sgtest::random_image;

namespace {

std::size_t differing(const RasterImage& a, const RasterImage& b)
{
    std::size_t n = 0;
    for (int i = 0; i < a.height(); ++i) {
        for (int j = 0; j < a.width(); ++j) {
            bool d = false;
            for (int c = 0; c < a.channels(); ++c) {
                d = d || a.at(i, j, c) != b.at(i, j, c);
            }
            n += d ? 1 : 0;
        }
    }
    return n;
}

} // namespace

TEST_CASE("solver keeps a feasible start")
{
    const AxisOperator op = build_axis_operator(Algorithm::bilinear, 4, 2);
    const std::vector<double> start{10, 20, 30, 40};
    std::vector<double> targets(2);
    op.apply(start, targets);
    const SolveResult r = solve_min_change(start, op, targets, 0.0);
    CHECK(r.feasible);
    for (std::size_t i = 0; i < start.size(); ++i) {
        CHECK(r.x[i] == doctest::Approx(start[i]));
    }
}

TEST_CASE("solver finds the minimum-norm change")
{
    AxisOperator op(2, {{{0, 0.5}, {1, 0.5}}});
    SolveResult r = solve_min_change(std::vector<double>{0, 0}, op, std::vector<double>{100}, 0.0);
    CHECK(r.feasible);
    CHECK(r.x[0] == doctest::Approx(100).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(100).epsilon(1e-4));

    // Unconstrained optimum (325, 75) leaves the box; the constrained one is (255, 145).
    r = solve_min_change(std::vector<double>{250, 0}, op, std::vector<double>{200}, 0.0);
    CHECK(r.feasible);
    CHECK(r.x[0] == doctest::Approx(255).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(145).epsilon(1e-4));

    // A tolerance band only needs to be reached.
    r = solve_min_change(std::vector<double>{0, 0}, op, std::vector<double>{100}, 10.0);
    CHECK(r.x[0] == doctest::Approx(90).epsilon(1e-4));
}

TEST_CASE("solver reports infeasible targets")
{
    AxisOperator op(2, {{{0, 0.5}, {1, 0.5}}});
    SolverOptions opts;
    opts.max_iterations = 200;
    const SolveResult r = solve_min_change(std::vector<double>{0, 0}, op, std::vector<double>{300}, 0.0, opts);
    CHECK_FALSE(r.feasible);
    CHECK(r.max_violation > 1.0);
}

TEST_CASE("patterns")
{
    CHECK(pattern_pixel_count(BackdoorPattern::standard(BackdoorKind::box)) == 225);
    const int disk = pattern_pixel_count(BackdoorPattern::standard(BackdoorKind::circle));
    CHECK(disk >= 305);
    CHECK(disk <= 317);
    CHECK(pattern_pixel_count(BackdoorPattern::standard(BackdoorKind::rainbow)) == 225);
    CHECK(BackdoorPattern::standard(BackdoorKind::circle).anchor == Corner::upper_right);

    const RasterImage bg(40, 40, 3, 128);
    const RasterImage r1 = stamp_backdoor(bg, BackdoorPattern::standard(BackdoorKind::rainbow));
    CHECK(r1 == stamp_backdoor(bg, BackdoorPattern::standard(BackdoorKind::rainbow)));
    CHECK(r1.at(39, 0, 0) != r1.at(39, 7, 0)); // hue varies along the tile
    CHECK(differing(bg, stamp_backdoor(bg, BackdoorPattern::standard(BackdoorKind::circle))) == std::size_t(disk));
    CHECK_THROWS_AS(stamp_backdoor(RasterImage(10, 10, 3), BackdoorPattern::standard(BackdoorKind::box)),
                    InvalidArgument);
}

TEST_CASE("targets per scenario")
{
    Rng rng(1);
    const RasterImage s = sgtest::textured_image(rng, 96, 96, 3);
    const ScaleSpec spec{Algorithm::nearest, {96, 96}, {32, 32}};
    const RasterImage base = scale(s, spec);
    const RasterImage donor = random_image(rng, 32, 32, 3);

    AttackConfig cfg;
    CHECK(make_target(s, spec, cfg, &donor) == donor);
    CHECK_THROWS_AS(make_target(s, spec, cfg, nullptr), InvalidArgument);
    const RasterImage wrong(16, 16, 3);
    CHECK_THROWS_AS(make_target(s, spec, cfg, &wrong), DimensionMismatch);

    cfg.scenario = Scenario::overlay;
    cfg.alpha = 0.0;
    CHECK(make_target(s, spec, cfg, &donor) == base);
    cfg.alpha = 0.3;
    const RasterImage blend = make_target(s, spec, cfg, &donor);
    CHECK(blend.at(5, 7, 1) == quantize(0.3 * donor.at(5, 7, 1) + 0.7 * base.at(5, 7, 1)));

    cfg.scenario = Scenario::local;
    const RasterImage flat(96, 96, 3, 128);
    CHECK(differing(make_target(flat, spec, cfg), scale(flat, spec)) == 225u);
}

TEST_CASE("config validation")
{
    AttackConfig cfg;
    cfg.epsilon = -1;
    CHECK_THROWS_AS(validate_config(cfg), InvalidArgument);
    cfg.epsilon = 1;
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(validate_config(cfg), InvalidArgument);
    CHECK(parse_scenario("overlay") == Scenario::overlay);
    CHECK_THROWS_AS(parse_backdoor("star"), InvalidArgument);
}

TEST_CASE("feasible target leaves the source alone")
{
    Rng rng(2);
    const RasterImage s = random_image(rng, 32, 32, 3);
    for (Algorithm alg : {Algorithm::nearest, Algorithm::bilinear, Algorithm::bicubic}) {
        const ScaleSpec spec{alg, {32, 32}, {8, 8}};
        const AttackRecord rec = craft_attack(s, scale(s, spec), spec, AttackConfig{});
        CHECK(rec.attack == s);
        CHECK(rec.success.both());
        CHECK(std::isinf(rec.goal_o2_db));
    }
}

TEST_CASE("nearest attacks hit the target exactly and only touch the mask")
{
    Rng rng(3);
    const ScaleSpec spec{Algorithm::nearest, {50, 45}, {12, 15}};
    const RasterImage s = random_image(rng, 50, 45, 3);
    const RasterImage t = random_image(rng, 12, 15, 3);
    const AttackRecord rec = craft_attack(s, t, spec, AttackConfig{});
    CHECK(scale(rec.attack, spec) == t);
    CHECK(rec.linf_to_target == 0);
    CHECK(rec.success.o1);
    const PixelMask mask = scaling_pixel_mask(spec);
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 45; ++j) {
            if (!mask(i, j)) {
                for (int c = 0; c < 3; ++c) {
                    REQUIRE(rec.attack.at(i, j, c) == s.at(i, j, c));
                }
            }
        }
    }

    // Undoing any single changed pixel breaks the first goal.
    int checked = 0;
    for (int i = 0; i < 50 && checked < 20; ++i) {
        for (int j = 0; j < 45 && checked < 20; ++j) {
            if (std::abs(int(rec.attack.at(i, j, 0)) - int(s.at(i, j, 0))) <= 1) {
                continue;
            }
            AttackRecord undone = rec;
            undone.attack.at(i, j, 0) = s.at(i, j, 0);
            CHECK_FALSE(validate_attack(undone, spec, AttackConfig{}).o1);
            ++checked;
        }
    }
    CHECK(checked == 20);
}

TEST_CASE("bilinear attack beats naive upscaling")
{
    Rng rng(4);
    const ScaleSpec spec{Algorithm::bilinear, {32, 32}, {8, 8}};
    const RasterImage s = random_image(rng, 32, 32, 1);
    const RasterImage t = random_image(rng, 8, 8, 1);
    const AttackRecord rec = craft_attack(s, t, spec, AttackConfig{});
    CHECK(max_abs_diff(scale(rec.attack, spec), t) <= 1);
    CHECK(rec.success.o1);
    const RasterImage naive = resize(t, Algorithm::bilinear, {32, 32});
    CHECK(psnr(rec.attack, s) > psnr(naive, s));
}

TEST_CASE("bicubic attacks on textured images")
{
    Rng rng(5);
    for (auto [src, dst] : {std::pair{64, 16}, {60, 20}, {75, 30}}) {
        const ScaleSpec spec{Algorithm::bicubic, {src, src}, {dst, dst}};
        const RasterImage s = sgtest::textured_image(rng, src, src, 3);
        const RasterImage t = scale(sgtest::textured_image(rng, src, src, 3), spec);
        const AttackRecord rec = craft_attack(s, t, spec, AttackConfig{});
        CAPTURE(src);
        CHECK(rec.linf_to_target <= 2);
        CHECK(rec.solver_converged);
    }
}

TEST_CASE("validation of a zero perturbation")
{
    Rng rng(6);
    const ScaleSpec spec{Algorithm::bilinear, {24, 24}, {8, 8}};
    AttackRecord rec;
    rec.source = random_image(rng, 24, 24, 1);
    rec.attack = rec.source;
    rec.target = scale(rec.source, spec);
    rec.target.at(0, 0) = static_cast<std::uint8_t>(rec.target.at(0, 0) < 128 ? rec.target.at(0, 0) + 1 : rec.target.at(0, 0) - 1);
    AttackConfig cfg;
    SuccessFlags f = validate_attack(rec, spec, cfg);
    CHECK(f.o1);
    CHECK(f.o2);
    cfg.epsilon = 0.0;
    f = validate_attack(rec, spec, cfg);
    CHECK_FALSE(f.o1);
    CHECK(std::isinf(rec.goal_o2_db));
}

TEST_CASE("records round trip through disk")
{
    Rng rng(7);
    const ScaleSpec spec{Algorithm::nearest, {30, 30}, {10, 10}};
    const RasterImage s = random_image(rng, 30, 30, 3);
    const RasterImage t = random_image(rng, 10, 10, 3);
    AttackConfig cfg;
    cfg.scenario = Scenario::local;
    cfg.backdoor = BackdoorPattern::standard(BackdoorKind::circle);
    const AttackRecord rec = craft_attack(s, t, spec, cfg);
    const auto dir = std::filesystem::temp_directory_path() / "sg_record_test";
    std::filesystem::remove_all(dir);
    save_attack_record(dir, rec, spec, cfg);
    const LoadedAttackRecord back = load_attack_record(dir);
    CHECK(back.record.attack == rec.attack);
    CHECK(back.record.target == t);
    CHECK(back.spec == spec);
    CHECK(back.config.scenario == Scenario::local);
    CHECK(back.config.backdoor.kind == BackdoorKind::circle);
    CHECK(back.record.success.both() == rec.success.both());
    std::filesystem::remove_all(dir);
}
