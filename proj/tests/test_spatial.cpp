#include "doctest.h"

#include "reference.hpp"

#include "scaleguard/attack.hpp"
#include "scaleguard/detectors.hpp"
#include "scaleguard/errors.hpp"
#include "scaleguard/freq_detect.hpp"
#include "scaleguard/metrics.hpp"
#include "scaleguard/spatial_detect.hpp"

#include <algorithm>
#include <cmath>

using namespace scaleguard;

namespace {

RasterImage gradient(int rows, int cols)
{
    RasterImage img(rows, cols, 3);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            for (int c = 0; c < 3; ++c) {
                img.at(i, j, c) = quantize(60.0 + 100.0 * i / rows + 40.0 * j / cols + 10 * c);
            }
        }
    }
    return img;
}

} // namespace

TEST_CASE("patch grids are flush and cover the image")
{
    const PatchGrid g = make_patch_grid({10, 10}, 2, 3);
    CHECK(g.patches.size() == 9u);
    std::vector<int> hits(100, 0);
    for (const Rect& r : g.patches) {
        CHECK(r.top >= 0);
        CHECK(r.bottom <= 10);
        CHECK(r.height() == 4);
        CHECK(r.width() == 4);
        for (int i = r.top; i < r.bottom; ++i) {
            for (int j = r.left; j < r.right; ++j) {
                ++hits[i * 10 + j];
            }
        }
    }
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h > 0; }));
    CHECK(make_patch_grid({8, 8}, 4, 11).patches.size() == 1u);
    CHECK_THROWS_AS(make_patch_grid({7, 20}, 4, 4), InvalidArgument);
}

TEST_CASE("patch grid coverage holds whenever the stride is at most the side")
{
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        const int half = rng.between(1, 6);
        const int stride = rng.between(1, 2 * half);
        const Size2 size{rng.between(2 * half, 40), rng.between(2 * half, 40)};
        const PatchGrid g = make_patch_grid(size, half, stride);
        std::vector<char> hit(static_cast<std::size_t>(size.rows * size.cols), 0);
        for (const Rect& r : g.patches) {
            for (int i = r.top; i < r.bottom; ++i) {
                for (int j = r.left; j < r.right; ++j) {
                    hit[static_cast<std::size_t>(i * size.cols + j)] = 1;
                }
            }
        }
        CHECK(std::count(hit.begin(), hit.end(), 0) == 0);
    }
}

TEST_CASE("down and up")
{
    const ScaleSpec spec{Algorithm::bilinear, {48, 48}, {16, 16}};
    CHECK(std::isinf(down_up_score(RasterImage(48, 48, 3, 70), spec, Metric::psnr)));
    CHECK_THROWS_AS(down_up_score(RasterImage(40, 48, 3), spec, Metric::psnr), DimensionMismatch);

    Rng rng(2);
    std::vector<std::pair<double, double>> pairs;
    for (int t = 0; t < 8; ++t) {
        const RasterImage img = sgtest::textured_image(rng, 48, 48, 3);
        pairs.emplace_back(down_up_score(img, spec, Metric::mse), down_up_score(img, spec, Metric::psnr));
    }
    for (const auto& a : pairs) {
        for (const auto& b : pairs) {
            if (a.first < b.first) {
                CHECK(a.second > b.second);
            }
        }
    }
}

TEST_CASE("min and max filters")
{
    CHECK(minmax_filter_score(RasterImage(9, 9, 3, 30), RankMode::max, Metric::mse) == 0.0);
    CHECK(minmax_filter_score(RasterImage(9, 9, 3, 30), RankMode::min, Metric::ssim) == doctest::Approx(1.0));
    RasterImage board(8, 8, 1);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            board.at(i, j) = (i + j) % 2 ? 255 : 0;
        }
    }
    CHECK(minmax_filter_score(board, RankMode::min, Metric::mse) == doctest::Approx(255.0 * 255.0 / 2.0));
}

TEST_CASE("clean filter")
{
    const ScaleSpec spec{Algorithm::nearest, {96, 96}, {32, 32}};
    const RasterImage smooth = gradient(96, 96);
    CHECK(clean_filter_score(smooth, spec, PreventionKind::median, Metric::psnr) > 40.0);
    CHECK_THROWS_AS(
        clean_filter_score(smooth, {Algorithm::nearest, {96, 96}, {96, 96}}, PreventionKind::median, Metric::psnr),
        DegenerateSpec);

    Rng rng(3);
    const RasterImage target = scale(sgtest::textured_image(rng, 96, 96, 3), spec);
    const AttackRecord rec = craft_attack(smooth, target, spec, AttackConfig{});
    CHECK(clean_filter_score(rec.attack, spec, PreventionKind::median, Metric::psnr)
          < clean_filter_score(smooth, spec, PreventionKind::median, Metric::psnr) - 10.0);
    CHECK(clean_filter_score(smooth, spec, PreventionKind::random, Metric::ssim, 4)
          == clean_filter_score(smooth, spec, PreventionKind::random, Metric::ssim, 4));
}

TEST_CASE("gap statistics")
{
    CHECK(mean_min_gap(std::vector<double>{10, 40, 40, 40, 40}) == doctest::Approx(24.0));
    CHECK(max_mean_gap(std::vector<double>{0, 0, 0, 10}) == doctest::Approx(7.5));
    CHECK(mean_min_gap(std::vector<double>(6, kPatchPsnrCap)) == 0.0);
}

TEST_CASE("quantiles interpolate linearly")
{
    const std::vector<double> v{4, 1, 3, 2};
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile(v, 0.6) == doctest::Approx(2.8));
    double last = -1.0;
    for (double q = 0.0; q <= 1.0; q += 0.05) {
        CHECK(quantile(v, q) >= last);
        last = quantile(v, q);
    }
    CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(quantile(v, 1.5), InvalidArgument);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(std::isinf(quantile(std::vector<double>{inf, inf, inf}, 0.5)));
}

TEST_CASE("patch clean on identical copies")
{
    const ScaleSpec spec{Algorithm::nearest, {224, 224}, {112, 112}};
    const RasterImage flat(224, 224, 3, 100);
    PatchDiagnostics diag;
    CHECK(patch_clean_score(flat, spec, 22, 11, &diag) == 0.0);
    CHECK(std::all_of(diag.values.begin(), diag.values.end(), [](double v) { return v == kPatchPsnrCap; }));
    CHECK(targeted_patch_clean_score(flat, spec) == 0.0);
    CHECK_THROWS_AS(patch_clean_score(RasterImage(64, 64, 3), {Algorithm::nearest, {64, 64}, {32, 32}}),
                    InvalidArgument);
}

TEST_CASE("patch detectors react to a local backdoor")
{
    Rng rng(4);
    const ScaleSpec spec{Algorithm::nearest, {336, 336}, {112, 112}};
    AttackConfig cfg;
    cfg.scenario = Scenario::local;
    for (int t = 0; t < 3; ++t) {
        const RasterImage s = sgtest::textured_image(rng, 336, 336, 3);
        const AttackRecord rec = craft_attack(s, make_target(s, spec, cfg), spec, cfg);
        CHECK(patch_clean_score(rec.attack, spec) > patch_clean_score(s, spec) + 5.0);
        CHECK(targeted_patch_clean_score(rec.attack, spec) > targeted_patch_clean_score(s, spec) + 5.0);
    }
}

TEST_CASE("detector catalog")
{
    for (const DetectorInfo& d : detector_catalog()) {
        CAPTURE(d.id);
        CHECK(std::find(d.grid.begin(), d.grid.end(), d.defaults) != d.grid.end());
        CHECK(&detector_info(d.id) == &d);
    }
    CHECK(detector_info("peak_spectrum").grid.size() == 5u);
    CHECK(detector_info("peak_spectrum").defaults.at("w") == 5.0);
    CHECK(detector_info("patch_clean").defaults.at("w") == 22.0);
    CHECK(detector_info("targeted_patch_clean").defaults.at("q") == doctest::Approx(0.6));
    CHECK(detector_info("csp").fixed_threshold.has_value());
    CHECK(detector_info("down_up_psnr").direction == Direction::low_is_attack);
    CHECK(detector_info("down_up_mse").direction == Direction::high_is_attack);
    CHECK(detector_info("peak_distance").direction == Direction::low_is_attack);
    CHECK_THROWS_AS(detector_info("nope"), InvalidArgument);
}

TEST_CASE("detector applicability")
{
    const DetectorInfo& clean = detector_info("clean_median_psnr");
    const DetectorInfo& peaks = detector_info("peak_spectrum");
    CHECK(detector_applicable(clean, {Algorithm::nearest, {224, 224}, {112, 112}}));
    CHECK_FALSE(detector_applicable(clean, {Algorithm::bilinear, {224, 224}, {112, 112}}));
    CHECK(detector_applicable(clean, {Algorithm::bilinear, {448, 448}, {112, 112}}));
    CHECK_FALSE(detector_applicable(peaks, {Algorithm::nearest, {112, 112}, {112, 112}}));
}

TEST_CASE("dispatch matches the direct scores")
{
    Rng rng(5);
    const ScaleSpec spec{Algorithm::nearest, {224, 224}, {112, 112}};
    const RasterImage img = sgtest::textured_image(rng, 224, 224, 3);
    ImageAnalysis a(img, spec);
    CHECK(detector_score(detector_info("peak_spectrum"), a, {{"w", 3}}) == peak_spectrum_score(img, spec, 3));
    CHECK(detector_score(detector_info("peak_distance"), a, {}) == peak_distance_score(img, spec));
    CHECK(detector_score(detector_info("down_up_ssim"), a, {}) == down_up_score(img, spec, Metric::ssim));
    CHECK(detector_score(detector_info("clean_median_psnr"), a, {})
          == clean_filter_score(img, spec, PreventionKind::median, Metric::psnr));
    CHECK(detector_score(detector_info("clean_random_ssim"), a, {}, 7)
          == clean_filter_score(img, spec, PreventionKind::random, Metric::ssim, 7));
    CHECK(detector_score(detector_info("patch_clean"), a, {{"w", 16}, {"stride", 8}})
          == patch_clean_score(img, spec, 16, 8));
    CHECK(detector_score(detector_info("targeted_patch_clean"), a, {{"w", 11}, {"stride", 11}, {"q", 0.9}})
          == targeted_patch_clean_score(img, spec, 11, 11, 0.9));
    CHECK(detector_score(detector_info("min_filter_mse"), a, {}) == minmax_filter_score(img, RankMode::min, Metric::mse));
    CHECK(detector_score(detector_info("csp"), a, detector_info("csp").defaults) == csp_peak_count(img));
    const Params back = params_from_json(to_json(Params{{"w", 3}, {"q", 0.5}}));
    CHECK(back.at("q") == 0.5);
}
