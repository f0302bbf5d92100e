#include "doctest.h"

#include "scaleguard/calibrate.hpp"
#include "scaleguard/errors.hpp"
#include "scaleguard/rng.hpp"

#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

using namespace scaleguard;

namespace {

std::vector<double> one_to(int n)
{
    std::vector<double> v(n);
    std::iota(v.begin(), v.end(), 1.0);
    return v;
}

std::vector<ScoredSample> labelled(const std::string& prefix, const std::vector<double>& benign,
                                   const std::vector<double>& attack)
{
    std::vector<ScoredSample> out;
    for (std::size_t i = 0; i < benign.size(); ++i) {
        out.push_back({prefix + "b" + std::to_string(i), false, benign[i]});
    }
    for (std::size_t i = 0; i < attack.size(); ++i) {
        out.push_back({prefix + "a" + std::to_string(i), true, attack[i]});
    }
    return out;
}

std::size_t flagged(const std::vector<double>& v, double thr, Direction d)
{
    std::size_t n = 0;
    for (double x : v) {
        n += flags_attack(x, thr, d) ? 1 : 0;
    }
    return n;
}

} // namespace

TEST_CASE("thresholds from order statistics")
{
    const auto v = one_to(100);
    // k = floor(0.99 * 100) + 1 = 100.
    CHECK(calibrate_threshold(v, Direction::high_is_attack, 0.01) == 100.0);
    CHECK(flagged(v, 100.0, Direction::high_is_attack) == 0u);
    CHECK(calibrate_threshold(v, Direction::low_is_attack, 0.01) == 1.0);
    // 5% of 100: k = 96, so scores 97..100 are flagged.
    CHECK(calibrate_threshold(v, Direction::high_is_attack, 0.05) == 96.0);
    CHECK(flagged(v, 96.0, Direction::high_is_attack) == 4u);
    CHECK(calibrate_threshold(v, Direction::high_is_attack, 0.0) == 100.0);
    CHECK(calibrate_threshold(v, Direction::low_is_attack, 0.0) == 1.0);
}

TEST_CASE("tied benign scores")
{
    const std::vector<double> same(40, 3.5);
    const double thr = calibrate_threshold(same, Direction::high_is_attack, 0.01);
    CHECK(thr == 3.5);
    CHECK(flagged(same, thr, Direction::high_is_attack) == 0u);
}

TEST_CASE("calibration input checks")
{
    CHECK_THROWS_AS(calibrate_threshold(one_to(19), Direction::high_is_attack), InvalidArgument);
    auto v = one_to(30);
    v[4] = std::nan("");
    CHECK_THROWS_AS(calibrate_threshold(v, Direction::high_is_attack), InvalidArgument);
    CHECK_THROWS_AS(calibrate_threshold(one_to(30), Direction::high_is_attack, 1.0), InvalidArgument);
}

TEST_CASE("infinite scores give finite thresholds")
{
    std::vector<double> v = one_to(30);
    v.back() = std::numeric_limits<double>::infinity();
    const double thr = calibrate_threshold(v, Direction::high_is_attack, 0.0);
    CHECK(std::isfinite(thr));
    CHECK(thr == DBL_MAX);
    CHECK_FALSE(flags_attack(std::numeric_limits<double>::infinity(), thr, Direction::low_is_attack));
}

TEST_CASE("confusion rates")
{
    Confusion c{8, 1, 9, 2};
    CHECK(c.total() == 20u);
    CHECK(c.accuracy() == doctest::Approx(85.0));
    CHECK(c.tpr() == doctest::Approx(80.0));
    CHECK(c.fpr() == doctest::Approx(10.0));
    CHECK(c.balanced() == doctest::Approx(85.0));
    CHECK(Confusion{}.tpr() == 0.0);
    const bool verdicts[] = {true, true, false, false};
    const bool labels[] = {true, false, false, true};
    const Confusion t = tally(verdicts, labels);
    CHECK(t.tp == 1u);
    CHECK(t.fp == 1u);
    CHECK(t.tn == 1u);
    CHECK(t.fn == 1u);
}

TEST_CASE("ensemble votes")
{
    const bool one[] = {true, false, false};
    CHECK_FALSE(ensemble_vote(one, VoteStrategy::majority));
    CHECK(ensemble_vote(one, VoteStrategy::one_winner_takes_all));
    const bool tie[] = {true, true, false, false};
    CHECK_FALSE(ensemble_vote(tie, VoteStrategy::majority));
    const bool most[] = {true, true, true, false};
    CHECK(ensemble_vote(most, VoteStrategy::majority));
    const bool none[] = {false, false};
    CHECK_FALSE(ensemble_vote(none, VoteStrategy::one_winner_takes_all));
}

TEST_CASE("evaluation on perfect, random and inverted scores")
{
    const auto perfect = labelled("", one_to(50), std::vector<double>(50, 1000.0));
    const Confusion p = evaluate_threshold(perfect, 50.0, Direction::high_is_attack);
    CHECK(p.accuracy() == 100.0);
    CHECK(p.fpr() == 0.0);

    Rng rng(1);
    std::vector<double> b(100);
    std::vector<double> a(100);
    for (double& x : b) {
        x = rng.uniform();
    }
    for (double& x : a) {
        x = rng.uniform();
    }
    const auto random = labelled("", b, a);
    const Confusion r = evaluate_threshold(random, calibrate_threshold(b, Direction::high_is_attack, 0.5),
                                           Direction::high_is_attack);
    CHECK(r.accuracy() > 40.0);
    CHECK(r.accuracy() < 60.0);

    auto inverted = random;
    for (auto& s : inverted) {
        s.attack = !s.attack;
    }
    const Confusion inv = evaluate_threshold(inverted, 0.5, Direction::high_is_attack);
    CHECK(inv.accuracy() == doctest::Approx(100.0 - evaluate_threshold(random, 0.5, Direction::high_is_attack).accuracy()));
}

TEST_CASE("grid search")
{
    const auto bad_cal = labelled("c", one_to(40), one_to(40));
    const auto bad_val = labelled("v", one_to(40), one_to(40));
    const auto good_cal = labelled("c", one_to(40), std::vector<double>(40, 99.0));
    const auto good_val = labelled("v", one_to(40), std::vector<double>(40, 99.0));

    const CalibratedPoint single = grid_search({bad_cal}, {bad_val}, Direction::high_is_attack);
    CHECK(single.index == 0u);
    const CalibratedPoint best = grid_search({bad_cal, good_cal, bad_cal}, {bad_val, good_val, bad_val},
                                             Direction::high_is_attack);
    CHECK(best.index == 1u);
    CHECK(best.validation.accuracy() == 100.0);
    CHECK(best.threshold == 40.0);

    // Equal accuracy: one flags everything correctly but with a false positive.
    auto fp_val = labelled("v", one_to(40), std::vector<double>(40, 99.0));
    fp_val[0].score = 1000.0; // benign above threshold
    fp_val[40].score = -1.0;  // attack missed
    const CalibratedPoint tie = grid_search({good_cal, good_cal}, {fp_val, good_val}, Direction::high_is_attack);
    CHECK(tie.index == 1u);

    CHECK_THROWS_AS(grid_search({}, {}, Direction::high_is_attack), InvalidArgument);
    CHECK_THROWS_AS(grid_search({good_cal}, {good_cal}, Direction::high_is_attack), InvalidArgument);
    CHECK_THROWS_AS(grid_search({good_cal}, {std::vector<ScoredSample>{}}, Direction::high_is_attack),
                    InvalidArgument);
}

TEST_CASE("split leakage and helpers")
{
    const auto a = labelled("x", one_to(3), {});
    const auto b = labelled("y", one_to(3), {});
    CHECK_NOTHROW(require_disjoint(a, b, "train/test"));
    CHECK_THROWS_AS(require_disjoint(a, a, "train/test"), InvalidArgument);
    CHECK(benign_scores(labelled("", {1, 2}, {5})).size() == 2u);
    CHECK(parse_direction("low_is_attack") == Direction::low_is_attack);
    CHECK_THROWS_AS(parse_direction("up"), InvalidArgument);
}
