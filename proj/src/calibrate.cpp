#include "scaleguard/calibrate.hpp"

#include "scaleguard/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace scaleguard {

std::string_view to_string(Direction d)
{
    return d == Direction::high_is_attack ? "high_is_attack" : "low_is_attack";
}

Direction parse_direction(std::string_view name)
{
    if (name == "high_is_attack") {
        return Direction::high_is_attack;
    }
    if (name == "low_is_attack") {
        return Direction::low_is_attack;
    }
    throw InvalidArgument("unknown direction '" + std::string(name) + "'");
}

double calibrate_threshold(std::span<const double> benign, Direction direction, double target_fpr)
{
    if (benign.size() < kMinCalibrationScores) {
        throw InvalidArgument("calibration needs at least " + std::to_string(kMinCalibrationScores)
                              + " benign scores, got " + std::to_string(benign.size()));
    }
    if (!(target_fpr >= 0.0 && target_fpr < 1.0)) {
        throw InvalidArgument("target FPR must lie in [0, 1)");
    }
    std::vector<double> sorted(benign.begin(), benign.end());
    if (std::any_of(sorted.begin(), sorted.end(), [](double x) { return std::isnan(x); })) {
        throw InvalidArgument("calibration scores contain NaN");
    }
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const auto k = std::min(n, static_cast<std::size_t>(std::floor((1.0 - target_fpr) * n + 1e-9)) + 1);
    double t = direction == Direction::high_is_attack ? sorted[k - 1] : sorted[n - k];
    constexpr double big = std::numeric_limits<double>::max();
    return std::clamp(t, -big, big);
}

double Confusion::accuracy() const
{
    return total() == 0 ? 0.0 : 100.0 * static_cast<double>(tp + tn) / static_cast<double>(total());
}

double Confusion::tpr() const
{
    return tp + fn == 0 ? 0.0 : 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double Confusion::fpr() const
{
    return fp + tn == 0 ? 0.0 : 100.0 * static_cast<double>(fp) / static_cast<double>(fp + tn);
}

Confusion tally(std::span<const bool> verdicts, std::span<const bool> labels)
{
    if (verdicts.size() != labels.size()) {
        throw DimensionMismatch("verdict and label counts differ");
    }
    Confusion c;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (labels[i]) {
            (verdicts[i] ? c.tp : c.fn) += 1;
        } else {
            (verdicts[i] ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

std::string_view to_string(VoteStrategy s)
{
    return s == VoteStrategy::majority ? "majority" : "one_winner_takes_all";
}

bool ensemble_vote(std::span<const bool> verdicts, VoteStrategy strategy)
{
    if (verdicts.empty()) {
        throw InvalidArgument("ensemble vote needs at least one verdict");
    }
    const auto flags = static_cast<std::size_t>(std::count(verdicts.begin(), verdicts.end(), true));
    return strategy == VoteStrategy::majority ? 2 * flags > verdicts.size() : flags > 0;
}

void require_disjoint(std::span<const ScoredSample> a, std::span<const ScoredSample> b, std::string_view what)
{
    std::unordered_set<std::string> ids;
    for (const auto& s : a) {
        ids.insert(s.id);
    }
    for (const auto& s : b) {
        if (ids.contains(s.id)) {
            throw InvalidArgument("split leakage in " + std::string(what) + ": record '" + s.id
                                  + "' appears in both splits");
        }
    }
}

std::vector<double> benign_scores(std::span<const ScoredSample> samples)
{
    std::vector<double> out;
    for (const auto& s : samples) {
        if (!s.attack) {
            out.push_back(s.score);
        }
    }
    return out;
}

Confusion evaluate_threshold(std::span<const ScoredSample> samples, double threshold, Direction direction)
{
    Confusion c;
    for (const auto& s : samples) {
        const bool flag = flags_attack(s.score, threshold, direction);
        if (s.attack) {
            (flag ? c.tp : c.fn) += 1;
        } else {
            (flag ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

CalibratedPoint grid_search(const std::vector<std::vector<ScoredSample>>& calibration,
                            const std::vector<std::vector<ScoredSample>>& validation, Direction direction,
                            double target_fpr)
{
    if (calibration.empty() || calibration.size() != validation.size()) {
        throw InvalidArgument("grid search needs one calibration and one validation table per grid point");
    }
    CalibratedPoint best;
    bool have = false;
    for (std::size_t i = 0; i < calibration.size(); ++i) {
        if (validation[i].empty()) {
            throw InvalidArgument("empty validation split");
        }
        require_disjoint(calibration[i], validation[i], "grid search");
        const double t = calibrate_threshold(benign_scores(calibration[i]), direction, target_fpr);
        const Confusion c = evaluate_threshold(validation[i], t, direction);
        if (!have || c.accuracy() > best.validation.accuracy()
            || (c.accuracy() == best.validation.accuracy() && c.fpr() < best.validation.fpr())) {
            best = {i, t, c};
            have = true;
        }
    }
    return best;
}

} // namespace scaleguard
