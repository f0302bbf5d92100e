#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scaleguard {

enum class Direction { high_is_attack, low_is_attack };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view name);

inline constexpr std::size_t kMinCalibrationScores = 20;

/// Order-statistic threshold with FPR on `benign` at most `target_fpr`
/// under strict-inequality flagging. For high_is_attack this is the k-th
/// smallest score with k = floor((1 - fpr) N) + 1, capped at N; the low side
/// mirrors it. Infinite order statistics are clamped to the largest finite
/// double. Throws InvalidArgument for fewer than 20 scores or NaN input.
double calibrate_threshold(std::span<const double> benign, Direction direction, double target_fpr = 0.01);

inline bool flags_attack(double score, double threshold, Direction direction)
{
    return direction == Direction::high_is_attack ? score > threshold : score < threshold;
}

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    double accuracy() const;  // percent
    double tpr() const;       // percent; 0 without positives
    double fpr() const;       // percent; 0 without negatives
    /// Balanced accuracy, percent.
    double balanced() const { return 0.5 * (tpr() + 100.0 - fpr()); }
};

/// Tallies verdicts against labels (true = attack).
Confusion tally(std::span<const bool> verdicts, std::span<const bool> labels);

enum class VoteStrategy { majority, one_winner_takes_all };

std::string_view to_string(VoteStrategy s);

/// Majority needs strictly more than half of the verdicts.
bool ensemble_vote(std::span<const bool> verdicts, VoteStrategy strategy);

/// One labelled score per image.
struct ScoredSample {
    std::string id;
    bool attack = false;
    double score = 0.0;
};

struct CalibratedPoint {
    std::size_t index = 0; // position in the candidate list
    double threshold = 0.0;
    Confusion validation;
};

/// Calibrates each candidate on the benign part of `calibration`, scores it
/// on `validation`, and keeps the highest accuracy; ties go to the lower
/// FPR, then to the earlier candidate. Throws InvalidArgument on an empty
/// grid, an empty split, or shared ids between the two splits.
CalibratedPoint grid_search(const std::vector<std::vector<ScoredSample>>& calibration,
                            const std::vector<std::vector<ScoredSample>>& validation, Direction direction,
                            double target_fpr = 0.01);

/// Throws InvalidArgument if any id appears in both lists.
void require_disjoint(std::span<const ScoredSample> a, std::span<const ScoredSample> b, std::string_view what);

std::vector<double> benign_scores(std::span<const ScoredSample> samples);

Confusion evaluate_threshold(std::span<const ScoredSample> samples, double threshold, Direction direction);

} // namespace scaleguard
