#pragma once

#include "scaleguard/image.hpp"
#include "scaleguard/scaling.hpp"

#include <filesystem>
#include <optional>
#include <string_view>

namespace scaleguard {

enum class Scenario { global, local, overlay };
enum class BackdoorKind { box, circle, rainbow };
enum class Corner { lower_left, lower_right, upper_left, upper_right };

std::string_view to_string(Scenario s);
std::string_view to_string(BackdoorKind k);
std::string_view to_string(Corner c);
Scenario parse_scenario(std::string_view name);
BackdoorKind parse_backdoor(std::string_view name);
Corner parse_corner(std::string_view name);

/// Trigger stamped into the downscaled source for the local scenario.
struct BackdoorPattern {
    BackdoorKind kind = BackdoorKind::box;
    Corner anchor = Corner::lower_left;
    int extent = 15; // side of the bounding square in target pixels

    /// Box and rainbow: 15x15 in the lower-left corner.
    /// Circle: radius-10 disk (21x21 bounds) in the upper-right corner.
    static BackdoorPattern standard(BackdoorKind kind);
};

/// Pixels the pattern writes (225 for the standard box, 317 for the disk).
int pattern_pixel_count(const BackdoorPattern& pattern);

/// Returns `img` with the pattern drawn at its anchor.
/// Throws InvalidArgument if the pattern does not fit.
RasterImage stamp_backdoor(const RasterImage& img, const BackdoorPattern& pattern);

struct AttackConfig {
    double epsilon = 1.0;
    Scenario scenario = Scenario::global;
    double alpha = 0.3;
    BackdoorPattern backdoor;
    double o2_gate_db = 25.0;
};

void validate_config(const AttackConfig& cfg);

struct SuccessFlags {
    bool o1 = false;
    bool o2 = false;

    bool both() const { return o1 && o2; }
};

struct AttackRecord {
    RasterImage source;
    RasterImage target;
    RasterImage attack;
    double goal_o1_db = 0.0;       // PSNR(scale(A), T)
    double goal_o2_db = 0.0;       // PSNR(A, S)
    int linf_to_target = 0;        // ||scale(A) - T||_inf after quantization
    bool solver_converged = true;  // every stage subproblem reached feasibility
    int solver_iterations = 0;     // largest sweep count over all subproblems
    SuccessFlags success;
};

/// global: T = donor. local: scale(S) with the backdoor stamped.
/// overlay: alpha * donor + (1 - alpha) * scale(S), quantized.
RasterImage make_target(const RasterImage& source, const ScaleSpec& spec, const AttackConfig& cfg,
                        const RasterImage* donor = nullptr);

/// Solves min ||Delta||^2 s.t. ||scale(S + Delta) - T||_inf <= eps, A in [0, 255].
///
/// Separable: a column stage finds the m x n' intermediate whose row-mixing
/// hits T, then a row stage finds A whose column-mixing hits the
/// intermediate. Operators with single-tap rows (nearest, or any kernel at a
/// ratio that lands on sample centres) are solved by exact assignment.
AttackRecord craft_attack(const RasterImage& source, const RasterImage& target, const ScaleSpec& spec,
                          const AttackConfig& cfg);

/// Recomputes goal metrics and flags from the stored (quantized) images.
SuccessFlags validate_attack(AttackRecord& rec, const ScaleSpec& spec, const AttackConfig& cfg);

/// Record directory: S.png, T.png, A.png, meta.json.
void save_attack_record(const std::filesystem::path& dir, const AttackRecord& rec, const ScaleSpec& spec,
                        const AttackConfig& cfg);

struct LoadedAttackRecord {
    AttackRecord record;
    ScaleSpec spec;
    AttackConfig config;
};

LoadedAttackRecord load_attack_record(const std::filesystem::path& dir);

} // namespace scaleguard
