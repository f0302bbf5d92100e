#pragma once

#include "scaleguard/attack.hpp"
#include "scaleguard/freq_detect.hpp"
#include "scaleguard/scaling.hpp"

#include <filesystem>

#include "json.hpp"

namespace scaleguard {

using Json = nlohmann::json;

/// Non-finite values serialize as the strings "inf", "-inf" and "nan".
Json real_to_json(double v);
double real_from_json(const Json& j);

Json to_json(const ScaleSpec& spec);
ScaleSpec scale_spec_from_json(const Json& j);

Json to_json(const AttackConfig& cfg);
AttackConfig attack_config_from_json(const Json& j);

Json to_json(const BackdoorPattern& p);
BackdoorPattern backdoor_from_json(const Json& j);

Json to_json(const PeakMap& map);

Json read_json(const std::filesystem::path& path);

/// Pretty-printed with a trailing newline; the write goes through a
/// temporary file and a rename.
void write_json(const std::filesystem::path& path, const Json& j);

/// PNG through write_text_if_changed.
void write_png_if_changed(const std::filesystem::path& path, const RasterImage& img);

/// Writes text only when the file is missing or differs.
void write_text_if_changed(const std::filesystem::path& path, const std::string& text);

} // namespace scaleguard
