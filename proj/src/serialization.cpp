#include "scaleguard/serialization.hpp"

#include "scaleguard/codec.hpp"
#include "scaleguard/errors.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace scaleguard {

namespace fs = std::filesystem;

Json real_to_json(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return v;
}

double real_from_json(const Json& j)
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (s == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
        if (s == "nan") {
            return std::numeric_limits<double>::quiet_NaN();
        }
        throw InvalidArgument("expected a number, got '" + s + "'");
    }
    return j.get<double>();
}

Json to_json(const ScaleSpec& spec)
{
    return {{"algorithm", std::string(to_string(spec.algorithm))},
            {"src", {spec.src.rows, spec.src.cols}},
            {"dst", {spec.dst.rows, spec.dst.cols}}};
}

ScaleSpec scale_spec_from_json(const Json& j)
{
    ScaleSpec spec;
    spec.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    spec.src = {j.at("src").at(0).get<int>(), j.at("src").at(1).get<int>()};
    spec.dst = {j.at("dst").at(0).get<int>(), j.at("dst").at(1).get<int>()};
    return spec;
}

Json to_json(const PeakMap& map)
{
    auto rect = [](const Rect& r) { return Json{r.top, r.left, r.bottom, r.right}; };
    Json peaks = Json::array();
    for (const ExpectedPeak& p : map.peaks) {
        peaks.push_back({{"k", {p.k1, p.k2}}, {"at", {p.row, p.col}}, {"excerpt", rect(p.excerpt)}});
    }
    return {{"spectrum", {map.spectrum.rows, map.spectrum.cols}},
            {"cell", {map.cell.rows, map.cell.cols}},
            {"window_half", map.window_half},
            {"centre", {map.centre.row, map.centre.col}},
            {"peaks", peaks}};
}

Json to_json(const BackdoorPattern& p)
{
    return {{"kind", std::string(to_string(p.kind))},
            {"anchor", std::string(to_string(p.anchor))},
            {"extent", p.extent}};
}

BackdoorPattern backdoor_from_json(const Json& j)
{
    if (j.is_string()) {
        return BackdoorPattern::standard(parse_backdoor(j.get<std::string>()));
    }
    BackdoorPattern p = BackdoorPattern::standard(parse_backdoor(j.at("kind").get<std::string>()));
    if (j.contains("anchor")) {
        p.anchor = parse_corner(j.at("anchor").get<std::string>());
    }
    if (j.contains("extent")) {
        p.extent = j.at("extent").get<int>();
    }
    return p;
}

Json to_json(const AttackConfig& cfg)
{
    return {{"epsilon", cfg.epsilon},
            {"scenario", std::string(to_string(cfg.scenario))},
            {"alpha", cfg.alpha},
            {"backdoor", to_json(cfg.backdoor)},
            {"o2_gate_db", cfg.o2_gate_db}};
}

AttackConfig attack_config_from_json(const Json& j)
{
    AttackConfig cfg;
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    if (j.contains("scenario")) {
        cfg.scenario = parse_scenario(j.at("scenario").get<std::string>());
    }
    cfg.alpha = j.value("alpha", cfg.alpha);
    if (j.contains("backdoor")) {
        cfg.backdoor = backdoor_from_json(j.at("backdoor"));
    }
    cfg.o2_gate_db = j.value("o2_gate_db", cfg.o2_gate_db);
    validate_config(cfg);
    return cfg;
}

Json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
}

void write_text_if_changed(const fs::path& path, const std::string& text)
{
    {
        std::ifstream in(path, std::ios::binary);
        if (in) {
            std::ostringstream existing;
            existing << in.rdbuf();
            if (existing.str() == text) {
                return;
            }
        }
    }
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + tmp.string());
        }
        out << text;
        if (!out) {
            throw IoError("short write to " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

void write_json(const fs::path& path, const Json& j)
{
    write_text_if_changed(path, j.dump(2) + "\n");
}

void write_png_if_changed(const fs::path& path, const RasterImage& img)
{
    const std::vector<std::uint8_t> bytes = encode_png(img);
    write_text_if_changed(path, std::string(bytes.begin(), bytes.end()));
}

} // namespace scaleguard
