#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "arctext/detection.hpp"
#include "arctext/evaluation.hpp"
#include "arctext/inter.hpp"
#include "arctext/intra.hpp"

/// JSON file formats. Every file carries "schemaVersion": "1" and a "kind".
/// Reals are written in shortest round-trip form, so parse(write(x)) == x.
/// Malformed input raises ErrorCode::kParse.
namespace arctext::io {

inline constexpr std::string_view kSchemaVersion = "1";

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Row-major run lengths, starting with a (possibly empty) background run.
std::vector<std::uint64_t> rle_encode(const BitMask& mask);
BitMask rle_decode(int width, int height, const std::vector<std::uint64_t>& counts);

std::string write_detection_set(const DetectionSet& set);
/// Accepts detection files and weighted-label files (weights become scores).
DetectionSet read_detection_set(std::string_view text);

/// Weighted pseudo labels for training: per label the mask, its outer
/// polygons, the box and the loss weight.
std::string write_label_set(const LabelSet& labels);
LabelSet read_label_set(std::string_view text);

std::string write_ground_truth(const GroundTruthSet& gt);
GroundTruthSet read_ground_truth(std::string_view text);

std::string write_report(const EvalReport& report);
std::string format_report_table(const EvalReport& report);

using TensorMap = std::map<std::string, Tensor>;

/// FNV-1a 64 over names, shapes and IEEE-754 payloads, as 16 hex digits.
std::string checksum(const TensorMap& tensors);

std::string write_tensors(const TensorMap& tensors);
TensorMap read_tensors(std::string_view text);

nlohmann::json config_to_json(const intra::Config& config);
nlohmann::json config_to_json(const inter::Config& config);
/// Unknown keys or out-of-range values raise kInvalidConfig.
intra::Config intra_config_from_json(const nlohmann::json& j);
inter::Config inter_config_from_json(const nlohmann::json& j);

TensorMap module_tensors(const intra::Module& module);
TensorMap module_tensors(const inter::Module& module);
/// Missing or misshapen tensors raise kShapeMismatch.
intra::Module intra_module_from(const intra::Config& config, const TensorMap& tensors);
inter::Module inter_module_from(const inter::Config& config, const TensorMap& tensors);

std::string write_intra_module(const intra::Module& module);
std::string write_inter_module(const inter::Module& module);
intra::Module read_intra_module(std::string_view text);
inter::Module read_inter_module(std::string_view text);

/// "intra" or "inter" from a weights or config document.
std::string module_kind(std::string_view text);

}  // namespace arctext::io
