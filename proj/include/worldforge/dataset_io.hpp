#pragma once

#include "worldforge/image.hpp"
#include "worldforge/render.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace worldforge {

inline constexpr const char* kMetaSchema = "worldforge-meta/1";
inline constexpr float kFloMagic = 202021.25f;

// Middlebury .flo: float32 magic, int32 width, int32 height, interleaved (u, v) rows, little-endian.
void write_flo(const std::filesystem::path& path, const FlowMap& flow);
FlowMap read_flo(const std::filesystem::path& path);
std::string encode_flo(const FlowMap& flow);
FlowMap decode_flo(const std::string& bytes, const std::string& source = "<flo>");

// PFM with scale -1 (little-endian) and bottom-up rows; 1 channel ("Pf") or 3 ("PF").
void write_pfm(const std::filesystem::path& path, const Raster<float>& map);
Raster<float> read_pfm(const std::filesystem::path& path);
std::string encode_pfm(const Raster<float>& map);
Raster<float> decode_pfm(const std::string& bytes, const std::string& source = "<pfm>");

// 16-bit single-channel maps; Validation if an instance id exceeds 65535.
Raster<std::uint16_t> instance_to_u16(const InstanceMap& map);

nlohmann::json frame_meta_to_json(const FrameMeta& meta);
FrameMeta frame_meta_from_json(const nlohmann::json& j);

// Writes root/scene_id/<pass>/%06d.<ext> for every present pass and returns the paths written.
std::vector<std::filesystem::path> write_frame_bundle(const AnnotationFrame& frame, const std::filesystem::path& root,
                                                      const std::string& scene_id);

std::string frame_file_name(int index, const std::string& extension);

struct EpeResult {
  double mean = 0.0;
  Raster<float> per_pixel;  // EPE per pixel, 0 outside the mask
  std::size_t counted = 0;
};

// Mean Euclidean distance between flow vectors over the mask (default: all pixels).
EpeResult epe(const FlowMap& pred, const FlowMap& gt, const Raster<std::uint8_t>* valid_mask = nullptr);

// Whole-file helpers with IoError / FileNotFound context.
std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::string& bytes);

}  // namespace worldforge
