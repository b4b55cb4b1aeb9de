#pragma once

#include "worldforge/scene.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace worldforge::pipeline {

inline constexpr const char* kConfigSchema = "worldforge-config/1";
inline constexpr const char* kManifestSchema = "worldforge-manifest/1";

enum class Recipe { City, Pile, Fracture };

std::string to_string(Recipe r);
Recipe recipe_from_string(const std::string& s);

// A resolved job: the raw JSON (after --set overrides and defaults) plus the directory that
// relative paths resolve against.
struct JobConfig {
  nlohmann::json raw;
  std::filesystem::path base_dir;

  Recipe recipe() const;
  std::uint64_t seed() const;
  int scene_count() const;
  std::filesystem::path output_root() const;
  // Config for scene i: the global block with "scenes"."<i>" merge-patched over it.
  JobConfig for_scene(int index) const;
};

// "a.b.c=value"; the value is parsed as JSON when possible, otherwise taken as a string.
void apply_set(nlohmann::json& config, const std::string& assignment);

// Fills defaults for every field so the manifest records the exact configuration used.
nlohmann::json with_defaults(const nlohmann::json& config);

JobConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& sets = {});
JobConfig make_config(const nlohmann::json& config, const std::filesystem::path& base_dir);

// Throws Validation naming the offending field; checks referenced paths exist.
void validate_config(const JobConfig& config);

// 16 hex digits of FNV-1a over the canonical JSON dump.
std::string config_hash(const nlohmann::json& config);

std::uint64_t scene_seed(std::uint64_t seed, int index);
std::string scene_id(int index);

// Builds the (animated) scene for one index: city layout, simulated pile, or fracture shot.
Scene build_scene(const JobConfig& config, int index);

struct SceneResult {
  int index = 0;
  std::string id;
  std::uint64_t seed = 0;
  bool ok = false;
  bool skipped = false;  // already complete in a resumed manifest
  std::string error;
  int frames = 0;
  int files = 0;
};

struct GenerateOptions {
  bool resume = false;
  int workers = 0;  // 0: WORLDFORGE_THREADS or hardware concurrency
};

struct GenerateReport {
  std::vector<SceneResult> scenes;
  int succeeded() const;
  int failed() const;
};

// Renders and writes every scene, then the manifest. Scene failures are recorded, not thrown.
// Throws IoError when the output root or manifest cannot be written.
GenerateReport run_generate(const JobConfig& config, const GenerateOptions& options = {});

// Writes all frames of a built scene under root/scene_dir and returns the number of files.
int write_scene(const Scene& scene, const JobConfig& config, const std::filesystem::path& root, const std::string& scene_dir,
                std::uint64_t seed, int render_threads);

struct FrameEpe {
  int index = 0;
  double epe = 0.0;
};

struct EvalReport {
  std::vector<FrameEpe> frames;
  double mean = 0.0;  // over all pixels of all frames
  nlohmann::json to_json() const;
};

// Compares every ground-truth .flo (dir/flow/*.flo or dir/*.flo) with the prediction of the same
// index. MissingPair names the first absent index.
EvalReport run_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir);

}  // namespace worldforge::pipeline
