#include "worldforge/dataset_io.hpp"

#include "worldforge/error.hpp"
#include "worldforge/png_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace worldforge {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "binary writers assume a little-endian host");

std::string read_file_bytes(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const fs::path& path, const std::string& bytes)
{
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

namespace {

template <typename T>
void put(std::string& s, T v)
{
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  s.append(b, sizeof(T));
}

template <typename T>
T get(const std::string& s, std::size_t offset)
{
  T v;
  std::memcpy(&v, s.data() + offset, sizeof(T));
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// .flo

std::string encode_flo(const FlowMap& flow)
{
  if (flow.channels != 2) throw Error(ErrorCode::InvalidArgument, "flow maps have two channels");
  std::string s;
  s.reserve(12 + flow.data.size() * 4);
  put(s, kFloMagic);
  put(s, static_cast<std::int32_t>(flow.width));
  put(s, static_cast<std::int32_t>(flow.height));
  for (float v : flow.data) put(s, v);
  return s;
}

FlowMap decode_flo(const std::string& bytes, const std::string& source)
{
  if (bytes.size() < 12) throw Error(ErrorCode::TruncatedFile, source + ": missing .flo header");
  if (get<float>(bytes, 0) != kFloMagic) throw Error(ErrorCode::BadMagic, source + ": not a .flo file");
  const auto w = get<std::int32_t>(bytes, 4), h = get<std::int32_t>(bytes, 8);
  if (w < 0 || h < 0) throw Error(ErrorCode::BadHeader, source + ": negative dimensions");
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 2;
  if (bytes.size() < 12 + n * 4) throw Error(ErrorCode::TruncatedFile, source + ": payload shorter than " + std::to_string(w) + "x" + std::to_string(h));
  FlowMap f(w, h, 2);
  std::memcpy(f.data.data(), bytes.data() + 12, n * 4);
  return f;
}

void write_flo(const fs::path& path, const FlowMap& flow) { write_file_bytes(path, encode_flo(flow)); }
FlowMap read_flo(const fs::path& path) { return decode_flo(read_file_bytes(path), path.string()); }

// ---------------------------------------------------------------------------------------------
// PFM

std::string encode_pfm(const Raster<float>& map)
{
  if (map.channels != 1 && map.channels != 3) throw Error(ErrorCode::InvalidArgument, "PFM stores 1 or 3 channels");
  std::string s = map.channels == 1 ? "Pf\n" : "PF\n";
  s += std::to_string(map.width) + " " + std::to_string(map.height) + "\n-1.0\n";
  const std::size_t row = static_cast<std::size_t>(map.width) * map.channels;
  for (int y = map.height - 1; y >= 0; --y)
    s.append(reinterpret_cast<const char*>(map.data.data() + y * row), row * sizeof(float));
  return s;
}

Raster<float> decode_pfm(const std::string& bytes, const std::string& source)
{
  // Three whitespace-terminated header tokens after the magic line.
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos >= bytes.size()) throw Error(ErrorCode::BadHeader, source + ": truncated PFM header");
    return bytes.substr(start, pos - start);
  };
  const std::string magic = token();
  int channels;
  if (magic == "Pf")
    channels = 1;
  else if (magic == "PF")
    channels = 3;
  else
    throw Error(ErrorCode::BadHeader, source + ": not a PFM file");
  int w, h;
  double scale;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    scale = std::stod(token());
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::BadHeader, source + ": malformed PFM header");
  }
  ++pos;  // single whitespace byte before the payload
  if (w < 0 || h < 0 || scale == 0.0) throw Error(ErrorCode::BadHeader, source + ": invalid PFM dimensions or scale");
  const bool little = scale < 0.0;
  const std::size_t row = static_cast<std::size_t>(w) * channels;
  if (bytes.size() < pos + row * h * 4) throw Error(ErrorCode::TruncatedFile, source + ": PFM payload too short");
  Raster<float> map(w, h, channels);
  for (int y = 0; y < h; ++y) {
    const char* src = bytes.data() + pos + static_cast<std::size_t>(h - 1 - y) * row * 4;
    std::memcpy(map.data.data() + y * row, src, row * 4);
  }
  if (!little)
    for (float& v : map.data) v = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(v)));
  return map;
}

void write_pfm(const fs::path& path, const Raster<float>& map) { write_file_bytes(path, encode_pfm(map)); }
Raster<float> read_pfm(const fs::path& path) { return decode_pfm(read_file_bytes(path), path.string()); }

Raster<std::uint16_t> instance_to_u16(const InstanceMap& map)
{
  Raster<std::uint16_t> out(map.width, map.height, map.channels);
  for (std::size_t i = 0; i < map.data.size(); ++i) {
    if (map.data[i] > 65535) throw Error(ErrorCode::Validation, "instance id " + std::to_string(map.data[i]) + " exceeds 16 bits");
    out.data[i] = static_cast<std::uint16_t>(map.data[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Metadata

json frame_meta_to_json(const FrameMeta& m)
{
  json j;
  j["schema"] = kMetaSchema;
  j["frame_number"] = m.frame_number;
  j["time"] = m.time;
  j["camera_id"] = m.camera_id;
  j["K"] = json::array();
  for (int r = 0; r < 3; ++r) j["K"].push_back({m.K(r, 0), m.K(r, 1), m.K(r, 2)});
  j["distortion"] = {m.distortion[0], m.distortion[1], m.distortion[2]};
  j["world_from_camera"] = json::array();
  for (int r = 0; r < 4; ++r)
    j["world_from_camera"].push_back({m.world_from_camera(r, 0), m.world_from_camera(r, 1), m.world_from_camera(r, 2), m.world_from_camera(r, 3)});
  j["projection_model"] = to_string(m.projection_model);
  j["depth"] = m.projection_model == ProjectionModel::Pinhole ? "camera_z" : "range";
  j["normals"] = "camera_frame";
  j["stereo_baseline"] = m.stereo_baseline;
  j["lighting"] = to_string(m.lighting);
  j["weather"] = to_string(m.weather);
  j["seed"] = m.seed;
  if (m.events) j["events"] = {{"tau", m.events->tau}, {"sigma", m.events->noise_sigma}, {"t_start", m.events->t_start}, {"t_end", m.events->t_end}};
  return j;
}

FrameMeta frame_meta_from_json(const json& j)
{
  try {
    if (j.at("schema").get<std::string>() != kMetaSchema) throw Error(ErrorCode::Validation, "unsupported metadata schema");
    FrameMeta m;
    m.frame_number = j.at("frame_number").get<int>();
    m.time = j.at("time").get<double>();
    m.camera_id = j.at("camera_id").get<std::string>();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m.K(r, c) = j.at("K").at(r).at(c).get<double>();
    for (int k = 0; k < 3; ++k) m.distortion[k] = j.at("distortion").at(k).get<double>();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m.world_from_camera(r, c) = j.at("world_from_camera").at(r).at(c).get<double>();
    m.projection_model = projection_model_from_string(j.at("projection_model").get<std::string>());
    m.stereo_baseline = j.at("stereo_baseline").get<double>();
    m.lighting = lighting_from_string(j.at("lighting").get<std::string>());
    m.weather = weather_from_string(j.at("weather").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("events")) {
      EventFrame e;
      e.tau = j["events"].at("tau").get<double>();
      e.noise_sigma = j["events"].at("sigma").get<double>();
      e.t_start = j["events"].at("t_start").get<double>();
      e.t_end = j["events"].at("t_end").get<double>();
      m.events = e;
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("frame metadata: ") + e.what());
  }
}

// ---------------------------------------------------------------------------------------------
// Bundles

std::string frame_file_name(int index, const std::string& extension)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.", index);
  return buf + extension;
}

std::vector<fs::path> write_frame_bundle(const AnnotationFrame& frame, const fs::path& root, const std::string& scene_id)
{
  const fs::path dir = root / scene_id;
  const int index = frame.metadata.frame_number;
  std::vector<fs::path> written;
  auto target = [&](const char* pass, const char* ext) {
    const fs::path p = dir / pass / frame_file_name(index, ext);
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + p.parent_path().string() + ": " + ec.message());
    written.push_back(p);
    return p;
  };
  write_png(target("rgb", "png"), frame.rgb);
  write_pfm(target("depth", "pfm"), frame.depth);
  write_flo(target("flow", "flo"), frame.flow);
  write_pfm(target("normal", "pfm"), frame.normals);
  write_png_u16(target("seg_instance", "png"), instance_to_u16(frame.instance_seg));
  write_png_u16(target("seg_semantic", "png"), frame.semantic_seg);
  if (frame.event_frame) write_png_u8(target("events", "png"), encode_polarity(*frame.event_frame));
  if (frame.stereo_right_rgb) write_png(target("stereo", "png"), anaglyph(frame.rgb, *frame.stereo_right_rgb));
  write_file_bytes(target("meta", "json"), frame_meta_to_json(frame.metadata).dump(2) + "\n");
  return written;
}

// ---------------------------------------------------------------------------------------------
// EPE

EpeResult epe(const FlowMap& pred, const FlowMap& gt, const Raster<std::uint8_t>* mask)
{
  if (!pred.same_shape(gt) || pred.channels != 2 || gt.channels != 2)
    throw Error(ErrorCode::ResolutionMismatch, "flow maps differ in size (" + std::to_string(pred.width) + "x" +
                                                   std::to_string(pred.height) + " vs " + std::to_string(gt.width) +
                                                   "x" + std::to_string(gt.height) + ")");
  if (mask && (mask->width != gt.width || mask->height != gt.height))
    throw Error(ErrorCode::ResolutionMismatch, "EPE mask differs in size");
  EpeResult r;
  r.per_pixel = Raster<float>(gt.width, gt.height, 1, 0.0f);
  double sum = 0.0;
  for (int y = 0; y < gt.height; ++y)
    for (int x = 0; x < gt.width; ++x) {
      if (mask && mask->at(x, y) == 0) continue;
      const double du = double(pred.at(x, y, 0)) - gt.at(x, y, 0), dv = double(pred.at(x, y, 1)) - gt.at(x, y, 1);
      const double e = std::hypot(du, dv);
      r.per_pixel.at(x, y) = static_cast<float>(e);
      sum += e;
      ++r.counted;
    }
  r.mean = r.counted ? sum / static_cast<double>(r.counted) : 0.0;
  return r;
}

}  // namespace worldforge
