#include "worldforge/assets.hpp"

#include "worldforge/error.hpp"
#include "worldforge/png_io.hpp"
#include "worldforge/random.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <tuple>

namespace worldforge::assets {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_ws(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view strip_comment(std::string_view line)
{
  const auto hash = line.find('#');
  if (hash != std::string_view::npos) line = line.substr(0, hash);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::optional<double> to_double(std::string_view s)
{
  const std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long> to_long(std::string_view s)
{
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

[[noreturn]] void obj_error(std::string_view source, std::size_t line, const std::string& what)
{
  throw Error(ErrorCode::ObjParseError, std::string(source) + ":" + std::to_string(line) + ": " + what);
}

[[noreturn]] void mtl_error(std::string_view source, std::size_t line, const std::string& what)
{
  throw Error(ErrorCode::MtlParseError, std::string(source) + ":" + std::to_string(line) + ": " + what);
}

// Resolves a 1-based or negative OBJ index into [0, count).
long resolve_index(long idx, std::size_t count, std::string_view source, std::size_t line)
{
  const long n = static_cast<long>(count);
  const long r = idx > 0 ? idx - 1 : n + idx;
  if (idx == 0 || r < 0 || r >= n) obj_error(source, line, "index " + std::to_string(idx) + " out of range");
  return r;
}

// Texture map statement: options then file name. Returns (file, -bm value if any).
std::pair<std::string, std::optional<double>> parse_map_statement(const std::vector<std::string_view>& tok, std::string_view source,
                                                                   std::size_t line)
{
  std::optional<double> bm;
  std::size_t i = 1;
  while (i < tok.size() && tok[i].size() > 1 && tok[i][0] == '-' && !to_double(tok[i])) {
    const std::string_view opt = tok[i++];
    std::size_t max_values = 1;
    if (opt == "-o" || opt == "-s" || opt == "-t") max_values = 3;
    if (opt == "-mm") max_values = 2;
    std::size_t taken = 0;
    while (taken < max_values && i + 1 < tok.size()) {
      if (opt == "-bm") {
        auto v = to_double(tok[i]);
        if (!v) mtl_error(source, line, "bad -bm value");
        bm = v;
      } else if (opt == "-clamp" || opt == "-blendu" || opt == "-blendv" || opt == "-cc" || opt == "-imfchan") {
        // on/off or channel flags
      } else if (!to_double(tok[i])) {
        break;
      }
      ++i;
      ++taken;
    }
  }
  if (i >= tok.size()) mtl_error(source, line, "texture statement without file name");
  std::string file(tok[i]);
  for (std::size_t k = i + 1; k < tok.size(); ++k) file += " " + std::string(tok[k]);
  return {file, bm};
}

}  // namespace

TriMesh parse_obj(std::string_view text, std::string_view source, std::string* first_usemtl)
{
  std::vector<Vec3> v;
  std::vector<Vec2> vt;
  std::vector<Vec3> vn;
  std::map<std::tuple<long, long, long>, std::uint32_t> corners;
  TriMesh mesh;
  std::vector<Vec3> corner_normals;
  bool all_uv = true;
  bool all_normals = true;
  std::string usemtl;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto tok = split_ws(strip_comment(raw));
    if (tok.empty()) continue;
    const std::string_view key = tok[0];

    if (key == "v" || key == "vn") {
      if (tok.size() < 4) obj_error(source, line_no, std::string(key) + " needs 3 coordinates");
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        auto d = to_double(tok[1 + k]);
        if (!d) obj_error(source, line_no, "bad number '" + std::string(tok[1 + k]) + "'");
        p[k] = *d;
      }
      (key == "v" ? v : vn).push_back(p);
    } else if (key == "vt") {
      if (tok.size() < 2) obj_error(source, line_no, "vt needs at least 1 coordinate");
      Vec2 p(0, 0);
      for (int k = 0; k < 2 && 1 + k < static_cast<int>(tok.size()); ++k) {
        auto d = to_double(tok[1 + k]);
        if (!d) obj_error(source, line_no, "bad number '" + std::string(tok[1 + k]) + "'");
        p[k] = *d;
      }
      vt.push_back(p);
    } else if (key == "f") {
      if (tok.size() < 4) obj_error(source, line_no, "face needs at least 3 vertices");
      std::vector<std::uint32_t> face;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        const std::string_view ref = tok[k];
        const auto s1 = ref.find('/');
        const std::string_view vs = ref.substr(0, s1);
        std::string_view ts, ns;
        if (s1 != std::string_view::npos) {
          const auto s2 = ref.find('/', s1 + 1);
          ts = ref.substr(s1 + 1, s2 == std::string_view::npos ? std::string_view::npos : s2 - s1 - 1);
          if (s2 != std::string_view::npos) ns = ref.substr(s2 + 1);
        }
        auto vi = to_long(vs);
        if (!vi) obj_error(source, line_no, "bad face reference '" + std::string(ref) + "'");
        const long pv = resolve_index(*vi, v.size(), source, line_no);
        long pt = -1, pn = -1;
        if (!ts.empty()) {
          auto ti = to_long(ts);
          if (!ti) obj_error(source, line_no, "bad face reference '" + std::string(ref) + "'");
          pt = resolve_index(*ti, vt.size(), source, line_no);
        }
        if (!ns.empty()) {
          auto ni = to_long(ns);
          if (!ni) obj_error(source, line_no, "bad face reference '" + std::string(ref) + "'");
          pn = resolve_index(*ni, vn.size(), source, line_no);
        }
        all_uv = all_uv && pt >= 0;
        all_normals = all_normals && pn >= 0;
        auto [it, inserted] = corners.emplace(std::make_tuple(pv, pt, pn), static_cast<std::uint32_t>(mesh.positions.size()));
        if (inserted) {
          mesh.positions.push_back(v[pv]);
          mesh.uvs.push_back(pt >= 0 ? vt[pt] : Vec2(0, 0));
          corner_normals.push_back(pn >= 0 ? vn[pn] : Vec3::Zero());
        }
        face.push_back(it->second);
      }
      for (std::size_t k = 1; k + 1 < face.size(); ++k) mesh.triangles.push_back({face[0], face[k], face[k + 1]});
    } else if (key == "usemtl") {
      if (usemtl.empty() && tok.size() > 1) usemtl = std::string(tok[1]);
    }
    // o, g, s, l, p, mtllib and vendor extensions are ignored.
  }

  if (!all_uv || mesh.positions.empty()) mesh.uvs.clear();
  bool usable_normals = all_normals && !mesh.positions.empty();
  for (const Vec3& n : corner_normals) usable_normals = usable_normals && n.norm() > 0.0;
  if (usable_normals) {
    mesh.normals.clear();
    for (const Vec3& n : corner_normals) mesh.normals.push_back(n.normalized());
  } else {
    compute_vertex_normals(mesh);
  }
  if (first_usemtl) *first_usemtl = usemtl;
  return mesh;
}

TriMesh load_obj(const fs::path& path, std::string* first_usemtl)
{
  return parse_obj(read_text(path), path.string(), first_usemtl);
}

std::string write_obj(const TriMesh& mesh)
{
  std::ostringstream out;
  out << std::setprecision(17);
  for (const Vec3& p : mesh.positions) out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  const bool uv = mesh.has_uvs();
  const bool normals = mesh.normals.size() == mesh.positions.size() && !mesh.positions.empty();
  if (uv)
    for (const Vec2& t : mesh.uvs) out << "vt " << t.x() << ' ' << t.y() << '\n';
  if (normals)
    for (const Vec3& n : mesh.normals) out << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  for (const auto& t : mesh.triangles) {
    out << 'f';
    for (std::uint32_t i : t) {
      out << ' ' << i + 1;
      if (uv || normals) out << '/';
      if (uv) out << i + 1;
      if (normals) out << '/' << i + 1;
    }
    out << '\n';
  }
  return out.str();
}

std::vector<Material> parse_mtl(std::string_view text, const fs::path& base_dir, std::string_view source)
{
  std::vector<Material> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto current = [&](std::size_t line) -> Material& {
    if (out.empty()) mtl_error(source, line, "statement before newmtl");
    return out.back();
  };
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto tok = split_ws(strip_comment(raw));
    if (tok.empty()) continue;
    const std::string_view key = tok[0];
    if (key == "newmtl") {
      if (tok.size() < 2) mtl_error(source, line_no, "newmtl without a name");
      Material m;
      m.name = std::string(tok[1]);
      out.push_back(std::move(m));
    } else if (key == "Kd") {
      if (tok.size() < 4) mtl_error(source, line_no, "Kd needs 3 components");
      Vec3 c;
      for (int k = 0; k < 3; ++k) {
        auto d = to_double(tok[1 + k]);
        if (!d) mtl_error(source, line_no, "bad number '" + std::string(tok[1 + k]) + "'");
        c[k] = std::clamp(*d, 0.0, 1.0);
      }
      current(line_no).base_color = c;
    } else if (key == "map_Kd" || key == "map_bump" || key == "map_Bump" || key == "bump" || key == "disp" || key == "map_disp") {
      auto [file, bm] = parse_map_statement(tok, source, line_no);
      Material& m = current(line_no);
      Image img = read_png(base_dir / file);
      if (key == "map_Kd") {
        m.albedo_texture = std::move(img);
      } else if (key == "disp" || key == "map_disp") {
        m.displacement_map = std::move(img);
        m.displacement_strength = bm.value_or(kDefaultDisplacementStrength);
      } else {
        m.normal_map = std::move(img);
        m.normal_strength = bm.value_or(1.0);
      }
    }
  }
  return out;
}

std::vector<Material> load_mtl(const fs::path& path)
{
  std::ifstream probe(path);
  if (!probe) throw Error(ErrorCode::FileNotFound, path.string());
  try {
    return parse_mtl(read_text(path), path.parent_path(), path.string());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FileNotFound || e.code() == ErrorCode::MtlParseError) throw;
    throw Error(ErrorCode::MtlParseError, path.string() + ": " + e.what());
  }
}

std::vector<Asset> load_asset_list(const fs::path& list_path)
{
  const std::string text = read_text(list_path);
  const fs::path base = list_path.parent_path();
  std::vector<Asset> out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto tok = split_ws(strip_comment(line));
    if (tok.empty()) continue;
    Asset asset;
    asset.source = base / std::string(tok[0]);
    if (!fs::exists(asset.source)) throw Error(ErrorCode::FileNotFound, asset.source.string());
    std::string usemtl;
    asset.mesh = load_obj(asset.source, &usemtl);
    if (tok.size() > 1) {
      const fs::path mtl_path = base / std::string(tok[1]);
      const std::vector<Material> mats = load_mtl(mtl_path);
      if (!mats.empty()) {
        asset.material = mats.front();
        for (const Material& m : mats)
          if (m.name == usemtl) asset.material = m;
      }
    }
    out.push_back(std::move(asset));
  }
  return out;
}

Image perturb_map(const Image& map, double sigma, std::uint64_t seed)
{
  if (sigma < 0.0) throw Error(ErrorCode::InvalidArgument, "sigma must be non-negative");
  if (sigma == 0.0) return map;
  Image out = map;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    Rng rng(hash_keys(seed, {i}));
    const double v = static_cast<double>(map.data[i]) + sigma * rng.normal();
    out.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

TriMesh apply_displacement(const TriMesh& mesh, const Material& material)
{
  if (!mesh.has_uvs()) throw Error(ErrorCode::MissingUVs, "displacement needs per-vertex UVs");
  if (!material.displacement_map) throw Error(ErrorCode::InvalidArgument, "material has no displacement map");
  TriMesh out = mesh;
  if (out.normals.size() != out.positions.size()) compute_vertex_normals(out);
  bool moved = false;
  for (std::size_t i = 0; i < out.positions.size(); ++i) {
    const double offset = material.displacement_strength * (sample_scalar(*material.displacement_map, out.uvs[i]) - 0.5);
    if (offset == 0.0) continue;
    out.positions[i] += offset * out.normals[i];
    moved = true;
  }
  if (moved) compute_vertex_normals(out);
  return out;
}

namespace {

void bilinear(const Image& image, const Vec2& uv, double* out, int channels)
{
  const double u = uv.x() - std::floor(uv.x());
  const double v = uv.y() - std::floor(uv.y());
  const double fx = u * image.width - 0.5;
  const double fy = (1.0 - v) * image.height - 0.5;
  const double x0f = std::floor(fx), y0f = std::floor(fy);
  const double tx = fx - x0f, ty = fy - y0f;
  auto wrap = [](long i, int n) { return static_cast<int>(((i % n) + n) % n); };
  const int x0 = wrap(static_cast<long>(x0f), image.width), x1 = wrap(static_cast<long>(x0f) + 1, image.width);
  const int y0 = wrap(static_cast<long>(y0f), image.height), y1 = wrap(static_cast<long>(y0f) + 1, image.height);
  for (int c = 0; c < channels; ++c) {
    const double a = image.at(x0, y0, c), b = image.at(x1, y0, c);
    const double d = image.at(x0, y1, c), e = image.at(x1, y1, c);
    out[c] = (1.0 - ty) * ((1.0 - tx) * a + tx * b) + ty * ((1.0 - tx) * d + tx * e);
  }
}

}  // namespace

Vec3 sample_texture(const Image& image, const Vec2& uv)
{
  if (image.channels >= 3) {
    double rgb[3];
    bilinear(image, uv, rgb, 3);
    return Vec3(rgb[0], rgb[1], rgb[2]);
  }
  double g = 0.0;
  bilinear(image, uv, &g, 1);
  return Vec3::Constant(g);
}

double sample_scalar(const Image& image, const Vec2& uv)
{
  double g = 0.0;
  bilinear(image, uv, &g, 1);
  return g;
}

Image checker_texture(int size, int cells, const Vec3& a, const Vec3& b)
{
  Image img(size, size, 3);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const bool odd = ((x * cells / size) + (y * cells / size)) % 2 != 0;
      const Vec3& c = odd ? b : a;
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = static_cast<float>(c[k]);
    }
  return img;
}

Image constant_image(int width, int height, int channels, float value)
{
  return Image(width, height, channels, value);
}

}  // namespace worldforge::assets
