#include "netform/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace netform {

MeshTopology MeshSpec::build() const {
  const Eigen::AlignedBox2d box2(Eigen::Vector2d(x0, y0),
                                 Eigen::Vector2d(x1, y1));
  switch (kind) {
  case MeshKind::Quad:
    return generate_structured_quad(nx, ny, box2);
  case MeshKind::TriCrissCross:
    return generate_triangles(nx, ny, box2, TriangleStyle::CrissCross);
  case MeshKind::TriRegular:
    return generate_triangles(nx, ny, box2, TriangleStyle::Regular);
  case MeshKind::Hex:
    return generate_structured_hex(
        nx, ny, nz,
        Eigen::AlignedBox3d(Eigen::Vector3d(x0, y0, z0),
                            Eigen::Vector3d(x1, y1, z1)));
  case MeshKind::Import:
    return import_mesh(path);
  }
  throw ConfigError("mesh: unknown kind");
}

void RunConfig::validate() const {
  try {
    model.validate();
    time.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (newton.atol < 0 || newton.rtol < 0 ||
      (newton.atol == 0 && newton.rtol == 0))
    throw ConfigError("newton: atol/rtol must be >= 0 and not both zero");
  if (newton.max_iters < 1) throw ConfigError("newton: max_iters must be >= 1");
  if (quad_degree < 1 || quad_degree > 4)
    throw ConfigError("fem: quad_degree must be in [1, 4]");
  if (mesh.kind == MeshKind::Import && !std::filesystem::exists(mesh.path))
    throw ConfigError("mesh: import file '" + mesh.path + "' does not exist");
}

RunOptions RunConfig::run_options() const {
  RunOptions opts;
  opts.time = time;
  opts.newton = newton;
  opts.linear = linear;
  opts.quad_degree = quad_degree;
  return opts;
}

SourceSpec RunConfig::make_source(const MeshTopology& mesh,
                                  const FeCache& fe) const {
  Vector center(mesh.dim);
  center(0) = source.x0;
  center(1) = source.y0;
  if (mesh.dim == 3) center(2) = source.z0;
  return make_gaussian_source(center, source.sharpness, mesh, fe);
}

namespace {

std::string fmt_scalar(Scalar v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string mesh_kind_name(MeshKind k) {
  switch (k) {
  case MeshKind::Quad: return "quad";
  case MeshKind::TriCrissCross: return "tri_crisscross";
  case MeshKind::TriRegular: return "tri_regular";
  case MeshKind::Hex: return "hex";
  case MeshKind::Import: return "import";
  }
  return "?";
}

struct KeyEntry {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

Scalar to_scalar(const std::string& key, const std::string& v) {
  size_t pos = 0;
  Scalar out;
  try {
    out = std::stod(v, &pos);
  } catch (...) {
    throw ConfigError("key '" + key + "': cannot parse number '" + v + "'");
  }
  if (pos != v.size())
    throw ConfigError("key '" + key + "': trailing characters in '" + v + "'");
  return out;
}

Index to_index(const std::string& key, const std::string& v) {
  const Scalar s = to_scalar(key, v);
  const Index i = static_cast<Index>(s);
  if (static_cast<Scalar>(i) != s)
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  return i;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

#define SCALAR_KEY(field) \
  KeyEntry{[](RunConfig& c, const std::string& v) { c.field = to_scalar(#field, v); }, \
           [](const RunConfig& c) { return fmt_scalar(c.field); }}
#define INDEX_KEY(field) \
  KeyEntry{[](RunConfig& c, const std::string& v) { c.field = to_index(#field, v); }, \
           [](const RunConfig& c) { return std::to_string(c.field); }}
#define BOOL_KEY(field) \
  KeyEntry{[](RunConfig& c, const std::string& v) { c.field = to_bool(#field, v); }, \
           [](const RunConfig& c) { return c.field ? "true" : "false"; }}
#define STRING_KEY(field) \
  KeyEntry{[](RunConfig& c, const std::string& v) { c.field = v; }, \
           [](const RunConfig& c) { return c.field; }}

const std::map<std::string, KeyEntry>& key_table() {
  static const std::map<std::string, KeyEntry> table = {
      {"mesh.kind",
       {[](RunConfig& c, const std::string& v) {
          if (v == "quad") c.mesh.kind = MeshKind::Quad;
          else if (v == "tri_crisscross") c.mesh.kind = MeshKind::TriCrissCross;
          else if (v == "tri_regular") c.mesh.kind = MeshKind::TriRegular;
          else if (v == "hex") c.mesh.kind = MeshKind::Hex;
          else if (v == "import") c.mesh.kind = MeshKind::Import;
          else throw ConfigError("mesh.kind: unknown kind '" + v + "'");
        },
        [](const RunConfig& c) { return mesh_kind_name(c.mesh.kind); }}},
      {"mesh.nx", INDEX_KEY(mesh.nx)},
      {"mesh.ny", INDEX_KEY(mesh.ny)},
      {"mesh.nz", INDEX_KEY(mesh.nz)},
      {"mesh.x0", SCALAR_KEY(mesh.x0)},
      {"mesh.x1", SCALAR_KEY(mesh.x1)},
      {"mesh.y0", SCALAR_KEY(mesh.y0)},
      {"mesh.y1", SCALAR_KEY(mesh.y1)},
      {"mesh.z0", SCALAR_KEY(mesh.z0)},
      {"mesh.z1", SCALAR_KEY(mesh.z1)},
      {"mesh.path", STRING_KEY(mesh.path)},
      {"model.r", SCALAR_KEY(model.r)},
      {"model.nu", SCALAR_KEY(model.nu)},
      {"model.gamma", SCALAR_KEY(model.gamma)},
      {"model.eps", SCALAR_KEY(model.eps)},
      {"source.x0", SCALAR_KEY(source.x0)},
      {"source.y0", SCALAR_KEY(source.y0)},
      {"source.z0", SCALAR_KEY(source.z0)},
      {"source.sharpness", SCALAR_KEY(source.sharpness)},
      {"time.scheme",
       {[](RunConfig& c, const std::string& v) {
          if (v == "be") c.time.scheme = Scheme::BE;
          else if (v == "bdf2") c.time.scheme = Scheme::BDF2;
          else if (v == "cn") c.time.scheme = Scheme::CN;
          else throw ConfigError("time.scheme: unknown scheme '" + v + "'");
        },
        [](const RunConfig& c) { return scheme_name(c.time.scheme); }}},
      {"time.dt0", SCALAR_KEY(time.dt0)},
      {"time.dt_min", SCALAR_KEY(time.dt_min)},
      {"time.dt_max", SCALAR_KEY(time.dt_max)},
      {"time.t_end", SCALAR_KEY(time.t_end)},
      {"time.lte_tol", SCALAR_KEY(time.lte_tol)},
      {"time.safety", SCALAR_KEY(time.safety)},
      {"time.growth_max", SCALAR_KEY(time.growth_max)},
      {"time.adaptive", BOOL_KEY(time.adaptive)},
      {"newton.atol", SCALAR_KEY(newton.atol)},
      {"newton.rtol", SCALAR_KEY(newton.rtol)},
      {"newton.max_iters", INDEX_KEY(newton.max_iters)},
      {"newton.ew_eta0", SCALAR_KEY(newton.ew_eta0)},
      {"newton.ew_eta_max", SCALAR_KEY(newton.ew_eta_max)},
      {"newton.ls_max_backtracks", INDEX_KEY(newton.ls_max_backtracks)},
      {"newton.ls_alpha", SCALAR_KEY(newton.ls_alpha)},
      {"newton.lag_jacobian", BOOL_KEY(newton.lag_jacobian)},
      {"linear.restart", INDEX_KEY(linear.gmres_restart)},
      {"linear.max_iters", INDEX_KEY(linear.gmres_max_iters)},
      {"linear.inner",
       {[](RunConfig& c, const std::string& v) {
          if (v == "direct") c.linear.schur.inner = InnerSolverKind::Direct;
          else if (v == "pcg") c.linear.schur.inner = InnerSolverKind::PCG;
          else throw ConfigError("linear.inner: unknown solver '" + v + "'");
        },
        [](const RunConfig& c) {
          return c.linear.schur.inner == InnerSolverKind::Direct ? "direct"
                                                                 : "pcg";
        }}},
      {"linear.inner_rtol", SCALAR_KEY(linear.schur.inner_rtol)},
      {"linear.inner_max_iters", INDEX_KEY(linear.schur.inner_max_iters)},
      {"output.log_path", STRING_KEY(output.log_path)},
      {"output.vtk_prefix", STRING_KEY(output.vtk_prefix)},
      {"output.vtk_every", INDEX_KEY(output.vtk_every)},
      {"output.threshold", SCALAR_KEY(output.threshold)},
      {"output.threshold_path", STRING_KEY(output.threshold_path)},
      {"fem.quad_degree", INDEX_KEY(quad_degree)},
  };
  return table;
}

#undef SCALAR_KEY
#undef INDEX_KEY
#undef BOOL_KEY
#undef STRING_KEY

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

} // namespace

void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
  const auto it = key_table().find(key);
  if (it == key_table().end())
    throw ConfigError("unknown key '" + key + "'");
  it->second.set(cfg, value);
}

RunConfig parse_config_text(const std::string& text,
                            const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string stripped = trim(raw);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line) +
                        ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    try {
      apply_override(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  for (const auto& [key, entry] : key_table())
    out << key << " = " << entry.get(cfg) << "\n";
  return out.str();
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

} // namespace netform
