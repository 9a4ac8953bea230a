#pragma once

#include "netform/mesh.hpp"
#include "netform/model.hpp"
#include "netform/timeloop.hpp"
#include "netform/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace netform {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class MeshKind { Quad, TriCrissCross, TriRegular, Hex, Import };

struct MeshSpec {
  MeshKind kind = MeshKind::Quad;
  Index nx = 64, ny = 64, nz = 16;
  Scalar x0 = 0, x1 = 1, y0 = 0, y1 = 1, z0 = 0, z1 = 0.5;
  std::string path; // for Import

  MeshTopology build() const;
};

struct SourceConfig {
  Scalar x0 = 0.25, y0 = 0.25, z0 = 0.25;
  Scalar sharpness = 500.0;
};

struct OutputConfig {
  std::string log_path;
  std::string vtk_prefix;
  Index vtk_every = 0; // 0 disables snapshots; final state still written
  Scalar threshold = 1e-2;
  std::string threshold_path;
};

struct RunConfig {
  MeshSpec mesh;
  ModelParams model;
  SourceConfig source;
  IntegratorConfig time;
  NewtonConfig newton;
  LinearOptions linear;
  OutputConfig output;
  Index quad_degree = 2;

  void validate() const;
  RunOptions run_options() const;
  SourceSpec make_source(const MeshTopology& mesh, const FeCache& fe) const;
};

// Flat `section.key = value` text; `#` comments; unknown keys rejected.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text,
                            const std::string& origin = "<string>");
void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value);
std::string serialize_config(const RunConfig& cfg);

bool operator==(const RunConfig& a, const RunConfig& b);

} // namespace netform
