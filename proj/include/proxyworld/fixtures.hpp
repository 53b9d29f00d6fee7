#pragma once

#include <string>

#include "proxyworld/mesh.hpp"

namespace pw::fixtures {

// Procedural heightfield terrain over [-half, half]^2 with an optional lake
// basin; lake triangles get water tags and the surface is flattened to the
// water level.
TerrainMesh make_heightfield(uint64_t seed, int cells, double half_extent, double amplitude,
                             bool with_lake);

// Cross-card tree template: two perpendicular quads ("leaves") over a boxy
// trunk, material groups partitioning the triangles.
TerrainMesh make_tree_template(double height, double canopy_width);

// Writes a self-contained demo workspace under `dir`:
//   terrain/   3 heightfield templates (glTF) + index.json
//   assets/    2 foreground templates (glTF) + index.json
//   audio/     3 tagged WAV clips + index.json
//   depth_lib/ synthetic estimated-depth thumbs + index.json
//   agent_policy.json, scene.config.json
// Everything derives from `seed`; used by tests, the acceptance suite and the
// quickstart in the README.
std::string write_demo_workspace(const std::string& dir, uint64_t seed);

}  // namespace pw::fixtures
