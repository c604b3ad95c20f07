#pragma once

// Procedurally drawn face template and mouth bank, so the pipeline runs
// without external assets.

#include "vedicthg/renderer.hpp"

#include <filesystem>

namespace vthg {

// Square face template; `size` pixels per side (>= 64). 24 landmarks: 12 on
// the outer lip contour, then eye corners/lids and nose points (stable).
Template make_sample_template(int size = 256);

// One 64x32 RGBA patch per viseme, shaped from its rig parameters. All
// patches share the anchor layout, so neutral warps place them 1:1 on the
// template mouth.
MouthBank make_sample_mouth_bank(const ParamBank& params, int template_size = 256);

// Writes template/template.json and bank/bank.json (plus PNGs) under dir.
void write_sample_assets(const std::filesystem::path& dir, const ParamBank& params, int size = 256);

}  // namespace vthg
