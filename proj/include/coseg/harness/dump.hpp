#pragma once

// Per-stage and fusion diagnostics written as 8-bit grayscale images.

#include <filesystem>
#include <string>

#include "coseg/data/png_io.hpp"
#include "coseg/model/network.hpp"

namespace coseg::harness {

/// Min-max stretch to [0,1]; a constant map becomes 0.
inline Image<float> stretch(const Image<float>& img) {
  if (img.data.empty()) return img;
  const auto [lo, hi] = std::minmax_element(img.data.begin(), img.data.end());
  Image<float> out(img.height, img.width);
  const float span = *hi - *lo;
  if (span > 0)
    for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = (img.data[i] - *lo) / span;
  return out;
}

inline std::string side_tag(Side s) { return s == Side::decoder ? "decoder" : "encoder"; }

/// Writes edge_<side>_s<i>.png / semantic_<side>_s<i>.png for batch item `k`. Returns the files written.
inline std::vector<std::filesystem::path> dump_stages(const std::filesystem::path& dir, const NetworkOutput<float>& out,
                                                      const std::string& prefix, int k = 0) {
  std::vector<std::filesystem::path> written;
  auto put = [&](const char* kind, const StagePrediction<float>& p) {
    const auto path = dir / (prefix + kind + "_" + side_tag(p.side) + "_s" + std::to_string(p.stage_index) + ".png");
    io::write_probability_png(path, to_image(p.prob.value(), k, 0));
    written.push_back(path);
  };
  for (const auto& p : out.edge_predictions) put("edge", p);
  for (const auto& p : out.semantic_predictions) put("semantic", p);
  return written;
}

/// Writes p1, 1-p1, y1 (min-max stretched) and sp; p1/y1 only exist in attention mode.
inline std::vector<std::filesystem::path> dump_fusion(const std::filesystem::path& dir, const FusionOutput<float>& f,
                                                      const std::string& prefix, int k = 0) {
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const Image<float>& img) {
    const auto path = dir / (prefix + name + ".png");
    io::write_probability_png(path, img);
    written.push_back(path);
  };
  if (!f.blocks.empty()) {
    const Image<float> p1 = to_image(f.p1().value(), k, 0);
    Image<float> inv = p1;
    for (auto& v : inv.data) v = 1.0f - v;
    put("p1", p1);
    put("one_minus_p1", inv);
    put("y1", stretch(to_image(f.y1().value(), k, 0)));
  }
  put("sp", to_image(f.prob.value(), k, 0));
  return written;
}

}  // namespace coseg::harness
