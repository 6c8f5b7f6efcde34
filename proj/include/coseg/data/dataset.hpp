#pragma once

// Slice ingestion and preprocessing: label merging, bilinear resize + per-slice
// Z-score for images, nearest-neighbour resize for masks, edge targets.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "coseg/core/kernels.hpp"
#include "coseg/data/png_io.hpp"
#include "coseg/model/supervision.hpp"

namespace coseg::data {

/// Raw slice with a 4-class label map (0 background, 1 ground glass, 2 consolidation, 3 pleural effusion).
struct SlicePair {
  Image<float> image;
  LabelMask mask;
};

/// Network-ready slice.
struct Sample {
  Image<float> x;  // Z-scored
  BinaryMask y_mask;
  BinaryMask y_edge;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxLabel = 3;

/// Any infection class becomes foreground.
inline BinaryMask merge_labels(const LabelMask& mask) {
  BinaryMask out(mask.height, mask.width);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const auto v = mask.data[i];
    if (v > kMaxLabel) throw DataError("label " + std::to_string(v) + " outside {0,1,2,3}");
    out.data[i] = v != 0 ? 1 : 0;
  }
  return out;
}

inline Image<float> resize_bilinear(const Image<float>& img, int height, int width) {
  Tensor<double> in(Shape{1, 1, img.height, img.width});
  std::copy(img.data.begin(), img.data.end(), in.data());
  Tensor<double> out(Shape{1, 1, height, width});
  kernels::resize_bilinear_forward(in, out);
  Image<float> r(height, width);
  std::transform(out.vec().begin(), out.vec().end(), r.data.begin(), [](double v) { return static_cast<float>(v); });
  return r;
}

/// Nearest neighbour with source index floor(dst * in / out).
template <class V>
Image<V> resize_nearest(const Image<V>& img, int height, int width) {
  Image<V> out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(static_cast<int>(static_cast<long long>(y) * img.height / height), img.height - 1);
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(static_cast<int>(static_cast<long long>(x) * img.width / width), img.width - 1);
      out(y, x) = img(sy, sx);
    }
  }
  return out;
}

inline constexpr double kStdFloor = 1e-8;

/// (x - mean) / max(std, 1e-8) over the slice, population std.
inline Image<float> zscore(const Image<float>& img) {
  double sum = 0;
  for (float v : img.data) sum += v;
  const double mean = sum / static_cast<double>(img.size());
  double sq = 0;
  for (float v : img.data) sq += (v - mean) * (v - mean);
  const double sd = std::max(std::sqrt(sq / static_cast<double>(img.size())), kStdFloor);
  Image<float> out(img.height, img.width);
  for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = static_cast<float>((img.data[i] - mean) / sd);
  return out;
}

inline Sample preprocess(const SlicePair& pair, int height = 256, int width = 256) {
  require_same_size(pair.image, pair.mask, "preprocess");
  if (pair.image.size() == 0) throw DataError("preprocess: empty slice");
  for (float v : pair.image.data)
    if (!std::isfinite(v)) throw DataError("preprocess: non-finite intensity in image");
  Sample s;
  s.x = zscore(resize_bilinear(pair.image, height, width));
  s.y_mask = merge_labels(resize_nearest(pair.mask, height, width));
  s.y_edge = edge_targets_from_mask(s.y_mask);
  return s;
}

struct ManifestEntry {
  std::string split;
  std::string image;
  std::string mask;
};

/// Reads root/manifest.tsv (columns: split, image, mask; optional header row).
inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& root) {
  const auto path = root / "manifest.tsv";
  std::ifstream in(path);
  if (!in) throw DataError("missing file: " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ManifestEntry e;
    if (!std::getline(ls, e.split, '\t') || !std::getline(ls, e.image, '\t') || !std::getline(ls, e.mask, '\t'))
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 3 tab-separated columns");
    if (lineno == 1 && e.split == "split") continue;
    out.push_back(std::move(e));
  }
  return out;
}

inline SlicePair load_pair(const std::filesystem::path& image_path, const std::filesystem::path& mask_path) {
  if (!std::filesystem::exists(image_path)) throw DataError("missing image file: " + image_path.string());
  if (!std::filesystem::exists(mask_path)) throw DataError("missing mask file: " + mask_path.string());
  const io::GrayImage img = io::read_png(image_path);
  const io::GrayImage msk = io::read_png(mask_path);
  if (img.pixels.height != msk.pixels.height || img.pixels.width != msk.pixels.width)
    throw DataError("image/mask shape mismatch: " + image_path.string() + " vs " + mask_path.string());
  SlicePair p;
  p.image = Image<float>(img.pixels.height, img.pixels.width);
  std::transform(img.pixels.data.begin(), img.pixels.data.end(), p.image.data.begin(),
                 [](std::uint16_t v) { return static_cast<float>(v); });
  p.mask = LabelMask(msk.pixels.height, msk.pixels.width);
  for (std::size_t i = 0; i < p.mask.size(); ++i) {
    const auto v = msk.pixels.data[i];
    if (v > kMaxLabel) throw DataError("mask " + mask_path.string() + " has label " + std::to_string(v));
    p.mask.data[i] = static_cast<std::uint8_t>(v);
  }
  return p;
}

/// Samples of one split in manifest order.
inline std::vector<Sample> load_dataset(const std::filesystem::path& root, const std::string& split, int height = 256,
                                        int width = 256) {
  std::vector<Sample> out;
  for (const auto& e : read_manifest(root)) {
    if (e.split != split) continue;
    out.push_back(preprocess(load_pair(root / e.image, root / e.mask), height, width));
  }
  return out;
}

}  // namespace coseg::data
