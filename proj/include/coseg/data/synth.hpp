#pragma once

// Seeded generator of CT-like slices: smooth textured background with one to
// three soft elliptical lesions. Lesion support defines the label map.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "coseg/data/dataset.hpp"

namespace coseg::data {

inline constexpr float kSynthMaxIntensity = 4095.0f;

inline std::vector<SlicePair> synth_generate(int n, std::uint64_t seed, int size) {
  if (n < 1) throw DataError("synth_generate: n must be >= 1");
  if (size < 8) throw DataError("synth_generate: size must be >= 8");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

  std::vector<SlicePair> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    SlicePair p;
    p.image = Image<float>(size, size);
    p.mask = LabelMask(size, size);

    // Background: low-frequency waves around a tissue-like base level.
    const double base = range(0.25, 0.35);
    struct Wave {
      double fx, fy, phase, amp;
    };
    std::vector<Wave> waves;
    for (int i = 0; i < 4; ++i)
      waves.push_back({range(0.5, 3.0), range(0.5, 3.0), range(0, 2 * std::numbers::pi), range(0.02, 0.06)});
    std::vector<double> field(static_cast<std::size_t>(size) * size);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        double v = base;
        for (const auto& w : waves)
          v += w.amp * std::sin(2 * std::numbers::pi * (w.fx * x + w.fy * y) / size + w.phase);
        field[static_cast<std::size_t>(y) * size + x] = v;
      }

    const int lesions = 1 + static_cast<int>(uni(rng) * 3.0) % 3;
    for (int l = 0; l < lesions; ++l) {
      const double cx = range(0.2, 0.8) * size;
      const double cy = range(0.2, 0.8) * size;
      const double ax = range(0.08, 0.2) * size;
      const double ay = range(0.08, 0.2) * size;
      const double rot = range(0, std::numbers::pi);
      const double amp = range(0.35, 0.55);
      const auto label = static_cast<std::uint8_t>(1 + static_cast<int>(uni(rng) * 3.0) % 3);
      const double c = std::cos(rot);
      const double s = std::sin(rot);
      bool any = false;
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const double dx = x + 0.5 - cx;
          const double dy = y + 0.5 - cy;
          const double u = (c * dx + s * dy) / ax;
          const double v = (-s * dx + c * dy) / ay;
          const double r = std::sqrt(u * u + v * v);
          if (r > 1.0) continue;
          const double t = 1.0 - r;  // soft shoulder towards the rim
          field[static_cast<std::size_t>(y) * size + x] += amp * (0.6 + 0.4 * t * t * (3 - 2 * t));
          p.mask(y, x) = label;
          any = true;
        }
      if (!any) {
        const int x = std::clamp(static_cast<int>(cx), 0, size - 1);
        const int y = std::clamp(static_cast<int>(cy), 0, size - 1);
        p.mask(y, x) = label;
      }
    }

    for (std::size_t i = 0; i < field.size(); ++i) {
      const double v = field[i] + 0.02 * gauss(rng);
      p.image.data[i] = static_cast<float>(std::round(std::clamp(v, 0.0, 1.0) * kSynthMaxIntensity));
    }
    out.push_back(std::move(p));
  }
  return out;
}

/// Writes pairs in the dataset layout: images/, masks/ and manifest.tsv.
/// The last `test_count` pairs go to the "test" split, the rest to "train".
inline void write_dataset(const std::filesystem::path& root, const std::vector<SlicePair>& pairs, int test_count = 0) {
  std::filesystem::create_directories(root / "images");
  std::filesystem::create_directories(root / "masks");
  std::ofstream manifest(root / "manifest.tsv");
  if (!manifest) throw DataError("cannot write " + (root / "manifest.tsv").string());
  manifest << "split\timage\tmask\n";
  const int n = static_cast<int>(pairs.size());
  for (int i = 0; i < n; ++i) {
    std::ostringstream name;
    name << std::setw(5) << std::setfill('0') << i << ".png";
    const auto& p = pairs[static_cast<std::size_t>(i)];
    Image<std::uint16_t> img(p.image.height, p.image.width);
    for (std::size_t j = 0; j < img.size(); ++j)
      img.data[j] = static_cast<std::uint16_t>(std::clamp(std::lround(p.image.data[j]), 0L, 65535L));
    Image<std::uint16_t> msk(p.mask.height, p.mask.width);
    std::copy(p.mask.data.begin(), p.mask.data.end(), msk.data.begin());
    io::write_png(root / "images" / name.str(), img, 16);
    io::write_png(root / "masks" / name.str(), msk, 8);
    manifest << (i >= n - test_count ? "test" : "train") << "\timages/" << name.str() << "\tmasks/" << name.str()
             << "\n";
  }
}

}  // namespace coseg::data
