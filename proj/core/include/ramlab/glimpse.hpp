#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ramlab/graph.hpp"
#include "ramlab/nn.hpp"

namespace ramlab {

// Retina geometry. Scale s (1-based) covers patch_size * scale_factor^(s-1)
// pixels and is pooled back down to patch_size x patch_size.
struct GlimpseConfig {
  int patch_size = 8;
  int num_scales = 1;
  int scale_factor = 2;

  void validate() const {
    if (patch_size < 2 || patch_size % 2 != 0)
      throw std::invalid_argument("glimpse: patch_size must be even and >= 2");
    if (num_scales < 1) throw std::invalid_argument("glimpse: num_scales must be >= 1");
    if (scale_factor < 2) throw std::invalid_argument("glimpse: scale_factor must be >= 2");
  }

  int retina_dim() const { return num_scales * patch_size * patch_size; }

  int scale_extent(int scale) const {  // scale is 1-based
    int e = patch_size;
    for (int s = 1; s < scale; ++s) e *= scale_factor;
    return e;
  }
};

// Normalized image coordinates in [-1,1]^2, (0,0) = image center.
struct Location {
  double x = 0, y = 0;

  Location clamped() const {
    auto cl = [](double v) { return v < -1 ? -1.0 : (v > 1 ? 1.0 : v); };
    return {cl(x), cl(y)};
  }
};

// (px, py) = ((loc+1)/2) * (size-1); endpoints land exactly on the corners
inline std::pair<double, double> to_pixel(const Location& loc, int image_size) {
  if (image_size < 1) throw std::invalid_argument("to_pixel: image_size must be >= 1");
  double px = (loc.x + 1.0) / 2.0 * (image_size - 1);
  double py = (loc.y + 1.0) / 2.0 * (image_size - 1);
  return {px, py};
}

// Square crop around a real-valued pixel center; top-left =
// round(center) - size/2; out-of-bounds pixels are zero.
template <typename S>
void extract_patch(const S* image, int h, int w, double center_px, double center_py,
                   int size, S* out) {
  long tx = std::lround(center_px) - size / 2;
  long ty = std::lround(center_py) - size / 2;
  for (int r = 0; r < size; ++r) {
    long sy = ty + r;
    for (int c = 0; c < size; ++c) {
      long sx = tx + c;
      out[r * size + c] =
          (sy >= 0 && sy < h && sx >= 0 && sx < w) ? image[sy * w + sx] : S(0);
    }
  }
}

// Non-overlapping k x k block average
template <typename S>
void downsample(const S* in, int side, int factor, S* out) {
  if (side % factor != 0)
    throw std::invalid_argument("downsample: side " + std::to_string(side) +
                                " not divisible by factor " + std::to_string(factor));
  int n = side / factor;
  S inv = S(1) / S(factor * factor);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      S acc = 0;
      for (int dr = 0; dr < factor; ++dr)
        for (int dc = 0; dc < factor; ++dc)
          acc += in[(r * factor + dr) * side + c * factor + dc];
      out[r * n + c] = acc * inv;
    }
}

// Multi-scale retina vector: per scale, crop then pool to patch_size,
// flattened row-major and concatenated in scale order. Pure data movement;
// no gradient flows through this into the location.
template <typename S>
void build_retina(const S* image, int h, int w, const Location& loc,
                  const GlimpseConfig& cfg, S* out) {
  cfg.validate();
  Location cl = loc.clamped();
  double px = (cl.x + 1.0) / 2.0 * (w - 1);
  double py = (cl.y + 1.0) / 2.0 * (h - 1);
  int p = cfg.patch_size;
  std::vector<S> crop;
  for (int s = 1; s <= cfg.num_scales; ++s) {
    int extent = cfg.scale_extent(s);
    crop.resize((size_t)extent * extent);
    extract_patch(image, h, w, px, py, extent, crop.data());
    if (extent == p) {
      std::copy(crop.begin(), crop.end(), out + (size_t)(s - 1) * p * p);
    } else {
      downsample(crop.data(), extent, extent / p, out + (size_t)(s - 1) * p * p);
    }
  }
}

// Glimpse network weights: a what-pathway over the retina, a where-pathway
// over the location, fused into the glimpse feature.
template <typename S>
struct GlimpseNet {
  Dense<S> what, where, what_proj, where_proj;
  int feature_dim = 256;

  GlimpseNet() = default;
  GlimpseNet(const std::string& name, const GlimpseConfig& cfg, int what_width,
             int where_width, int out_width)
      : what(name + ".what", cfg.retina_dim(), what_width),
        where(name + ".where", 2, where_width),
        what_proj(name + ".what_proj", what_width, out_width),
        where_proj(name + ".where_proj", where_width, out_width),
        feature_dim(out_width) {}

  void init(Rng& rng) {
    what.init(rng);
    where.init(rng);
    what_proj.init(rng);
    where_proj.init(rng);
  }

  // retina: [B, retina_dim], loc: [B, 2] (both constant leaves)
  int forward(Graph<S>& g, int retina, int loc) {
    int h_what = g.relu(what.forward(g, retina));
    int h_where = g.relu(where.forward(g, loc));
    return g.relu(g.add(what_proj.forward(g, h_what), where_proj.forward(g, h_where)));
  }

  void collect(std::vector<Parameter<S>*>& out) {
    what.collect(out);
    where.collect(out);
    what_proj.collect(out);
    where_proj.collect(out);
  }
};

}  // namespace ramlab
