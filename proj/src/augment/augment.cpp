// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/augment/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace countx::augment {

using data::DotAnnotation;
using data::LoadedSample;
using data::Point;

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

bool probability(double p, const char* name, std::string& error) {
  if (!(p >= 0.0 && p <= 1.0)) {
    error = std::string(name) + " must be in [0, 1]";
    return false;
  }
  return true;
}

}  // namespace

void AugmentConfig::validate() const {
  std::string err;
  if (!probability(p_augment, "p_augment", err) ||
      !probability(p_pipeline_given_augment, "p_pipeline_given_augment", err) ||
      !probability(p_mosaic_given_augment, "p_mosaic_given_augment", err) ||
      !probability(p_each_stage, "p_each_stage", err) || !probability(flip_p, "flip_p", err))
    throw ConfigError("augment: " + err);
  if (std::abs(p_pipeline_given_augment + p_mosaic_given_augment - 1.0) > 1e-12)
    throw ConfigError("augment: p_pipeline_given_augment + p_mosaic_given_augment must equal 1");
  if (image_size <= 0 || image_size % 2 != 0) throw ConfigError("augment: image_size must be positive and even");
  if (seam_width < 0 || seam_width % 2 != 0 || seam_width > image_size / 2)
    throw ConfigError("augment: seam_width must be even and at most image_size / 2");
  if (blur_kernel_x % 2 == 0 || blur_kernel_y % 2 == 0) throw ConfigError("augment: blur kernels must be odd");
  if (!(blur_sigma_min > 0 && blur_sigma_max >= blur_sigma_min))
    throw ConfigError("augment: invalid blur sigma range");
  if (!(scale_min > 0 && scale_max >= scale_min)) throw ConfigError("augment: invalid scale range");
}

void to_json(nlohmann::json& j, const AugmentConfig& c) {
  j = {{"image_size", c.image_size},
       {"p_augment", c.p_augment},
       {"p_pipeline_given_augment", c.p_pipeline_given_augment},
       {"p_mosaic_given_augment", c.p_mosaic_given_augment},
       {"p_each_stage", c.p_each_stage},
       {"mosaic_self_threshold", c.mosaic_self_threshold},
       {"noise_std", c.noise_std},
       {"brightness", c.brightness},
       {"contrast", c.contrast},
       {"saturation", c.saturation},
       {"hue", c.hue},
       {"blur_kernel_x", c.blur_kernel_x},
       {"blur_kernel_y", c.blur_kernel_y},
       {"blur_sigma_min", c.blur_sigma_min},
       {"blur_sigma_max", c.blur_sigma_max},
       {"rotation_deg", c.rotation_deg},
       {"scale_min", c.scale_min},
       {"scale_max", c.scale_max},
       {"translate", c.translate},
       {"shear_deg", c.shear_deg},
       {"flip_p", c.flip_p},
       {"seam_width", c.seam_width}};
}

void from_json(const nlohmann::json& j, AugmentConfig& c) {
  const AugmentConfig d;
#define COUNTX_FIELD(name) c.name = j.value(#name, d.name)
  COUNTX_FIELD(image_size);
  COUNTX_FIELD(p_augment);
  COUNTX_FIELD(p_pipeline_given_augment);
  COUNTX_FIELD(p_mosaic_given_augment);
  COUNTX_FIELD(p_each_stage);
  COUNTX_FIELD(mosaic_self_threshold);
  COUNTX_FIELD(noise_std);
  COUNTX_FIELD(brightness);
  COUNTX_FIELD(contrast);
  COUNTX_FIELD(saturation);
  COUNTX_FIELD(hue);
  COUNTX_FIELD(blur_kernel_x);
  COUNTX_FIELD(blur_kernel_y);
  COUNTX_FIELD(blur_sigma_min);
  COUNTX_FIELD(blur_sigma_max);
  COUNTX_FIELD(rotation_deg);
  COUNTX_FIELD(scale_min);
  COUNTX_FIELD(scale_max);
  COUNTX_FIELD(translate);
  COUNTX_FIELD(shear_deg);
  COUNTX_FIELD(flip_p);
  COUNTX_FIELD(seam_width);
#undef COUNTX_FIELD
  c.validate();
}

PipelineDraw draw_pipeline(const AugmentConfig& c, Rng& rng) {
  PipelineDraw d;
  for (auto& a : d.active) a = uniform(rng, 0.0, 1.0) < c.p_each_stage;
  d.noise_seed = rng();
  d.noise_std = c.noise_std;
  d.blur_kernel_x = c.blur_kernel_x;
  d.blur_kernel_y = c.blur_kernel_y;
  d.brightness = uniform(rng, std::max(0.0, 1.0 - c.brightness), 1.0 + c.brightness);
  d.contrast = uniform(rng, std::max(0.0, 1.0 - c.contrast), 1.0 + c.contrast);
  d.saturation = uniform(rng, std::max(0.0, 1.0 - c.saturation), 1.0 + c.saturation);
  d.hue = uniform(rng, -c.hue, c.hue);
  d.blur_sigma = uniform(rng, c.blur_sigma_min, c.blur_sigma_max);
  d.rotation = uniform(rng, -c.rotation_deg, c.rotation_deg);
  d.scale = uniform(rng, c.scale_min, c.scale_max);
  d.translate_x = uniform(rng, -c.translate, c.translate);
  d.translate_y = uniform(rng, -c.translate, c.translate);
  d.shear_x = uniform(rng, -c.shear_deg, c.shear_deg);
  d.shear_y = uniform(rng, -c.shear_deg, c.shear_deg);
  d.flip = uniform(rng, 0.0, 1.0) < c.flip_p;
  return d;
}

Affine2 affine_matrix(const PipelineDraw& d, int width, int height) {
  const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
  const double tx = std::round(d.translate_x * width), ty = std::round(d.translate_y * height);
  return Affine2::translation(cx + tx, cy + ty) * Affine2::rotation_deg(d.rotation) *
         Affine2::shear_deg(d.shear_x, d.shear_y) * Affine2::scaling(d.scale) * Affine2::translation(-cx, -cy);
}

TrainSample apply_pipeline(const TrainSample& sample, const PipelineDraw& d) {
  TrainSample out = sample;
  const int w = out.image.width, h = out.image.height;
  if (d.stage(Stage::kNoise)) {
    Rng noise(d.noise_seed);
    out.image = add_gaussian_noise(out.image, d.noise_std, noise);
  }
  if (d.stage(Stage::kColorJitter)) {
    out.image = adjust_brightness(out.image, d.brightness);
    out.image = adjust_contrast(out.image, d.contrast);
    out.image = adjust_saturation(out.image, d.saturation);
    out.image = adjust_hue(out.image, d.hue);
  }
  if (d.stage(Stage::kBlur)) out.image = gaussian_blur(out.image, d.blur_kernel_x, d.blur_kernel_y, d.blur_sigma);
  if (d.stage(Stage::kAffine)) {
    const Affine2 a = affine_matrix(d, w, h);
    out.image = warp_affine(out.image, a);
    DotAnnotation moved;
    for (const auto& p : out.dots.points) {
      const Eigen::Vector2d q = a.apply({p.x, p.y});
      const Point np{q.x(), q.y()};
      if (data::in_bounds(np, {w, h})) moved.points.push_back(np);
    }
    out.dots = std::move(moved);
  }
  if (d.stage(Stage::kFlip) && d.flip) {
    out.image = flip_horizontal(out.image);
    for (auto& p : out.dots.points) p.x = std::clamp(w - 1 - p.x, 0.0, w - 1.0);
  }
  return out;
}

TrainSample square_crop(const LoadedSample& sample, int offset, int image_size) {
  const int w = sample.image.width, h = sample.image.height;
  const int side = std::min(w, h);
  const bool landscape = w >= h;
  const int span = (landscape ? w : h) - side;
  if (offset < 0 || offset > span) throw InputError("square_crop: offset out of range");
  const int x0 = landscape ? offset : 0, y0 = landscape ? 0 : offset;
  TrainSample out;
  out.image = resize_bilinear(crop(sample.image, x0, y0, side, side), image_size, image_size);
  out.description = sample.description;
  const double s = static_cast<double>(image_size) / side;
  for (const auto& p : sample.dots.points) {
    if (p.x < x0 || p.x >= x0 + side || p.y < y0 || p.y >= y0 + side) continue;
    const Point q{(p.x - x0) * s, (p.y - y0) * s};
    if (data::in_bounds(q, {image_size, image_size})) out.dots.points.push_back(q);
  }
  return out;
}

TrainSample random_square_crop(const LoadedSample& sample, int image_size, Rng& rng) {
  const int span = std::abs(sample.image.width - sample.image.height);
  const int offset = std::uniform_int_distribution<int>(0, span)(rng);
  return square_crop(sample, offset, image_size);
}

TrainSample mosaic4(std::span<const LoadedSample* const> sources, std::size_t prompt_index,
                    const AugmentConfig& c, Rng& rng, MosaicTrace* trace) {
  if (c.image_size % 2 != 0) throw ConfigError("mosaic: image_size must be even");
  if (sources.size() != 4) throw InputError("mosaic: exactly four sources required");
  if (prompt_index >= 4) throw InputError("mosaic: prompt index out of range");
  const int s = c.image_size, q = s / 2, half = c.seam_width / 2, side = q + half;
  const std::string& prompt = sources[prompt_index]->description;

  // Blend weight of the first (left/top) tile along one axis.
  const auto first_weight = [&](int i) -> float {
    if (half == 0) return i < q ? 1.0f : 0.0f;
    return static_cast<float>(std::clamp((q + half - (i + 0.5)) / (2.0 * half), 0.0, 1.0));
  };
  std::vector<float> wfirst(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) wfirst[static_cast<std::size_t>(i)] = first_weight(i);

  TrainSample out;
  out.image = RgbImage(s, s);
  out.description = prompt;
  MosaicTrace local;
  for (std::size_t t = 0; t < 4; ++t) {
    const LoadedSample& src = *sources[t];
    const int row = static_cast<int>(t / 2), col = static_cast<int>(t % 2);
    const double scale = static_cast<double>(s) / std::min(src.image.width, src.image.height);
    const int sw = std::max(side, static_cast<int>(std::lround(src.image.width * scale)));
    const int sh = std::max(side, static_cast<int>(std::lround(src.image.height * scale)));
    const double sx = static_cast<double>(sw) / src.image.width, sy = static_cast<double>(sh) / src.image.height;
    const int ox = std::uniform_int_distribution<int>(0, sw - side)(rng);
    const int oy = std::uniform_int_distribution<int>(0, sh - side)(rng);
    const RgbImage tile = crop(resize_bilinear(src.image, sw, sh), ox, oy, side, side);
    const int X0 = col == 0 ? 0 : q - half, Y0 = row == 0 ? 0 : q - half;
    for (int y = 0; y < side; ++y) {
      const float wy = row == 0 ? wfirst[static_cast<std::size_t>(Y0 + y)] : 1.0f - wfirst[static_cast<std::size_t>(Y0 + y)];
      if (wy <= 0.0f) continue;
      for (int x = 0; x < side; ++x) {
        const float wx = col == 0 ? wfirst[static_cast<std::size_t>(X0 + x)] : 1.0f - wfirst[static_cast<std::size_t>(X0 + x)];
        if (wx <= 0.0f) continue;
        for (int ch = 0; ch < 3; ++ch) out.image.at(ch, Y0 + y, X0 + x) += wy * wx * tile.at(ch, y, x);
      }
    }
    MosaicTile& info = local.tiles[t];
    info.source = t;
    info.scale_x = sx;
    info.scale_y = sy;
    info.offset_x = ox;
    info.offset_y = oy;
    info.included = src.description == prompt;
    if (!info.included) continue;
    const double cx0 = col * q, cy0 = row * q;
    for (const auto& p : src.dots.points) {
      const Point m{p.x * sx - ox + X0, p.y * sy - oy + Y0};
      if (m.x >= cx0 && m.x < cx0 + q && m.y >= cy0 && m.y < cy0 + q) {
        out.dots.points.push_back(m);
        ++info.dots;
      }
    }
  }
  clamp_unit(out.image);
  if (trace) *trace = local;
  return out;
}

TrainSample augment_sample(const LoadedSample& sample, std::size_t index, std::size_t dataset_size,
                           const SampleFetcher& fetch, const AugmentConfig& c, Rng& rng, AugmentTrace* trace) {
  AugmentTrace local;
  TrainSample out;
  const double u = uniform(rng, 0.0, 1.0);
  if (u >= c.p_augment) {
    local.branch = Branch::kCropOnly;
    out = random_square_crop(sample, c.image_size, rng);
  } else if (uniform(rng, 0.0, 1.0) < c.p_pipeline_given_augment) {
    local.branch = Branch::kPipeline;
    local.pipeline = draw_pipeline(c, rng);
    out = apply_pipeline(random_square_crop(sample, c.image_size, rng), local.pipeline);
  } else if (sample.dots.size() >= c.mosaic_self_threshold || dataset_size < 4 || !fetch) {
    local.branch = Branch::kMosaicSelf;
    const std::array<const LoadedSample*, 4> sources{&sample, &sample, &sample, &sample};
    out = mosaic4(sources, 0, c, rng, &local.mosaic);
  } else {
    local.branch = Branch::kMosaicMixed;
    // Three distinct partners, uniformly from the other samples.
    std::vector<std::size_t> others;
    others.reserve(dataset_size - 1);
    for (std::size_t i = 0; i < dataset_size; ++i)
      if (i != index) others.push_back(i);
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(k, others.size() - 1)(rng);
      std::swap(others[k], others[j]);
      local.partners.push_back(others[k]);
    }
    std::array<LoadedSample, 3> partners;
    for (std::size_t k = 0; k < 3; ++k) partners[k] = fetch(local.partners[k]);
    local.prompt_quadrant = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
    std::array<const LoadedSample*, 4> sources{};
    for (std::size_t t = 0, k = 0; t < 4; ++t)
      sources[t] = t == local.prompt_quadrant ? &sample : &partners[k++];
    out = mosaic4(sources, local.prompt_quadrant, c, rng, &local.mosaic);
  }
  if (trace) *trace = std::move(local);
  return out;
}

}  // namespace countx::augment
