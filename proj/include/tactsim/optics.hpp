#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tactsim/geometry.hpp"
#include "tactsim/material.hpp"
#include "tactsim/mechanics.hpp"

namespace tactsim {

/// Camera model for the synthetic renders. The sensor window is drawn as a
/// square of window_mm * px_per_mm pixels centred in the image; the defaults
/// map the 16 mm window onto the full 300x300 frame. Set image size to
/// 1280x720 for full-frame renders.
struct RenderConfig {
    int image_width_px = 300;
    int image_height_px = 300;
    double px_per_mm = 18.75;
    double background_value = 6.0;  // dark field away from the trenches
    double baseline_value = 30.0;   // stroke brightness of a rest-width trench
    double gain = 0.704379;         // brightness per unit opening, calibrated
    double gamma = 0.874316;        // camera response exponent, calibrated
    double noise_sigma = 2.0;       // additive Gaussian, 8-bit counts
    std::uint64_t seed = 0;

    void validate() const;
};

/// 8-bit grayscale frame plus enough metadata to interpret it.
struct SyntheticImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    struct Meta {
        double label_x_mm = 0.0;
        double label_y_mm = 0.0;
        double label_z_mm = 0.0;
        double px_per_mm = 0.0;
        double origin_x_px = 0.0;  // window corner in image coordinates
        double origin_y_px = 0.0;
        std::uint64_t seed = 0;
        std::string config_hash;
    } meta;

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Stable fingerprint of the semantic render parameters (excludes the seed).
std::string render_config_hash(const RenderConfig& cfg, const SensorGeometry& geom);

/// Draws the 25 crosses of a deformation field. Trench openings make the
/// strokes wider and brighter: value = baseline + gain*((d0+opening)^gamma -
/// d0^gamma)*255, so a rest-width trench sits exactly at the baseline.
/// Openings below -d0 clamp to a closed (invisible) trench. Strokes are
/// anti-aliased with 2x2 supersampling; noise_sigma adds seeded Gaussian
/// noise. Deterministic for a fixed (field, cfg) pair.
SyntheticImage render(const DeformationField& field, const SensorGeometry& geom,
                      const RenderConfig& cfg);

/// Mean pixel value over a side x side window centred at `center` (pixels).
double brightness_metric(const SyntheticImage& img, std::array<int, 2> center, int side = 60);

/// Brightness-weighted centroid of the stroke pixels in each grid cell, image
/// coordinates. Cells whose brightness span is too small to contain a stroke
/// come back empty.
std::array<std::optional<std::array<double, 2>>, 25> detect_cross_centers(
    const SyntheticImage& img, const SensorGeometry& geom);

struct BrightnessCalibration {
    double gain = 0.0;
    double gamma = 0.0;
    double achieved_ratio = 0.0;
    int iterations = 0;
};

/// Fits gain and gamma so that the central 60x60 brightness ratio between
/// z_hi and z_lo presses at the grid centre hits `target_ratio`, with the
/// brightest stroke pinned at `peak_value`. Bisection on gamma; renders run
/// noise-free during the fit.
BrightnessCalibration calibrate_brightness(const SensorGeometry& geom, const MaterialParams& mat,
                                           RenderConfig cfg, double k_mn_per_mm,
                                           double target_ratio = 3.2, double z_lo_mm = 0.5,
                                           double z_hi_mm = 1.5, double peak_value = 235.0);

/// Binary PGM (P5, maxval 255).
void write_pgm(const SyntheticImage& img, const std::string& path);
SyntheticImage read_pgm(const std::string& path);

/// One-object JSON sidecar with the label, seed and config hash.
void write_image_meta(const SyntheticImage& img, const std::string& path);

}  // namespace tactsim
