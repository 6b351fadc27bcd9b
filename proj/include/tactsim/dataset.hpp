#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tactsim/geometry.hpp"
#include "tactsim/material.hpp"
#include "tactsim/optics.hpp"
#include "tactsim/rng.hpp"

namespace tactsim {

/// One training example: the 25 per-cross crops stacked as channels plus the
/// contact label in window millimetres.
struct Sample {
    static constexpr int kChannels = 25;
    static constexpr int kSide = 60;

    std::vector<std::uint8_t> channels;  // kChannels * kSide * kSide, channel-major
    double label_x_mm = 0.0;
    double label_y_mm = 0.0;
    double label_z_mm = 0.0;

    std::uint8_t at(int c, int y, int x) const {
        return channels[(static_cast<std::size_t>(c) * kSide + y) * kSide + x];
    }
    void validate(double window_mm = 16.0, double z_max_mm = 1.5) const;
};

/// Cuts the frame into 25 tiles of kSide x kSide pixels, channel index
/// (row-1)*5 + (col-1), each centred on the cell's rest cross centre.
Sample crop_25(const SyntheticImage& img, const SensorGeometry& geom);

/// Fixed 32-byte header (magic, version, dims, label) + raw channel bytes,
/// little endian.
void save_sample(const Sample& sample, const std::string& path);
Sample load_sample(const std::string& path);

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };
const char* split_name(Split s);

struct ManifestEntry {
    std::string path;  // relative to the manifest directory
    double label_x_mm = 0.0;
    double label_y_mm = 0.0;
    double label_z_mm = 0.0;
    std::uint64_t seed = 0;
    Split split = Split::train;
};

struct DatasetManifest {
    int format_version = 1;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<ManifestEntry> entries;

    void validate() const;  // rejects duplicate paths
    std::vector<int> indices_of(Split s) const;
};

void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

/// Camera-jitter augmentation: one rigid transform per sample, identical
/// across channels, labels untouched.
struct AugmentSpec {
    double max_translation_px = 4.0;
    double max_rotation_deg = 8.0;
    double probability = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

Sample augment(const Sample& sample, const AugmentSpec& spec);
Sample augment(const Sample& sample, const AugmentSpec& spec, Rng& rng);

/// The resample behind augment(): rotate by theta about the tile centre, then
/// translate; bilinear interpolation with the channel median as fill.
Sample rigid_transform(const Sample& sample, double dx_px, double dy_px, double theta_deg);

/// Assigns train/val/test stratified by contact point: every (x, y) location
/// lands in all three splits and the global counts match the fractions to
/// within one sample.
void assign_splits(DatasetManifest& m, std::array<double, 3> fractions, std::uint64_t seed);

struct GenerateConfig {
    SensorGeometry geometry;
    MaterialParams material;
    RenderConfig render;
    std::vector<std::array<double, 2>> contact_points;  // grid units
    double z_min_mm = 0.25;
    double z_max_mm = 1.5;
    int z_steps = 11;
    int repeats = 10;
    double k_mn_per_mm = 85.4;
    std::array<double, 3> split_fractions = {0.70, 0.15, 0.15};
    std::uint64_t seed = 1;

    std::size_t sample_count() const {
        return contact_points.size() * static_cast<std::size_t>(z_steps) * repeats;
    }
};

/// The 25 cross centres plus the 16 interior midpoints.
std::vector<std::array<double, 2>> default_contact_grid();

/// Renders and writes every sample under out_dir/samples plus a manifest with
/// split assignment. Fully reproducible from cfg.seed; cleans up partial
/// output if a write fails.
DatasetManifest generate(const GenerateConfig& cfg, const std::string& out_dir);

/// Samples of a manifest loaded into memory, in entry order.
std::vector<Sample> load_all_samples(const DatasetManifest& m, const std::string& manifest_dir);

}  // namespace tactsim
