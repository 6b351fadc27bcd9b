#include "tactsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include "json.hpp"
#include "tactsim/errors.hpp"
#include "tactsim/hash.hpp"

namespace fs = std::filesystem;

namespace tactsim {

// ============================================================================
// Sample and on-disk format
// ============================================================================

void Sample::validate(double window_mm, double z_max_mm) const {
    if (channels.size() != static_cast<std::size_t>(kChannels) * kSide * kSide)
        throw std::invalid_argument("sample: wrong channel buffer size");
    if (label_x_mm < 0 || label_x_mm > window_mm || label_y_mm < 0 || label_y_mm > window_mm)
        throw std::invalid_argument("sample: label outside the window");
    if (label_z_mm < 0 || label_z_mm > z_max_mm)
        throw std::invalid_argument("sample: displacement label outside the training range");
}

Sample crop_25(const SyntheticImage& img, const SensorGeometry& geom) {
    if (img.meta.px_per_mm <= 0)
        throw std::invalid_argument("crop: image carries no pixel scale metadata");
    Sample s;
    s.channels.resize(static_cast<std::size_t>(Sample::kChannels) * Sample::kSide * Sample::kSide);
    s.label_x_mm = img.meta.label_x_mm;
    s.label_y_mm = img.meta.label_y_mm;
    s.label_z_mm = img.meta.label_z_mm;

    const int side = Sample::kSide;
    for (int row = 1; row <= geom.grid; ++row)
        for (int col = 1; col <= geom.grid; ++col) {
            const double cx = img.meta.origin_x_px + geom.cross_x_mm(col) * img.meta.px_per_mm;
            const double cy = img.meta.origin_y_px + geom.cross_y_mm(row) * img.meta.px_per_mm;
            const int x0 = static_cast<int>(std::lround(cx)) - side / 2;
            const int y0 = static_cast<int>(std::lround(cy)) - side / 2;
            if (x0 < 0 || y0 < 0 || x0 + side > img.width || y0 + side > img.height)
                throw std::invalid_argument(
                    "crop: cell window clipped by the image edge (check px_per_mm)");
            const int c = geom.cell_index(row, col);
            for (int y = 0; y < side; ++y) {
                const std::uint8_t* src = &img.pixels[static_cast<std::size_t>(y0 + y) * img.width + x0];
                std::uint8_t* dst = &s.channels[(static_cast<std::size_t>(c) * side + y) * side];
                std::memcpy(dst, src, side);
            }
        }
    return s;
}

namespace {

constexpr char kSampleMagic[4] = {'T', 'S', 'B', '1'};
constexpr std::uint32_t kSampleVersion = 1;

void put_u32(std::uint8_t* p, std::uint32_t v) {
    p[0] = v & 0xff;
    p[1] = (v >> 8) & 0xff;
    p[2] = (v >> 16) & 0xff;
    p[3] = (v >> 24) & 0xff;
}
std::uint32_t get_u32(const std::uint8_t* p) {
    return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
void put_u16(std::uint8_t* p, std::uint16_t v) {
    p[0] = v & 0xff;
    p[1] = (v >> 8) & 0xff;
}
std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put_f32(std::uint8_t* p, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(p, bits);
}
float get_f32(const std::uint8_t* p) {
    const std::uint32_t bits = get_u32(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void save_sample(const Sample& sample, const std::string& path) {
    std::uint8_t header[32] = {};
    std::memcpy(header, kSampleMagic, 4);
    put_u32(header + 4, kSampleVersion);
    put_u16(header + 8, Sample::kChannels);
    put_u16(header + 10, Sample::kSide);
    put_u16(header + 12, Sample::kSide);
    put_f32(header + 16, static_cast<float>(sample.label_x_mm));
    put_f32(header + 20, static_cast<float>(sample.label_y_mm));
    put_f32(header + 24, static_cast<float>(sample.label_z_mm));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    out.write(reinterpret_cast<const char*>(sample.channels.data()),
              static_cast<std::streamsize>(sample.channels.size()));
    if (!out) throw DataError("short write to " + path);
}

Sample load_sample(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::uint8_t header[32];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (in.gcount() != sizeof header) throw DataError(path + ": truncated header");
    if (std::memcmp(header, kSampleMagic, 4) != 0) throw DataError(path + ": bad magic");
    if (get_u32(header + 4) != kSampleVersion) throw DataError(path + ": unsupported version");
    if (get_u16(header + 8) != Sample::kChannels || get_u16(header + 10) != Sample::kSide ||
        get_u16(header + 12) != Sample::kSide)
        throw DataError(path + ": unexpected sample dimensions");

    Sample s;
    s.label_x_mm = get_f32(header + 16);
    s.label_y_mm = get_f32(header + 20);
    s.label_z_mm = get_f32(header + 24);
    s.channels.resize(static_cast<std::size_t>(Sample::kChannels) * Sample::kSide * Sample::kSide);
    in.read(reinterpret_cast<char*>(s.channels.data()),
            static_cast<std::streamsize>(s.channels.size()));
    if (in.gcount() != static_cast<std::streamsize>(s.channels.size()))
        throw DataError(path + ": truncated channel data");
    return s;
}

// ============================================================================
// Manifest
// ============================================================================

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

void DatasetManifest::validate() const {
    std::vector<std::string> paths;
    paths.reserve(entries.size());
    for (const auto& e : entries) paths.push_back(e.path);
    std::sort(paths.begin(), paths.end());
    if (std::adjacent_find(paths.begin(), paths.end()) != paths.end())
        throw DataError("manifest: duplicate sample path");
}

std::vector<int> DatasetManifest::indices_of(Split s) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].split == s) out.push_back(static_cast<int>(i));
    return out;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    m.validate();
    nlohmann::json j;
    j["format_version"] = m.format_version;
    j["seed"] = m.seed;
    j["config_hash"] = m.config_hash;
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : m.entries) {
        entries.push_back({{"path", e.path},
                           {"label", {e.label_x_mm, e.label_y_mm, e.label_z_mm}},
                           {"seed", e.seed},
                           {"split", split_name(e.split)}});
    }
    j["entries"] = std::move(entries);
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << j.dump(1) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    DatasetManifest m;
    try {
        m.format_version = j.at("format_version").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config_hash = j.at("config_hash").get<std::string>();
        for (const auto& je : j.at("entries")) {
            ManifestEntry e;
            e.path = je.at("path").get<std::string>();
            e.label_x_mm = je.at("label")[0].get<double>();
            e.label_y_mm = je.at("label")[1].get<double>();
            e.label_z_mm = je.at("label")[2].get<double>();
            e.seed = je.at("seed").get<std::uint64_t>();
            const std::string s = je.at("split").get<std::string>();
            e.split = s == "train" ? Split::train : s == "val" ? Split::val : Split::test;
            m.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": malformed manifest: " + e.what());
    }
    m.validate();
    return m;
}

// ============================================================================
// Augmentation
// ============================================================================

void AugmentSpec::validate() const {
    if (max_translation_px < 0 || max_translation_px > 6)
        throw std::invalid_argument("augment: translation must lie in [0, 6] px");
    if (max_rotation_deg < 0 || max_rotation_deg > 10)
        throw std::invalid_argument("augment: rotation must lie in [0, 10] degrees");
    if (probability < 0 || probability > 1)
        throw std::invalid_argument("augment: probability must lie in [0, 1]");
}

namespace {

std::uint8_t channel_median(const Sample& s, int c) {
    int hist[256] = {};
    const std::uint8_t* p = &s.channels[static_cast<std::size_t>(c) * Sample::kSide * Sample::kSide];
    for (int i = 0; i < Sample::kSide * Sample::kSide; ++i) ++hist[p[i]];
    int acc = 0;
    for (int v = 0; v < 256; ++v) {
        acc += hist[v];
        if (acc * 2 >= Sample::kSide * Sample::kSide) return static_cast<std::uint8_t>(v);
    }
    return 0;
}

}  // namespace

Sample rigid_transform(const Sample& sample, double dx, double dy, double theta_deg) {
    const double theta = theta_deg * 0.017453292519943295;
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);
    const double c = Sample::kSide / 2.0;

    Sample out = sample;
    const int side = Sample::kSide;
    for (int ch = 0; ch < Sample::kChannels; ++ch) {
        const std::uint8_t fill = channel_median(sample, ch);
        const std::uint8_t* src =
            &sample.channels[static_cast<std::size_t>(ch) * side * side];
        std::uint8_t* dst = &out.channels[static_cast<std::size_t>(ch) * side * side];
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                // Inverse map: undo the translation, then the rotation.
                const double px = x + 0.5 - c - dx;
                const double py = y + 0.5 - c - dy;
                const double sx = cos_t * px + sin_t * py + c - 0.5;
                const double sy = -sin_t * px + cos_t * py + c - 0.5;
                const int ix = static_cast<int>(std::floor(sx));
                const int iy = static_cast<int>(std::floor(sy));
                double v;
                if (ix < 0 || iy < 0 || ix + 1 >= side || iy + 1 >= side) {
                    v = fill;
                } else {
                    const double fx = sx - ix, fy = sy - iy;
                    const double v00 = src[iy * side + ix], v01 = src[iy * side + ix + 1];
                    const double v10 = src[(iy + 1) * side + ix], v11 = src[(iy + 1) * side + ix + 1];
                    v = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
                }
                dst[y * side + x] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
    }
    return out;
}

Sample augment(const Sample& sample, const AugmentSpec& spec, Rng& rng) {
    spec.validate();
    sample.validate();
    if (rng.uniform() >= spec.probability) return sample;
    const double dx = rng.uniform(-spec.max_translation_px, spec.max_translation_px);
    const double dy = rng.uniform(-spec.max_translation_px, spec.max_translation_px);
    const double theta = rng.uniform(-spec.max_rotation_deg, spec.max_rotation_deg);
    return rigid_transform(sample, dx, dy, theta);
}

Sample augment(const Sample& sample, const AugmentSpec& spec) {
    Rng rng(spec.seed);
    return augment(sample, spec, rng);
}

// ============================================================================
// Split assignment
// ============================================================================

void assign_splits(DatasetManifest& m, std::array<double, 3> fractions, std::uint64_t seed) {
    const double fsum = fractions[0] + fractions[1] + fractions[2];
    if (std::fabs(fsum - 1.0) > 1e-9)
        throw std::invalid_argument("split: fractions must sum to 1");

    // Strata keyed by contact point, iterated in a canonical order.
    std::map<std::pair<long long, long long>, std::vector<int>> strata;
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        const auto key = std::make_pair(std::llround(m.entries[i].label_x_mm * 1e6),
                                        std::llround(m.entries[i].label_y_mm * 1e6));
        strata[key].push_back(static_cast<int>(i));
    }

    double ideal[3] = {};
    long long assigned[3] = {};
    std::uint64_t stratum_index = 0;
    for (auto& [key, idx] : strata) {
        const int n = static_cast<int>(idx.size());
        if (n < 3)
            throw DataError("split: contact point with fewer than 3 samples cannot be stratified");

        // Counts per split that keep the running totals within one sample of
        // the ideal fractions.
        int count[3];
        int total = 0;
        for (int k = 0; k < 3; ++k) {
            ideal[k] += n * fractions[k];
            count[k] = static_cast<int>(std::llround(ideal[k]) - assigned[k]);
            count[k] = std::max(count[k], 1);  // keep every split populated
            total += count[k];
        }
        while (total > n) {
            int k = std::max_element(count, count + 3) - count;
            --count[k];
            --total;
        }
        while (total < n) {
            int k = std::min_element(count, count + 3) - count;
            ++count[k];
            ++total;
        }
        for (int k = 0; k < 3; ++k) assigned[k] += count[k];

        Rng rng(derive_seed(seed, 0xa55ull + stratum_index++));
        rng.shuffle(idx);
        int pos = 0;
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < count[k]; ++j) m.entries[idx[pos++]].split = static_cast<Split>(k);
    }
}

// ============================================================================
// Generation
// ============================================================================

std::vector<std::array<double, 2>> default_contact_grid() {
    std::vector<std::array<double, 2>> pts;
    for (int y = 1; y <= 5; ++y)
        for (int x = 1; x <= 5; ++x) pts.push_back({static_cast<double>(x), static_cast<double>(y)});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) pts.push_back({1.5 + x, 1.5 + y});
    return pts;
}

namespace {

std::string generate_config_hash(const GenerateConfig& cfg) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%d,%d,%.17g,%llu", cfg.contact_points.size(),
                  cfg.z_min_mm, cfg.z_max_mm, cfg.z_steps, cfg.repeats, cfg.k_mn_per_mm,
                  static_cast<unsigned long long>(cfg.seed));
    return hash_hex(fnv1a64(render_config_hash(cfg.render, cfg.geometry) + "|" + buf));
}

}  // namespace

DatasetManifest generate(const GenerateConfig& cfg, const std::string& out_dir) {
    if (cfg.z_steps < 1 || cfg.repeats < 1)
        throw std::invalid_argument("generate: z_steps and repeats must be at least 1");
    if (cfg.z_min_mm < 0 || cfg.z_max_mm > 1.5 || cfg.z_min_mm > cfg.z_max_mm)
        throw std::invalid_argument("generate: z sweep must lie within [0, 1.5] mm");

    DatasetManifest manifest;
    manifest.seed = cfg.seed;
    manifest.config_hash = generate_config_hash(cfg);
    if (cfg.contact_points.empty()) return manifest;

    fs::create_directories(fs::path(out_dir) / "samples");
    manifest.entries.resize(cfg.sample_count());

    std::vector<std::string> written;
    written.reserve(manifest.entries.size());
    try {
        std::size_t index = 0;
        for (const auto& point : cfg.contact_points) {
            for (int zi = 0; zi < cfg.z_steps; ++zi) {
                const double z = cfg.z_steps == 1
                                     ? cfg.z_min_mm
                                     : cfg.z_min_mm + (cfg.z_max_mm - cfg.z_min_mm) * zi /
                                                          (cfg.z_steps - 1);
                const ContactLoad load =
                    ContactLoad::from_displacement(point[0], point[1], z, cfg.k_mn_per_mm);
                const DeformationField field =
                    build_deformation_field(load, cfg.geometry, cfg.material);
                for (int r = 0; r < cfg.repeats; ++r, ++index) {
                    RenderConfig rc = cfg.render;
                    rc.seed = derive_seed(cfg.seed, index);
                    const SyntheticImage img = render(field, cfg.geometry, rc);
                    const Sample sample = crop_25(img, cfg.geometry);

                    char name[64];
                    std::snprintf(name, sizeof name, "samples/sample_%06zu.tsb", index);
                    save_sample(sample, (fs::path(out_dir) / name).string());
                    written.push_back((fs::path(out_dir) / name).string());

                    ManifestEntry& e = manifest.entries[index];
                    e.path = name;
                    e.label_x_mm = field.contact_x_mm;
                    e.label_y_mm = field.contact_y_mm;
                    e.label_z_mm = field.displacement_z_mm;
                    e.seed = rc.seed;
                }
            }
        }
        assign_splits(manifest, cfg.split_fractions, derive_seed(cfg.seed, 0x51c));
        save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    } catch (...) {
        // Leave no partial dataset behind.
        for (const auto& p : written) std::remove(p.c_str());
        std::error_code ec;
        fs::remove(fs::path(out_dir) / "manifest.json", ec);
        throw;
    }
    return manifest;
}

std::vector<Sample> load_all_samples(const DatasetManifest& m, const std::string& manifest_dir) {
    std::vector<Sample> out;
    out.reserve(m.entries.size());
    for (const auto& e : m.entries) out.push_back(load_sample((fs::path(manifest_dir) / e.path).string()));
    return out;
}

}  // namespace tactsim
