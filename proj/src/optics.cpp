#include "tactsim/optics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tactsim/errors.hpp"
#include "tactsim/hash.hpp"
#include "tactsim/rng.hpp"

namespace tactsim {

void RenderConfig::validate() const {
    if (image_width_px <= 0 || image_height_px <= 0)
        throw std::invalid_argument("render: image dimensions must be positive");
    if (px_per_mm <= 0) throw std::invalid_argument("render: px_per_mm must be positive");
    if (baseline_value < 0 || baseline_value >= 255)
        throw std::invalid_argument("render: baseline must lie in [0, 255)");
    if (background_value < 0 || background_value > 255)
        throw std::invalid_argument("render: background must lie in [0, 255]");
    if (gain <= 0) throw std::invalid_argument("render: gain must be positive");
    if (gamma <= 0) throw std::invalid_argument("render: gamma must be positive");
    if (noise_sigma < 0) throw std::invalid_argument("render: noise sigma must be non-negative");
}

std::string render_config_hash(const RenderConfig& cfg, const SensorGeometry& geom) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g|%d,%.17g,%.17g,%.17g,%.17g",
                  cfg.image_width_px, cfg.image_height_px, cfg.px_per_mm, cfg.background_value,
                  cfg.baseline_value, cfg.gain, cfg.gamma, cfg.noise_sigma, geom.grid, geom.pitch_mm,
                  geom.cross_arm_mm, geom.kerf_mm, geom.window_mm);
    return hash_hex(fnv1a64(buf));
}

namespace {

// Snap to multiples of 2^-20 px. Sub-microoffset quantisation, but it makes
// stroke centres exact doubles, so mirrored scenes render bit-identically.
double quantize_px(double v) { return std::round(v * 1048576.0) / 1048576.0; }

struct Stroke {
    double cx, cy;          // centre, px
    double half_len;        // along the arm
    double half_width;
    bool horizontal;
    double value;           // composited stroke brightness
};

double stroke_distance(const Stroke& s, double px, double py) {
    const double ax = std::fabs(px - s.cx);
    const double ay = std::fabs(py - s.cy);
    const double dx = (s.horizontal ? ax : ay) - s.half_len;
    const double dy = (s.horizontal ? ay : ax) - s.half_width;
    if (dx > 0.0 && dy > 0.0) return std::sqrt(dx * dx + dy * dy);
    return std::max(dx, dy);
}

}  // namespace

SyntheticImage render(const DeformationField& field, const SensorGeometry& geom,
                      const RenderConfig& cfg) {
    cfg.validate();
    geom.validate();
    if (field.grid != geom.grid) throw std::invalid_argument("render: field/geometry grid mismatch");

    const double win_px = geom.window_mm * cfg.px_per_mm;
    const double origin_x = std::floor(0.5 * (cfg.image_width_px - win_px));
    const double origin_y = std::floor(0.5 * (cfg.image_height_px - win_px));

    SyntheticImage img;
    img.width = cfg.image_width_px;
    img.height = cfg.image_height_px;
    img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 0);
    img.meta.label_x_mm = field.contact_x_mm;
    img.meta.label_y_mm = field.contact_y_mm;
    img.meta.label_z_mm = field.displacement_z_mm;
    img.meta.px_per_mm = cfg.px_per_mm;
    img.meta.origin_x_px = origin_x;
    img.meta.origin_y_px = origin_y;
    img.meta.seed = cfg.seed;
    img.meta.config_hash = render_config_hash(cfg, geom);

    std::vector<double> canvas(img.pixels.size(), cfg.background_value);

    const double kerf = geom.kerf_mm;
    const double kerf_term = std::pow(kerf, cfg.gamma);
    std::vector<Stroke> strokes;
    strokes.reserve(50);
    for (int row = 1; row <= geom.grid; ++row) {
        for (int col = 1; col <= geom.grid; ++col) {
            const int idx = geom.cell_index(row, col);
            const double opening_mm =
                std::max(field.trench_openings[idx].total_m * 1e3, -kerf);
            const double width_mm = kerf + opening_mm;
            if (width_mm <= 0.0) continue;  // fully closed trench

            const double value =
                std::clamp(cfg.baseline_value +
                               cfg.gain * (std::pow(width_mm, cfg.gamma) - kerf_term) * 255.0,
                           0.0, 255.0);

            const double base_x = origin_x + geom.cross_x_mm(col) * cfg.px_per_mm;
            const double base_y = origin_y + geom.cross_y_mm(row) * cfg.px_per_mm;
            const double cx = base_x + quantize_px(field.cross_shifts_m[idx][0] * 1e3 * cfg.px_per_mm);
            const double cy = base_y + quantize_px(field.cross_shifts_m[idx][1] * 1e3 * cfg.px_per_mm);

            const double half_len = 0.5 * geom.cross_arm_mm * cfg.px_per_mm;
            const double half_width = 0.5 * width_mm * cfg.px_per_mm;
            strokes.push_back({cx, cy, half_len, half_width, true, value});
            strokes.push_back({cx, cy, half_len, half_width, false, value});
        }
    }

    // 2x2 supersampling with a half-pixel linear feather per subsample.
    for (const Stroke& s : strokes) {
        const double rx = (s.horizontal ? s.half_len : s.half_width) + 1.5;
        const double ry = (s.horizontal ? s.half_width : s.half_len) + 1.5;
        const int x0 = std::max(0, static_cast<int>(std::floor(s.cx - rx)));
        const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(s.cx + rx)));
        const int y0 = std::max(0, static_cast<int>(std::floor(s.cy - ry)));
        const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(s.cy + ry)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                double alpha = 0.0;
                for (double sy : {0.25, 0.75})
                    for (double sx : {0.25, 0.75}) {
                        const double d = stroke_distance(s, x + sx, y + sy);
                        alpha += std::clamp(0.5 - d, 0.0, 1.0);
                    }
                alpha *= 0.25;
                if (alpha <= 0.0) continue;
                double& px = canvas[static_cast<std::size_t>(y) * img.width + x];
                px = std::max(px, cfg.background_value + alpha * (s.value - cfg.background_value));
            }
        }
    }

    Rng rng(cfg.seed);
    const bool noisy = cfg.noise_sigma > 0.0;
    for (std::size_t i = 0; i < canvas.size(); ++i) {
        double v = canvas[i];
        if (noisy) v += cfg.noise_sigma * rng.normal();
        img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
    return img;
}

double brightness_metric(const SyntheticImage& img, std::array<int, 2> center, int side) {
    if (side <= 0) throw std::invalid_argument("brightness: side must be positive");
    const int x0 = center[0] - side / 2;
    const int y0 = center[1] - side / 2;
    if (x0 < 0 || y0 < 0 || x0 + side > img.width || y0 + side > img.height)
        throw std::invalid_argument("brightness: region outside the image");
    double sum = 0.0;
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) sum += img.at(x, y);
    return sum / (static_cast<double>(side) * side);
}

std::array<std::optional<std::array<double, 2>>, 25> detect_cross_centers(
    const SyntheticImage& img, const SensorGeometry& geom) {
    if (img.meta.px_per_mm <= 0)
        throw std::invalid_argument("detect: image carries no pixel scale metadata");
    std::array<std::optional<std::array<double, 2>>, 25> centers;
    const double half_cell = 0.5 * geom.pitch_mm * img.meta.px_per_mm;

    for (int row = 1; row <= geom.grid; ++row)
        for (int col = 1; col <= geom.grid; ++col) {
            const double cx = img.meta.origin_x_px + geom.cross_x_mm(col) * img.meta.px_per_mm;
            const double cy = img.meta.origin_y_px + geom.cross_y_mm(row) * img.meta.px_per_mm;
            const int x0 = std::max(0, static_cast<int>(cx - half_cell));
            const int x1 = std::min(img.width - 1, static_cast<int>(cx + half_cell));
            const int y0 = std::max(0, static_cast<int>(cy - half_cell));
            const int y1 = std::min(img.height - 1, static_cast<int>(cy + half_cell));

            int lo = 255, hi = 0;
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const int v = img.at(x, y);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            const int idx = geom.cell_index(row, col);
            if (hi - lo < 10) continue;  // no stroke stands out of this cell

            const double thr = lo + 0.5 * (hi - lo);
            double wsum = 0.0, xsum = 0.0, ysum = 0.0;
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double w = img.at(x, y) - thr;
                    if (w <= 0.0) continue;
                    wsum += w;
                    xsum += w * (x + 0.5);
                    ysum += w * (y + 0.5);
                }
            if (wsum > 0.0) centers[idx] = {{xsum / wsum, ysum / wsum}};
        }
    return centers;
}

BrightnessCalibration calibrate_brightness(const SensorGeometry& geom, const MaterialParams& mat,
                                           RenderConfig cfg, double k_mn_per_mm,
                                           double target_ratio, double z_lo_mm, double z_hi_mm,
                                           double peak_value) {
    cfg.noise_sigma = 0.0;
    const ContactLoad lo = ContactLoad::from_displacement(3, 3, z_lo_mm, k_mn_per_mm);
    const ContactLoad hi = ContactLoad::from_displacement(3, 3, z_hi_mm, k_mn_per_mm);
    const DeformationField f_lo = build_deformation_field(lo, geom, mat);
    const DeformationField f_hi = build_deformation_field(hi, geom, mat);

    const double kerf = geom.kerf_mm;
    const double center_cell = geom.cell_index(3, 3);
    const double w_hi = kerf + std::max(f_hi.trench_openings[center_cell].total_m * 1e3, -kerf);

    const std::array<int, 2> center = {cfg.image_width_px / 2, cfg.image_height_px / 2};
    auto ratio_for = [&](double gamma) {
        RenderConfig c = cfg;
        c.gamma = gamma;
        // Pin the brightest stroke at peak_value.
        c.gain = (peak_value - c.baseline_value) /
                 (255.0 * (std::pow(w_hi, gamma) - std::pow(kerf, gamma)));
        const double b_hi = brightness_metric(render(f_hi, geom, c), center);
        const double b_lo = brightness_metric(render(f_lo, geom, c), center);
        return std::pair<double, double>(b_hi / b_lo, c.gain);
    };

    // The ratio grows monotonically with gamma (the low press dims faster
    // than the pinned high press); bisect.
    double g_lo = 0.05, g_hi = 4.0;
    BrightnessCalibration out;
    auto r_lo = ratio_for(g_lo);
    auto r_hi = ratio_for(g_hi);
    if ((r_lo.first - target_ratio) * (r_hi.first - target_ratio) > 0.0)
        throw NumericError("brightness calibration: target ratio not bracketed");
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (g_lo + g_hi);
        const auto r = ratio_for(mid);
        out.iterations = i + 1;
        out.gamma = mid;
        out.gain = r.second;
        out.achieved_ratio = r.first;
        if (std::fabs(r.first - target_ratio) < 1e-4) break;
        if ((r.first - target_ratio) * (r_lo.first - target_ratio) > 0.0) {
            g_lo = mid;
            r_lo = r;
        } else {
            g_hi = mid;
        }
    }
    return out;
}

// ============================================================================
// File formats
// ============================================================================

void write_pgm(const SyntheticImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw DataError("short write to " + path);
}

SyntheticImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw DataError(path + ": not a binary PGM");
    int w = 0, h = 0, maxval = 0;
    in >> w >> h >> maxval;
    if (w <= 0 || h <= 0 || maxval != 255) throw DataError(path + ": unsupported PGM header");
    in.get();  // single whitespace after maxval
    SyntheticImage img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw DataError(path + ": truncated pixel data");
    return img;
}

void write_image_meta(const SyntheticImage& img, const std::string& path) {
    nlohmann::json j;
    j["label"] = {img.meta.label_x_mm, img.meta.label_y_mm, img.meta.label_z_mm};
    j["seed"] = img.meta.seed;
    j["config_hash"] = img.meta.config_hash;
    j["px_per_mm"] = img.meta.px_per_mm;
    j["origin_px"] = {img.meta.origin_x_px, img.meta.origin_y_px};
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

}  // namespace tactsim
