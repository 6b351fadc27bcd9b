#include "tactsim/dataset.hpp"

#include <cstdio>

#include "tactsim/errors.hpp"
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"

using namespace tactsim;
namespace fs = std::filesystem;

namespace {

const SensorGeometry kGeom;
const MaterialParams kMat;

SyntheticImage render_at(double gx, double gy, double z, std::uint64_t seed = 0,
                         double sigma = 0.0) {
    RenderConfig cfg;
    cfg.noise_sigma = sigma;
    cfg.seed = seed;
    const auto field = build_deformation_field(
        ContactLoad::from_displacement(gx, gy, z, 85.4), kGeom, kMat);
    return render(field, kGeom, cfg);
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("crop_25 channel order and content") {
    SUBCASE("uniform image gives 25 uniform channels") {
        SyntheticImage img;
        img.width = img.height = 300;
        img.pixels.assign(300 * 300, 77);
        img.meta.px_per_mm = 18.75;
        img.meta.label_z_mm = 1.0;
        img.meta.label_x_mm = img.meta.label_y_mm = 8.0;
        const Sample s = crop_25(img, kGeom);
        for (int c = 0; c < 25; ++c)
            for (int y = 0; y < 60; y += 13)
                for (int x = 0; x < 60; x += 13) CHECK(s.at(c, y, x) == 77);
    }

    SUBCASE("a single lit cross lands in its row-major channel") {
        SyntheticImage img;
        img.width = img.height = 300;
        img.pixels.assign(300 * 300, 0);
        img.meta.px_per_mm = 18.75;
        img.meta.label_x_mm = img.meta.label_y_mm = 8.0;
        // Light a small square at the rest centre of cell row 2, col 4.
        const int cx = static_cast<int>(kGeom.cross_x_mm(4) * 18.75);
        const int cy = static_cast<int>(kGeom.cross_y_mm(2) * 18.75);
        for (int y = cy - 5; y <= cy + 5; ++y)
            for (int x = cx - 5; x <= cx + 5; ++x) img.pixels[y * 300 + x] = 200;

        const Sample s = crop_25(img, kGeom);
        const int expected_channel = (2 - 1) * 5 + (4 - 1);
        double best = -1;
        int best_channel = -1;
        for (int c = 0; c < 25; ++c) {
            double mean = 0;
            for (int y = 0; y < 60; ++y)
                for (int x = 0; x < 60; ++x) mean += s.at(c, y, x);
            if (mean > best) {
                best = mean;
                best_channel = c;
            }
        }
        CHECK(best_channel == expected_channel);
    }

    SUBCASE("central press is brightest in channel 12") {
        const Sample s = crop_25(render_at(3, 3, 1.2), kGeom);
        double means[25] = {};
        for (int c = 0; c < 25; ++c)
            for (int y = 0; y < 60; ++y)
                for (int x = 0; x < 60; ++x) means[c] += s.at(c, y, x);
        for (int c = 0; c < 25; ++c)
            if (c != 12) CHECK(means[12] > means[c]);
    }

    SUBCASE("crop windows reassemble into the source pixels") {
        const SyntheticImage img = render_at(2, 4, 0.8);
        const Sample s = crop_25(img, kGeom);
        std::vector<int> canvas(img.pixels.size(), -1);
        for (int row = 1; row <= 5; ++row)
            for (int col = 1; col <= 5; ++col) {
                const int c = kGeom.cell_index(row, col);
                const int x0 = static_cast<int>(std::lround(kGeom.cross_x_mm(col) * 18.75)) - 30;
                const int y0 = static_cast<int>(std::lround(kGeom.cross_y_mm(row) * 18.75)) - 30;
                for (int y = 0; y < 60; ++y)
                    for (int x = 0; x < 60; ++x) canvas[(y0 + y) * img.width + x0 + x] = s.at(c, y, x);
            }
        for (std::size_t i = 0; i < canvas.size(); ++i)
            if (canvas[i] >= 0) CHECK(canvas[i] == img.pixels[i]);
    }

    SUBCASE("clipped cell window is a domain error") {
        SyntheticImage img;
        img.width = img.height = 200;  // too small for the 16 mm window at 18.75 px/mm
        img.pixels.assign(200 * 200, 0);
        img.meta.px_per_mm = 18.75;
        img.meta.origin_x_px = img.meta.origin_y_px = -50;
        CHECK_THROWS_AS(crop_25(img, kGeom), std::invalid_argument);
    }
}

TEST_CASE("tsb sample files round trip bit exactly") {
    TempDir dir("tactsim_tsb_test");
    const Sample s = crop_25(render_at(3.5, 4.5, 1.0, 7, 2.0), kGeom);
    const std::string path = (dir.path / "a.tsb").string();
    save_sample(s, path);
    const Sample back = load_sample(path);
    CHECK(back.channels == s.channels);
    CHECK(back.label_x_mm == doctest::Approx(s.label_x_mm).epsilon(1e-7));
    CHECK(back.label_y_mm == doctest::Approx(s.label_y_mm).epsilon(1e-7));
    CHECK(back.label_z_mm == doctest::Approx(s.label_z_mm).epsilon(1e-7));

    SUBCASE("corrupt magic is rejected") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
        f.close();
        CHECK_THROWS_AS(load_sample(path), DataError);
    }

    SUBCASE("truncated payload is rejected") {
        fs::resize_file(path, 32 + 100);
        CHECK_THROWS_AS(load_sample(path), DataError);
    }
}

TEST_CASE("augmentation") {
    const Sample s = crop_25(render_at(3, 3, 1.0), kGeom);

    SUBCASE("probability zero is the identity") {
        AugmentSpec spec;
        spec.probability = 0.0;
        const Sample out = augment(s, spec);
        CHECK(out.channels == s.channels);
    }

    SUBCASE("translating a uniform channel changes nothing") {
        Sample flat = s;
        std::fill(flat.channels.begin(), flat.channels.end(), 93);
        AugmentSpec spec;
        spec.probability = 1.0;
        spec.max_translation_px = 2.0;
        spec.max_rotation_deg = 0.0;
        const Sample out = augment(flat, spec);
        CHECK(out.channels == flat.channels);
    }

    SUBCASE("labels are never touched") {
        AugmentSpec spec;
        spec.probability = 1.0;
        spec.seed = 5;
        const Sample out = augment(s, spec);
        CHECK(out.label_x_mm == s.label_x_mm);
        CHECK(out.label_y_mm == s.label_y_mm);
        CHECK(out.label_z_mm == s.label_z_mm);
    }

    SUBCASE("rotation round trip stays within interpolation error") {
        const Sample there = rigid_transform(s, 0.0, 0.0, 8.0);
        const Sample back = rigid_transform(there, 0.0, 0.0, -8.0);
        double diff = 0.0;
        for (std::size_t i = 0; i < back.channels.size(); ++i)
            diff += std::abs(static_cast<int>(back.channels[i]) - static_cast<int>(s.channels[i]));
        diff /= static_cast<double>(back.channels.size());
        CHECK(diff < 2.0);
    }

    SUBCASE("integer translation round trip is lossless away from the border") {
        const Sample there = rigid_transform(s, 3.0, -2.0, 0.0);
        const Sample back = rigid_transform(there, -3.0, 2.0, 0.0);
        for (int c = 0; c < 25; ++c)
            for (int y = 5; y < 55; ++y)
                for (int x = 5; x < 55; ++x) CHECK(back.at(c, y, x) == s.at(c, y, x));
    }
}

TEST_CASE("split assignment") {
    // Synthetic manifest: 10 contact points x 10 samples.
    DatasetManifest m;
    for (int p = 0; p < 10; ++p)
        for (int i = 0; i < 10; ++i) {
            ManifestEntry e;
            e.path = "samples/sample_" + std::to_string(p * 10 + i) + ".tsb";
            e.label_x_mm = 4.0 + p;
            e.label_y_mm = 6.0;
            e.label_z_mm = 0.5;
            m.entries.push_back(e);
        }

    SUBCASE("70/15/15 counts and stratification") {
        assign_splits(m, {0.70, 0.15, 0.15}, 11);
        const auto train = m.indices_of(Split::train);
        const auto val = m.indices_of(Split::val);
        const auto test = m.indices_of(Split::test);
        CHECK(train.size() == 70);
        CHECK(val.size() == 15);
        CHECK(test.size() == 15);

        std::map<double, std::set<int>> seen;
        for (const auto& e : m.entries) seen[e.label_x_mm].insert(static_cast<int>(e.split));
        for (const auto& [x, splits] : seen) CHECK(splits.size() == 3);
    }

    SUBCASE("same seed reproduces the assignment") {
        DatasetManifest m2 = m;
        assign_splits(m, {0.70, 0.15, 0.15}, 42);
        assign_splits(m2, {0.70, 0.15, 0.15}, 42);
        for (std::size_t i = 0; i < m.entries.size(); ++i)
            CHECK(m.entries[i].split == m2.entries[i].split);
    }

    SUBCASE("fractions must sum to one; tiny strata are rejected") {
        CHECK_THROWS_AS(assign_splits(m, {0.5, 0.2, 0.2}, 1), std::invalid_argument);
        DatasetManifest tiny;
        for (int i = 0; i < 2; ++i) {
            ManifestEntry e;
            e.path = "s" + std::to_string(i);
            e.label_x_mm = 4.0;
            tiny.entries.push_back(e);
        }
        CHECK_THROWS_AS(assign_splits(tiny, {0.70, 0.15, 0.15}, 1), DataError);
    }
}

TEST_CASE("generation") {
    SUBCASE("default contact grid has 25 centres and 16 midpoints") {
        const auto grid = default_contact_grid();
        CHECK(grid.size() == 41);
        GenerateConfig cfg;
        cfg.contact_points = grid;
        CHECK(cfg.sample_count() == 4510);  // 41 * 11 * 10
    }

    SUBCASE("empty contact grid produces an empty manifest and no files") {
        TempDir dir("tactsim_gen_empty");
        GenerateConfig cfg;
        cfg.contact_points.clear();
        const DatasetManifest m = generate(cfg, dir.path.string());
        CHECK(m.entries.empty());
        CHECK(!fs::exists(dir.path / "manifest.json"));
    }

    SUBCASE("small run: files exist, splits cover points, reload matches") {
        TempDir dir("tactsim_gen_small");
        GenerateConfig cfg;
        cfg.contact_points = {{2, 2}, {3, 3}, {4, 4}};
        cfg.z_steps = 2;
        cfg.repeats = 3;
        cfg.seed = 123;
        const DatasetManifest m = generate(cfg, dir.path.string());
        CHECK(m.entries.size() == 18);
        for (const auto& e : m.entries) CHECK(fs::exists(dir.path / e.path));

        const DatasetManifest loaded = load_manifest((dir.path / "manifest.json").string());
        CHECK(loaded.entries.size() == m.entries.size());
        CHECK(loaded.config_hash == m.config_hash);
        for (std::size_t i = 0; i < m.entries.size(); ++i) {
            CHECK(loaded.entries[i].path == m.entries[i].path);
            CHECK(loaded.entries[i].split == m.entries[i].split);
            CHECK(loaded.entries[i].seed == m.entries[i].seed);
        }

        const auto samples = load_all_samples(loaded, dir.path.string());
        CHECK(samples.size() == 18);
        for (const auto& s : samples) s.validate();
    }

    SUBCASE("identical seeds give byte-identical sample files") {
        TempDir a("tactsim_gen_a"), b("tactsim_gen_b");
        GenerateConfig cfg;
        cfg.contact_points = {{3, 3}};
        cfg.z_steps = 2;
        cfg.repeats = 2;
        cfg.render.noise_sigma = 2.0;
        cfg.seed = 99;
        generate(cfg, a.path.string());
        generate(cfg, b.path.string());
        for (int i = 0; i < 4; ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "samples/sample_%06d.tsb", i);
            std::ifstream fa(a.path / name, std::ios::binary);
            std::ifstream fb(b.path / name, std::ios::binary);
            const std::string ba((std::istreambuf_iterator<char>(fa)), {});
            const std::string bb((std::istreambuf_iterator<char>(fb)), {});
            CHECK(ba == bb);
            CHECK(!ba.empty());
        }
    }
}
