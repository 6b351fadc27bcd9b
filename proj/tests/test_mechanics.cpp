#include "tactsim/mechanics.hpp"

#include <cmath>

#include "doctest.h"
#include "tactsim/rng.hpp"

using namespace tactsim;

namespace {

BeamSpec default_beam() { return strip_beam(SensorGeometry{}, MaterialParams{}); }

}  // namespace

TEST_CASE("fixed-fixed moment diagram") {
    const BeamSpec beam = default_beam();
    const double L = beam.length_m;

    SUBCASE("zero load gives zero moments everywhere") {
        const MomentDiagram d = fixed_fixed_moment(beam, L / 2, 0.0);
        for (double x : {0.0, 0.25 * L, 0.5 * L, 0.8 * L, L}) CHECK(d.moment_at(x) == 0.0);
    }

    SUBCASE("central 80 mN load: moment under load is F L / 8") {
        const double F = 80e-3;
        const MomentDiagram d = fixed_fixed_moment(beam, L / 2, F);
        CHECK(d.moment_under_load() == doctest::Approx(F * L / 8).epsilon(1e-12));
        CHECK(d.moment_under_load() == doctest::Approx(0.16e-3).epsilon(1e-12));
        CHECK(d.end_moment_left() == doctest::Approx(-F * L / 8).epsilon(1e-12));
        CHECK(d.end_moment_right() == doctest::Approx(-F * L / 8).epsilon(1e-12));
        CHECK(d.moment_at(L / 2) == doctest::Approx(d.moment_under_load()).epsilon(1e-12));
    }

    SUBCASE("quarter-span load: the nearer support carries the larger end moment") {
        const MomentDiagram d = fixed_fixed_moment(beam, L / 4, 50e-3);
        CHECK(std::fabs(d.end_moment_left()) > std::fabs(d.end_moment_right()));
    }

    SUBCASE("end moments are nonzero for any interior load") {
        for (double a : {0.1 * L, 0.33 * L, 0.75 * L}) {
            const MomentDiagram d = fixed_fixed_moment(beam, a, 10e-3);
            CHECK(d.end_moment_left() < 0.0);
            CHECK(d.end_moment_right() < 0.0);
        }
    }

    SUBCASE("diagram is piecewise linear between breakpoints") {
        const MomentDiagram d = fixed_fixed_moment(beam, 0.3 * L, 40e-3);
        const double xa = 0.1 * L, xb = 0.25 * L, mid = 0.5 * (xa + xb);
        CHECK(d.moment_at(mid) ==
              doctest::Approx(0.5 * (d.moment_at(xa) + d.moment_at(xb))).epsilon(1e-12));
    }

    SUBCASE("load on or beyond a support is rejected") {
        CHECK_THROWS_AS(fixed_fixed_moment(beam, 0.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(fixed_fixed_moment(beam, L, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(fixed_fixed_moment(beam, -0.1, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(fixed_fixed_moment(beam, L / 2, -1.0), std::invalid_argument);
    }
}

TEST_CASE("notch extension closed forms") {
    SUBCASE("central: zero moment, hand value, alpha scaling") {
        CHECK(notch_extension_central(0.0, 1e-3, 1e6, 0.5e-3) == 0.0);
        CHECK(notch_extension_central(1e-6, 1e-3, 1e6, 0.5e-3) == doctest::Approx(6e-6).epsilon(1e-12));
        const double d1 = notch_extension_central(2e-6, 1.5e-3, 2e6, 0.4e-3);
        const double d2 = notch_extension_central(2e-6, 1.5e-3, 2e6, 0.8e-3);
        CHECK(d1 == doctest::Approx(2.0 * d2).epsilon(1e-12));
    }

    SUBCASE("intermediate: zero moment and the 49:17 edge ratio") {
        const TrenchOpening zero = notch_extension_intermediate(0.0, 1e-3, 1e6, 0.5e-3);
        CHECK(zero.delta_left_m == 0.0);
        CHECK(zero.delta_right_m == 0.0);
        const TrenchOpening o = notch_extension_intermediate(3e-6, 2e-3, 1.2e6, 523e-6);
        CHECK(o.delta_left_m / o.delta_right_m == doctest::Approx(49.0 / 17.0).epsilon(1e-12));
    }

    SUBCASE("intermediate total equals the central formula, 1000 random draws") {
        Rng rng(20240817);
        for (int i = 0; i < 1000; ++i) {
            const double m = rng.uniform(-5e-4, 5e-4);
            const double w = rng.uniform(0.2e-3, 5e-3);
            const double e = rng.uniform(1e5, 5e7);
            const double alpha = rng.uniform(0.05e-3, 2e-3);
            const TrenchOpening o = notch_extension_intermediate(m, w, e, alpha);
            const double central = notch_extension_central(m, w, e, alpha);
            CHECK(o.total_m == doctest::Approx(central).epsilon(1e-12));
            CHECK(o.total_m == o.delta_left_m + o.delta_right_m);
        }
    }

    SUBCASE("linearity in the moment") {
        Rng rng(7);
        for (int i = 0; i < 100; ++i) {
            const double m = rng.uniform(-1e-4, 1e-4);
            const double c = rng.uniform(0.5, 8.0);
            CHECK(notch_extension_central(c * m, 2e-3, 1.2e6, 523e-6) ==
                  doctest::Approx(c * notch_extension_central(m, 2e-3, 1.2e6, 523e-6))
                      .epsilon(1e-12));
        }
    }

    SUBCASE("invalid parameters are rejected") {
        CHECK_THROWS_AS(notch_extension_central(1e-6, 0.0, 1e6, 1e-3), std::invalid_argument);
        CHECK_THROWS_AS(notch_extension_central(1e-6, 1e-3, -1e6, 1e-3), std::invalid_argument);
        CHECK_THROWS_AS(notch_extension_intermediate(1e-6, 1e-3, 1e6, 0.0), std::invalid_argument);
    }
}

TEST_CASE("flexural strain") {
    CHECK(strain_at(1e-6, 0.0, 8.33e-14, 1e6) == 0.0);
    CHECK(strain_at(1e-6, 0.25e-3, 8.33e-14, 1e6) == doctest::Approx(3.0e-3).epsilon(1e-3));
    const double e1 = strain_at(2e-6, 0.2e-3, 5e-14, 2e6);
    const double e2 = strain_at(2e-6, 0.4e-3, 5e-14, 2e6);
    CHECK(e2 == doctest::Approx(2.0 * e1).epsilon(1e-12));
    CHECK_THROWS_AS(strain_at(1e-6, 1e-3, 0.0, 1e6), std::invalid_argument);
    CHECK_THROWS_AS(strain_at(1e-6, 1e-3, 1e-14, -1.0), std::invalid_argument);
}

TEST_CASE("force from displacement") {
    CHECK(force_from_displacement(0.0, 85.4) == 0.0);
    CHECK(force_from_displacement(1.0, 85.4) == doctest::Approx(85.4).epsilon(1e-12));
    const double f = force_from_displacement(0.1, 85.4);
    CHECK(f == doctest::Approx(8.54).epsilon(1e-12));
    CHECK(f < 10.0);  // sub-10 mN regime below 0.12 mm displacement
    CHECK_THROWS_AS(force_from_displacement(-0.1, 85.4), std::invalid_argument);
    CHECK_THROWS_AS(force_from_displacement(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("strip deflection closed form") {
    const BeamSpec beam = default_beam();
    const double ei = MaterialParams{}.young_modulus_pa * beam.second_moment_m4;
    const double L = beam.length_m;

    SUBCASE("clamped boundary conditions hold at both ends") {
        const StripDeflection w(fixed_fixed_moment(beam, 0.37 * L, 60e-3), ei);
        CHECK(w.value_m(0.0) == 0.0);
        CHECK(w.value_m(L) == 0.0);
        CHECK(w.slope(0.0) == 0.0);
        CHECK(w.slope(L) == 0.0);
    }

    SUBCASE("central point load peak matches F L^3 / (192 EI)") {
        const double F = 50e-3;
        const StripDeflection w(fixed_fixed_moment(beam, L / 2, F), ei);
        CHECK(w.peak_m() == doctest::Approx(F * L * L * L / (192.0 * ei)).epsilon(1e-12));
        CHECK(w.value_m(L / 2) == doctest::Approx(w.peak_m()).epsilon(1e-12));
    }

    SUBCASE("profile is mirror symmetric for a central load") {
        const StripDeflection w(fixed_fixed_moment(beam, L / 2, 20e-3), ei);
        for (double f : {0.1, 0.21, 0.4}) {
            CHECK(w.value_m(f * L) == doctest::Approx(w.value_m(L - f * L)).epsilon(1e-12));
            CHECK(w.slope(f * L) == doctest::Approx(-w.slope(L - f * L)).epsilon(1e-12));
        }
    }
}

namespace {

int rot90_index(int idx) {
    // (row, col) -> (col, grid+1-row), all zero-based here.
    const int row = idx / 5, col = idx % 5;
    return col * 5 + (4 - row);
}

}  // namespace

TEST_CASE("deformation field") {
    const SensorGeometry geom;
    const MaterialParams mat;

    SUBCASE("zero displacement gives an identically zero field") {
        const ContactLoad load = ContactLoad::from_displacement(3, 3, 0.0, 85.4);
        const DeformationField f = build_deformation_field(load, geom, mat, 41);
        for (double d : f.deflection_m) CHECK(d == 0.0);
        for (const auto& o : f.trench_openings) CHECK(o.total_m == 0.0);
        for (const auto& s : f.cross_shifts_m) {
            CHECK(s[0] == 0.0);
            CHECK(s[1] == 0.0);
        }
    }

    SUBCASE("deflection vanishes on the clamped boundary and peaks at displacement") {
        const ContactLoad load = ContactLoad::from_displacement(3, 3, 1.0, 85.4);
        const DeformationField f = build_deformation_field(load, geom, mat, 81);
        const int n = f.resolution;
        double peak = 0.0;
        for (int i = 0; i < n; ++i) {
            CHECK(f.deflection_at(i, 0) == 0.0);
            CHECK(f.deflection_at(i, n - 1) == 0.0);
            CHECK(f.deflection_at(0, i) == 0.0);
            CHECK(f.deflection_at(n - 1, i) == 0.0);
        }
        for (double d : f.deflection_m) peak = std::max(peak, d);
        CHECK(peak == doctest::Approx(1.0e-3).epsilon(1e-9));
    }

    SUBCASE("central load: field invariant under 90 degree rotation") {
        const ContactLoad load = ContactLoad::from_displacement(3, 3, 1.0, 85.4);
        const DeformationField f = build_deformation_field(load, geom, mat, 81);
        const int n = f.resolution;
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                const double a = f.deflection_at(ix, iy);
                const double b = f.deflection_at(n - 1 - iy, ix);  // rotated sample
                CHECK(a == doctest::Approx(b).epsilon(1e-9));
            }
        for (int idx = 0; idx < 25; ++idx) {
            const int r = rot90_index(idx);
            CHECK(f.trench_openings[idx].total_m ==
                  doctest::Approx(f.trench_openings[r].total_m).epsilon(1e-9));
            // Shift vectors rotate with the grid: (dx, dy) -> (-dy, dx).
            CHECK(f.cross_shifts_m[r][0] == doctest::Approx(-f.cross_shifts_m[idx][1]).epsilon(1e-9));
            CHECK(f.cross_shifts_m[r][1] == doctest::Approx(f.cross_shifts_m[idx][0]).epsilon(1e-9));
        }
    }

    SUBCASE("off-centre load: nearer trenches open more") {
        const ContactLoad load = ContactLoad::from_displacement(2, 2, 1.0, 85.4);
        const DeformationField f = build_deformation_field(load, geom, mat, 41);
        CHECK(f.trench_openings[geom.cell_index(1, 1)].total_m >
              f.trench_openings[geom.cell_index(5, 5)].total_m);
        CHECK(f.trench_openings[geom.cell_index(2, 2)].total_m >
              f.trench_openings[geom.cell_index(1, 1)].total_m);
    }

    SUBCASE("mirror-image loads produce mirror-image openings") {
        const ContactLoad l22 = ContactLoad::from_displacement(2, 2, 0.8, 85.4);
        const ContactLoad l44 = ContactLoad::from_displacement(4, 4, 0.8, 85.4);
        const DeformationField f22 = build_deformation_field(l22, geom, mat, 41);
        const DeformationField f44 = build_deformation_field(l44, geom, mat, 41);
        for (int row = 1; row <= 5; ++row)
            for (int col = 1; col <= 5; ++col) {
                const double a = f22.trench_openings[geom.cell_index(row, col)].total_m;
                const double b = f44.trench_openings[geom.cell_index(6 - row, 6 - col)].total_m;
                CHECK(a == doctest::Approx(b).epsilon(1e-9));
            }
    }

    SUBCASE("doubling the force doubles every opening") {
        const ContactLoad l1 = ContactLoad::from_force(2.5, 3, 30.0, 85.4);
        const ContactLoad l2 = ContactLoad::from_force(2.5, 3, 60.0, 85.4);
        const DeformationField f1 = build_deformation_field(l1, geom, mat, 41);
        const DeformationField f2 = build_deformation_field(l2, geom, mat, 41);
        for (int i = 0; i < 25; ++i) {
            CHECK(f2.trench_openings[i].total_m ==
                  doctest::Approx(2.0 * f1.trench_openings[i].total_m).epsilon(1e-12));
            CHECK(f2.trench_openings[i].delta_left_m ==
                  doctest::Approx(2.0 * f1.trench_openings[i].delta_left_m).epsilon(1e-12));
        }
    }

    SUBCASE("shifts point away from the contact") {
        const ContactLoad load = ContactLoad::from_displacement(3, 3, 1.0, 85.4);
        const DeformationField f = build_deformation_field(load, geom, mat, 41);
        // Cross (3,2) sits left of the centre contact: it should shift further left.
        CHECK(f.cross_shifts_m[geom.cell_index(3, 2)][0] < 0.0);
        CHECK(f.cross_shifts_m[geom.cell_index(3, 4)][0] > 0.0);
        CHECK(f.cross_shifts_m[geom.cell_index(2, 3)][1] < 0.0);
        // No lateral shift at the contact point itself.
        CHECK(f.cross_shifts_m[geom.cell_index(3, 3)][0] == doctest::Approx(0.0).epsilon(1e-15));
    }

    SUBCASE("invalid loads are rejected") {
        CHECK_THROWS_AS(ContactLoad::from_displacement(0.5, 3, 1.0, 85.4), std::invalid_argument);
        CHECK_THROWS_AS(ContactLoad::from_displacement(3, 3, 2.0, 85.4), std::invalid_argument);
        CHECK_THROWS_AS(ContactLoad::from_displacement(3.25, 3, 1.0, 85.4), std::invalid_argument);
    }
}
