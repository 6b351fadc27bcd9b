#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "tactsim/geometry.hpp"
#include "tactsim/material.hpp"

namespace tactsim {

/// Clamped-clamped strip beam carrying a row (or column) of notches.
/// Lengths in metres. `second_moment_m4` is the intact cross-section value;
/// `notched_second_moment_m4` applies over each notch footprint.
struct BeamSpec {
    double length_m = 16e-3;
    double width_m = 2e-3;
    std::vector<double> notch_positions_m;  // measured from the left support
    double notch_width_d0_m = 0.1e-3;
    double alpha_m = 523e-6;                // stress-free triangle height
    double second_moment_m4 = 0.0;
    double notched_second_moment_m4 = 0.0;

    void validate() const;
};

/// Strip beam matching one grid row/column of the sensor: length = window,
/// width = pitch, notches at the cross centres, alpha = trench depth.
BeamSpec strip_beam(const SensorGeometry& geom, const MaterialParams& mat);

/// Contact described in grid units (1..5, half steps allowed). One of
/// displacement / force is given, the other derived through the calibration
/// coefficient k (mN/mm); see the factory functions.
struct ContactLoad {
    double grid_x = 3.0;
    double grid_y = 3.0;
    double displacement_z_mm = 0.0;
    double force_mn = 0.0;
    double probe_diameter_m = 1e-3;

    void validate() const;

    static ContactLoad from_displacement(double gx, double gy, double z_mm, double k_mn_per_mm);
    static ContactLoad from_force(double gx, double gy, double f_mn, double k_mn_per_mm);
};

/// Piecewise-linear bending moment of a clamped-clamped beam under a single
/// interior point load. Evaluation mirrors through the load for x past it, so
/// symmetric set-ups produce bitwise symmetric values.
struct MomentDiagram {
    struct Sample {
        double position_m;
        double moment_nm;
    };
    std::vector<Sample> samples;  // breakpoints {0, a, L}
    double length_m = 0.0;
    double load_position_m = 0.0;
    double force_n = 0.0;

    double moment_at(double x) const;
    double end_moment_left() const;   // -F a b^2 / L^2
    double end_moment_right() const;  // -F a^2 b / L^2
    double moment_under_load() const;  // 2 F a^2 b^2 / L^3
};

/// Signed widening of one trench. Negative values mean the notch closes;
/// clamping to the rest width happens at render time, not here.
struct TrenchOpening {
    double delta_left_m = 0.0;
    double delta_right_m = 0.0;
    double total_m = 0.0;  // always delta_left + delta_right
};

MomentDiagram fixed_fixed_moment(const BeamSpec& beam, double load_position_m, double force_n);

/// Unit-agnostic variant: any consistent length/force units.
MomentDiagram fixed_fixed_moment_span(double span, double load_position, double force);

/// Notch widening when the load sits on the notch: 3 M / (w E alpha).
double notch_extension_central(double moment_nm, double width_m, double young_modulus_pa,
                               double alpha_m);

/// Off-load notch widening, split 49/22 : 17/22 between the edges. The total
/// equals the central formula exactly.
TrenchOpening notch_extension_intermediate(double moment_nm, double width_m,
                                           double young_modulus_pa, double alpha_m);

/// Flexural strain M y / (I E) at distance y from the neutral axis.
double strain_at(double moment_nm, double fiber_distance_m, double second_moment_m4,
                 double young_modulus_pa);

/// F = k z. Displacement in mm, k in mN/mm, result in mN.
double force_from_displacement(double z_mm, double k_mn_per_mm);

/// Closed-form deflection of the uniform clamped-clamped strip under the
/// diagram's point load, positive toward the load. Like the diagram itself,
/// evaluation mirrors past the load for exact symmetry.
class StripDeflection {
public:
    StripDeflection(const MomentDiagram& diagram, double flexural_rigidity_nm2);

    double value_m(double x) const;
    double slope(double x) const;
    double peak_m() const;  // maximum deflection over the span

private:
    double half_value(double x, double end_moment, double reaction) const;
    double half_slope(double x, double end_moment, double reaction) const;

    double length_, load_pos_, ei_;
    double moment_left_, reaction_left_;    // left-end statics
    double moment_right_, reaction_right_;  // of the mirrored beam
    double peak_;
};

/// Finite-difference solution of the notched clamped-clamped beam.
struct FdBeamSolution {
    std::vector<double> positions_m;
    std::vector<double> deflection_m;         // positive toward the load
    std::vector<TrenchOpening> openings;      // one per notch, beam order
};

/// Solves (E I(x) w'')'' = q with both ends clamped on n_nodes uniform nodes.
/// I(x) drops to the notched value over each notch footprint (harmonic cell
/// averages keep the notch compliance exact on coarse grids). Openings are the
/// relative axial surface displacement across each footprint, measured half a
/// film thickness from the neutral axis. Independent of the closed forms
/// above; used to validate them.
FdBeamSolution fd_beam_oracle(const BeamSpec& beam, const MaterialParams& mat,
                              double load_position_m, double force_n, int n_nodes);

/// Deformation of the full film under one contact: per-trench openings,
/// cross-centre lateral shifts and the blended deflection surface.
struct DeformationField {
    int grid = 5;
    int resolution = 161;       // deflection nodes per axis
    double window_mm = 16.0;
    double contact_x_mm = 0.0;
    double contact_y_mm = 0.0;
    double displacement_z_mm = 0.0;
    double force_mn = 0.0;

    std::vector<double> deflection_m;  // resolution^2, row-major in y then x
    std::array<TrenchOpening, 25> trench_openings{};   // row-major cells
    std::array<std::array<double, 2>, 25> cross_shifts_m{};  // (dx, dy)

    double deflection_at(int ix, int iy) const { return deflection_m[iy * resolution + ix]; }
};

/// Builds the field by treating the grid row and column through the contact
/// point as independent strip beams and blending their profiles.
DeformationField build_deformation_field(const ContactLoad& load, const SensorGeometry& geom,
                                         const MaterialParams& mat, int resolution = 161);

/// CSV export: position_mm_x, position_mm_y, deflection_m.
void write_field_csv(const DeformationField& field, std::ostream& out);
void write_field_csv(const DeformationField& field, const std::string& path);

/// 5x5 table of total openings, metres, one grid row per line.
void write_opening_table(const DeformationField& field, std::ostream& out);

}  // namespace tactsim
