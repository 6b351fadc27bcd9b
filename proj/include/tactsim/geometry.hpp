#pragma once

#include <stdexcept>

namespace tactsim {

/// Layout of the 5x5 cross-trench sensor film, clamped in a square window.
/// All distances in millimetres. Grid coordinates run 1..5 (half steps allowed
/// for midpoint contacts); cell (1,1) sits at (4, 4) mm from the window corner
/// with the defaults below.
struct SensorGeometry {
    int grid = 5;
    double pitch_mm = 2.0;      // distance between adjacent cross centres
    double cross_arm_mm = 1.5;  // cross length and width
    double kerf_mm = 0.112;     // rest trench width d0
    double window_mm = 16.0;    // clamped square window side

    void validate() const {
        if (grid != 5) throw std::invalid_argument("geometry: grid must be 5x5");
        if (pitch_mm <= 0 || cross_arm_mm <= 0 || kerf_mm <= 0 || window_mm <= 0)
            throw std::invalid_argument("geometry: all lengths must be positive");
        if (pitch_mm * (grid - 1) + cross_arm_mm > window_mm)
            throw std::invalid_argument("geometry: cross grid does not fit inside the window");
        if (kerf_mm >= cross_arm_mm)
            throw std::invalid_argument("geometry: kerf must be smaller than the cross arm");
    }

    /// Margin between the window edge and the first cross centre.
    double margin_mm() const { return 0.5 * (window_mm - pitch_mm * (grid - 1)); }

    /// Grid coordinate (1..5, half steps allowed) to window mm.
    double grid_to_mm(double g) const { return margin_mm() + (g - 1.0) * pitch_mm; }

    /// Rest centre of the cross in column `col` (1-based).
    double cross_x_mm(int col) const { return grid_to_mm(col); }
    double cross_y_mm(int row) const { return grid_to_mm(row); }

    /// Row-major cell index for (row, col), both 1-based.
    int cell_index(int row, int col) const { return (row - 1) * grid + (col - 1); }
};

}  // namespace tactsim
