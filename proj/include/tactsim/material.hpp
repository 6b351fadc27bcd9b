#pragma once

#include <stdexcept>

namespace tactsim {

/// Film stiffness and layer thicknesses. The effective Young's modulus is a
/// calibration input; the default is typical for a 10:1 PDMS mix.
struct MaterialParams {
    double young_modulus_pa = 1.2e6;      // effective E of the film
    double film_thickness_m = 1.0e-3;     // total sensor body film thickness
    double composite_thickness_m = 230e-6;  // opaque composite layer
    double trench_depth_m = 523e-6;       // micro trench depth

    void validate() const {
        if (young_modulus_pa <= 0 || film_thickness_m <= 0 || composite_thickness_m <= 0 ||
            trench_depth_m <= 0)
            throw std::invalid_argument("material: all parameters must be positive");
        if (trench_depth_m >= film_thickness_m)
            throw std::invalid_argument("material: trench depth must be below the film thickness");
        if (composite_thickness_m >= film_thickness_m)
            throw std::invalid_argument("material: composite layer must be thinner than the film");
    }
};

}  // namespace tactsim
