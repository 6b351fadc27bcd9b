#pragma once

#include <vector>

namespace tactsim {

/// Square banded matrix with `lower` sub- and `upper` super-diagonals, stored
/// LAPACK-gb style with `lower` extra rows for the fill-in created by partial
/// pivoting. Entries outside the band are identically zero.
class BandedMatrix {
public:
    BandedMatrix(int n, int lower, int upper);

    int size() const { return n_; }

    /// Element access within the band. Out-of-band access is a logic error.
    double& at(int row, int col);
    double get(int row, int col) const;
    void add(int row, int col, double v) { at(row, col) += v; }

    /// Solves A x = rhs by banded LU with partial pivoting. Factors in place;
    /// call once per instance. Throws NumericError on a vanishing pivot.
    std::vector<double> solve(std::vector<double> rhs);

private:
    int band_row(int row, int col) const;

    int n_, kl_, ku_;
    int stride_;                 // rows of the band storage: 2*kl + ku + 1
    std::vector<double> ab_;     // column-major band storage
    bool factored_ = false;
};

}  // namespace tactsim
