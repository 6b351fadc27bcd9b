#include "tactsim/banded.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "tactsim/errors.hpp"

namespace tactsim {

BandedMatrix::BandedMatrix(int n, int lower, int upper)
    : n_(n), kl_(lower), ku_(upper), stride_(2 * lower + upper + 1),
      ab_(static_cast<std::size_t>(stride_) * n, 0.0) {
    if (n <= 0 || lower < 0 || upper < 0)
        throw std::invalid_argument("banded: invalid dimensions");
}

int BandedMatrix::band_row(int row, int col) const {
    // Storage row kl + ku + row - col, so column j occupies a contiguous slab.
    return kl_ + ku_ + row - col;
}

double& BandedMatrix::at(int row, int col) {
    assert(row >= 0 && row < n_ && col >= 0 && col < n_);
    assert(col - row <= ku_ && row - col <= kl_);
    return ab_[static_cast<std::size_t>(col) * stride_ + band_row(row, col)];
}

double BandedMatrix::get(int row, int col) const {
    if (col - row > ku_ || row - col > kl_) return 0.0;
    return ab_[static_cast<std::size_t>(col) * stride_ + band_row(row, col)];
}

std::vector<double> BandedMatrix::solve(std::vector<double> rhs) {
    if (static_cast<int>(rhs.size()) != n_)
        throw std::invalid_argument("banded: rhs size mismatch");
    if (factored_) throw std::logic_error("banded: solve() may only be called once");
    factored_ = true;

    // Effective upper bandwidth grows to kl + ku under row pivoting.
    const int kuw = kl_ + ku_;
    std::vector<int> pivot(n_);

    auto entry = [&](int r, int c) -> double& {
        return ab_[static_cast<std::size_t>(c) * stride_ + (kl_ + ku_ + r - c)];
    };

    for (int k = 0; k < n_; ++k) {
        const int rmax = std::min(n_ - 1, k + kl_);
        int p = k;
        double best = std::fabs(entry(k, k));
        for (int r = k + 1; r <= rmax; ++r) {
            const double v = std::fabs(entry(r, k));
            if (v > best) {
                best = v;
                p = r;
            }
        }
        if (best == 0.0 || !std::isfinite(best))
            throw NumericError("banded: singular system (zero pivot at column " +
                               std::to_string(k) + ")");
        pivot[k] = p;

        const int cmax = std::min(n_ - 1, k + kuw);
        if (p != k) {
            for (int c = k; c <= cmax; ++c) std::swap(entry(k, c), entry(p, c));
            std::swap(rhs[k], rhs[p]);
        }

        const double inv = 1.0 / entry(k, k);
        for (int r = k + 1; r <= rmax; ++r) {
            const double m = entry(r, k) * inv;
            if (m == 0.0) continue;
            entry(r, k) = m;
            for (int c = k + 1; c <= cmax; ++c) entry(r, c) -= m * entry(k, c);
            rhs[r] -= m * rhs[k];
        }
    }

    // Back substitution.
    for (int k = n_ - 1; k >= 0; --k) {
        const int cmax = std::min(n_ - 1, k + kuw);
        double s = rhs[k];
        for (int c = k + 1; c <= cmax; ++c) s -= entry(k, c) * rhs[c];
        rhs[k] = s / entry(k, k);
    }
    return rhs;
}

}  // namespace tactsim
