// Periodic grids on flat tori T^d = [0, L)^d and real fields stored together
// with their half-spectrum Fourier coefficients.
//
// Coefficients are normalised so that the zero mode is the mean value:
//   u(x) = sum_k c_k exp(i k.x),  c_k = N^{-1} sum_j u_j exp(-i k.x_j).
// Only the last axis is halved (FFTW r2c layout), so integrals over the full
// spectrum weight each stored mode by 1 or 2 (see TorusGrid::mode_weight).

#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace duffkg {

using Complex = std::complex<double>;

class TorusGrid {
public:
    /// d in {1,2,3}, L > 0, n a power of two >= 4. Throws std::invalid_argument.
    TorusGrid(int dim, double side, int points);

    int dim() const;
    double side() const;
    int points() const;
    std::size_t size() const;
    std::size_t spectral_size() const;
    double volume() const;
    double cell_volume() const { return volume() / static_cast<double>(size()); }
    /// First nonzero eigenvalue of -Delta: (2 pi / L)^2.
    double lambda1() const;
    /// Largest |k|^2 represented on the grid.
    double lambda_max() const;

    /// |k|^2 for each stored spectral index.
    const std::vector<double>& k_squared() const;
    /// 1 or 2: multiplicity of a stored mode in the full spectrum.
    const std::vector<double>& mode_weight() const;
    /// 1 where every |m_i| < n/3 (the 2/3 rule), else 0.
    const std::vector<double>& dealias_mask() const;

    /// Coordinate of grid point `index` along `axis` (row-major, last axis fastest).
    double coordinate(std::size_t index, int axis) const;

    void forward(const double* values, Complex* coeffs) const;
    void inverse(const Complex* coeffs, double* values) const;

    bool operator==(const TorusGrid& other) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

/// A real field on a TorusGrid. Values and coefficients are kept consistent
/// by construction: every constructor and mutator fills both.
class Field {
public:
    /// The zero field.
    explicit Field(const TorusGrid& grid);
    static Field from_values(const TorusGrid& grid, std::vector<double> values);
    static Field from_coefficients(const TorusGrid& grid, std::vector<Complex> coeffs);
    static Field constant(const TorusGrid& grid, double c);
    /// Samples f at the grid points; f receives the coordinate vector.
    static Field sample(const TorusGrid& grid, const std::function<double(const std::vector<double>&)>& f);

    const TorusGrid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<Complex>& coefficients() const { return coeffs_; }

    /// Max relative mismatch between the stored values and the inverse
    /// transform of the stored coefficients.
    double consistency_error() const;

    Field operator+(const Field& o) const;
    Field operator-(const Field& o) const;
    Field operator*(double c) const;
    friend Field operator*(double c, const Field& f) { return f * c; }

private:
    Field(const TorusGrid& grid, std::vector<double> values, std::vector<Complex> coeffs);

    TorusGrid grid_;
    std::vector<double> values_;
    std::vector<Complex> coeffs_;
};

double l2_squared(const Field& f);
double gradient_squared(const Field& f);
/// ||f||_{H^1}^2 = int |grad f|^2 + int f^2.
double h1_squared(const Field& f);
/// int f^4.
double l4_fourth(const Field& f);
/// Inner product int f g.
double l2_inner(const Field& f, const Field& g);

/// (1 - Delta) f and its inverse.
Field helmholtz(const Field& f);
Field helmholtz_inverse(const Field& f);

}  // namespace duffkg
