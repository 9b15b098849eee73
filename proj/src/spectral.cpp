#include "duffkg/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace duffkg {

namespace {

// FFTW's planner is not thread-safe; execution with new arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

int wavenumber(int i, int n) { return i <= n / 2 ? i : i - n; }

}  // namespace

struct TorusGrid::Impl {
    int dim = 1;
    double side = 1.0;
    int n = 4;
    std::size_t size = 0;
    std::size_t spectral_size = 0;
    std::vector<double> k2;
    std::vector<double> weight;
    std::vector<double> mask;
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;

    ~Impl() {
        std::lock_guard lock(planner_mutex());
        if (r2c) fftw_destroy_plan(r2c);
        if (c2r) fftw_destroy_plan(c2r);
    }
};

TorusGrid::TorusGrid(int dim, double side, int points) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("TorusGrid: dimension must be 1, 2 or 3");
    if (!(side > 0.0) || !std::isfinite(side)) throw std::invalid_argument("TorusGrid: side length must be positive");
    if (points < 4 || (points & (points - 1)) != 0) {
        throw std::invalid_argument("TorusGrid: points per axis must be a power of two >= 4");
    }
    auto impl = std::make_shared<Impl>();
    impl->dim = dim;
    impl->side = side;
    impl->n = points;
    const std::size_t n = static_cast<std::size_t>(points);
    const std::size_t half = n / 2 + 1;
    impl->size = 1;
    for (int a = 0; a < dim; ++a) impl->size *= n;
    impl->spectral_size = impl->size / n * half;

    const double k0 = 2.0 * std::numbers::pi / side;
    impl->k2.resize(impl->spectral_size);
    impl->weight.resize(impl->spectral_size);
    impl->mask.resize(impl->spectral_size);
    for (std::size_t s = 0; s < impl->spectral_size; ++s) {
        const int j_last = static_cast<int>(s % half);
        std::size_t rest = s / half;
        double k2 = 0.0;
        bool keep = true;
        auto add = [&](int m) {
            k2 += (k0 * m) * (k0 * m);
            if (3 * std::abs(m) >= points) keep = false;
        };
        add(j_last);
        for (int a = 0; a + 1 < dim; ++a) {
            add(wavenumber(static_cast<int>(rest % n), points));
            rest /= n;
        }
        impl->k2[s] = k2;
        impl->weight[s] = (j_last == 0 || j_last == points / 2) ? 1.0 : 2.0;
        impl->mask[s] = keep ? 1.0 : 0.0;
    }

    std::vector<double> in(impl->size);
    std::vector<Complex> out(impl->spectral_size);
    int dims[3] = {points, points, points};
    auto* cin = reinterpret_cast<fftw_complex*>(out.data());
    {
        std::lock_guard lock(planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        impl->r2c = fftw_plan_dft_r2c(dim, dims, in.data(), cin, flags);
        impl->c2r = fftw_plan_dft_c2r(dim, dims, cin, in.data(), flags | FFTW_DESTROY_INPUT);
    }
    if (!impl->r2c || !impl->c2r) throw std::runtime_error("TorusGrid: FFTW planning failed");
    impl_ = std::move(impl);
}

int TorusGrid::dim() const { return impl_->dim; }
double TorusGrid::side() const { return impl_->side; }
int TorusGrid::points() const { return impl_->n; }
std::size_t TorusGrid::size() const { return impl_->size; }
std::size_t TorusGrid::spectral_size() const { return impl_->spectral_size; }
double TorusGrid::volume() const { return std::pow(impl_->side, impl_->dim); }

double TorusGrid::lambda1() const {
    const double k0 = 2.0 * std::numbers::pi / impl_->side;
    return k0 * k0;
}

double TorusGrid::lambda_max() const { return *std::max_element(impl_->k2.begin(), impl_->k2.end()); }

const std::vector<double>& TorusGrid::k_squared() const { return impl_->k2; }
const std::vector<double>& TorusGrid::mode_weight() const { return impl_->weight; }
const std::vector<double>& TorusGrid::dealias_mask() const { return impl_->mask; }

double TorusGrid::coordinate(std::size_t index, int axis) const {
    const std::size_t n = static_cast<std::size_t>(impl_->n);
    for (int a = impl_->dim - 1; a > axis; --a) index /= n;
    return impl_->side * static_cast<double>(index % n) / static_cast<double>(n);
}

void TorusGrid::forward(const double* values, Complex* coeffs) const {
    fftw_execute_dft_r2c(impl_->r2c, const_cast<double*>(values), reinterpret_cast<fftw_complex*>(coeffs));
    const double scale = 1.0 / static_cast<double>(impl_->size);
    for (std::size_t s = 0; s < impl_->spectral_size; ++s) coeffs[s] *= scale;
}

void TorusGrid::inverse(const Complex* coeffs, double* values) const {
    // c2r overwrites its input in more than one dimension.
    std::vector<Complex> scratch(coeffs, coeffs + impl_->spectral_size);
    fftw_execute_dft_c2r(impl_->c2r, reinterpret_cast<fftw_complex*>(scratch.data()), values);
}

bool TorusGrid::operator==(const TorusGrid& other) const {
    return impl_ == other.impl_ ||
           (dim() == other.dim() && points() == other.points() && side() == other.side());
}

Field::Field(const TorusGrid& grid)
    : grid_(grid), values_(grid.size(), 0.0), coeffs_(grid.spectral_size(), Complex{}) {}

Field::Field(const TorusGrid& grid, std::vector<double> values, std::vector<Complex> coeffs)
    : grid_(grid), values_(std::move(values)), coeffs_(std::move(coeffs)) {}

Field Field::from_values(const TorusGrid& grid, std::vector<double> values) {
    if (values.size() != grid.size()) throw std::invalid_argument("Field: value count does not match the grid");
    for (double x : values) {
        if (!std::isfinite(x)) throw std::invalid_argument("Field: non-finite value");
    }
    std::vector<Complex> coeffs(grid.spectral_size());
    grid.forward(values.data(), coeffs.data());
    return Field(grid, std::move(values), std::move(coeffs));
}

Field Field::from_coefficients(const TorusGrid& grid, std::vector<Complex> coeffs) {
    if (coeffs.size() != grid.spectral_size()) {
        throw std::invalid_argument("Field: coefficient count does not match the grid");
    }
    std::vector<double> values(grid.size());
    grid.inverse(coeffs.data(), values.data());
    // Round-trip so that the stored coefficients are exactly those of a real field.
    return from_values(grid, std::move(values));
}

Field Field::constant(const TorusGrid& grid, double c) {
    return from_values(grid, std::vector<double>(grid.size(), c));
}

Field Field::sample(const TorusGrid& grid, const std::function<double(const std::vector<double>&)>& f) {
    std::vector<double> values(grid.size());
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (int a = 0; a < grid.dim(); ++a) x[static_cast<std::size_t>(a)] = grid.coordinate(i, a);
        values[i] = f(x);
    }
    return from_values(grid, std::move(values));
}

double Field::consistency_error() const {
    std::vector<double> back(values_.size());
    grid_.inverse(coeffs_.data(), back.data());
    double scale = 0.0;
    double err = 0.0;
    for (std::size_t i = 0; i < back.size(); ++i) {
        scale = std::max(scale, std::abs(values_[i]));
        err = std::max(err, std::abs(values_[i] - back[i]));
    }
    return scale > 0.0 ? err / scale : err;
}

Field Field::operator+(const Field& o) const {
    if (!(grid_ == o.grid_)) throw std::invalid_argument("Field: grid mismatch");
    Field r = *this;
    for (std::size_t i = 0; i < values_.size(); ++i) r.values_[i] += o.values_[i];
    for (std::size_t s = 0; s < coeffs_.size(); ++s) r.coeffs_[s] += o.coeffs_[s];
    return r;
}

Field Field::operator-(const Field& o) const { return *this + o * -1.0; }

Field Field::operator*(double c) const {
    Field r = *this;
    for (double& x : r.values_) x *= c;
    for (Complex& z : r.coeffs_) z *= c;
    return r;
}

double l2_squared(const Field& f) { return l2_inner(f, f); }

double gradient_squared(const Field& f) {
    const auto& g = f.grid();
    const auto& k2 = g.k_squared();
    const auto& w = g.mode_weight();
    const auto& c = f.coefficients();
    double sum = 0.0;
    for (std::size_t s = 0; s < c.size(); ++s) sum += w[s] * k2[s] * std::norm(c[s]);
    return g.volume() * sum;
}

double h1_squared(const Field& f) { return gradient_squared(f) + l2_squared(f); }

double l4_fourth(const Field& f) {
    double sum = 0.0;
    for (double x : f.values()) sum += (x * x) * (x * x);
    return f.grid().cell_volume() * sum;
}

double l2_inner(const Field& f, const Field& g) {
    if (!(f.grid() == g.grid())) throw std::invalid_argument("l2_inner: grid mismatch");
    double sum = 0.0;
    const auto& a = f.values();
    const auto& b = g.values();
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return f.grid().cell_volume() * sum;
}

namespace {

Field multiply_symbol(const Field& f, bool invert) {
    const auto& k2 = f.grid().k_squared();
    std::vector<Complex> c = f.coefficients();
    for (std::size_t s = 0; s < c.size(); ++s) c[s] = invert ? c[s] / (1.0 + k2[s]) : c[s] * (1.0 + k2[s]);
    return Field::from_coefficients(f.grid(), std::move(c));
}

}  // namespace

Field helmholtz(const Field& f) { return multiply_symbol(f, false); }
Field helmholtz_inverse(const Field& f) { return multiply_symbol(f, true); }

}  // namespace duffkg
