#include "lmfg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lmfg/errors.hpp"

namespace lmfg {

namespace {

bool power_of_two_at_least_8(int n) { return n >= 8 && (n & (n - 1)) == 0; }

void check_axis(int n, double L) {
    require(power_of_two_at_least_8(n),
            "grid: points per axis must be a power of two >= 8, got " + std::to_string(n));
    require(L > 0.0 && std::isfinite(L), "grid: half-width must be positive");
}

}  // namespace

Grid::Grid(int n, double half_width) {
    check_axis(n, half_width);
    dims_ = 1;
    n_ = {n, 1};
    half_width_ = {half_width, 0.0};
    // n is a power of two, so this division is exact and dx * n == 2L.
    dx_ = {2.0 * half_width / n, 0.0};
}

Grid::Grid(std::array<int, 2> n, std::array<double, 2> half_width) {
    check_axis(n[0], half_width[0]);
    check_axis(n[1], half_width[1]);
    dims_ = 2;
    n_ = n;
    half_width_ = half_width;
    dx_ = {2.0 * half_width[0] / n[0], 2.0 * half_width[1] / n[1]};
}

double Grid::dx_min() const { return dims_ == 1 ? dx_[0] : std::min(dx_[0], dx_[1]); }

Vec2 Grid::point(std::size_t flat) const {
    const int i0 = static_cast<int>(flat / n_[1]);
    const int i1 = static_cast<int>(flat % n_[1]);
    return {coord(0, i0), dims_ == 2 ? coord(1, i1) : 0.0};
}

double Grid::wavenumber(int axis, int k) const {
    return std::numbers::pi * k / half_width_[axis];
}

std::size_t Grid::reflected(std::size_t flat) const {
    const int i0 = static_cast<int>(flat / n_[1]);
    const int i1 = static_cast<int>(flat % n_[1]);
    const int r0 = (n_[0] - i0) % n_[0];
    const int r1 = dims_ == 2 ? (n_[1] - i1) % n_[1] : 0;
    return index(r0, r1);
}

bool Grid::operator==(const Grid& o) const {
    return dims_ == o.dims_ && n_ == o.n_ && half_width_ == o.half_width_;
}

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (a != b) throw Error(ErrorKind::grid_mismatch, std::string(where) + ": grid mismatch");
}

Field::Field(const Grid& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

Field::Field(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    require(values_.size() == grid.size(), "field: value count does not match grid");
    require(all_finite(), "field: non-finite value");
}

Field Field::sample(const Grid& grid, const std::function<double(const Vec2&)>& f) {
    Field out(grid);
    for (std::size_t i = 0; i < out.size(); ++i) out.values_[i] = f(grid.point(i));
    require(out.all_finite(), "field: sampled function produced a non-finite value");
    return out;
}

double Field::integral() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s * grid_.cell_volume();
}

double Field::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool Field::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Field& Field::operator+=(const Field& o) {
    require_same_grid(grid_, o.grid_, "field +=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    require_same_grid(grid_, o.grid_, "field -=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

Field& Field::multiply(const Field& o) {
    require_same_grid(grid_, o.grid_, "field multiply");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= o.values_[i];
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(Field a, double s) { return a *= s; }
Field operator*(double s, Field a) { return a *= s; }
Field pointwise(Field a, const Field& b) { return a.multiply(b); }

Field axpy(const Field& a, double s, const Field& b) {
    require_same_grid(a.grid(), b.grid(), "axpy");
    Field out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * b[i];
    return out;
}

double inner(const Field& a, const Field& b) {
    require_same_grid(a.grid(), b.grid(), "inner");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s * a.grid().cell_volume();
}

double max_abs_diff(const Field& a, const Field& b) {
    require_same_grid(a.grid(), b.grid(), "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

VectorField zero_vector_field(const Grid& grid) {
    return VectorField(static_cast<std::size_t>(grid.dims()), Field(grid));
}

Field dot(const VectorField& a, const VectorField& b) {
    require(!a.empty() && a.size() == b.size(), "dot: component count mismatch");
    Field out(a[0].grid());
    for (std::size_t c = 0; c < a.size(); ++c)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += a[c][i] * b[c][i];
    return out;
}

double max_abs(const VectorField& v) {
    double m = 0.0;
    for (const auto& f : v) m = std::max(m, f.max_abs());
    return m;
}

double boundary_mass(const Field& f) {
    const Grid& g = f.grid();
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Vec2 x = g.point(i);
        bool outer = std::abs(x[0]) > 0.9 * g.half_width(0);
        if (g.dims() == 2) outer = outer || std::abs(x[1]) > 0.9 * g.half_width(1);
        if (outer) s += std::abs(f[i]);
    }
    return s * g.cell_volume();
}

Field reflect(const Field& f) {
    Field out(f.grid());
    for (std::size_t i = 0; i < f.size(); ++i) out[f.grid().reflected(i)] = f[i];
    return out;
}

}  // namespace lmfg
