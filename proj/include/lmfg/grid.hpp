#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace lmfg {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;
using MultiIndex = std::array<int, 2>;

/// Periodic box [-L_0, L_0) x [-L_1, L_1) with n_i nodes per axis.
///
/// Layout is row-major with axis 0 outermost: flat = i0 * n1 + i1.
/// A 1D grid is stored as n1 = 1 so the same indexing works everywhere.
class Grid {
public:
    Grid() = default;
    Grid(int n, double half_width);
    Grid(std::array<int, 2> n, std::array<double, 2> half_width);

    int dims() const { return dims_; }
    int n(int axis) const { return n_[axis]; }
    double half_width(int axis) const { return half_width_[axis]; }
    double dx(int axis) const { return dx_[axis]; }
    double dx_min() const;
    std::size_t size() const { return static_cast<std::size_t>(n_[0]) * n_[1]; }
    double cell_volume() const { return dims_ == 1 ? dx_[0] : dx_[0] * dx_[1]; }

    double coord(int axis, int j) const { return -half_width_[axis] + j * dx_[axis]; }
    Vec2 point(std::size_t flat) const;
    std::size_t index(int i0, int i1 = 0) const {
        return static_cast<std::size_t>(i0) * n_[1] + i1;
    }

    /// Signed wavenumber index for storage position j in [0, n): j or j - n.
    int signed_mode(int axis, int j) const { return j < n_[axis] / 2 ? j : j - n_[axis]; }
    double wavenumber(int axis, int k) const;

    /// Flat index of the node at -x (periodic), used for reflections.
    std::size_t reflected(std::size_t flat) const;

    bool operator==(const Grid& o) const;
    bool operator!=(const Grid& o) const { return !(*this == o); }

private:
    int dims_ = 0;
    std::array<int, 2> n_{1, 1};
    std::array<double, 2> half_width_{0.0, 0.0};
    std::array<double, 2> dx_{0.0, 0.0};
};

void require_same_grid(const Grid& a, const Grid& b, const char* where);

/// Real grid function. Values are row-major as in Grid.
class Field {
public:
    Field() = default;
    explicit Field(const Grid& grid, double fill = 0.0);
    /// Rejects non-finite values.
    Field(const Grid& grid, std::vector<double> values);

    static Field sample(const Grid& grid, const std::function<double(const Vec2&)>& f);

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    std::span<const double> values() const { return values_; }
    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    /// dx^d * sum of values: the canonical quadrature.
    double integral() const;
    double max_abs() const;
    double min() const;
    double max() const;
    bool all_finite() const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double s);
    /// Pointwise product in place.
    Field& multiply(const Field& o);

private:
    Grid grid_;
    std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(Field a, double s);
Field operator*(double s, Field a);
Field pointwise(Field a, const Field& b);
/// a + s * b
Field axpy(const Field& a, double s, const Field& b);

/// dx^d * sum a b
double inner(const Field& a, const Field& b);
double max_abs_diff(const Field& a, const Field& b);

/// One component per axis.
using VectorField = std::vector<Field>;

VectorField zero_vector_field(const Grid& grid);
/// sum_i a_i b_i as a field.
Field dot(const VectorField& a, const VectorField& b);
double max_abs(const VectorField& v);

/// Mass in the outer 10% shell of the box (any axis), integrated in absolute value.
double boundary_mass(const Field& f);

/// f(-x) on the grid.
Field reflect(const Field& f);

}  // namespace lmfg
