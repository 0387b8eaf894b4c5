#pragma once

#include "lab/core.hpp"

#include <Eigen/Sparse>

#include <filesystem>
#include <string>
#include <vector>

namespace lab {

/// Discrete ∂_i(a_ij ∂_j u) + ∂_i f_i in flux form at half nodes.
///
/// Coefficients at a half node are the average of the two adjacent nodes; the
/// tangential gradient at a half node averages the centred differences of its
/// neighbours. Nodes on bounded box faces are filled by one-sided cubic
/// extrapolation along the face normal. `f` may be empty (zero source).
ScalarField apply_divergence_form(const TensorField& a, const ScalarField& u, const VectorField* f = nullptr);

/// Same stencil without the whole-space guard; used by half-space solvers that
/// impose their own boundary rows.
ScalarField apply_divergence_form_any(const TensorField& a, const ScalarField& u, const VectorField* f);

/// Centred-difference divergence ∂_i f_i (zero on bounded faces).
ScalarField discrete_divergence(const VectorField& f);

/// Sparse matrix of u ↦ ∂_i(a_ij ∂_j u). Rows of nodes whose stencil leaves the
/// grid are left empty; `interior` reports which rows are populated.
Eigen::SparseMatrix<double> assemble_divergence_operator(const TensorField& a, std::vector<bool>* interior = nullptr);

/// Identity coefficient tensor.
TensorField identity_coefficients(const Grid& g);

/// Centred-difference gradient (one-sided second order on bounded faces).
VectorField gradient(const ScalarField& u);

enum class NormKind { L2, Linf };

/// Trapezoidal space-time norm over a parabolic cylinder. The ball is
/// integrated with sub-cell volume fractions; time uses the piecewise-linear
/// interpolant of the spatial integrals, clipped to (t0 - r², t0).
double cylinder_norm(const ScalarSeries& u, const Cylinder& q, NormKind kind);

/// Same quadrature over (ta, tb) x B_r(x0).
double space_time_norm(const ScalarSeries& u, double ta, double tb, const Point& x0, double r, NormKind kind);

/// Component `c` of a vector series as a scalar series.
ScalarSeries component_series(const VectorSeries& v, int c);

/// Euclidean magnitude of a vector series.
ScalarSeries magnitude_series(const VectorSeries& v);

// ---- on-disk formats -------------------------------------------------------

template <Rank R>
void write_field(const std::filesystem::path& path, const GridField<R>& f);

template <Rank R>
GridField<R> read_field(const std::filesystem::path& path);

/// A series is a directory holding index.json and one field file per frame.
template <class F>
void write_series(const std::filesystem::path& dir, const TimeSeries<F>& s);

template <class F>
TimeSeries<F> read_series(const std::filesystem::path& dir);

/// Header-only inspection: returns the component count of a field file.
int field_file_components(const std::filesystem::path& path);

}  // namespace lab
