#pragma once

#include "lab/core.hpp"

namespace lab {

enum class BoundaryMode { Dirichlet, Conormal };

BoundaryMode parse_boundary_mode(const std::string& s);
const char* to_string(BoundaryMode m);

/// Reflects a half-space solution across x_n = 0: odd for Dirichlet, even for
/// conormal. Throws when the Dirichlet trace exceeds tau_rel * max|u|.
ScalarField extend_solution(const ScalarField& u, BoundaryMode mode, double tau_rel = 1e-8);

/// Dirichlet: tangential components odd, normal component even.
/// Conormal: tangential components even, normal component odd.
VectorField extend_flux(const VectorField& f, BoundaryMode mode);

/// Mixed normal/tangential entries odd, the rest even. Odd entries are zero
/// on the interface row.
TensorField extend_coefficients(const TensorField& a);

/// Restriction of a mirrored whole-space field to x_n >= 0.
template <Rank R>
GridField<R> restrict_to_halfspace(const GridField<R>& whole, const Grid& half);

/// max over the boundary row of |a_nj ∂_j u + f_n|, with a second-order
/// one-sided normal derivative. Reported, never asserted.
double conormal_trace(const TensorField& a, const ScalarField& u, const VectorField* f = nullptr);

}  // namespace lab
