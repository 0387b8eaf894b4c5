#pragma once

#include "lab/core.hpp"
#include "lab/spectral.hpp"

#include <vector>

namespace lab {

// Fields live on half-space grids with periodic tangential axes. Tensor entry
// (k, l) is F_kl and the divergence acts on the first index: (∇·F)_l = Σ_k ∂_k F_kl.

/// c ∂_{d0}∂_{d1}... ∫ N^±(x, y) F_kl(y) dy; unused derivative slots hold -1.
struct LayerTerm {
    int row = 0;  // output component
    std::array<int, 3> d{-1, -1, -1};
    int sign = +1;  // +1 Neumann N, -1 Dirichlet N⁻
    int k = 0, l = 0;
    double c = 0.0;
};

/// c F_kl.
struct LocalTerm {
    int k = 0, l = 0;
    double c = 0.0;
};

/// Nonlocal and local parts of F′_km in terms of F.
std::vector<LayerTerm> projection_layer_terms(int n, int k, int m);
std::vector<LocalTerm> projection_local_terms(int n, int k, int m);

/// Coefficient table of h_j = Σ C ∂∂∂ ∫ N^± F_kl, sorted derivative slots.
const std::vector<LayerTerm>& h_coefficients(int n);

/// Throws when F_nm at x_n = 0 exceeds tol · max|F|.
void check_admissible(const TensorField& F, double tol = 1e-10);

struct HelmholtzParts {
    VectorField grad_phi;
    VectorField qf;  // f - grad_phi
};

/// f = ∇Φ + Qf with Φ = -∫ ∇_y N(x, y) · f(y) dy.
HelmholtzParts helmholtz_decompose(const VectorField& f);

/// F′ with Q(∇·F) = ∇·F′.
TensorField project_F(const TensorField& F);

/// Nonlocal part h of ∇·F′ from the coefficient table.
VectorField compute_h(const TensorField& F);

/// ĥ_j per tangential mode from the transformed entries F̂_kl (index k n + l).
std::vector<HalfSpaceSpectral::Block> h_blocks(const HalfSpaceSpectral& s, const std::vector<HalfSpaceSpectral::Block>& F);

/// ∇·F on the first index: spectral tangential derivatives, second-order normal differences.
VectorField tensor_divergence(const TensorField& F);

/// Spectral-tangential divergence of a vector field.
ScalarField vector_divergence(const VectorField& f);

}  // namespace lab
