#pragma once
#include <array>
#include <cstdint>
#include <vector>

#include "sdnd/direction_design.hpp"
#include "sdnd/volume.hpp"

namespace sdnd {

// Per-voxel fit status bits.
enum FitFlag : std::uint8_t {
    kOutsideMask = 1,
    kClampedSignal = 2,
    kNegativeEigenvalue = 4,
};

// Per-voxel diffusion tensor [Dxx Dyy Dzz Dxy Dxz Dyz] in um^2/ms.
// Zero outside the mask; the symmetric 3x3 reconstruction uses exactly
// this element order.
struct TensorField {
    int nx = 0, ny = 0, nz = 0;
    std::vector<std::array<double, 6>> d;
    std::vector<std::uint8_t> flags;

    TensorField() = default;
    TensorField(int nx, int ny, int nz)
        : nx(nx), ny(ny), nz(nz), d(static_cast<std::size_t>(nx) * ny * nz),
          flags(static_cast<std::size_t>(nx) * ny * nz, 0) {}

    std::size_t size() const { return d.size(); }
    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * ny + y) * nx + x;
    }

    Volume4D to_volume(const std::array<double, 3>& voxel_size_mm = {1, 1, 1}) const;
    static TensorField from_volume(const Volume4D& vol);
};

struct EigenSym3 {
    std::array<double, 3> lambda;       // sorted descending
    std::array<std::array<double, 3>, 3> vec; // vec[i] pairs with lambda[i]
};

// Scalar and orientation DTI maps derived from a tensor field.
struct DtiMetrics {
    int nx = 0, ny = 0, nz = 0;
    std::vector<double> fa, md, ad, rd;
    std::vector<std::array<double, 3>> v1;
    std::vector<std::array<double, 3>> lambda;
    std::vector<std::uint8_t> flags;

    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * ny + y) * nx + x;
    }
};

// ADC along one direction: c = -ln(max(S, eps*S0)/S0)/b with eps = 1e-6.
// clamped (when non-null) reports whether the floor was applied. S > S0
// gives a negative ADC; S0 <= 0 throws InvalidSignalError.
double adc(double S, double S0, double b, bool* clamped = nullptr);

enum class S0Source { mean_of_b0, provided };

// Voxelwise linearized least-squares tensor fit. With exactly 6 DWI
// directions the design matrix is inverted directly; with more an OLS
// solve is used. force_ols exposes the OLS route at N = 6 for testing.
TensorField fit_tensor(const Volume4D& vol, const GradientScheme& scheme, const BrainMask& mask,
                       S0Source s0_source = S0Source::mean_of_b0,
                       const Volume4D* s0_provided = nullptr, bool force_ols = false);

// S_j = S0 * exp(-b_j * alpha_j . D) per masked voxel; b=0 volumes carry S0;
// voxels outside the mask are zero.
Volume4D synthesize_dwis(const TensorField& tf, const Volume4D& S0, const GradientScheme& target,
                         const BrainMask& mask);

// Mean of the b=0 volumes of a stack as a 1-volume image.
Volume4D mean_b0(const Volume4D& vol, const GradientScheme& scheme);

// Eigen decomposition of the symmetric 3x3 tensor by cyclic Jacobi
// rotations (off-diagonal norm < 1e-14 * ||D||). Eigenvalues sorted
// descending; each vector's largest-magnitude component is made positive.
EigenSym3 eigen_sym3(const std::array<double, 6>& d);

DtiMetrics dti_metrics(const TensorField& tf, const BrainMask& mask);

} // namespace sdnd
