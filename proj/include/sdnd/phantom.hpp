#pragma once
#include <cstdint>
#include <string>

#include "sdnd/tensor_model.hpp"
#include "sdnd/volume.hpp"

namespace sdnd {

// Region parameters for the synthetic scene. FA/MD pairs define axially
// symmetric tensors; the defaults span FA from 0 (isotropic pocket) to
// 0.85 (primary tract).
struct PhantomSpec {
    double background_fa = 0.12;  // weakly anisotropic tissue fill
    double background_md = 0.8;   // um^2/ms
    double iso_fa = 0.0;          // exactly isotropic pocket
    double iso_md = 0.8;
    double tract1_fa = 0.85;
    double tract2_fa = 0.80;
    double tract_md = 0.8;
    double stripe_fa_high = 0.7;  // alternating fine texture
    double stripe_fa_low = 0.3;
    int stripe_period = 2;        // voxels per stripe
    double csf_md = 3.0;          // high-diffusivity rim, outside the mask
    double s0_base = 100.0;
    double s0_modulation = 0.2;   // smooth +-20% spatial variation
};

// Ground-truth scene: tensors, S0, mask (rim excluded) and region labels.
struct PhantomScene {
    TensorField tensor_field;
    Volume4D s0;        // 1 volume
    BrainMask mask;     // brain tissue, CSF rim excluded
    BrainMask support;  // brain + rim (voxels with signal)
    std::vector<std::uint8_t> region; // per voxel: 0 air, 1 background, 2 iso,
                                      // 3 tract1, 4 tract2, 5 stripes, 6 rim
    PhantomSpec spec;
};

// Deterministic scene on an (nx, ny, nz) grid, each dim >= 16.
PhantomScene make_phantom(int nx, int ny, int nz, std::uint64_t seed,
                          const PhantomSpec& spec = PhantomSpec());

// Clean Eq.-2 signal plus Rician corruption: out = sqrt((S+n1)^2 + n2^2)
// with n1, n2 ~ N(0, sigma^2), one stream per volume index.
Volume4D simulate_acquisition(const PhantomScene& scene, const GradientScheme& scheme,
                              double sigma, std::uint64_t seed);

// "HCP-like" preset: sigma = mean in-mask S0 / 30.
double hcp_like_sigma(const PhantomScene& scene);

} // namespace sdnd
