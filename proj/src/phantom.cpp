#include "sdnd/phantom.hpp"

#include <cmath>

#include "sdnd/rng.hpp"

namespace sdnd {

namespace {

// Axially symmetric tensor with the requested FA and MD along unit axis v:
// lambda1 = md (1 + 2t), lambda2 = lambda3 = md (1 - t) with
// t = fa / sqrt(3 - 2 fa^2), which solves the FA equation exactly.
std::array<double, 6> axial_tensor(double fa, double md, std::array<double, 3> v) {
    double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (double& c : v) c /= n;
    double t = fa * std::sqrt(1.0 / (3.0 - 2.0 * fa * fa));
    double l1 = md * (1.0 + 2.0 * t);
    double l2 = md * (1.0 - t);
    std::array<double, 6> d;
    d[0] = l2 + (l1 - l2) * v[0] * v[0];
    d[1] = l2 + (l1 - l2) * v[1] * v[1];
    d[2] = l2 + (l1 - l2) * v[2] * v[2];
    d[3] = (l1 - l2) * v[0] * v[1];
    d[4] = (l1 - l2) * v[0] * v[2];
    d[5] = (l1 - l2) * v[1] * v[2];
    return d;
}

} // namespace

PhantomScene make_phantom(int nx, int ny, int nz, std::uint64_t seed, const PhantomSpec& spec) {
    if (nx < 16 || ny < 16 || nz < 16)
        throw InvalidInputError("phantom needs every dimension >= 16");

    PhantomScene sc;
    sc.spec = spec;
    sc.tensor_field = TensorField(nx, ny, nz);
    sc.s0 = Volume4D(nx, ny, nz, 1);
    sc.mask = BrainMask(nx, ny, nz);
    sc.support = BrainMask(nx, ny, nz);
    sc.region.assign(sc.tensor_field.size(), 0);

    // seed only perturbs the S0 modulation phases; geometry is fixed
    Rng rng(seed, 0);
    const double ph1 = rng.uniform(0.0, 2.0 * M_PI);
    const double ph2 = rng.uniform(0.0, 2.0 * M_PI);

    const double cx = (nx - 1) / 2.0, cy = (ny - 1) / 2.0, cz = (nz - 1) / 2.0;
    const double nmin = std::min(nx, std::min(ny, nz));
    const double r_brain = 0.42 * nmin;
    const double r_rim = 0.48 * nmin;

    for (int z = 0; z < nz; ++z) {
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x) {
                const std::size_t i = sc.tensor_field.index(x, y, z);
                const double dx = x - cx, dy = y - cy, dz = z - cz;
                const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
                if (r >= r_rim) {
                    sc.tensor_field.flags[i] = kOutsideMask;
                    continue;
                }
                sc.support.data[i] = 1;
                sc.s0.data[i] = spec.s0_base *
                                (1.0 + spec.s0_modulation * std::sin(2.0 * M_PI * x / nx + ph1) *
                                           std::cos(2.0 * M_PI * y / ny + ph2));
                if (r >= r_brain) {
                    // CSF-like rim: high MD, excluded from the mask
                    sc.tensor_field.d[i] = axial_tensor(0.0, spec.csf_md, {1, 0, 0});
                    sc.tensor_field.flags[i] = kOutsideMask;
                    sc.region[i] = 6;
                    continue;
                }
                sc.mask.data[i] = 1;

                if (r < 0.10 * nmin) {
                    // exactly isotropic pocket
                    sc.tensor_field.d[i] = axial_tensor(spec.iso_fa, spec.iso_md, {1, 0, 0});
                    sc.region[i] = 2;
                } else if (std::abs(dy) < 0.22 * nmin && z <= cz) {
                    // tract 1: V1 rotating smoothly in-plane along x
                    double ang = 0.8 * M_PI * (static_cast<double>(x) / nx);
                    sc.tensor_field.d[i] = axial_tensor(
                        spec.tract1_fa, spec.tract_md, {std::cos(ang), std::sin(ang), 0.2});
                    sc.region[i] = 3;
                } else if (std::abs(dx) < 0.22 * nmin && z > cz) {
                    // tract 2: crosses tract 1, rotating in the y-z plane
                    double ang = 0.6 * M_PI * (static_cast<double>(y) / ny);
                    sc.tensor_field.d[i] = axial_tensor(
                        spec.tract2_fa, spec.tract_md, {0.2, std::cos(ang), std::sin(ang)});
                    sc.region[i] = 4;
                } else if (std::abs(dy) >= 0.26 * nmin && z <= cz) {
                    // fine stripe texture alternating along z
                    bool high = ((z / spec.stripe_period) % 2) == 0;
                    sc.tensor_field.d[i] = axial_tensor(
                        high ? spec.stripe_fa_high : spec.stripe_fa_low, spec.tract_md, {0, 0, 1});
                    sc.region[i] = 5;
                } else {
                    // weakly anisotropic tissue fill with drifting orientation
                    double ang = 2.0 * M_PI * (x + 0.5 * y) / nx;
                    sc.tensor_field.d[i] = axial_tensor(
                        spec.background_fa, spec.background_md,
                        {std::cos(ang), std::sin(ang), 0.5});
                    sc.region[i] = 1;
                }
            }
        }
    }
    return sc;
}

Volume4D simulate_acquisition(const PhantomScene& scene, const GradientScheme& scheme,
                              double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw InvalidInputError("noise sigma must be >= 0");
    Volume4D clean = synthesize_dwis(scene.tensor_field, scene.s0, scheme, scene.support);
    if (sigma == 0.0) return clean;

    const std::size_t nvox = clean.n_voxels();
#pragma omp parallel for schedule(static)
    for (int v = 0; v < clean.nv; ++v) {
        Rng rng(seed, 0x9000ull + static_cast<std::uint64_t>(v));
        double* p = clean.vol(v);
        for (std::size_t i = 0; i < nvox; ++i) {
            double n1 = rng.normal() * sigma;
            double n2 = rng.normal() * sigma;
            double re = p[i] + n1;
            p[i] = std::sqrt(re * re + n2 * n2);
        }
    }
    return clean;
}

double hcp_like_sigma(const PhantomScene& scene) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < scene.mask.size(); ++i) {
        if (scene.mask.data[i]) {
            sum += scene.s0.data[i];
            ++n;
        }
    }
    return (sum / static_cast<double>(n)) / 30.0;
}

} // namespace sdnd
