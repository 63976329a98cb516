#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdnd/errors.hpp"

namespace sdnd {

// Per-volume diffusion encoding. b-values are in ms/um^2 (so b = 1000 s/mm^2
// reads as 1.0); directions are unit vectors, arbitrary for b = 0 volumes.
struct GradientScheme {
    std::vector<double> bvals;
    std::vector<std::array<double, 3>> bvecs;
    std::vector<bool> is_b0;

    int n_volumes() const { return static_cast<int>(bvals.size()); }

    int n_b0() const {
        int n = 0;
        for (bool b : is_b0) n += b ? 1 : 0;
        return n;
    }

    int n_dwi() const { return n_volumes() - n_b0(); }

    std::vector<int> b0_indices() const {
        std::vector<int> idx;
        for (int i = 0; i < n_volumes(); ++i)
            if (is_b0[i]) idx.push_back(i);
        return idx;
    }

    std::vector<int> dwi_indices() const {
        std::vector<int> idx;
        for (int i = 0; i < n_volumes(); ++i)
            if (!is_b0[i]) idx.push_back(i);
        return idx;
    }

    void validate_for_fit() const {
        if (n_b0() < 1 || n_dwi() < 6)
            throw InvalidSchemeError("scheme needs at least one b=0 and six DWI volumes, got " +
                                     std::to_string(n_b0()) + " b=0 and " +
                                     std::to_string(n_dwi()) + " DWI");
        for (int i = 0; i < n_volumes(); ++i) {
            if (is_b0[i]) continue;
            double n2 = bvecs[i][0] * bvecs[i][0] + bvecs[i][1] * bvecs[i][1] +
                        bvecs[i][2] * bvecs[i][2];
            if (std::abs(std::sqrt(n2) - 1.0) > 1e-6)
                throw InvalidSchemeError("non-unit direction at volume " + std::to_string(i));
        }
    }
};

// X*Y*Z*V stack of 64-bit floats, x fastest. Canonical in-memory image type.
struct Volume4D {
    int nx = 0, ny = 0, nz = 0, nv = 0;
    std::array<double, 3> voxel_size_mm = {1.0, 1.0, 1.0};
    std::vector<double> data;
    std::optional<GradientScheme> scheme;

    Volume4D() = default;
    Volume4D(int nx, int ny, int nz, int nv, double fill = 0.0)
        : nx(nx), ny(ny), nz(nz), nv(nv),
          data(static_cast<std::size_t>(nx) * ny * nz * nv, fill) {}

    std::size_t n_voxels() const { return static_cast<std::size_t>(nx) * ny * nz; }
    std::size_t size() const { return n_voxels() * nv; }

    std::size_t index(int x, int y, int z, int v) const {
        return ((static_cast<std::size_t>(v) * nz + z) * ny + y) * nx + x;
    }

    double& at(int x, int y, int z, int v = 0) { return data[index(x, y, z, v)]; }
    double at(int x, int y, int z, int v = 0) const { return data[index(x, y, z, v)]; }

    // pointer to the start of volume v
    double* vol(int v) { return data.data() + static_cast<std::size_t>(v) * n_voxels(); }
    const double* vol(int v) const { return data.data() + static_cast<std::size_t>(v) * n_voxels(); }

    bool same_grid(const Volume4D& o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }

    void check_finite(const std::string& what) const {
        for (double d : data)
            if (!std::isfinite(d)) throw FormatError(what + ": non-finite voxel value");
    }

    void check_scheme_consistent() const {
        if (scheme && scheme->n_volumes() != nv)
            throw ShapeError("gradient scheme has " + std::to_string(scheme->n_volumes()) +
                             " entries for " + std::to_string(nv) + " volumes");
    }
};

// Binary brain mask on the same grid as the volumes it is applied to.
struct BrainMask {
    int nx = 0, ny = 0, nz = 0;
    std::vector<std::uint8_t> data;

    BrainMask() = default;
    BrainMask(int nx, int ny, int nz, std::uint8_t fill = 0)
        : nx(nx), ny(ny), nz(nz), data(static_cast<std::size_t>(nx) * ny * nz, fill) {}

    std::size_t size() const { return data.size(); }

    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * ny + y) * nx + x;
    }

    bool at(int x, int y, int z) const { return data[index(x, y, z)] != 0; }
    void set(int x, int y, int z, bool v) { data[index(x, y, z)] = v ? 1 : 0; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : data) n += v ? 1 : 0;
        return n;
    }

    void check_matches(const Volume4D& vol) const {
        if (nx != vol.nx || ny != vol.ny || nz != vol.nz)
            throw ShapeError("mask dims do not match volume dims");
    }
};

} // namespace sdnd
