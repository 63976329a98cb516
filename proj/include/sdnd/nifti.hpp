#pragma once
#include <string>

#include "sdnd/volume.hpp"

namespace sdnd {

enum class NiftiDtype { uint8, int16, int32, float32, float64 };

// Reads an uncompressed single-file NIfTI-1 (.nii). Accepted on-disk
// datatypes: uint8, int16, int32, float32, float64; either endianness
// (detected via sizeof_hdr). Data is converted to float64 and
// scl_slope/scl_inter applied when scl_slope != 0. 3D files yield nv = 1.
Volume4D read_nifti(const std::string& path);

// Writes vol as a single-file NIfTI-1. dtype float32 narrows the canonical
// float64 samples to float32; float64 is lossless.
void write_nifti(const Volume4D& vol, const std::string& path,
                 NiftiDtype dtype = NiftiDtype::float64);

// Mask helpers stored as uint8 NIfTI volumes (nonzero = inside).
BrainMask read_mask(const std::string& path);
void write_mask(const BrainMask& mask, const std::string& path,
                const std::array<double, 3>& voxel_size_mm = {1.0, 1.0, 1.0});

} // namespace sdnd
