#pragma once
#include <string>

#include "sdnd/volume.hpp"

namespace sdnd {

// FSL-convention gradient tables: bvals is one whitespace-separated row of
// N values, bvecs is three rows of N components. b-values are expected in
// ms/um^2; pass scale = 1e-3 when reading files in s/mm^2.
GradientScheme read_gradients(const std::string& bvals_path, const std::string& bvecs_path,
                              double b0_threshold = 0.05, double scale = 1.0);

void write_gradients(const GradientScheme& scheme, const std::string& bvals_path,
                     const std::string& bvecs_path);

} // namespace sdnd
