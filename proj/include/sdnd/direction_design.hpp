#pragma once
#include <array>
#include <string>
#include <vector>

#include "sdnd/errors.hpp"
#include "sdnd/volume.hpp"

namespace sdnd {

using Vec3 = std::array<double, 3>;

// Unit diffusion-encoding directions. Antipodal pairs (v, -v) are
// equivalent for every scoring function in this module.
struct DirectionSet {
    std::vector<Vec3> dirs;

    int size() const { return static_cast<int>(dirs.size()); }
    void validate_unit(double tol = 1e-9) const;
};

// Disjoint 6-subsets of an acquired direction set, each with a bounded
// condition number of its tensor transformation matrix.
struct SubsetPlan {
    int n_subsets = 0;
    double cond_threshold = 1.6;
    std::vector<std::vector<int>> subsets; // K lists of 6 indices
    std::vector<double> cond_numbers;

    void validate(int n_acquired) const;

    std::string to_json() const;
    static SubsetPlan from_json(const std::string& text);
    void save(const std::string& path) const;
    static SubsetPlan load(const std::string& path);
};

// Row i = [gx^2, gy^2, gz^2, 2 gx gy, 2 gx gz, 2 gy gz]; N x 6, row-major.
std::vector<std::array<double, 6>> design_matrix(const DirectionSet& dirs);

// sigma_max / sigma_min of the 6x6 design matrix. Throws
// SingularSchemeError when sigma_min < 1e-12 * sigma_max.
double condition_number(const DirectionSet& dirs6);

// Non-throwing variant used by the optimizers; degenerate sets map to +inf.
double condition_number_or_inf(const DirectionSet& dirs6) noexcept;

// Sum over pairs of 1/|u_i - u_j| + 1/|u_i + u_j| (antipodally symmetric
// charges). Throws SingularSchemeError on a coincident or antipodal pair.
double electrostatic_energy(const DirectionSet& dirs);

// Random-restart hill climbing over spherical coordinates minimizing the
// condition number; reaches the 1.3228 optimum with the default budget.
DirectionSet optimize_dsm6(std::uint64_t seed, int restarts = 20, int iters = 5000);

// K independently rotated copies of the 6-direction base set. Rotations are
// rejection-sampled so every copy keeps its condition number below
// cond_threshold; among rotation_trials accepted tuples the one minimizing
// the electrostatic energy of the 6K-direction union wins. Passing an empty
// base runs optimize_dsm6(seed) first.
std::pair<DirectionSet, SubsetPlan> design_scheme(int n_subsets, std::uint64_t seed,
                                                  int rotation_trials,
                                                  const DirectionSet& base = {},
                                                  double cond_threshold = 1.6);

// Subset selection for a fixed acquired table: rotate the base set, snap
// each direction to its nearest acquired direction (antipodal-aware), keep
// candidate 6-subsets with condition number below cond_threshold, then pick
// K disjoint candidates minimizing the union electrostatic energy.
SubsetPlan select_subsets_from_fixed(const DirectionSet& acquired, int n_subsets,
                                     double cond_threshold, int trials, std::uint64_t seed,
                                     const DirectionSet& base = {});

// Scheme assembly helpers shared by the CLI and the pipeline.
GradientScheme scheme_from_directions(const DirectionSet& dirs, double bval, int n_b0,
                                      bool interspersed = true);
DirectionSet directions_of_scheme(const GradientScheme& scheme); // non-b0 volumes, in order

} // namespace sdnd
