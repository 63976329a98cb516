#include "sdnd/direction_design.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "sdnd/rng.hpp"

namespace sdnd {

namespace {

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Vec3 normalized(const Vec3& v) {
    double n = norm3(v);
    return {v[0] / n, v[1] / n, v[2] / n};
}

Vec3 sph2vec(double theta, double phi) {
    double st = std::sin(theta);
    return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

using Mat3 = std::array<Vec3, 3>;

Vec3 apply(const Mat3& m, const Vec3& v) {
    return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

// uniform rotation from a random unit quaternion
Mat3 random_rotation(Rng& rng) {
    double q[4];
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (double& c : q) {
            c = rng.normal();
            n2 += c * c;
        }
    } while (n2 < 1e-12);
    double n = std::sqrt(n2);
    double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
    return {Vec3{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
            Vec3{2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
            Vec3{2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
}

DirectionSet rotated(const DirectionSet& base, const Mat3& R) {
    DirectionSet out;
    out.dirs.reserve(base.dirs.size());
    for (const auto& d : base.dirs) out.dirs.push_back(apply(R, d));
    return out;
}

Eigen::Matrix<double, Eigen::Dynamic, 6> design_eigen(const DirectionSet& dirs) {
    Eigen::Matrix<double, Eigen::Dynamic, 6> A(dirs.size(), 6);
    for (int i = 0; i < dirs.size(); ++i) {
        const auto& g = dirs.dirs[i];
        A(i, 0) = g[0] * g[0];
        A(i, 1) = g[1] * g[1];
        A(i, 2) = g[2] * g[2];
        A(i, 3) = 2.0 * g[0] * g[1];
        A(i, 4) = 2.0 * g[0] * g[2];
        A(i, 5) = 2.0 * g[1] * g[2];
    }
    return A;
}

double energy_or_inf(const DirectionSet& dirs) noexcept {
    double e = 0.0;
    const auto& u = dirs.dirs;
    for (std::size_t i = 0; i < u.size(); ++i) {
        for (std::size_t j = i + 1; j < u.size(); ++j) {
            Vec3 dmn = {u[i][0] - u[j][0], u[i][1] - u[j][1], u[i][2] - u[j][2]};
            Vec3 dpl = {u[i][0] + u[j][0], u[i][1] + u[j][1], u[i][2] + u[j][2]};
            double nm = norm3(dmn), np = norm3(dpl);
            if (nm < 1e-9 || np < 1e-9) return std::numeric_limits<double>::infinity();
            e += 1.0 / nm + 1.0 / np;
        }
    }
    return e;
}

} // namespace

void DirectionSet::validate_unit(double tol) const {
    for (const auto& d : dirs)
        if (std::abs(norm3(d) - 1.0) > tol)
            throw InvalidSchemeError("direction is not unit length");
}

void SubsetPlan::validate(int n_acquired) const {
    if (static_cast<int>(subsets.size()) != n_subsets ||
        static_cast<int>(cond_numbers.size()) != n_subsets)
        throw InvalidPlanError("subset plan is internally inconsistent");
    std::set<int> seen;
    for (const auto& s : subsets) {
        if (s.size() != 6) throw InvalidPlanError("every subset must contain 6 indices");
        for (int i : s) {
            if (i < 0 || i >= n_acquired)
                throw InvalidPlanError("subset index " + std::to_string(i) + " out of range");
            if (!seen.insert(i).second)
                throw InvalidPlanError("subsets are not disjoint (index " + std::to_string(i) + ")");
        }
    }
    for (double c : cond_numbers)
        if (!(c < cond_threshold))
            throw InvalidPlanError("subset condition number " + std::to_string(c) +
                                   " exceeds threshold " + std::to_string(cond_threshold));
}

std::vector<std::array<double, 6>> design_matrix(const DirectionSet& dirs) {
    if (dirs.size() < 1) throw InvalidSchemeError("design_matrix needs at least one direction");
    dirs.validate_unit(1e-6);
    std::vector<std::array<double, 6>> rows(dirs.size());
    auto A = design_eigen(dirs);
    for (int i = 0; i < dirs.size(); ++i)
        for (int j = 0; j < 6; ++j) rows[i][j] = A(i, j);
    return rows;
}

double condition_number_or_inf(const DirectionSet& dirs6) noexcept {
    Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 6>> svd(design_eigen(dirs6));
    const auto& s = svd.singularValues();
    double smax = s(0), smin = s(s.size() - 1);
    if (smin < 1e-12 * smax) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

double condition_number(const DirectionSet& dirs6) {
    if (dirs6.size() != 6) throw InvalidSchemeError("condition_number expects exactly 6 directions");
    dirs6.validate_unit(1e-6);
    double c = condition_number_or_inf(dirs6);
    if (!std::isfinite(c))
        throw SingularSchemeError("degenerate direction set: design matrix is rank deficient");
    return c;
}

double electrostatic_energy(const DirectionSet& dirs) {
    if (dirs.size() < 2) throw InvalidSchemeError("electrostatic_energy needs at least 2 directions");
    double e = energy_or_inf(dirs);
    if (!std::isfinite(e))
        throw SingularSchemeError("coincident or antipodal direction pair");
    return e;
}

DirectionSet optimize_dsm6(std::uint64_t seed, int restarts, int iters) {
    if (restarts < 1) throw InvalidInputError("optimize_dsm6 needs restarts >= 1");

    double best_cond = std::numeric_limits<double>::infinity();
    std::array<double, 12> best_tp{};

    for (int r = 0; r < restarts; ++r) {
        Rng rng(seed, static_cast<std::uint64_t>(r));
        std::array<double, 12> tp; // theta[0..5], phi[6..11]
        for (int i = 0; i < 6; ++i) {
            // uniform on the sphere
            tp[i] = std::acos(rng.uniform(-1.0, 1.0));
            tp[6 + i] = rng.uniform(0.0, 2.0 * M_PI);
        }
        auto eval = [](const std::array<double, 12>& p) {
            DirectionSet d;
            for (int i = 0; i < 6; ++i) d.dirs.push_back(sph2vec(p[i], p[6 + i]));
            return condition_number_or_inf(d);
        };
        double cur = eval(tp);
        double step = 0.4;
        int non_improving = 0;
        for (int it = 0; it < iters; ++it) {
            auto cand = tp;
            int i = static_cast<int>(rng.below(12));
            cand[i] += rng.normal() * step;
            double c = eval(cand);
            if (c < cur) {
                cur = c;
                tp = cand;
                non_improving = 0;
            } else if (++non_improving % 100 == 0) {
                step *= 0.95;
            }
        }
        if (cur < best_cond) {
            best_cond = cur;
            best_tp = tp;
        }
    }

    DirectionSet out;
    for (int i = 0; i < 6; ++i) out.dirs.push_back(normalized(sph2vec(best_tp[i], best_tp[6 + i])));
    return out;
}

std::pair<DirectionSet, SubsetPlan> design_scheme(int n_subsets, std::uint64_t seed,
                                                  int rotation_trials, const DirectionSet& base_in,
                                                  double cond_threshold) {
    if (n_subsets < 1) throw InvalidInputError("design_scheme needs K >= 1");
    DirectionSet base = base_in.size() == 6 ? base_in : optimize_dsm6(seed ^ 0x5D5ull);
    double base_cond = condition_number(base);

    SubsetPlan plan;
    plan.n_subsets = n_subsets;
    plan.cond_threshold = cond_threshold;

    if (n_subsets == 1) {
        plan.subsets = {{0, 1, 2, 3, 4, 5}};
        plan.cond_numbers = {base_cond};
        return {base, plan};
    }

    // Rotating a 6-direction set does change its condition number (the
    // tensor transformation is not isometric in these coordinates), so each
    // copy's rotation is rejection-sampled to stay below the threshold.
    auto accepted_rotation = [&](Rng& rng) {
        for (int attempt = 0; attempt < 100000; ++attempt) {
            Mat3 R = random_rotation(rng);
            if (condition_number_or_inf(rotated(base, R)) < cond_threshold) return R;
        }
        throw SingularSchemeError("no rotation kept the subset condition number below threshold");
    };

    double best_energy = std::numeric_limits<double>::infinity();
    DirectionSet best_union;
    std::vector<double> best_conds;
    for (int t = 0; t < rotation_trials; ++t) {
        Rng rng(seed, static_cast<std::uint64_t>(t));
        DirectionSet un;
        std::vector<double> conds;
        for (int k = 0; k < n_subsets; ++k) {
            DirectionSet copy = rotated(base, accepted_rotation(rng));
            conds.push_back(condition_number_or_inf(copy));
            for (const auto& d : copy.dirs) un.dirs.push_back(d);
        }
        double e = energy_or_inf(un);
        if (e < best_energy) {
            best_energy = e;
            best_union = un;
            best_conds = conds;
        }
    }
    if (!std::isfinite(best_energy))
        throw SingularSchemeError("all rotation trials produced degenerate unions");

    for (int k = 0; k < n_subsets; ++k) {
        std::vector<int> idx(6);
        for (int i = 0; i < 6; ++i) idx[i] = 6 * k + i;
        plan.subsets.push_back(idx);
    }
    plan.cond_numbers = best_conds;
    plan.validate(best_union.size());
    return {best_union, plan};
}

SubsetPlan select_subsets_from_fixed(const DirectionSet& acquired, int n_subsets,
                                     double cond_threshold, int trials, std::uint64_t seed,
                                     const DirectionSet& base_in) {
    if (acquired.size() < 6 * n_subsets)
        throw InvalidInputError("acquired table too small for " + std::to_string(n_subsets) +
                                " subsets of 6");
    acquired.validate_unit(1e-6);
    DirectionSet base = base_in.size() == 6 ? base_in : optimize_dsm6(seed ^ 0x5D5ull);

    // stage 1: candidate 6-subsets from snapped random rotations of the base
    auto snap = [&](const Vec3& v) {
        int best = 0;
        double best_dot = -1.0;
        for (int i = 0; i < acquired.size(); ++i) {
            const auto& a = acquired.dirs[i];
            double d = std::abs(v[0] * a[0] + v[1] * a[1] + v[2] * a[2]);
            if (d > best_dot) {
                best_dot = d;
                best = i;
            }
        }
        return best;
    };

    std::map<std::array<int, 6>, double> candidates;
    for (int t = 0; t < trials; ++t) {
        Rng rng(seed, static_cast<std::uint64_t>(t));
        DirectionSet rot = rotated(base, random_rotation(rng));
        std::array<int, 6> idx{};
        for (int i = 0; i < 6; ++i) idx[i] = snap(rot.dirs[i]);
        std::sort(idx.begin(), idx.end());
        if (std::adjacent_find(idx.begin(), idx.end()) != idx.end()) continue; // collision
        if (candidates.count(idx)) continue;
        DirectionSet sub;
        for (int i : idx) sub.dirs.push_back(acquired.dirs[i]);
        double c = condition_number_or_inf(sub);
        if (c < cond_threshold) candidates.emplace(idx, c);
    }

    std::vector<std::pair<std::array<int, 6>, double>> cand(candidates.begin(), candidates.end());
    const int n_cand = static_cast<int>(cand.size());

    // stage 2: sample K disjoint candidates, minimize union energy
    Rng rng(seed, 0xC0FFEEull);
    double best_energy = std::numeric_limits<double>::infinity();
    std::vector<int> best_pick;
    for (int t = 0; t < trials; ++t) {
        std::vector<int> order(n_cand);
        for (int i = 0; i < n_cand; ++i) order[i] = i;
        rng.shuffle(order);
        std::vector<int> pick;
        std::set<int> used;
        for (int ci : order) {
            bool clash = false;
            for (int i : cand[ci].first) clash = clash || used.count(i);
            if (clash) continue;
            pick.push_back(ci);
            for (int i : cand[ci].first) used.insert(i);
            if (static_cast<int>(pick.size()) == n_subsets) break;
        }
        if (static_cast<int>(pick.size()) < n_subsets) continue;
        DirectionSet un;
        for (int ci : pick)
            for (int i : cand[ci].first) un.dirs.push_back(acquired.dirs[i]);
        double e = energy_or_inf(un);
        if (e < best_energy) {
            best_energy = e;
            best_pick = pick;
        }
    }
    if (best_pick.empty())
        throw InsufficientCandidatesError(
            "found " + std::to_string(n_cand) + " qualifying 6-subsets but no " +
                std::to_string(n_subsets) + " disjoint ones after " + std::to_string(trials) +
                " trials",
            n_cand);

    SubsetPlan plan;
    plan.n_subsets = n_subsets;
    plan.cond_threshold = cond_threshold;
    for (int ci : best_pick) {
        plan.subsets.emplace_back(cand[ci].first.begin(), cand[ci].first.end());
        plan.cond_numbers.push_back(cand[ci].second);
    }
    plan.validate(acquired.size());
    return plan;
}

std::string SubsetPlan::to_json() const {
    nlohmann::json j;
    j["threshold"] = cond_threshold;
    j["subsets"] = subsets;
    j["cond_numbers"] = cond_numbers;
    return j.dump(2);
}

SubsetPlan SubsetPlan::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw FormatError("subset plan: invalid JSON");
    SubsetPlan p;
    try {
        p.cond_threshold = j.at("threshold").get<double>();
        p.subsets = j.at("subsets").get<std::vector<std::vector<int>>>();
        p.cond_numbers = j.at("cond_numbers").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("subset plan: ") + e.what());
    }
    p.n_subsets = static_cast<int>(p.subsets.size());
    return p;
}

void SubsetPlan::save(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f << to_json() << "\n";
}

SubsetPlan SubsetPlan::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return from_json(text);
}

GradientScheme scheme_from_directions(const DirectionSet& dirs, double bval, int n_b0,
                                      bool interspersed) {
    GradientScheme s;
    const int n_dwi = dirs.size();
    const int total = n_dwi + n_b0;
    // b0 volumes interspersed evenly (or all leading), DWIs in table order
    std::vector<bool> b0_slot(total, false);
    if (n_b0 > 0) {
        for (int k = 0; k < n_b0; ++k) {
            int pos = interspersed ? static_cast<int>(static_cast<long>(k) * total / n_b0) : k;
            b0_slot[pos] = true;
        }
    }
    int di = 0;
    for (int i = 0; i < total; ++i) {
        if (b0_slot[i]) {
            s.bvals.push_back(0.0);
            s.bvecs.push_back({0.0, 0.0, 0.0});
            s.is_b0.push_back(true);
        } else {
            s.bvals.push_back(bval);
            s.bvecs.push_back(dirs.dirs[di++]);
            s.is_b0.push_back(false);
        }
    }
    return s;
}

DirectionSet directions_of_scheme(const GradientScheme& scheme) {
    DirectionSet d;
    for (int i = 0; i < scheme.n_volumes(); ++i)
        if (!scheme.is_b0[i]) d.dirs.push_back(scheme.bvecs[i]);
    return d;
}

} // namespace sdnd
