#include "sdnd/gradients.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace sdnd {

namespace {

std::vector<std::vector<double>> read_rows(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        if (!ss.eof() && ss.fail()) throw FormatError(path + ": non-numeric token");
        if (!row.empty()) rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

GradientScheme read_gradients(const std::string& bvals_path, const std::string& bvecs_path,
                              double b0_threshold, double scale) {
    auto bval_rows = read_rows(bvals_path);
    auto bvec_rows = read_rows(bvecs_path);
    if (bval_rows.size() != 1)
        throw FormatError(bvals_path + ": expected a single row of b-values");
    if (bvec_rows.size() != 3)
        throw FormatError(bvecs_path + ": expected three rows of vector components");

    const std::size_t n = bval_rows[0].size();
    for (const auto& row : bvec_rows)
        if (row.size() != n)
            throw FormatError("bvals has " + std::to_string(n) + " entries but a bvecs row has " +
                              std::to_string(row.size()));

    GradientScheme s;
    for (std::size_t i = 0; i < n; ++i) {
        double b = bval_rows[0][i] * scale;
        if (b < 0.0) throw FormatError(bvals_path + ": negative b-value");
        std::array<double, 3> v = {bvec_rows[0][i], bvec_rows[1][i], bvec_rows[2][i]};
        double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        bool b0 = b <= b0_threshold;
        if (!b0 && norm == 0.0)
            throw InvalidSchemeError("volume " + std::to_string(i) +
                                     " has b > 0 but a zero direction vector");
        if (norm > 0.0)
            for (double& c : v) c /= norm;
        s.bvals.push_back(b);
        s.bvecs.push_back(v);
        s.is_b0.push_back(b0);
    }
    return s;
}

void write_gradients(const GradientScheme& scheme, const std::string& bvals_path,
                     const std::string& bvecs_path) {
    std::ofstream fb(bvals_path, std::ios::trunc);
    if (!fb) throw IoError("cannot write " + bvals_path);
    fb << std::setprecision(17);
    for (int i = 0; i < scheme.n_volumes(); ++i) fb << (i ? " " : "") << scheme.bvals[i];
    fb << "\n";

    std::ofstream fv(bvecs_path, std::ios::trunc);
    if (!fv) throw IoError("cannot write " + bvecs_path);
    fv << std::setprecision(17);
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < scheme.n_volumes(); ++i) fv << (i ? " " : "") << scheme.bvecs[i][c];
        fv << "\n";
    }
}

} // namespace sdnd
