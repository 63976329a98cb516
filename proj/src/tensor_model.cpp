#include "sdnd/tensor_model.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace sdnd {

namespace {
constexpr double kClampEps = 1e-6;
}

Volume4D TensorField::to_volume(const std::array<double, 3>& voxel_size_mm) const {
    Volume4D vol(nx, ny, nz, 6);
    vol.voxel_size_mm = voxel_size_mm;
    for (int v = 0; v < 6; ++v)
        for (std::size_t i = 0; i < size(); ++i) vol.data[v * size() + i] = d[i][v];
    return vol;
}

TensorField TensorField::from_volume(const Volume4D& vol) {
    if (vol.nv != 6) throw ShapeError("tensor volume must have 6 components");
    TensorField tf(vol.nx, vol.ny, vol.nz);
    for (int v = 0; v < 6; ++v)
        for (std::size_t i = 0; i < tf.size(); ++i) tf.d[i][v] = vol.data[v * tf.size() + i];
    return tf;
}

double adc(double S, double S0, double b, bool* clamped) {
    if (S0 <= 0.0) throw InvalidSignalError("ADC needs S0 > 0");
    if (b <= 0.0) throw InvalidSignalError("ADC needs b > 0");
    double floor = kClampEps * S0;
    bool clip = S < floor;
    if (clamped) *clamped = clip;
    double s = clip ? floor : S;
    return -std::log(s / S0) / b;
}

Volume4D mean_b0(const Volume4D& vol, const GradientScheme& scheme) {
    auto idx = scheme.b0_indices();
    if (idx.empty()) throw InvalidSchemeError("no b=0 volumes in scheme");
    Volume4D out(vol.nx, vol.ny, vol.nz, 1);
    out.voxel_size_mm = vol.voxel_size_mm;
    const double inv = 1.0 / static_cast<double>(idx.size());
    for (int b : idx) {
        const double* src = vol.vol(b);
        for (std::size_t i = 0; i < out.n_voxels(); ++i) out.data[i] += src[i];
    }
    for (double& v : out.data) v *= inv;
    return out;
}

TensorField fit_tensor(const Volume4D& vol, const GradientScheme& scheme, const BrainMask& mask,
                       S0Source s0_source, const Volume4D* s0_provided, bool force_ols) {
    if (scheme.n_volumes() != vol.nv)
        throw ShapeError("scheme entries do not match volume count");
    mask.check_matches(vol);
    scheme.validate_for_fit();

    const auto dwi_idx = scheme.dwi_indices();
    const int n = static_cast<int>(dwi_idx.size());

    DirectionSet dirs;
    for (int i : dwi_idx) dirs.dirs.push_back(scheme.bvecs[i]);
    Eigen::MatrixXd A(n, 6);
    {
        auto rows = design_matrix(dirs);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 6; ++j) A(i, j) = rows[i][j];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    if (svd.rank() < 6 ||
        svd.singularValues()(5) < 1e-12 * svd.singularValues()(0))
        throw SingularSchemeError("DWI directions do not span rank 6");

    // one factorization shared by every voxel
    Eigen::Matrix<double, 6, 6> inv6;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
    const bool exact = (n == 6) && !force_ols;
    if (exact)
        inv6 = A.inverse();
    else
        qr.compute(A);

    Volume4D s0vol;
    if (s0_source == S0Source::provided) {
        if (!s0_provided) throw InvalidInputError("S0Source::provided without an S0 volume");
        if (!s0_provided->same_grid(vol) || s0_provided->nv != 1)
            throw ShapeError("provided S0 volume has wrong dims");
        s0vol = *s0_provided;
    } else {
        s0vol = mean_b0(vol, scheme);
    }

    TensorField tf(vol.nx, vol.ny, vol.nz);
    const std::size_t nvox = tf.size();

#pragma omp parallel for schedule(static)
    for (long long vi = 0; vi < static_cast<long long>(nvox); ++vi) {
        const std::size_t i = static_cast<std::size_t>(vi);
        if (!mask.data[i]) {
            tf.flags[i] = kOutsideMask;
            continue;
        }
        double S0 = s0vol.data[i];
        if (S0 <= 0.0) {
            // cannot take the log ratio anywhere in this voxel
            tf.flags[i] = kOutsideMask;
            continue;
        }
        Eigen::VectorXd C(n);
        std::uint8_t fl = 0;
        for (int r = 0; r < n; ++r) {
            bool clip = false;
            C(r) = adc(vol.data[static_cast<std::size_t>(dwi_idx[r]) * nvox + i], S0,
                       scheme.bvals[dwi_idx[r]], &clip);
            if (clip) fl |= kClampedSignal;
        }
        Eigen::Matrix<double, 6, 1> D = exact ? (inv6 * C).eval() : qr.solve(C).eval();
        for (int j = 0; j < 6; ++j) tf.d[i][j] = D(j);
        auto eig = eigen_sym3(tf.d[i]);
        if (eig.lambda[2] < 0.0) fl |= kNegativeEigenvalue;
        tf.flags[i] = fl;
    }
    return tf;
}

Volume4D synthesize_dwis(const TensorField& tf, const Volume4D& S0, const GradientScheme& target,
                         const BrainMask& mask) {
    if (target.n_volumes() < 1) throw InvalidSchemeError("target scheme is empty");
    if (S0.nv != 1 || S0.nx != tf.nx || S0.ny != tf.ny || S0.nz != tf.nz)
        throw ShapeError("S0 volume dims do not match tensor field");
    if (mask.nx != tf.nx || mask.ny != tf.ny || mask.nz != tf.nz)
        throw ShapeError("mask dims do not match tensor field");

    const std::size_t nvox = tf.size();
    Volume4D out(tf.nx, tf.ny, tf.nz, target.n_volumes());
    out.voxel_size_mm = S0.voxel_size_mm;
    out.scheme = target;

    // per-volume alpha row (zero row for b=0 volumes)
    std::vector<std::array<double, 6>> alpha(target.n_volumes());
    for (int v = 0; v < target.n_volumes(); ++v) {
        if (target.is_b0[v]) {
            alpha[v] = {0, 0, 0, 0, 0, 0};
        } else {
            const auto& g = target.bvecs[v];
            alpha[v] = {g[0] * g[0], g[1] * g[1], g[2] * g[2],
                        2 * g[0] * g[1], 2 * g[0] * g[2], 2 * g[1] * g[2]};
        }
    }

#pragma omp parallel for schedule(static)
    for (long long vi = 0; vi < static_cast<long long>(nvox); ++vi) {
        const std::size_t i = static_cast<std::size_t>(vi);
        if (!mask.data[i]) continue;
        const double s0 = S0.data[i];
        const auto& D = tf.d[i];
        for (int v = 0; v < target.n_volumes(); ++v) {
            if (target.is_b0[v]) {
                out.data[static_cast<std::size_t>(v) * nvox + i] = s0;
            } else {
                const auto& a = alpha[v];
                double ad = a[0] * D[0] + a[1] * D[1] + a[2] * D[2] + a[3] * D[3] + a[4] * D[4] +
                            a[5] * D[5];
                out.data[static_cast<std::size_t>(v) * nvox + i] =
                    s0 * std::exp(-target.bvals[v] * ad);
            }
        }
    }
    return out;
}

EigenSym3 eigen_sym3(const std::array<double, 6>& d) {
    // a[r][c], symmetric
    double a[3][3] = {{d[0], d[3], d[4]}, {d[3], d[1], d[5]}, {d[4], d[5], d[2]}};
    double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

    double norm = 0.0;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) norm += a[r][c] * a[r][c];
    norm = std::sqrt(norm);
    const double tol = 1e-14 * norm;

    auto off = [&]() {
        return std::sqrt(2.0 * (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]));
    };

    for (int sweep = 0; sweep < 50 && off() > tol; ++sweep) {
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a[p][q]) <= tol / 10.0) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;

                double app = a[p][p], aqq = a[q][q], apq = a[p][q];
                a[p][p] = app - t * apq;
                a[q][q] = aqq + t * apq;
                a[p][q] = a[q][p] = 0.0;
                int r = 3 - p - q; // the remaining index
                double arp = a[r][p], arq = a[r][q];
                a[r][p] = a[p][r] = c * arp - s * arq;
                a[r][q] = a[q][r] = s * arp + c * arq;
                for (int k = 0; k < 3; ++k) {
                    double vp = v[k][p], vq = v[k][q];
                    v[k][p] = c * vp - s * vq;
                    v[k][q] = s * vp + c * vq;
                }
            }
        }
    }

    // sort descending, keep vectors paired
    int order[3] = {0, 1, 2};
    double lam[3] = {a[0][0], a[1][1], a[2][2]};
    for (int i = 0; i < 2; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (lam[order[j]] > lam[order[i]]) std::swap(order[i], order[j]);

    EigenSym3 out;
    for (int i = 0; i < 3; ++i) {
        int oi = order[i];
        out.lambda[i] = lam[oi];
        std::array<double, 3> e = {v[0][oi], v[1][oi], v[2][oi]};
        // sign convention: largest-magnitude component positive
        int big = 0;
        for (int k = 1; k < 3; ++k)
            if (std::abs(e[k]) > std::abs(e[big])) big = k;
        if (e[big] < 0.0)
            for (double& c : e) c = -c;
        out.vec[i] = e;
    }
    return out;
}

DtiMetrics dti_metrics(const TensorField& tf, const BrainMask& mask) {
    if (mask.nx != tf.nx || mask.ny != tf.ny || mask.nz != tf.nz)
        throw ShapeError("mask dims do not match tensor field");
    DtiMetrics m;
    m.nx = tf.nx;
    m.ny = tf.ny;
    m.nz = tf.nz;
    const std::size_t n = tf.size();
    m.fa.assign(n, 0.0);
    m.md.assign(n, 0.0);
    m.ad.assign(n, 0.0);
    m.rd.assign(n, 0.0);
    m.v1.assign(n, {0.0, 0.0, 0.0});
    m.lambda.assign(n, {0.0, 0.0, 0.0});
    m.flags = tf.flags;

#pragma omp parallel for schedule(static)
    for (long long vi = 0; vi < static_cast<long long>(n); ++vi) {
        const std::size_t i = static_cast<std::size_t>(vi);
        if (!mask.data[i] || (tf.flags[i] & kOutsideMask)) continue;
        auto eig = eigen_sym3(tf.d[i]);
        const auto& l = eig.lambda;
        double md = (l[0] + l[1] + l[2]) / 3.0;
        double norm2 = l[0] * l[0] + l[1] * l[1] + l[2] * l[2];
        double fa = 0.0;
        if (std::sqrt(norm2) >= 1e-12) {
            double dev = (l[0] - md) * (l[0] - md) + (l[1] - md) * (l[1] - md) +
                         (l[2] - md) * (l[2] - md);
            fa = std::sqrt(1.5 * dev / norm2);
        }
        m.fa[i] = std::min(1.0, std::max(0.0, fa));
        m.md[i] = md;
        m.ad[i] = l[0];
        m.rd[i] = 0.5 * (l[1] + l[2]);
        m.v1[i] = eig.vec[0];
        m.lambda[i] = l;
    }
    return m;
}

} // namespace sdnd
