#pragma once
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdnd/errors.hpp"
#include "sdnd/volume.hpp"

namespace sdnd {

// Channel-major volume (c, z, y, x), x fastest. The network's working type.
template <typename T>
struct ChanVol {
    int c = 0, nz = 0, ny = 0, nx = 0;
    std::vector<T> v;

    ChanVol() = default;
    ChanVol(int c, int nz, int ny, int nx, T fill = T(0))
        : c(c), nz(nz), ny(ny), nx(nx),
          v(static_cast<std::size_t>(c) * nz * ny * nx, fill) {}

    std::size_t spatial() const { return static_cast<std::size_t>(nz) * ny * nx; }
    std::size_t size() const { return spatial() * c; }

    T* chan(int ch) { return v.data() + static_cast<std::size_t>(ch) * spatial(); }
    const T* chan(int ch) const { return v.data() + static_cast<std::size_t>(ch) * spatial(); }

    bool same_shape(const ChanVol& o) const {
        return c == o.c && nz == o.nz && ny == o.ny && nx == o.nx;
    }
};

using BlockF = ChanVol<float>;

// ---------------------------------------------------------------------------
// layer kernels (templated so gradient checks can run at float64)
// ---------------------------------------------------------------------------

// 3D cross-correlation, stride 1, zero padding (d-1)/2 ("same").
// w layout: (cout, cin, d, d, d); bias per output channel.
template <typename T>
void conv3d_forward(const ChanVol<T>& x, const std::vector<T>& w, const std::vector<T>& bias,
                    int cout, int d, ChanVol<T>& y);

// Exact gradients. Any of gx/gw/gb may be null to skip that output.
template <typename T>
void conv3d_backward(const ChanVol<T>& x, const std::vector<T>& w, int cout, int d,
                     const ChanVol<T>& gy, ChanVol<T>* gx, std::vector<T>* gw,
                     std::vector<T>* gb);

// Per-channel batch statistics over the spatial extent (batch size 1).
template <typename T>
struct BnCache {
    std::vector<T> mean, var; // batch stats used in the forward pass
};

// Training mode normalizes with batch stats and updates running stats in
// place (running = momentum * running + (1-momentum) * batch); inference
// mode uses the running stats.
template <typename T>
void batchnorm_forward(const ChanVol<T>& x, const std::vector<T>& gamma,
                       const std::vector<T>& beta, std::vector<T>& running_mean,
                       std::vector<T>& running_var, T eps, T momentum, bool training,
                       ChanVol<T>& y, BnCache<T>* cache);

template <typename T>
void batchnorm_backward(const ChanVol<T>& x, const std::vector<T>& gamma, const BnCache<T>& cache,
                        T eps, const ChanVol<T>& gy, ChanVol<T>& gx, std::vector<T>& ggamma,
                        std::vector<T>& gbeta);

template <typename T>
void relu_forward(ChanVol<T>& x); // in place

template <typename T>
void relu_backward(const ChanVol<T>& pre, const ChanVol<T>& gy, ChanVol<T>& gx);

// Mean |pred - target| over masked voxels x channels. Returns the number of
// masked voxels; zero means "skip this block" (loss/grad are then zero).
template <typename T>
struct MaskedL1 {
    double loss = 0.0;
    ChanVol<T> grad;
    std::size_t n_masked = 0;
};

template <typename T>
MaskedL1<T> l1_loss_masked(const ChanVol<T>& pred, const ChanVol<T>& target,
                           const std::vector<std::uint8_t>& mask);

// ---------------------------------------------------------------------------
// model
// ---------------------------------------------------------------------------

struct ConvLayer {
    int cin = 0, cout = 0, d = 3;
    bool has_bn = true, has_relu = true;
    std::vector<float> w, b;
    std::vector<float> gamma, beta, run_mean, run_var;

    std::size_t weight_count() const { return w.size(); }
};

// 10-layer residual denoiser: L1..L9 are conv+BN+ReLU, L10 a linear conv
// back to c channels, with concatenation skips out(L4)->in(L6),
// out(L3)->in(L7), out(L2)->in(L8), out(L1)->in(L9). The network output is
// added to the input (residual learning).
struct DenoiserModel {
    int c = 0, k = 0, d = 3;
    int skip_topology = 1;
    float bn_eps = 1e-5f;
    float bn_momentum = 0.99f;
    bool training_mode = false;
    std::array<ConvLayer, 10> layers;

    std::size_t conv_weight_count() const;
    std::size_t param_count() const; // weights + biases + bn affine/stats
};

// He-initialized model: w ~ N(0, sqrt(2 / fan_in)), biases zero, gamma 1.
DenoiserModel build_model(int c, int k, int d, std::uint64_t seed);

// Residual forward: y = x + net(x). Uses batch or running BN stats per
// model.training_mode; training_mode also updates the running stats.
BlockF forward(DenoiserModel& model, const BlockF& x);

// Intermediate activations kept for the backward pass.
struct ForwardCache {
    std::array<BlockF, 10> conv_in;   // each layer's input (post-concat)
    std::array<BlockF, 10> conv_out;  // pre-BN conv output
    std::array<BnCache<float>, 10> bn;
};

BlockF forward_train(DenoiserModel& model, const BlockF& x, ForwardCache& cache);

struct ParamGrads {
    struct LayerGrads {
        std::vector<float> w, b, gamma, beta;
    };
    std::array<LayerGrads, 10> layers;
};

// Gradients of the masked-L1 objective w.r.t. every parameter, given the
// gradient of the loss w.r.t. the residual output.
void backward(const DenoiserModel& model, const ForwardCache& cache, const BlockF& grad_out,
              ParamGrads& grads);

// ---------------------------------------------------------------------------
// optimization
// ---------------------------------------------------------------------------

struct TrainConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int epochs = 40;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct AdamState {
    struct Slot {
        std::vector<float> m, v;
    };
    std::array<std::array<Slot, 4>, 10> slots; // per layer: w, b, gamma, beta
    long long t = 0;

    static AdamState for_model(const DenoiserModel& model);
};

// One Adam update over every model parameter. t is taken from state.
void adam_step(DenoiserModel& model, const ParamGrads& grads, AdamState& state,
               const TrainConfig& cfg);

// Generic scalar Adam for testing against the reference trajectory.
void adam_update(std::vector<double>& theta, const std::vector<double>& grad,
                 std::vector<double>& m, std::vector<double>& v, long long t, double lr,
                 double beta1, double beta2, double eps);

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

struct TrainingBlock {
    BlockF input, target;
    std::vector<std::uint8_t> mask; // per spatial voxel
};

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    DenoiserModel best_model;
    std::vector<EpochStats> history;
    int best_epoch = -1; // 0-based argmin of validation loss
};

// Seed-deterministic 80/20 split, one shuffled batch-1 pass per epoch,
// validation in inference mode, returns the minimum-validation snapshot.
// initial_weights (when given) starts fine-tuning from that model.
TrainResult train(const DenoiserModel& model, const std::vector<TrainingBlock>& blocks,
                  const TrainConfig& cfg,
                  const std::optional<DenoiserModel>& initial_weights = std::nullopt);

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);

// ---------------------------------------------------------------------------
// whole-volume inference
// ---------------------------------------------------------------------------

struct TileConfig {
    int max_extent = 96; // tile when any dim exceeds this
    int tile = 64;       // tile edge (>= 32)
    int overlap = 8;     // overlap cropped away on interior seams
};

// Inference-mode forward over a standardized c-channel volume, tiled with
// central-crop stitching when the volume exceeds the tile limit.
Volume4D denoise_volume(DenoiserModel& model, const Volume4D& standardized, const BrainMask& mask,
                        const TileConfig& tiles = TileConfig());

// Conversions between canonical volumes and network blocks.
BlockF to_block(const Volume4D& vol);
Volume4D from_block(const BlockF& b, const std::array<double, 3>& voxel_size_mm = {1, 1, 1});

} // namespace sdnd
