#pragma once

#include <functional>
#include <string>

#include "relief/adam.hpp"
#include "relief/losses.hpp"

namespace relief {

struct CoarseConfig {
    int epochs = 1000;
    int points_per_epoch = 1024;  // resampled every epoch, 80:20 surface:uniform
    double sigma = 0.05;          // surface jitter
    double eps = 0.02;            // shell thickness
    double lambda_eik = 0.1;
    double lr = 1e-4;
    double lr_final = 0.0;  // >0 enables exponential decay toward this value
    uint64_t seed = 0;
    LossNorm norm = LossNorm::kL1;
    bool early_stop = true;       // stop once the loss stops decreasing
    double early_stop_delta = 1e-5;
    int early_stop_patience = 20;
    int holdout_points = 1024;
};

struct DetailConfig {
    int epochs = 250;
    int rays_per_step = 2048;
    double lambda1 = 1.0;   // SDF drift weight
    double lambda2 = 0.1;   // eikonal weight
    double lr = 1e-4;
    double lr_final = 0.0;  // >0 enables exponential decay toward this value
    uint64_t seed = 0;
    RenderToggles toggles;
    int drift_points_per_step = 512;  // fresh mesh-neighborhood samples, 80:20
    double sigma = 0.05;
    double eps = 0.02;
    TracerConfig tracer;
    LossNorm norm = LossNorm::kL1;
    bool early_stop = true;
    double early_stop_delta = 1e-5;
    int early_stop_patience = 20;
};

struct EpochRecord {
    int epoch = 0;
    double total = 0.0;
    double geo = 0.0;    // coarse stage
    double eik = 0.0;
    double photo = 0.0;  // detail stage
    double drift = 0.0;
    int rays_hit = 0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    double wall_seconds = 0.0;
    bool early_stopped = false;
    double holdout_mean_abs_err = 0.0;   // coarse: mean |f - sdf_gt| on held-out samples
    double holdout_eik_residual = 0.0;   // coarse: mean | |grad f| - 1 | near the surface
    int checkpoints_written = 0;         // maintained by the caller's hook
};

void save_report_ldjson(const std::string& path, const TrainReport& report);

using EpochHook = std::function<void(int epoch, const EpochRecord& record)>;

/// Stage 1: distill the coarse mesh prior into the field. Resamples
/// supervision points every epoch, runs Adam, and validates against held-out
/// samples. Aborts with DivergenceError if the loss turns non-finite.
TrainReport run_coarse(SdfField& field, const TriMesh& mesh, const Bvh& bvh, const CoarseConfig& cfg,
                       const EpochHook& hook = nullptr);

/// Stage 2: joint photometric refinement of the geometry and rendering
/// networks against one image. Only masked pixels are optimized; rays that
/// miss are skipped that step; an all-miss epoch aborts (collapsed field).
TrainReport run_detail(SdfField& field, RadianceField& radiance, const ImageRGB& image, const ImageGray& mask,
                       const Camera& cam, const TriMesh& mesh, const Bvh& bvh, const DetailConfig& cfg,
                       const EpochHook& hook = nullptr);

}  // namespace relief
