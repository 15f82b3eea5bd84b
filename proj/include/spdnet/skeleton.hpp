#pragma once

#include <string>
#include <vector>

#include "spdnet/mat.hpp"
#include "spdnet/mc_spd.hpp"
#include "spdnet/rng.hpp"

namespace spdnet {

// One action sequence: frames of joint coordinates (each frame N_j x 3),
// a class label and a subject id.
struct SkeletonSequence {
  std::vector<Mat> frames;
  int label = -1;
  int subject = 0;

  int frame_count() const { return int(frames.size()); }
  int joints() const { return frames.empty() ? 0 : frames.front().rows(); }
};

// T per-subclip SPD descriptors (single channel, N_j x N_j) plus the label.
struct SpdSample {
  std::vector<McSpdTensor> descriptors;
  int label = -1;
};

// Sample form consumed by the models: SPD descriptors for the manifold
// paths and the raw downsampled frames (flattened per frame) for the
// Euclidean-space baseline.
struct PreparedSample {
  SpdSample spd;
  std::vector<std::vector<double>> frames;
  int label = -1;
  int subject = 0;
};

// Splits the sequence into `subclips` contiguous near-equal subsequences
// (the remainder spread over the first ones) and keeps one frame per
// subsequence: a uniform draw when rng is given, the middle frame when it
// is null. Sequences shorter than `subclips` are repeated cyclically, with
// the event counted.
SkeletonSequence downsample(const SkeletonSequence& seq, int subclips, Rng* rng);

// One uniform factor in [0.95, 1.05] applied to every coordinate.
SkeletonSequence random_scale(const SkeletonSequence& seq, Rng& rng);

// Rotation about x, y, z with angles uniform in [-45, 45] degrees,
// composed as R = Rz * Ry * Rx (right-handed, counterclockwise looking
// down the positive axis) and applied to every joint.
SkeletonSequence random_rotate(const SkeletonSequence& seq, Rng& rng);

Mat rotation_zyx(double ax, double ay, double az);

enum class MeanMode {
  kMean,        // x_bar = (1/T) sum_t x_t
  kLiteralSum,  // x_bar = sum_t x_t, the formula as printed
};

struct FeatureOptions {
  MeanMode mean_mode = MeanMode::kMean;
  double ridge_scale = 1e-3;  // lambda = ridge_scale * trace / N_j
  double ridge_floor = 1e-6;
};

// X_t = (x_t - x_bar)(x_t - x_bar)^T + lambda*I per frame of an already
// downsampled sequence. ridge_scale = 0 with floor 0 yields the raw rank<=3
// outer products (useful for algebraic checks only).
SpdSample extract_spd_features(const SkeletonSequence& seq, const FeatureOptions& opts = {});

struct PipelineOptions {
  int subclips = 12;
  bool training = false;  // augmentations and random subclip draws
  bool augment_scale = true;
  bool augment_rotate = true;
  FeatureOptions feature;
};

PreparedSample prepare_sample(const SkeletonSequence& seq, const PipelineOptions& opts,
                              Rng* rng);

std::vector<PreparedSample> prepare_dataset(const std::vector<SkeletonSequence>& seqs,
                                            const PipelineOptions& opts, Rng* rng);

// ---------------------------------------------------------------------------
// Synthetic actions
// ---------------------------------------------------------------------------

struct SyntheticSpec {
  int classes = 3;
  int per_class = 60;
  int joints = 15;
  int frames = 60;
  int subjects = 6;
};

// Each class is a distinct parametric trajectory family: a class-specific
// subset of joints oscillates along class-specific axes with its own
// amplitude and frequency, on top of a static class posture offset.
// Per-sample phase and amplitude jitter plus coordinate noise; per-subject
// posture shifts make subject-wise splits meaningful.
std::vector<SkeletonSequence> generate_synthetic(const SyntheticSpec& spec, Rng& rng);

// Smallest pairwise L2 distance between class-conditional mean trajectories.
double class_margin(const std::vector<SkeletonSequence>& seqs, int classes);

// ---------------------------------------------------------------------------
// File format: `spdnet-skel v1 <N_j>` header, then per sequence
// `seq <label> <subject> <T>` followed by T lines of 3*N_j coordinates.
// ---------------------------------------------------------------------------

void save_skeleton_file(const std::string& path, const std::vector<SkeletonSequence>& seqs);

// Malformed records are rejected individually with a line report; the rest
// of the file still loads.
std::vector<SkeletonSequence> load_skeleton_file(const std::string& path);

}  // namespace spdnet
