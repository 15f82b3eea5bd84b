#include "spdnet/skeleton.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "spdnet/diagnostics.hpp"

namespace spdnet {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

SkeletonSequence downsample(const SkeletonSequence& seq, int subclips, Rng* rng) {
  require(subclips >= 1, "downsample: subclips must be >= 1");
  require(seq.frame_count() >= 1, "downsample: empty sequence");

  SkeletonSequence out;
  out.label = seq.label;
  out.subject = seq.subject;
  out.frames.reserve(subclips);

  const int total = seq.frame_count();
  if (total < subclips) {
    diag::counters().cyclic_paddings++;
    for (int i = 0; i < subclips; ++i) out.frames.push_back(seq.frames[i % total]);
    return out;
  }

  const int base = total / subclips;
  const int rem = total % subclips;
  int start = 0;
  for (int i = 0; i < subclips; ++i) {
    const int len = base + (i < rem ? 1 : 0);
    const int pick = rng ? start + rng->uniform_int(len) : start + (len - 1) / 2;
    out.frames.push_back(seq.frames[pick]);
    start += len;
  }
  return out;
}

SkeletonSequence random_scale(const SkeletonSequence& seq, Rng& rng) {
  const double s = rng.uniform(0.95, 1.05);
  SkeletonSequence out;
  out.label = seq.label;
  out.subject = seq.subject;
  out.frames.reserve(seq.frames.size());
  for (const Mat& f : seq.frames) out.frames.push_back(scale(f, s));
  return out;
}

Mat rotation_zyx(double ax, double ay, double az) {
  const double cx = std::cos(ax), sx = std::sin(ax);
  const double cy = std::cos(ay), sy = std::sin(ay);
  const double cz = std::cos(az), sz = std::sin(az);
  const Mat rx = {{1, 0, 0}, {0, cx, -sx}, {0, sx, cx}};
  const Mat ry = {{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}};
  const Mat rz = {{cz, -sz, 0}, {sz, cz, 0}, {0, 0, 1}};
  return matmul(rz, matmul(ry, rx));
}

SkeletonSequence random_rotate(const SkeletonSequence& seq, Rng& rng) {
  const double lim = 45.0 * kPi / 180.0;
  const double ax = rng.uniform(-lim, lim);
  const double ay = rng.uniform(-lim, lim);
  const double az = rng.uniform(-lim, lim);
  const Mat rt = transpose(rotation_zyx(ax, ay, az));
  SkeletonSequence out;
  out.label = seq.label;
  out.subject = seq.subject;
  out.frames.reserve(seq.frames.size());
  for (const Mat& f : seq.frames) out.frames.push_back(matmul(f, rt));
  return out;
}

SpdSample extract_spd_features(const SkeletonSequence& seq, const FeatureOptions& opts) {
  const int t_count = seq.frame_count();
  require(t_count >= 1, "extract_spd_features: empty sequence");
  const int nj = seq.joints();

  Mat mean(nj, 3);
  for (const Mat& f : seq.frames) {
    require(f.rows() == nj && f.cols() == 3, "extract_spd_features: inconsistent frame shape");
    mean = add(mean, f);
  }
  if (opts.mean_mode == MeanMode::kMean) mean = scale(mean, 1.0 / t_count);

  SpdSample out;
  out.label = seq.label;
  out.descriptors.reserve(t_count);
  for (const Mat& f : seq.frames) {
    const Mat centered = sub(f, mean);
    Mat x = matmul(centered, transpose(centered));
    const double lambda = std::max(opts.ridge_scale * trace(x) / nj, opts.ridge_floor);
    for (int i = 0; i < nj; ++i) x(i, i) += lambda;
    McSpdTensor d;
    d.channels.push_back(std::move(x));
    out.descriptors.push_back(std::move(d));
  }
  return out;
}

PreparedSample prepare_sample(const SkeletonSequence& seq, const PipelineOptions& opts,
                              Rng* rng) {
  require(!opts.training || rng != nullptr, "prepare_sample: training mode needs an rng");
  SkeletonSequence work = seq;
  if (opts.training) {
    if (opts.augment_scale) work = random_scale(work, *rng);
    if (opts.augment_rotate) work = random_rotate(work, *rng);
  }
  work = downsample(work, opts.subclips, opts.training ? rng : nullptr);

  PreparedSample out;
  out.label = seq.label;
  out.subject = seq.subject;
  out.spd = extract_spd_features(work, opts.feature);
  out.frames.reserve(work.frames.size());
  for (const Mat& f : work.frames) {
    std::vector<double> row(f.data(), f.data() + f.size());
    out.frames.push_back(std::move(row));
  }
  return out;
}

std::vector<PreparedSample> prepare_dataset(const std::vector<SkeletonSequence>& seqs,
                                            const PipelineOptions& opts, Rng* rng) {
  std::vector<PreparedSample> out;
  out.reserve(seqs.size());
  for (const SkeletonSequence& s : seqs) out.push_back(prepare_sample(s, opts, rng));
  return out;
}

std::vector<SkeletonSequence> generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
  require(spec.classes >= 2, "generate_synthetic: need at least 2 classes");
  require(spec.per_class >= 1 && spec.joints >= 1 && spec.frames >= 1 && spec.subjects >= 1,
          "generate_synthetic: sizes must be positive");

  Mat base(spec.joints, 3);
  for (int j = 0; j < spec.joints; ++j) {
    base(j, 0) = rng.uniform(-0.5, 0.5);
    base(j, 1) = 0.15 * j - 0.075 * spec.joints + rng.uniform(-0.1, 0.1);
    base(j, 2) = rng.uniform(-0.5, 0.5);
  }

  std::vector<Mat> subject_offset(spec.subjects);
  for (int s = 0; s < spec.subjects; ++s) {
    Mat off(1, 3);
    for (int c = 0; c < 3; ++c) off(0, c) = rng.uniform(-0.08, 0.08);
    subject_offset[s] = off;
  }

  const int per_subject = (spec.per_class + spec.subjects - 1) / spec.subjects;
  std::vector<SkeletonSequence> out;
  out.reserve(std::size_t(spec.classes) * spec.per_class);

  for (int k = 0; k < spec.classes; ++k) {
    const int axis = k % 3;
    const int cross_axis = (k + 1) % 3;
    const double amplitude = 0.55 + 0.18 * k;
    const double frequency = 1.0 + 0.5 * k;
    const double posture = 0.35 * (k + 1);

    for (int i = 0; i < spec.per_class; ++i) {
      const int subject = std::min(i / per_subject, spec.subjects - 1);
      const double phase = rng.uniform(0.0, 2.0 * kPi);
      const double amp_jit = rng.uniform(0.9, 1.1);

      SkeletonSequence seq;
      seq.label = k;
      seq.subject = subject;
      seq.frames.reserve(spec.frames);
      for (int t = 0; t < spec.frames; ++t) {
        const double arg = 2.0 * kPi * frequency * t / spec.frames + phase;
        Mat frame = base;
        for (int j = 0; j < spec.joints; ++j) {
          if (j % spec.classes == k) {
            frame(j, axis) += posture + amp_jit * amplitude * std::sin(arg);
            frame(j, cross_axis) += 0.35 * amp_jit * amplitude * std::cos(arg);
          }
          for (int c = 0; c < 3; ++c)
            frame(j, c) += subject_offset[subject](0, c) + 0.02 * rng.normal();
        }
        seq.frames.push_back(std::move(frame));
      }
      out.push_back(std::move(seq));
    }
  }
  return out;
}

double class_margin(const std::vector<SkeletonSequence>& seqs, int classes) {
  require(classes >= 2 && !seqs.empty(), "class_margin: need data and >= 2 classes");
  const int frames = seqs.front().frame_count();
  const int joints = seqs.front().joints();

  std::vector<std::vector<Mat>> mean(classes, std::vector<Mat>(frames, Mat(joints, 3)));
  std::vector<int> count(classes, 0);
  for (const SkeletonSequence& s : seqs) {
    require(s.frame_count() == frames && s.joints() == joints,
            "class_margin: inconsistent sequence shapes");
    for (int t = 0; t < frames; ++t) mean[s.label][t] = add(mean[s.label][t], s.frames[t]);
    count[s.label]++;
  }
  for (int k = 0; k < classes; ++k) {
    require(count[k] > 0, "class_margin: class " + std::to_string(k) + " has no samples");
    for (Mat& m : mean[k]) m = scale(m, 1.0 / count[k]);
  }

  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < classes; ++a)
    for (int b = a + 1; b < classes; ++b) {
      double s = 0.0;
      for (int t = 0; t < frames; ++t) {
        const Mat d = sub(mean[a][t], mean[b][t]);
        s += fro_norm(d) * fro_norm(d);
      }
      best = std::min(best, std::sqrt(s));
    }
  return best;
}

void save_skeleton_file(const std::string& path, const std::vector<SkeletonSequence>& seqs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_skeleton_file: cannot open " + path);
  const int nj = seqs.empty() ? 0 : seqs.front().joints();
  os << "spdnet-skel v1 " << nj << "\n";
  char buf[32];
  for (const SkeletonSequence& s : seqs) {
    if (s.joints() != nj)
      throw std::invalid_argument("save_skeleton_file: mixed joint counts");
    os << "seq " << s.label << " " << s.subject << " " << s.frame_count() << "\n";
    for (const Mat& f : s.frames) {
      for (int i = 0; i < f.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", f[i]);
        os << (i ? " " : "") << buf;
      }
      os << "\n";
    }
  }
  if (!os) throw std::runtime_error("save_skeleton_file: write failed for " + path);
}

std::vector<SkeletonSequence> load_skeleton_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_skeleton_file: cannot open " + path);

  std::string line;
  int line_no = 0;
  if (!std::getline(is, line)) {
    std::fprintf(stderr, "load_skeleton_file: %s is empty\n", path.c_str());
    return {};
  }
  ++line_no;

  std::istringstream header(line);
  std::string magic, version;
  int nj = 0;
  header >> magic >> version >> nj;
  if (magic != "spdnet-skel" || version != "v1" || nj < 1)
    throw std::runtime_error("load_skeleton_file: unrecognized header '" + line + "'");

  std::vector<SkeletonSequence> out;
  auto reject = [&](int at, const std::string& why) {
    diag::counters().records_rejected++;
    std::fprintf(stderr, "load_skeleton_file: %s line %d: %s (record skipped)\n",
                 path.c_str(), at, why.c_str());
  };

  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream head(line);
    std::string tag;
    int label = 0, subject = 0, frames = 0;
    head >> tag >> label >> subject >> frames;
    if (tag != "seq" || head.fail() || frames < 1) {
      reject(line_no, "malformed sequence header '" + line + "'");
      continue;
    }
    SkeletonSequence seq;
    seq.label = label;
    seq.subject = subject;
    seq.frames.reserve(frames);
    bool ok = true;
    for (int t = 0; t < frames; ++t) {
      if (!std::getline(is, line)) {
        reject(line_no, "unexpected end of file inside sequence");
        ok = false;
        break;
      }
      ++line_no;
      std::istringstream row(line);
      Mat frame(nj, 3);
      for (int i = 0; i < frame.size(); ++i) {
        if (!(row >> frame[i])) {
          reject(line_no, "expected " + std::to_string(3 * nj) + " coordinates");
          ok = false;
          break;
        }
        if (!std::isfinite(frame[i])) {
          reject(line_no, "non-finite coordinate at offset " + std::to_string(i));
          ok = false;
          break;
        }
      }
      if (ok) {
        double extra;
        if (row >> extra) {
          reject(line_no, "trailing values beyond " + std::to_string(3 * nj) + " coordinates");
          ok = false;
        }
      }
      if (!ok) {
        // consume the rest of the record so recovery resumes at the next header
        for (int skip = t + 1; skip < frames && std::getline(is, line); ++skip) ++line_no;
        break;
      }
      seq.frames.push_back(std::move(frame));
    }
    if (ok) out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace spdnet
