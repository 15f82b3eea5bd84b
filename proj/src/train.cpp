#include "spdnet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "spdnet/diagnostics.hpp"
#include "spdnet/tape.hpp"

namespace spdnet {

double OptimState::lr_for_epoch(int epoch) const {
  return learning_rate * std::pow(lr_decay, epoch / lr_decay_every);
}

void sgd_step(std::vector<Param>& params, const std::vector<Mat>& grads, OptimState& opt,
              double lr) {
  if (params.size() != grads.size())
    throw std::invalid_argument("sgd_step: gradient count does not match parameters");
  if (opt.velocity.empty()) {
    opt.velocity.reserve(params.size());
    for (const Param& p : params) opt.velocity.emplace_back(p.value.rows(), p.value.cols());
  }
  if (opt.velocity.size() != params.size())
    throw std::invalid_argument("sgd_step: optimizer state does not match parameters");

  double sq = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!params[i].value.same_shape(grads[i]))
      throw std::invalid_argument("sgd_step: gradient shape mismatch for " + params[i].name);
    for (int k = 0; k < grads[i].size(); ++k) {
      const double g = grads[i][k];
      if (!std::isfinite(g)) {
        diag::counters().nan_steps_skipped++;
        return;
      }
      sq += g * g;
    }
  }
  const double norm = std::sqrt(sq);
  const double clip = (norm > opt.clip_norm && norm > 0.0) ? opt.clip_norm / norm : 1.0;

  for (std::size_t i = 0; i < params.size(); ++i) {
    Mat& v = opt.velocity[i];
    Mat& p = params[i].value;
    for (int k = 0; k < p.size(); ++k) {
      v[k] = opt.momentum * v[k] + clip * grads[i][k];
      p[k] -= lr * v[k];
    }
  }
  opt.step_count++;
}

EpochMetrics train_epoch(Model& model, const std::vector<SkeletonSequence>& data,
                         const PipelineOptions& pipeline, OptimState& opt, double lr,
                         int batch_size, Rng& rng) {
  if (data.empty()) throw std::invalid_argument("train_epoch: empty dataset");
  if (batch_size < 1) throw std::invalid_argument("train_epoch: batch_size must be >= 1");

  std::vector<PreparedSample> samples = prepare_dataset(data, pipeline, &rng);
  std::vector<int> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  EpochMetrics m;
  int correct = 0;
  std::vector<Mat> grads = model.zero_grads();

  for (std::size_t at = 0; at < order.size(); at += batch_size) {
    const std::size_t end = std::min(at + batch_size, order.size());
    for (Mat& g : grads)
      for (int k = 0; k < g.size(); ++k) g[k] = 0.0;
    bool any = false;
    for (std::size_t i = at; i < end; ++i) {
      const PreparedSample& s = samples[order[i]];
      try {
        Tape tape;
        const Model::Built b = model.build(tape, s);
        tape.backward(b.loss);
        tape.accumulate_param_grads(grads);
        const double loss = tape.value(b.loss)(0, 0);
        const std::vector<double>& probs = tape.probs(b.softmax);
        const int pred = int(std::max_element(probs.begin(), probs.end()) - probs.begin());
        m.loss_sum += loss;
        if (pred == s.label) correct++;
        m.samples++;
        any = true;
      } catch (const std::invalid_argument& e) {
        diag::counters().samples_skipped++;
        std::fprintf(stderr, "train_epoch: sample %d skipped: %s\n", order[i], e.what());
        m.skipped++;
      }
    }
    if (any) sgd_step(model.params(), grads, opt, lr);
  }

  if (m.samples > 0) {
    m.loss_mean = m.loss_sum / m.samples;
    m.accuracy = double(correct) / m.samples;
  }
  return m;
}

std::string EvalReport::confusion_csv() const {
  std::ostringstream os;
  for (int c = 0; c < classes; ++c) os << (c ? "," : "") << class_names[c];
  os << "\n";
  for (int r = 0; r < classes; ++r) {
    for (int c = 0; c < classes; ++c) os << (c ? "," : "") << confusion[r][c];
    os << "\n";
  }
  return os.str();
}

std::string EvalReport::summary() const {
  std::ostringstream os;
  os << "accuracy=" << accuracy << "\n";
  for (int c = 0; c < classes; ++c)
    os << "class=" << class_names[c] << " precision=" << precision[c]
       << " recall=" << recall[c] << "\n";
  os << "wall_seconds=" << wall_seconds << "\n";
  return os.str();
}

EvalReport metrics_from_pairs(const std::vector<std::pair<int, int>>& pairs, int classes,
                              std::vector<std::string> class_names) {
  if (classes < 1) throw std::invalid_argument("metrics_from_pairs: classes must be >= 1");
  EvalReport r;
  r.classes = classes;
  if (class_names.empty())
    for (int c = 0; c < classes; ++c) class_names.push_back("class" + std::to_string(c));
  r.class_names = std::move(class_names);
  r.confusion.assign(classes, std::vector<int>(classes, 0));

  int correct = 0;
  for (const auto& [label, pred] : pairs) {
    if (label < 0 || label >= classes || pred < 0 || pred >= classes)
      throw std::invalid_argument("metrics_from_pairs: label or prediction out of range");
    r.confusion[label][pred]++;
    if (label == pred) correct++;
  }
  r.accuracy = pairs.empty() ? 0.0 : double(correct) / pairs.size();

  r.precision.assign(classes, 0.0);
  r.recall.assign(classes, 0.0);
  for (int c = 0; c < classes; ++c) {
    int col = 0, row = 0;
    for (int k = 0; k < classes; ++k) {
      col += r.confusion[k][c];
      row += r.confusion[c][k];
    }
    r.precision[c] = col > 0 ? double(r.confusion[c][c]) / col : 0.0;
    r.recall[c] = row > 0 ? double(r.confusion[c][c]) / row : 0.0;
  }
  return r;
}

EvalReport evaluate(const Model& model, const std::vector<PreparedSample>& samples,
                    std::vector<std::string> class_names) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(samples.size());
  for (const PreparedSample& s : samples) pairs.emplace_back(s.label, model.predict(s));
  EvalReport r = metrics_from_pairs(pairs, model.config().classes, std::move(class_names));
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << "worst_rel_err=" << worst_rel_err << " at " << worst_param << "\n";
  for (const GradCheckEntry& e : entries)
    os << "  " << e.param << ": rel=" << e.max_rel_err << " abs=" << e.max_abs_err
       << " coords=" << e.coords << "\n";
  return os.str();
}

GradCheckReport gradient_check(Model& model, const PreparedSample& sample, double h,
                               int coords_per_param, Rng& rng) {
  if (h < 1e-7 || h > 1e-3)
    throw std::invalid_argument("gradient_check: h must lie in [1e-7, 1e-3]");

  Tape tape;
  const Model::Built built = model.build(tape, sample);
  tape.backward(built.loss);
  std::vector<Mat> grads = model.zero_grads();
  tape.accumulate_param_grads(grads);

  auto loss_at = [&]() {
    Tape t;
    const Model::Built b = model.build(t, sample);
    return t.value(b.loss)(0, 0);
  };

  GradCheckReport report;
  for (int pi = 0; pi < model.param_count(); ++pi) {
    Param& p = model.params()[pi];
    GradCheckEntry entry;
    entry.param = p.name;
    const int n = p.value.size();
    const int picks = std::min(coords_per_param, n);
    for (int c = 0; c < picks; ++c) {
      const int k = n <= coords_per_param ? c : rng.uniform_int(n);
      const double keep = p.value[k];
      p.value[k] = keep + h;
      const double up = loss_at();
      p.value[k] = keep - h;
      const double down = loss_at();
      p.value[k] = keep;
      const double fd = (up - down) / (2.0 * h);
      const double ad = grads[pi][k];
      const double abs_err = std::fabs(fd - ad);
      const double denom = std::max({std::fabs(fd), std::fabs(ad), 1e-8});
      entry.max_abs_err = std::max(entry.max_abs_err, abs_err);
      entry.max_rel_err = std::max(entry.max_rel_err, abs_err / denom);
      entry.coords++;
    }
    if (entry.max_rel_err > report.worst_rel_err) {
      report.worst_rel_err = entry.max_rel_err;
      report.worst_param = entry.param;
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace spdnet
