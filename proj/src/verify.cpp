#include "spdnet/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "spdnet/layers.hpp"
#include "spdnet/mc_spd.hpp"
#include "spdnet/oracles.hpp"
#include "spdnet/sym_eig.hpp"

namespace spdnet {

namespace {

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Scaled negative part of the smallest output eigenvalue; anything above
// the 1e-10 certification floor is a failure.
double spd_residual(const Mat& a) {
  const double floor_scale = trace(a) / std::max(1, a.rows());
  const double min_eig = min_eigenvalue(symmetrize(a));
  if (min_eig >= 0.0) return 0.0;
  return -min_eig / std::max(floor_scale, 1e-300);
}

SuiteResult vacuous(const std::string& name) {
  SuiteResult r;
  r.name = name;
  r.pass = true;
  r.note = "vacuous pass, 0 trials requested";
  return r;
}

}  // namespace

Mat random_mat(int rows, int cols, Rng& rng, double limit) {
  Mat m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m[i] = rng.uniform(-limit, limit);
  return m;
}

Mat random_spd(int d, Rng& rng, double scale) {
  const Mat b = random_mat(d, d, rng);
  Mat a = spdnet::scale(matmul(transpose(b), b), scale / d);
  for (int i = 0; i < d; ++i) a(i, i) += 0.1 * scale;
  return a;
}

SuiteResult run_conv_preservation_suite(int trials, std::uint64_t seed, bool inject_fault) {
  if (trials == 0) return vacuous("theorem1-conv-preservation");
  Timer timer;
  Rng rng(seed);
  SuiteResult r;
  r.name = "theorem1-conv-preservation";
  r.trials = trials;

  for (int t = 0; t < trials; ++t) {
    const int k = 1 + rng.uniform_int(3);
    const int d = std::max(k, 2) + rng.uniform_int(17 - std::max(k, 2));  // up to 16
    const int c_in = 1 + rng.uniform_int(4);
    const int c_out = 1 + rng.uniform_int(4);

    McSpdTensor x;
    for (int c = 0; c < c_in; ++c) x.channels.push_back(random_spd(d, rng));

    SpdKernelBank bank;
    bank.out_channels = c_out;
    bank.in_channels = c_in;
    bank.kernel_size = k;
    bank.epsilon = 1e-4;
    for (int i = 0; i < c_out * c_in; ++i) bank.v.push_back(random_mat(k, k, rng));

    McSpdTensor out;
    if (inject_fault) {
      std::vector<Mat> kernels = materialize_kernels(bank);
      const EigenPair eig = sym_eig(kernels[0]);
      Mat doctored(k, k);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
          double acc = 0.0;
          for (int j = 0; j < k; ++j) {
            const double lambda = (j == k - 1) ? -eig.values[j] : eig.values[j];
            acc += eig.vectors(a, j) * lambda * eig.vectors(b, j);
          }
          doctored(a, b) = acc;
        }
      kernels[0] = doctored;
      out = spd_conv_with_kernels(x, kernels, c_out, c_in);
    } else {
      out = spd_conv_forward(x, bank);
    }

    double worst = 0.0;
    for (const Mat& ch : out.channels) worst = std::max(worst, spd_residual(ch));
    r.max_residual = std::max(r.max_residual, worst);
    if (worst > 1e-10) r.failures++;
  }
  r.pass = r.failures == 0;
  r.seconds = timer.seconds();
  return r;
}

SuiteResult run_activation_suite(int trials, std::uint64_t seed) {
  if (trials == 0) return vacuous("theorem2-activation");
  Timer timer;
  Rng rng(seed);
  SuiteResult r;
  r.name = "theorem2-activation";
  r.trials = trials;
  double series_worst = 0.0;

  for (int t = 0; t < trials; ++t) {
    const int d = 2 + rng.uniform_int(15);
    const McSpdTensor x{std::vector<Mat>{random_spd(d, rng, rng.uniform(0.2, 2.0))}};

    bool failed = false;
    for (ActKind kind : {ActKind::kExp, ActKind::kSinh, ActKind::kCosh}) {
      const McSpdTensor y = spd_activate(x, kind);
      const double res = spd_residual(y.channel(0));
      r.max_residual = std::max(r.max_residual, res);
      failed = failed || res > 1e-10;
    }

    // exp against the Hadamard power series, powers 0..20, on a channel
    // rescaled into |entries| <= 2
    Mat small = x.channel(0);
    const double m = max_abs_entry(small);
    if (m > 2.0) small = scale(small, 1.8 / m);
    const Mat direct = ew_map(small, [](double v) { return std::exp(v); });
    const Mat series = hadamard_series_oracle(small, ActKind::kExp, 21);
    series_worst = std::max(series_worst, max_abs_diff(direct, series));
    failed = failed || max_abs_diff(direct, series) > 1e-8;

    if (failed) r.failures++;
  }
  r.pass = r.failures == 0;
  r.seconds = timer.seconds();
  std::ostringstream note;
  note << "series max diff " << std::scientific << std::setprecision(2) << series_worst;
  r.note = note.str();
  return r;
}

SuiteResult run_recursion_suite(int trials, std::uint64_t seed) {
  if (trials == 0) return vacuous("theorem3-recursion");
  Timer timer;
  Rng rng(seed);
  SuiteResult r;
  r.name = "theorem3-recursion";
  r.trials = trials;
  const int steps = 12;
  const int hidden = 9;

  for (int t = 0; t < trials; ++t) {
    const int channels = 1 + rng.uniform_int(3);
    const int d_in = 4 + rng.uniform_int(9);  // 4..12

    RecursiveParams p;
    p.epsilon = 1e-3;
    p.beta_r = rng.uniform(0.0, 0.5);
    p.beta_z = rng.uniform(0.0, 0.5);
    p.beta_h = rng.uniform(0.0, 0.5);
    for (int c = 0; c < channels; ++c) {
      RecursiveChannelParams ch;
      const double fl = 1.0 / std::sqrt(double(d_in) * hidden);
      ch.w_fr = random_mat(d_in, hidden, rng, fl);
      ch.w_hr = random_mat(hidden, hidden, rng, 1.0 / hidden);
      ch.w_fz = random_mat(d_in, hidden, rng, fl);
      ch.w_hz = random_mat(hidden, hidden, rng, 1.0 / hidden);
      ch.w_fh = random_mat(d_in, hidden, rng, fl);
      p.channels.push_back(std::move(ch));
    }

    std::vector<McSpdTensor> seq;
    for (int s = 0; s < steps; ++s) {
      McSpdTensor f;
      for (int c = 0; c < channels; ++c) f.channels.push_back(random_spd(d_in, rng));
      seq.push_back(std::move(f));
    }

    std::vector<McSpdTensor> trajectory;
    spd_gru_rollout(seq, p, &trajectory);

    double worst = 0.0;
    for (const McSpdTensor& h_t : trajectory)
      for (const Mat& ch : h_t.channels) worst = std::max(worst, spd_residual(ch));
    r.max_residual = std::max(r.max_residual, worst);
    if (worst > 1e-10) r.failures++;
  }
  r.pass = r.failures == 0;
  r.seconds = timer.seconds();
  return r;
}

SuiteResult run_conv_equivalence_suite(int trials, std::uint64_t seed) {
  if (trials == 0) return vacuous("theorem4-conv-equivalence");
  Timer timer;
  Rng rng(seed);
  SuiteResult r;
  r.name = "theorem4-conv-equivalence";
  r.trials = trials;

  for (int t = 0; t < trials; ++t) {
    const int k = 1 + rng.uniform_int(5);
    const int d = std::max(k, 2) + rng.uniform_int(13 - std::max(k, 2));  // up to 12
    const Mat x = random_spd(d, rng);

    SpdKernelBank bank;
    bank.out_channels = 1;
    bank.in_channels = 1;
    bank.kernel_size = k;
    bank.epsilon = 1e-4;
    bank.v.push_back(random_mat(k, k, rng));
    const std::vector<Mat> kernels = materialize_kernels(bank);

    const McSpdTensor direct =
        spd_conv_with_kernels(McSpdTensor{std::vector<Mat>{x}}, kernels, 1, 1);
    const Mat oracle = toeplitz_conv_oracle(x, kernels[0]);

    const double diff = max_abs_diff(direct.channel(0), oracle);
    r.max_residual = std::max(r.max_residual, diff);
    if (diff > 1e-10) r.failures++;
  }
  r.pass = r.failures == 0;
  r.seconds = timer.seconds();
  return r;
}

std::vector<SuiteResult> run_all_suites(int trials, std::uint64_t seed, bool inject_fault) {
  if (trials < 0) throw std::invalid_argument("run_all_suites: negative trial count");
  std::vector<SuiteResult> out;
  out.push_back(run_conv_preservation_suite(trials, seed, inject_fault));
  out.push_back(run_activation_suite(trials, seed + 1));
  out.push_back(run_recursion_suite(trials / 10, seed + 2));
  out.push_back(run_conv_equivalence_suite(trials / 5, seed + 3));
  return out;
}

std::string render_table(const std::vector<SuiteResult>& results) {
  std::ostringstream os;
  os << std::left << std::setw(30) << "suite" << std::right << std::setw(8) << "trials"
     << std::setw(10) << "failures" << std::setw(14) << "max_residual" << std::setw(10)
     << "seconds" << "  result\n";
  for (const SuiteResult& r : results) {
    os << std::left << std::setw(30) << r.name << std::right << std::setw(8) << r.trials
       << std::setw(10) << r.failures << std::setw(14) << std::scientific
       << std::setprecision(2) << r.max_residual << std::setw(10) << std::fixed
       << std::setprecision(2) << r.seconds << "  " << (r.pass ? "PASS" : "FAIL");
    if (!r.note.empty()) os << "  (" << r.note << ")";
    os << "\n";
  }
  return os.str();
}

void write_suite_summary(const std::string& path, const std::vector<SuiteResult>& results,
                         const std::string& config_echo) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_suite_summary: cannot open " + path);
  os << config_echo;
  for (const SuiteResult& r : results) {
    os << "suite=" << r.name << " trials=" << r.trials << " failures=" << r.failures
       << " max_residual=" << std::scientific << std::setprecision(6) << r.max_residual
       << " seconds=" << std::fixed << std::setprecision(3) << r.seconds
       << " pass=" << (r.pass ? 1 : 0) << "\n";
  }
  if (!os) throw std::runtime_error("write_suite_summary: write failed for " + path);
}

bool all_pass(const std::vector<SuiteResult>& results) {
  for (const SuiteResult& r : results)
    if (!r.pass) return false;
  return true;
}

}  // namespace spdnet
