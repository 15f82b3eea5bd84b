// Command-line entry points: train, eval, verify, gen-data. Every command
// is deterministic given (config, seed) and echoes its effective
// configuration into the reports it writes.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spdnet/checkpoint.hpp"
#include "spdnet/diagnostics.hpp"
#include "spdnet/model.hpp"
#include "spdnet/skeleton.hpp"
#include "spdnet/train.hpp"
#include "spdnet/verify.hpp"

namespace {

using namespace spdnet;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerifyFailed = 2;
constexpr int kExitIo = 3;

struct RunConfig {
  std::string command;
  std::string config_path;
  std::string data_path;
  std::string checkpoint_path;
  std::string report_path;
  std::string out_path;
  std::string test_out_path;

  std::uint64_t seed = 1;
  int epochs = 200;
  double lr = 1e-2;
  int batch = 8;
  double stop_train_acc = 0.0;  // 0 disables early stopping
  int trials = 1000;
  bool inject_fault = false;

  std::string ablation = "none";
  int subclips = 12;
  int hidden_dim = 9;
  int fc_units = 800;
  std::string conv = "4x1x6,8x4x3";
  std::string activation = "sinh";
  std::string bias_mode = "ones";
  double kernel_eps = 1e-4;
  double gru_eps = 1e-3;
  std::string mean_mode = "mean";
  bool no_augment = false;

  int classes = 3;
  int per_class = 60;
  int joints = 15;
  int frames = 60;
  int subjects = 6;
  int test_subjects = 0;

  std::string echo() const;
  void apply_file(const std::string& path);
};

std::string RunConfig::echo() const {
  std::ostringstream os;
  os << "config command=" << command << "\n";
  os << "config seed=" << seed << "\n";
  os << "config data=" << data_path << "\n";
  os << "config checkpoint=" << checkpoint_path << "\n";
  os << "config report=" << report_path << "\n";
  os << "config epochs=" << epochs << "\n";
  os << "config lr=" << lr << "\n";
  os << "config batch=" << batch << "\n";
  os << "config stop_train_acc=" << stop_train_acc << "\n";
  os << "config trials=" << trials << "\n";
  os << "config inject_fault=" << (inject_fault ? 1 : 0) << "\n";
  os << "config ablation=" << ablation << "\n";
  os << "config subclips=" << subclips << "\n";
  os << "config hidden_dim=" << hidden_dim << "\n";
  os << "config fc_units=" << fc_units << "\n";
  os << "config conv=" << conv << "\n";
  os << "config activation=" << activation << "\n";
  os << "config bias_mode=" << bias_mode << "\n";
  os << "config kernel_eps=" << kernel_eps << "\n";
  os << "config gru_eps=" << gru_eps << "\n";
  os << "config mean_mode=" << mean_mode << "\n";
  os << "config no_augment=" << (no_augment ? 1 : 0) << "\n";
  os << "config classes=" << classes << "\n";
  os << "config per_class=" << per_class << "\n";
  os << "config joints=" << joints << "\n";
  os << "config frames=" << frames << "\n";
  os << "config subjects=" << subjects << "\n";
  os << "config test_subjects=" << test_subjects << "\n";
  return os.str();
}

void RunConfig::apply_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config file not found: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::invalid_argument("config file " + path + " line " +
                                    std::to_string(line_no) + ": expected key=value");
      continue;
    }
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key == "seed") seed = std::stoull(value);
    else if (key == "epochs") epochs = std::stoi(value);
    else if (key == "lr") lr = std::stod(value);
    else if (key == "batch") batch = std::stoi(value);
    else if (key == "stop_train_acc") stop_train_acc = std::stod(value);
    else if (key == "trials") trials = std::stoi(value);
    else if (key == "ablation") ablation = value;
    else if (key == "subclips") subclips = std::stoi(value);
    else if (key == "hidden_dim") hidden_dim = std::stoi(value);
    else if (key == "fc_units") fc_units = std::stoi(value);
    else if (key == "conv") conv = value;
    else if (key == "activation") activation = value;
    else if (key == "bias_mode") bias_mode = value;
    else if (key == "kernel_eps") kernel_eps = std::stod(value);
    else if (key == "gru_eps") gru_eps = std::stod(value);
    else if (key == "mean_mode") mean_mode = value;
    else if (key == "no_augment") no_augment = std::stoi(value) != 0;
    else if (key == "classes") classes = std::stoi(value);
    else if (key == "per_class") per_class = std::stoi(value);
    else if (key == "joints") joints = std::stoi(value);
    else if (key == "frames") frames = std::stoi(value);
    else if (key == "subjects") subjects = std::stoi(value);
    else if (key == "test_subjects") test_subjects = std::stoi(value);
    else if (key == "data") data_path = value;
    else if (key == "checkpoint") checkpoint_path = value;
    else if (key == "report") report_path = value;
    else
      throw std::invalid_argument("config file " + path + " line " +
                                  std::to_string(line_no) + ": unknown key '" + key + "'");
  }
}

ModelConfig model_config_from(const RunConfig& rc, int input_dim, int classes) {
  ModelConfig mc;
  mc.input_dim = input_dim;
  mc.classes = classes;
  mc.subclips = rc.subclips;
  mc.conv = conv_from_string(rc.conv);
  mc.hidden_dim = rc.hidden_dim;
  mc.fc_units = rc.fc_units;
  mc.conv_activation = act_kind_from_string(rc.activation);
  mc.gru_bias_mode = bias_mode_from_string(rc.bias_mode);
  mc.kernel_epsilon = rc.kernel_eps;
  mc.gru_epsilon = rc.gru_eps;
  mc.ablation = ablation_from_string(rc.ablation);
  mc.seed = rc.seed;
  return mc;
}

PipelineOptions pipeline_from(const RunConfig& rc, bool training) {
  PipelineOptions p;
  p.subclips = rc.subclips;
  p.training = training;
  p.augment_scale = !rc.no_augment;
  p.augment_rotate = !rc.no_augment;
  p.feature.mean_mode =
      rc.mean_mode == "sum" ? MeanMode::kLiteralSum : MeanMode::kMean;
  return p;
}

int infer_classes(const std::vector<SkeletonSequence>& seqs) {
  int top = -1;
  for (const SkeletonSequence& s : seqs) top = std::max(top, s.label);
  if (top < 1) throw std::invalid_argument("dataset needs at least 2 classes");
  return top + 1;
}

int cmd_gen_data(const RunConfig& rc) {
  SyntheticSpec spec;
  spec.classes = rc.classes;
  spec.per_class = rc.per_class;
  spec.joints = rc.joints;
  spec.frames = rc.frames;
  spec.subjects = rc.subjects;

  Rng rng(rc.seed);
  const std::vector<SkeletonSequence> all = generate_synthetic(spec, rng);
  std::cout << "generated " << all.size() << " sequences, class margin "
            << class_margin(all, spec.classes) << "\n";

  if (rc.test_subjects > 0) {
    if (rc.test_subjects >= spec.subjects)
      throw std::invalid_argument("test_subjects must be below subjects");
    if (rc.test_out_path.empty())
      throw std::invalid_argument("gen-data: --test-out required with --test-subjects");
    std::vector<SkeletonSequence> train, test;
    const int split = spec.subjects - rc.test_subjects;
    for (const SkeletonSequence& s : all)
      (s.subject < split ? train : test).push_back(s);
    save_skeleton_file(rc.out_path, train);
    save_skeleton_file(rc.test_out_path, test);
    std::cout << "wrote " << train.size() << " train sequences to " << rc.out_path << " and "
              << test.size() << " test sequences to " << rc.test_out_path << "\n";
  } else {
    save_skeleton_file(rc.out_path, all);
    std::cout << "wrote " << all.size() << " sequences to " << rc.out_path << "\n";
  }
  return kExitOk;
}

int cmd_train(const RunConfig& rc, bool synthetic) {
  std::vector<SkeletonSequence> data;
  if (synthetic) {
    SyntheticSpec spec;
    spec.classes = rc.classes;
    spec.per_class = rc.per_class;
    spec.joints = rc.joints;
    spec.frames = rc.frames;
    spec.subjects = rc.subjects;
    Rng gen_rng(rc.seed);
    data = generate_synthetic(spec, gen_rng);
  } else {
    if (rc.data_path.empty())
      throw std::invalid_argument("train: --data or --synthetic required");
    data = load_skeleton_file(rc.data_path);
    if (data.empty()) throw std::runtime_error("train: no sequences in " + rc.data_path);
  }

  const int classes = infer_classes(data);
  const int joints = data.front().joints();
  Model model(model_config_from(rc, joints, classes));

  OptimState opt;
  opt.learning_rate = rc.lr;
  PipelineOptions pipeline = pipeline_from(rc, /*training=*/true);
  Rng rng(rc.seed + 17);

  std::ofstream report;
  if (!rc.report_path.empty()) {
    report.open(rc.report_path);
    if (!report) throw std::runtime_error("train: cannot open report " + rc.report_path);
    report << rc.echo();
  }

  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < rc.epochs; ++epoch) {
    const double lr = opt.lr_for_epoch(epoch);
    const EpochMetrics m = train_epoch(model, data, pipeline, opt, lr, rc.batch, rng);
    std::ostringstream line;
    line << "epoch=" << epoch + 1 << " lr=" << lr << " loss_sum=" << m.loss_sum
         << " loss_mean=" << m.loss_mean << " acc=" << m.accuracy
         << " skipped=" << m.skipped;
    std::cout << line.str() << "\n";
    if (report) report << line.str() << "\n";
    if (rc.stop_train_acc > 0.0 && m.accuracy >= rc.stop_train_acc) {
      std::cout << "early stop: train accuracy reached " << m.accuracy << "\n";
      if (report) report << "early_stop=1 acc=" << m.accuracy << "\n";
      break;
    }
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "train wall_seconds=" << wall << "\n";
  std::cout << diag::summary() << "\n";
  if (report) report << "wall_seconds=" << wall << "\n";

  if (rc.checkpoint_path.empty())
    throw std::invalid_argument("train: --checkpoint required");
  save_checkpoint(rc.checkpoint_path, model);
  std::cout << "checkpoint written to " << rc.checkpoint_path << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& rc) {
  if (rc.checkpoint_path.empty()) throw std::invalid_argument("eval: --checkpoint required");
  if (rc.data_path.empty()) throw std::invalid_argument("eval: --data required");

  const Model model = load_checkpoint(rc.checkpoint_path);
  const std::vector<SkeletonSequence> data = load_skeleton_file(rc.data_path);
  if (data.empty()) throw std::runtime_error("eval: no sequences in " + rc.data_path);
  for (const SkeletonSequence& s : data) {
    if (s.joints() != model.config().input_dim) {
      std::ostringstream os;
      os << "eval: data has " << s.joints() << " joints, checkpoint expects "
         << model.config().input_dim;
      throw std::invalid_argument(os.str());
    }
    if (s.label >= model.config().classes)
      throw std::invalid_argument("eval: label " + std::to_string(s.label) +
                                  " outside checkpoint classes");
  }

  PipelineOptions pipeline = pipeline_from(rc, /*training=*/false);
  pipeline.subclips = model.config().subclips;
  const std::vector<PreparedSample> samples = prepare_dataset(data, pipeline, nullptr);
  EvalReport r = evaluate(model, samples);
  r.config_echo = rc.echo();

  std::cout << r.summary();
  std::cout << r.confusion_csv();

  if (!rc.report_path.empty()) {
    std::ofstream os(rc.report_path);
    if (!os) throw std::runtime_error("eval: cannot open report " + rc.report_path);
    os << r.config_echo << r.summary() << "confusion:\n" << r.confusion_csv();
    if (!os) throw std::runtime_error("eval: write failed for " + rc.report_path);
  }
  return kExitOk;
}

int cmd_verify(const RunConfig& rc) {
  if (rc.trials < 0) throw std::invalid_argument("verify: --trials must be >= 0");
  if (rc.trials == 0)
    std::cerr << "warning: 0 trials requested, suites pass vacuously\n";

  const std::vector<SuiteResult> results = run_all_suites(rc.trials, rc.seed, rc.inject_fault);
  std::cout << render_table(results);
  if (!rc.report_path.empty()) write_suite_summary(rc.report_path, results, rc.echo());
  return all_pass(results) ? kExitOk : kExitVerifyFailed;
}

std::string find_config_flag(int argc, char** argv) {
  for (int i = 1; i < argc - 1; ++i)
    if (std::string(argv[i]) == "--config") return argv[i + 1];
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig rc;
  try {
    const std::string cfg_path = find_config_flag(argc, argv);
    if (!cfg_path.empty()) {
      rc.config_path = cfg_path;
      rc.apply_file(cfg_path);
    }

    CLI::App app{"SPD manifold network: training, evaluation and theorem verification"};
    app.require_subcommand(1);
    std::string ignored_config;
    app.add_option("--config", ignored_config, "flat key=value config file");

    auto add_common = [&](CLI::App* cmd) {
      cmd->add_option("--seed", rc.seed, "random seed");
      cmd->add_option("--report", rc.report_path, "report output path");
    };
    auto add_model = [&](CLI::App* cmd) {
      cmd->add_option("--ablation", rc.ablation,
                      "none|no-conv|no-recursive|euclidean");
      cmd->add_option("--subclips", rc.subclips, "temporal subclip count");
      cmd->add_option("--hidden", rc.hidden_dim, "recursive hidden size");
      cmd->add_option("--fc-units", rc.fc_units, "fully connected width");
      cmd->add_option("--conv", rc.conv, "conv chain, e.g. 4x1x6,8x4x3");
      cmd->add_option("--activation", rc.activation, "exp|sinh|cosh");
      cmd->add_option("--bias-mode", rc.bias_mode, "ones|identity");
      cmd->add_option("--kernel-eps", rc.kernel_eps, "kernel ridge epsilon");
      cmd->add_option("--gru-eps", rc.gru_eps, "recursive ridge epsilon");
      cmd->add_option("--mean-mode", rc.mean_mode, "mean|sum centering");
    };
    auto add_synth = [&](CLI::App* cmd) {
      cmd->add_option("--classes", rc.classes, "synthetic class count");
      cmd->add_option("--per-class", rc.per_class, "sequences per class");
      cmd->add_option("--joints", rc.joints, "joint count");
      cmd->add_option("--frames", rc.frames, "frames per sequence");
      cmd->add_option("--subjects", rc.subjects, "subject count");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic skeleton dataset");
    gen->add_option("--out", rc.out_path, "output skeleton file")->required();
    gen->add_option("--test-out", rc.test_out_path, "held-out subjects file");
    gen->add_option("--test-subjects", rc.test_subjects, "subjects moved to --test-out");
    add_common(gen);
    add_synth(gen);

    CLI::App* train = app.add_subcommand("train", "train a model");
    train->add_option("--data", rc.data_path, "skeleton dataset");
    bool synthetic = false;
    train->add_flag("--synthetic", synthetic, "generate data in memory instead of --data");
    train->add_option("--checkpoint", rc.checkpoint_path, "checkpoint output")->required();
    train->add_option("--epochs", rc.epochs, "training epochs");
    train->add_option("--lr", rc.lr, "learning rate");
    train->add_option("--batch", rc.batch, "minibatch size");
    train->add_option("--stop-train-acc", rc.stop_train_acc,
                      "stop once train accuracy reaches this (0 disables)");
    train->add_flag("--no-augment", rc.no_augment, "disable scale/rotate augmentation");
    add_common(train);
    add_model(train);
    add_synth(train);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("--data", rc.data_path, "skeleton dataset")->required();
    eval->add_option("--checkpoint", rc.checkpoint_path, "checkpoint to load")->required();
    eval->add_option("--mean-mode", rc.mean_mode, "mean|sum centering");
    add_common(eval);

    CLI::App* verify = app.add_subcommand("verify", "run the theorem suites");
    verify->add_option("--trials", rc.trials, "trial count (0 = vacuous pass)");
    verify->add_flag("--inject-fault", rc.inject_fault,
                     "negate a kernel eigenvalue; the convolution suite must fail");
    add_common(verify);

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    if (gen->parsed()) {
      rc.command = "gen-data";
      return cmd_gen_data(rc);
    }
    if (train->parsed()) {
      rc.command = "train";
      return cmd_train(rc, synthetic);
    }
    if (eval->parsed()) {
      rc.command = "eval";
      return cmd_eval(rc);
    }
    if (verify->parsed()) {
      rc.command = "verify";
      return cmd_verify(rc);
    }
    std::cerr << "no command given\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
