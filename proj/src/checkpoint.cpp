#include "spdnet/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spdnet {

namespace {

constexpr const char* kMagic = "spdnet-ckpt";
constexpr const char* kVersion = "v1";

std::string hex_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw std::runtime_error("checkpoint: bad number '" + s + "' in " + what);
  return v;
}

}  // namespace

std::string to_string(ActKind k) {
  switch (k) {
    case ActKind::kExp: return "exp";
    case ActKind::kSinh: return "sinh";
    case ActKind::kCosh: return "cosh";
  }
  return "exp";
}

ActKind act_kind_from_string(const std::string& s) {
  if (s == "exp") return ActKind::kExp;
  if (s == "sinh") return ActKind::kSinh;
  if (s == "cosh") return ActKind::kCosh;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

std::string to_string(BiasMode m) {
  return m == BiasMode::kAllOnes ? "ones" : "identity";
}

BiasMode bias_mode_from_string(const std::string& s) {
  if (s == "ones") return BiasMode::kAllOnes;
  if (s == "identity") return BiasMode::kIdentity;
  throw std::invalid_argument("unknown bias mode '" + s + "'");
}

std::string conv_to_string(const std::vector<ConvSpec>& conv) {
  std::ostringstream os;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    if (i) os << ",";
    os << conv[i].out_channels << "x" << conv[i].in_channels << "x" << conv[i].kernel_size;
  }
  return os.str();
}

std::vector<ConvSpec> conv_from_string(const std::string& s) {
  std::vector<ConvSpec> out;
  std::istringstream stream(s);
  std::string item;
  while (std::getline(stream, item, ',')) {
    ConvSpec spec;
    char x1 = 0, x2 = 0;
    std::istringstream is(item);
    is >> spec.out_channels >> x1 >> spec.in_channels >> x2 >> spec.kernel_size;
    if (is.fail() || x1 != 'x' || x2 != 'x')
      throw std::invalid_argument("bad conv spec '" + item + "', expected CxCxK");
    out.push_back(spec);
  }
  if (out.empty()) throw std::invalid_argument("empty conv spec '" + s + "'");
  return out;
}

void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  const ModelConfig& c = model.config();

  os << kMagic << " " << kVersion << "\n";
  os << "config input_dim " << c.input_dim << "\n";
  os << "config classes " << c.classes << "\n";
  os << "config subclips " << c.subclips << "\n";
  os << "config conv " << conv_to_string(c.conv) << "\n";
  os << "config hidden_dim " << c.hidden_dim << "\n";
  os << "config fc_units " << c.fc_units << "\n";
  os << "config conv_activation " << to_string(c.conv_activation) << "\n";
  os << "config gru_bias_mode " << to_string(c.gru_bias_mode) << "\n";
  os << "config kernel_epsilon " << hex_double(c.kernel_epsilon) << "\n";
  os << "config gru_epsilon " << hex_double(c.gru_epsilon) << "\n";
  os << "config ablation " << to_string(c.ablation) << "\n";
  os << "config seed " << c.seed << "\n";
  os << "config eu_channels " << c.eu_channels << "\n";
  os << "config eu_kernel " << c.eu_kernel << "\n";
  os << "config eu_hidden " << c.eu_hidden << "\n";

  os << "params " << model.param_count() << "\n";
  for (const Param& p : model.params()) {
    os << "param " << p.name << " " << p.value.rows() << " " << p.value.cols() << "\n";
    for (int r = 0; r < p.value.rows(); ++r) {
      for (int cc = 0; cc < p.value.cols(); ++cc)
        os << (cc ? " " : "") << hex_double(p.value(r, cc));
      os << "\n";
    }
  }
  os << "end\n";
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);

  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("load_checkpoint: " + path + " is empty");
  {
    std::istringstream head(line);
    std::string magic, version;
    head >> magic >> version;
    if (magic != kMagic)
      throw std::runtime_error("load_checkpoint: not a checkpoint file: " + path);
    if (version != kVersion)
      throw std::runtime_error("load_checkpoint: unsupported version '" + version + "'");
  }

  ModelConfig cfg;
  int param_count = -1;
  while (std::getline(is, line)) {
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    if (tag == "config") {
      std::string key, value;
      row >> key >> value;
      if (key == "input_dim") cfg.input_dim = std::stoi(value);
      else if (key == "classes") cfg.classes = std::stoi(value);
      else if (key == "subclips") cfg.subclips = std::stoi(value);
      else if (key == "conv") cfg.conv = conv_from_string(value);
      else if (key == "hidden_dim") cfg.hidden_dim = std::stoi(value);
      else if (key == "fc_units") cfg.fc_units = std::stoi(value);
      else if (key == "conv_activation") cfg.conv_activation = act_kind_from_string(value);
      else if (key == "gru_bias_mode") cfg.gru_bias_mode = bias_mode_from_string(value);
      else if (key == "kernel_epsilon") cfg.kernel_epsilon = parse_double(value, key);
      else if (key == "gru_epsilon") cfg.gru_epsilon = parse_double(value, key);
      else if (key == "ablation") cfg.ablation = ablation_from_string(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "eu_channels") cfg.eu_channels = std::stoi(value);
      else if (key == "eu_kernel") cfg.eu_kernel = std::stoi(value);
      else if (key == "eu_hidden") cfg.eu_hidden = std::stoi(value);
      else throw std::runtime_error("load_checkpoint: unknown config key '" + key + "'");
    } else if (tag == "params") {
      row >> param_count;
      break;
    } else {
      throw std::runtime_error("load_checkpoint: unexpected line '" + line + "'");
    }
  }
  if (param_count < 0) throw std::runtime_error("load_checkpoint: missing params section");

  Model model(cfg);
  if (param_count != model.param_count()) {
    std::ostringstream os;
    os << "load_checkpoint: checkpoint has " << param_count << " parameters, config implies "
       << model.param_count();
    throw std::runtime_error(os.str());
  }

  for (int i = 0; i < param_count; ++i) {
    if (!std::getline(is, line))
      throw std::runtime_error("load_checkpoint: truncated at parameter " + std::to_string(i));
    std::istringstream head(line);
    std::string tag, name;
    int rows = 0, cols = 0;
    head >> tag >> name >> rows >> cols;
    if (tag != "param" || head.fail())
      throw std::runtime_error("load_checkpoint: bad parameter header '" + line + "'");
    Param& p = model.params()[i];
    if (p.name != name || p.value.rows() != rows || p.value.cols() != cols) {
      std::ostringstream os;
      os << "load_checkpoint: parameter " << i << " mismatch: checkpoint has " << name << " "
         << rows << "x" << cols << ", config implies " << p.name << " "
         << shape_string(p.value);
      throw std::runtime_error(os.str());
    }
    for (int r = 0; r < rows; ++r) {
      if (!std::getline(is, line))
        throw std::runtime_error("load_checkpoint: truncated values in " + name);
      std::istringstream row(line);
      std::string cell;
      for (int cc = 0; cc < cols; ++cc) {
        if (!(row >> cell))
          throw std::runtime_error("load_checkpoint: short row in " + name);
        p.value(r, cc) = parse_double(cell, name);
      }
    }
  }

  if (!std::getline(is, line) || line != "end")
    throw std::runtime_error("load_checkpoint: missing end marker");
  return model;
}

}  // namespace spdnet
