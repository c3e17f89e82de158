#include "rba/io/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "rba/common/error.hpp"
#include "rba/physics/sampling.hpp"

namespace rba::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// section -> ordered key/value pairs.
using SectionMap = std::map<std::string, std::vector<std::pair<std::string, std::string>>>;

SectionMap read_sections(const std::string& text) {
  SectionMap sections;
  std::istringstream in(text);
  std::string line, current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', "config line " + std::to_string(lineno) + ": bad section");
      current = trim(line.substr(1, line.size() - 2));
      sections.try_emplace(current);
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            "config line " + std::to_string(lineno) + ": expected key = value");
    require(!current.empty(),
            "config line " + std::to_string(lineno) + ": key outside any section");
    sections[current].emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return sections;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    require(pos == v.size(), "");
    return x;
  } catch (...) {
    fail("config key '" + key + "': not a number: '" + v + "'");
  }
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  require(ec == std::errc() && p == v.data() + v.size(),
          "config key '" + key + "': not an integer: '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail("config key '" + key + "': not a boolean: '" + v + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* bc_name(BcMode m) {
  switch (m) {
    case BcMode::fourier: return "fourier";
    case BcMode::adf: return "adf";
    case BcMode::soft: return "soft";
  }
  return "";
}

const char* embed_name(net::EmbeddingKind k) {
  switch (k) {
    case net::EmbeddingKind::none: return "none";
    case net::EmbeddingKind::fourier1d: return "fourier1d";
    case net::EmbeddingKind::fourier2d_truncated: return "fourier2d_truncated";
    case net::EmbeddingKind::fourier2d_full: return "fourier2d_full";
  }
  return "";
}

/// Paper-table defaults per problem (and per Helmholtz boundary treatment).
void fill_defaults(ExperimentConfig& c) {
  c.hidden_layers = 6;
  c.width = 128;
  c.modified_mlp = true;
  c.rba = {};
  c.lbfgs_memory = 10;
  c.metric_every = 100;
  c.snr_batches = 100;
  c.chunk_points = 256;

  if (c.problem == phys::ProblemKind::allen_cahn) {
    c.sampling = SamplingMethod::latin_hypercube;
    c.collocation_points = 25600;
    c.ic_points = 512;
    c.bc_points = 0;
    c.weights = {100.0, 0.0};
    c.schedule = {1e-3, 0.9, 5000, false};
    c.adam_iters = 300000;
    c.lbfgs_iters = 0;
    c.embedding.kind = net::EmbeddingKind::fourier1d;
    c.embedding.m = 10;
    c.embedding.period_x = 2.0;
    c.embedding.embedded_axes = {1};
    return;
  }

  c.sampling = SamplingMethod::uniform_grid;
  const bool bottleneck = c.helmholtz.a1 == 6 && c.helmholtz.a2 == 6;
  c.collocation_points = bottleneck ? 90400 : 1201;
  c.ic_points = 0;
  c.schedule = {5e-3, 0.7, 1000, false};
  c.adam_iters = 20000;
  c.lbfgs_iters = 3000;
  switch (c.bc_mode) {
    case BcMode::fourier:
      c.bc_points = 200;
      c.weights = {0.0, 100.0};
      c.embedding.kind = net::EmbeddingKind::fourier2d_truncated;
      c.embedding.m = 5;
      c.embedding.n = 5;
      c.embedding.period_x = 2.0;
      c.embedding.period_y = 2.0;
      c.embedding.embedded_axes = {0, 1};
      // Multipliers hold still during L-BFGS in this setup.
      c.rba.update_during_lbfgs = false;
      break;
    case BcMode::adf:
      c.bc_points = 0;
      c.weights = {0.0, 0.0};
      c.embedding = {};
      break;
    case BcMode::soft:
      c.bc_points = 200;
      c.weights = {0.0, 100.0};
      c.embedding = {};
      break;
  }
}

void validate(const ExperimentConfig& c) {
  require(c.hidden_layers >= 0, "network.hidden_layers must be non-negative");
  require(c.width > 0 || c.hidden_layers == 0, "network.width must be positive");
  require(c.collocation_points > 0, "sampling.collocation_points must be positive");
  require(c.adam_iters >= 0 && c.lbfgs_iters >= 0, "optimizer iteration counts must be non-negative");
  require(c.schedule.lr0 > 0, "optimizer.lr0 must be positive");
  require(c.schedule.decay_rate > 0 && c.schedule.decay_rate <= 1.0,
          "optimizer.decay_rate must lie in (0, 1]");
  require(c.schedule.decay_step > 0, "optimizer.decay_step must be positive");
  require(c.weights.lambda_ic >= 0 && c.weights.lambda_bc >= 0,
          "loss weights must be non-negative");
  require(c.rba.gamma > 0 && c.rba.gamma < 1, "rba.gamma must lie in (0, 1)");
  require(c.rba.eta_star > 0, "rba.eta_star must be positive");
  require(c.rba.c >= 0, "rba.c must be non-negative");
  require(c.chunk_points > 0, "run.chunk_points must be positive");
  require(c.snr_batches >= 2, "diagnostics.snr_batches must be at least 2");
  if (c.problem == phys::ProblemKind::allen_cahn) {
    require(c.time_scale > 0, "problem.time_scale must be positive");
    require(c.embedding.kind == net::EmbeddingKind::none ||
                c.embedding.kind == net::EmbeddingKind::fourier1d,
            "allen_cahn embeds x with fourier1d (or none)");
  } else {
    require(c.helmholtz.a1 >= 1 && c.helmholtz.a2 >= 1, "helmholtz.a1/a2 must be positive");
    if (c.bc_mode == BcMode::adf)
      require(c.embedding.kind == net::EmbeddingKind::none,
              "adf mode uses raw coordinates");
  }
  if (c.embedding.kind == net::EmbeddingKind::fourier1d)
    require(c.embedding.m >= 0 && c.embedding.period_x > 0, "embedding.m/period invalid");
  if (c.embedding.kind == net::EmbeddingKind::fourier2d_truncated ||
      c.embedding.kind == net::EmbeddingKind::fourier2d_full)
    require(c.embedding.m >= 1 && c.embedding.n >= 1 && c.embedding.period_x > 0 &&
                c.embedding.period_y > 0,
            "embedding.m/n/periods invalid");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  SectionMap sections = read_sections(text);

  ExperimentConfig c;
  // Problem selection first: the remaining defaults depend on it.
  auto problem_it = sections.find("problem");
  require(problem_it != sections.end(), "config: missing [problem] section");
  for (const auto& [key, value] : problem_it->second) {
    if (key == "kind") {
      if (value == "allen_cahn")
        c.problem = phys::ProblemKind::allen_cahn;
      else if (value == "helmholtz")
        c.problem = phys::ProblemKind::helmholtz;
      else
        fail("config key 'kind': unknown problem '" + value + "'");
    } else if (key == "a1") {
      c.helmholtz.a1 = static_cast<int>(to_int(key, value));
    } else if (key == "a2") {
      c.helmholtz.a2 = static_cast<int>(to_int(key, value));
    } else if (key == "k") {
      c.helmholtz.k = to_double(key, value);
    } else if (key == "bc_mode") {
      if (value == "fourier")
        c.bc_mode = BcMode::fourier;
      else if (value == "adf")
        c.bc_mode = BcMode::adf;
      else if (value == "soft")
        c.bc_mode = BcMode::soft;
      else
        fail("config key 'bc_mode': unknown mode '" + value + "'");
    } else if (key == "time_scale") {
      c.time_scale = to_double(key, value);
    } else {
      fail("config: unknown key 'problem." + key + "'");
    }
  }
  fill_defaults(c);

  bool embedding_touched = false;
  for (const auto& [section, entries] : sections) {
    if (section == "problem") continue;
    for (const auto& [key, value] : entries) {
      const std::string full = section + "." + key;
      if (section == "network") {
        if (key == "hidden_layers") c.hidden_layers = static_cast<int>(to_int(full, value));
        else if (key == "width") c.width = static_cast<int>(to_int(full, value));
        else if (key == "kind") {
          if (value == "mlp") c.modified_mlp = false;
          else if (value == "mmlp") c.modified_mlp = true;
          else fail("config key 'network.kind': expected mlp or mmlp");
        } else fail("config: unknown key '" + full + "'");
      } else if (section == "embedding") {
        embedding_touched = true;
        if (key == "kind") {
          if (value == "none") c.embedding.kind = net::EmbeddingKind::none;
          else if (value == "fourier1d") c.embedding.kind = net::EmbeddingKind::fourier1d;
          else if (value == "fourier2d_truncated")
            c.embedding.kind = net::EmbeddingKind::fourier2d_truncated;
          else if (value == "fourier2d_full")
            c.embedding.kind = net::EmbeddingKind::fourier2d_full;
          else fail("config key 'embedding.kind': unknown kind '" + value + "'");
        } else if (key == "m") c.embedding.m = static_cast<int>(to_int(full, value));
        else if (key == "n") c.embedding.n = static_cast<int>(to_int(full, value));
        else if (key == "period_x") c.embedding.period_x = to_double(full, value);
        else if (key == "period_y") c.embedding.period_y = to_double(full, value);
        else fail("config: unknown key '" + full + "'");
      } else if (section == "rba") {
        if (key == "enabled") c.rba.enabled = to_bool(full, value);
        else if (key == "gamma") c.rba.gamma = to_double(full, value);
        else if (key == "eta_star") c.rba.eta_star = to_double(full, value);
        else if (key == "c") c.rba.c = to_double(full, value);
        else if (key == "lbfgs_updates") c.rba.update_during_lbfgs = to_bool(full, value);
        else fail("config: unknown key '" + full + "'");
      } else if (section == "loss") {
        if (key == "lambda_ic") c.weights.lambda_ic = to_double(full, value);
        else if (key == "lambda_bc") c.weights.lambda_bc = to_double(full, value);
        else fail("config: unknown key '" + full + "'");
      } else if (section == "optimizer") {
        if (key == "adam_iters") c.adam_iters = to_int(full, value);
        else if (key == "lr0") c.schedule.lr0 = to_double(full, value);
        else if (key == "decay_rate") c.schedule.decay_rate = to_double(full, value);
        else if (key == "decay_step") c.schedule.decay_step = static_cast<int>(to_int(full, value));
        else if (key == "staircase") c.schedule.staircase = to_bool(full, value);
        else if (key == "lbfgs_iters") c.lbfgs_iters = to_int(full, value);
        else if (key == "lbfgs_memory") c.lbfgs_memory = static_cast<int>(to_int(full, value));
        else fail("config: unknown key '" + full + "'");
      } else if (section == "sampling") {
        if (key == "method") {
          if (value == "latin_hypercube") c.sampling = SamplingMethod::latin_hypercube;
          else if (value == "uniform_grid") c.sampling = SamplingMethod::uniform_grid;
          else fail("config key 'sampling.method': unknown method '" + value + "'");
        } else if (key == "collocation_points")
          c.collocation_points = static_cast<int>(to_int(full, value));
        else if (key == "ic_points") c.ic_points = static_cast<int>(to_int(full, value));
        else if (key == "bc_points") c.bc_points = static_cast<int>(to_int(full, value));
        else fail("config: unknown key '" + full + "'");
      } else if (section == "diagnostics") {
        if (key == "metric_every") c.metric_every = to_int(full, value);
        else if (key == "snapshot_every") c.snapshot_every = to_int(full, value);
        else if (key == "snr_every") c.snr_every = to_int(full, value);
        else if (key == "snr_batches") c.snr_batches = static_cast<int>(to_int(full, value));
        else if (key == "snr_sample_std") c.snr_sample_std = to_bool(full, value);
        else if (key == "snr_all_layers") c.snr_all_layers = to_bool(full, value);
        else fail("config: unknown key '" + full + "'");
      } else if (section == "run") {
        if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(full, value));
        else if (key == "checkpoint_every") c.checkpoint_every = to_int(full, value);
        else if (key == "chunk_points") c.chunk_points = static_cast<int>(to_int(full, value));
        else fail("config: unknown key '" + full + "'");
      } else {
        fail("config: unknown section '" + section + "'");
      }
    }
  }
  // An embedding kind change without explicit axes: rewire the defaults.
  if (embedding_touched) {
    if (c.embedding.kind == net::EmbeddingKind::none) c.embedding = {};
    else if (c.embedding.kind == net::EmbeddingKind::fourier1d && c.embedding.embedded_axes.empty())
      c.embedding.embedded_axes = {1};
    else if (c.embedding.embedded_axes.empty())
      c.embedding.embedded_axes = {0, 1};
  }
  validate(c);
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[problem]\n";
  o << "kind = " << (c.problem == phys::ProblemKind::allen_cahn ? "allen_cahn" : "helmholtz")
    << "\n";
  if (c.problem == phys::ProblemKind::helmholtz) {
    o << "a1 = " << c.helmholtz.a1 << "\n";
    o << "a2 = " << c.helmholtz.a2 << "\n";
    o << "k = " << fmt(c.helmholtz.k) << "\n";
    o << "bc_mode = " << bc_name(c.bc_mode) << "\n";
  } else {
    o << "time_scale = " << fmt(c.time_scale) << "\n";
  }
  o << "\n[network]\n";
  o << "hidden_layers = " << c.hidden_layers << "\n";
  o << "width = " << c.width << "\n";
  o << "kind = " << (c.modified_mlp ? "mmlp" : "mlp") << "\n";
  o << "\n[embedding]\n";
  o << "kind = " << embed_name(c.embedding.kind) << "\n";
  if (c.embedding.kind != net::EmbeddingKind::none) {
    o << "m = " << c.embedding.m << "\n";
    if (c.embedding.kind != net::EmbeddingKind::fourier1d) o << "n = " << c.embedding.n << "\n";
    o << "period_x = " << fmt(c.embedding.period_x) << "\n";
    if (c.embedding.kind != net::EmbeddingKind::fourier1d)
      o << "period_y = " << fmt(c.embedding.period_y) << "\n";
  }
  o << "\n[rba]\n";
  o << "enabled = " << (c.rba.enabled ? "true" : "false") << "\n";
  o << "gamma = " << fmt(c.rba.gamma) << "\n";
  o << "eta_star = " << fmt(c.rba.eta_star) << "\n";
  o << "c = " << fmt(c.rba.c) << "\n";
  o << "lbfgs_updates = " << (c.rba.update_during_lbfgs ? "true" : "false") << "\n";
  o << "\n[loss]\n";
  o << "lambda_ic = " << fmt(c.weights.lambda_ic) << "\n";
  o << "lambda_bc = " << fmt(c.weights.lambda_bc) << "\n";
  o << "\n[optimizer]\n";
  o << "adam_iters = " << c.adam_iters << "\n";
  o << "lr0 = " << fmt(c.schedule.lr0) << "\n";
  o << "decay_rate = " << fmt(c.schedule.decay_rate) << "\n";
  o << "decay_step = " << c.schedule.decay_step << "\n";
  o << "staircase = " << (c.schedule.staircase ? "true" : "false") << "\n";
  o << "lbfgs_iters = " << c.lbfgs_iters << "\n";
  o << "lbfgs_memory = " << c.lbfgs_memory << "\n";
  o << "\n[sampling]\n";
  o << "method = "
    << (c.sampling == SamplingMethod::latin_hypercube ? "latin_hypercube" : "uniform_grid")
    << "\n";
  o << "collocation_points = " << c.collocation_points << "\n";
  o << "ic_points = " << c.ic_points << "\n";
  o << "bc_points = " << c.bc_points << "\n";
  o << "\n[diagnostics]\n";
  o << "metric_every = " << c.metric_every << "\n";
  o << "snapshot_every = " << c.snapshot_every << "\n";
  o << "snr_every = " << c.snr_every << "\n";
  o << "snr_batches = " << c.snr_batches << "\n";
  o << "snr_sample_std = " << (c.snr_sample_std ? "true" : "false") << "\n";
  o << "snr_all_layers = " << (c.snr_all_layers ? "true" : "false") << "\n";
  o << "\n[run]\n";
  o << "seed = " << c.seed << "\n";
  o << "checkpoint_every = " << c.checkpoint_every << "\n";
  o << "chunk_points = " << c.chunk_points << "\n";
  return o.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

phys::ProblemConfig problem_config(const ExperimentConfig& cfg) {
  phys::ProblemConfig p;
  p.kind = cfg.problem;
  p.helmholtz = cfg.helmholtz;
  p.embedding = cfg.embedding;
  p.adf = cfg.problem == phys::ProblemKind::helmholtz && cfg.bc_mode == BcMode::adf;
  p.time_scale = cfg.time_scale;
  return p;
}

net::Architecture architecture(const ExperimentConfig& cfg) {
  net::Architecture a;
  a.input_dim = cfg.embedding.feature_count(2);
  a.width = cfg.width;
  a.hidden_layers = cfg.hidden_layers;
  a.output_dim = 1;
  a.modified = cfg.modified_mlp;
  return a;
}

phys::CollocationSet build_collocation(const ExperimentConfig& cfg) {
  phys::CollocationSet colloc;
  if (cfg.problem == phys::ProblemKind::allen_cahn) {
    const std::array<phys::Interval, 2> box{{{0.0, 1.0}, {-1.0, 1.0}}};
    colloc.interior = cfg.sampling == SamplingMethod::latin_hypercube
                          ? phys::sample_latin_hypercube(cfg.collocation_points, box, cfg.seed)
                          : phys::sample_uniform_grid_total(cfg.collocation_points, box);
    for (int i = 0; i < cfg.ic_points; ++i) {
      const double x = cfg.ic_points == 1 ? -1.0 : -1.0 + 2.0 * i / (cfg.ic_points - 1);
      colloc.ic_points.push_back({0.0, x});
      colloc.ic_values.push_back(phys::allen_cahn_ic(x));
    }
    return colloc;
  }

  const std::array<phys::Interval, 2> box{{{-1.0, 1.0}, {-1.0, 1.0}}};
  colloc.interior = cfg.sampling == SamplingMethod::latin_hypercube
                        ? phys::sample_latin_hypercube(cfg.collocation_points, box, cfg.seed)
                        : phys::sample_uniform_grid_total(cfg.collocation_points, box);
  // Boundary points: per-edge midpoint-spaced samples, no duplicate corners.
  const int per_edge = cfg.bc_points / 4;
  for (int e = 0; e < 4 && per_edge > 0; ++e) {
    for (int i = 0; i < per_edge; ++i) {
      const double s = -1.0 + 2.0 * (i + 0.5) / per_edge;
      phys::Point2 p;
      switch (e) {
        case 0: p = {-1.0, s}; break;
        case 1: p = {1.0, s}; break;
        case 2: p = {s, -1.0}; break;
        default: p = {s, 1.0}; break;
      }
      colloc.bc_points.push_back(p);
      colloc.bc_values.push_back(0.0);
    }
  }
  return colloc;
}

opt::TrainConfig train_config(const ExperimentConfig& cfg) {
  opt::TrainConfig t;
  t.adam_iters = cfg.adam_iters;
  t.adam.schedule = cfg.schedule;
  t.lbfgs_iters = cfg.lbfgs_iters;
  t.lbfgs.memory = cfg.lbfgs_memory;
  t.rba = cfg.rba;
  t.weights = cfg.weights;
  t.metric_every = cfg.metric_every;
  return t;
}

}  // namespace rba::io
