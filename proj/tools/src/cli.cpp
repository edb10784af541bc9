#include "pdgm/cli/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <zlib.h>

#include "pdgm/backward.hpp"
#include "pdgm/bound.hpp"
#include "pdgm/checkpoint.hpp"
#include "pdgm/cli/config.hpp"
#include "pdgm/datasets.hpp"
#include "pdgm/density_model.hpp"
#include "pdgm/dynamics.hpp"
#include "pdgm/forward.hpp"
#include "pdgm/metrics.hpp"
#include "pdgm/oracle.hpp"
#include "pdgm/ratio_zzp.hpp"

#ifndef PDGM_VERSION_STRING
#define PDGM_VERSION_STRING "unknown"
#endif

namespace pdgm::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string version_string() { return PDGM_VERSION_STRING; }

namespace {

constexpr int kManifestVersion = 1;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad number '" + item + "' in " + what);
    }
  }
  if (out.empty()) throw UsageError(what + " is empty");
  return out;
}

NoiseSchedule parse_schedule(const std::string& text) {
  std::vector<NoiseSchedule::Piece> pieces;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw UsageError("beta_schedule entries must be start:value, got '" + item + "'");
    }
    const auto start = parse_list(item.substr(0, colon), "beta_schedule");
    const auto value = parse_list(item.substr(colon + 1), "beta_schedule");
    pieces.push_back({start[0], value[0]});
  }
  try {
    return NoiseSchedule(pieces);
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("beta_schedule: ") + e.what());
  }
}

json schedule_json(const NoiseSchedule& s) {
  json out = json::array();
  for (const auto& p : s.pieces()) out.push_back({p.start, p.value});
  return out;
}

json spec_json(const ProcessSpec& spec) {
  return {{"process", to_string(spec.kind)},   {"potential", to_string(spec.potential)},
          {"lambda_r", spec.refresh_rate},     {"T_f", spec.horizon},
          {"d", spec.dim},                     {"beta_schedule", schedule_json(spec.schedule)}};
}

ProcessSpec spec_from_json(const json& j) {
  ProcessSpec spec;
  spec.kind = parse_process_kind(j.at("process").get<std::string>());
  spec.potential = parse_potential(j.at("potential").get<std::string>());
  spec.refresh_rate = j.at("lambda_r").get<double>();
  spec.horizon = j.at("T_f").get<double>();
  spec.dim = j.at("d").get<int>();
  std::vector<NoiseSchedule::Piece> pieces;
  for (const auto& p : j.at("beta_schedule")) pieces.push_back({p[0].get<double>(), p[1].get<double>()});
  spec.schedule = NoiseSchedule(pieces);
  return spec;
}

ProcessSpec spec_from_config(const RunConfig& c, int d) {
  ProcessSpec spec;
  try {
    spec.kind = parse_process_kind(c.str("process"));
    spec.potential = parse_potential(c.str("potential"));
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  spec.refresh_rate = c.real("lambda_r");
  spec.horizon = c.real("T_f");
  spec.dim = d;
  spec.schedule = parse_schedule(c.str("beta_schedule"));
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return spec;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

json manifest(const std::string& command, const std::vector<std::string>& args) {
  return {{"manifest_version", kManifestVersion},
          {"command", command},
          {"version", version_string()},
          {"args", args}};
}

std::string args_hash(const std::vector<std::string>& args) {
  std::string joined;
  for (const auto& a : args) joined += a + '\n';
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(joined.data()),
                         static_cast<uInt>(joined.size()));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

// A trained model reconstructed from its checkpoint.
struct LoadedModel {
  ProcessSpec spec;
  std::unique_ptr<RatioModel> ratio;
  std::unique_ptr<CondDensityModel> density;
  json meta;

  BackwardModels models() const { return {ratio.get(), density.get()}; }
};

LoadedModel load_model(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  LoadedModel m;
  try {
    m.meta = json::parse(ck.metadata_json);
    m.spec = spec_from_json(m.meta);
    const auto omega = parse_time_density(m.meta.value("omega", "uniform"));
    const std::string kind = m.meta.at("model").get<std::string>();
    if (kind == "ratio") {
      m.ratio = std::make_unique<RatioModel>(m.spec, std::move(ck.params), omega);
    } else if (kind == "density") {
      m.density = std::make_unique<CondDensityModel>(
          m.spec, std::move(ck.params), m.meta.at("K").get<int>(), omega);
    } else {
      throw ModelSpecMismatch("checkpoint '" + path + "' has unknown model kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    throw ModelSpecMismatch("checkpoint '" + path + "' metadata is incomplete: " + e.what());
  }
  return m;
}

Matrix load_training_data(const RunConfig& c) {
  if (c.has("data")) return load_csv(c.str("data"));
  if (!c.has("dataset")) {
    throw UsageError("missing required config key 'dataset' (or 'data' with a CSV path)");
  }
  DatasetSpec ds;
  ds.name = parse_dataset_name(c.str("dataset"));
  ds.n = static_cast<std::size_t>(c.integer("data_n"));
  ds.seed = c.u64("data_seed");
  return generate(ds);
}

BackwardResult sample_backward(const LoadedModel& m, std::size_t n, std::size_t steps,
                               InitMode init, std::uint64_t seed, int threads,
                               bool reevaluate) {
  if (init == InitMode::LearnedVelocity && m.spec.kind == ProcessKind::ZigZag) {
    throw UsageError("learned init unsupported for zzp");
  }
  BackwardConfig bc;
  bc.grid = steps ? time_grid_quadratic(m.spec.horizon, steps) : TimeGrid{m.spec.horizon, {}};
  bc.init = init;
  bc.n_samples = n;
  bc.seed = seed;
  bc.threads = threads;
  bc.reevaluate_after_flip = reevaluate;
  return run_backward(m.models(), m.spec, bc);
}

InitMode init_from(const std::string& s) {
  try {
    return parse_init_mode(s);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------- dataset

struct DatasetArgs {
  std::string name, out;
  std::size_t n = 100000;
  std::uint64_t seed = 0;
  bool raw = false;
};

int cmd_dataset(const DatasetArgs& a, std::ostream& out) {
  DatasetSpec ds;
  try {
    ds.name = parse_dataset_name(a.name);
  } catch (const UnknownDataset& e) {
    throw UsageError(e.what());
  }
  ds.n = a.n;
  ds.seed = a.seed;
  ds.normalize = !a.raw;
  save_csv(a.out, generate(ds));
  out << "wrote " << a.n << " rows to " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- forward

struct ForwardArgs {
  std::string process = "zzp", potential = "gaussian", schedule = "0:1", x0, v0, out;
  int d = 2;
  double horizon = 5.0, lambda_r = 1.0;
  std::uint64_t seed = 0;
};

int cmd_forward(const ForwardArgs& a, std::ostream& out) {
  RunConfig c;
  c.set("process", a.process);
  c.set("potential", a.potential);
  c.set("T_f", format_double(a.horizon));
  c.set("lambda_r", format_double(a.lambda_r));
  c.set("beta_schedule", a.schedule);
  const ProcessSpec spec = spec_from_config(c, a.d);
  Rng rng(a.seed);
  State s0{Vector::Zero(a.d), Vector()};
  if (!a.x0.empty()) {
    const auto x = parse_list(a.x0, "--x0");
    if (static_cast<int>(x.size()) != a.d) throw UsageError("--x0 needs d values");
    s0.x = Eigen::Map<const Vector>(x.data(), a.d);
  }
  if (!a.v0.empty()) {
    const auto v = parse_list(a.v0, "--v0");
    if (static_cast<int>(v.size()) != a.d) throw UsageError("--v0 needs d values");
    s0.v = Eigen::Map<const Vector>(v.data(), a.d);
  } else {
    s0.v = draw_velocity(spec, rng);
  }
  try {
    check_state(spec, s0);
  } catch (const InvalidState& e) {
    throw UsageError(e.what());
  }
  const Trajectory path = simulate_forward(spec, s0, spec.horizon, rng);
  write_trajectory_csv(a.out, path);
  out << "wrote " << path.events.size() << " events to " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config, out_dir;
  std::vector<std::string> overrides;
  int threads = 1;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const auto start = Clock::now();
  RunConfig c;
  if (!a.config.empty()) c.parse_file(a.config);
  for (const auto& o : a.overrides) c.apply_override(o);
  if (!a.out_dir.empty()) c.set("output_dir", a.out_dir);
  c.require("process");

  const Matrix data = load_training_data(c);
  const int d = static_cast<int>(data.cols());
  if (c.has("d") && c.integer("d") != d) {
    throw UsageError("config d = " + c.str("d") + " but the data has " + std::to_string(d) +
                     " columns");
  }
  const ProcessSpec spec = spec_from_config(c, d);

  TrainConfig tc;
  tc.steps = static_cast<std::size_t>(c.integer("steps"));
  tc.batch_size = static_cast<std::size_t>(c.integer("batch"));
  tc.lr = c.real("lr");
  tc.omega = parse_time_density(c.str("omega"));
  tc.subsample = static_cast<int>(c.integer("subsample"));
  tc.seed = c.u64("seed");
  tc.threads = a.threads;
  tc.trajectory_cache = static_cast<std::size_t>(c.integer("trajectory_cache"));
  tc.hidden_width = static_cast<int>(c.integer("hidden_width"));
  tc.n_blocks = static_cast<int>(c.integer("n_blocks"));
  tc.time_embed_dim = static_cast<int>(c.integer("time_embed_dim"));
  tc.components = static_cast<int>(c.integer("components"));
  if (tc.time_embed_dim % 2) throw UsageError("time_embed_dim must be even");
  const std::size_t report_every = std::max<std::size_t>(1, tc.steps / 20);
  if (!a.quiet) {
    tc.on_step = [&](std::size_t step, double loss) {
      if ((step + 1) % report_every == 0) out << "step " << step + 1 << " loss " << loss << "\n";
    };
  }

  json meta = spec_json(spec);
  meta["omega"] = c.str("omega");
  meta["config_hash"] = c.hash();
  std::optional<Mlp> params;
  std::vector<double> history;
  if (spec.kind == ProcessKind::ZigZag) {
    auto r = train_ratio(data, spec, tc);
    meta["model"] = "ratio";
    params = r.model.net();
    history = std::move(r.loss_history);
  } else {
    auto r = train_density(data, spec, tc);
    meta["model"] = "density";
    meta["K"] = tc.components;
    params = r.model.net();
    history = std::move(r.loss_history);
  }

  const fs::path dir = c.str("output_dir");
  ensure_dir(dir);
  save_checkpoint((dir / "checkpoint.json").string(), {*params, meta.dump()});
  std::string loss_csv = "step,loss\n";
  for (std::size_t s = 0; s < history.size(); ++s) {
    loss_csv += std::to_string(s) + "," + format_double(history[s]) + "\n";
  }
  write_text(dir / "loss.csv", loss_csv);

  json m = manifest("train", argv);
  json cfg = json::object();
  for (const auto& k : RunConfig::keys()) {
    try {
      cfg[k] = c.str(k);
    } catch (const UsageError&) {
    }
  }
  m["config"] = cfg;
  m["config_hash"] = c.hash();
  m["threads"] = a.threads;
  m["outputs"] = {"checkpoint.json", "loss.csv"};
  m["final_loss"] = history.empty() ? json(nullptr) : json(history.back());
  m["wall_time_s"] = seconds_since(start);
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  out << "checkpoint written to " << (dir / "checkpoint.json").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  std::string checkpoint, out_dir = ".", init = "base";
  std::size_t n = 10000, steps = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  bool reevaluate = false;
};

int cmd_sample(const SampleArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const auto start = Clock::now();
  const InitMode init = init_from(a.init);
  const LoadedModel m = load_model(a.checkpoint);
  const BackwardResult r =
      sample_backward(m, a.n, a.steps, init, a.seed, a.threads, a.reevaluate);

  const fs::path dir = a.out_dir;
  ensure_dir(dir);
  save_csv((dir / "samples.csv").string(), r.positions, "x");
  save_csv((dir / "velocities.csv").string(), r.velocities, "v");
  json mf = manifest("sample", argv);
  mf["checkpoint"] = a.checkpoint;
  mf["config_hash"] = m.meta.value("config_hash", "");
  mf["n"] = a.n;
  mf["steps"] = a.steps;
  mf["init"] = to_string(init);
  mf["seed"] = a.seed;
  mf["threads"] = a.threads;
  mf["reevaluate_after_flip"] = a.reevaluate;
  mf["model_evals"] = r.stats.model_evals;
  mf["saturations"] = r.stats.saturations;
  mf["outputs"] = {"samples.csv", "velocities.csv"};
  mf["wall_time_s"] = seconds_since(start);
  write_text(dir / "manifest.json", mf.dump(2) + "\n");
  out << "wrote " << a.n << " samples to " << (dir / "samples.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string generated, reference, metrics = "mmd", out, sweep, checkpoint, init = "base";
  std::string config_hash;
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  int threads = 1;
};

double metric_value(const std::string& metric, const Matrix& gen, const Matrix& ref,
                    int threads) {
  if (gen.cols() != ref.cols()) {
    throw DimensionMismatch("generated data has " + std::to_string(gen.cols()) +
                            " columns, reference has " + std::to_string(ref.cols()));
  }
  if (metric == "mmd") {
    MmdConfig mc;
    mc.threads = threads;
    return mmd(gen, ref, mc);
  }
  // W2 on a common number of points, both sides strided.
  const Eigen::Index n = std::min<Eigen::Index>(
      {gen.rows(), ref.rows(), static_cast<Eigen::Index>(kMaxW2Points)});
  Matrix g(n, gen.cols()), r(n, ref.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    g.row(i) = gen.row(i * gen.rows() / n);
    r.row(i) = ref.row(i * ref.rows() / n);
  }
  return wasserstein2(g, r);
}

std::vector<std::string> parse_metrics(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item != "mmd" && item != "w2") {
      throw UsageError("unknown metric '" + item + "' (expected mmd or w2)");
    }
    out.push_back(item);
  }
  if (out.empty()) throw UsageError("no metrics requested");
  return out;
}

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const auto metrics = parse_metrics(a.metrics);
  const std::string hash = a.config_hash.empty() ? args_hash(argv) : a.config_hash;
  const Matrix ref = load_csv(a.reference);
  std::ostringstream csv;

  if (!a.sweep.empty()) {
    if (a.checkpoint.empty()) throw UsageError("--sweep-steps needs --checkpoint");
    std::vector<std::size_t> steps;
    for (double s : parse_list(a.sweep, "--sweep-steps")) {
      if (s < 0 || s != static_cast<double>(static_cast<std::size_t>(s))) {
        throw UsageError("--sweep-steps entries must be non-negative integers");
      }
      steps.push_back(static_cast<std::size_t>(s));
    }
    const InitMode init = init_from(a.init);
    const LoadedModel m = load_model(a.checkpoint);
    csv << "steps";
    for (const auto& k : metrics) csv << "," << k;
    csv << ",n,seed,config_hash\n";
    for (std::size_t s : steps) {
      const auto r = sample_backward(m, a.n, s, init, a.seed, a.threads, false);
      csv << s;
      for (const auto& k : metrics) csv << "," << format_double(metric_value(k, r.positions, ref, a.threads));
      csv << "," << a.n << "," << a.seed << "," << hash << "\n";
    }
  } else {
    if (a.generated.empty()) throw UsageError("--generated is required without --sweep-steps");
    const Matrix gen = load_csv(a.generated);
    csv << "metric,value,n,seed,config_hash\n";
    for (const auto& k : metrics) {
      csv << k << "," << format_double(metric_value(k, gen, ref, a.threads)) << ","
          << gen.rows() << "," << a.seed << "," << hash << "\n";
    }
  }
  if (a.out.empty()) {
    out << csv.str();
  } else {
    write_text(a.out, csv.str());
    out << "wrote " << a.out << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- bound

struct BoundArgs {
  std::string checkpoint, data, reference = "oracle", out;
  std::optional<double> stub_ratio, c, gamma;
  double x0 = 0.0, horizon = 5.0, lambda_r = 1.0;
  std::size_t oracle_draws = 1000000, paths = 2000, min_count = 20;
  int x_bins = 40;
  std::uint64_t seed = 0;
  int threads = 1;
};

int cmd_bound(const BoundArgs& a, std::ostream& out) {
  if (a.c.has_value() != a.gamma.has_value()) {
    throw UsageError("--C and --gamma must be given together");
  }
  if (a.checkpoint.empty() == !a.stub_ratio.has_value()) {
    throw UsageError("give exactly one of --checkpoint and --stub-ratio");
  }
  ProcessSpec spec;
  std::unique_ptr<RatioEstimator> stub;
  LoadedModel loaded;
  const RatioEstimator* model = nullptr;
  if (a.stub_ratio) {
    spec.kind = ProcessKind::ZigZag;
    spec.dim = 1;
    spec.horizon = a.horizon;
    spec.refresh_rate = a.lambda_r;
    stub = std::make_unique<ConstantRatio>(1, *a.stub_ratio);
    model = stub.get();
  } else {
    loaded = load_model(a.checkpoint);
    spec = loaded.spec;
    if (!loaded.ratio) throw UsageError("bound needs a ZZP ratio checkpoint");
    if (spec.dim != 1) throw UsageError("oracle requires d=1");
    model = loaded.ratio.get();
  }
  const Matrix initial = a.data.empty() ? Matrix::Constant(1, 1, a.x0) : load_csv(a.data);
  if (initial.cols() != 1) throw UsageError("oracle requires d=1");

  std::unique_ptr<ReferenceRatio> reference;
  json report;
  if (a.reference == "stationary") {
    reference = std::make_unique<ConstantReference>(1, 1.0);
  } else if (a.reference == "oracle") {
    RatioOracleConfig oc;
    oc.n_draws = a.oracle_draws;
    oc.min_count = a.min_count;
    oc.x_bins = a.x_bins;
    oc.seed = a.seed;
    oc.threads = a.threads;
    auto oracle = std::make_unique<RatioOracle>(build_ratio_oracle(spec, initial, oc));
    report["oracle_cells"] = oracle->cells();
    report["oracle_unavailable_cells"] = oracle->unavailable_cells();
    reference = std::move(oracle);
  } else {
    throw UsageError("--reference must be oracle or stationary");
  }

  BoundConfig bc;
  bc.n_paths = a.paths;
  bc.seed = a.seed + 1;
  bc.threads = a.threads;
  BoundResult r;
  try {
    r = zzp_g_integral(*model, *reference, spec, initial, bc);
  } catch (const OracleGap& e) {
    throw OracleGap(std::string(e.what()) + " (limit " + format_double(bc.max_unavailable) + ")");
  }
  report["bound_mc"] = r.bound_mc;
  report["M_hat"] = r.m_hat;
  report["evaluations"] = r.evaluations;
  report["unavailable"] = r.unavailable;
  report["unavailable_fraction"] =
      static_cast<double>(r.unavailable) / static_cast<double>(r.evaluations);
  report["T_f"] = spec.horizon;
  report["d"] = spec.dim;
  if (a.c) {
    report["C"] = *a.c;
    report["gamma"] = *a.gamma;
    try {
      report["tv_total"] = tv_bound_zzp(*a.c, *a.gamma, spec.horizon, r.m_hat, spec.dim);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  const std::string text = report.dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
  } else {
    write_text(a.out, text);
    out << "wrote " << a.out << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generative modelling with piecewise deterministic Markov processes", "pdgm"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  DatasetArgs da;
  auto* ds = app.add_subcommand("dataset", "Generate a toy 2D dataset as CSV");
  ds->add_option("--name", da.name, "Dataset name")->required();
  ds->add_option("--n", da.n, "Number of points")->check(CLI::PositiveNumber);
  ds->add_option("--seed", da.seed, "Random seed");
  ds->add_option("--out", da.out, "Output CSV path")->required();
  ds->add_flag("--raw", da.raw, "Skip centering and rescaling");

  ForwardArgs fa;
  auto* fw = app.add_subcommand("forward", "Simulate one forward trajectory and write its events");
  fw->add_option("--process", fa.process, "zzp, bps or rhmc");
  fw->add_option("--potential", fa.potential, "gaussian or zero");
  fw->add_option("--d", fa.d, "Dimension")->check(CLI::PositiveNumber);
  fw->add_option("--T", fa.horizon, "Time horizon");
  fw->add_option("--lambda-r", fa.lambda_r, "Refreshment rate");
  fw->add_option("--beta-schedule", fa.schedule, "Piecewise-constant beta as start:value,...");
  fw->add_option("--x0", fa.x0, "Initial position, comma separated (default 0)");
  fw->add_option("--v0", fa.v0, "Initial velocity, comma separated (default: drawn)");
  fw->add_option("--seed", fa.seed, "Random seed");
  fw->add_option("--out", fa.out, "Output CSV path")->required();

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train the backward characteristics");
  tr->add_option("--config", ta.config, "key = value config file");
  tr->add_option("--set", ta.overrides, "Override a config key (key=value), repeatable");
  tr->add_option("--out-dir", ta.out_dir, "Output directory (overrides output_dir)");
  tr->add_option("--threads", ta.threads, "Worker threads")->check(CLI::PositiveNumber);
  tr->add_flag("--quiet", ta.quiet, "No progress output");

  SampleArgs sa;
  auto* sm = app.add_subcommand("sample", "Generate data with the backward process");
  sm->add_option("--checkpoint", sa.checkpoint, "Model checkpoint")->required();
  sm->add_option("--n", sa.n, "Number of samples")->check(CLI::PositiveNumber);
  sm->add_option("--steps", sa.steps, "Backward steps (0 returns the initial draw)");
  sm->add_option("--init", sa.init, "base or learned");
  sm->add_option("--seed", sa.seed, "Random seed");
  sm->add_option("--out-dir", sa.out_dir, "Output directory");
  sm->add_option("--threads", sa.threads, "Worker threads")->check(CLI::PositiveNumber);
  sm->add_flag("--reevaluate-flips", sa.reevaluate,
               "ZZP: re-evaluate ratios after each accepted flip");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Compare generated and reference samples");
  ev->add_option("--generated", ea.generated, "Generated samples CSV");
  ev->add_option("--reference", ea.reference, "Reference samples CSV")->required();
  ev->add_option("--metrics", ea.metrics, "Comma separated: mmd, w2");
  ev->add_option("--out", ea.out, "Report CSV (default stdout)");
  ev->add_option("--sweep-steps", ea.sweep, "Resample at these backward step counts");
  ev->add_option("--checkpoint", ea.checkpoint, "Checkpoint for --sweep-steps");
  ev->add_option("--n", ea.n, "Samples per sweep point")->check(CLI::PositiveNumber);
  ev->add_option("--init", ea.init, "base or learned (sweep)");
  ev->add_option("--seed", ea.seed, "Random seed");
  ev->add_option("--config-hash", ea.config_hash, "Value for the config_hash column");
  ev->add_option("--threads", ea.threads, "Worker threads")->check(CLI::PositiveNumber);

  BoundArgs ba;
  auto* bd = app.add_subcommand("bound", "Evaluate the total-variation bound for a d=1 ZZP model");
  bd->add_option("--checkpoint", ba.checkpoint, "ZZP ratio checkpoint");
  bd->add_option("--stub-ratio", ba.stub_ratio, "Use a constant ratio model instead");
  bd->add_option("--data", ba.data, "Initial positions CSV (n x 1)");
  bd->add_option("--x0", ba.x0, "Point mass initial position when --data is absent");
  bd->add_option("--T", ba.horizon, "Time horizon (stub model)");
  bd->add_option("--lambda-r", ba.lambda_r, "Refreshment rate (stub model)");
  bd->add_option("--reference", ba.reference, "oracle or stationary");
  bd->add_option("--oracle-draws", ba.oracle_draws, "Forward draws for the histogram oracle");
  bd->add_option("--min-count", ba.min_count, "Minimum count per oracle cell");
  bd->add_option("--x-bins", ba.x_bins, "Oracle position bins")->check(CLI::PositiveNumber);
  bd->add_option("--paths", ba.paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
  bd->add_option("--C", ba.c, "Ergodicity constant C");
  bd->add_option("--gamma", ba.gamma, "Ergodicity rate gamma");
  bd->add_option("--seed", ba.seed, "Random seed");
  bd->add_option("--out", ba.out, "Report JSON (default stdout)");
  bd->add_option("--threads", ba.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << version_string() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (app.get_subcommands().empty()) err << app.help();
    return kExitUsage;
  }

  try {
    if (*ds) return cmd_dataset(da, out);
    if (*fw) return cmd_forward(fa, out);
    if (*tr) return cmd_train(ta, args, out);
    if (*sm) return cmd_sample(sa, args, out);
    if (*ev) return cmd_eval(ea, args, out);
    if (*bd) return cmd_bound(ba, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace pdgm::cli
