// dote: command-line front end for training, synthesis, degradation and
// evaluation. Exit codes: 0 success, 2 validation error, 3 training stopped
// before convergence (model still written), 1 anything else.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dote/dote.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitNotConverged = 3;

// Key=value record of one invocation. `arg.N` entries hold the original
// argument vector so the run can be replayed.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;
  std::optional<dote::SolverConfig> config;
  std::string manifest;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  double wall_seconds = 0.0;

  void write(const fs::path& path) const {
    std::ofstream os(path);
    if (!os) throw dote::FormatError("cannot write run manifest " + path.string());
    os << std::setprecision(17);
    os << "command=" << command << '\n';
    os << "version=" << dote::kVersion << '\n';
    if (seed) os << "seed=" << *seed << '\n';
    if (!manifest.empty()) os << "manifest=" << manifest << '\n';
    for (std::size_t i = 0; i < inputs.size(); ++i)
      os << "input." << i << '=' << inputs[i] << '\n';
    for (std::size_t i = 0; i < outputs.size(); ++i)
      os << "output." << i << '=' << outputs[i] << '\n';
    if (config) {
      std::ostringstream cfg;
      dote::write_config(cfg, *config);
      std::istringstream lines(cfg.str());
      for (std::string line; std::getline(lines, line);)
        if (!line.empty() && line.front() != '#') os << "config." << line << '\n';
    }
    os << "wall_seconds=" << wall_seconds << '\n';
    for (std::size_t i = 0; i < args.size(); ++i) os << "arg." << i << '=' << args[i] << '\n';
  }

  static std::vector<std::string> read_args(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw dote::FormatError("cannot open run manifest " + path.string());
    std::map<std::size_t, std::string> args;
    for (std::string line; std::getline(is, line);) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      if (key.rfind("arg.", 0) != 0) continue;
      try {
        args[std::stoul(key.substr(4))] = line.substr(eq + 1);
      } catch (const std::exception&) {
        throw dote::FormatError("run manifest: bad key " + key);
      }
    }
    std::vector<std::string> out;
    for (auto& [index, value] : args) {
      if (index != out.size()) throw dote::FormatError("run manifest: gap in arg list");
      out.push_back(std::move(value));
    }
    if (out.empty()) throw dote::FormatError("run manifest has no recorded arguments");
    return out;
  }
};

dote::SolverConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  dote::SolverConfig cfg;
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) throw dote::InvalidInput("cannot open config " + path);
    cfg = dote::parse_config(is);
  }
  if (seed) cfg.seed = *seed;
  cfg.validate();
  return cfg;
}

fs::path run_manifest_path(const std::string& requested, const fs::path& primary) {
  if (!requested.empty()) return requested;
  fs::path p = primary;
  p += ".run";
  return p;
}

struct Options {
  std::string manifest;
  std::string config;
  std::string model;
  std::string out;
  std::string upsampled;
  std::string run_manifest;
  std::vector<std::string> inputs;
  std::size_t factor = 2;
  std::optional<std::uint64_t> seed;
  double peak = 1.0;
};

int cmd_train(const Options& o, RunManifest& run) {
  if (o.manifest.empty()) throw dote::InvalidInput("train: --manifest is required");
  if (o.model.empty()) throw dote::InvalidInput("train: --model is required");
  const dote::SolverConfig cfg = load_config(o.config, o.seed);
  const auto dataset = dote::load_paired_dataset(o.manifest);
  if (dataset.empty()) throw dote::InvalidInput("train: manifest lists no pairs");

  const auto result = dote::train(dataset, cfg);
  dote::save_model(o.model, result.model);

  fs::path report = o.out;
  if (report.empty()) {
    report = o.model;
    report += ".report.csv";
  }
  std::ofstream csv(report);
  if (!csv) throw dote::FormatError("cannot write report " + report.string());
  result.report.write_csv(csv);

  run.config = cfg;
  run.seed = cfg.seed;
  run.manifest = o.manifest;
  run.outputs = {o.model, report.string()};

  std::cerr << "trained " << dataset.size() << " pairs, "
            << result.report.iterations.size() << " sweeps, objective "
            << result.report.iterations.back().objective << '\n';
  if (!result.report.converged) {
    std::cerr << "warning: stopped after max_outer sweeps without reaching tol; "
                 "model written\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_synth(const Options& o, RunManifest& run) {
  if (o.model.empty()) throw dote::InvalidInput("synth: --model is required");
  if (o.inputs.empty()) throw dote::InvalidInput("synth: no input images");
  if (o.out.empty()) throw dote::InvalidInput("synth: --out is required");
  const auto model = dote::load_model(o.model);

  // One input and a non-directory --out names the output file; otherwise
  // --out is a directory receiving <stem>_synth<ext> per input.
  const bool to_dir = o.inputs.size() > 1 || fs::is_directory(o.out);
  if (to_dir) fs::create_directories(o.out);

  std::vector<dote::ImageRecord> records;
  for (const auto& in : o.inputs) records.push_back(dote::load_image(in));

  for (const auto& rec : records) {
    const fs::path in(rec.source_path);
    fs::path dest = o.out;
    if (to_dir) dest = fs::path(o.out) / (in.stem().string() + "_synth" + in.extension().string());
    const dote::Tensor y = dote::synthesize(model, rec.tensor);
    dote::save_image(dest, y, rec.format, rec.pgm_maxval ? rec.pgm_maxval : 255);
    run.outputs.push_back(dest.string());
  }
  run.inputs = o.inputs;
  run.config = model.config;
  return kExitOk;
}

int cmd_degrade(const Options& o, RunManifest& run) {
  if (o.inputs.size() != 1) throw dote::InvalidInput("degrade: exactly one input expected");
  if (o.out.empty()) throw dote::InvalidInput("degrade: --out is required");
  if (o.factor == 0) throw dote::InvalidInput("degrade: --factor must be >= 1");
  const fs::path in = o.inputs.front();
  unsigned maxval = 0;
  const dote::Tensor hr = dote::load_intensities(in, &maxval);
  const dote::ImageFormat format = dote::format_from_path(in);

  const dote::Tensor lr = dote::sr_degrade(hr, o.factor);
  dote::save_image(o.out, lr, format, maxval ? maxval : 255);
  run.outputs.push_back(o.out);
  if (!o.upsampled.empty()) {
    dote::Tensor up = dote::sr_upsample(lr, o.factor);
    if (format == dote::ImageFormat::pgm) up = dote::clamp_unit(std::move(up));
    dote::save_image(o.upsampled, up, format, maxval ? maxval : 255);
    run.outputs.push_back(o.upsampled);
  }
  run.inputs = o.inputs;
  return kExitOk;
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

// Pairs come from --manifest (id, reference, test) or from positional
// arguments taken two at a time (reference, test).
int cmd_eval(const Options& o, RunManifest& run) {
  struct Pair {
    std::string name;
    fs::path ref, test;
  };
  std::vector<Pair> pairs;
  if (!o.manifest.empty()) {
    for (const auto& e : dote::load_manifest(o.manifest)) pairs.push_back({e.id, e.source, e.target});
    run.manifest = o.manifest;
  }
  if (o.inputs.size() % 2 != 0)
    throw dote::InvalidInput("eval: positional images must come in reference/test pairs");
  for (std::size_t i = 0; i < o.inputs.size(); i += 2)
    pairs.push_back({fs::path(o.inputs[i + 1]).stem().string(), o.inputs[i], o.inputs[i + 1]});
  if (pairs.empty()) throw dote::InvalidInput("eval: nothing to evaluate");

  dote::SsimParams params;
  params.peak = o.peak;
  std::ostringstream csv;
  csv << "name,psnr_db,ssim\n";
  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  for (const auto& p : pairs) {
    const dote::Tensor a = dote::load_intensities(p.ref);
    const dote::Tensor b = dote::load_intensities(p.test);
    if (a.dims() != b.dims())
      throw dote::DimensionError("eval: '" + p.name + "' has reference dims " +
                                 dote::dims_to_string(a.dims()) + " but test dims " +
                                 dote::dims_to_string(b.dims()));
    const double ps = dote::psnr(a, b, o.peak);
    const double ss = dote::ssim(a, b, params);
    psnr_sum += ps;
    ssim_sum += ss;
    csv << p.name << ',' << format_metric(ps) << ',' << format_metric(ss) << '\n';
    run.inputs.push_back(p.ref.string());
    run.inputs.push_back(p.test.string());
  }
  const double n = static_cast<double>(pairs.size());
  csv << "mean," << format_metric(psnr_sum / n) << ',' << format_metric(ssim_sum / n) << '\n';

  std::cerr << "psnr peak: " << o.peak
            << " (PGM samples scaled by maxval, native tensors as stored); "
               "psnr over the whole tensor, ssim averaged over slices\n";
  if (o.out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream os(o.out);
    if (!os) throw dote::FormatError("cannot write " + o.out);
    os << csv.str();
    run.outputs.push_back(o.out);
  }
  return kExitOk;
}

int run_cli(const std::vector<std::string>& args);

int dispatch(CLI::App& app, const std::vector<std::string>& args, Options& o) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  RunManifest run;
  run.args = args;
  run.seed = o.seed;

  int code = kExitOk;
  fs::path primary;
  for (const char* name : {"train", "synth", "degrade", "eval"}) {
    if (!app.got_subcommand(name)) continue;
    run.command = name;
    const std::string cmd = name;
    if (cmd == "train") {
      code = cmd_train(o, run);
      primary = o.model;
    } else if (cmd == "synth") {
      code = cmd_synth(o, run);
      primary = o.inputs.size() > 1 || fs::is_directory(o.out)
                    ? fs::path(o.out) / "synth"
                    : fs::path(o.out);
    } else if (cmd == "degrade") {
      code = cmd_degrade(o, run);
      primary = o.out;
    } else {
      code = cmd_eval(o, run);
      primary = o.out.empty() ? fs::path("dote_eval") : fs::path(o.out);
    }
  }
  run.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
  run.write(run_manifest_path(o.run_manifest, primary));
  return code;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"DOTE: dual convolutional filter learning for image synthesis", "dote"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dote::kVersion));

  Options o;
  std::uint64_t seed_value = 0;
  std::string replay_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--run-manifest", o.run_manifest,
                    "Where to write the run manifest (default: <output>.run)");
  };

  auto* train = app.add_subcommand("train", "Learn Fx, Fy and W from a paired manifest");
  train->add_option("--manifest", o.manifest, "Pairs file: id<TAB>source<TAB>target")->required();
  train->add_option("--config", o.config, "key=value solver configuration");
  train->add_option("--model", o.model, "Output model file")->required();
  train->add_option("--out", o.out, "Training report CSV (default: <model>.report.csv)");
  auto* seed_opt = train->add_option("--seed", seed_value, "Overrides the config seed");
  add_common(train);

  auto* synth = app.add_subcommand("synth", "Synthesize target-domain images");
  synth->add_option("--model", o.model, "Trained model file")->required();
  synth->add_option("--out", o.out, "Output file, or directory for several inputs")->required();
  synth->add_option("inputs", o.inputs, "Source-domain images (.pgm or native tensor)")
      ->required();
  add_common(synth);

  auto* degrade = app.add_subcommand("degrade", "Bicubic downsampling for SR experiments");
  degrade->add_option("input", o.inputs, "High-resolution image")->required()->expected(1);
  degrade->add_option("--factor", o.factor, "Integer scale factor")->capture_default_str();
  degrade->add_option("--out", o.out, "Low-resolution output")->required();
  degrade->add_option("--upsampled", o.upsampled,
                      "Also write the bicubic re-upsampled image on the original grid");
  add_common(degrade);

  auto* eval = app.add_subcommand("eval", "PSNR/SSIM of test images against references");
  eval->add_option("images", o.inputs, "reference test [reference test ...]");
  eval->add_option("--manifest", o.manifest, "Pairs file: name<TAB>reference<TAB>test");
  eval->add_option("--out", o.out, "Write the CSV here instead of stdout");
  eval->add_option("--peak", o.peak, "PSNR/SSIM dynamic range")->capture_default_str();
  add_common(eval);

  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a run manifest");
  replay->add_option("run", replay_path, "Run manifest file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }
  if (*seed_opt) o.seed = seed_value;

  if (app.got_subcommand(replay)) return run_cli(RunManifest::read_args(replay_path));
  return dispatch(app, args, o);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run_cli(args);
  } catch (const dote::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const dote::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
