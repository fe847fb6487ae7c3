// udh: dataset generation, training, evaluation and warping from the command line.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "udh/checkpoint.hpp"
#include "udh/dataset.hpp"
#include "udh/error.hpp"
#include "udh/eval.hpp"
#include "udh/image_io.hpp"
#include "udh/train.hpp"
#include "udh/warp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(udh::ErrorCode code) {
  using udh::ErrorCode;
  switch (code) {
    case ErrorCode::DegenerateProjection:
    case ErrorCode::CollinearCorners:
    case ErrorCode::IllConditionedSystem:
    case ErrorCode::SingularHomography:
    case ErrorCode::DegenerateStd:
      return kNumeric;
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnknownPreset:
      return kUsage;
    default:
      return kData;
  }
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::vector<double> parse_floats(const std::string& s, std::size_t expected, const std::string& flag) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream is(t);
  std::vector<double> out;
  for (std::string tok; is >> tok;) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + tok + "' is not a number");
    }
  }
  if (out.size() != expected) {
    throw UsageError(flag + " expects " + std::to_string(expected) + " numbers, got " + std::to_string(out.size()));
  }
  return out;
}

// Values from --config fill every option the command line left unset.
void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw udh::Error(udh::ErrorCode::Io, "cannot read config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw udh::Error(udh::ErrorCode::Format, "config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("config " + path + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    CLI::Option* opt = key == "config" ? nullptr : sub->get_option_no_throw("--" + key);
    if (opt == nullptr) throw UsageError("unknown config key '" + key + "'");
    if (opt->count() > 0) continue;
    if (value.is_boolean()) {
      if (opt->get_expected_min() != 0) throw UsageError("config key '" + key + "' is not a switch");
      if (value.get<bool>()) opt->add_result("true");
    } else if (value.is_string()) {
      opt->add_result(value.get<std::string>());
    } else if (value.is_number()) {
      opt->add_result(value.dump());
    } else {
      throw UsageError("config key '" + key + "' must be a string, number or boolean");
    }
    opt->run_callback();
  }
}

std::vector<udh::Image> load_sources(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw udh::Error(udh::ErrorCode::Io, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && (ext == ".png" || ext == ".pgm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw udh::Error(udh::ErrorCode::EmptyDataset, "no .png or .pgm images in " + dir.string());
  std::vector<udh::Image> out;
  for (const auto& f : files) out.push_back(udh::read_image(f));
  return out;
}

void print(const json& j) { std::cout << j.dump() << std::endl; }

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string config, out, src_dir, preset;
  bool procedural = false, augment = false;
  int count = 100, test_count = -1, patch = 128;
  double rho = 32.0;
  std::uint64_t seed = 0;
};

int run_gen(const GenArgs& a, const CLI::App& sub) {
  udh::GenConfig cfg;
  cfg.patch_size = a.patch;
  cfg.seed = a.seed;
  cfg.count = a.count;
  cfg.augment.enabled = a.augment;
  const bool has_rho = sub.get_option("--rho")->count() > 0;
  if (!a.preset.empty() && has_rho) throw UsageError("--rho and --preset are mutually exclusive");
  cfg.rho = a.preset.empty() ? a.rho : udh::overlap_preset(a.preset, a.patch);
  if (!a.src_dir.empty() && a.procedural) throw UsageError("--src-dir and --procedural are mutually exclusive");
  if (a.count < 1) throw UsageError("--count must be >= 1");
  const int test = a.test_count >= 0 ? a.test_count : a.count / 10;
  if (test > a.count) throw UsageError("--test-count exceeds --count");
  cfg.validate();

  const std::vector<udh::Image> sources = a.src_dir.empty() ? std::vector<udh::Image>{} : load_sources(a.src_dir);
  const udh::Dataset ds = udh::generate_dataset(cfg, sources, test);
  udh::write_dataset(a.out, ds);
  print({{"command", "gen-data"},
         {"out", a.out},
         {"count", ds.samples.size()},
         {"train", ds.manifest.train.size()},
         {"test", ds.manifest.test.size()},
         {"rho", cfg.rho},
         {"mean", ds.manifest.stats.mean},
         {"std", ds.manifest.stats.std}});
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config, data, mode = "unsupervised", out = "run", arch = "vgg";
  int iters = 1000, batch = 128, checkpoint_every = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
};

void remove_partials(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    if (e.path().extension() == ".partial") fs::remove(e.path(), ec);
  }
}

int run_train(const TrainArgs& a) {
  const udh::Dataset ds = udh::read_dataset(a.data);
  udh::TrainConfig cfg;
  cfg.mode = udh::parse_train_mode(a.mode);
  cfg.iterations = a.iters;
  cfg.batch_size = a.batch;
  cfg.lr = a.lr;
  cfg.seed = a.seed;
  cfg.checkpoint_every = a.checkpoint_every;
  cfg.out_dir = a.out;
  if (a.arch != "vgg" && a.arch != "toy") throw UsageError("--arch must be vgg or toy");
  const int p = ds.manifest.config.patch_size;
  cfg.net = a.arch == "toy" ? udh::NetConfig::toy(p) : udh::NetConfig::vgg_default();
  cfg.net.input_size = p;
  try {
    const udh::TrainReport r = udh::train_loop(cfg, ds);
    json out{{"command", "train"},
             {"mode", udh::to_string(cfg.mode)},
             {"iterations", r.losses.size()},
             {"lr", cfg.effective_lr()},
             {"final_loss", r.losses.back()},
             {"wall_ms", r.wall_ms},
             {"skipped_samples", r.skipped_samples},
             {"checkpoint", r.checkpoint.string()},
             {"log", r.log_csv.string()}};
    if (!r.eval.rmse.empty()) {
      out["test"] = udh::summary_json(r.eval);
      out["baseline"] = udh::summary_json(r.baseline);
    }
    print(out);
  } catch (...) {
    remove_partials(a.out);
    throw;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string config, data, estimator = "zero", report = "report", split = "test", rmse = "per-coordinate";
  int align_iters = 500;
  double align_lr = 0.05;
};

int run_eval(const EvalArgs& a) {
  const udh::Dataset ds = udh::read_dataset(a.data);
  const auto split = ds.split(a.split);
  udh::RmseConvention conv;
  if (a.rmse == "per-coordinate") {
    conv = udh::RmseConvention::PerCoordinate;
  } else if (a.rmse == "per-corner") {
    conv = udh::RmseConvention::PerCorner;
  } else {
    throw UsageError("--rmse must be per-coordinate or per-corner");
  }

  std::optional<udh::RegressionNet<float>> net;
  udh::Estimator est;
  if (a.estimator == "zero") {
    est = udh::zero_estimator();
  } else if (a.estimator == "align") {
    est = udh::align_estimator({a.align_iters, a.align_lr});
  } else if (a.estimator.rfind("net:", 0) == 0) {
    udh::CheckpointMeta meta;
    net.emplace(udh::load_checkpoint<float>(a.estimator.substr(4), &meta));
    if (meta.net.input_size != ds.manifest.config.patch_size) {
      throw udh::Error(udh::ErrorCode::ShapeMismatch, "checkpoint expects " + std::to_string(meta.net.input_size) +
                                                          " px patches, dataset has " +
                                                          std::to_string(ds.manifest.config.patch_size));
    }
    est = udh::net_estimator(*net, meta.mean, meta.std);
  } else {
    throw UsageError("--estimator must be zero, align or net:<checkpoint>");
  }

  const udh::EvalResult r = udh::evaluate(est, split, conv);
  const udh::SpeedResult speed = udh::speed_benchmark(est, split);

  std::error_code ec;
  fs::create_directories(a.report, ec);
  if (ec) throw udh::Error(udh::ErrorCode::Io, "cannot create " + a.report + ": " + ec.message());
  json summary = udh::summary_json(r);
  summary["estimator"] = a.estimator;
  summary["split"] = a.split;
  summary["rmse_convention"] = a.rmse;
  summary["samples_per_second"] = speed.samples_per_second;
  summary["timed_samples"] = speed.timed_samples;
  summary["warmup_samples"] = speed.warmup_samples;
  const fs::path json_path = fs::path(a.report) / "summary.json";
  const fs::path csv_path = fs::path(a.report) / "per_sample.csv";
  std::ofstream(json_path) << summary.dump(2) << '\n';
  std::ofstream csv(csv_path);
  csv << udh::per_sample_csv(r);
  if (!csv) throw udh::Error(udh::ErrorCode::Io, "failed writing " + csv_path.string());
  summary["summary_path"] = json_path.string();
  summary["csv_path"] = csv_path.string();
  summary["command"] = "eval";
  print(summary);
  return kOk;
}

// ---------------------------------------------------------------------------

struct WarpArgs {
  std::string config, image, out, h, delta, corners;
  int width = 0, height = 0;
};

int run_warp(const WarpArgs& a) {
  const bool by_matrix = !a.h.empty();
  const bool by_delta = !a.delta.empty() || !a.corners.empty();
  if (by_matrix == by_delta) throw UsageError("give either --h or --delta with --corners");
  udh::Homography h;
  if (by_matrix) {
    const auto v = parse_floats(a.h, 9, "--h");
    udh::Mat3 m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = v[i];
    h = udh::Homography::from_matrix(m);
  } else {
    if (a.delta.empty() || a.corners.empty()) throw UsageError("--delta and --corners go together");
    const auto d = parse_floats(a.delta, 8, "--delta");
    const auto c = parse_floats(a.corners, 8, "--corners");
    udh::CornerSet corners;
    for (int k = 0; k < 4; ++k) corners.pts[k] = udh::Vec2(c[2 * k], c[2 * k + 1]);
    h = udh::h4pt_to_h(corners, udh::FourPointDelta::from_flat(d.data()));
  }
  const udh::Image img = udh::read_image(a.image);
  const int w = a.width > 0 ? a.width : img.width();
  const int ht = a.height > 0 ? a.height : img.height();
  udh::write_image(a.out, udh::warp_image(img, h, w, ht));
  json hm = json::array();
  for (int i = 0; i < 9; ++i) hm.push_back(h(i / 3, i % 3));
  print({{"command", "warp"}, {"out", a.out}, {"width", w}, {"height", ht}, {"h", hm}});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("udh"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Unsupervised deep homography toolkit"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic patch-pair dataset");
  gen_cmd->add_option("--config", gen.config, "JSON file with defaults for these flags");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required(false);
  gen_cmd->add_option("--src-dir", gen.src_dir, "Directory of .png/.pgm source images");
  gen_cmd->add_flag("--procedural", gen.procedural, "Use procedural source images (default)");
  gen_cmd->add_option("--count", gen.count, "Number of samples")->capture_default_str();
  gen_cmd->add_option("--test-count", gen.test_count, "Held-out samples (default: 10% of count)");
  gen_cmd->add_option("--patch", gen.patch, "Patch side in pixels")->capture_default_str();
  gen_cmd->add_option("--rho", gen.rho, "Corner perturbation bound in pixels")->capture_default_str();
  gen_cmd->add_option("--preset", gen.preset, "Overlap regime: small, moderate or large");
  gen_cmd->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  gen_cmd->add_flag("--augment", gen.augment, "Random brightness and gamma shifts");

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the homography regressor");
  train_cmd->add_option("--config", tr.config, "JSON file with defaults for these flags");
  train_cmd->add_option("--data", tr.data, "Dataset directory");
  train_cmd->add_option("--mode", tr.mode, "supervised or unsupervised")->capture_default_str();
  train_cmd->add_option("--iters", tr.iters, "Iterations")->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "Batch size")->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Learning rate (default depends on --mode)");
  train_cmd->add_option("--seed", tr.seed, "RNG seed")->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Run directory")->capture_default_str();
  train_cmd->add_option("--arch", tr.arch, "vgg or toy")->capture_default_str();
  train_cmd->add_option("--checkpoint-every", tr.checkpoint_every, "Periodic checkpoint interval (0: off)");

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate an estimator on a dataset split");
  eval_cmd->add_option("--config", ev.config, "JSON file with defaults for these flags");
  eval_cmd->add_option("--data", ev.data, "Dataset directory");
  eval_cmd->add_option("--estimator", ev.estimator, "zero, align or net:<checkpoint>")->capture_default_str();
  eval_cmd->add_option("--report", ev.report, "Report directory")->capture_default_str();
  eval_cmd->add_option("--split", ev.split, "train or test")->capture_default_str();
  eval_cmd->add_option("--rmse", ev.rmse, "per-coordinate or per-corner")->capture_default_str();
  eval_cmd->add_option("--align-iters", ev.align_iters, "Direct aligner iterations")->capture_default_str();
  eval_cmd->add_option("--align-lr", ev.align_lr, "Direct aligner step size")->capture_default_str();

  WarpArgs wp;
  CLI::App* warp_cmd = app.add_subcommand("warp", "Warp an image by a homography");
  warp_cmd->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
  warp_cmd->add_option("--config", wp.config, "JSON file with defaults for these flags");
  warp_cmd->add_option("--image", wp.image, "Input image (.png or .pgm)");
  warp_cmd->add_option("--out", wp.out, "Output image");
  warp_cmd->add_option("--h", wp.h, "Nine row-major matrix entries");
  warp_cmd->add_option("--delta", wp.delta, "Eight corner offsets");
  warp_cmd->add_option("--corners", wp.corners, "Eight corner coordinates (TL, TR, BR, BL)");
  warp_cmd->add_option("--width", wp.width, "Output width (default: input width)");
  warp_cmd->add_option("--height", wp.height, "Output height (default: input height)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << one_line(e.what()) << std::endl;
    return kUsage;
  }

  try {
    spdlog::set_level(spdlog::level::from_str(log_level));
    auto require = [](const std::string& value, const char* flag) {
      if (value.empty()) throw UsageError(std::string(flag) + " is required");
    };
    if (gen_cmd->parsed()) {
      apply_config(gen_cmd, gen.config);
      require(gen.out, "--out");
      return run_gen(gen, *gen_cmd);
    }
    if (train_cmd->parsed()) {
      apply_config(train_cmd, tr.config);
      require(tr.data, "--data");
      return run_train(tr);
    }
    if (eval_cmd->parsed()) {
      apply_config(eval_cmd, ev.config);
      require(ev.data, "--data");
      return run_eval(ev);
    }
    apply_config(warp_cmd, wp.config);
    require(wp.image, "--image");
    require(wp.out, "--out");
    return run_warp(wp);
  } catch (const UsageError& e) {
    std::cerr << "error: " << one_line(e.what()) << std::endl;
    return kUsage;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << one_line(e.what()) << std::endl;
    return kUsage;
  } catch (const udh::Error& e) {
    std::cerr << "error: " << one_line(e.what()) << std::endl;
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << std::endl;
    return kData;
  }
}
