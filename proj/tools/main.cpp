// Command-line front end for the full pipeline: synthetic scene generation,
// training, whole-image classification, evaluation, and hyperparameter
// sweeps. Every subcommand derives all of its randomness from --seed and
// writes a manifest.json with the resolved configuration next to its outputs,
// so re-running a command reproduces its artifacts bit for bit.
//
// Exit codes: 0 success, 1 runtime/data error, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "sdf2net/cpu_dispatch.hpp"
#include "sdf2net/eval.hpp"
#include "sdf2net/io.hpp"
#include "sdf2net/model.hpp"
#include "sdf2net/preprocess.hpp"
#include "sdf2net/synth.hpp"
#include "sdf2net/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sdf2net;

namespace {

constexpr const char* kToolVersion = "1.0.0";

void write_manifest(const fs::path& dir, const json& manifest) {
  std::ofstream os(dir / "manifest.json", std::ios::binary);
  if (!os) throw std::runtime_error("cannot write manifest");
  os << manifest.dump(2) << "\n";
}

std::pair<size_t, size_t> parse_size(const std::string& s) {
  const size_t x = s.find('x');
  if (x == std::string::npos) {
    throw CLI::ValidationError("--size", "expected HxW, e.g. 64x64");
  }
  try {
    const long long h = std::stoll(s.substr(0, x));
    const long long w = std::stoll(s.substr(x + 1));
    if (h <= 0 || w <= 0) throw std::invalid_argument("nonpositive");
    return {static_cast<size_t>(h), static_cast<size_t>(w)};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--size", "expected HxW, e.g. 64x64");
  }
}

std::vector<Branch> parse_branches(const std::string& s) {
  std::vector<Branch> out;
  std::string tok;
  std::istringstream is(s);
  while (std::getline(is, tok, ',')) {
    std::string low;
    for (char c : tok) low.push_back(static_cast<char>(std::tolower(c)));
    Branch b;
    if (low == "s" || low == "shallow") b = Branch::kShallow;
    else if (low == "m" || low == "medium") b = Branch::kMedium;
    else if (low == "d" || low == "deep") b = Branch::kDeep;
    else throw CLI::ValidationError("--branches", "unknown branch '" + tok + "'");
    if (std::find(out.begin(), out.end(), b) == out.end()) out.push_back(b);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Attention parse_attention(const std::string& s) {
  if (s == "none") return Attention::kNone;
  if (s == "before") return Attention::kBeforeFusion;
  if (s == "after") return Attention::kAfterFusion;
  throw CLI::ValidationError("--attention", "expected none|before|after");
}

std::string branches_to_string(const std::vector<Branch>& branches) {
  std::string s;
  for (Branch b : branches) {
    if (!s.empty()) s += ",";
    s += branch_name(b);
  }
  return s;
}

struct TrainFlags {
  std::string t3, labels, out;
  double ratio = 0.01;
  size_t window = 13;
  std::string branches = "S,M,D";
  std::string attention = "after";
  uint64_t seed = 0;
  double lr = 1e-3;
  size_t batch = 64;
  int epochs = 250;
  int patience = 10;

  void add_common(CLI::App* cmd, bool require_labels = true) {
    cmd->add_option("--t3", t3, "T3 coherency directory")->required();
    auto* lab = cmd->add_option("--labels", labels, "PLBL reference label file");
    if (require_labels) lab->required();
    cmd->add_option("--out", out, "output directory")->required();
    cmd->add_option("--ratio", ratio, "training fraction per class");
    cmd->add_option("--window", window, "patch window (odd)");
    cmd->add_option("--branches", branches, "comma list of S,M,D");
    cmd->add_option("--attention", attention, "none|before|after");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--batch", batch, "batch size");
    cmd->add_option("--epochs", epochs, "max epochs");
    cmd->add_option("--patience", patience, "early-stopping patience");
  }

  ModelConfig model_config(uint16_t num_classes) const {
    ModelConfig mc;
    mc.window = window;
    mc.num_classes = num_classes;
    mc.branches = parse_branches(branches);
    mc.attention = parse_attention(attention);
    mc.validate();
    return mc;
  }

  TrainConfig train_config() const {
    TrainConfig tc;
    tc.learning_rate = lr;
    tc.batch_size = batch;
    tc.max_epochs = epochs;
    tc.patience = patience;
    tc.seed = seed;
    return tc;
  }

  json to_json(const ModelConfig& mc, const TrainConfig& tc) const {
    return json{{"ratio", ratio},
                {"window", mc.window},
                {"branches", branches_to_string(mc.branches)},
                {"attention", attention_name(mc.attention)},
                {"num_classes", mc.num_classes},
                {"filters_per_layer", mc.filters_per_layer},
                {"se_reduction", mc.se_reduction},
                {"dropout_rate", mc.dropout_rate},
                {"fc_sizes", mc.fc_sizes},
                {"learning_rate", tc.learning_rate},
                {"batch_size", tc.batch_size},
                {"max_epochs", tc.max_epochs},
                {"patience", tc.patience},
                {"validation_fraction", tc.validation_fraction}};
  }
};

int cmd_synth(const std::string& out, size_t classes, const std::string& layout,
              const std::string& size, int looks, uint64_t seed) {
  const auto [height, width] = parse_size(size);
  SceneLayout scene_layout;
  if (layout == "stripes") scene_layout = SceneLayout::kStripes;
  else if (layout == "checkerboard") scene_layout = SceneLayout::kCheckerboard;
  else throw CLI::ValidationError("--layout", "expected stripes|checkerboard");

  const std::vector<ClassModel> models = make_separated_class_models(classes, looks);
  auto [image, map] = generate_scene(models, scene_layout, height, width, seed);

  const fs::path out_dir(out);
  fs::create_directories(out_dir);
  io::write_t3_directory(image, out_dir);
  io::write_label_map(map, out_dir / "labels.plbl");
  io::render_pauli_rgb(image, out_dir / "pauli.ppm");

  write_manifest(out_dir, json{{"command", "synth"},
                               {"version", kToolVersion},
                               {"seed", seed},
                               {"options",
                                {{"classes", classes},
                                 {"layout", layout},
                                 {"height", height},
                                 {"width", width},
                                 {"looks", looks}}},
                               {"outputs",
                                {{"t3", "."},
                                 {"labels", "labels.plbl"},
                                 {"pauli", "pauli.ppm"}}}});
  std::cout << "wrote " << (out_dir / "labels.plbl").string() << " and T3 planes ("
            << height << "x" << width << ", " << classes << " classes)\n";
  return 0;
}

int cmd_train(const TrainFlags& flags) {
  const CoherencyImage image = io::read_t3_directory(flags.t3);
  const LabelMap map = io::read_label_map(flags.labels);
  if (image.height != map.height || image.width != map.width) {
    throw std::runtime_error("dimension mismatch between image and labels");
  }

  const CoherencyImage normalized = normalize_channels(image);
  const SplitSpec split = stratified_split(
      map, flags.ratio, rng::derive(flags.seed, rng::stream::kSplit));
  auto [train_patches, test_patches] = build_dataset(normalized, map, split, flags.window);

  const ModelConfig mc = flags.model_config(map.num_classes);
  const TrainConfig tc = flags.train_config();
  Network net(mc, rng::derive(flags.seed, rng::stream::kInit));

  const TrainLog log = fit(net, train_patches, tc);
  const PatchEvaluation test_eval = evaluate_patches(net, test_patches, tc.batch_size);

  const fs::path out_dir(flags.out);
  fs::create_directories(out_dir);
  io::save_checkpoint(net, out_dir / "checkpoint.cvps");
  write_trainlog_csv(log, out_dir / "trainlog.csv");

  json manifest{{"command", "train"},
                {"version", kToolVersion},
                {"seed", flags.seed},
                {"inputs", {{"t3", flags.t3}, {"labels", flags.labels}}},
                {"options", flags.to_json(mc, tc)},
                {"outputs",
                 {{"checkpoint", "checkpoint.cvps"}, {"trainlog", "trainlog.csv"}}}};
  write_manifest(out_dir, manifest);

  std::printf("trained %zu patches, best epoch %d%s, test OA %.2f%%\n",
              train_patches.size(), log.best_epoch,
              log.stopped_early ? " (early stop)" : "", 100.0 * test_eval.oa);
  return 0;
}

int cmd_classify(const std::string& checkpoint, const std::string& t3,
                 const std::string& out, bool median_filter) {
  std::unique_ptr<Network> net = io::load_checkpoint(checkpoint);
  const CoherencyImage image = io::read_t3_directory(t3);
  const CoherencyImage normalized = normalize_channels(image);

  const LabelMap pred = classify_image(*net, normalized);
  const std::vector<io::Rgb> palette = io::default_palette(pred.num_classes);

  const fs::path out_dir(out);
  fs::create_directories(out_dir);
  io::write_label_map(pred, out_dir / "pred.plbl");
  io::render_class_map(pred, palette, out_dir / "pred.ppm");
  if (median_filter) {
    const LabelMap filtered = median_filter_classmap(pred);
    io::write_label_map(filtered, out_dir / "pred_median.plbl");
    io::render_class_map(filtered, palette, out_dir / "pred_median.ppm");
  }

  json outputs{{"pred", "pred.plbl"}, {"pred_image", "pred.ppm"}};
  if (median_filter) {
    outputs["pred_median"] = "pred_median.plbl";
    outputs["pred_median_image"] = "pred_median.ppm";
  }
  write_manifest(out_dir, json{{"command", "classify"},
                               {"version", kToolVersion},
                               {"inputs", {{"checkpoint", checkpoint}, {"t3", t3}}},
                               {"options", {{"median_filter", median_filter}}},
                               {"outputs", outputs}});
  std::cout << "classified " << pred.height << "x" << pred.width << " pixels\n";
  return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& ref_path,
             const std::string& out) {
  const LabelMap pred = io::read_label_map(pred_path);
  const LabelMap ref = io::read_label_map(ref_path);
  const EvalReport report = compute_metrics(pred, ref);
  const std::string text = format_report(report);

  std::ofstream os(out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write report: " + out);
  os << text;
  std::cout << text;
  return 0;
}

int cmd_sweep(const TrainFlags& flags, const std::string& mode,
              const std::string& values_csv, size_t trials) {
  const CoherencyImage image = io::read_t3_directory(flags.t3);
  const LabelMap map = io::read_label_map(flags.labels);

  SweepSettings settings;
  settings.model = flags.model_config(map.num_classes);
  settings.train = flags.train_config();
  settings.ratio = flags.ratio;
  settings.window = flags.window;
  settings.trials = trials;
  settings.seed = flags.seed;

  std::vector<SweepRow> rows;
  if (mode == "window") {
    std::vector<size_t> windows;
    std::istringstream is(values_csv);
    std::string tok;
    while (std::getline(is, tok, ',')) windows.push_back(std::stoul(tok));
    rows = sweep_windows(image, map, windows, settings);
  } else if (mode == "ratio") {
    std::vector<double> ratios;
    std::istringstream is(values_csv);
    std::string tok;
    while (std::getline(is, tok, ',')) ratios.push_back(std::stod(tok));
    rows = sweep_ratios(image, map, ratios, settings);
  } else {
    throw CLI::ValidationError("--mode", "expected window|ratio");
  }

  const fs::path out_dir(flags.out);
  fs::create_directories(out_dir);
  {
    std::ofstream os(out_dir / "sweep.csv", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write sweep.csv");
    os << "value,mean_oa,std_oa\n";
    char buf[128];
    for (const SweepRow& r : rows) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", r.value, r.mean_oa, r.std_oa);
      os << buf;
    }
  }
  write_manifest(out_dir,
                 json{{"command", "sweep"},
                      {"version", kToolVersion},
                      {"seed", flags.seed},
                      {"inputs", {{"t3", flags.t3}, {"labels", flags.labels}}},
                      {"options",
                       {{"mode", mode}, {"values", values_csv}, {"trials", trials}}},
                      {"outputs", {{"csv", "sweep.csv"}}}});
  for (const SweepRow& r : rows) {
    std::printf("%g: mean OA %.4f, std %.4f\n", r.value, r.mean_oa, r.std_oa);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  sdf2net::boot::ensure_tuned_blas(argv);
  CLI::App app{"three-branch complex-valued 3D CNN for PolSAR pixel classification"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic Wishart scene");
  std::string synth_out, synth_layout = "stripes", synth_size = "64x64";
  size_t synth_classes = 3;
  int synth_looks = 4;
  uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--classes", synth_classes, "number of classes");
  synth->add_option("--layout", synth_layout, "stripes|checkerboard");
  synth->add_option("--size", synth_size, "HxW, e.g. 64x64");
  synth->add_option("--looks", synth_looks, "multi-look count");
  synth->add_option("--seed", synth_seed, "master seed");

  // train
  auto* train = app.add_subcommand("train", "train on a T3 directory + labels");
  TrainFlags train_flags;
  train_flags.add_common(train);

  // classify
  auto* classify = app.add_subcommand("classify", "classify every pixel of a scene");
  std::string cls_checkpoint, cls_t3, cls_out;
  bool cls_median = false;
  classify->add_option("--checkpoint", cls_checkpoint, "trained checkpoint")->required();
  classify->add_option("--t3", cls_t3, "T3 coherency directory")->required();
  classify->add_option("--out", cls_out, "output directory")->required();
  classify->add_flag("--median-filter", cls_median, "also write 3x3 median-filtered outputs");

  // eval
  auto* eval = app.add_subcommand("eval", "score a predicted map against a reference");
  std::string eval_pred, eval_ref, eval_out;
  eval->add_option("--pred", eval_pred, "predicted PLBL map")->required();
  eval->add_option("--ref", eval_ref, "reference PLBL map")->required();
  eval->add_option("--out", eval_out, "report file")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "train/evaluate over a value list");
  TrainFlags sweep_flags;
  std::string sweep_mode, sweep_values;
  size_t sweep_trials = 1;
  sweep->add_option("--mode", sweep_mode, "window|ratio")->required();
  sweep->add_option("--values", sweep_values, "comma-separated value list")->required();
  sweep->add_option("--trials", sweep_trials, "trials per value");
  sweep_flags.add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) {
      return cmd_synth(synth_out, synth_classes, synth_layout, synth_size,
                       synth_looks, synth_seed);
    }
    if (*train) return cmd_train(train_flags);
    if (*classify) return cmd_classify(cls_checkpoint, cls_t3, cls_out, cls_median);
    if (*eval) return cmd_eval(eval_pred, eval_ref, eval_out);
    if (*sweep) return cmd_sweep(sweep_flags, sweep_mode, sweep_values, sweep_trials);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
