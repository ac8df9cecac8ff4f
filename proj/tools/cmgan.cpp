/* Copyright 2026 the cmgan authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cmgan/baselines.hpp"
#include "cmgan/checkpoint.hpp"
#include "cmgan/colormap.hpp"
#include "cmgan/config.hpp"
#include "cmgan/gan.hpp"
#include "cmgan/metrics.hpp"
#include "cmgan/png_io.hpp"
#include "cmgan/segnet.hpp"
#include "cmgan/synth.hpp"
#include "cmgan/tiling.hpp"

namespace fs = std::filesystem;
using namespace cmgan;

namespace {

// seed derivation: master + step index (+ run index for repetitions)
constexpr std::uint64_t kStepTrain = 1;
constexpr std::uint64_t kStepAdapt = 2;
constexpr std::uint64_t kStepFinetune = 3;

/// Flag values override config-file keys one-to-one; defaults come last.
struct Options {
  KeyValueConfig file;

  std::optional<std::string> data, out, method, net, fake, image, pred, gt;
  std::optional<std::int64_t> seed, iters, tile, overlap, gan_patch, gan_overlap;
  std::optional<std::int64_t> batch, seg_width, seg_depth, disc_width, disc_norm, runs, log_every;
  std::optional<double> g_lr, d_lr, seg_lr;

  std::string str(const char* key, const std::optional<std::string>& flag,
                  const std::string& fallback) const {
    return flag ? *flag : file.get_string(key, fallback);
  }
  std::int64_t num(const char* key, const std::optional<std::int64_t>& flag,
                   std::int64_t fallback) const {
    return flag ? *flag : file.get_int(key, fallback);
  }
  double real(const char* key, const std::optional<double>& flag, double fallback) const {
    return flag ? *flag : file.get_double(key, fallback);
  }

  std::string out_dir() const {
    const std::string dir = str("out", out, "");
    if (dir.empty()) detail::fail_input("an output directory is required (--out or out=...)");
    fs::create_directories(dir);
    return dir;
  }
  std::string data_dir() const {
    const std::string dir = str("data", data, "");
    if (dir.empty()) detail::fail_input("a dataset directory is required (--data or data=...)");
    if (!fs::exists(dir)) detail::fail_input("dataset directory does not exist: ", dir);
    return dir;
  }
  std::uint64_t master_seed() const {
    return static_cast<std::uint64_t>(num("seed", seed, 0));
  }

  std::string source_image(const std::string& dir) const {
    return file.get_string("source_image", dir + "/imageA.png");
  }
  std::string source_mask(const std::string& dir) const {
    return file.get_string("source_mask", dir + "/maskA.png");
  }
  std::string target_image(const std::string& dir) const {
    return file.get_string("target_image", dir + "/imageB.png");
  }

  SegNetConfig segnet_config() const {
    SegNetConfig cfg;
    cfg.depth = static_cast<int>(num("seg_depth", seg_depth, 2));
    cfg.base_width = static_cast<int>(num("seg_width", seg_width, 8));
    return cfg;
  }
  int tile_size() const { return static_cast<int>(num("tile", tile, 256)); }
  int tile_overlap() const { return static_cast<int>(num("overlap", overlap, 32)); }
};

void audit(const std::string& out_dir, const std::string& line) {
  std::ofstream log(out_dir + "/audit.log", std::ios::app);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%S", std::gmtime(&now));
  log << stamp << " " << line << "\n";
}

std::vector<SegSample> tiled_samples(const RasterImage& image, const LabelMask& mask, int size,
                                     int overlap) {
  if (image.height != mask.height || image.width != mask.width)
    detail::fail_input("image and mask extents disagree: ", std::to_string(image.height), "x",
                       std::to_string(image.width), " vs ", std::to_string(mask.height), "x",
                       std::to_string(mask.width));
  const TileGrid grid = make_tile_grid(image.height, image.width, size, overlap);
  std::vector<SegSample> samples;
  samples.reserve(grid.origins.size());
  for (const auto& [r, c] : grid.origins)
    samples.emplace_back(extract_patch(image, r, c, size),
                         extract_mask_patch(mask, r, c, size));
  return samples;
}

std::vector<RasterImage> tiled_patches(const RasterImage& image, int size, int overlap) {
  return tile(image, size, overlap).second;
}

int cmd_synth(const Options& opt) {
  const std::string out = opt.out_dir();
  SynthConfig cfg = synth_config_from(opt.file);
  if (opt.seed) cfg.seed = static_cast<std::uint64_t>(*opt.seed);
  const SynthScene scene = synth_generate(cfg);
  save_png(out + "/imageA.png", scene.image_a);
  save_mask_png(out + "/maskA.png", scene.mask_a);
  save_png(out + "/imageB.png", scene.image_b);
  save_mask_png(out + "/maskB.png", scene.mask_b);
  synth_config_to_kv(cfg).write_file(out + "/manifest.txt");
  const DatasetStats stats = dataset_stats({scene.mask_a});
  const auto pct = stats.percent();
  std::cout << "synth: " << cfg.height << "x" << cfg.width << " scene, class % (bg/bldg/road/tree) "
            << pct[0] << "/" << pct[1] << "/" << pct[2] << "/" << pct[3] << "\n";
  audit(out, "cmd=synth seed=" + std::to_string(cfg.seed));
  return 0;
}

int cmd_train(const Options& opt) {
  const std::string out = opt.out_dir();
  const std::string data = opt.data_dir();
  const RasterImage image = load_png(opt.source_image(data));
  const LabelMask mask = load_mask_png(opt.source_mask(data));

  SegTrainConfig cfg;
  cfg.lr = opt.real("seg_lr", opt.seg_lr, 1e-4);
  cfg.batch = static_cast<int>(opt.num("batch", opt.batch, 32));
  cfg.iterations = static_cast<int>(opt.num("iters", opt.iters, 2500));
  cfg.seed = opt.master_seed() + kStepTrain;
  cfg.log_every = static_cast<int>(opt.num("log_every", opt.log_every, 100));
  cfg.log = [](int it, double loss) { std::cout << "train iter " << it << " loss " << loss << "\n"; };

  Rng init(cfg.seed);
  SegNet net(init, opt.segnet_config());
  train_segmenter(tiled_samples(image, mask, opt.tile_size(), opt.tile_overlap()), net, cfg);
  save_checkpoint(net.parameters(), out + "/segnet");
  audit(out, "cmd=train master_seed=" + std::to_string(opt.master_seed()) +
                 " seed=" + std::to_string(cfg.seed) +
                 " iters=" + std::to_string(cfg.iterations));
  std::cout << "train: wrote " << out << "/segnet.{manifest,f32}\n";
  return 0;
}

int cmd_adapt(const Options& opt) {
  const std::string out = opt.out_dir();
  const std::string data = opt.data_dir();
  const std::string method = opt.str("method", opt.method, "colormapgan");
  const RasterImage source = load_png(opt.source_image(data));

  if (method == "colormapgan") {
    const RasterImage target = load_png(opt.target_image(data));
    GanTrainConfig cfg;
    cfg.g_lr = opt.real("g_lr", opt.g_lr, 5e-4);
    cfg.d_lr = opt.real("d_lr", opt.d_lr, 1e-4);
    cfg.iterations = static_cast<int>(opt.num("iters", opt.iters, 8000));
    cfg.disc_base_width = static_cast<int>(opt.num("disc_width", opt.disc_width, 64));
    cfg.disc_instance_norm = opt.num("disc_norm", opt.disc_norm, 0) != 0;
    cfg.seed = opt.master_seed() + kStepAdapt;
    cfg.log_every = static_cast<int>(opt.num("log_every", opt.log_every, 100));
    cfg.log = [](int it, double dl, double gl) {
      std::cout << "adapt iter " << it << " d_loss " << dl << " g_loss " << gl << "\n";
    };
    const int patch = static_cast<int>(opt.num("gan_patch", opt.gan_patch, 256));
    const int overlap = static_cast<int>(opt.num("gan_overlap", opt.gan_overlap, 32));
    GanTrainResult result = train_colormapgan(tiled_patches(source, patch, overlap),
                                              tiled_patches(target, patch, overlap), cfg);
    save_map_file(result.map, out + "/map.cmap");
    save_png(out + "/fakeA.png", transform_image(result.map, source));
    audit(out, "cmd=adapt method=colormapgan master_seed=" + std::to_string(opt.master_seed()) +
                   " seed=" + std::to_string(cfg.seed) +
                   " iters=" + std::to_string(cfg.iterations));
    std::cout << "adapt: wrote " << out << "/map.cmap and " << out << "/fakeA.png\n";
  } else if (method == "histmatch") {
    const RasterImage target = load_png(opt.target_image(data));
    const HistogramMatchResult result = histogram_match({source}, {target});
    std::ofstream csv(out + "/histmap.csv");
    csv << level_map_csv(result.level_map);
    save_png(out + "/fakeA.png", result.recolored[0]);
    audit(out, "cmd=adapt method=histmatch");
    std::cout << "adapt: wrote " << out << "/histmap.csv and " << out << "/fakeA.png\n";
  } else if (method == "grayworld") {
    const GrayWorldResult src = gray_world(source);
    save_png(out + "/fakeA.png", src.corrected);
    // prediction must run on the corrected target as well
    const GrayWorldResult tgt = gray_world(load_png(opt.target_image(data)));
    save_png(out + "/targetB_corrected.png", tgt.corrected);
    std::ofstream gains(out + "/gains.txt");
    gains.precision(17);
    gains << "source " << src.gains[0] << " " << src.gains[1] << " " << src.gains[2] << "\n"
          << "target " << tgt.gains[0] << " " << tgt.gains[1] << " " << tgt.gains[2] << "\n";
    audit(out, "cmd=adapt method=grayworld");
    std::cout << "adapt: wrote " << out << "/fakeA.png and " << out << "/targetB_corrected.png\n";
  } else if (method == "none") {
    save_png(out + "/fakeA.png", source);
    audit(out, "cmd=adapt method=none");
    std::cout << "adapt: wrote " << out << "/fakeA.png (pass-through)\n";
  } else {
    detail::fail_input("unknown adaptation method '", method,
                       "' (expected colormapgan, histmatch, grayworld or none)");
  }
  return 0;
}

SegNet load_net(const Options& opt, const std::string& base, std::uint64_t seed) {
  Rng init(seed);
  SegNet net(init, opt.segnet_config());
  load_checkpoint(net.parameters(), base);
  return net;
}

int cmd_finetune(const Options& opt) {
  const std::string out = opt.out_dir();
  const std::string data = opt.data_dir();
  const std::string net_base = opt.str("net", opt.net, "");
  if (net_base.empty()) detail::fail_input("a trained checkpoint is required (--net or net=...)");
  const std::string fake_path = opt.str("fake", opt.fake, out + "/fakeA.png");
  if (!fs::exists(fake_path))
    detail::fail_input("recolored image not found: ", fake_path, " (run adapt first)");

  const RasterImage fake = load_png(fake_path);
  const LabelMask mask = load_mask_png(opt.source_mask(data));

  SegTrainConfig cfg;
  cfg.lr = opt.real("seg_lr", opt.seg_lr, 1e-4);
  cfg.batch = static_cast<int>(opt.num("batch", opt.batch, 32));
  cfg.iterations = static_cast<int>(opt.num("iters", opt.iters, 750));
  cfg.seed = opt.master_seed() + kStepFinetune;
  cfg.log_every = static_cast<int>(opt.num("log_every", opt.log_every, 100));
  cfg.log = [](int it, double loss) {
    std::cout << "finetune iter " << it << " loss " << loss << "\n";
  };

  SegNet net = load_net(opt, net_base, cfg.seed);
  finetune(net, tiled_samples(fake, mask, opt.tile_size(), opt.tile_overlap()), cfg);
  save_checkpoint(net.parameters(), out + "/segnet_ft");
  audit(out, "cmd=finetune master_seed=" + std::to_string(opt.master_seed()) +
                 " seed=" + std::to_string(cfg.seed) +
                 " iters=" + std::to_string(cfg.iterations));
  std::cout << "finetune: wrote " << out << "/segnet_ft.{manifest,f32}\n";
  return 0;
}

int cmd_predict(const Options& opt) {
  const std::string out = opt.out_dir();
  const std::string net_base = opt.str("net", opt.net, "");
  if (net_base.empty()) detail::fail_input("a trained checkpoint is required (--net or net=...)");
  const std::string image_path = opt.str("image", opt.image, "");
  if (image_path.empty()) detail::fail_input("an input image is required (--image or image=...)");

  SegNet net = load_net(opt, net_base, 0);
  const RasterImage image = load_png(image_path);
  const LabelMask pred = predict(net, image, opt.tile_size(), opt.tile_overlap());
  save_mask_png(out + "/pred.png", pred);
  save_png(out + "/pred_color.png", colorize_mask(pred));
  audit(out, "cmd=predict net=" + net_base + " image=" + image_path);
  std::cout << "predict: wrote " << out << "/pred.png\n";
  return 0;
}

int cmd_eval(const Options& opt) {
  const std::string out = opt.out_dir();
  const std::string pred_path = opt.str("pred", opt.pred, out + "/pred.png");
  const std::string gt_path = opt.str("gt", opt.gt, "");
  if (gt_path.empty()) detail::fail_input("a ground-truth mask is required (--gt or gt=...)");
  const IoUReport report = iou(load_mask_png(pred_path), load_mask_png(gt_path));
  const std::string table = iou_table(report);
  std::cout << table;
  std::ofstream txt(out + "/report.txt");
  txt << table;
  std::ofstream csv(out + "/report.csv");
  csv << "building,road,tree,overall\n" << iou_csv(report);
  audit(out, "cmd=eval pred=" + pred_path + " gt=" + gt_path);
  return 0;
}

int cmd_repeat(const Options& opt) {
  const std::string out = opt.out_dir();
  const std::string data = opt.data_dir();
  const std::string net_base = opt.str("net", opt.net, "");
  if (net_base.empty()) detail::fail_input("a trained checkpoint is required (--net or net=...)");
  const std::string fake_path = opt.str("fake", opt.fake, out + "/fakeA.png");
  if (!fs::exists(fake_path))
    detail::fail_input("recolored image not found: ", fake_path, " (run adapt first)");
  const std::string image_path = opt.str("image", opt.image, opt.target_image(data));
  const std::string gt_path = opt.str("gt", opt.gt, data + "/maskB.png");
  const int runs = static_cast<int>(opt.num("runs", opt.runs, 20));
  if (runs < 1) detail::fail_input("run count must be >= 1, got ", std::to_string(runs));

  const RasterImage fake = load_png(fake_path);
  const LabelMask mask = load_mask_png(opt.source_mask(data));
  const RasterImage target = load_png(image_path);
  const LabelMask gt = load_mask_png(gt_path);
  const std::vector<SegSample> samples =
      tiled_samples(fake, mask, opt.tile_size(), opt.tile_overlap());

  std::vector<IoUReport> reports;
  std::vector<LabelMask> preds;
  for (int run = 0; run < runs; ++run) {
    SegTrainConfig cfg;
    cfg.lr = opt.real("seg_lr", opt.seg_lr, 1e-4);
    cfg.batch = static_cast<int>(opt.num("batch", opt.batch, 32));
    cfg.iterations = static_cast<int>(opt.num("iters", opt.iters, 750));
    cfg.seed = opt.master_seed() + kStepFinetune + static_cast<std::uint64_t>(run);
    SegNet net = load_net(opt, net_base, cfg.seed);
    finetune(net, samples, cfg);
    LabelMask pred = predict(net, target, opt.tile_size(), opt.tile_overlap());
    reports.push_back(iou(pred, gt));
    audit(out, "cmd=repeat run=" + std::to_string(run) + " seed=" + std::to_string(cfg.seed) +
                   " overall=" + std::to_string(reports.back().overall));
    std::cout << "repeat run " << run << " overall IoU " << reports.back().overall << "\n";
    preds.push_back(std::move(pred));
  }

  const IoUReport mean = mean_iou_over_runs(reports);
  const LabelMask vote = majority_vote(preds);
  const std::string table = iou_table(mean);
  std::cout << "mean over " << runs << " runs:\n" << table;
  std::ofstream txt(out + "/report_mean.txt");
  txt << table;
  std::ofstream csv(out + "/report_mean.csv");
  csv << "building,road,tree,overall\n";
  for (const auto& r : reports) csv << iou_csv(r);
  csv << iou_csv(mean);
  save_mask_png(out + "/vote.png", vote);
  save_png(out + "/vote_color.png", colorize_mask(vote));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ColorMapGAN domain-adaptation toolkit"};
  app.require_subcommand(1);

  Options opt;
  std::string config_path;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value config file");
    cmd->add_option("--seed", opt.seed, "master seed");
    cmd->add_option("--out", opt.out, "output directory");
    cmd->add_option("--data", opt.data, "dataset directory");
    cmd->add_option("--iters", opt.iters, "iteration budget");
    cmd->add_option("--method", opt.method, "adaptation method");
    cmd->add_option("--net", opt.net, "checkpoint base path");
    cmd->add_option("--fake", opt.fake, "recolored image path");
    cmd->add_option("--image", opt.image, "image to classify");
    cmd->add_option("--pred", opt.pred, "predicted mask path");
    cmd->add_option("--gt", opt.gt, "ground-truth mask path");
    cmd->add_option("--tile", opt.tile, "tile size");
    cmd->add_option("--overlap", opt.overlap, "tile overlap");
    cmd->add_option("--gan-patch", opt.gan_patch, "GAN training patch size");
    cmd->add_option("--gan-overlap", opt.gan_overlap, "GAN training patch overlap");
    cmd->add_option("--batch", opt.batch, "segmenter batch size");
    cmd->add_option("--seg-width", opt.seg_width, "segmenter base width");
    cmd->add_option("--seg-depth", opt.seg_depth, "segmenter depth");
    cmd->add_option("--disc-width", opt.disc_width, "discriminator base width");
    cmd->add_option("--disc-norm", opt.disc_norm, "1 = instance norm in the discriminator");
    cmd->add_option("--runs", opt.runs, "repetition count");
    cmd->add_option("--log-every", opt.log_every, "log line period");
    cmd->add_option("--g-lr", opt.g_lr, "generator learning rate");
    cmd->add_option("--d-lr", opt.d_lr, "discriminator learning rate");
    cmd->add_option("--seg-lr", opt.seg_lr, "segmenter learning rate");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dual-domain dataset");
  CLI::App* train = app.add_subcommand("train", "train the initial segmenter on the source");
  CLI::App* adapt = app.add_subcommand("adapt", "learn/apply a color adaptation");
  CLI::App* finetune_cmd = app.add_subcommand("finetune", "fine-tune on recolored images");
  CLI::App* predict_cmd = app.add_subcommand("predict", "classify an image");
  CLI::App* eval = app.add_subcommand("eval", "score a prediction against ground truth");
  CLI::App* repeat = app.add_subcommand("repeat", "repeat finetune+predict, aggregate");
  for (CLI::App* cmd : {synth, train, adapt, finetune_cmd, predict_cmd, eval, repeat})
    add_common(cmd);

  try {
    app.parse(argc, argv);
    if (!config_path.empty()) opt.file = KeyValueConfig::parse_file(config_path);
    if (synth->parsed()) return cmd_synth(opt);
    if (train->parsed()) return cmd_train(opt);
    if (adapt->parsed()) return cmd_adapt(opt);
    if (finetune_cmd->parsed()) return cmd_finetune(opt);
    if (predict_cmd->parsed()) return cmd_predict(opt);
    if (eval->parsed()) return cmd_eval(opt);
    if (repeat->parsed()) return cmd_repeat(opt);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
