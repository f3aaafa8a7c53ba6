// Copyright 2026 The CaFM Delivery Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// cafm: prepare | train | pack | unpack | reconstruct | report | analyze |
// codec-compare

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cafm/pipeline.hpp"

namespace {

void add_options(CLI::App& app, cafm::RunConfig& rc, std::string& workdir) {
  app.add_option("--workdir", workdir, "Working directory")->capture_default_str();
  app.add_option("--seed", rc.seed, "Seed for every random stream")->capture_default_str();
  app.add_option("--input", rc.input, "Video file, PNG frame directory, or 'synthetic'");
  app.add_option("--frames", rc.max_frames, "Decode at most this many frames (0 = all)")->capture_default_str();
  app.add_option("--scale", rc.scale, "Upscaling factor")->check(CLI::IsMember({2, 3, 4}))->capture_default_str();
  app.add_option("--chunks", rc.chunks, "Number of chunks n")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--test-stride", rc.test_stride, "Every k-th frame of a chunk is a test frame")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--arch", rc.arch, "Backbone")
      ->check(CLI::IsMember({"srcnn", "espcn", "vdsr", "edsr_m"}))
      ->capture_default_str();
  app.add_option("--profile", rc.profile, "Backbone size")->check(CLI::IsMember({"full", "tiny"}))->capture_default_str();
  app.add_option("--channels", rc.channels, "Override channel width (0 = profile default)")->capture_default_str();
  app.add_option("--resblocks", rc.resblocks, "Override residual block count (0 = profile default)")
      ->capture_default_str();
  app.add_option("--mode", rc.mode, "m0 | separate | ft | joint")->capture_default_str();
  app.add_option("--kernel", rc.kernel, "CaFM kernel size")->check(CLI::IsMember({1, 3, 5, 7}))->capture_default_str();
  app.add_option("--iterations", rc.iterations, "Per-chunk step budget T")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--batch", rc.batch, "Batch size")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--patch-lr", rc.patch_lr, "LR patch size")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--lr", rc.lr, "Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--eval-interval", rc.eval_interval, "Log PSNR every k iterations (0 = final only)")
      ->capture_default_str();
  app.add_option("--checkpoint-interval", rc.checkpoint_interval, "Checkpoint every k iterations (0 = off)")
      ->capture_default_str();
  app.add_flag("--y-channel", rc.y_channel, "Compute PSNR on BT.601 luma");
  app.add_option("--probe", rc.probe, "Probe image for analyze (default: first test frame)");
  app.add_option("--codec", rc.codec, "h264 | h265")->check(CLI::IsMember({"h264", "h265"}))->capture_default_str();
  app.add_option("--budget", rc.budget, "Codec byte budget (0 = joint delivery size)")->capture_default_str();
  app.add_option("--bundle", rc.bundle, "Bundle path (analyze: comma-separated list)");
  app.add_option("--chunk", rc.chunk, "Reconstruct only this chunk")->capture_default_str();
  app.add_option("--out", rc.out, "Output path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-chunk content-aware super-resolution for video delivery"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI configuration file (flags override it)");
  app.allow_config_extras(CLI::config_extras_mode::error);

  cafm::RunConfig rc;
  std::string workdir = rc.workdir.string();
  add_options(app, rc, workdir);

  auto* prepare = app.add_subcommand("prepare", "Decode, chunk and cache LR/HR frames");
  auto* train = app.add_subcommand("train", "Train one regime (--mode)");
  auto* pack = app.add_subcommand("pack", "Write the delivery bundle for --mode");
  auto* unpack = app.add_subcommand("unpack", "Validate a bundle file");
  std::string unpack_file;
  bool inspect = false;
  unpack->add_option("file", unpack_file, "Bundle file")->required();
  unpack->add_flag("--inspect", inspect, "Print manifest and section table");
  auto* reconstruct = app.add_subcommand("reconstruct", "Super-resolve the LR video from a bundle");
  auto* report = app.add_subcommand("report", "Evaluate trained models, write report.csv");
  auto* analyze = app.add_subcommand("analyze", "Cross-model feature distance matrices");
  auto* codec = app.add_subcommand("codec-compare", "Bitrate-matched codec baseline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc_exit = app.exit(e);
    return rc_exit == 0 ? 0 : 2;
  }
  rc.workdir = workdir;

  try {
    if (*prepare) {
      cafm::cmd_prepare(rc);
    } else if (*train) {
      cafm::cmd_train(rc);
    } else if (*pack) {
      std::cout << cafm::storage_json(cafm::cmd_pack(rc)) << "\n";
    } else if (*unpack) {
      const auto b = cafm::load_bundle(unpack_file);
      if (inspect) {
        std::cout << cafm::inspect_bundle(unpack_file);
      } else {
        std::cout << "ok: " << b.manifest.n << " CaFM sets, " << cafm::count_params(b.shared) << " backbone params\n";
      }
    } else if (*reconstruct) {
      cafm::cmd_reconstruct(rc);
    } else if (*report) {
      cafm::cmd_report(rc);
    } else if (*analyze) {
      cafm::cmd_analyze(rc);
    } else if (*codec) {
      cafm::cmd_codec_compare(rc);
    }
  } catch (const cafm::Error& e) {
    std::cerr << "cafm: " << e.what() << "\n";
    return cafm::exit_code(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "cafm: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
