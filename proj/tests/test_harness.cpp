// Copyright 2026 The MoVQ Authors
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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "movq/ae/autoencoder.hpp"
#include "movq/core/error.hpp"
#include "movq/harness/config.hpp"
#include "movq/harness/dataset.hpp"
#include "movq/harness/trainer.hpp"
#include "movq/io/image.hpp"
#include "movq/nn/checkpoint.hpp"
#include "movq/prior/transformer.hpp"

namespace fs = std::filesystem;
namespace harness = movq::harness;
using movq::Rng;
using movq::Tensor;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  std::string sub(const std::string& name) const {
    return (path / name).string();
  }
};

harness::TrainConfig tiny_config() {
  harness::TrainConfig cfg;
  cfg.dataset = "synthetic:12";
  cfg.image_size = 16;
  cfg.downsample_factor = 4;
  cfg.latent_dim = 16;
  cfg.chunks = 4;
  cfg.codebook_size = 16;
  cfg.base_width = 8;
  cfg.blocks_per_level = 1;
  cfg.batch_size = 4;
  cfg.steps = 4;
  cfg.record_every = 2;
  cfg.checkpoint_every = 1000;
  cfg.prior_layers = 1;
  cfg.prior_heads = 2;
  cfg.prior_embed_dim = 16;
  cfg.prior_hidden_dim = 32;
  cfg.seed = 11;
  return cfg;
}

bool checkpoints_equal(const std::string& a, const std::string& b) {
  movq::nn::Checkpoint ca = movq::nn::load_checkpoint(a);
  movq::nn::Checkpoint cb = movq::nn::load_checkpoint(b);
  if (ca.arrays.size() != cb.arrays.size()) return false;
  for (const auto& [name, ta] : ca.arrays) {
    auto it = cb.arrays.find(name);
    if (it == cb.arrays.end()) return false;
    const Tensor& tb = it->second;
    if (ta.numel() != tb.numel()) return false;
    for (std::int64_t i = 0; i < ta.numel(); ++i)
      if (ta[i] != tb[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("synthetic corpus is seeded and bounded") {
  harness::Dataset a("synthetic:9", 16, 5);
  harness::Dataset b("synthetic:9", 16, 5);
  harness::Dataset c("synthetic:9", 16, 6);
  CHECK(a.size() == 9);
  CHECK(a.image(0).dim(0) == 3);
  CHECK(a.image(0).dim(1) == 16);
  CHECK(a.image(0).dim(2) == 16);
  bool all_equal = true;
  bool in_range = true;
  for (int i = 0; i < 9; ++i)
    for (std::int64_t j = 0; j < a.image(i).numel(); ++j) {
      all_equal = all_equal && a.image(i)[j] == b.image(i)[j];
      in_range = in_range && a.image(i)[j] >= -1.0f && a.image(i)[j] <= 1.0f;
    }
  CHECK(all_equal);
  CHECK(in_range);
  float diff = 0.0f;
  for (std::int64_t j = 0; j < a.image(0).numel(); ++j)
    diff += std::fabs(a.image(0)[j] - c.image(0)[j]);
  CHECK(diff > 0.0f);

  CHECK_THROWS_AS(harness::Dataset("synthetic:0", 16, 0),
                  movq::ConfigError);
  CHECK_THROWS_AS(harness::Dataset("synthetic:nope", 16, 0),
                  movq::ConfigError);
}

TEST_CASE("folder ingestion skips junk and maps pixel extremes exactly") {
  TempDir dir("harness_png_corpus");
  Tensor white({3, 16, 16});
  Tensor black({3, 16, 16});
  for (std::int64_t i = 0; i < white.numel(); ++i) {
    white[i] = 1.0f;
    black[i] = -1.0f;
  }
  movq::io::write_png(dir.sub("a_white.png"), white);
  movq::io::write_png(dir.sub("b_black.png"), black);
  Rng rng(3);
  movq::io::write_png(dir.sub("c_pattern.png"),
                      harness::synthetic_image(rng, 16));
  std::ofstream(dir.sub("d_junk.png")) << "this is not an image";

  std::ostringstream warnings;
  harness::Dataset ds(dir.str(), 16, 0, &warnings);
  CHECK(ds.size() == 3);
  CHECK(warnings.str().find("skipping") != std::string::npos);
  CHECK(warnings.str().find("d_junk.png") != std::string::npos);
  // Lexicographic base order: white, black, pattern.
  for (std::int64_t i = 0; i < 3 * 16 * 16; ++i) {
    CHECK(ds.image(0)[i] == 1.0f);
    CHECK(ds.image(1)[i] == -1.0f);
  }

  TempDir empty("harness_empty_corpus");
  CHECK_THROWS_AS(harness::Dataset(empty.str(), 16, 0, &warnings),
                  movq::ConfigError);
  CHECK_THROWS_AS(harness::Dataset("no_such_directory_here", 16, 0),
                  movq::ConfigError);
}

TEST_CASE("batch cursor partitions each epoch with a short tail") {
  harness::BatchCursor cursor({0, 1, 2}, 2, 9);
  auto b1 = cursor.next();
  auto b2 = cursor.next();
  auto b3 = cursor.next();
  CHECK(b1.size() == 2);
  CHECK(b2.size() == 1);
  CHECK(b3.size() == 2);
  std::vector<int> epoch = b1;
  epoch.insert(epoch.end(), b2.begin(), b2.end());
  std::sort(epoch.begin(), epoch.end());
  CHECK(epoch == std::vector<int>{0, 1, 2});

  harness::BatchCursor replay({0, 1, 2}, 2, 9);
  CHECK(replay.next() == b1);
  CHECK(replay.next() == b2);
  CHECK(replay.next() == b3);

  harness::BatchCursor resumed({0, 1, 2}, 2, 9, 2);
  CHECK(resumed.next() == b3);

  CHECK_THROWS_AS(harness::BatchCursor({}, 2, 9), movq::ArgumentError);
  CHECK_THROWS_AS(harness::BatchCursor({0}, 0, 9), movq::ArgumentError);
}

TEST_CASE("config files parse, override, and reject junk") {
  TempDir dir("harness_config");
  {
    std::ofstream out(dir.sub("train.cfg"));
    out << "# toy settings\n";
    out << "dataset = synthetic:24\n";
    out << "image_size=16   # trailing comment\n";
    out << "\n";
    out << "chunks = 2\n";
    out << "stage = prior_auto\n";
    out << "seed = 77\n";
  }
  harness::TrainConfig cfg =
      harness::load_train_config(dir.sub("train.cfg"));
  CHECK(cfg.dataset == "synthetic:24");
  CHECK(cfg.image_size == 16);
  CHECK(cfg.chunks == 2);
  CHECK(cfg.stage == harness::Stage::kPriorAuto);
  CHECK(cfg.seed == 77);
  CHECK(cfg.codebook_size == 64);  // untouched default

  std::ofstream(dir.sub("bad_key.cfg")) << "no_such_knob = 3\n";
  CHECK_THROWS_AS(harness::load_train_config(dir.sub("bad_key.cfg")),
                  movq::ConfigError);
  std::ofstream(dir.sub("bad_int.cfg")) << "steps = soon\n";
  CHECK_THROWS_AS(harness::load_train_config(dir.sub("bad_int.cfg")),
                  movq::ConfigError);
  std::ofstream(dir.sub("bad_line.cfg")) << "steps\n";
  CHECK_THROWS_AS(harness::load_train_config(dir.sub("bad_line.cfg")),
                  movq::ConfigError);
  CHECK_THROWS_AS(harness::load_train_config(dir.sub("missing.cfg")),
                  movq::ConfigError);
  CHECK_THROWS_AS(harness::parse_stage("both"), movq::ConfigError);

  harness::TrainConfig invalid = tiny_config();
  invalid.latent_dim = 15;  // not divisible by chunks=4
  CHECK_THROWS_AS(harness::validate_train_config(invalid),
                  movq::ConfigError);
  invalid = tiny_config();
  invalid.stage = harness::Stage::kPriorMask;
  invalid.prior_embed_dim = 18;  // 18 % 4 chunks != 0
  CHECK_THROWS_AS(harness::validate_train_config(invalid),
                  movq::ConfigError);
  invalid = tiny_config();
  invalid.holdout_fraction = 1.0f;
  CHECK_THROWS_AS(harness::validate_train_config(invalid),
                  movq::ConfigError);
}

TEST_CASE("run records format flat and append monotonically") {
  harness::RunRecord rec;
  rec.step = 40;
  rec.reconstruction = 0.25;
  rec.nll = 1.5;
  rec.wall_seconds = 2.0;
  std::string line = harness::format_run_record(rec);
  CHECK(line.find("step=40") != std::string::npos);
  CHECK(line.find("reconstruction=0.25") != std::string::npos);
  CHECK(line.find("nll=1.5") != std::string::npos);
  CHECK(line.find("wall=2") != std::string::npos);

  TempDir dir("harness_runlog");
  harness::RunLog log(dir.sub("records.txt"));
  log.append(rec);
  rec.step = 41;
  log.append(rec);
  rec.step = 41;
  CHECK_THROWS_AS(log.append(rec), movq::ArgumentError);
  std::ifstream in(dir.sub("records.txt"));
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  CHECK(l1.find("step=40") != std::string::npos);
  CHECK(l2.find("step=41") != std::string::npos);
}

TEST_CASE("stage-1 training records, checkpoints, and resumes exactly") {
  TempDir dir("harness_train_vq");
  harness::TrainConfig cfg = tiny_config();

  SUBCASE("records start at step zero and the final checkpoint reloads") {
    harness::TrainResult result =
        harness::train_vq(cfg, dir.sub("straight"));
    CHECK(result.first().step == 0);
    CHECK(result.last().step == cfg.steps - 1);
    CHECK(result.first().reconstruction > 0.0);
    CHECK(fs::exists(result.checkpoint_path));
    CHECK(fs::exists(dir.path / "straight" / "records.txt"));
    movq::ae::Autoencoder model =
        movq::ae::Autoencoder::load(result.checkpoint_path);
    CHECK(model.config().image_size == 16);
  }

  SUBCASE("a resumed run reproduces the uninterrupted run bit-exactly") {
    harness::TrainResult whole = harness::train_vq(cfg, dir.sub("whole"));

    harness::TrainConfig half = cfg;
    half.steps = 2;
    harness::TrainResult part1 = harness::train_vq(half, dir.sub("split"));
    harness::TrainResult part2 = harness::train_vq(
        half, dir.sub("split2"), part1.checkpoint_path);
    CHECK(part2.records.front().step == 2);
    CHECK(part2.records.back().step == 3);
    CHECK(checkpoints_equal(whole.checkpoint_path, part2.checkpoint_path));
  }

  SUBCASE("periodic checkpoints appear at the configured cadence") {
    harness::TrainConfig cadence = cfg;
    cadence.checkpoint_every = 2;
    harness::train_vq(cadence, dir.sub("cadence"));
    CHECK(fs::exists(dir.path / "cadence" / "vq_step000002.movq"));
    CHECK(fs::exists(dir.path / "cadence" / "vq_final.movq"));
  }

  SUBCASE("beta zero reports a zero commitment term") {
    harness::TrainConfig free = cfg;
    free.beta = 0.0f;
    free.steps = 2;
    harness::TrainResult result = harness::train_vq(free, dir.sub("nobeta"));
    for (const auto& rec : result.records) CHECK(rec.commitment == 0.0);
  }

  SUBCASE("wrong stage is rejected") {
    harness::TrainConfig wrong = cfg;
    wrong.stage = harness::Stage::kPriorMask;
    CHECK_THROWS_AS(harness::train_vq(wrong, dir.sub("wrong")),
                    movq::ConfigError);
  }
}

TEST_CASE("stage-2 training freezes stage 1 and checks geometry") {
  TempDir dir("harness_train_prior");
  harness::TrainConfig cfg = tiny_config();
  harness::TrainResult stage1 = harness::train_vq(cfg, dir.sub("vq"));

  SUBCASE("masked training runs and never touches the stage-1 file") {
    harness::TrainConfig pcfg = cfg;
    pcfg.stage = harness::Stage::kPriorMask;
    pcfg.steps = 3;
    std::uint64_t before = harness::file_checksum(stage1.checkpoint_path);
    harness::TrainResult result = harness::train_prior(
        pcfg, stage1.checkpoint_path, dir.sub("mask"));
    std::uint64_t after = harness::file_checksum(stage1.checkpoint_path);
    CHECK(before == after);
    CHECK(result.first().nll > 0.0);
    CHECK(std::isfinite(result.last().nll));
    movq::prior::PriorModel model =
        movq::prior::PriorModel::load(result.checkpoint_path);
    CHECK(model.config().mode == movq::prior::PriorMode::kMask);
    CHECK(model.config().h == 4);
  }

  SUBCASE("autoregressive stage trains too") {
    harness::TrainConfig pcfg = cfg;
    pcfg.stage = harness::Stage::kPriorAuto;
    pcfg.steps = 2;
    harness::TrainResult result = harness::train_prior(
        pcfg, stage1.checkpoint_path, dir.sub("auto"));
    CHECK(result.last().nll > 0.0);
    movq::prior::PriorModel model =
        movq::prior::PriorModel::load(result.checkpoint_path);
    CHECK(model.config().mode == movq::prior::PriorMode::kAuto);
  }

  SUBCASE("geometry mismatches are configuration errors") {
    harness::TrainConfig pcfg = cfg;
    pcfg.stage = harness::Stage::kPriorMask;
    pcfg.chunks = 2;
    pcfg.latent_dim = 16;
    pcfg.prior_embed_dim = 16;
    CHECK_THROWS_AS(harness::train_prior(pcfg, stage1.checkpoint_path,
                                         dir.sub("bad")),
                    movq::ConfigError);
    harness::TrainConfig vq_stage = cfg;
    CHECK_THROWS_AS(harness::train_prior(vq_stage, stage1.checkpoint_path,
                                         dir.sub("bad2")),
                    movq::ConfigError);
  }
}

TEST_CASE("reconstruction evaluation summarizes the corpus") {
  TempDir dir("harness_eval");
  harness::TrainConfig cfg = tiny_config();
  harness::TrainResult stage1 = harness::train_vq(cfg, dir.sub("vq"));
  movq::ae::Autoencoder model =
      movq::ae::Autoencoder::load(stage1.checkpoint_path);
  harness::Dataset ds(cfg.dataset, cfg.image_size, cfg.seed);
  std::vector<int> ids = {0, 1, 2, 3, 4};
  movq::metrics::MetricsReport report =
      harness::evaluate_reconstruction(&model, ds, ids, 2);
  CHECK(report.sample_count == 5);
  CHECK(report.mse >= 0.0);
  CHECK(std::isfinite(report.psnr));
  CHECK(report.ssim >= -1.0);
  CHECK(report.ssim <= 1.0);
  CHECK(report.perplexity >= 1.0);
  CHECK(report.perplexity <= 16.0);
  CHECK_THROWS_AS(harness::evaluate_reconstruction(&model, ds, {}, 2),
                  movq::ArgumentError);
}

TEST_CASE("experiment sweeps one axis into an aligned table") {
  TempDir dir("harness_experiment");
  harness::TrainConfig cfg = tiny_config();
  cfg.dataset = "synthetic:10";
  cfg.steps = 2;
  cfg.record_every = 1;
  std::string table = harness::run_experiment(
      harness::ExperimentAxis::kInitialFeature, cfg, dir.sub("exp"));
  CHECK(table.find("variant") != std::string::npos);
  CHECK(table.find("sinusoid") != std::string::npos);
  CHECK(table.find("learned_constant") != std::string::npos);
  CHECK(table.find("fourier") != std::string::npos);
  CHECK(table.find("perplexity") != std::string::npos);
  CHECK(fs::exists(dir.path / "exp" / "report.txt"));
  CHECK(fs::exists(dir.path / "exp" / "sinusoid" / "vq_final.movq"));

  CHECK(harness::parse_axis("channel_count") ==
        harness::ExperimentAxis::kChannelCount);
  CHECK_THROWS_AS(harness::parse_axis("width"), movq::ConfigError);
}

TEST_CASE("compression ratio arithmetic") {
  CHECK(harness::compression_ratio(256, 16, 4) == 192.0);
  CHECK(harness::compression_ratio(16, 4, 4) == 12.0);
  CHECK(harness::compression_ratio(32, 8, 1) == 192.0);
  CHECK_THROWS_AS(harness::compression_ratio(0, 16, 4),
                  movq::ArgumentError);
  CHECK_THROWS_AS(harness::compression_ratio(100, 16, 4),
                  movq::ArgumentError);
}

TEST_CASE("file checksums detect any byte change") {
  TempDir dir("harness_checksum");
  std::ofstream(dir.sub("a.bin"), std::ios::binary) << "same bytes here";
  std::ofstream(dir.sub("b.bin"), std::ios::binary) << "same bytes here";
  std::ofstream(dir.sub("c.bin"), std::ios::binary) << "same bytes hers";
  CHECK(harness::file_checksum(dir.sub("a.bin")) ==
        harness::file_checksum(dir.sub("b.bin")));
  CHECK(harness::file_checksum(dir.sub("a.bin")) !=
        harness::file_checksum(dir.sub("c.bin")));
  CHECK_THROWS_AS(harness::file_checksum(dir.sub("missing.bin")),
                  movq::ArgumentError);
}
