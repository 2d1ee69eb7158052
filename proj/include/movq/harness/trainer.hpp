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

#ifndef MOVQ_HARNESS_TRAINER_HPP_
#define MOVQ_HARNESS_TRAINER_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "movq/ae/autoencoder.hpp"
#include "movq/harness/config.hpp"
#include "movq/harness/dataset.hpp"
#include "movq/metrics/metrics.hpp"

namespace movq::harness {

/// One appended line of a training log: loss components, metric snapshots,
/// and wall-clock seconds since the run started.
struct RunRecord {
  std::int64_t step = 0;
  double reconstruction = 0.0;
  double codebook = 0.0;
  double commitment = 0.0;
  double nll = 0.0;
  double psnr = 0.0;
  double perplexity = 0.0;
  double wall_seconds = 0.0;
};

std::string format_run_record(const RunRecord& record);

/// Append-only key=value record sink with a strictly increasing step index.
class RunLog {
 public:
  explicit RunLog(const std::string& path);
  void append(const RunRecord& record);

 private:
  std::string path_;
  std::int64_t last_step_ = -1;
};

struct TrainResult {
  std::string checkpoint_path;
  std::vector<RunRecord> records;  // records appended during this run
  const RunRecord& first() const { return records.front(); }
  const RunRecord& last() const { return records.back(); }
};

/// Stage-1 training: reconstruction + codebook + beta-weighted commitment
/// (plus an optional adversarial term). Writes records.txt, periodic
/// checkpoints, and vq_final.movq under out_dir. `resume` continues step
/// numbering from a previous training checkpoint. `train_ids` restricts the
/// corpus (all images when null). A non-finite loss aborts with a
/// diagnostic dump next to the records.
TrainResult train_vq(const TrainConfig& cfg, const std::string& out_dir,
                     const std::string& resume = "",
                     std::ostream* log = nullptr,
                     const std::vector<int>* train_ids = nullptr);

/// Stage-2 training: tokenizes the corpus once through the frozen stage-1
/// checkpoint, then optimizes the masked or causal objective. The stage-1
/// file is never written; a geometry mismatch between the configuration and
/// the checkpoint is a configuration error.
TrainResult train_prior(const TrainConfig& cfg,
                        const std::string& vq_checkpoint,
                        const std::string& out_dir,
                        const std::string& resume = "",
                        std::ostream* log = nullptr);

/// Reconstruction metrics of `model` over the listed images.
metrics::MetricsReport evaluate_reconstruction(ae::Autoencoder* model,
                                               const Dataset& dataset,
                                               const std::vector<int>& ids,
                                               int batch_size);

enum class ExperimentAxis { kInitialFeature, kCodebookSize, kChannelCount };

ExperimentAxis parse_axis(const std::string& name);
const char* axis_name(ExperimentAxis axis);

/// Trains matched-budget variants along one axis and returns an aligned
/// text table of held-out reconstruction MSE / PSNR / SSIM and codebook
/// perplexity per variant. The table is also written to out_dir/report.txt.
std::string run_experiment(ExperimentAxis axis, const TrainConfig& cfg,
                           const std::string& out_dir,
                           std::ostream* log = nullptr);

/// Scalar elements of an RGB image divided by discrete tokens per image:
/// 3 * size^2 / ((size / f)^2 * c). The 256/f=16/c=4 default gives 192.
double compression_ratio(int image_size, int downsample_factor, int chunks);

/// FNV-1a over the file bytes; used to verify a checkpoint was left intact.
std::uint64_t file_checksum(const std::string& path);

}  // namespace movq::harness

#endif  // MOVQ_HARNESS_TRAINER_HPP_
