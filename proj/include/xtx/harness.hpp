#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xtx/control.hpp"

// Experiment harness: config files, multi-seed runs, CSV emission and report
// generation. Output is fully determined by (config, seed): repeated runs
// produce byte-identical CSV files.

namespace xtx {

struct AgentConfig {
  double gamma = 0.9;
  double alpha1 = 1.0, alpha2 = 1.0, alpha3 = 1.0;
  double beta1 = 1.0, beta2 = 10000.0;
  int k = 10;
  double rho = 0.5;
  int R = 50;
  int initial_T = 50;
  int retrain_interval = 10;
  int batch = 64;
  int il_batch = 0;  // 0 means "use batch"
  int il_passes = 40;
  double il_lr = 1e-3;
  double invdy_lr = 1e-4;
  int hidden = 128;
  int emb_dim = 64;
  std::string encoder = "mean";    // mean | gru
  std::string optimizer = "adam";  // adam | sgd
  double init_range = 0.08;
  double clip_norm = 5.0;
  uint64_t replay_capacity = 100000;
  uint64_t store_capacity = 20000;
  int update_every = 1;
  bool il_warm_start = false;

  void validate() const;
};

struct RunConfig {
  std::string variant = "xtx";
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  int episodes = 2000;
  std::string out_dir = "out";
  int threads = 1;

  void validate() const;
};

struct ExperimentConfig {
  GameSpec game;
  AgentConfig agent;
  RunConfig run;

  void validate() const;
  // Effective settings as sorted "section.key=value" pairs; echoed into CSV
  // headers so every output file carries its own provenance.
  std::map<std::string, std::string> echo() const;
};

// Parses the sectioned key=value format. Throws std::invalid_argument with the
// offending line number on malformed input or unknown keys.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct EpisodeRow {
  int episode = 0;  // 1-based
  double score = 0.0;
  double avg100 = 0.0;    // mean score of the trailing window (up to 100 episodes)
  double max_seen = 0.0;  // running best score
  int phase1_steps = 0;
};

struct RunResult {
  uint64_t seed = 0;
  std::vector<EpisodeRow> rows;
  double final_avg100 = 0.0;
  double final_max = 0.0;
};

// One full training run; deterministic in (config, seed).
RunResult run_single(const ExperimentConfig& cfg, uint64_t seed);
// All configured seeds, optionally on a small thread pool. Result order
// matches the seed list regardless of scheduling.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg);

std::string render_csv(const ExperimentConfig& cfg, const std::vector<RunResult>& results);
// Writes <out_dir>/<variant>.csv, creating the directory if needed.
std::string write_run_csv(const ExperimentConfig& cfg, const std::vector<RunResult>& results);

struct VariantSummary {
  std::string variant;
  int seeds = 0;
  double avg_mean = 0.0, avg_std = 0.0;
  double max_mean = 0.0, max_std = 0.0;
  double norm_score = 0.0;  // avg_mean / game max return
};

// Reads every *.csv emitted by `run` in a directory.
std::vector<VariantSummary> summarize_dir(const std::string& dir);
// summary.csv, summary.txt and curves.svg next to the per-variant files.
void write_report(const std::string& dir);

std::string format_number(double v);  // canonical CSV number formatting

}  // namespace xtx
