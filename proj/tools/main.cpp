#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xtx/harness.hpp"

// Command line front end: `xtx run` trains one variant over a set of seeds and
// writes a per-episode CSV; `xtx report` aggregates every CSV in a directory
// into a summary table and a learning-curve plot.

namespace {

std::vector<uint64_t> parse_seeds_arg(const std::string& s) {
  std::vector<uint64_t> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(std::stoull(cur));
      cur.clear();
    }
  };
  for (char c : s) {
    if (c == ',')
      flush();
    else
      cur += c;
  }
  flush();
  if (out.empty()) throw std::invalid_argument("--seeds: empty seed list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xtx: exploit-then-explore training runs on synthetic text games"};
  app.require_subcommand(1);

  std::string config_path, variant, seeds_arg, out_dir, report_dir;
  int episodes = -1;

  auto* run = app.add_subcommand("run", "train a variant and write per-episode CSV");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--variant", variant, "algorithm variant (overrides config)");
  run->add_option("--seeds", seeds_arg, "comma-separated seeds (overrides config)");
  run->add_option("--episodes", episodes, "episodes per seed (overrides config)");
  run->add_option("--out", out_dir, "output directory (overrides config)");

  auto* report = app.add_subcommand("report", "aggregate run CSVs into a summary");
  report->add_option("--in", report_dir, "directory containing run CSV files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      xtx::ExperimentConfig cfg = xtx::load_config(config_path);
      if (!variant.empty()) cfg.run.variant = variant;
      if (!seeds_arg.empty()) cfg.run.seeds = parse_seeds_arg(seeds_arg);
      if (episodes > 0) cfg.run.episodes = episodes;
      if (!out_dir.empty()) cfg.run.out_dir = out_dir;
      cfg.validate();

      auto results = xtx::run_experiment(cfg);
      std::string path = xtx::write_run_csv(cfg, results);
      std::cout << "wrote " << path << "\n";
      for (const auto& rr : results)
        std::cout << cfg.run.variant << " seed " << rr.seed << ": avg100 "
                  << xtx::format_number(rr.final_avg100) << ", max "
                  << xtx::format_number(rr.final_max) << "\n";
    } else {
      xtx::write_report(report_dir);
      auto summaries = xtx::summarize_dir(report_dir);
      for (const auto& s : summaries)
        std::cout << s.variant << ": avg " << xtx::format_number(s.avg_mean) << " (std "
                  << xtx::format_number(s.avg_std) << "), max " << xtx::format_number(s.max_mean)
                  << ", norm " << xtx::format_number(s.norm_score) << "\n";
      std::cout << "wrote " << report_dir << "/summary.csv, summary.txt, curves.svg\n";
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
