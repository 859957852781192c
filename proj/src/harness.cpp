#include "xtx/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace xtx {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void fail_line(int line, const std::string& msg) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& v, int line) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    fail_line(line, "expected a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& v, int line) {
  try {
    size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    fail_line(line, "expected an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, int line) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  fail_line(line, "expected a boolean (0/1/true/false), got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& v, int line) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ','))
    out.push_back(static_cast<int>(parse_int(trim(part), line)));
  return out;
}

std::vector<uint64_t> parse_seed_list(const std::string& v, int line) {
  std::vector<uint64_t> out;
  for (const auto& part : split(v, ',')) {
    std::string p = trim(part);
    if (p.empty()) fail_line(line, "empty seed entry");
    out.push_back(static_cast<uint64_t>(parse_int(p, line)));
  }
  if (out.empty()) fail_line(line, "seed list is empty");
  return out;
}

std::map<int, double> parse_rewards(const std::string& v, int line) {
  std::map<int, double> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) {
    auto kv = split(trim(part), ':');
    if (kv.size() != 2) fail_line(line, "rewards must be pos:value pairs, got '" + part + "'");
    out[static_cast<int>(parse_int(trim(kv[0]), line))] = parse_double(trim(kv[1]), line);
  }
  return out;
}

std::string join_ints(const std::vector<int>& xs) {
  std::string s;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(xs[i]);
  }
  return s;
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void AgentConfig::validate() const {
  if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("agent.gamma must be in (0, 1]");
  if (k <= 0) throw std::invalid_argument("agent.k must be positive");
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("agent.rho must be in [0, 1]");
  if (R < 0) throw std::invalid_argument("agent.R must be non-negative");
  if (initial_T <= 0) throw std::invalid_argument("agent.initial_T must be positive");
  if (retrain_interval <= 0) throw std::invalid_argument("agent.retrain_interval must be positive");
  if (batch <= 0) throw std::invalid_argument("agent.batch must be positive");
  if (il_batch < 0) throw std::invalid_argument("agent.il_batch must be non-negative");
  if (il_passes <= 0) throw std::invalid_argument("agent.il_passes must be positive");
  if (il_lr <= 0.0 || invdy_lr <= 0.0) throw std::invalid_argument("agent learning rates must be positive");
  if (hidden <= 0 || emb_dim <= 0) throw std::invalid_argument("agent dims must be positive");
  parse_encoder_kind(encoder);
  if (optimizer != "adam" && optimizer != "sgd")
    throw std::invalid_argument("agent.optimizer must be adam or sgd");
  if (init_range <= 0.0) throw std::invalid_argument("agent.init_range must be positive");
  if (replay_capacity == 0 || store_capacity == 0)
    throw std::invalid_argument("agent capacities must be positive");
  if (update_every <= 0) throw std::invalid_argument("agent.update_every must be positive");
}

void RunConfig::validate() const {
  parse_variant(variant);
  if (seeds.empty()) throw std::invalid_argument("run.seeds must not be empty");
  if (episodes <= 0) throw std::invalid_argument("run.episodes must be positive");
  if (threads <= 0) throw std::invalid_argument("run.threads must be positive");
  if (out_dir.empty()) throw std::invalid_argument("run.out must not be empty");
}

void ExperimentConfig::validate() const {
  game.validate();
  agent.validate();
  run.validate();
}

std::map<std::string, std::string> ExperimentConfig::echo() const {
  std::map<std::string, std::string> m;
  m["game.depth"] = std::to_string(game.depth);
  m["game.branching"] = std::to_string(game.branching);
  m["game.bottlenecks"] = join_ints(game.bottleneck_positions);
  m["game.deadends"] = join_ints(game.deadend_positions);
  {
    std::string s;
    for (const auto& [pos, val] : game.rewards) {
      if (!s.empty()) s += ',';
      s += std::to_string(pos) + ":" + format_number(val);
    }
    m["game.rewards"] = s;
  }
  m["game.stochastic"] = game.stochastic ? "1" : "0";
  m["game.p_slip"] = format_number(game.p_slip);
  m["game.distractor_rate"] = format_number(game.distractor_rate);
  m["game.seed"] = std::to_string(game.seed);
  {
    double total = 0.0;
    for (const auto& [pos, val] : game.rewards) {
      (void)pos;
      total += val;
    }
    m["game.max_return"] = format_number(total);
  }

  m["agent.gamma"] = format_number(agent.gamma);
  m["agent.alpha1"] = format_number(agent.alpha1);
  m["agent.alpha2"] = format_number(agent.alpha2);
  m["agent.alpha3"] = format_number(agent.alpha3);
  m["agent.beta1"] = format_number(agent.beta1);
  m["agent.beta2"] = format_number(agent.beta2);
  m["agent.k"] = std::to_string(agent.k);
  m["agent.rho"] = format_number(agent.rho);
  m["agent.R"] = std::to_string(agent.R);
  m["agent.initial_T"] = std::to_string(agent.initial_T);
  m["agent.retrain_interval"] = std::to_string(agent.retrain_interval);
  m["agent.batch"] = std::to_string(agent.batch);
  m["agent.il_batch"] = std::to_string(agent.il_batch);
  m["agent.il_passes"] = std::to_string(agent.il_passes);
  m["agent.il_lr"] = format_number(agent.il_lr);
  m["agent.invdy_lr"] = format_number(agent.invdy_lr);
  m["agent.hidden"] = std::to_string(agent.hidden);
  m["agent.emb_dim"] = std::to_string(agent.emb_dim);
  m["agent.encoder"] = agent.encoder;
  m["agent.optimizer"] = agent.optimizer;
  m["agent.init_range"] = format_number(agent.init_range);
  m["agent.clip_norm"] = format_number(agent.clip_norm);
  m["agent.replay_capacity"] = std::to_string(agent.replay_capacity);
  m["agent.store_capacity"] = std::to_string(agent.store_capacity);
  m["agent.update_every"] = std::to_string(agent.update_every);
  m["agent.il_warm_start"] = agent.il_warm_start ? "1" : "0";

  m["run.variant"] = run.variant;
  {
    std::string s;
    for (size_t i = 0; i < run.seeds.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(run.seeds[i]);
    }
    m["run.seeds"] = s;
  }
  m["run.episodes"] = std::to_string(run.episodes);
  m["run.out"] = run.out_dir;
  m["run.threads"] = std::to_string(run.threads);
  return m;
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail_line(line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section != "game" && section != "agent" && section != "run")
        fail_line(line, "unknown section [" + section + "]");
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) fail_line(line, "expected key=value, got '" + s + "'");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (section.empty()) fail_line(line, "key '" + key + "' appears before any section");

    if (section == "game") {
      if (key == "depth") cfg.game.depth = static_cast<int>(parse_int(val, line));
      else if (key == "branching") cfg.game.branching = static_cast<int>(parse_int(val, line));
      else if (key == "bottlenecks") cfg.game.bottleneck_positions = parse_int_list(val, line);
      else if (key == "deadends") cfg.game.deadend_positions = parse_int_list(val, line);
      else if (key == "rewards") cfg.game.rewards = parse_rewards(val, line);
      else if (key == "stochastic") cfg.game.stochastic = parse_bool(val, line);
      else if (key == "p_slip") cfg.game.p_slip = parse_double(val, line);
      else if (key == "distractor_rate") cfg.game.distractor_rate = parse_double(val, line);
      else if (key == "seed") cfg.game.seed = static_cast<uint64_t>(parse_int(val, line));
      else fail_line(line, "unknown key '" + key + "' in [game]");
    } else if (section == "agent") {
      if (key == "gamma") cfg.agent.gamma = parse_double(val, line);
      else if (key == "alpha1") cfg.agent.alpha1 = parse_double(val, line);
      else if (key == "alpha2") cfg.agent.alpha2 = parse_double(val, line);
      else if (key == "alpha3") cfg.agent.alpha3 = parse_double(val, line);
      else if (key == "beta1") cfg.agent.beta1 = parse_double(val, line);
      else if (key == "beta2") cfg.agent.beta2 = parse_double(val, line);
      else if (key == "k") cfg.agent.k = static_cast<int>(parse_int(val, line));
      else if (key == "rho") cfg.agent.rho = parse_double(val, line);
      else if (key == "R") cfg.agent.R = static_cast<int>(parse_int(val, line));
      else if (key == "initial_T") cfg.agent.initial_T = static_cast<int>(parse_int(val, line));
      else if (key == "retrain_interval") cfg.agent.retrain_interval = static_cast<int>(parse_int(val, line));
      else if (key == "batch") cfg.agent.batch = static_cast<int>(parse_int(val, line));
      else if (key == "il_batch") cfg.agent.il_batch = static_cast<int>(parse_int(val, line));
      else if (key == "il_passes") cfg.agent.il_passes = static_cast<int>(parse_int(val, line));
      else if (key == "il_lr") cfg.agent.il_lr = parse_double(val, line);
      else if (key == "invdy_lr") cfg.agent.invdy_lr = parse_double(val, line);
      else if (key == "hidden") cfg.agent.hidden = static_cast<int>(parse_int(val, line));
      else if (key == "emb_dim") cfg.agent.emb_dim = static_cast<int>(parse_int(val, line));
      else if (key == "encoder") cfg.agent.encoder = val;
      else if (key == "optimizer") cfg.agent.optimizer = val;
      else if (key == "init_range") cfg.agent.init_range = parse_double(val, line);
      else if (key == "clip_norm") cfg.agent.clip_norm = parse_double(val, line);
      else if (key == "replay_capacity") cfg.agent.replay_capacity = static_cast<uint64_t>(parse_int(val, line));
      else if (key == "store_capacity") cfg.agent.store_capacity = static_cast<uint64_t>(parse_int(val, line));
      else if (key == "update_every") cfg.agent.update_every = static_cast<int>(parse_int(val, line));
      else if (key == "il_warm_start") cfg.agent.il_warm_start = parse_bool(val, line);
      else fail_line(line, "unknown key '" + key + "' in [agent]");
    } else {
      if (key == "variant") cfg.run.variant = val;
      else if (key == "seeds") cfg.run.seeds = parse_seed_list(val, line);
      else if (key == "episodes") cfg.run.episodes = static_cast<int>(parse_int(val, line));
      else if (key == "out") cfg.run.out_dir = val;
      else if (key == "threads") cfg.run.threads = static_cast<int>(parse_int(val, line));
      else fail_line(line, "unknown key '" + key + "' in [run]");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

RunResult run_single(const ExperimentConfig& cfg, uint64_t seed) {
  cfg.validate();
  VariantTraits traits = traits_for(parse_variant(cfg.run.variant));

  Environment env(cfg.game);
  env.reseed_dynamics(seed);
  int vocab = env.vocab().size();

  OptimizerConfig::Rule rule =
      cfg.agent.optimizer == "sgd" ? OptimizerConfig::Rule::Sgd : OptimizerConfig::Rule::Adam;

  QNetConfig qcfg;
  qcfg.vocab = vocab;
  qcfg.emb_dim = cfg.agent.emb_dim;
  qcfg.hidden = cfg.agent.hidden;
  qcfg.encoder = parse_encoder_kind(cfg.agent.encoder);
  qcfg.gamma = cfg.agent.gamma;
  qcfg.opt.rule = rule;
  qcfg.opt.lr = cfg.agent.invdy_lr;
  qcfg.opt.clip_norm = cfg.agent.clip_norm;
  qcfg.init_range = cfg.agent.init_range;

  ILConfig icfg;
  icfg.vocab = vocab;
  icfg.emb_dim = cfg.agent.emb_dim;
  icfg.hidden = cfg.agent.hidden;
  icfg.encoder = qcfg.encoder;
  icfg.opt.rule = rule;
  icfg.opt.lr = cfg.agent.il_lr;
  icfg.opt.clip_norm = cfg.agent.clip_norm;
  icfg.batch = cfg.agent.il_batch > 0 ? cfg.agent.il_batch : cfg.agent.batch;
  icfg.passes = cfg.agent.il_passes;
  icfg.warm_start = cfg.agent.il_warm_start;
  icfg.init_range = cfg.agent.init_range;

  auto qinit = make_stream(seed, "qnet-init");
  auto ilinit = make_stream(seed, "il-init");
  QNetwork qnet(qcfg, qinit);
  ILPolicy il(icfg, ilinit);
  ReplayBuffer replay(cfg.agent.replay_capacity);
  TrajectoryStore store(cfg.agent.store_capacity);

  ControlConfig ccfg;
  ccfg.k = cfg.agent.k;
  ccfg.beta1 = cfg.agent.beta1;
  ccfg.beta2 = cfg.agent.beta2;
  ccfg.rho = cfg.agent.rho;
  ccfg.R = cfg.agent.R;
  ccfg.initial_T = cfg.agent.initial_T;
  ccfg.retrain_interval = cfg.agent.retrain_interval;
  ccfg.batch = cfg.agent.batch;
  ccfg.update_every = cfg.agent.update_every;
  ccfg.weights = IntrinsicWeights{cfg.agent.alpha1, cfg.agent.alpha2, cfg.agent.alpha3};

  ControlRngs rngs{make_stream(seed, "action"), make_stream(seed, "replay"),
                   make_stream(seed, "sampler"), make_stream(seed, "il-train")};
  Controller ctl(env, qnet, il, replay, store, traits, ccfg, rngs);

  RunResult rr;
  rr.seed = seed;
  rr.rows.reserve(cfg.run.episodes);
  std::vector<double> scores;
  scores.reserve(cfg.run.episodes);
  double max_seen = -std::numeric_limits<double>::infinity();
  for (int e = 1; e <= cfg.run.episodes; ++e) {
    EpisodeStats st = ctl.run_episode();
    ctl.maybe_retrain();
    scores.push_back(st.score);
    size_t w = std::min<size_t>(100, scores.size());
    double sum = 0.0;
    for (size_t i = scores.size() - w; i < scores.size(); ++i) sum += scores[i];
    max_seen = std::max(max_seen, st.score);
    EpisodeRow row;
    row.episode = e;
    row.score = st.score;
    row.avg100 = sum / static_cast<double>(w);
    row.max_seen = max_seen;
    row.phase1_steps = st.phase1_steps;
    rr.rows.push_back(row);
  }
  rr.final_avg100 = rr.rows.back().avg100;
  rr.final_max = rr.rows.back().max_seen;
  return rr;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& seeds = cfg.run.seeds;
  std::vector<RunResult> results(seeds.size());
  int nthreads = std::min<int>(cfg.run.threads, static_cast<int>(seeds.size()));
  if (nthreads <= 1) {
    for (size_t i = 0; i < seeds.size(); ++i) results[i] = run_single(cfg, seeds[i]);
    return results;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(nthreads);
  for (int w = 0; w < nthreads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          size_t i = next.fetch_add(1);
          if (i >= seeds.size()) return;
          results[i] = run_single(cfg, seeds[i]);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

std::string render_csv(const ExperimentConfig& cfg, const std::vector<RunResult>& results) {
  std::string s = "# xtx-run v1\n";
  for (const auto& [k, v] : cfg.echo()) s += "# " + k + "=" + v + "\n";
  s += "variant,seed,episode,score,avg100,max_seen,phase1_steps\n";
  for (const auto& rr : results) {
    for (const auto& row : rr.rows) {
      s += cfg.run.variant;
      s += ',';
      s += std::to_string(rr.seed);
      s += ',';
      s += std::to_string(row.episode);
      s += ',';
      s += format_number(row.score);
      s += ',';
      s += format_number(row.avg100);
      s += ',';
      s += format_number(row.max_seen);
      s += ',';
      s += std::to_string(row.phase1_steps);
      s += '\n';
    }
  }
  return s;
}

std::string write_run_csv(const ExperimentConfig& cfg, const std::vector<RunResult>& results) {
  std::filesystem::create_directories(cfg.run.out_dir);
  std::string path = cfg.run.out_dir + "/" + cfg.run.variant + ".csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out << render_csv(cfg, results);
  if (!out) throw std::runtime_error("write failed for " + path);
  return path;
}

namespace {

struct CsvRun {
  std::string variant;
  double max_return = 0.0;
  // seed -> episode-ordered avg100 curve and final row values
  std::map<uint64_t, std::vector<EpisodeRow>> rows;
};

CsvRun parse_run_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvRun run;
  std::string line;
  bool header_done = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq != std::string::npos && line.find("game.max_return") != std::string::npos)
        run.max_return = std::stod(line.substr(eq + 1));
      continue;
    }
    if (!header_done) {  // column header row
      header_done = true;
      continue;
    }
    auto parts = split(line, ',');
    if (parts.size() != 7)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
    EpisodeRow row;
    run.variant = parts[0];
    uint64_t seed = std::stoull(parts[1]);
    row.episode = std::stoi(parts[2]);
    row.score = std::stod(parts[3]);
    row.avg100 = std::stod(parts[4]);
    row.max_seen = std::stod(parts[5]);
    row.phase1_steps = std::stoi(parts[6]);
    run.rows[seed].push_back(row);
  }
  if (run.rows.empty()) throw std::runtime_error(path + ": no data rows");
  return run;
}

std::vector<std::string> run_csv_paths(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto p = entry.path();
    if (p.extension() != ".csv") continue;
    if (p.filename() == "summary.csv") continue;
    paths.push_back(p.string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw std::runtime_error("no run CSV files found in " + dir);
  return paths;
}

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  sd = 0.0;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
}

}  // namespace

std::vector<VariantSummary> summarize_dir(const std::string& dir) {
  std::vector<VariantSummary> out;
  for (const auto& path : run_csv_paths(dir)) {
    CsvRun run = parse_run_csv(path);
    std::vector<double> avgs, maxes;
    for (const auto& [seed, rows] : run.rows) {
      (void)seed;
      avgs.push_back(rows.back().avg100);
      maxes.push_back(rows.back().max_seen);
    }
    VariantSummary s;
    s.variant = run.variant;
    s.seeds = static_cast<int>(run.rows.size());
    mean_std(avgs, s.avg_mean, s.avg_std);
    mean_std(maxes, s.max_mean, s.max_std);
    s.norm_score = run.max_return != 0.0 ? s.avg_mean / run.max_return : 0.0;
    out.push_back(s);
  }
  std::sort(out.begin(), out.end(),
            [](const VariantSummary& a, const VariantSummary& b) { return a.variant < b.variant; });
  return out;
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string render_svg(const std::vector<CsvRun>& runs) {
  const int W = 880, H = 540;
  const int ml = 70, mr = 180, mt = 30, mb = 50;
  const double pw = W - ml - mr, ph = H - mt - mb;

  int max_ep = 1;
  double ymax = 1.0, ymin = 0.0;
  for (const auto& r : runs) {
    for (const auto& [seed, rows] : r.rows) {
      (void)seed;
      if (!rows.empty()) max_ep = std::max(max_ep, rows.back().episode);
      for (const auto& row : rows) {
        ymax = std::max(ymax, row.avg100);
        ymin = std::min(ymin, row.avg100);
      }
    }
    ymax = std::max(ymax, r.max_return);
  }
  ymax *= 1.05;

  auto X = [&](double ep) { return ml + pw * (ep - 1) / std::max(1, max_ep - 1); };
  auto Y = [&](double v) { return mt + ph * (1.0 - (v - ymin) / (ymax - ymin)); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  s << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  // axes
  s << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << (mt + ph)
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << ml << "\" y1=\"" << (mt + ph) << "\" x2=\"" << (ml + pw) << "\" y2=\""
    << (mt + ph) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    double v = ymin + (ymax - ymin) * i / 5.0;
    double y = Y(v);
    s << "<line x1=\"" << (ml - 4) << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\"" << y
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << (ml - 8) << "\" y=\"" << (y + 4)
      << "\" font-size=\"12\" text-anchor=\"end\">" << format_number(std::round(v * 100) / 100)
      << "</text>\n";
    int ep = 1 + (max_ep - 1) * i / 5;
    double x = X(ep);
    s << "<line x1=\"" << x << "\" y1=\"" << (mt + ph) << "\" x2=\"" << x << "\" y2=\""
      << (mt + ph + 4) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << x << "\" y=\"" << (mt + ph + 18)
      << "\" font-size=\"12\" text-anchor=\"middle\">" << ep << "</text>\n";
  }
  s << "<text x=\"" << (ml + pw / 2) << "\" y=\"" << (H - 12)
    << "\" font-size=\"13\" text-anchor=\"middle\">episode</text>\n";
  s << "<text x=\"18\" y=\"" << (mt + ph / 2)
    << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << (mt + ph / 2)
    << ")\">trailing mean score</text>\n";

  int ci = 0;
  for (const auto& r : runs) {
    // mean avg100 across seeds, episodewise
    int eps = 0;
    for (const auto& [seed, rows] : r.rows) {
      (void)seed;
      eps = std::max(eps, static_cast<int>(rows.size()));
    }
    std::vector<double> mean(eps, 0.0);
    std::vector<int> cnt(eps, 0);
    for (const auto& [seed, rows] : r.rows) {
      (void)seed;
      for (size_t i = 0; i < rows.size(); ++i) {
        mean[i] += rows[i].avg100;
        cnt[i] += 1;
      }
    }
    for (int i = 0; i < eps; ++i) mean[i] /= std::max(1, cnt[i]);

    const char* color = kPalette[ci % std::size(kPalette)];
    int stride = std::max(1, eps / 400);
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
    for (int i = 0; i < eps; i += stride)
      s << X(i + 1) << "," << Y(mean[i]) << " ";
    if ((eps - 1) % stride != 0) s << X(eps) << "," << Y(mean[eps - 1]) << " ";
    s << "\"/>\n";

    double ly = mt + 16 + 20 * ci;
    s << "<line x1=\"" << (ml + pw + 12) << "\" y1=\"" << ly << "\" x2=\"" << (ml + pw + 40)
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << (ml + pw + 46) << "\" y=\"" << (ly + 4) << "\" font-size=\"12\">"
      << r.variant << "</text>\n";
    ++ci;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace

void write_report(const std::string& dir) {
  auto paths = run_csv_paths(dir);
  std::vector<CsvRun> runs;
  for (const auto& p : paths) runs.push_back(parse_run_csv(p));
  std::sort(runs.begin(), runs.end(),
            [](const CsvRun& a, const CsvRun& b) { return a.variant < b.variant; });

  auto summaries = summarize_dir(dir);

  {
    std::ofstream out(dir + "/summary.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + dir + "/summary.csv");
    out << "variant,seeds,avg_mean,avg_std,max_mean,max_std,norm_score\n";
    for (const auto& s : summaries)
      out << s.variant << ',' << s.seeds << ',' << format_number(s.avg_mean) << ','
          << format_number(s.avg_std) << ',' << format_number(s.max_mean) << ','
          << format_number(s.max_std) << ',' << format_number(s.norm_score) << '\n';
  }

  {
    std::ofstream out(dir + "/summary.txt");
    if (!out) throw std::runtime_error("cannot write " + dir + "/summary.txt");
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-12s %5s %14s %14s %10s\n", "variant", "seeds",
                  "avg (last100)", "max seen", "norm");
    out << buf;
    out << std::string(60, '-') << "\n";
    for (const auto& s : summaries) {
      char avg[40], mx[40];
      std::snprintf(avg, sizeof avg, "%.2f (%.2f)", s.avg_mean, s.avg_std);
      std::snprintf(mx, sizeof mx, "%.2f (%.2f)", s.max_mean, s.max_std);
      std::snprintf(buf, sizeof buf, "%-12s %5d %14s %14s %10.3f\n", s.variant.c_str(), s.seeds,
                    avg, mx, s.norm_score);
      out << buf;
    }
  }

  {
    std::ofstream out(dir + "/curves.svg", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + dir + "/curves.svg");
    out << render_svg(runs);
  }
}

}  // namespace xtx
