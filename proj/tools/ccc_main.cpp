// Command-line front end. Parses flags into string key/value settings and
// drives the engine exclusively through the C API, the same way an external
// embedding would. Exit codes: 0 success, 1 property-suite or run failure,
// 2 usage error, 3 I/O error.
#include <cstdio>
#include <ctime>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "ccc.h"

namespace {

int exit_code_for(ccc_status status) {
  switch (status) {
    case CCC_OK:
      return 0;
    case CCC_ERR_PROPERTY:
    case CCC_ERR_DIVERGENCE:
    case CCC_ERR_INTERNAL:
      return 1;
    case CCC_ERR_CONTRACT:
    case CCC_ERR_CONFIG:
    case CCC_ERR_UNSUPPORTED:
      return 2;
    case CCC_ERR_IO:
      return 3;
  }
  return 1;
}

int fail(ccc_status status) {
  std::fprintf(stderr, "error: %s\n", ccc_last_error());
  return exit_code_for(status);
}

// The "seed = " line of the [run] section, for the default directory name.
std::string seed_from_config(ccc_config* cfg) {
  const std::string ini = ccc_config_serialize(cfg);
  const size_t run = ini.find("[run]");
  if (run == std::string::npos) return "0";
  const size_t pos = ini.find("seed = ", run);
  if (pos == std::string::npos) return "0";
  const size_t start = pos + 7;
  const size_t end = ini.find('\n', start);
  return ini.substr(start, end - start);
}

std::string default_out_dir(const std::string& command, const std::string& seed) {
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  localtime_r(&now, &tm);
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);
  return "runs/" + std::string(stamp) + "_seed" + seed + "_" + command;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Social-dilemma engine: self-play training, cooperation thresholds, "
               "matches, tournaments, and long-run guarantee checks."};
  app.require_subcommand(1);

  std::string config_file, out_dir, seed, threads;
  app.add_option("--config", config_file, "INI config file ([section] headers, key = value)");
  app.add_option("--seed", seed, "master seed (overrides run.seed)");
  app.add_option("--out", out_dir, "output directory (default: runs/<timestamp>_seed<S>_<cmd>)");
  app.add_option("--threads", threads, "worker threads (overrides run.threads)");

  // Convenience flags are plain config overrides; --config plus overrides
  // and a pure flag invocation resolve identically.
  std::vector<std::tuple<CLI::Option*, std::string, std::shared_ptr<std::string>>> bindings;
  auto add_kv = [&bindings](CLI::App* sub, const std::string& flag, const std::string& key,
                            const std::string& help) {
    // Global flags (--out, --seed, ...) may appear after the subcommand.
    sub->fallthrough();
    auto value = std::make_shared<std::string>();
    CLI::Option* opt = sub->add_option(flag, *value, help);
    bindings.emplace_back(opt, key, value);
  };

  CLI::App* train = app.add_subcommand("train", "self-play training; writes checkpoints + curves");
  add_kv(train, "--env", "run.env", "matrix_pd | matrix_gift | fishery | coins");
  add_kv(train, "--scheme", "train.scheme", "selfish | prosocial");
  add_kv(train, "--batches", "train.batches", "training batches");
  add_kv(train, "--batch-size", "train.batch_size", "episodes per batch");
  add_kv(train, "--episode-length", "train.episode_length", "turns per training episode");
  add_kv(train, "--learning-rate", "train.learning_rate", "step size (auto: per architecture)");
  add_kv(train, "--hidden", "train.hidden", "hidden layer widths, e.g. 32 or 64,32");
  add_kv(train, "--pool-size", "train.pool_size", "independent pairs to train");

  CLI::App* thresholds =
      app.add_subcommand("thresholds", "precompute the cooperation threshold schedule");
  add_kv(thresholds, "--env", "run.env", "environment");
  add_kv(thresholds, "--horizon", "thresholds.horizon", "schedule length in turns");
  add_kv(thresholds, "--pi-c", "thresholds.pi_c", "cooperative policy checkpoint (auto on matrix)");
  add_kv(thresholds, "--pi-d", "thresholds.pi_d", "punitive policy checkpoint (auto on matrix)");
  add_kv(thresholds, "--alpha", "agent.alpha", "threshold mixing weight");
  add_kv(thresholds, "--q", "agent.q", "cooperative-bank quantile");
  add_kv(thresholds, "--k", "agent.k", "rollout games per bank");

  CLI::App* match = app.add_subcommand("match", "one strategy pair, repeated games");
  add_kv(match, "--env", "run.env", "environment");
  add_kv(match, "--p1", "match.p1", "seat-0 strategy: C | D | CCC | amTFT");
  add_kv(match, "--p2", "match.p2", "seat-1 strategy");
  add_kv(match, "--games", "match.games", "independent games");
  add_kv(match, "--length", "match.length", "turns per game");
  add_kv(match, "--pool-dir", "match.pool_dir", "trained pools (prosocial/ + selfish/)");

  CLI::App* tournament = app.add_subcommand("tournament", "full strategy cross matrix + metrics");
  add_kv(tournament, "--env", "run.env", "environment");
  add_kv(tournament, "--strategies", "tournament.strategies", "comma list, e.g. C,D,CCC,amTFT");
  add_kv(tournament, "--games-per-cell", "tournament.games_per_cell", "games per matrix cell");
  add_kv(tournament, "--length", "tournament.length", "turns per game");
  add_kv(tournament, "--pool-dir", "tournament.pool_dir", "trained pools (prosocial/ + selfish/)");

  CLI::App* verify =
      app.add_subcommand("verify-theorem", "check the long-run cooperation guarantees");
  add_kv(verify, "--env", "run.env", "matrix environment");
  add_kv(verify, "--horizon", "verify.horizon", "turns per episode");
  add_kv(verify, "--seeds", "verify.seeds", "independent seeds per property");
  add_kv(verify, "--tolerance", "verify.tolerance", "rate tolerance");
  add_kv(verify, "--pi-c", "verify.pi_c", "always_c | always_d | checkpoint path");
  add_kv(verify, "--pi-d", "verify.pi_d", "always_d | always_c | checkpoint path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  struct ConfigDeleter {
    void operator()(ccc_config* c) const { ccc_config_free(c); }
  };
  std::unique_ptr<ccc_config, ConfigDeleter> cfg(ccc_config_new());
  if (!cfg) {
    std::fprintf(stderr, "error: out of memory\n");
    return 1;
  }

  if (!config_file.empty())
    if (const ccc_status s = ccc_config_load_file(cfg.get(), config_file.c_str()); s != CCC_OK)
      return fail(s);
  for (const auto& [opt, key, value] : bindings)
    if (opt->count() > 0)
      if (const ccc_status s = ccc_config_set(cfg.get(), key.c_str(), value->c_str()); s != CCC_OK)
        return fail(s);
  if (!seed.empty())
    if (const ccc_status s = ccc_config_set(cfg.get(), "run.seed", seed.c_str()); s != CCC_OK)
      return fail(s);
  if (!threads.empty())
    if (const ccc_status s = ccc_config_set(cfg.get(), "run.threads", threads.c_str());
        s != CCC_OK)
      return fail(s);

  const std::string command = app.get_subcommands().front()->get_name();
  const std::string out =
      out_dir.empty() ? default_out_dir(command, seed_from_config(cfg.get())) : out_dir;

  ccc_status status = CCC_ERR_INTERNAL;
  if (command == "train")
    status = ccc_run_train(cfg.get(), out.c_str());
  else if (command == "thresholds")
    status = ccc_run_thresholds(cfg.get(), out.c_str());
  else if (command == "match")
    status = ccc_run_match(cfg.get(), out.c_str());
  else if (command == "tournament")
    status = ccc_run_tournament(cfg.get(), out.c_str());
  else if (command == "verify-theorem")
    status = ccc_run_verify_theorem(cfg.get(), out.c_str());

  if (status != CCC_OK) {
    const int code = fail(status);
    std::fprintf(stderr, "run directory: %s\n", out.c_str());
    return code;
  }
  std::printf("results written to %s\n", out.c_str());
  return 0;
}
