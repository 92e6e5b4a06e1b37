#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cplab/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kDiverged = 1;
constexpr int kUsage = 2;
constexpr int kInvariant = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::string> out;
  std::optional<int> threads;
  bool trace = false;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Root seed");
  cmd->add_option("--replicas", o.replicas, "Replicas per grid point");
  cmd->add_option("--out", o.out, "Output path prefix");
  cmd->add_option("--threads", o.threads, "Worker threads");
  cmd->add_flag("--trace", o.trace, "Write per-replica NDJSON traces");
}

int run(const std::string& path, const Overrides& o, bool sweep) {
  cplab::ExperimentConfig c = cplab::load_config(path);
  if (o.seed) c.seed = *o.seed;
  if (o.replicas) c.replicas = *o.replicas;
  if (o.out) c.output = *o.out;
  if (o.threads) c.threads = *o.threads;
  if (o.trace) c.trace = true;
  if (sweep) {
    if (c.experiment != cplab::ExperimentKind::crossing && c.experiment != cplab::ExperimentKind::sweep)
      throw cplab::ConfigError("sweep needs a crossing or sweep config");
    c.experiment = cplab::ExperimentKind::sweep;
  }
  c.validate();
  const cplab::RunResult r = cplab::run_experiment(c);
  const cplab::WrittenFiles w = cplab::write_result(c, r);
  std::cout << "result " << w.json.string() << "\ncsv " << w.csv.string() << '\n';
  if (w.trace) std::cout << "trace " << w.trace->string() << '\n';
  std::cout << "config_hash " << r.record["config_hash"].get<std::string>() << '\n';
  if (r.violated()) {
    std::cerr << "invariant violation, forensics in " << w.forensics->string() << '\n';
    return kInvariant;
  }
  return kOk;
}

int replay(const std::string& path, std::optional<int> threads) {
  const cplab::ReplayVerdict v = cplab::replay_file(path, threads);
  std::cout << (v.match ? "match" : "divergence") << ' ' << v.config_hash << '\n';
  if (!v.match) std::cout << v.differences.dump(2) << '\n';
  return v.match ? kOk : kDiverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contact-process percolation experiments"};
  app.require_subcommand(1);

  std::string config_path, result_path;
  Overrides run_o, sweep_o;
  std::optional<int> replay_threads;

  auto* run_cmd = app.add_subcommand("run", "Run the experiment named in a config file");
  run_cmd->add_option("config", config_path, "INI config")->required();
  add_overrides(run_cmd, run_o);

  auto* sweep_cmd = app.add_subcommand("sweep", "Crossing estimates over the n and parameter grid");
  sweep_cmd->add_option("config", config_path, "INI config")->required();
  add_overrides(sweep_cmd, sweep_o);

  auto* replay_cmd = app.add_subcommand("replay", "Re-run a result file and compare its metrics");
  replay_cmd->add_option("result", result_path, "Result JSON")->required();
  replay_cmd->add_option("--threads", replay_threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return run(config_path, run_o, false);
    if (*sweep_cmd) return run(config_path, sweep_o, true);
    if (*replay_cmd) return replay(result_path, replay_threads);
  } catch (const cplab::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDiverged;
  }
  return kUsage;
}
