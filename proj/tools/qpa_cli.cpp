// qpa: command-line front end for privacy amplification experiments.
//
// Exit status: 0 when every row passes, 1 when any row fails, 2 on usage
// errors and on any library error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qpa/scenario.hpp"

namespace {

struct Options {
  std::string scenario;
  std::string out;
  std::string format = "csv";
  std::optional<std::uint64_t> rng_seed;
  std::optional<std::uint64_t> cap_seeds;
  std::optional<std::uint64_t> samples;
  bool timing = false;
  std::size_t trials = 100;
  std::vector<std::string> inject;
  std::string dump_dir = ".";
};

void write_output(const qpa::Table& t, const Options& o) {
  const std::string text = o.format == "json" ? qpa::to_json(t) : qpa::to_csv(t);
  if (o.out.empty() || o.out == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) qpa::raise(qpa::ErrorKind::ValidationError, "--out: cannot write " + o.out);
  f << text;
}

qpa::Scenario scenario_for(const Options& o) {
  auto sc = qpa::load_scenario(o.scenario);
  if (o.rng_seed) sc.rng_seed = *o.rng_seed;
  return sc;
}

qpa::RunOptions run_options(const Options& o) {
  qpa::RunOptions r;
  r.cap_seeds = o.cap_seeds;
  r.monte_carlo_samples = o.samples;
  r.timing = o.timing;
  return r;
}

void require_source(const qpa::Scenario& sc, const std::string& path) {
  if (!sc.source) qpa::raise(qpa::ErrorKind::ValidationError, path + ": source: missing");
}

int run_report(const Options& o, qpa::RunMode mode) {
  const auto sc = scenario_for(o);
  require_source(sc, o.scenario);
  const auto t = qpa::report_table(sc, mode, run_options(o));
  write_output(t, o);
  return t.all_pass ? 0 : 1;
}

int run_rate(const Options& o) {
  const auto sc = scenario_for(o);
  require_source(sc, o.scenario);
  const auto t = qpa::rate_table(sc, run_options(o));
  write_output(t, o);
  return t.all_pass ? 0 : 1;
}

int run_aep(const Options& o) {
  const auto sc = scenario_for(o);
  if (!sc.aep) qpa::raise(qpa::ErrorKind::ValidationError, o.scenario + ": aep: missing");
  const auto t = qpa::aep_table(sc, run_options(o));
  write_output(t, o);
  return t.all_pass ? 0 : 1;
}

int run_lemmas(const Options& o) {
  if (!o.scenario.empty()) {
    const auto sc = scenario_for(o);
    if (!sc.replay) qpa::raise(qpa::ErrorKind::ValidationError, o.scenario + ": lemma: missing");
    const auto t = qpa::replay_table(sc, o.timing);
    write_output(t, o);
    return t.all_pass ? 0 : 1;
  }
  for (const auto& name : o.inject) (void)qpa::property_index(name);
  const auto run = qpa::property_table(o.trials, o.rng_seed.value_or(1), o.inject, o.timing);
  if (!run.failures.empty()) std::filesystem::create_directories(o.dump_dir);
  for (const auto& failure : run.failures) {
    const auto path = std::filesystem::path(o.dump_dir) / (failure["id"].get<std::string>() + ".json");
    std::ofstream f(path, std::ios::binary);
    if (!f) qpa::raise(qpa::ErrorKind::ValidationError, "--dump-dir: cannot write " + path.string());
    f << failure.dump(2) << "\n";
    std::cerr << "failure recorded: " << path.string() << "\n";
  }
  write_output(run.table, o);
  return run.table.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy amplification against quantum adversaries: bounds, exact distances and checks"};
  app.require_subcommand(1);
  Options o;

  auto add_output = [&](CLI::App* cmd) {
    cmd->add_option("--out,-o", o.out, "Output file (default: standard output)");
    cmd->add_option("--format,-f", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--rng-seed", o.rng_seed, "Override the scenario RNG seed")->envname("QPA_RNG_SEED");
    cmd->add_flag("--timing", o.timing, "Add a runtime_ms column (makes output non-deterministic)");
  };
  auto add_scenario = [&](CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--scenario,-s", o.scenario, "Scenario JSON file")->check(CLI::ExistingFile);
    if (required) opt->required();
  };
  auto add_caps = [&](CLI::App* cmd) {
    cmd->add_option("--cap-seeds", o.cap_seeds, "Largest seed space averaged exactly")->envname("QPA_CAP_SEEDS");
    cmd->add_option("--samples", o.samples, "Monte Carlo samples when the cap is exceeded")
        ->envname("QPA_SAMPLES")
        ->check(CLI::Range(std::uint64_t{2}, std::uint64_t{100'000'000}));
  };

  auto* bound = app.add_subcommand("bound", "Bounds, smooth entropies and key length at the base point");
  auto* exact = app.add_subcommand("exact", "Exact seed-averaged key distance at the base point");
  auto* sweep = app.add_subcommand("sweep", "All sweep points; samples when a seed space exceeds the cap");
  for (auto* cmd : {bound, exact, sweep}) {
    add_scenario(cmd, true);
    add_output(cmd);
    add_caps(cmd);
  }
  auto* rate = app.add_subcommand("rate", "Asymptotic rate H(Z|E) per source parameter");
  add_scenario(rate, true);
  add_output(rate);
  auto* aep = app.add_subcommand("aep", "Smooth entropy rates of product states");
  add_scenario(aep, true);
  add_output(aep);
  auto* lemmas = app.add_subcommand("verify-lemmas", "Randomized checks of the supporting inequalities");
  add_scenario(lemmas, false);
  add_output(lemmas);
  lemmas->add_option("--trials,-n", o.trials, "Trials per property")
      ->envname("QPA_TRIALS")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1'000'000}));
  lemmas->add_option("--inject-failure", o.inject, "Tamper with a property to exercise failure reporting");
  lemmas->add_option("--dump-dir", o.dump_dir, "Directory for failure replay files")->envname("QPA_DUMP_DIR");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*bound) return run_report(o, qpa::RunMode::Bound);
    if (*exact) return run_report(o, qpa::RunMode::Exact);
    if (*sweep) return run_report(o, qpa::RunMode::Sweep);
    if (*rate) return run_rate(o);
    if (*aep) return run_aep(o);
    return run_lemmas(o);
  } catch (const qpa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
