// Batch front door: every estimator behind one reproducible CLI.
//
//   panelcf <subcommand> --config run.json [--seed N] [--threads N]
//           [--out DIR] [--outcome NAME]...
//
// Precedence for the shared settings: config file < environment < flag.
// Environment overrides use the PANELCF_ prefix: PANELCF_SEED,
// PANELCF_THREADS, PANELCF_OUT, PANELCF_OUTCOME (comma-separated).
// Exit status: 0 success, 1 configuration/input failure, 2 estimation failure.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "panelcf/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"panel counterfactual estimation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", panelcf::version_block());

  std::string config_path;
  std::string seed_str;
  unsigned threads = 0;
  std::string out_dir;
  std::vector<std::string> outcomes;

  const std::vector<std::string> subcommands{
      "validate",      "scm",          "did",          "event-study",
      "placebo-space", "placebo-param", "placebo-time", "trend-test",
      "loo",           "gsynth",       "mc",           "lasso-scm",
      "sdid",          "simulate",     "correlate",    "report"};
  static const std::map<std::string, std::string> descriptions{
      {"validate", "load the panel and report balance and per-variable summaries"},
      {"scm", "synthetic control fit: donor weights, counterfactual path, gaps"},
      {"did", "two-way fixed-effects estimates, static and dynamic"},
      {"event-study", "relative-year coefficient path around the treatment year"},
      {"placebo-space", "treatment reassigned to each donor; rank-based p-value"},
      {"placebo-param", "stacked placebo-gap regression with sampled placebo draws"},
      {"placebo-time", "treatment backdated into the pre-period as a falsification"},
      {"trend-test", "structural-break tests on the treated path and the gap"},
      {"loo", "leave-one-donor-out sensitivity of the synthetic control"},
      {"gsynth", "interactive fixed-effects (factor model) counterfactual"},
      {"mc", "nuclear-norm matrix-completion counterfactual"},
      {"lasso-scm", "signed-weight synthetic control with an L1 penalty"},
      {"sdid", "synthetic difference-in-differences with unit and time weights"},
      {"simulate", "generate a seeded factor-model panel with known effects"},
      {"correlate", "cross-series correlations and first-principal-component composite"},
      {"report", "full battery: every estimator on the configured outcomes"}};

  for (const auto& name : subcommands) {
    auto* sub = app.add_subcommand(name, descriptions.at(name));
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--seed", seed_str, "random seed (unsigned 64-bit)");
    sub->add_option("--threads", threads, "worker-thread cap for inner loops");
    sub->add_option("--out", out_dir, "output directory for result documents");
    sub->add_option("--outcome", outcomes,
                    "outcome variable (repeatable; replaces the configured list)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  panelcf::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = panelcf::load_config(config_path);
    panelcf::apply_env_overrides(cfg);
    if (!seed_str.empty()) {
      char* end = nullptr;
      const unsigned long long s = std::strtoull(seed_str.c_str(), &end, 10);
      if (!end || *end != '\0')
        throw panelcf::ConfigError("--seed is not an unsigned integer");
      cfg.seed = static_cast<std::uint64_t>(s);
    }
    if (threads != 0) cfg.threads = threads;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!outcomes.empty()) cfg.outcomes = outcomes;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "panelcf: %s\n", e.what());
    return panelcf::kExitValidation;
  }

  return panelcf::run_subcommand(cmd, std::move(cfg));
}
