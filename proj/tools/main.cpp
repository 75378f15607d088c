#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dsparam/errors.hpp"
#include "dsparam/pipeline.hpp"

namespace {

// Exit codes: 0 success, 1 configuration/usage, 2 I/O, 3 provenance
// mismatch, 4 numerical failure.
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitProvenance = 3;
constexpr int kExitNumerical = 4;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* opt = cmd->add_option("--config", flags.config_path, "JSON configuration file");
  if (config_required) opt->required();
  cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", flags.seed, "master seed (overrides config)");
}

dsparam::PipelineConfig resolve_config(const CommonFlags& flags) {
  dsparam::PipelineConfig cfg;
  if (!flags.config_path.empty()) cfg = dsparam::load_config(flags.config_path);
  if (!flags.out_dir.empty()) cfg.output = flags.out_dir;
  if (flags.seed) cfg.seed = *flags.seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete stochastic parametrization of the two-scale Lorenz 96 system"};
  app.require_subcommand(1);

  CommonFlags sim_flags, fit_flags, val_flags, fc_flags, repro_flags;
  std::string scale = "desk";

  auto* sim = app.add_subcommand("simulate", "generate the full-model dataset");
  add_common(sim, sim_flags, true);
  auto* fit = app.add_subcommand("fit", "fit NARMAX and the POLYAR baseline to the dataset");
  add_common(fit, fit_flags, true);
  auto* val = app.add_subcommand("validate", "long-run statistics of both reduced models");
  add_common(val, val_flags, true);
  auto* fc = app.add_subcommand("forecast", "ensemble forecast skill of both reduced models");
  add_common(fc, fc_flags, true);
  auto* repro = app.add_subcommand("repro-paper", "full chain for both sampling intervals");
  add_common(repro, repro_flags, false);
  repro->add_option("--scale", scale, "paper or desk")
      ->check(CLI::IsMember({"paper", "desk"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;  // --help stays 0; usage errors are config errors
  }

  try {
    if (sim->parsed()) {
      dsparam::cmd_simulate(resolve_config(sim_flags));
    } else if (fit->parsed()) {
      dsparam::cmd_fit(resolve_config(fit_flags));
    } else if (val->parsed()) {
      dsparam::cmd_validate(resolve_config(val_flags));
    } else if (fc->parsed()) {
      dsparam::cmd_forecast(resolve_config(fc_flags));
    } else if (repro->parsed()) {
      dsparam::cmd_repro_paper(
          resolve_config(repro_flags),
          scale == "paper" ? dsparam::Scale::Paper : dsparam::Scale::Desk);
    }
  } catch (const dsparam::ProvenanceError& e) {
    std::fprintf(stderr, "provenance error: %s\n", e.what());
    return kExitProvenance;
  } catch (const dsparam::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const dsparam::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const dsparam::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return 0;
}
