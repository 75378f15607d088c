#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsparam/forecast.hpp"
#include "dsparam/lorenz96.hpp"
#include "dsparam/narmax.hpp"
#include "dsparam/reduction.hpp"

namespace dsparam {

struct StatsSection {
  double acf_lag_time = 5.0;  // autocorrelation horizon in time units
  int ks_stride = 1;          // subsampling stride for the KS statistic
  int pdf_points = 512;
};

struct ForecastSection {
  int segments = 500;
  double horizon = 10.0;  // time units per verification segment
  std::vector<int> ensemble_sizes = {1, 5, 20};
};

struct FitSection {
  double grad_tol = 1e-6;
  int max_iters = 500;
  std::vector<double> convergence_fractions;  // empty: skip the diagnostic
};

// Everything a pipeline stage needs, loadable from a JSON file. The single
// top-level seed is the master; each stage derives its own streams from it,
// so the model section carries no seed of its own.
struct PipelineConfig {
  L96Config model;
  double delta = 0.05;
  long observations = 100000;
  OneStepScheme reduced_scheme = OneStepScheme::Rk4;
  NarmaxStructure narmax;
  int polyar_degree = 5;
  StatsSection stats;
  ForecastSection forecast;
  FitSection fit;
  std::string output = "out";
  std::uint64_t seed = 0;

  void validate() const;        // throws ConfigError with the offending field
  ReducedMap reduced_map() const;
};

// Strict JSON loader: unknown keys anywhere are rejected, every violation
// names the field. Missing keys fall back to the defaults above.
PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(const std::string& json_text);

// Canonical serialization of a config; its hash ties artifacts to the
// exact configuration that produced them.
std::string config_to_json(const PipelineConfig& cfg);
std::string config_hash(const PipelineConfig& cfg);

// Pipeline stages. Each writes its artifacts under cfg.output and embeds
// the config hash; consumers verify hashes before trusting inputs and
// throw ProvenanceError on mismatch (stale or foreign artifacts).
void cmd_simulate(const PipelineConfig& cfg);
void cmd_fit(const PipelineConfig& cfg);
void cmd_validate(const PipelineConfig& cfg);
void cmd_forecast(const PipelineConfig& cfg);

enum class Scale { Paper, Desk };

// Chains simulate/fit/validate/forecast for both sampling intervals of the
// reference study (0.01 and 0.05) with the matching model structures,
// under out/delta_0.01 and out/delta_0.05. Desk scale shrinks the dataset
// and ensemble counts to laptop size; paper scale reproduces the full runs.
void cmd_repro_paper(const PipelineConfig& base, Scale scale);

// The derived per-interval config used by repro-paper (exposed for tests).
PipelineConfig repro_paper_config(const PipelineConfig& base, double delta, Scale scale);

}  // namespace dsparam
