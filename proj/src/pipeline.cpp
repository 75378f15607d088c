#include "dsparam/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>

#include <json.hpp>

#include "dsparam/errors.hpp"
#include "dsparam/io.hpp"
#include "dsparam/polyar.hpp"
#include "dsparam/rng.hpp"
#include "dsparam/stats.hpp"

namespace dsparam {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stage-local seed streams derived from the master seed.
enum SeedStream : std::uint64_t {
  kSeedDataset = 1,
  kSeedNarmaxSim = 2,
  kSeedPolyarSim = 3,
  kSeedForecastTruth = 4,
  kSeedForecastNarmax = 5,
  kSeedForecastPolyar = 6,
};

void reject_unknown_keys(const json& obj, const std::string& prefix,
                         std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* k) { return it.key() == k; }) == allowed.end())
      throw ConfigError("config: unknown key " + prefix + it.key());
  }
}

template <typename T>
void read_field(const json& obj, const std::string& prefix, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: field " + prefix + key + " has the wrong type");
  }
}

OneStepScheme scheme_from_string(const std::string& s) {
  if (s == "euler") return OneStepScheme::Euler;
  if (s == "rk2") return OneStepScheme::Rk2;
  if (s == "rk4") return OneStepScheme::Rk4;
  throw ConfigError("config: reduced_scheme must be one of euler, rk2, rk4");
}

std::string scheme_to_string(OneStepScheme s) {
  switch (s) {
    case OneStepScheme::Euler: return "euler";
    case OneStepScheme::Rk2: return "rk2";
    case OneStepScheme::Rk4: return "rk4";
  }
  return "rk4";
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

}  // namespace

void PipelineConfig::validate() const {
  model.validate();
  if (!(delta > 0.0)) throw ConfigError("config: delta must be > 0");
  const double ratio = delta / model.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 || ratio < 0.5)
    throw ConfigError("config: delta must be a positive integer multiple of model.dt");
  if (observations < 3) throw ConfigError("config: observations must be >= 3");
  narmax.validate();
  if (polyar_degree < 0 || polyar_degree > 12)
    throw ConfigError("config: polyar.degree must be in 0..12");
  if (!(stats.acf_lag_time > 0.0)) throw ConfigError("config: stats.acf_lag_time must be > 0");
  if (stats.ks_stride < 1) throw ConfigError("config: stats.ks_stride must be >= 1");
  if (stats.pdf_points < 2) throw ConfigError("config: stats.pdf_points must be >= 2");
  if (forecast.segments < 1) throw ConfigError("config: forecast.segments must be >= 1");
  if (!(forecast.horizon > 0.0)) throw ConfigError("config: forecast.horizon must be > 0");
  if (forecast.ensemble_sizes.empty())
    throw ConfigError("config: forecast.ensemble_sizes must not be empty");
  for (int n : forecast.ensemble_sizes)
    if (n < 1) throw ConfigError("config: forecast.ensemble_sizes entries must be >= 1");
  if (!(fit.grad_tol > 0.0)) throw ConfigError("config: fit.grad_tol must be > 0");
  if (fit.max_iters < 1) throw ConfigError("config: fit.max_iters must be >= 1");
  for (std::size_t i = 0; i < fit.convergence_fractions.size(); ++i) {
    const double f = fit.convergence_fractions[i];
    if (!(f > 0.0) || f > 1.0)
      throw ConfigError("config: fit.convergence_fractions must lie in (0, 1]");
    if (i > 0 && f <= fit.convergence_fractions[i - 1])
      throw ConfigError("config: fit.convergence_fractions must be strictly increasing");
  }
  if (output.empty()) throw ConfigError("config: output must not be empty");
}

ReducedMap PipelineConfig::reduced_map() const {
  ReducedMap m;
  m.K = model.K;
  m.F = model.F;
  m.delta = delta;
  m.scheme = reduced_scheme;
  return m;
}

PipelineConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: json parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  PipelineConfig cfg;
  reject_unknown_keys(j, "", {"model", "delta", "observations", "reduced_scheme", "narmax",
                              "polyar", "stats", "forecast", "fit", "output", "seed"});
  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown_keys(m, "model.", {"K", "J", "F", "eps", "h_x", "h_y", "dt", "spinup"});
    read_field(m, "model.", "K", cfg.model.K);
    read_field(m, "model.", "J", cfg.model.J);
    read_field(m, "model.", "F", cfg.model.F);
    read_field(m, "model.", "eps", cfg.model.eps);
    read_field(m, "model.", "h_x", cfg.model.h_x);
    read_field(m, "model.", "h_y", cfg.model.h_y);
    read_field(m, "model.", "dt", cfg.model.dt);
    read_field(m, "model.", "spinup", cfg.model.spinup);
  }
  read_field(j, "", "delta", cfg.delta);
  read_field(j, "", "observations", cfg.observations);
  if (j.contains("reduced_scheme")) {
    std::string s;
    read_field(j, "", "reduced_scheme", s);
    cfg.reduced_scheme = scheme_from_string(s);
  }
  if (j.contains("narmax")) {
    const json& n = j.at("narmax");
    reject_unknown_keys(n, "narmax.", {"p", "r", "s", "q", "d_x", "d_R"});
    read_field(n, "narmax.", "p", cfg.narmax.p);
    read_field(n, "narmax.", "r", cfg.narmax.r);
    read_field(n, "narmax.", "s", cfg.narmax.s);
    read_field(n, "narmax.", "q", cfg.narmax.q);
    read_field(n, "narmax.", "d_x", cfg.narmax.d_x);
    read_field(n, "narmax.", "d_R", cfg.narmax.d_R);
  }
  if (j.contains("polyar")) {
    const json& p = j.at("polyar");
    reject_unknown_keys(p, "polyar.", {"degree"});
    read_field(p, "polyar.", "degree", cfg.polyar_degree);
  }
  if (j.contains("stats")) {
    const json& s = j.at("stats");
    reject_unknown_keys(s, "stats.", {"acf_lag_time", "ks_stride", "pdf_points"});
    read_field(s, "stats.", "acf_lag_time", cfg.stats.acf_lag_time);
    read_field(s, "stats.", "ks_stride", cfg.stats.ks_stride);
    read_field(s, "stats.", "pdf_points", cfg.stats.pdf_points);
  }
  if (j.contains("forecast")) {
    const json& f = j.at("forecast");
    reject_unknown_keys(f, "forecast.", {"segments", "horizon", "ensemble_sizes"});
    read_field(f, "forecast.", "segments", cfg.forecast.segments);
    read_field(f, "forecast.", "horizon", cfg.forecast.horizon);
    read_field(f, "forecast.", "ensemble_sizes", cfg.forecast.ensemble_sizes);
  }
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    reject_unknown_keys(f, "fit.", {"grad_tol", "max_iters", "convergence_fractions"});
    read_field(f, "fit.", "grad_tol", cfg.fit.grad_tol);
    read_field(f, "fit.", "max_iters", cfg.fit.max_iters);
    read_field(f, "fit.", "convergence_fractions", cfg.fit.convergence_fractions);
  }
  read_field(j, "", "output", cfg.output);
  read_field(j, "", "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  return parse_config(io::read_file(path));
}

std::string config_to_json(const PipelineConfig& cfg) {
  json j;
  j["model"] = {{"K", cfg.model.K},     {"J", cfg.model.J},
                {"F", cfg.model.F},     {"eps", cfg.model.eps},
                {"h_x", cfg.model.h_x}, {"h_y", cfg.model.h_y},
                {"dt", cfg.model.dt},   {"spinup", cfg.model.spinup}};
  j["delta"] = cfg.delta;
  j["observations"] = cfg.observations;
  j["reduced_scheme"] = scheme_to_string(cfg.reduced_scheme);
  j["narmax"] = {{"p", cfg.narmax.p}, {"r", cfg.narmax.r},     {"s", cfg.narmax.s},
                 {"q", cfg.narmax.q}, {"d_x", cfg.narmax.d_x}, {"d_R", cfg.narmax.d_R}};
  j["polyar"] = {{"degree", cfg.polyar_degree}};
  j["stats"] = {{"acf_lag_time", cfg.stats.acf_lag_time},
                {"ks_stride", cfg.stats.ks_stride},
                {"pdf_points", cfg.stats.pdf_points}};
  j["forecast"] = {{"segments", cfg.forecast.segments},
                   {"horizon", cfg.forecast.horizon},
                   {"ensemble_sizes", cfg.forecast.ensemble_sizes}};
  j["fit"] = {{"grad_tol", cfg.fit.grad_tol},
              {"max_iters", cfg.fit.max_iters},
              {"convergence_fractions", cfg.fit.convergence_fractions}};
  j["output"] = cfg.output;
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

std::string config_hash(const PipelineConfig& cfg) {
  // The output directory does not influence results, so moving artifacts
  // wholesale must not invalidate them.
  PipelineConfig canon = cfg;
  canon.output = "";
  return io::hash_hex(io::fnv1a(config_to_json(canon)));
}

namespace {

struct CheckedDataset {
  Eigen::MatrixXd x;       // observations x K
  std::string data_hash;   // hex hash of dataset.csv
};

// Loads out/dataset.csv, verifying both directions of provenance: the file
// matches its manifest (not stale or edited) and the manifest matches the
// current configuration (not produced by a different one).
CheckedDataset load_dataset_checked(const PipelineConfig& cfg) {
  const std::string csv_path = join(cfg.output, "dataset.csv");
  const std::string meta_path = join(cfg.output, "dataset_meta.json");
  json meta;
  try {
    meta = json::parse(io::read_file(meta_path));
  } catch (const json::exception& e) {
    throw IoError(std::string("dataset_meta.json: parse error: ") + e.what());
  }
  std::string meta_cfg;
  std::string meta_hash;
  try {
    meta_cfg = meta.at("config_hash").get<std::string>();
    meta_hash = meta.at("data_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw IoError(std::string("dataset_meta.json: missing field: ") + e.what());
  }
  if (meta_cfg != config_hash(cfg))
    throw ProvenanceError("dataset was produced by a different configuration (" + meta_cfg +
                          " != " + config_hash(cfg) + "); re-run simulate");
  const std::string actual = io::hash_hex(io::hash_file(csv_path));
  if (actual != meta_hash)
    throw ProvenanceError("dataset.csv does not match its manifest hash (" + actual +
                          " != " + meta_hash + "); re-run simulate");

  const io::CsvData csv = io::read_csv(csv_path);
  if (csv.header.size() != static_cast<std::size_t>(cfg.model.K + 1) || csv.header[0] != "time")
    throw IoError("dataset.csv: unexpected header");
  if (csv.values.rows() != cfg.observations)
    throw IoError("dataset.csv: row count does not match the configuration");
  CheckedDataset out;
  out.x = csv.values.rightCols(cfg.model.K);
  out.data_hash = actual;
  return out;
}

io::ArtifactMeta make_meta(const PipelineConfig& cfg, const std::string& data_hash) {
  io::ArtifactMeta meta;
  meta.delta = cfg.delta;
  meta.seed = cfg.seed;
  meta.data_hash = data_hash;
  meta.config_hash = config_hash(cfg);
  return meta;
}

void check_params_meta(const io::ArtifactMeta& meta, const PipelineConfig& cfg,
                       const std::string& data_hash, const std::string& what) {
  if (meta.config_hash != config_hash(cfg))
    throw ProvenanceError(what + " was fit under a different configuration; re-run fit");
  if (meta.data_hash != data_hash)
    throw ProvenanceError(what + " was fit to a different dataset; re-run fit");
}

// Statistics are reported for the first component (the model is
// translation-equivariant, so the choice is arbitrary but fixed).
json stats_row(const SummaryStats& st) {
  return json{{"mean", st.mean}, {"std", st.std}};
}

void write_model_stats(const PipelineConfig& cfg, const std::string& model,
                       const SummaryStats& st, const Eigen::VectorXd& ccf) {
  const std::string hash_comment = "config_hash=" + config_hash(cfg);
  const int max_lag = static_cast<int>(st.acf.size()) - 1;

  Eigen::MatrixXd pdf(st.pdf_grid.size(), 2);
  pdf.col(0) = st.pdf_grid;
  pdf.col(1) = st.pdf_density;
  io::write_csv(join(cfg.output, model + "_pdf.csv"), {hash_comment}, {"x", "density"}, pdf);

  Eigen::MatrixXd acf(st.acf.size(), 2);
  for (int l = 0; l <= max_lag; ++l) {
    acf(l, 0) = l * cfg.delta;
    acf(l, 1) = st.acf[l];
  }
  io::write_csv(join(cfg.output, model + "_acf.csv"), {hash_comment}, {"lag", "value"}, acf);

  Eigen::MatrixXd ccf_rows(ccf.size(), 2);
  for (Eigen::Index i = 0; i < ccf.size(); ++i) {
    ccf_rows(i, 0) = (static_cast<double>(i) - max_lag) * cfg.delta;
    ccf_rows(i, 1) = ccf[i];
  }
  io::write_csv(join(cfg.output, model + "_ccf.csv"), {hash_comment}, {"lag", "value"}, ccf_rows);
}

Eigen::VectorXd subsample(const Eigen::VectorXd& v, int stride) {
  if (stride <= 1) return v;
  const Eigen::Index n = (v.size() + stride - 1) / stride;
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = v[i * stride];
  return out;
}

}  // namespace

void cmd_simulate(const PipelineConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.output);

  L96Config model = cfg.model;
  model.seed = derive_seed(cfg.seed, kSeedDataset);
  const double total_time = model.spinup + (cfg.observations - 1) * cfg.delta;
  const SeriesSet data = generate_dataset(model, total_time, cfg.delta);

  Eigen::MatrixXd rows(data.x_obs.rows(), cfg.model.K + 1);
  for (Eigen::Index i = 0; i < data.x_obs.rows(); ++i) rows(i, 0) = i * cfg.delta;
  rows.rightCols(cfg.model.K) = data.x_obs;
  std::vector<std::string> header{"time"};
  for (int k = 1; k <= cfg.model.K; ++k) header.push_back("x" + std::to_string(k));
  const std::string csv_path = join(cfg.output, "dataset.csv");
  io::write_csv(csv_path, {"config_hash=" + config_hash(cfg)}, header, rows);

  json meta;
  meta["config_hash"] = config_hash(cfg);
  meta["data_hash"] = io::hash_hex(io::hash_file(csv_path));
  meta["delta"] = cfg.delta;
  meta["observations"] = cfg.observations;
  meta["seed"] = cfg.seed;
  io::write_file(join(cfg.output, "dataset_meta.json"), meta.dump(2) + "\n");
  std::printf("simulate: wrote %ld observations of %d components to %s\n",
              static_cast<long>(data.x_obs.rows()), cfg.model.K, csv_path.c_str());
}

void cmd_fit(const PipelineConfig& cfg) {
  cfg.validate();
  const CheckedDataset data = load_dataset_checked(cfg);
  const ReducedMap map = cfg.reduced_map();

  SeriesSet series;
  series.delta = cfg.delta;
  series.x_obs = data.x;
  series.z = extract_discrepancy(map, data.x);

  FitOptions opts;
  opts.grad_tol = cfg.fit.grad_tol;
  opts.max_iters = cfg.fit.max_iters;
  const FitReport report = fit(cfg.narmax, series, map, opts);
  const io::ArtifactMeta meta = make_meta(cfg, data.data_hash);
  io::write_file(join(cfg.output, "narmax_params.json"),
                 io::narmax_params_to_json(cfg.narmax, report.params, meta));

  json fit_report;
  fit_report["loglik"] = report.loglik;
  fit_report["grad_norm"] = report.grad_norm;
  fit_report["iterations"] = report.iterations;
  fit_report["converged"] = report.converged;
  fit_report["ma_invertible"] = report.ma_invertible;
  fit_report["warning"] = report.warning;
  fit_report["config_hash"] = config_hash(cfg);
  io::write_file(join(cfg.output, "narmax_fit_report.json"), fit_report.dump(2) + "\n");

  const PolyarParams polyar = fit_polyar(cfg.model.F, data.x, cfg.delta, cfg.polyar_degree);
  io::write_file(join(cfg.output, "polyar_params.json"),
                 io::polyar_params_to_json(polyar, meta));
  json polyar_report;
  polyar_report["samples"] = static_cast<long>((data.x.rows() - 1) * data.x.cols());
  polyar_report["config_hash"] = config_hash(cfg);
  io::write_file(join(cfg.output, "polyar_fit_report.json"), polyar_report.dump(2) + "\n");

  if (!cfg.fit.convergence_fractions.empty()) {
    const ConvergenceDiagnostic diag =
        convergence_diagnostic(cfg.narmax, series, map, cfg.fit.convergence_fractions, opts);
    json jd;
    jd["fractions"] = diag.fractions;
    jd["labels"] = cfg.narmax.coeff_labels();
    std::vector<std::vector<double>> paths;
    for (Eigen::Index i = 0; i < diag.coeff_paths.rows(); ++i) {
      paths.emplace_back(diag.coeff_paths.row(i).data(),
                         diag.coeff_paths.row(i).data() + diag.coeff_paths.cols());
    }
    jd["coeff_paths"] = paths;
    jd["sigma2_path"] = diag.sigma2_path;
    jd["coeff_converged"] = diag.coeff_converged;
    jd["converged"] = diag.converged;
    jd["config_hash"] = config_hash(cfg);
    io::write_file(join(cfg.output, "narmax_convergence.json"), jd.dump(2) + "\n");
  }

  std::printf("fit: narmax loglik=%.6g sigma2=%.6g iters=%d%s; polyar phi=%.4f sigma=%.4f\n",
              report.loglik, report.params.sigma2, report.iterations,
              report.converged ? "" : " (not converged)", polyar.phi, polyar.sigma);
}

void cmd_validate(const PipelineConfig& cfg) {
  cfg.validate();
  const CheckedDataset data = load_dataset_checked(cfg);
  const ReducedMap map = cfg.reduced_map();
  const long n = data.x.rows();

  NarmaxStructure st;
  NarmaxParams nx_params;
  io::ArtifactMeta nx_meta;
  io::narmax_params_from_json(io::read_file(join(cfg.output, "narmax_params.json")), st,
                              nx_params, nx_meta);
  check_params_meta(nx_meta, cfg, data.data_hash, "narmax_params.json");

  PolyarParams pa_params;
  io::ArtifactMeta pa_meta;
  io::polyar_params_from_json(io::read_file(join(cfg.output, "polyar_params.json")), pa_params,
                              pa_meta);
  check_params_meta(pa_meta, cfg, data.data_hash, "polyar_params.json");

  // Long closed-loop runs of both reduced models, same length as the data.
  const int n0 = st.init_steps();
  const SeriesSet nx_sim = simulate(st, nx_params, map, data.x.topRows(n0), n - n0,
                                    derive_seed(cfg.seed, kSeedNarmaxSim));

  const Eigen::MatrixXd z_head = estimate_z_fd(cfg.model.F, data.x.topRows(2), cfg.delta);
  Eigen::VectorXd eta0(cfg.model.K);
  for (int k = 0; k < cfg.model.K; ++k)
    eta0[k] = z_head(0, k) - eval_poly(pa_params.poly, data.x(0, k));
  const SeriesSet pa_sim = simulate_polyar(pa_params, cfg.model.F, Eigen::VectorXd(data.x.row(0)),
                                           eta0, n - 1, derive_seed(cfg.seed, kSeedPolyarSim));

  const int max_lag = std::min<long>(static_cast<long>(std::lround(cfg.stats.acf_lag_time / cfg.delta)),
                                     n - 2);
  PdfSpec pdf{cfg.stats.pdf_points};
  const Eigen::VectorXd full0 = data.x.col(0);
  const Eigen::VectorXd nx0 = nx_sim.x_obs.col(0);
  const Eigen::VectorXd pa0 = pa_sim.x_obs.col(0);

  SummaryStats full_stats = summarize(full0, max_lag, pdf);
  SummaryStats nx_stats = summarize(nx0, max_lag, pdf);
  SummaryStats pa_stats = summarize(pa0, max_lag, pdf);
  full_stats.ccf = cross_correlation(full0, data.x.col(1), max_lag);
  nx_stats.ccf = cross_correlation(nx0, nx_sim.x_obs.col(1), max_lag);
  pa_stats.ccf = cross_correlation(pa0, pa_sim.x_obs.col(1), max_lag);

  const int stride = cfg.stats.ks_stride;
  const double d_nx = ks_statistic(subsample(full0, stride), subsample(nx0, stride));
  const double d_pa = ks_statistic(subsample(full0, stride), subsample(pa0, stride));

  write_model_stats(cfg, "full", full_stats, *full_stats.ccf);
  write_model_stats(cfg, "narmax", nx_stats, *nx_stats.ccf);
  write_model_stats(cfg, "polyar", pa_stats, *pa_stats.ccf);

  json table;
  table["config_hash"] = config_hash(cfg);
  table["delta"] = cfg.delta;
  table["full"] = stats_row(full_stats);
  table["narmax"] = stats_row(nx_stats);
  table["narmax"]["D"] = d_nx;
  table["polyar"] = stats_row(pa_stats);
  table["polyar"]["D"] = d_pa;
  io::write_file(join(cfg.output, "validate_table.json"), table.dump(2) + "\n");

  std::printf("validate: full mean=%.4f std=%.4f | narmax mean=%.4f std=%.4f D=%.4f | "
              "polyar mean=%.4f std=%.4f D=%.4f\n",
              full_stats.mean, full_stats.std, nx_stats.mean, nx_stats.std, d_nx, pa_stats.mean,
              pa_stats.std, d_pa);
}

void cmd_forecast(const PipelineConfig& cfg) {
  cfg.validate();
  const CheckedDataset data = load_dataset_checked(cfg);
  const ReducedMap map = cfg.reduced_map();

  NarmaxStructure st;
  NarmaxParams nx_params;
  io::ArtifactMeta nx_meta;
  io::narmax_params_from_json(io::read_file(join(cfg.output, "narmax_params.json")), st,
                              nx_params, nx_meta);
  check_params_meta(nx_meta, cfg, data.data_hash, "narmax_params.json");

  PolyarParams pa_params;
  io::ArtifactMeta pa_meta;
  io::polyar_params_from_json(io::read_file(join(cfg.output, "polyar_params.json")), pa_params,
                              pa_meta);
  check_params_meta(pa_meta, cfg, data.data_hash, "polyar_params.json");

  const Eigen::VectorXd climatology = data.x.colwise().mean();

  // Independent truth run, chopped into verification segments.
  const long rows_per_seg = std::lround(cfg.forecast.horizon / cfg.delta);
  if (rows_per_seg < 2) throw ConfigError("config: forecast.horizon too short for delta");
  const long total_obs = rows_per_seg * cfg.forecast.segments;
  L96Config truth_model = cfg.model;
  truth_model.seed = derive_seed(cfg.seed, kSeedForecastTruth);
  const double total_time = truth_model.spinup + (total_obs - 1) * cfg.delta;
  const SeriesSet truth = generate_dataset(truth_model, total_time, cfg.delta);
  std::vector<Eigen::MatrixXd> segments;
  segments.reserve(cfg.forecast.segments);
  for (int s = 0; s < cfg.forecast.segments; ++s)
    segments.push_back(truth.x_obs.middleRows(static_cast<long>(s) * rows_per_seg, rows_per_seg));

  const int n0 = st.init_steps();
  const NarmaxEnsembleModel nx_model(st, nx_params, map);
  const PolyarEnsembleModel pa_model(pa_params, cfg.model.F);

  json meta;
  meta["config_hash"] = config_hash(cfg);
  meta["segments"] = cfg.forecast.segments;
  meta["rows_per_segment"] = rows_per_seg;
  meta["init_steps"] = n0;
  json runs = json::array();

  const std::string hash_comment = "config_hash=" + config_hash(cfg);
  struct ModelRun {
    const char* name;
    const EnsembleModel* model;
    std::uint64_t seed_stream;
  };
  const ModelRun model_runs[] = {{"narmax", &nx_model, kSeedForecastNarmax},
                                 {"polyar", &pa_model, kSeedForecastPolyar}};
  for (const auto& run : model_runs) {
    for (int n_ens : cfg.forecast.ensemble_sizes) {
      ForecastConfig fc;
      fc.init_steps = n0;
      fc.ensemble_size = n_ens;
      fc.seed = derive_seed(cfg.seed, run.seed_stream, static_cast<std::uint64_t>(n_ens));
      const ForecastScore score =
          run_forecast(*run.model, segments, cfg.delta, fc, climatology);

      Eigen::MatrixXd rows(score.lead_times.size(), 3);
      rows.col(0) = score.lead_times;
      rows.col(1) = score.rmse;
      rows.col(2) = score.ancr;
      const std::string name =
          "forecast_" + std::string(run.name) + "_ens" + std::to_string(n_ens) + ".csv";
      io::write_csv(join(cfg.output, name), {hash_comment}, {"lead", "rmse", "ancr"}, rows);

      json jr;
      jr["model"] = run.name;
      jr["ensemble_size"] = n_ens;
      jr["total_members"] = score.total_members;
      jr["excluded_members"] = score.excluded_members;
      runs.push_back(jr);
      std::printf("forecast: %s ens=%d rmse(1TU)=%.4f ancr(1TU)=%.4f excluded=%ld/%ld\n",
                  run.name, n_ens, score.rmse[std::min<Eigen::Index>(
                      static_cast<Eigen::Index>(std::lround(1.0 / cfg.delta)),
                      score.rmse.size() - 1)],
                  score.ancr[std::min<Eigen::Index>(
                      static_cast<Eigen::Index>(std::lround(1.0 / cfg.delta)),
                      score.ancr.size() - 1)],
                  score.excluded_members, score.total_members);
    }
  }
  meta["runs"] = runs;
  io::write_file(join(cfg.output, "forecast_meta.json"), meta.dump(2) + "\n");
}

PipelineConfig repro_paper_config(const PipelineConfig& base, double delta, Scale scale) {
  PipelineConfig cfg = base;
  cfg.delta = delta;
  if (std::abs(delta - 0.01) < 1e-12) {
    cfg.narmax = NarmaxStructure{.p = 1, .r = 2, .d_x = 1, .s = 0, .d_R = 0, .q = 1};
    cfg.output = join(base.output, "delta_0.01");
  } else if (std::abs(delta - 0.05) < 1e-12) {
    cfg.narmax = NarmaxStructure{.p = 1, .r = 1, .d_x = 3, .s = 1, .d_R = 1, .q = 0};
    cfg.output = join(base.output, "delta_0.05");
  } else {
    throw ConfigError("repro-paper: only deltas 0.01 and 0.05 are covered");
  }
  cfg.observations = (scale == Scale::Paper) ? 500000 : 100000;
  cfg.forecast.segments = (scale == Scale::Paper) ? 10000 : 500;
  cfg.validate();
  return cfg;
}

void cmd_repro_paper(const PipelineConfig& base, Scale scale) {
  for (const double delta : {0.01, 0.05}) {
    const PipelineConfig cfg = repro_paper_config(base, delta, scale);
    std::printf("repro-paper: delta=%.2f scale=%s -> %s\n", delta,
                scale == Scale::Paper ? "paper" : "desk", cfg.output.c_str());
    cmd_simulate(cfg);
    cmd_fit(cfg);
    cmd_validate(cfg);
    cmd_forecast(cfg);
  }
}

}  // namespace dsparam
