// afmm: prior exploration, calibration, simulation, fitting and metrics.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "afmm/afmm.hpp"

namespace fs = std::filesystem;
using afmm::io::fmt;
using afmm::io::json;

namespace {

std::vector<std::string> g_argv;

json manifest(const std::string& command, std::uint64_t seed, const json& config) {
  json m;
  m["program"] = "afmm";
  m["version"] = afmm::kVersion;
  m["command"] = command;
  m["argv"] = g_argv;
  m["seed"] = seed;
  m["config"] = config;
  m["status"] = "running";
  return m;
}

json calibration_json(const afmm::CalibrationResult& r) {
  json j;
  j["lambda_star"] = r.lambda_star;
  j["achieved_tail"] = r.achieved_tail;
  j["tp"] = r.tp;
  j["tolerance"] = r.tolerance;
  j["mc_replicates"] = r.mc_replicates;
  j["seed"] = r.seed;
  j["stream_id"] = r.stream_id;
  j["bracket"] = {r.bracket_lo, r.bracket_hi};
  j["iterations"] = r.iterations;
  j["boundary_clamps"] = r.boundary_clamps;
  return j;
}

json warnings_json(const afmm::ChainDiagnostics& d) {
  json w;
  w["alpha1_below_floor"] = d.weights.alpha1_below_floor;
  w["ridge_retries"] = d.ridge_retries;
  w["variance_floors"] = d.variance_floors;
  w["messages"] = d.warnings;
  return w;
}

json acceptance_json(const afmm::ChainDiagnostics& d) {
  auto rate = [](long acc, long prop) { return prop > 0 ? static_cast<double>(acc) / prop : 0.0; };
  json j;
  j["alpha1"] = {{"proposals", d.weights.alpha1_proposals},
                 {"accepts", d.weights.alpha1_accepts},
                 {"proposals_after_burn", d.weights.alpha1_proposals_after_burn},
                 {"accepts_after_burn", d.weights.alpha1_accepts_after_burn},
                 {"rate_after_burn", rate(d.weights.alpha1_accepts_after_burn, d.weights.alpha1_proposals_after_burn)},
                 {"final_step", d.final_mh_step}};
  j["block_swap"] = {{"proposals", d.weights.swap_proposals},
                     {"accepts", d.weights.swap_accepts},
                     {"rate", rate(d.weights.swap_accepts, d.weights.swap_proposals)}};
  j["retained_draws"] = d.retained;
  return j;
}

// Options shared by fit, fit-functional and sensitivity.
struct FitArgs {
  std::string data;
  std::string out_dir = "run";
  int U = 2;
  int K = 25;
  double tp = 0.1;
  double lambda = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 1e-5;
  double gamma_shape = 10.0;
  std::string prior = "pc";
  long iters = 15000;
  long burn = 10000;
  long thin = 10;
  std::uint64_t seed = 1;
  int chains = 1;
  int calib_reps = 20000;
  bool no_swap = false;

  afmm::WeightPriorConfig weights() const {
    afmm::WeightPriorConfig w;
    w.prior = afmm::weight_prior_from_string(prior);
    w.K = K;
    w.U = U;
    w.tp = tp;
    w.lambda = lambda;
    w.alpha1_fixed = alpha1;
    w.alpha2 = alpha2;
    w.gamma_shape = gamma_shape;
    w.calibration_replicates = calib_reps;
    return w;
  }
  afmm::RunOptions run() const {
    afmm::RunOptions o;
    o.iters = iters;
    o.burn = burn;
    o.thin = thin;
    o.seed = seed;
    o.chains = chains;
    return o;
  }
  json to_json() const {
    return {{"data", data}, {"U", U}, {"K", K}, {"tp", tp}, {"lambda", lambda}, {"alpha1", alpha1},
            {"alpha2", alpha2}, {"gamma_shape", gamma_shape}, {"prior", prior}, {"iters", iters},
            {"burn", burn}, {"thin", thin}, {"seed", seed}, {"chains", chains},
            {"calib_reps", calib_reps}, {"block_swap", !no_swap}};
  }
};

void add_fit_flags(CLI::App* app, FitArgs& a, bool with_U = true) {
  app->add_option("--data", a.data, "input CSV")->required();
  app->add_option("--out-dir", a.out_dir, "output directory");
  if (with_U) app->add_option("--U", a.U, "soft upper bound / centering value");
  app->add_option("--K", a.K, "number of mixture components");
  app->add_option("--tp", a.tp, "tail probability Pr(K+ < U)");
  app->add_option("--lambda", a.lambda, "PC decay rate (skips calibration)");
  app->add_option("--alpha1", a.alpha1, "alpha1 for --prior fixed (default U)");
  app->add_option("--alpha2", a.alpha2, "block-2 concentration");
  app->add_option("--gamma-shape", a.gamma_shape, "shape of the gamma / sym-gamma priors");
  app->add_option("--prior", a.prior, "weight prior")->check(CLI::IsMember({"pc", "gamma", "fixed", "sym-gamma"}));
  app->add_option("--iters", a.iters, "total sweeps");
  app->add_option("--burn", a.burn, "burn-in sweeps");
  app->add_option("--thin", a.thin, "thinning interval");
  app->add_option("--seed", a.seed, "random seed");
  app->add_option("--chains", a.chains, "number of chains");
  app->add_option("--calib-reps", a.calib_reps, "Monte Carlo replicates for lambda calibration");
  app->add_flag("--no-swap", a.no_swap, "disable the block-swap move");
}

void write_posterior_files(const fs::path& dir, const afmm::PosteriorSummary& s,
                           const std::vector<double>& alpha1_trace) {
  afmm::io::write_kplus(dir / "kplus_posterior.csv", s.kplus_pmf);
  afmm::io::write_matrix(dir / "coclustering.csv", s.coclustering);
  afmm::io::write_labels(dir / "partition.csv", s.point_partition);
  auto out = afmm::io::open_out(dir / "alpha1_trace.csv");
  out << "draw,alpha1\n";
  for (std::size_t d = 0; d < alpha1_trace.size(); ++d) out << d + 1 << ',' << fmt(alpha1_trace[d]) << '\n';
}

json fit_summary_json(const afmm::PosteriorSummary& s, double lambda,
                      const std::optional<afmm::CalibrationResult>& cal) {
  json j;
  j["lambda"] = lambda;
  if (cal) j["calibration"] = calibration_json(*cal);
  j["kplus_mode"] = s.kplus_mode();
  j["point_clusters"] = afmm::cluster_count(s.point_partition);
  j["draws"] = s.draws;
  return j;
}

// ---------------------------------------------------------------------------

struct PriorArgs {
  std::string family = "asym";
  int K = 25;
  int U = 5;
  int n = 100;
  double alpha1 = 0.0;
  double alpha2 = 1e-5;
  double alpha = 1.0;
  double gamma_shape = 10.0;
  int k_max = 20;
  double lambda = 0.0;
  double tp = 0.0;
  int reps = 100000;
  int calib_reps = 20000;
  std::uint64_t seed = 1;
  std::string out = "prior.csv";
};

int cmd_induced_prior(const PriorArgs& a) {
  json cfg = {{"family", a.family}, {"K", a.K}, {"U", a.U}, {"n", a.n}, {"alpha1", a.alpha1},
              {"alpha2", a.alpha2}, {"alpha", a.alpha}, {"gamma_shape", a.gamma_shape}, {"k_max", a.k_max},
              {"lambda", a.lambda}, {"tp", a.tp}, {"reps", a.reps}, {"calib_reps", a.calib_reps},
              {"seed", a.seed}, {"out", a.out}};
  afmm::WeightPriorFamily family;
  json m = manifest("induced-prior", a.seed, cfg);
  if (a.family == "asym") {
    family = afmm::family::AsymFixed{{a.K, a.U, a.alpha1 > 0.0 ? a.alpha1 : a.U, a.alpha2}};
  } else if (a.family == "asym-pc") {
    double lambda = a.lambda;
    if (!(lambda > 0.0)) {
      if (!(a.tp > 0.0)) throw afmm::DomainError("asym-pc needs --lambda or --tp");
      afmm::CalibrationRequest req{a.U, a.tp, a.K, a.n, a.alpha2, a.calib_reps, 0.02};
      const auto cal = afmm::calibrate_lambda(req, afmm::RngStream(a.seed, 1));
      lambda = cal.lambda_star;
      m["calibration"] = calibration_json(cal);
    }
    family = afmm::family::AsymPc{afmm::PcPriorSpec::make(a.U, a.K, lambda, a.alpha2)};
    m["lambda"] = lambda;
  } else if (a.family == "sym") {
    family = afmm::family::SymStatic{a.K, a.alpha};
  } else if (a.family == "sym-gamma") {
    family = afmm::family::SymGamma{a.K, a.gamma_shape, a.gamma_shape * a.K};
  } else if (a.family == "dpm") {
    family = afmm::family::Dpm{a.alpha};
  } else {
    family = afmm::family::MfmmUniformK{a.k_max, a.alpha};
  }
  const auto res = afmm::induced_kplus_prior(family, a.n, a.reps, a.seed);
  const fs::path out(a.out);
  afmm::io::write_kplus(out, res.pmf, res.mc_se);
  m["status"] = "complete";
  m["summary"] = {{"mode", res.mode()}, {"mean", res.mean()}};
  fs::path mpath = out;
  mpath.replace_extension(".manifest.json");
  afmm::io::write_json(mpath, m);
  std::printf("mode %d  mean %.4f  Pr(K+=U) %.4f\n", res.mode(), res.mean(), res.prob(a.U));
  return 0;
}

struct CalibArgs {
  int U = 5;
  double tp = 0.1;
  int K = 25;
  int n = 100;
  double alpha2 = 1e-5;
  int reps = 20000;
  double tol = 0.02;
  std::uint64_t seed = 1;
  std::string out = "calibration.json";
};

int cmd_calibrate(const CalibArgs& a) {
  json cfg = {{"U", a.U}, {"tp", a.tp}, {"K", a.K}, {"n", a.n}, {"alpha2", a.alpha2},
              {"reps", a.reps}, {"tol", a.tol}, {"seed", a.seed}, {"out", a.out}};
  afmm::CalibrationRequest req{a.U, a.tp, a.K, a.n, a.alpha2, a.reps, a.tol};
  const auto r = afmm::calibrate_lambda(req, afmm::RngStream(a.seed, 0));
  json j = calibration_json(r);
  j["U"] = a.U;
  j["K"] = a.K;
  j["n"] = a.n;
  j["alpha2"] = a.alpha2;
  afmm::io::write_json(a.out, j);
  json m = manifest("calibrate", a.seed, cfg);
  m["status"] = "complete";
  fs::path mpath(a.out);
  mpath.replace_extension(".manifest.json");
  afmm::io::write_json(mpath, m);
  std::printf("lambda* %.6g  achieved tail %.4f\n", r.lambda_star, r.achieved_tail);
  return 0;
}

struct UniArgs {
  FitArgs fit;
  double mu0 = std::numeric_limits<double>::quiet_NaN();
  double sigma0_sq = 100.0;
  double a0 = 3.0;
  double b0 = 2.0;

  afmm::UnivariateModelConfig config() const {
    afmm::UnivariateModelConfig c;
    c.weights = fit.weights();
    if (!std::isnan(mu0)) c.mu0 = mu0;
    c.sigma0_sq = sigma0_sq;
    c.a0 = a0;
    c.b0 = b0;
    c.block_swap = !fit.no_swap;
    return c;
  }
  json to_json() const {
    json j = fit.to_json();
    j["mu0"] = std::isnan(mu0) ? json("mean(y)") : json(mu0);
    j["sigma0_sq"] = sigma0_sq;
    j["a0"] = a0;
    j["b0"] = b0;
    return j;
  }
};

void add_uni_flags(CLI::App* app, UniArgs& a, bool with_U = true) {
  add_fit_flags(app, a.fit, with_U);
  app->add_option("--mu0", a.mu0, "prior mean of component means (default mean(y))");
  app->add_option("--sigma0-sq", a.sigma0_sq, "prior variance of component means");
  app->add_option("--a0", a.a0, "inverse-gamma shape");
  app->add_option("--b0", a.b0, "inverse-gamma scale");
}

int cmd_fit(const UniArgs& a) {
  const auto y = afmm::io::read_univariate(a.fit.data);
  const fs::path dir(a.fit.out_dir);
  json m = manifest("fit", a.fit.seed, a.to_json());
  afmm::io::write_json(dir / "manifest.json", m);
  const auto fit = afmm::run_chain(y, a.config(), a.fit.run());
  write_posterior_files(dir, fit.summary, fit.alpha1_trace);
  {
    auto out = afmm::io::open_out(dir / "fitted.csv");
    out << "id,y,fitted\n";
    for (std::size_t i = 0; i < y.size(); ++i) {
      out << i + 1 << ',' << fmt(y[i]) << ',' << fmt(fit.summary.fitted_values[i]) << '\n';
    }
  }
  afmm::io::write_json(dir / "acceptance.json", acceptance_json(fit.diagnostics));
  m["status"] = "complete";
  m["mu0"] = fit.mu0;
  m["summary"] = fit_summary_json(fit.summary, fit.lambda, fit.calibration);
  m["warnings"] = warnings_json(fit.diagnostics);
  afmm::io::write_json(dir / "manifest.json", m);
  std::printf("K+ mode %d  point partition %d clusters  (%d draws)\n", fit.summary.kplus_mode(),
              afmm::cluster_count(fit.summary.point_partition), fit.summary.draws);
  return 0;
}

struct FunArgs {
  FitArgs fit;
  int degree = 3;
  int knots = 7;
  double A = 0.001;
  double A0 = 0.25;
  double a_tau = 0.01;
  double U_tau = 3.22;
  std::string tau_prior = "sd";
  int init_clusters = 0;

  afmm::FunctionalModelConfig config() const {
    afmm::FunctionalModelConfig c;
    c.weights = fit.weights();
    c.degree = degree;
    c.interior_knots = knots;
    c.hyper.A = A;
    c.hyper.A0 = A0;
    c.hyper.a_tau = a_tau;
    c.hyper.U_tau = U_tau;
    c.hyper.tau_prior = tau_prior == "sd" ? afmm::TauPrior::Sd : afmm::TauPrior::Precision;
    c.block_swap = !fit.no_swap;
    c.init_clusters = init_clusters;
    return c;
  }
  json to_json() const {
    json j = fit.to_json();
    j["degree"] = degree;
    j["knots"] = knots;
    j["A"] = A;
    j["A0"] = A0;
    j["a_tau"] = a_tau;
    j["U_tau"] = U_tau;
    j["tau_prior"] = tau_prior;
    j["init_clusters"] = init_clusters;
    return j;
  }
};

int cmd_fit_functional(const FunArgs& a) {
  const auto table = afmm::io::read_long(a.fit.data);
  const auto data = afmm::curves_from_long(table.id, table.t, table.y);
  const fs::path dir(a.fit.out_dir);
  json m = manifest("fit-functional", a.fit.seed, a.to_json());
  m["t_rescaling"] = {{"offset", data.t_offset}, {"scale", data.t_scale}};
  afmm::io::write_json(dir / "manifest.json", m);
  const auto fit = afmm::fit_functional(data, a.config(), a.fit.run());
  write_posterior_files(dir, fit.summary, fit.alpha1_trace);
  {
    auto out = afmm::io::open_out(dir / "fitted.csv");
    out << "id,t,y,fitted\n";
    std::size_t r = 0;
    for (const auto& c : data.curves) {
      for (std::size_t j = 0; j < c.t.size(); ++j, ++r) {
        out << c.id << ',' << fmt(data.t_offset + data.t_scale * c.t[j]) << ',' << fmt(c.y[j]) << ','
            << fmt(fit.summary.fitted_values[r]) << '\n';
      }
    }
  }
  {
    auto out = afmm::io::open_out(dir / "cluster_means.csv");
    out << "cluster,t,mean\n";
    for (Eigen::Index c = 0; c < fit.cluster_means.rows(); ++c) {
      for (std::size_t g = 0; g < fit.curve_grid.size(); ++g) {
        out << c + 1 << ',' << fmt(data.t_offset + data.t_scale * fit.curve_grid[g]) << ','
            << fmt(fit.cluster_means(c, static_cast<Eigen::Index>(g))) << '\n';
      }
    }
  }
  {
    auto out = afmm::io::open_out(dir / "subject_fits.csv");
    out << "id,cluster,beta0";
    for (Eigen::Index c = 0; c < fit.beta_mean.cols(); ++c) out << ",beta" << c + 1;
    out << '\n';
    for (int i = 0; i < data.size(); ++i) {
      out << data.curves[i].id << ',' << fit.summary.point_partition[i] << ',' << fmt(fit.beta0_mean[i]);
      for (Eigen::Index c = 0; c < fit.beta_mean.cols(); ++c) out << ',' << fmt(fit.beta_mean(i, c));
      out << '\n';
    }
  }
  json acc = acceptance_json(fit.diagnostics);
  acc["tau_rate"] = fit.tau_acceptance;
  afmm::io::write_json(dir / "acceptance.json", acc);
  m["status"] = "complete";
  m["summary"] = fit_summary_json(fit.summary, fit.lambda, fit.calibration);
  m["warnings"] = warnings_json(fit.diagnostics);
  afmm::io::write_json(dir / "manifest.json", m);
  std::printf("K+ mode %d  point partition %d clusters  (%d draws)\n", fit.summary.kplus_mode(),
              afmm::cluster_count(fit.summary.point_partition), fit.summary.draws);
  return 0;
}

struct SensArgs {
  UniArgs uni;
  int U_min = 2;
  int U_max = 10;
};

int cmd_sensitivity(const SensArgs& a) {
  if (a.U_min < 1 || a.U_max < a.U_min || a.U_max >= a.uni.fit.K) {
    throw afmm::DomainError("sensitivity: need 1 <= U-min <= U-max < K");
  }
  const auto y = afmm::io::read_univariate(a.uni.fit.data);
  const fs::path dir(a.uni.fit.out_dir);
  json cfg = a.uni.to_json();
  cfg.erase("U");
  cfg["U_min"] = a.U_min;
  cfg["U_max"] = a.U_max;
  json m = manifest("sensitivity", a.uni.fit.seed, cfg);
  afmm::io::write_json(dir / "manifest.json", m);

  const int count = a.U_max - a.U_min + 1;
  std::vector<std::optional<afmm::UnivariateFit>> fits(static_cast<std::size_t>(count));
  afmm::parallel_for(static_cast<std::size_t>(count), [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t j = begin; j < end; ++j) {
      UniArgs ua = a.uni;
      ua.fit.U = a.U_min + static_cast<int>(j);
      fits[j] = afmm::run_chain(y, ua.config(), ua.fit.run());
    }
  });
  auto out = afmm::io::open_out(dir / "sensitivity.csv");
  out << "U,lambda,kplus_mode,point_clusters,mse,sd_ccp\n";
  json warnings = json::array();
  for (int j = 0; j < count; ++j) {
    const int U = a.U_min + j;
    const auto& f = *fits[j];
    const double mse = afmm::u_adjusted_mse(y, f.summary.fitted_values, a.uni.fit.K, U);
    out << U << ',' << fmt(f.lambda) << ',' << f.summary.kplus_mode() << ','
        << afmm::cluster_count(f.summary.point_partition) << ',' << fmt(mse) << ','
        << fmt(afmm::sd_ccp(f.summary.coclustering)) << '\n';
    afmm::io::write_matrix(dir / ("coclustering_U" + std::to_string(U) + ".csv"), f.summary.coclustering);
    afmm::io::write_labels(dir / ("partition_U" + std::to_string(U) + ".csv"), f.summary.point_partition);
    json w = warnings_json(f.diagnostics);
    w["U"] = U;
    warnings.push_back(w);
  }
  m["status"] = "complete";
  m["warnings"] = warnings;
  afmm::io::write_json(dir / "manifest.json", m);
  return 0;
}

struct SimArgs {
  std::string type = "type1";
  int kplus = 2;
  int U = 5;
  int K = 25;
  int n = 100;
  int templates = 3;
  double kappa = 0.05;
  double sigma = 0.0005;
  int grid_points = 50;
  std::uint64_t seed = 1;
  std::string out_dir = "sim";
};

int cmd_simulate(const SimArgs& a) {
  const fs::path dir(a.out_dir);
  json cfg = {{"type", a.type}, {"kplus", a.kplus}, {"U", a.U}, {"K", a.K}, {"n", a.n},
              {"templates", a.templates}, {"kappa", a.kappa}, {"sigma", a.sigma},
              {"grid_points", a.grid_points}, {"seed", a.seed}, {"out_dir", a.out_dir}};
  afmm::RngStream rng(a.seed, 0);
  afmm::Partition truth;
  if (a.type == "functional") {
    auto spec = afmm::default_functional_spec(a.templates);
    spec.n = a.n;
    spec.kappa = a.kappa;
    spec.sigma = a.sigma;
    spec.grid = afmm::even_grid(a.grid_points);
    const auto ds = afmm::gen_functional(spec, rng);
    auto out = afmm::io::open_out(dir / "data.csv");
    out << "id,t,y\n";
    for (const auto& c : ds.data.curves) {
      for (std::size_t j = 0; j < c.t.size(); ++j) out << c.id << ',' << fmt(c.t[j]) << ',' << fmt(c.y[j]) << '\n';
    }
    truth = ds.truth;
  } else {
    afmm::UnivariateDataset ds;
    if (a.type == "type1") {
      ds = afmm::gen_type1({a.kplus, a.n, 0.5}, rng);
    } else {
      afmm::DataType2Spec spec;
      spec.U = a.U;
      spec.K = a.K;
      spec.n = a.n;
      ds = afmm::gen_type2(spec, rng);
    }
    afmm::io::write_univariate(dir / "data.csv", ds.y);
    truth = ds.truth;
  }
  afmm::io::write_labels(dir / "truth.csv", truth);
  json m = manifest("simulate", a.seed, cfg);
  m["status"] = "complete";
  afmm::io::write_json(dir / "manifest.json", m);
  return 0;
}

struct MetricArgs {
  std::string run_dir = "run";
  std::string truth;
  std::string out;
};

int cmd_metrics(const MetricArgs& a) {
  const fs::path dir(a.run_dir);
  const json m = afmm::io::read_json((dir / "manifest.json").string());
  const int K = m.at("config").at("K").get<int>();
  const auto pmf = afmm::io::read_column((dir / "kplus_posterior.csv").string(), "probability");
  const auto cc = afmm::io::read_matrix((dir / "coclustering.csv").string());
  const auto point = afmm::io::read_labels((dir / "partition.csv").string());
  const auto y = afmm::io::read_column((dir / "fitted.csv").string(), "y");
  const auto yhat = afmm::io::read_column((dir / "fitted.csv").string(), "fitted");

  afmm::MetricsReport r;
  r.sd_ccp = afmm::sd_ccp(cc);
  r.kplus_mode = afmm::pmf_mode(pmf);
  r.point_clusters = afmm::cluster_count(point);
  if (m.at("config").contains("U")) {
    const int U = m.at("config").at("U").get<int>();
    if (K > U) r.mse = afmm::u_adjusted_mse(y, yhat, K, U);
  }
  if (!a.truth.empty()) {
    const auto truth = afmm::io::read_labels(a.truth);
    if (truth.size() != point.size()) throw afmm::DataError(a.truth + ": label count does not match the run");
    const int kt = afmm::cluster_count(truth);
    if (kt <= K) {
      r.pwss = afmm::pwss(pmf, kt);
      r.mode_bias = afmm::mode_bias(pmf, kt);
    }
    r.ccprob_error = afmm::ccprob_error(cc, truth);
    r.ari = afmm::ari(point, truth);
  }
  json j;
  j["kplus_mode"] = r.kplus_mode;
  j["point_clusters"] = r.point_clusters;
  j["sd_ccp"] = r.sd_ccp;
  if (r.mse) j["mse"] = *r.mse;
  if (r.pwss) j["pwss"] = *r.pwss;
  if (r.mode_bias) j["mode_bias"] = *r.mode_bias;
  if (r.ccprob_error) j["ccprob_error"] = *r.ccprob_error;
  if (r.ari) j["ari"] = *r.ari;
  afmm::io::write_json(a.out.empty() ? dir / "metrics.json" : fs::path(a.out), j);
  std::cout << j.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  g_argv.assign(argv, argv + argc);
  CLI::App app{"Asymmetric-Dirichlet finite mixtures with a PC prior on the cluster count"};
  app.set_config("--config", "", "key=value config file (flags take precedence)");
  app.require_subcommand(1);

  PriorArgs prior;
  auto* sp = app.add_subcommand("induced-prior", "Monte Carlo prior of K+ under a weight prior");
  sp->add_option("--family", prior.family)->check(CLI::IsMember({"asym", "asym-pc", "sym", "sym-gamma", "dpm", "mfmm-unifK"}));
  sp->add_option("--K", prior.K);
  sp->add_option("--U", prior.U);
  sp->add_option("--n", prior.n);
  sp->add_option("--alpha1", prior.alpha1, "block-1 concentration (asym; default U)");
  sp->add_option("--alpha2", prior.alpha2);
  sp->add_option("--alpha", prior.alpha, "concentration for sym, dpm, mfmm-unifK");
  sp->add_option("--gamma-shape", prior.gamma_shape, "shape a of Gamma(a, aK) for sym-gamma");
  sp->add_option("--k-max", prior.k_max, "upper end of the uniform prior on K (mfmm-unifK)");
  auto* lam = sp->add_option("--lambda", prior.lambda, "PC decay rate (asym-pc)");
  sp->add_option("--tp", prior.tp, "calibrate lambda to this tail probability (asym-pc)")->excludes(lam);
  sp->add_option("--reps", prior.reps);
  sp->add_option("--calib-reps", prior.calib_reps);
  sp->add_option("--seed", prior.seed);
  sp->add_option("--out", prior.out);

  CalibArgs cal;
  auto* sc = app.add_subcommand("calibrate", "Calibrate the PC decay rate to Pr(K+ < U) = tp");
  sc->add_option("--U", cal.U)->required();
  sc->add_option("--tp", cal.tp)->required();
  sc->add_option("--K", cal.K);
  sc->add_option("--n", cal.n);
  sc->add_option("--alpha2", cal.alpha2);
  sc->add_option("--reps", cal.reps);
  sc->add_option("--tol", cal.tol);
  sc->add_option("--seed", cal.seed);
  sc->add_option("--out", cal.out);

  UniArgs uni;
  auto* sf = app.add_subcommand("fit", "Fit the univariate Gaussian mixture");
  add_uni_flags(sf, uni);

  FunArgs fun;
  auto* sff = app.add_subcommand("fit-functional", "Fit the functional (B-spline) mixture");
  add_fit_flags(sff, fun.fit);
  sff->add_option("--degree", fun.degree);
  sff->add_option("--knots", fun.knots, "interior knots");
  sff->add_option("--A", fun.A, "upper bound of the noise SD");
  sff->add_option("--A0", fun.A0, "upper bound of the within-cluster SD");
  sff->add_option("--a-tau", fun.a_tau);
  sff->add_option("--U-tau", fun.U_tau);
  sff->add_option("--tau-prior", fun.tau_prior, "exponential prior on tau (sd) or 1/tau (precision)")
      ->check(CLI::IsMember({"sd", "precision"}));
  sff->add_option("--init-clusters", fun.init_clusters, "k-means clusters for the start (0 = K)");

  SensArgs sens;
  auto* ss = app.add_subcommand("sensitivity", "Fit over a range of U values");
  add_uni_flags(ss, sens.uni, false);
  ss->add_option("--U-min", sens.U_min);
  ss->add_option("--U-max", sens.U_max);

  SimArgs sim;
  auto* sm = app.add_subcommand("simulate", "Generate synthetic data");
  sm->add_option("--type", sim.type)->check(CLI::IsMember({"type1", "type2", "functional"}));
  sm->add_option("--kplus", sim.kplus, "number of clusters (type1)");
  sm->add_option("--U", sim.U, "alpha1 = U (type2)");
  sm->add_option("--K", sim.K);
  sm->add_option("--n", sim.n);
  sm->add_option("--templates", sim.templates, "number of curve templates (functional)");
  sm->add_option("--kappa", sim.kappa);
  sm->add_option("--sigma", sim.sigma);
  sm->add_option("--grid-points", sim.grid_points);
  sm->add_option("--seed", sim.seed);
  sm->add_option("--out-dir", sim.out_dir);

  MetricArgs met;
  auto* smt = app.add_subcommand("metrics", "Clustering metrics for a run directory");
  smt->add_option("--run-dir", met.run_dir)->required();
  smt->add_option("--truth", met.truth, "truth.csv (id,label)");
  smt->add_option("--out", met.out, "output path (default <run-dir>/metrics.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sp) return cmd_induced_prior(prior);
    if (*sc) return cmd_calibrate(cal);
    if (*sf) return cmd_fit(uni);
    if (*sff) return cmd_fit_functional(fun);
    if (*ss) return cmd_sensitivity(sens);
    if (*sm) return cmd_simulate(sim);
    if (*smt) return cmd_metrics(met);
  } catch (const afmm::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const afmm::CalibrationError& e) {
    std::cerr << "calibration failed: " << e.what() << "\n  tail at smallest lambda tried: "
              << e.tail_at_min_lambda() << "\n  tail at largest lambda tried: " << e.tail_at_max_lambda() << '\n';
    return 4;
  } catch (const afmm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const afmm::DomainError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
