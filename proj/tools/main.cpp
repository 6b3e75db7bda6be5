// strongsig: adaptive strong-signal detection under a spread null.
//
// Subcommands:
//   summarize  matrix TSV -> per-gene summary TSV
//   estimate   summary TSV -> tau2 estimate (JSON)
//   test       summary TSV -> per-gene p-values and rejections (CSV)
//   simulate   synthetic experiments (roc | tau-error | fdr-power) -> CSV
//
// Exit codes: 0 ok, 2 input/format error, 3 design violation,
// 4 numeric/estimator failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "strongsig/errors.hpp"
#include "strongsig/estimators.hpp"
#include "strongsig/io.hpp"
#include "strongsig/simulation.hpp"
#include "strongsig/summaries.hpp"
#include "strongsig/testing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace strongsig;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

void write_manifest(const std::string& out_path, const std::string& command,
                    const json& config,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, double seconds) {
  json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["config"] = config;
  json digests = json::object();
  for (const std::string& in : inputs) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(file_digest(in)));
    digests[in] = buf;
  }
  manifest["input_digests"] = digests;
  manifest["outputs"] = outputs;
  manifest["wall_seconds"] = seconds;

  const std::string manifest_path = out_path + ".manifest.json";
  const std::string tmp = manifest_path + ".tmp";
  {
    std::ofstream out(tmp);
    out << manifest.dump(2) << "\n";
  }
  fs::rename(tmp, manifest_path);
}

Design parse_design(const std::string& s) {
  if (s == "paired") return Design::paired;
  if (s == "pooled" || s == "two_sample_pooled") return Design::two_sample_pooled;
  if (s == "welch") return Design::welch;
  throw input_error("unknown design: " + s);
}

ScenarioConfig parse_scenario(const json& j) {
  ScenarioConfig c;
  try {
    if (j.contains("n_genes")) c.n_genes = j.at("n_genes").get<std::size_t>();
    if (j.contains("m1")) c.m1 = j.at("m1").get<int>();
    if (j.contains("m0")) c.m0 = j.at("m0").get<int>();
    if (j.contains("m")) c.m1 = c.m0 = j.at("m").get<int>();
    if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
    if (j.contains("tau")) c.tau = j.at("tau").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("reps")) c.reps = j.at("reps").get<int>();
    if (j.contains("noise")) {
      const std::string noise = j.at("noise").get<std::string>();
      if (noise == "gaussian") {
        c.noise = NoiseFamily::gaussian;
      } else if (noise == "laplacian") {
        c.noise = NoiseFamily::laplacian;
      } else {
        throw input_error("unknown noise family: " + noise);
      }
    }
    if (j.contains("design")) {
      c.design = parse_design(j.at("design").get<std::string>());
    }
    if (j.contains("variance")) {
      const json& v = j.at("variance");
      const std::string kind = v.at("kind").get<std::string>();
      if (kind == "chisq1") {
        c.variance.kind = VarianceSource::Kind::chisq1;
      } else if (kind == "constant") {
        c.variance.kind = VarianceSource::Kind::constant;
        c.variance.value = v.value("value", 1.0);
      } else if (kind == "empirical_file") {
        c.variance.kind = VarianceSource::Kind::empirical_file;
        c.variance.path = v.at("path").get<std::string>();
      } else {
        throw input_error("unknown variance source: " + kind);
      }
    }
    if (c.m1 < 1 || c.m0 < 1 || c.n_genes < 2 || c.reps < 1 ||
        !(c.gamma >= 0.0 && c.gamma < 1.0) || !(c.tau >= 0.0)) {
      throw input_error("scenario config out of range");
    }
  } catch (const json::exception& e) {
    throw input_error(std::string("config schema violation: ") + e.what());
  }
  return c;
}

json scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["n_genes"] = c.n_genes;
  j["m1"] = c.m1;
  j["m0"] = c.m0;
  j["gamma"] = c.gamma;
  j["tau"] = c.tau;
  j["noise"] = c.noise == NoiseFamily::gaussian ? "gaussian" : "laplacian";
  switch (c.design) {
    case Design::paired: j["design"] = "paired"; break;
    case Design::two_sample_pooled: j["design"] = "two_sample_pooled"; break;
    case Design::welch: j["design"] = "welch"; break;
  }
  switch (c.variance.kind) {
    case VarianceSource::Kind::chisq1:
      j["variance"] = {{"kind", "chisq1"}};
      break;
    case VarianceSource::Kind::constant:
      j["variance"] = {{"kind", "constant"}, {"value", c.variance.value}};
      break;
    case VarianceSource::Kind::empirical_file:
      j["variance"] = {{"kind", "empirical_file"}, {"path", c.variance.path}};
      break;
  }
  // df convention per design, recorded for reproducibility
  j["df_sigma"] = c.design == Design::paired ? c.m1 - 1 : c.m1 + c.m0 - 2;
  j["seed"] = c.seed;
  j["reps"] = c.reps;
  return j;
}

int cmd_summarize(const std::string& input, const std::string& design_name,
                  bool do_qn, bool do_log_diff, const std::string& output) {
  Timer timer;
  ReplicateMatrix matrix = read_matrix_tsv(input);
  if (do_qn) matrix = quantile_normalize(matrix);

  std::vector<GeneSummary> summaries;
  const Design design = parse_design(design_name);
  if (do_log_diff) {
    if (design != Design::paired) {
      throw design_error("--log-diff requires the paired design");
    }
    summaries = summarize_one_sample(paired_log_diff(matrix));
  } else {
    summaries = summarize_for_design(matrix, design);
  }
  write_summary_tsv(output, summaries);

  json config = {{"input", input},
                 {"design", design_name},
                 {"quantile_normalize", do_qn},
                 {"log_diff", do_log_diff}};
  write_manifest(output, "summarize", config, {input}, {output},
                 timer.seconds());
  return 0;
}

int cmd_estimate(const std::string& input, const std::string& method,
                 double alpha1, double alpha2, double delta, double leave_out,
                 const std::string& output) {
  Timer timer;
  const std::vector<GeneSummary> summaries = read_summary_tsv(input);

  TauEstimate est;
  if (method == "iteb") {
    ItebConfig config;
    config.alpha1 = alpha1;
    config.alpha2 = alpha2;
    config.delta = delta;
    est = iteb(summaries, config);
  } else if (method == "tmle") {
    est = truncated_mle(summaries, leave_out);
  } else if (method == "cm") {
    est = central_matching(summaries, leave_out);
  } else {
    throw input_error("unknown method: " + method);
  }

  json result;
  result["tau2"] = est.tau2;
  result["method"] = tau_method_name(est.method);
  result["iterations"] = est.iterations;
  if (est.method == TauMethod::ITEB) {
    result["trace"] = est.trace;
    json surviving = json::array();
    for (std::size_t i : est.surviving_set) surviving.push_back(summaries[i].id);
    json rejected = json::array();
    for (std::size_t i : est.rejected_set) rejected.push_back(summaries[i].id);
    result["surviving_set"] = surviving;
    result["rejected_set"] = rejected;
    result["alpha1"] = alpha1;
    result["alpha2"] = alpha2;
    result["delta"] = ItebConfig{alpha1, alpha2, delta}.resolved_delta(
        summaries.size());
  } else {
    result["leave_out"] = leave_out;
  }
  if (est.at_boundary) result["warning"] = "root at search boundary";

  if (output.empty() || output == "-") {
    std::cout << result.dump(2) << "\n";
  } else {
    std::ofstream out(output);
    if (!out) throw input_error("cannot write file: " + output);
    out << result.dump(2) << "\n";
    write_manifest(output, "estimate",
                   json{{"input", input},
                        {"method", method},
                        {"alpha1", alpha1},
                        {"alpha2", alpha2},
                        {"delta", delta},
                        {"leave_out", leave_out}},
                   {input}, {output}, timer.seconds());
  }
  return 0;
}

int cmd_test(const std::string& input, std::optional<double> tau2_flag,
             const std::string& estimate_method, const std::string& procedure,
             double alpha1, double alpha2, double delta, double leave_out,
             const std::string& output) {
  Timer timer;
  const std::vector<GeneSummary> summaries = read_summary_tsv(input);

  double tau2;
  if (tau2_flag) {
    tau2 = *tau2_flag;
  } else if (estimate_method == "iteb") {
    ItebConfig config;
    config.alpha1 = alpha1;
    config.alpha2 = alpha2;
    config.delta = delta;
    tau2 = iteb(summaries, config).tau2;
  } else if (estimate_method == "tmle") {
    tau2 = truncated_mle(summaries, leave_out).tau2;
  } else if (estimate_method == "cm") {
    tau2 = central_matching(summaries, leave_out).tau2;
  } else {
    throw input_error("supply --tau2 or a valid --estimate-method");
  }

  Procedure proc;
  if (procedure == "bh") {
    proc = Procedure::BH;
  } else if (procedure == "bonferroni") {
    proc = Procedure::BONFERRONI;
  } else if (procedure == "dual") {
    proc = Procedure::DUAL;
  } else {
    throw input_error("unknown procedure: " + procedure);
  }

  const TestOutcome outcome =
      run_procedure(summaries, tau2, proc, alpha1, alpha2);

  std::vector<std::size_t> order(summaries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return outcome.pvalues[a] < outcome.pvalues[b];
                   });

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!output.empty() && output != "-") {
    file.open(output);
    if (!file) throw input_error("cannot write file: " + output);
    os = &file;
  }
  *os << "id,pvalue,rejected\n";
  for (std::size_t i : order) {
    *os << summaries[i].id << ',' << format_double(outcome.pvalues[i]) << ','
        << (outcome.rejected[i] ? 1 : 0) << '\n';
  }
  if (os == &file) {
    file.close();
    write_manifest(output, "test",
                   json{{"input", input},
                        {"tau2", tau2},
                        {"procedure", procedure},
                        {"alpha1", alpha1},
                        {"alpha2", alpha2}},
                   {input}, {output}, timer.seconds());
  }
  return 0;
}

TauMethod parse_method(const std::string& s) {
  if (s == "iteb") return TauMethod::ITEB;
  if (s == "tmle") return TauMethod::TMLE;
  if (s == "cm") return TauMethod::CM;
  throw input_error("unknown method: " + s);
}

int cmd_simulate(const std::string& experiment, const std::string& config_path,
                 std::optional<std::uint64_t> seed_flag,
                 std::optional<int> reps_flag, const std::string& out_dir) {
  Timer timer;
  json config;
  {
    std::ifstream in(config_path);
    if (!in) throw input_error("cannot open config: " + config_path);
    try {
      in >> config;
    } catch (const json::exception& e) {
      throw input_error(std::string("config schema violation: ") + e.what());
    }
  }
  ScenarioConfig scenario = parse_scenario(config);
  if (seed_flag) scenario.seed = *seed_flag;
  if (reps_flag) scenario.reps = *reps_flag;

  fs::create_directories(out_dir);
  const std::string out_csv = (fs::path(out_dir) / (experiment + ".csv")).string();
  std::ofstream out(out_csv);
  if (!out) throw input_error("cannot write file: " + out_csv);

  if (experiment == "roc") {
    std::vector<std::string> methods = {"iteb_test", "t_test"};
    if (config.contains("methods")) {
      methods = config.at("methods").get<std::vector<std::string>>();
    }
    out << "method,n_rejected,fdp,sensitivity\n";
    for (const std::string& name : methods) {
      RocMethod method;
      if (name == "iteb_test") {
        method = RocMethod::iteb_test;
      } else if (name == "t_test") {
        method = RocMethod::t_test;
      } else {
        throw input_error("unknown roc method: " + name);
      }
      const RocCurve curve = roc_experiment(scenario, method);
      for (std::size_t k = 0; k < curve.fdp.size(); ++k) {
        out << name << ',' << (k + 1) << ',' << format_double(curve.fdp[k])
            << ',' << format_double(curve.sensitivity[k]) << '\n';
      }
    }
  } else if (experiment == "tau-error") {
    std::vector<double> taus = {0.0, 0.5, 1.0, 2.0};
    std::vector<double> gammas = {0.01, 0.05};
    std::vector<TauMethod> methods = {TauMethod::ITEB, TauMethod::TMLE,
                                      TauMethod::CM};
    try {
      if (config.contains("taus")) taus = config.at("taus").get<std::vector<double>>();
      if (config.contains("gammas")) {
        gammas = config.at("gammas").get<std::vector<double>>();
      }
      if (config.contains("methods")) {
        methods.clear();
        for (const auto& name : config.at("methods")) {
          methods.push_back(parse_method(name.get<std::string>()));
        }
      }
    } catch (const json::exception& e) {
      throw input_error(std::string("config schema violation: ") + e.what());
    }
    const auto cells = tau_error_experiment(scenario, taus, gammas, methods);
    out << "gamma,tau,method,mean_rel_error,n_ok,n_failed\n";
    for (const TauErrorCell& cell : cells) {
      out << format_double(cell.gamma) << ',' << format_double(cell.tau) << ','
          << tau_method_name(cell.method) << ','
          << format_double(cell.mean_rel_error) << ',' << cell.n_ok << ','
          << cell.n_failed << '\n';
    }
  } else if (experiment == "fdr-power") {
    const double alpha1 = config.value("alpha1", 0.1);
    const double alpha2 = config.value("alpha2", 0.01);
    const double per_gene_alpha = config.value("per_gene_alpha", 0.01);
    const FdrPowerResult r =
        fdr_power_experiment(scenario, alpha1, alpha2, per_gene_alpha);
    out << "mean_fdp,se_fdp,mean_power,se_power,fixed_level_power,"
           "oracle_power,reps\n";
    out << format_double(r.mean_fdp) << ',' << format_double(r.se_fdp) << ',';
    if (r.mean_power) {
      out << format_double(*r.mean_power) << ',' << format_double(r.se_power)
          << ',' << format_double(*r.mean_fixed_level_power) << ','
          << format_double(*r.mean_oracle_power);
    } else {
      out << "NA,NA,NA,NA";
    }
    out << ',' << r.reps << '\n';
  } else {
    throw input_error("unknown experiment: " + experiment);
  }
  out.close();

  json echo = scenario_to_json(scenario);
  echo["experiment"] = experiment;
  for (const auto& [key, value] : config.items()) {
    if (!echo.contains(key)) echo[key] = value;
  }
  write_manifest(out_csv, "simulate", echo, {config_path}, {out_csv},
                 timer.seconds());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive strong-signal detection with a spread null"};
  app.require_subcommand(1);

  // summarize
  auto* sum = app.add_subcommand("summarize", "Reduce a replicate matrix to "
                                              "per-gene summaries");
  std::string sum_input, sum_output, sum_design = "paired";
  bool sum_qn = false, sum_log_diff = false;
  sum->add_option("--input", sum_input, "Matrix TSV")->required();
  sum->add_option("--output", sum_output, "Summary TSV")->required();
  sum->add_option("--design", sum_design, "paired|pooled|welch");
  sum->add_flag("--quantile-normalize", sum_qn, "Quantile-normalize columns");
  sum->add_flag("--log-diff", sum_log_diff,
                "Per-pair log-ratios before summarizing (paired only)");

  // estimate
  auto* est = app.add_subcommand("estimate", "Estimate tau2 from summaries");
  std::string est_input, est_output, est_method = "iteb";
  double est_alpha1 = 0.1, est_alpha2 = 0.01, est_delta = -1.0,
         est_leave_out = 0.2;
  est->add_option("--input", est_input, "Summary TSV")->required();
  est->add_option("--output", est_output, "JSON output ('-' = stdout)");
  est->add_option("--method", est_method, "iteb|tmle|cm");
  est->add_option("--alpha1", est_alpha1, "BH level (iteb)");
  est->add_option("--alpha2", est_alpha2, "Hard p-value cutoff (iteb)");
  est->add_option("--delta", est_delta,
                  "Shrinkage inflation; negative = sqrt(8/N)");
  est->add_option("--leave-out", est_leave_out,
                  "Leave-out fraction (tmle/cm)");

  // test
  auto* tst = app.add_subcommand("test", "P-values and rejection flags");
  std::string tst_input, tst_output, tst_proc = "dual",
              tst_estimate_method;
  double tst_alpha1 = 0.1, tst_alpha2 = 0.01, tst_delta = -1.0,
         tst_leave_out = 0.2;
  std::optional<double> tst_tau2;
  double tst_tau2_raw = -1.0;
  auto* tau2_opt = tst->add_option("--tau2", tst_tau2_raw, "Fixed tau2 (>= 0)");
  tst->add_option("--estimate-method", tst_estimate_method,
                  "iteb|tmle|cm when --tau2 is absent");
  tst->add_option("--input", tst_input, "Summary TSV")->required();
  tst->add_option("--output", tst_output, "CSV output ('-' = stdout)");
  tst->add_option("--procedure", tst_proc, "bh|bonferroni|dual");
  tst->add_option("--alpha1", tst_alpha1, "BH / Bonferroni level");
  tst->add_option("--alpha2", tst_alpha2, "Dual-threshold cutoff");
  tst->add_option("--delta", tst_delta, "ITEB shrinkage inflation");
  tst->add_option("--leave-out", tst_leave_out, "tmle/cm leave-out");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Synthetic experiments");
  std::string sim_experiment, sim_config, sim_out = ".";
  std::uint64_t sim_seed_raw = 0;
  int sim_reps_raw = 0;
  auto* seed_opt = sim->add_option("--seed", sim_seed_raw, "Seed override");
  auto* reps_opt = sim->add_option("--reps", sim_reps_raw, "Reps override");
  sim->add_option("--experiment", sim_experiment, "roc|tau-error|fdr-power")
      ->required();
  sim->add_option("--config", sim_config, "JSON scenario config")->required();
  sim->add_option("--out", sim_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sum) {
      return cmd_summarize(sum_input, sum_design, sum_qn, sum_log_diff,
                           sum_output);
    }
    if (*est) {
      return cmd_estimate(est_input, est_method, est_alpha1, est_alpha2,
                          est_delta, est_leave_out, est_output);
    }
    if (*tst) {
      if (tau2_opt->count() > 0) {
        if (tst_tau2_raw < 0.0) throw input_error("--tau2 must be >= 0");
        tst_tau2 = tst_tau2_raw;
      }
      return cmd_test(tst_input, tst_tau2, tst_estimate_method, tst_proc,
                      tst_alpha1, tst_alpha2, tst_delta, tst_leave_out,
                      tst_output);
    }
    if (*sim) {
      std::optional<std::uint64_t> seed;
      if (seed_opt->count() > 0) seed = sim_seed_raw;
      std::optional<int> reps;
      if (reps_opt->count() > 0) reps = sim_reps_raw;
      return cmd_simulate(sim_experiment, sim_config, seed, reps, sim_out);
    }
  } catch (const design_error& e) {
    std::cerr << "{\"error\":\"design\",\"message\":\"" << e.what() << "\"}\n";
    return 3;
  } catch (const input_error& e) {
    std::cerr << "{\"error\":\"input\",\"message\":\"" << e.what() << "\"}\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"numeric\",\"message\":\"" << e.what() << "\"}\n";
    return 4;
  }
  return 0;
}
