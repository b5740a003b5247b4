#ifndef NMAR_CLI_HPP
#define NMAR_CLI_HPP

// Command-line front end. Exit codes: 0 success, 1 data error, 2 numerical
// failure, 3 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nmar/error.hpp"
#include "nmar/estimation.hpp"
#include "nmar/identifiability.hpp"
#include "nmar/io.hpp"
#include "nmar/model.hpp"
#include "nmar/oracle.hpp"
#include "nmar/rng.hpp"
#include "nmar/selection.hpp"
#include "nmar/sim.hpp"

namespace nmar::cli {

enum ExitCode : int { kOk = 0, kDataError = 1, kNumericalError = 2, kUsageError = 3 };

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline int parse_order(const std::string& model) {
  static const std::regex re(R"(\s*[aA][rR]\s*\(\s*(\d+)\s*\)\s*)");
  std::smatch m;
  if (!std::regex_match(model, m, re)) throw UsageError("model must look like ar(p), got '" + model + "'");
  return std::stoi(m[1]);
}

inline std::string fmt(double v, int prec = 3) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

/// Reads --params / --at: an existing JSON file (a bare name->value object or
/// a fit report with "params"), otherwise inline "name=value,..." text.
inline ParamSet read_params(const ModelSpec& spec, const std::string& arg) {
  io::Json j;
  if (std::filesystem::exists(arg)) {
    std::ifstream in(arg);
    try {
      j = io::Json::parse(in);
    } catch (const std::exception& e) {
      throw DataError("cannot parse " + arg + ": " + e.what());
    }
    if (j.contains("params")) j = j["params"];
  } else {
    j = io::params_assignments(arg);
  }
  return io::params_from_json(spec, j);
}

inline ParamSet random_point(const ModelSpec& spec, std::uint64_t seed, double half_width) {
  auto rng = CounterRng::stream(seed, 0);
  std::vector<double> x(n_free(spec));
  for (auto& v : x) v = rng.uniform(-half_width, half_width);
  return unpack_free(spec, x);
}

inline void emit(const io::Json& j, const std::string& path, std::ostream& out) {
  if (path.empty())
    out << j.dump(2) << '\n';
  else
    io::write_json(j, path);
}

inline void print_estimates(const FitResult& f, std::ostream& out) {
  out << std::left << std::setw(14) << "parameter" << std::right << std::setw(10) << "MLE" << std::setw(10) << "s.d."
      << std::setw(10) << "p-value" << '\n';
  for (std::size_t i = 0; i < f.names.size(); ++i)
    out << std::left << std::setw(14) << f.names[i] << std::right << std::setw(10) << fmt(f.estimate[i])
        << std::setw(10) << fmt(f.se[i]) << std::setw(10) << fmt(f.pvalues[i]) << '\n';
}

struct ModelArgs {
  std::string model = "ar(2)";
  int horizon = 0;
  bool covariate = false;
  bool no_covariate = false;
  std::string fix;
  std::string mech = "full";

  void add(CLI::App* app, bool need_horizon) {
    app->add_option("--model", model, "Model family, ar(p)")->capture_default_str();
    if (need_horizon) app->add_option("--T", horizon, "Horizon (number of waves)")->required();
    app->add_flag("--covariate", covariate, "Include one binary covariate");
    app->add_option("--fix", fix, "Mechanism slopes fixed at zero, e.g. tau22,tau33");
    app->add_option("--mech", mech, "Mechanism: full, mar or mcar")
        ->check(CLI::IsMember({"full", "mar", "mcar"}))
        ->capture_default_str();
  }

  ModelSpec build(int T, bool cov) const {
    ModelSpec spec(T, parse_order(model), cov);
    if (mech == "mar") spec = spec.mar();
    if (mech == "mcar") spec = spec.mcar();
    if (!fix.empty()) spec = spec.with_fixed_slopes(io::parse_slopes(fix, T));
    return spec;
  }
};

/// Applies --covariate / --no-covariate to loaded data.
inline Dataset prepare_data(Dataset data, const ModelArgs& m) {
  if (m.covariate && m.no_covariate) throw UsageError("--covariate and --no-covariate conflict");
  if (m.covariate && !data.has_covariate()) throw DataError("--covariate given but the data have a single group");
  if (m.no_covariate && data.has_covariate()) data = data.pooled();
  return data;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Selection-model analysis of binary longitudinal data with nonignorable dropout", "nmar"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Suppress progress text");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit of one model");
  std::string data_path, out_path;
  detail::ModelArgs margs;
  FitOptions fopt;
  fit_cmd->add_option("--data", data_path, "Count table CSV")->required();
  margs.add(fit_cmd, false);
  fit_cmd->add_flag("--no-covariate", margs.no_covariate, "Pool the two groups");
  fit_cmd->add_option("--starts", fopt.n_starts, "Number of starting points")->capture_default_str();
  fit_cmd->add_option("--seed", fopt.seed, "Seed for random starts")->capture_default_str();
  fit_cmd->add_option("--tol", fopt.tol, "Relative gradient tolerance")->capture_default_str();
  fit_cmd->add_option("--max-iter", fopt.max_iter, "BFGS iteration limit")->capture_default_str();
  fit_cmd->add_option("--out", out_path, "Write the JSON report here");
  fit_cmd->add_flag("--quiet", quiet, "Suppress progress text");

  // ident
  auto* ident_cmd = app.add_subcommand("ident", "Identifiability audit");
  detail::ModelArgs iargs;
  std::string at;
  bool witness = false;
  std::uint64_t iseed = 1;
  double rank_tol = 1e-8;
  std::string iout;
  iargs.add(ident_cmd, true);
  ident_cmd->add_option("--at", at, "Parameter point: JSON file or name=value list");
  ident_cmd->add_flag("--witness", witness, "Construct an AR(1) equivalence witness at t=2");
  ident_cmd->add_option("--seed", iseed, "Seed for the random point when --at is absent")->capture_default_str();
  ident_cmd->add_option("--rank-tol", rank_tol, "Relative singular-value cutoff")->capture_default_str();
  ident_cmd->add_option("--out", iout, "Write the JSON report here");
  ident_cmd->add_flag("--quiet", quiet, "Suppress progress text");

  // select
  auto* sel_cmd = app.add_subcommand("select", "Likelihood-ratio mechanism selection");
  std::string sdata, sout;
  detail::ModelArgs sargs;
  select::SelectionOptions sopt;
  double alpha = 0.05;
  sel_cmd->add_option("--data", sdata, "Count table CSV")->required();
  sel_cmd->add_option("--max-size", sopt.max_size, "Largest slope subset")->capture_default_str();
  sel_cmd->add_option("--model", sargs.model, "Model family, ar(p)")->capture_default_str();
  sel_cmd->add_flag("--no-covariate", sargs.no_covariate, "Pool the two groups");
  sel_cmd->add_option("--starts", sopt.fit.n_starts, "Starting points per fit")->capture_default_str();
  sel_cmd->add_option("--seed", sopt.fit.seed, "Seed for random starts")->capture_default_str();
  sel_cmd->add_option("--tol", sopt.fit.tol, "Relative gradient tolerance")->capture_default_str();
  sel_cmd->add_option("--threads", sopt.threads, "Concurrent fits (0 = all cores)")->capture_default_str();
  sel_cmd->add_option("--alpha", alpha, "Type I error for the mechanism tests")->capture_default_str();
  sel_cmd->add_option("--out", sout, "Write the JSON report here");
  sel_cmd->add_flag("--quiet", quiet, "Suppress progress text");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a count table");
  detail::ModelArgs simargs;
  std::string params_arg, sim_out;
  sim::SimConfig scfg;
  simargs.add(sim_cmd, true);
  sim_cmd->add_option("--params", params_arg, "JSON file or name=value list")->required();
  sim_cmd->add_option("--n", scfg.n_subjects, "Number of subjects")->required();
  sim_cmd->add_option("--seed", scfg.seed, "Seed")->capture_default_str();
  sim_cmd->add_option("--covariate-prob", scfg.covariate_prob, "P(x = 1)")->capture_default_str();
  sim_cmd->add_option("--out", sim_out, "Output CSV (stdout if absent)");
  sim_cmd->add_flag("--quiet", quiet, "Suppress progress text");

  // oracle-check
  auto* orc_cmd = app.add_subcommand("oracle-check", "Compare pattern probabilities with brute-force enumeration");
  detail::ModelArgs oargs;
  int draws = 100;
  std::uint64_t oseed = 1;
  oargs.add(orc_cmd, true);
  orc_cmd->add_option("--draws", draws, "Random parameter draws")->capture_default_str();
  orc_cmd->add_option("--seed", oseed, "Seed")->capture_default_str();
  orc_cmd->add_flag("--quiet", quiet, "Suppress progress text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  auto progress = [&](const std::string& msg) {
    if (!quiet) err << msg << '\n';
  };

  try {
    if (*fit_cmd) {
      const auto data = detail::prepare_data(io::parse_counts_file(data_path), margs);
      const auto spec = margs.build(data.horizon(), data.has_covariate());
      progress("fitting " + margs.model + " with " + std::to_string(n_free(spec)) + " free parameters, " +
               std::to_string(fopt.n_starts) + " starts");
      const auto f = fit(data, spec, fopt);
      out << "model: AR(" << spec.order() << "), T=" << spec.horizon();
      if (data.has_covariate())
        out << ", covariate " << data.group_labels()[0] << "->0, " << data.group_labels()[1] << "->1";
      out << "\nN = " << f.n_obs << ", loglik = " << std::setprecision(10) << f.loglik
          << (f.converged ? "" : "  (NOT CONVERGED)") << "\n\n";
      detail::print_estimates(f, out);
      if (!out_path.empty()) {
        auto j = io::fit_json(f);
        j["covariate_map"] = io::covariate_map_json(data);
        io::write_json(j, out_path);
      }
      return f.converged ? kOk : kNumericalError;
    }

    if (*ident_cmd) {
      const auto spec = iargs.build(iargs.horizon, iargs.covariate);
      const auto point = at.empty() ? detail::random_point(spec, iseed, 1.0) : detail::read_params(spec, at);
      ident::IdentOptions io_opt;
      io_opt.witness = witness;
      io_opt.rank_tol = rank_tol;
      const auto rep = ident::audit(spec, point, io_opt);
      detail::emit(io::ident_json(spec, point, rep), iout, out);
      return kOk;
    }

    if (*sel_cmd) {
      const auto data = detail::prepare_data(io::parse_counts_file(sdata), sargs);
      const ModelSpec base(data.horizon(), detail::parse_order(sargs.model), data.has_covariate());
      progress("fitting full model and " + std::to_string(select::enumerate_submodels(base, sopt.max_size).size()) +
               " submodels");
      const auto table = select::selection_table(data, base, sopt);
      FitOptions warm = sopt.fit;
      warm.warm_starts.push_back(table.full.params);
      const auto mcar = fit(data, base.mcar(), warm);
      const auto mar = fit(data, base.mar(), warm);
      const auto t_mcar = select::lrt(mcar, table.full, alpha);
      const auto t_mar = select::lrt(mar, table.full, alpha);
      auto line = [&](const std::string& name, const select::LrtResult& r) {
        out << name << ": deviance " << detail::fmt(r.stat) << ", df " << r.df << ", critical "
            << detail::fmt(r.critical) << (r.reject ? "  -> reject" : "  -> do not reject") << '\n';
      };
      line("MCAR vs NMAR", t_mcar);
      line("MAR  vs NMAR", t_mar);
      out << '\n' << std::setw(4) << "No." << "  " << std::left << std::setw(36) << "estimated" << std::right
          << std::setw(10) << "deviance" << '\n';
      for (const auto& r : table.rows)
        out << std::setw(4) << r.index << "  " << std::left << std::setw(36) << r.label << std::right << std::setw(10)
            << detail::fmt(r.deviance) << (r.error.empty() ? "" : "  (" + r.error + ")") << '\n';
      if (!sout.empty()) {
        auto j = io::selection_json(table);
        auto test = [](const select::LrtResult& r) {
          return io::Json{{"stat", r.stat}, {"df", r.df}, {"critical", r.critical}, {"reject", r.reject}};
        };
        j["tests"] = {{"mcar_vs_nmar", test(t_mcar)}, {"mar_vs_nmar", test(t_mar)}};
        j["covariate_map"] = io::covariate_map_json(data);
        io::write_json(j, sout);
      }
      return kOk;
    }

    if (*sim_cmd) {
      const auto spec = simargs.build(simargs.horizon, simargs.covariate);
      const auto params = detail::read_params(spec, params_arg);
      const auto data = sim::simulate(spec, params, scfg);
      if (sim_out.empty()) {
        io::write_counts(data, out);
      } else {
        std::ofstream f(sim_out);
        if (!f) throw DataError("cannot write " + sim_out);
        io::write_counts(data, f);
      }
      progress("simulated " + std::to_string(scfg.n_subjects) + " subjects");
      return kOk;
    }

    if (*orc_cmd) {
      const auto spec = oargs.build(oargs.horizon, oargs.covariate);
      double max_diff = 0.0, max_mass_err = 0.0, min_gap = std::numeric_limits<double>::infinity();
      const double levels = spec.has_covariate() ? 2.0 : 1.0;
      for (int d = 0; d < draws; ++d) {
        const auto p = detail::random_point(spec, oseed + 2 * static_cast<std::uint64_t>(d), 2.0);
        const auto q = detail::random_point(spec, oseed + 2 * static_cast<std::uint64_t>(d) + 1, 2.0);
        double mass = 0.0;
        for (const auto& r : all_patterns(spec)) {
          const double g = pattern_prob(spec, p, r);
          mass += g;
          max_diff = std::max(max_diff, std::abs(g - oracle::marginalize(spec, p, r)));
        }
        max_mass_err = std::max(max_mass_err, std::abs(mass - levels));
        min_gap = std::min(min_gap, oracle::kl_gap(spec, q, p));
      }
      const bool ok = max_diff < 1e-12 && max_mass_err < 1e-12 && min_gap >= -1e-12;
      io::Json j{{"model", io::spec_json(spec)},
                 {"draws", draws},
                 {"max_abs_diff", max_diff},
                 {"max_mass_error", max_mass_err},
                 {"min_kl_gap", io::number(min_gap)},
                 {"pass", ok}};
      out << j.dump(2) << '\n';
      return ok ? kOk : kNumericalError;
    }
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::out_of_range& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace nmar::cli

#endif  // NMAR_CLI_HPP
