// Command-line front end: run, sweep, pf, validate.
//
// Exit codes: 0 success (run: criterion satisfied), 2 run exhausted or power
// flow did not converge, 1 any error.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ccopf/ccopf.hpp"

namespace fs = std::filesystem;
using namespace ccopf;

namespace {

struct NetworkArgs {
  std::string fixture;
  std::string buses;
  std::string lines;
  std::string assets;

  void add(CLI::App& app) {
    app.add_option("--fixture", fixture, "Built-in network (ieee33)")->check(CLI::IsMember({"ieee33"}));
    app.add_option("--buses", buses, "Bus CSV");
    app.add_option("--lines", lines, "Line CSV");
    app.add_option("--assets", assets, "DER asset CSV");
  }

  [[nodiscard]] Network load() const {
    if (!fixture.empty()) {
      if (!buses.empty() || !lines.empty() || !assets.empty()) {
        throw ValidationError("--fixture cannot be combined with --buses/--lines/--assets");
      }
      return ieee33_fixture();
    }
    if (buses.empty() || lines.empty()) throw ValidationError("either --fixture or --buses and --lines is required");
    if (assets.empty()) {
      std::ifstream fb(buses), fl(lines);
      if (!fb) throw ParseError("cannot open '" + buses + "'");
      if (!fl) throw ParseError("cannot open '" + lines + "'");
      std::istringstream none("bus,kind,param1,param2,param3,param4,param5\n");
      return load_network_from_streams(fb, fl, none, buses, lines, "(no assets)");
    }
    return load_network(buses, lines, assets);
  }
};

struct StudyArgs {
  NetworkArgs network;
  Prices prices;
  UncertaintyModel model;
  CcConfig cc;
  std::optional<double> threshold_q;
  std::string out_dir = ".";

  void add(CLI::App& app) {
    app.add_option("--config", "TOML/INI file with option values (flags override it)");
    network.add(app);
    app.add_option("--wholesale-price", prices.wholesale, "Grid energy price, $/kWh")->capture_default_str();
    app.add_option("--pv-price", prices.pv, "PV energy price, $/kWh")->capture_default_str();
    app.add_option("--dr-price", prices.dr, "Demand-response price, $/kWh")->capture_default_str();
    app.add_option("--epsilon", cc.epsilon, "Allowed violation probability")->capture_default_str();
    app.add_option("--threshold-kw", cc.threshold_p_kw, "Compensated active power threshold")->capture_default_str();
    app.add_option("--threshold-kvar", threshold_q, "Optional compensated reactive power threshold");
    app.add_option("--scenarios", cc.n_scenarios, "Monte Carlo scenarios")->capture_default_str();
    app.add_option("--seed", cc.seed, "Random seed")->capture_default_str();
    app.add_option("--tau-step", cc.tau_step, "Participation reduction step")->capture_default_str();
    app.add_option("--max-iterations", cc.max_iterations, "Iteration limit")->capture_default_str();
    app.add_option("--workers", cc.workers, "Scenario evaluation threads (0 = all cores)")->capture_default_str();
    app.add_option("--dr-mean", model.dr.mean, "DR delivered fraction, mean")->capture_default_str();
    app.add_option("--dr-std", model.dr.stddev, "DR delivered fraction, std")->capture_default_str();
    app.add_option("--pv-sunny-mean", model.pv_sunny.mean)->capture_default_str();
    app.add_option("--pv-sunny-std", model.pv_sunny.stddev)->capture_default_str();
    app.add_option("--pv-cloudy-mean", model.pv_cloudy.mean)->capture_default_str();
    app.add_option("--pv-cloudy-std", model.pv_cloudy.stddev)->capture_default_str();
    app.add_option("--p-sunny", model.p_sunny, "Probability of a sunny scenario")->capture_default_str();
    app.add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  }

  void finalize() {
    cc.threshold_q_kvar = threshold_q;
    validate_prices(prices);
    model.validate();
    cc.validate();
  }

  // Echo the modelling defaults so a run can be audited.
  void print_header(std::ostream& out) const {
    using detail::format_number;
    out << "# prices ($/kWh): wholesale " << format_number(prices.wholesale) << ", pv "
        << format_number(prices.pv) << ", dr " << format_number(prices.dr) << '\n'
        << "# uncertainty: dr N(" << format_number(model.dr.mean) << ", " << format_number(model.dr.stddev)
        << "), pv sunny N(" << format_number(model.pv_sunny.mean) << ", " << format_number(model.pv_sunny.stddev)
        << "), pv cloudy N(" << format_number(model.pv_cloudy.mean) << ", "
        << format_number(model.pv_cloudy.stddev) << "), p_sunny " << format_number(model.p_sunny)
        << ", clipped to [0, 1]\n"
        << "# controller: tau_step " << format_number(cc.tau_step) << ", scenarios " << cc.n_scenarios
        << ", seed " << cc.seed << ", threshold " << format_number(cc.threshold_p_kw) << " kW, epsilon "
        << format_number(cc.epsilon) << '\n';
  }
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot write '" + path.string() + "'");
  return f;
}

int cmd_run(StudyArgs& args) {
  args.finalize();
  const auto net = args.network.load();
  args.print_header(std::cout);
  const auto r = run(net, args.prices, args.model, args.cc);
  fs::create_directories(args.out_dir);
  {
    auto f = open_out(fs::path(args.out_dir) / "result.csv");
    write_result(f, r);
  }
  {
    auto f = open_out(fs::path(args.out_dir) / "trace.csv");
    write_trace(f, r);
  }
  {
    auto f = open_out(fs::path(args.out_dir) / "compensation.csv");
    write_compensation(f, r.compensation_final);
  }
  std::cout << to_string(r.status) << ": " << r.trace.size() << " iterations, tau "
            << detail::format_number(r.final_tau) << ", I^p " << detail::format_fixed(100.0 * r.ratios_final.i_p, 1)
            << "%, I^q " << detail::format_fixed(100.0 * r.ratios_final.i_q, 1) << "%, z_vio "
            << detail::format_number(r.z_vio_final) << ", cost $" << detail::format_fixed(r.cost_final, 2) << '\n';
  return r.status == CcStatus::Satisfied ? 0 : 2;
}

int cmd_sweep(StudyArgs& args, const std::vector<double>& thresholds, const std::vector<double>& epsilons) {
  if (thresholds.empty() == epsilons.empty()) {
    throw ValidationError("give exactly one of --sweep-threshold or --sweep-epsilon");
  }
  args.finalize();
  const auto net = args.network.load();
  args.print_header(std::cout);
  const bool by_threshold = !thresholds.empty();
  const auto& values = by_threshold ? thresholds : epsilons;

  fs::create_directories(args.out_dir);
  auto f = open_out(fs::path(args.out_dir) / "sweep.csv");
  detail::write_row(f, {"sweep_value", "i_p_pct", "i_q_pct", "cost_usd", "status"});
  bool all_ok = true;
  for (double v : values) {
    auto cc = args.cc;
    (by_threshold ? cc.threshold_p_kw : cc.epsilon) = v;
    try {
      const auto r = run(net, args.prices, args.model, cc);
      detail::write_row(f, {detail::format_number(v), detail::format_number(100.0 * r.ratios_final.i_p),
                            detail::format_number(100.0 * r.ratios_final.i_q), detail::format_number(r.cost_final),
                            to_string(r.status)});
      std::cout << (by_threshold ? "threshold " : "epsilon ") << detail::format_number(v) << ": "
                << to_string(r.status) << ", I^p " << detail::format_fixed(100.0 * r.ratios_final.i_p, 1)
                << "%, cost $" << detail::format_fixed(r.cost_final, 2) << '\n';
    } catch (const std::exception& e) {
      all_ok = false;
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      detail::write_row(f, {detail::format_number(v), "", "", "", "error: " + msg});
      std::cerr << "sweep point " << detail::format_number(v) << " failed: " << e.what() << '\n';
    }
    f.flush();
  }
  return all_ok ? 0 : 1;
}

InjectionSet read_injections(const std::string& path, const Network& net) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  detail::CsvReader csv(in, path);
  csv.expect_header({"bus", "p_kw", "q_kvar"});
  auto inj = InjectionSet::zeros(net);
  std::vector<std::string> row;
  while (csv.next(row)) {
    const int id = static_cast<int>(csv.to_int(row[0], "bus"));
    if (!net.has_bus(id)) throw ValidationError(csv.where() + ": unknown bus " + std::to_string(id));
    const auto k = net.bus_index(id);
    inj.p_kw[k] += csv.to_double(row[1], "p_kw");
    inj.q_kvar[k] += csv.to_double(row[2], "q_kvar");
  }
  return inj;
}

int cmd_pf(const NetworkArgs& network, const std::string& injections, const std::string& out_dir, double tol,
           int max_iter) {
  const auto net = network.load();
  const auto inj = injections.empty() ? InjectionSet::zeros(net) : read_injections(injections, net);
  const auto pf = solve_pf(net, inj, PfOptions{tol, max_iter});
  using detail::format_number;
  fs::create_directories(out_dir);
  {
    auto f = open_out(fs::path(out_dir) / "pf_buses.csv");
    detail::write_row(f, {"bus", "v_pu", "angle_rad"});
    for (std::size_t k = 0; k < net.buses.size(); ++k) {
      detail::write_row(f, {std::to_string(net.buses[k].id), format_number(pf.v_pu[k]), format_number(pf.angle_rad[k])});
    }
  }
  {
    auto f = open_out(fs::path(out_dir) / "pf_summary.csv");
    detail::write_row(f, {"converged", "iterations", "max_mismatch_pu", "slack_p_kw", "slack_q_kvar", "loss_p_kw",
                          "loss_q_kvar"});
    detail::write_row(f, {pf.converged ? "1" : "0", std::to_string(pf.iterations), format_number(pf.max_mismatch_pu),
                          format_number(pf.slack_p_kw), format_number(pf.slack_q_kvar), format_number(pf.loss_p_kw),
                          format_number(pf.loss_q_kvar)});
  }
  if (!pf.converged) {
    std::cerr << "power flow did not converge after " << pf.iterations << " iterations (mismatch "
              << format_number(pf.max_mismatch_pu) << " pu)\n";
    return 2;
  }
  std::cout << "converged in " << pf.iterations << " iterations; slack " << detail::format_fixed(pf.slack_p_kw, 3)
            << " kW, " << detail::format_fixed(pf.slack_q_kvar, 3) << " kVAR; losses "
            << detail::format_fixed(pf.loss_p_kw, 3) << " kW\n";
  return 0;
}

int cmd_validate(const NetworkArgs& network) {
  const auto net = network.load();
  const auto c = asset_counts(net);
  std::cout << net.buses.size() << " buses, " << net.lines.size() << " lines, " << net.assets.size()
            << " assets (storage " << c[0] << ", dr " << c[1] << ", capacitor " << c[2] << ", pv1 " << c[3]
            << ", pv2 " << c[4] << ", pv3 " << c[5] << ")\n"
            << "load " << detail::format_number(net.total_p_demand_kw()) << " kW, "
            << detail::format_number(net.total_q_demand_kvar()) << " kVAR\n";
  return 0;
}

// Splices `key = value` lines from --config in ahead of the command-line flags,
// skipping keys the command line sets itself.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) {
      path = args[k + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k), args.begin() + static_cast<std::ptrdiff_t>(k) + 2);
      break;
    }
    if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k));
      break;
    }
  }
  if (path.empty() || args.empty()) return args;
  if (!fs::exists(path)) throw ParseError("cannot open '" + path + "'");

  const auto given = [&](const std::string& name) {
    const std::string flag = "--" + name;
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  std::vector<std::string> from_file;
  for (const auto& item : CLI::ConfigTOML().from_file(path)) {
    if (item.name == "++" || item.name == "--" || item.inputs.empty() || given(item.name)) continue;
    std::string value;
    for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
    from_file.push_back("--" + item.name);
    from_file.push_back(value);
  }
  args.insert(args.begin() + 1, from_file.begin(), from_file.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage chance-constrained SOCP optimal power flow for radial feeders"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  StudyArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run one chance-constrained study");
  run_args.add(*run_cmd);

  StudyArgs sweep_args;
  std::vector<double> sweep_threshold, sweep_epsilon;
  auto* sweep_cmd = app.add_subcommand("sweep", "Repeat the study over thresholds or epsilons");
  sweep_args.add(*sweep_cmd);
  sweep_cmd->add_option("--sweep-threshold", sweep_threshold, "Thresholds in kW, comma separated")->delimiter(',');
  sweep_cmd->add_option("--sweep-epsilon", sweep_epsilon, "Epsilons, comma separated")->delimiter(',');

  NetworkArgs pf_net;
  std::string pf_injections, pf_out = ".";
  double pf_tol = 1e-8;
  int pf_iter = 100;
  auto* pf_cmd = app.add_subcommand("pf", "Solve one power flow");
  pf_net.add(*pf_cmd);
  pf_cmd->add_option("--injections", pf_injections, "CSV bus,p_kw,q_kvar of DER injections");
  pf_cmd->add_option("--out-dir", pf_out)->capture_default_str();
  pf_cmd->add_option("--tolerance", pf_tol, "Mismatch tolerance, pu")->capture_default_str();
  pf_cmd->add_option("--max-iterations", pf_iter)->capture_default_str();

  NetworkArgs val_net;
  auto* val_cmd = app.add_subcommand("validate", "Load and check a network");
  val_net.add(*val_cmd);

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const ParseError& e) {
    std::cerr << "cannot read input: " << e.what() << '\n';
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) return cmd_run(run_args);
    if (*sweep_cmd) return cmd_sweep(sweep_args, sweep_threshold, sweep_epsilon);
    if (*pf_cmd) return cmd_pf(pf_net, pf_injections, pf_out, pf_tol, pf_iter);
    if (*val_cmd) return cmd_validate(val_net);
  } catch (const TopologyError& e) {
    std::cerr << "topology error: " << e.what() << '\n';
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
  } catch (const ParseError& e) {
    std::cerr << "cannot read input: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 1;
}
