/*
 * symdock.cpp
 *
 * Command-line front end: synth, simulate, verify, plot, serve.
 * Exit codes: 0 success, 1 synthesis infeasible, 2 usage or I/O error,
 * 3 episode ended without docking.
 */

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <unistd.h>

#include <CLI11.hpp>

#include <symdock/symdock.hpp>

namespace fs = std::filesystem;
using namespace symdock;

namespace {

constexpr int kOk = 0;
constexpr int kInfeasible = 1;
constexpr int kUsage = 2;
constexpr int kEpisodeFailed = 3;

/* write through a sibling temp file and rename into place */
void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw ConfigError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw ConfigError("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw ConfigError("cannot move output into '" + path + "'");
  }
}

Pose parse_pose(const std::string& s) {
  std::array<double, 3> v{};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? s.find(',', pos) : s.size();
    if (end == std::string::npos)
      throw ConfigError("--start must be \"x,y,psi\"");
    const std::string tok = s.substr(pos, end - pos);
    char* stop = nullptr;
    v[i] = std::strtod(tok.c_str(), &stop);
    if (tok.empty() || *stop != '\0' || !std::isfinite(v[i]))
      throw ConfigError("--start must be \"x,y,psi\", got '" + s + "'");
    pos = end + 1;
  }
  return {v[0], v[1], v[2]};
}

std::string metrics_path(const std::string& traj) {
  fs::path p(traj);
  p.replace_extension(".metrics.json");
  return p.string();
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string scenario;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  const ScenarioFile sf = load_scenario_file(a.scenario);
  const Synthesizer synth;
  Synthesizer::Outcome out;
  try {
    out = synth.resynthesize(sf.scenario, sf.synthesis);
  } catch (const NoWinningRegion& e) {
    std::cerr << "symdock synth: " << e.what() << '\n';
    return kInfeasible;
  }
  std::ostringstream csv;
  write_controller_csv(csv, out.result, out.system.grid());
  write_atomic(a.out, csv.str());
  std::cout << "cells=" << out.system.grid().size()
            << " winning=" << out.result.values.winning_count()
            << " synth_ms=" << static_cast<long>(std::lround(out.elapsed_ms)) << '\n';
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario;
  std::string start;
  std::string out;
  std::uint64_t seed = 0;
  std::string service;
  std::string observer = "truth";
  bool noise = false;
  double max_duration = 600.0;
  int timeout_ms = 5000;
};

int cmd_simulate(const SimulateArgs& a) {
  const ScenarioFile sf = load_scenario_file(a.scenario);
  EpisodeConfig cfg;
  cfg.start = parse_pose(a.start);
  cfg.seed = a.seed;
  cfg.noise = a.noise;
  cfg.observer = a.observer == "ekf" ? Observer::Ekf : Observer::Truth;
  cfg.max_duration = a.max_duration;

  Planner planner;
  if (!a.service.empty()) {
    const auto [host, port] = parse_endpoint(a.service);
    auto client = std::make_shared<SynthClient>(host, port, a.timeout_ms);
    client->connect();
    std::ifstream in(a.scenario);
    planner = service_planner(client, json::parse(in));
  } else {
    planner = in_process_planner(sf);
  }

  EpisodeResult res;
  try {
    res = run_episode(sf, cfg, planner);
  } catch (const InvalidStart& e) {
    std::cerr << "symdock simulate: " << e.what() << '\n';
    EpisodeMetrics m;
    m.outcome = Outcome::NotWinning;
    m.collided = footprint_collision(cfg.start, sf.scenario);
    if (m.collided)
      m.outcome = Outcome::Collided;
    write_atomic(metrics_path(a.out), metrics_to_json(m).dump(2) + "\n");
    return kEpisodeFailed;
  }
  std::ostringstream csv;
  write_trajectory_csv(csv, res.trajectory);
  write_atomic(a.out, csv.str());
  write_atomic(metrics_path(a.out), metrics_to_json(res.metrics).dump(2) + "\n");
  std::cout << "outcome=" << to_string(res.metrics.outcome)
            << " t=" << format_double(res.trajectory.back().t)
            << " epochs=" << res.metrics.epochs << '\n';
  return res.metrics.outcome == Outcome::Docked ? kOk : kEpisodeFailed;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string scenario;
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  bool halve_growth = false;
};

int cmd_verify(const VerifyArgs& a) {
  const ScenarioFile sf = load_scenario_file(a.scenario);
  const SynthesisConfig& sc = sf.synthesis;
  const Grid g(sf.scenario.boundary, sc.x_res, sc.y_res, sc.heading_bins);
  const double scale = a.halve_growth ? 0.5 : 1.0;
  SymbolicSystem sys{std::make_shared<const TransitionCache>(g, sc.inputs, sc.tau_s, scale),
                     label_cells(g, sf.scenario)};

  const std::size_t pairs = std::min<std::size_t>(a.samples, 1000);
  const std::size_t per_pair = (a.samples + pairs - 1) / pairs;
  const ContainmentReport cr = check_containment(*sys.transitions, pairs, per_pair, a.seed);
  const SynthesisResult res = compute_fixed_point(sys);
  const ConsistencyReport fr = check_consistency(sys, res);

  const std::size_t total = cr.violations + fr.violations;
  std::cout << "containment_pairs=" << cr.pairs << " containment_samples=" << cr.samples
            << " containment_violations=" << cr.violations << '\n'
            << "consistency_cells=" << fr.cells_checked
            << " consistency_violations=" << fr.violations << '\n'
            << "violations=" << total << '\n';
  return total == 0 ? kOk : kInfeasible;
}

// ---------------------------------------------------------------- plot

struct PlotArgs {
  std::string traj;
  std::string scenario;
  std::string out;
};

int cmd_plot(const PlotArgs& a) {
  const ScenarioFile sf = load_scenario_file(a.scenario);
  std::ifstream in(a.traj);
  if (!in)
    throw ConfigError("cannot open trajectory '" + a.traj + "'");
  const Trajectory traj = read_trajectory_csv(in);
  if (traj.empty())
    throw ConfigError("trajectory '" + a.traj + "' has no rows");
  std::ostringstream svg;
  write_svg(svg, sf.scenario, traj);
  write_atomic(a.out, svg.str());
  return kOk;
}

// ---------------------------------------------------------------- serve

struct ServeArgs {
  std::string scenario;
  int port = 7070;
  std::string bind = "127.0.0.1";
  int delay_ms = 0;
};

int cmd_serve(const ServeArgs& a) {
  const ScenarioFile sf = load_scenario_file(a.scenario);
  // block the shutdown signals before any thread starts so only sigwait sees them
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  ServerOptions opts;
  opts.port = a.port;
  opts.bind_address = a.bind;
  opts.delay_ms = a.delay_ms;
  SynthServer server(sf, opts);
  try {
    server.start();
  } catch (const Error& e) {
    std::cerr << "symdock serve: " << e.what() << '\n';
    return kUsage;
  }
  std::cout << "listening on " << a.bind << ':' << server.port() << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  std::cout << "shutdown" << std::endl;
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbolic docking controller synthesis and simulation", "symdock"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Synthesize the reach-avoid controller and dump it");
  synth->add_option("--scenario", sa.scenario, "Scenario JSON file")->required();
  synth->add_option("--out", sa.out, "Controller CSV output path")->required();

  SimulateArgs ma;
  auto* sim = app.add_subcommand("simulate", "Run one closed-loop docking episode");
  sim->add_option("--scenario", ma.scenario, "Scenario JSON file")->required();
  sim->add_option("--start", ma.start, "Start pose \"x,y,psi\" (m, m, rad)")->required();
  sim->add_option("--out", ma.out, "Trajectory CSV output path; metrics go to <out>.metrics.json")
      ->required();
  sim->add_option("--seed", ma.seed, "Noise seed")->default_val(0);
  sim->add_option("--service", ma.service, "Plan through a synthesis server at HOST:PORT");
  sim->add_option("--observer", ma.observer, "Velocity/pose source for the loop")
      ->check(CLI::IsMember({"truth", "ekf"}))
      ->default_val("truth");
  sim->add_flag("--noise", ma.noise, "Add measurement noise (ekf observer)");
  sim->add_option("--max-duration", ma.max_duration, "Episode time limit in seconds")
      ->check(CLI::PositiveNumber)
      ->default_val(600.0);
  sim->add_option("--timeout-ms", ma.timeout_ms, "Service reply timeout per epoch")
      ->check(CLI::PositiveNumber)
      ->default_val(5000);

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify", "Check abstraction soundness and fixed-point consistency");
  ver->add_option("--scenario", va.scenario, "Scenario JSON file")->required();
  ver->add_option("--samples", va.samples, "Monte Carlo sample count (> 0)")
      ->check(CLI::PositiveNumber)
      ->default_val(10000);
  ver->add_option("--seed", va.seed, "Sampling seed")->default_val(0);
  ver->add_flag("--halve-growth", va.halve_growth,
                "Debug: halve the growth bound to demonstrate a detected violation");

  PlotArgs pa;
  auto* plot = app.add_subcommand("plot", "Render a trajectory over the arena as SVG");
  plot->add_option("--traj", pa.traj, "Trajectory CSV")->required();
  plot->add_option("--scenario", pa.scenario, "Scenario JSON file")->required();
  plot->add_option("--out", pa.out, "SVG output path")->required();

  ServeArgs ra;
  auto* serve = app.add_subcommand("serve", "Run the synthesis server until SIGINT/SIGTERM");
  serve->add_option("--scenario", ra.scenario, "Preloaded scenario JSON file")->required();
  serve->add_option("--port", ra.port, "TCP port (0 picks a free port)")
      ->check(CLI::Range(0, 65535))
      ->default_val(7070);
  serve->add_option("--bind", ra.bind, "IPv4 bind address")->default_val("127.0.0.1");
  serve->add_option("--delay-ms", ra.delay_ms, "Debug: delay every synthesize reply")
      ->check(CLI::NonNegativeNumber)
      ->default_val(0);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*synth)
      return cmd_synth(sa);
    if (*sim)
      return cmd_simulate(ma);
    if (*ver)
      return cmd_verify(va);
    if (*plot)
      return cmd_plot(pa);
    if (*serve)
      return cmd_serve(ra);
  } catch (const ConnectionLost& e) {
    std::cerr << "symdock: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "symdock: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
