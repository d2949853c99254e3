#include "traffic/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <utility>

#include "traffic/config.hpp"
#include "traffic/dynamics.hpp"
#include "traffic/invariance.hpp"
#include "traffic/markov.hpp"
#include "traffic/velocity.hpp"

#ifndef TRAFFIC_VERSION
#define TRAFFIC_VERSION "0.0.0"
#endif

namespace traffic::cli {

namespace {

using Params = std::vector<std::pair<std::string, std::string>>;

template <typename T>
std::string fmt(const T& value) {
  std::ostringstream s;
  s.precision(17);
  s << value;
  return s.str();
}

class Output {
 public:
  Output(std::string dir, std::string command, std::uint64_t seed, Params params)
      : dir_(std::move(dir)), command_(std::move(command)), seed_(seed), params_(std::move(params)) {
    std::filesystem::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) const {
    const auto path = std::filesystem::path(dir_) / name;
    std::ofstream f(path);
    if (!f) throw DomainError("cannot open output file " + path.string());
    f << "# traffic-maps " << TRAFFIC_VERSION << '\n';
    f << "# command=" << command_ << " seed=" << seed_;
    for (const auto& [k, v] : params_) f << ' ' << k << '=' << v;
    f << '\n';
    return f;
  }

  std::string path(const std::string& name) const { return (std::filesystem::path(dir_) / name).string(); }

 private:
  std::string dir_;
  std::string command_;
  std::uint64_t seed_;
  Params params_;
};

std::string default_out_dir() {
  if (const char* env = std::getenv("TRAFFIC_OUT_DIR"); env && *env) return env;
  return ".";
}

Space parse_space(const std::string& s) {
  if (s == "lattice") return Space::Lattice;
  if (s == "continuum") return Space::Continuum;
  throw DomainError("space must be lattice or continuum");
}

Configuration even_configuration(double ring, std::size_t n, double r, Space space) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = ring * static_cast<double>(i) / static_cast<double>(n);
    if (space == Space::Lattice) x[i] = std::floor(x[i]);
  }
  return Configuration::ring(ring, std::move(x), r);
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::istringstream s(text);
    std::string a, b, c;
    if (!std::getline(s, a, ':') || !std::getline(s, b, ':') || !std::getline(s, c))
      throw DomainError("grid must look like start:stop:step");
    const double start = std::stod(a), stop = std::stod(b), step = std::stod(c);
    if (!(step > 0.0) || stop < start) throw DomainError("grid needs step > 0 and stop >= start");
    const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
    for (long long k = 0; k <= count; ++k)
      out.push_back(std::round((start + static_cast<double>(k) * step) * 1e12) / 1e12);
    return out;
  }
  std::istringstream s(text);
  std::string item;
  while (std::getline(s, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  if (out.empty()) throw DomainError("empty grid");
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exclusion-process simulator and stationarity verifier", "traffic"};
  app.require_subcommand(1);
  std::string out_dir = default_out_dir();
  app.add_option("--out", out_dir, "Output directory (default $TRAFFIC_OUT_DIR or .)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run the dynamics on a ring and estimate the velocity");
  double sim_ring = 0.0, sim_p = 0.5, sim_v = 1.0, sim_r = 0.5;
  std::size_t sim_n = 0;
  std::uint64_t sim_steps = 1000, sim_seed = 0, sim_stride = 0, sim_burn = 0;
  std::string sim_space = "continuum", sim_init = "markov";
  sim->add_option("--ring", sim_ring, "Ring circumference")->required();
  sim->add_option("--particles", sim_n, "Number of particles")->required();
  sim->add_option("--p", sim_p, "Movement probability");
  sim->add_option("--v", sim_v, "Maximal jump");
  sim->add_option("--r", sim_r, "Particle radius");
  sim->add_option("--steps", sim_steps, "Number of steps");
  sim->add_option("--seed", sim_seed, "Master seed");
  sim->add_option("--stride", sim_stride, "Snapshot stride (0: steps/10)");
  sim->add_option("--burn-in", sim_burn, "Burn-in steps (0: steps/4)");
  sim->add_option("--space", sim_space, "lattice or continuum");
  sim->add_option("--init", sim_init, "markov (stationary sample) or even");

  // fundamental-diagram
  auto* fd = app.add_subcommand("fundamental-diagram", "Average velocity against density");
  std::string fd_grid = "0.1:0.9:0.1";
  double fd_p = 0.5, fd_v = 1.0, fd_r = 0.5;
  std::uint64_t fd_seed = 0;
  SimulationBudget fd_budget;
  fd->add_option("--rho", fd_grid, "Density grid start:stop:step or list");
  fd->add_option("--p", fd_p, "Movement probability");
  fd->add_option("--v", fd_v, "Maximal jump");
  fd->add_option("--r", fd_r, "Particle radius");
  fd->add_option("--particles", fd_budget.particles, "Particles per ring");
  fd->add_option("--steps", fd_budget.steps, "Steps per run");
  fd->add_option("--burn-in", fd_budget.burn_in, "Burn-in steps (0: steps/4)");
  fd->add_option("--seed", fd_seed, "Master seed");
  fd->add_option("--jobs", fd_budget.jobs, "Parallel grid points");
  fd->add_option("--replicas", fd_budget.replicas, "Independent runs per grid point")->check(CLI::PositiveNumber);

  // verify-invariance
  auto* vi = app.add_subcommand("verify-invariance", "Exact one-step pushforward of a Markov measure");
  double vi_rho = 0.5, vi_p = 0.5, vi_tol = 1e-10;
  std::size_t vi_len = 6;
  std::string vi_matrix;
  vi->add_option("--rho", vi_rho, "Density of the invariant-family matrix");
  vi->add_option("--p", vi_p, "Movement probability");
  vi->add_option("--max-len", vi_len, "Longest cylinder checked (1..12)");
  vi->add_option("--tol", vi_tol, "Stationarity tolerance");
  vi->add_option("--matrix", vi_matrix, "Explicit matrix p00,p01,p10,p11 instead of --rho");

  // measure
  auto* ms = app.add_subcommand("measure", "Sample a ring word or tabulate cylinder measures");
  std::string ms_mode;
  double ms_rho = 0.5, ms_p = 0.5;
  std::size_t ms_sites = 100, ms_len = 4, ms_count = 0;
  std::uint64_t ms_seed = 0;
  ms->add_option("mode", ms_mode, "sample | cylinder | matrix")
      ->required()
      ->check(CLI::IsMember({"sample", "cylinder", "matrix"}));
  ms->add_option("--rho", ms_rho, "Density");
  ms->add_option("--p", ms_p, "Movement probability");
  ms->add_option("--sites", ms_sites, "Ring sites (sample)");
  ms->add_option("--particles", ms_count, "Condition the sample on this particle count");
  ms->add_option("--max-len", ms_len, "Longest cylinder (cylinder)");
  ms->add_option("--seed", ms_seed, "Seed (sample)");

  // periodic-points
  auto* pp = app.add_subcommand("periodic-points", "Enumerate periodic points of a 2x2 subshift");
  std::string pp_structure = "plus";
  int pp_n = 4;
  pp->add_option("--structure", pp_structure, "plus | minus | full")
      ->check(CLI::IsMember({"plus", "minus", "full"}));
  pp->add_option("--n", pp_n, "Period (1..24)");

  // stability-sweep
  auto* sw = app.add_subcommand("stability-sweep", "Velocities and measures as p -> 1");
  double sw_rho = 0.5, sw_v = 1.0, sw_r = 0.0;
  std::string sw_ps = "0.9,0.99,0.999,1";
  std::uint64_t sw_seed = 0;
  SimulationBudget sw_budget;
  sw_budget.particles = 2000;
  sw_budget.steps = 4000;
  sw->add_option("--rho", sw_rho, "Density");
  sw->add_option("--v", sw_v, "Maximal jump");
  sw->add_option("--r", sw_r, "Particle radius");
  sw->add_option("--p-list", sw_ps, "Comma-separated movement probabilities");
  sw->add_option("--particles", sw_budget.particles, "Particles per ring");
  sw->add_option("--steps", sw_budget.steps, "Steps per run");
  sw->add_option("--seed", sw_seed, "Master seed");
  sw->add_option("--jobs", sw_budget.jobs, "Parallel runs");
  sw->add_option("--replicas", sw_budget.replicas, "Independent runs per p")->check(CLI::PositiveNumber);

  // obstacles
  auto* ob = app.add_subcommand("obstacles", "Point particles moving among static obstacles");
  ObstacleExperiment ob_exp;
  std::string ob_pattern = "0,3.5";
  std::uint64_t ob_seed = 0;
  ob->add_option("--ring", ob_exp.ring, "Ring circumference");
  ob->add_option("--pattern", ob_pattern, "Obstacle positions within one period");
  ob->add_option("--period", ob_exp.period, "Period of the obstacle pattern");
  ob->add_option("--rho-x", ob_exp.rho_x, "Particle density");
  ob->add_option("--p", ob_exp.p, "Movement probability");
  ob->add_option("--v", ob_exp.v, "Maximal jump");
  ob->add_option("--steps", ob_exp.steps, "Number of steps");
  ob->add_option("--burn-in", ob_exp.burn_in, "Burn-in (0: steps/4)");
  ob->add_option("--seed", ob_seed, "Master seed");

  // couple-check
  auto* cc = app.add_subcommand("couple-check", "Static-coupling exactness of the conjugacies");
  std::size_t cc_n = 1000;
  std::uint64_t cc_steps = 1000, cc_seed = 0;
  double cc_rho = 0.5, cc_p = 0.5, cc_rmax = 0.4;
  cc->add_option("--particles", cc_n, "Particles per ring");
  cc->add_option("--steps", cc_steps, "Number of coupled steps");
  cc->add_option("--rho", cc_rho, "Lattice density");
  cc->add_option("--p", cc_p, "Movement probability");
  cc->add_option("--r-max", cc_rmax, "Heterogeneous radii are iid uniform in [0, r-max]");
  cc->add_option("--seed", cc_seed, "Master seed");

  std::vector<std::string> storage = args;
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    if (sim->parsed()) {
      const Space space = parse_space(sim_space);
      if (sim_n < 1) throw DomainError("need at least one particle");
      const double rho = static_cast<double>(sim_n) / sim_ring;
      if (2.0 * sim_r * rho > 1.0) throw DomainError("2 r rho >= 1: particles do not fit on the ring");
      Configuration cfg;
      if (sim_init == "markov") {
        cfg = invariant_initial_condition(rho, sim_p, sim_v, sim_r, sim_n, derive_seed(sim_seed, 10));
        if (std::abs(cfg.circumference() - sim_ring) > 1e-9 * sim_ring)
          throw DomainError("ring length incompatible with a stationary-sample start ((L - 2 r N) / v must be "
                            "an integer); use --init even");
      } else if (sim_init == "even") {
        cfg = even_configuration(sim_ring, sim_n, sim_r, space);
      } else {
        throw DomainError("init must be markov or even");
      }
      RunOptions opt;
      opt.steps = sim_steps;
      opt.seed = derive_seed(sim_seed, 11);
      opt.snapshot_stride = sim_stride > 0 ? sim_stride : std::max<std::uint64_t>(1, sim_steps / 10);
      const auto summary = run(cfg, ProcessParams(sim_p, sim_v, space), opt);
      const auto est = estimate_velocity(summary, sim_burn > 0 ? sim_burn : sim_steps / 4);
      Output o(out_dir, "simulate", sim_seed,
               {{"ring", fmt(sim_ring)}, {"particles", fmt(sim_n)}, {"p", fmt(sim_p)}, {"v", fmt(sim_v)},
                {"r", fmt(sim_r)}, {"steps", fmt(sim_steps)}, {"stride", fmt(opt.snapshot_stride)},
                {"burn_in", fmt(est.burn_in)}, {"space", sim_space}, {"init", sim_init}});
      {
        auto f = o.open("trajectory.csv");
        write_trajectory_csv(f, summary);
      }
      {
        auto f = o.open("velocity.csv");
        f.precision(17);
        f << "rho,V_theory,V_hat,stderr\n"
          << density(cfg) << ',' << theoretical_velocity(density(cfg), sim_p, sim_v, sim_r) << ',' << est.value
          << ',' << est.std_error << '\n';
      }
      out << "V_hat=" << fmt(est.value) << " stderr=" << fmt(est.std_error)
          << " V_theory=" << fmt(theoretical_velocity(density(cfg), sim_p, sim_v, sim_r)) << '\n';
      return kSuccess;
    }

    if (fd->parsed()) {
      const auto grid = parse_grid(fd_grid);
      const auto rows = fundamental_diagram(fd_p, fd_v, fd_r, grid, fd_budget, fd_seed);
      Output o(out_dir, "fundamental-diagram", fd_seed,
               {{"rho", fd_grid}, {"p", fmt(fd_p)}, {"v", fmt(fd_v)}, {"r", fmt(fd_r)},
                {"particles", fmt(fd_budget.particles)}, {"steps", fmt(fd_budget.steps)},
                {"burn_in", fmt(fd_budget.burn_in)}, {"replicas", fmt(fd_budget.replicas)}});
      auto f = o.open("fd.csv");
      write_fundamental_diagram_csv(f, rows);
      out << "wrote " << rows.size() << " rows to " << o.path("fd.csv") << '\n';
      return kSuccess;
    }

    if (vi->parsed()) {
      MarkovMatrix m = vi_matrix.empty() ? build_invariant_matrix(vi_rho, vi_p) : [&] {
        const auto e = parse_grid(vi_matrix);
        if (e.size() != 4) throw DomainError("--matrix needs four entries");
        return MarkovMatrix::from_entries(e[0], e[1], e[2], e[3]);
      }();
      const auto report = verify_invariance(m, vi_p, vi_len, vi_tol);
      Params params{{"p", fmt(vi_p)}, {"max_len", fmt(vi_len)}, {"tol", fmt(vi_tol)}};
      if (vi_matrix.empty())
        params.emplace_back("rho", fmt(vi_rho));
      else
        params.emplace_back("matrix", vi_matrix);
      Output o(out_dir, "verify-invariance", 0, params);
      auto f = o.open("invariance.csv");
      write_invariance_csv(f, report);
      out << (report.stationary ? "stationary" : "non-stationary") << " max_abs_err=" << fmt(report.max_discrepancy)
          << " worst=" << report.worst_cylinder << '\n';
      return report.stationary ? kSuccess : kVerificationFailed;
    }

    if (ms->parsed()) {
      const MarkovMatrix m = build_invariant_matrix(ms_rho, ms_p);
      Params params{{"mode", ms_mode}, {"rho", fmt(ms_rho)}, {"p", fmt(ms_p)}};
      if (ms_mode == "sample") {
        params.emplace_back("sites", fmt(ms_sites));
        params.emplace_back("particles", fmt(ms_count));
        const Word w = ms_count > 0 ? sample_ring_word_with_count(m, ms_sites, ms_count, ms_seed)
                                    : sample_ring_word(m, ms_sites, ms_seed);
        Output o(out_dir, "measure", ms_seed, params);
        auto f = o.open("sample.csv");
        f << "word\n" << word_to_string(w) << '\n';
        out << word_to_string(w) << '\n';
      } else if (ms_mode == "cylinder") {
        params.emplace_back("max_len", fmt(ms_len));
        Output o(out_dir, "measure", 0, params);
        auto f = o.open("cylinders.csv");
        write_cylinder_table_csv(f, m, ms_len);
      } else {
        Output o(out_dir, "measure", 0, params);
        auto f = o.open("matrix.csv");
        write_matrix_csv(f, m);
        write_matrix_csv(out, m, false);
      }
      return kSuccess;
    }

    if (pp->parsed()) {
      const auto ts = pp_structure == "plus"    ? TransitionStructure::plus()
                      : pp_structure == "minus" ? TransitionStructure::minus()
                                                : TransitionStructure::full();
      const auto points = periodic_points(ts, pp_n);
      Output o(out_dir, "periodic-points", 0, {{"structure", pp_structure}, {"n", fmt(pp_n)}});
      auto f = o.open("periodic.csv");
      f << "# count=" << points.count << " trace=" << trace_power(ts, pp_n) << '\n' << "word\n";
      for (const auto& w : points.points) f << word_to_string(w) << '\n';
      out << "count=" << points.count << " trace=" << trace_power(ts, pp_n) << '\n';
      return kSuccess;
    }

    if (sw->parsed()) {
      const auto ps = parse_grid(sw_ps);
      const auto rows = stability_sweep(sw_rho, sw_v, sw_r, ps, sw_budget, sw_seed);
      Output o(out_dir, "stability-sweep", sw_seed,
               {{"rho", fmt(sw_rho)}, {"v", fmt(sw_v)}, {"r", fmt(sw_r)}, {"p_list", sw_ps},
                {"particles", fmt(sw_budget.particles)}, {"steps", fmt(sw_budget.steps)}, {"replicas", fmt(sw_budget.replicas)}});
      auto f = o.open("sweep.csv");
      write_stability_csv(f, rows);
      out << "wrote " << rows.size() << " rows to " << o.path("sweep.csv") << '\n';
      return kSuccess;
    }

    if (ob->parsed()) {
      ob_exp.pattern = parse_grid(ob_pattern);
      const auto res = run_obstacle_experiment(ob_exp, ob_seed);
      Output o(out_dir, "obstacles", ob_seed,
               {{"ring", fmt(ob_exp.ring)}, {"pattern", ob_pattern}, {"period", fmt(ob_exp.period)},
                {"rho_x", fmt(ob_exp.rho_x)}, {"p", fmt(ob_exp.p)}, {"v", fmt(ob_exp.v)},
                {"steps", fmt(ob_exp.steps)}, {"burn_in", fmt(res.estimate.burn_in)}});
      auto f = o.open("obstacles.csv");
      f.precision(17);
      f << "rho_x,rho_z_ext,V_theory,V_hat,stderr\n"
        << res.rho_x << ',' << res.rho_extended << ',' << res.v_theory << ',' << res.estimate.value << ','
        << res.estimate.std_error << '\n';
      out << "V_hat=" << fmt(res.estimate.value) << " V_theory=" << fmt(res.v_theory) << '\n';
      return kSuccess;
    }

    if (cc->parsed()) {
      // Lattice radius conjugation: r = 1/2 against its r = 0 image.
      const MarkovMatrix m = build_invariant_matrix(cc_rho, cc_p);
      const std::size_t sites = static_cast<std::size_t>(std::llround(static_cast<double>(cc_n) / cc_rho));
      const auto lattice = decode_word(sample_ring_word_with_count(m, sites, cc_n, derive_seed(cc_seed, 20)));
      const auto conj = radius_conjugate(lattice, 0.0);
      const auto lat = coupled_run(lattice, conj, ProcessParams(cc_p, 1.0, Space::Lattice),
                                   ProcessParams(cc_p, 1.0, Space::Lattice), cc_steps, derive_seed(cc_seed, 21));

      // Heterogeneous radii against the homogeneous mean radius.
      std::mt19937_64 rng(derive_seed(cc_seed, 22));
      std::vector<double> radii(lattice.size());
      for (auto& r : radii) r = cc_rmax * static_cast<double>(rng() >> 11) * 0x1.0p-53;
      std::vector<double> x(lattice.size());
      double cursor = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (i > 0) {
          const double contact = radii[i - 1] + radii[i];
          cursor += contact + 2.0 * static_cast<double>(rng() % 3);
          // Touching pairs must not overlap after rounding.
          while (cursor - contact < x[i - 1]) cursor = std::nextafter(cursor, INFINITY);
        }
        x[i] = cursor;
      }
      const double ring = cursor + radii.back() + radii.front() + 2.0;
      const auto hetero = Configuration::ring(ring, x, radii);
      const auto homo = radius_conjugate(hetero, hetero.mean_radius());
      const auto het = coupled_run(hetero, homo, ProcessParams(cc_p, 1.0), ProcessParams(cc_p, 1.0), cc_steps,
                                   derive_seed(cc_seed, 23));

      const bool lattice_ok = lat.max_gap_difference == 0.0 && lat.max_displacement_difference == 0.0;
      const bool hetero_ok = het.max_gap_difference <= 1e-9 && het.max_displacement_difference <= 1e-9;
      Output o(out_dir, "couple-check", cc_seed,
               {{"particles", fmt(cc_n)}, {"steps", fmt(cc_steps)}, {"rho", fmt(cc_rho)}, {"p", fmt(cc_p)},
                {"r_max", fmt(cc_rmax)}});
      auto f = o.open("couple.csv");
      f.precision(17);
      f << "check,max_gap_diff,max_disp_diff,verdict\n"
        << "radius_conjugate," << lat.max_gap_difference << ',' << lat.max_displacement_difference << ','
        << (lattice_ok ? "exact" : "mismatch") << '\n'
        << "heterogeneous," << het.max_gap_difference << ',' << het.max_displacement_difference << ','
        << (hetero_ok ? "exact" : "mismatch") << '\n';
      out << "radius_conjugate " << (lattice_ok ? "exact" : "mismatch") << ", heterogeneous "
          << (hetero_ok ? "exact" : "mismatch") << '\n';
      return lattice_ok && hetero_ok ? kSuccess : kVerificationFailed;
    }
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kDomain;
  } catch (const std::invalid_argument& e) {
    err << "error: invalid number: " << e.what() << '\n';
    return kDomain;
  }
  return kUsage;
}

}  // namespace traffic::cli
