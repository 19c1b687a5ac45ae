// iongrid: design and analysis tool for SDK entangling gates on 2D ion
// lattices. One subcommand per analysis; every run writes its resolved
// configuration next to the results so outputs are reproducible from the
// echoed config alone.
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "iongrid/constants_species.hpp"
#include "iongrid/crosstalk.hpp"
#include "iongrid/errors.hpp"
#include "iongrid/gate_design.hpp"
#include "iongrid/io_util.hpp"
#include "iongrid/lattice.hpp"
#include "iongrid/propagation.hpp"
#include "iongrid/pulses_fidelity.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using iongrid::DomainError;
using iongrid::NumericError;
namespace cs = iongrid::constants_species;
namespace gd = iongrid::gate_design;
namespace lt = iongrid::lattice;
namespace pf = iongrid::pulses_fidelity;
namespace ct = iongrid::crosstalk;
namespace pg = iongrid::propagation;
namespace io = iongrid::io_util;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string fmt(double x) { return io::format_double(x); }

// ---------------------------------------------------------------------------
// config plumbing

ojson load_config(const std::string& path) {
  if (path.empty()) return ojson::object();
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file '" + path + "'");
  ojson doc = ojson::parse(in);
  // an echoed output file is itself a valid config
  if (doc.is_object() && doc.contains("config") && doc["config"].is_object())
    return doc["config"];
  if (!doc.is_object()) throw DomainError("config must be a JSON object");
  return doc;
}

// flags beat config, config beats defaults
class ConfigLayer {
 public:
  explicit ConfigLayer(const ojson& cfg) : cfg_(cfg) {}
  template <typename T>
  void apply(const CLI::Option* opt, const char* key, T& target) const {
    if (opt != nullptr && opt->count() > 0) return;
    auto it = cfg_.find(key);
    if (it != cfg_.end()) target = it->template get<T>();
  }
  const ojson& raw() const { return cfg_; }

 private:
  const ojson& cfg_;
};

cs::IonSpecies resolve_species(const std::string& name, const ojson& cfg) {
  auto db = cfg.find("species_db");
  if (db != cfg.end() && db->is_object() && db->contains(name)) {
    const ojson& e = (*db)[name];
    const double mass =
        e.contains("mass_kg")
            ? e["mass_kg"].get<double>()
            : e.at("mass_u").get<double>() * cs::kConst.atomic_mass_unit;
    const double wl = e.at("raman_wavelength_m").get<double>();
    const double wr = e.contains("repetition_rate_rad_s")
                          ? e["repetition_rate_rad_s"].get<double>()
                          : kTwoPi * e.at("repetition_rate_hz").get<double>();
    const double lw = e.contains("linewidth_rad_s")
                          ? e["linewidth_rad_s"].get<double>()
                          : kTwoPi * e.at("linewidth_hz").get<double>();
    return cs::make_species(name, mass, wl, wr, lw);
  }
  return cs::builtin_species(name);
}

ojson species_db_echo(const cs::IonSpecies& sp) {
  ojson entry;
  entry["mass_kg"] = sp.mass;
  entry["raman_wavelength_m"] = sp.raman_wavelength;
  entry["repetition_rate_rad_s"] = sp.repetition_rate;
  entry["linewidth_rad_s"] = sp.linewidth;
  ojson db;
  db[sp.name] = entry;
  return db;
}

double resolve_temperature(const std::string& mode,
                           const cs::IonSpecies& sp) {
  if (mode == "doppler") return cs::doppler_temperature(sp.linewidth);
  if (mode == "zero") return 0.0;
  try {
    size_t used = 0;
    const double t = std::stod(mode, &used);
    if (used != mode.size()) throw std::invalid_argument(mode);
    if (t < 0.0) throw DomainError("temperature must be >= 0 K");
    return t;
  } catch (const std::invalid_argument&) {
    throw DomainError("temperature must be 'doppler', 'zero' or a value in K");
  } catch (const std::out_of_range&) {
    throw DomainError("temperature out of range");
  }
}

std::pair<int, int> central_pair(int rows, int cols) {
  const int r = (rows - 1) / 2;
  const int c = (cols - 1) / 2;
  if (cols >= 2) return {r * cols + c, r * cols + c + 1};
  if (rows >= 2) return {r * cols + c, (r + 1) * cols + c};
  throw DomainError("lattice needs at least two ions for a gate pair");
}

// all files of a command are staged and written together, so a refused
// overwrite never leaves partial results
class OutputSet {
 public:
  OutputSet(fs::path dir, bool force) : dir_(std::move(dir)), force_(force) {}
  void add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
  }
  void commit() const {
    for (const auto& [name, content] : files_) {
      const fs::path p = dir_ / name;
      if (fs::exists(p) && !force_)
        throw DomainError("output file '" + p.string() +
                          "' exists; pass --force to overwrite");
    }
    fs::create_directories(dir_);
    for (const auto& [name, content] : files_) {
      const fs::path p = dir_ / name;
      std::ofstream out(p, std::ios::binary | std::ios::trunc);
      if (!out) throw DomainError("cannot write '" + p.string() + "'");
      out << content;
      if (!out) throw DomainError("write failed for '" + p.string() + "'");
    }
  }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  bool force_;
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string dump_json(const ojson& j) { return j.dump(2) + "\n"; }

ojson document(const char* command, ojson config) {
  ojson doc;
  doc["schema_version"] = io::kSchemaVersion;
  doc["command"] = command;
  doc["config"] = std::move(config);
  return doc;
}

ojson design_result(const gd::GateDesign& g) {
  ojson r;
  r["species"] = g.species.name;
  r["spacing_m"] = g.spacing;
  r["omega_z_rad_s"] = g.omega_z;
  r["f_z_hz"] = g.omega_z / kTwoPi;
  r["kicks_per_arm"] = g.kicks_per_arm;
  r["m_tilde"] = g.m_tilde;
  r["epsilon"] = g.epsilon;
  r["gate_time_s"] = g.gate_time;
  r["delta_phi_rad"] = g.delta_phi;
  r["roundoff_bound"] = g.roundoff_bound;
  r["epsilon_warning"] = g.epsilon_warning;
  return r;
}

// ---------------------------------------------------------------------------
// shared option bundles

struct Shared {
  std::string config_path;
  std::string out_dir = "out";
  bool force = false;
};

struct LatticeOpts {
  std::string species = "Yb171";
  double d = 50e-6;
  int rows = 10;
  int cols = 10;
  std::string rounding = "nearest";
  CLI::Option* species_opt = nullptr;
  CLI::Option* d_opt = nullptr;
  CLI::Option* rows_opt = nullptr;
  CLI::Option* cols_opt = nullptr;
  CLI::Option* rounding_opt = nullptr;

  void attach(CLI::App* cmd, bool with_grid, int def_rows = 10,
              int def_cols = 10) {
    species_opt =
        cmd->add_option("--species", species, "ion species (Yb171, Be9, Ca40 "
                                              "or a species_db entry)");
    d_opt = cmd->add_option("--d", d, "lattice spacing in m");
    rounding_opt = cmd->add_option("--rounding", rounding,
                                   "kick-count rounding: nearest, up, down");
    if (with_grid) {
      rows = def_rows;
      cols = def_cols;
      rows_opt = cmd->add_option("--rows", rows, "lattice rows");
      cols_opt = cmd->add_option("--cols", cols, "lattice cols");
    }
  }
  void layer(const ConfigLayer& cl) {
    cl.apply(species_opt, "species", species);
    cl.apply(d_opt, "d_m", d);
    cl.apply(rounding_opt, "rounding", rounding);
    cl.apply(rows_opt, "rows", rows);
    cl.apply(cols_opt, "cols", cols);
  }
  void echo(ojson& cfg, const cs::IonSpecies& sp, bool with_grid) const {
    cfg["species"] = species;
    cfg["species_db"] = species_db_echo(sp);
    cfg["d_m"] = d;
    cfg["rounding"] = rounding;
    if (with_grid) {
      cfg["rows"] = rows;
      cfg["cols"] = cols;
    }
  }
};

struct Pipeline {
  cs::IonSpecies species;
  gd::GateDesign design;
  lt::LatticeGeometry geometry;
  lt::ModeSpectrum modes;
};

Pipeline build_pipeline(const LatticeOpts& lo, const ojson& cfg,
                        bool with_grid) {
  Pipeline p;
  p.species = resolve_species(lo.species, cfg);
  p.design = gd::solve_design(p.species, lo.d, gd::parse_rounding(lo.rounding));
  if (with_grid) {
    p.geometry = lt::build_square_lattice(lo.rows, lo.cols, lo.d);
    p.modes = lt::normal_modes(
        lt::potential_matrix(p.geometry, p.species.mass, p.design.omega_z));
  }
  return p;
}

pf::PulseSequence make_sequence(const std::string& pattern,
                                const Pipeline& p) {
  const auto arms = pf::parse_pattern(pattern, p.design.kicks_per_arm);
  return pf::build_pulse_sequence(arms, p.species.repetition_rate,
                                  p.species.delta_k);
}

// ---------------------------------------------------------------------------
// commands

struct DesignCmd {
  Shared* shared;
  LatticeOpts lat;

  void run(const ojson& cfg) {
    ConfigLayer cl(cfg);
    lat.layer(cl);
    const auto p = build_pipeline(lat, cfg, false);

    ojson echo;
    lat.echo(echo, p.species, false);
    echo["output_dir"] = shared->out_dir;
    ojson doc = document("design", echo);
    doc["result"] = design_result(p.design);

    OutputSet out(fs::path(shared->out_dir) / "design", shared->force);
    out.add("design.json", dump_json(doc));
    out.commit();

    const auto& g = p.design;
    std::printf("design %s  d = %s m\n", p.species.name.c_str(),
                fmt(g.spacing).c_str());
    std::printf("  %-22s %lld\n", "kicks per arm M", g.kicks_per_arm);
    std::printf("  %-22s %s\n", "M before rounding", fmt(g.m_tilde).c_str());
    std::printf("  %-22s %s rad/s (%s Hz)\n", "omega_z",
                fmt(g.omega_z).c_str(), fmt(g.omega_z / kTwoPi).c_str());
    std::printf("  %-22s %s s\n", "gate time T", fmt(g.gate_time).c_str());
    std::printf("  %-22s %s\n", "epsilon", fmt(g.epsilon).c_str());
    std::printf("  %-22s %s rad\n", "delta phi", fmt(g.delta_phi).c_str());
    std::printf("  %-22s %s\n", "roundoff bound",
                fmt(g.roundoff_bound).c_str());
    if (g.epsilon_warning)
      std::printf("  warning: epsilon >= 0.01, outside the eps << 1 regime\n");
    std::printf("wrote %s\n", (out.dir() / "design.json").string().c_str());
  }
};

struct ModesCmd {
  Shared* shared;
  LatticeOpts lat;

  void run(const ojson& cfg) {
    ConfigLayer cl(cfg);
    lat.layer(cl);
    const auto p = build_pipeline(lat, cfg, true);

    ojson echo;
    lat.echo(echo, p.species, true);
    echo["output_dir"] = shared->out_dir;
    ojson doc = document("modes", echo);
    ojson res;
    res["omega_z_rad_s"] = p.design.omega_z;
    res["epsilon"] = p.modes.epsilon;
    res["mode_count"] = p.modes.modes();
    ojson freqs = ojson::array();
    ojson rel = ojson::array();
    for (int k = 0; k < p.modes.modes(); ++k) {
      freqs.push_back(p.modes.frequencies(k));
      rel.push_back(p.modes.frequencies(k) / p.design.omega_z);
    }
    res["frequencies_rad_s"] = std::move(freqs);
    res["frequencies_over_omega_z"] = std::move(rel);
    ojson mat = ojson::array();
    for (int i = 0; i < p.modes.modes(); ++i) {
      ojson row = ojson::array();
      for (int k = 0; k < p.modes.modes(); ++k)
        row.push_back(p.modes.mode_matrix(i, k));
      mat.push_back(std::move(row));
    }
    res["mode_matrix"] = std::move(mat);
    doc["result"] = std::move(res);

    OutputSet out(fs::path(shared->out_dir) / "modes", shared->force);
    out.add("modes.json", dump_json(doc));
    out.commit();

    const int n = p.modes.modes();
    std::printf("modes %dx%d %s: %d modes, band [%s, %s] rad/s (top/omega_z = "
                "%s)\n",
                lat.rows, lat.cols, p.species.name.c_str(), n,
                fmt(p.modes.frequencies(0)).c_str(),
                fmt(p.modes.frequencies(n - 1)).c_str(),
                fmt(p.modes.frequencies(n - 1) / p.design.omega_z).c_str());
    std::printf("wrote %s\n", (out.dir() / "modes.json").string().c_str());
  }
};

struct FidelityCmd {
  Shared* shared;
  LatticeOpts lat;
  std::string pattern = "+M,-M";
  std::string temperature = "doppler";
  int ion_i = -1;
  int ion_j = -1;
  int trajectory_samples = 0;
  CLI::Option *pattern_opt = nullptr, *temp_opt = nullptr, *i_opt = nullptr,
              *j_opt = nullptr, *traj_opt = nullptr;

  void run(const ojson& cfg) {
    ConfigLayer cl(cfg);
    lat.layer(cl);
    cl.apply(pattern_opt, "pattern", pattern);
    cl.apply(temp_opt, "temperature", temperature);
    cl.apply(i_opt, "ion_i", ion_i);
    cl.apply(j_opt, "ion_j", ion_j);
    cl.apply(traj_opt, "trajectory_samples", trajectory_samples);

    const auto p = build_pipeline(lat, cfg, true);
    if ((ion_i < 0) != (ion_j < 0))
      throw DomainError("give both --i and --j or neither");
    if (ion_i < 0) std::tie(ion_i, ion_j) = central_pair(lat.rows, lat.cols);
    const double tk = resolve_temperature(temperature, p.species);
    const auto seq = make_sequence(pattern, p);
    const auto rep =
        pf::gate_infidelity(p.modes, seq, ion_i, ion_j, p.species.mass, tk);

    ojson echo;
    lat.echo(echo, p.species, true);
    echo["pattern"] = pattern;
    echo["temperature"] = temperature;
    echo["ion_i"] = ion_i;
    echo["ion_j"] = ion_j;
    echo["trajectory_samples"] = trajectory_samples;
    echo["output_dir"] = shared->out_dir;
    ojson doc = document("fidelity", echo);
    doc["design"] = design_result(p.design);
    ojson res;
    res["temperature_k"] = tk;
    res["kick_count"] = seq.size();
    res["theta_rad"] = rep.theta;
    const double miss = rep.theta - std::numbers::pi / 4.0;
    res["theta_minus_target_rad"] = miss;
    res["rotation_infidelity"] = miss * miss;
    res["displacement_infidelity"] = rep.worst_case_infidelity - miss * miss;
    res["worst_case_infidelity"] = rep.worst_case_infidelity;
    res["average_infidelity"] = rep.average_infidelity;
    doc["result"] = std::move(res);

    std::string csv = io::csv_line({"mode", "frequency_rad_s", "contribution"});
    for (const auto& [k, term] : rep.per_mode_breakdown)
      csv += io::csv_line({std::to_string(k), fmt(p.modes.frequencies(k)),
                           fmt(term)});

    OutputSet out(fs::path(shared->out_dir) / "fidelity", shared->force);
    out.add("fidelity.json", dump_json(doc));
    out.add("fidelity_modes.csv", csv);

    if (trajectory_samples > 0) {
      const auto traj = pf::trajectory(p.modes, seq, {ion_i, ion_j},
                                       p.species.mass, trajectory_samples);
      const bool with_xp = p.modes.modes() <= 16;
      std::vector<std::string> head = {"t_s", "dkz_" + std::to_string(ion_i),
                                       "dkz_" + std::to_string(ion_j)};
      if (with_xp)
        for (int k = 0; k < p.modes.modes(); ++k) {
          head.push_back("mode" + std::to_string(k) + "_X");
          head.push_back("mode" + std::to_string(k) + "_P");
        }
      std::string tcsv = io::csv_line(head);
      for (const auto& s : traj) {
        std::vector<std::string> cells = {fmt(s.time), fmt(s.displacement[0]),
                                          fmt(s.displacement[1])};
        if (with_xp)
          for (const auto& xp : s.mode_xp) {
            cells.push_back(fmt(xp[0]));
            cells.push_back(fmt(xp[1]));
          }
        tcsv += io::csv_line(cells);
      }
      out.add("trajectory.csv", tcsv);
    }
    out.commit();

    std::printf("fidelity %s %dx%d d = %s m, pair (%d, %d), T = %s K\n",
                p.species.name.c_str(), lat.rows, lat.cols,
                fmt(lat.d).c_str(), ion_i, ion_j, fmt(tk).c_str());
    std::printf("  theta = %s rad (target pi/4, miss %s)\n",
                fmt(rep.theta).c_str(), fmt(miss).c_str());
    std::printf("  worst-case infidelity = %s, average = %s\n",
                fmt(rep.worst_case_infidelity).c_str(),
                fmt(rep.average_infidelity).c_str());
    std::printf("wrote %s\n", (out.dir() / "fidelity.json").string().c_str());
  }
};

struct SweepCmd {
  Shared* shared;
  LatticeOpts lat;
  std::string variable = "d";
  std::string pattern = "+M,-M";
  std::string temperature = "doppler";
  double dmin = 30e-6;
  double dmax = 250e-6;
  int points = 23;
  int nmin = 2;
  int nmax = 10;
  bool numeric = false;
  CLI::Option *var_opt = nullptr, *pattern_opt = nullptr, *temp_opt = nullptr,
              *dmin_opt = nullptr, *dmax_opt = nullptr, *points_opt = nullptr,
              *nmin_opt = nullptr, *nmax_opt = nullptr, *numeric_opt = nullptr;

  void run(const ojson& cfg) {
    ConfigLayer cl(cfg);
    lat.layer(cl);
    cl.apply(var_opt, "variable", variable);
    cl.apply(pattern_opt, "pattern", pattern);
    cl.apply(temp_opt, "temperature", temperature);
    cl.apply(dmin_opt, "d_min_m", dmin);
    cl.apply(dmax_opt, "d_max_m", dmax);
    cl.apply(points_opt, "points", points);
    cl.apply(nmin_opt, "n_min", nmin);
    cl.apply(nmax_opt, "n_max", nmax);
    cl.apply(numeric_opt, "numeric", numeric);

    if (variable == "d")
      run_d(cfg);
    else if (variable == "n")
      run_n(cfg);
    else
      throw DomainError("sweep variable must be 'd' or 'n'");
  }

  void run_d(const ojson& cfg) {
    if (points < 1) throw DomainError("sweep needs at least one point");
    if (!(dmin > 0.0) || dmax < dmin)
      throw DomainError("need 0 < d-min <= d-max");
    if (points > 1 && dmax == dmin)
      throw DomainError("duplicate abscissae: widen the range or use 1 point");

    const auto species = resolve_species(lat.species, cfg);
    const auto rounding = gd::parse_rounding(lat.rounding);
    const double tk0 = resolve_temperature(temperature, species);

    std::string csv = io::csv_line(
        {"d_m", "omega_z_rad_s", "f_z_hz", "kicks_per_arm", "gate_time_s",
         "epsilon", "theta_rad", "rotation_infidelity",
         "displacement_infidelity", "worst_case_infidelity",
         "average_infidelity", "roundoff_bound"});
    int worst_idx = 0;
    double worst = -1.0;
    for (int ip = 0; ip < points; ++ip) {
      const double d =
          points == 1 ? dmin
                      : dmin + (dmax - dmin) * static_cast<double>(ip) /
                                   static_cast<double>(points - 1);
      const auto design = gd::solve_design(species, d, rounding);
      const auto geo = lt::build_square_lattice(lat.rows, lat.cols, d);
      const auto modes =
          lt::normal_modes(lt::potential_matrix(geo, species.mass,
                                                design.omega_z));
      const auto arms = pf::parse_pattern(pattern, design.kicks_per_arm);
      const auto seq =
          pf::build_pulse_sequence(arms, species.repetition_rate,
                                   species.delta_k);
      const auto pair = central_pair(lat.rows, lat.cols);
      const auto rep = pf::gate_infidelity(modes, seq, pair.first, pair.second,
                                           species.mass, tk0);
      const double miss = rep.theta - std::numbers::pi / 4.0;
      if (rep.worst_case_infidelity > worst) {
        worst = rep.worst_case_infidelity;
        worst_idx = ip;
      }
      csv += io::csv_line(
          {fmt(d), fmt(design.omega_z), fmt(design.omega_z / kTwoPi),
           std::to_string(design.kicks_per_arm), fmt(design.gate_time),
           fmt(design.epsilon), fmt(rep.theta), fmt(miss * miss),
           fmt(rep.worst_case_infidelity - miss * miss),
           fmt(rep.worst_case_infidelity), fmt(rep.average_infidelity),
           fmt(design.roundoff_bound)});
    }

    ojson echo;
    lat.echo(echo, species, true);
    echo["variable"] = variable;
    echo["pattern"] = pattern;
    echo["temperature"] = temperature;
    echo["d_min_m"] = dmin;
    echo["d_max_m"] = dmax;
    echo["points"] = points;
    echo["output_dir"] = shared->out_dir;
    ojson doc = document("sweep", echo);
    ojson res;
    res["rows_written"] = points;
    res["worst_case_infidelity_max"] = worst;
    res["worst_case_infidelity_argmax_m"] =
        points == 1 ? dmin
                    : dmin + (dmax - dmin) * static_cast<double>(worst_idx) /
                                 static_cast<double>(points - 1);
    doc["result"] = std::move(res);

    OutputSet out(fs::path(shared->out_dir) / "sweep", shared->force);
    out.add("sweep.json", dump_json(doc));
    out.add("sweep.csv", csv);
    out.commit();
    std::printf("sweep d: %d points in [%s, %s] m, max infidelity %s\n",
                points, fmt(dmin).c_str(), fmt(dmax).c_str(),
                fmt(worst).c_str());
    std::printf("wrote %s\n", (out.dir() / "sweep.csv").string().c_str());
  }

  void run_n(const ojson& cfg) {
    if (nmin < 2 || nmax < nmin)
      throw DomainError("need 2 <= n-min <= n-max");
    // numeric mode shares one 31x31-style pipeline across all n
    LatticeOpts nl = lat;
    if (nl.rows_opt != nullptr && nl.rows_opt->count() == 0 &&
        !cfg.contains("rows"))
      nl.rows = 31;
    if (nl.cols_opt != nullptr && nl.cols_opt->count() == 0 &&
        !cfg.contains("cols"))
      nl.cols = 31;

    Pipeline p;
    pf::PulseSequence seq;
    if (numeric) {
      p = build_pipeline(nl, cfg, true);
      seq = make_sequence(pattern, p);
    } else {
      p.species = resolve_species(nl.species, cfg);
    }

    std::vector<std::string> head = {"n", "analytic_per_gate"};
    if (numeric) {
      head.push_back("numeric_per_gate");
      head.push_back("gates_in_class");
      head.push_back("gates_averaged");
    }
    std::string csv = io::csv_line(head);
    const double pf4 = std::numbers::pi / 4.0;
    const double coeff = pf4 * pf4 * 2.0 * lt::lattice_sum(3.0, 100);
    for (int n = nmin; n <= nmax; ++n) {
      const double nn = static_cast<double>(n);
      const double n2 = nn * nn;
      const double analytic = coeff / ((n2 * n2) * n2);
      std::vector<std::string> cells = {std::to_string(n), fmt(analytic)};
      if (numeric) {
        const auto par = ct::parallel_crosstalk_per_gate(
            n, p.geometry, p.modes, seq, p.species.mass);
        cells.push_back(fmt(par.numeric_per_gate));
        cells.push_back(std::to_string(par.gates_in_class));
        cells.push_back(std::to_string(par.gates_averaged));
      }
      csv += io::csv_line(cells);
    }

    ojson echo;
    nl.echo(echo, p.species, numeric);
    echo["variable"] = variable;
    if (numeric) echo["pattern"] = pattern;
    echo["n_min"] = nmin;
    echo["n_max"] = nmax;
    echo["numeric"] = numeric;
    echo["output_dir"] = shared->out_dir;
    ojson doc = document("sweep", echo);
    ojson res;
    res["rows_written"] = nmax - nmin + 1;
    res["analytic_coefficient"] = coeff;
    doc["result"] = std::move(res);

    OutputSet out(fs::path(shared->out_dir) / "sweep", shared->force);
    out.add("sweep.json", dump_json(doc));
    out.add("sweep.csv", csv);
    out.commit();
    std::printf("sweep n: %d..%d, analytic coefficient %s\n", nmin, nmax,
                fmt(coeff).c_str());
    std::printf("wrote %s\n", (out.dir() / "sweep.csv").string().c_str());
  }
};

struct DispersionCmd {
  Shared* shared;
  LatticeOpts lat;
  int radius = 200;
  int points = 64;
  CLI::Option *radius_opt = nullptr, *points_opt = nullptr;

  void run(const ojson& cfg) {
    ConfigLayer cl(cfg);
    lat.layer(cl);
    cl.apply(radius_opt, "radius", radius);
    cl.apply(points_opt, "points_per_segment", points);
    if (points < 1) throw DomainError("points per segment must be >= 1");

    const auto p = build_pipeline(lat, cfg, false);
    const double w = p.design.omega_z;
    const double eps = p.design.epsilon;
    const double pi = std::numbers::pi;

    // Gamma -> X -> M -> Gamma in k*d units
    const std::array<std::array<double, 2>, 4> nodes = {
        {{0.0, 0.0}, {pi, 0.0}, {pi, pi}, {0.0, 0.0}}};
    std::string csv = io::csv_line({"index", "k1_d", "k2_d", "path_s",
                                    "omega_rad_s", "omega_first_order_rad_s",
                                    "omega_over_omega_z"});
    double path = 0.0;
    std::array<double, 2> prev = nodes[0];
    int index = 0;
    double wmin = 0.0, wmax = 0.0;
    bool first = true;
    auto emit = [&](double u, double v) {
      path += std::hypot(u - prev[0], v - prev[1]);
      prev = {u, v};
      const auto dp = lt::dispersion(u / lat.d, v / lat.d, w, eps, lat.d,
                                     radius);
      if (first || dp.omega < wmin) wmin = dp.omega;
      if (first || dp.omega > wmax) wmax = dp.omega;
      first = false;
      csv += io::csv_line({std::to_string(index), fmt(u), fmt(v), fmt(path),
                           fmt(dp.omega), fmt(dp.omega_first_order),
                           fmt(dp.omega / w)});
      ++index;
    };
    for (size_t s = 0; s + 1 < nodes.size(); ++s)
      for (int i = 0; i < points; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(points);
        emit(nodes[s][0] + (nodes[s + 1][0] - nodes[s][0]) * f,
             nodes[s][1] + (nodes[s + 1][1] - nodes[s][1]) * f);
      }
    emit(nodes.back()[0], nodes.back()[1]);

    ojson echo;
    lat.echo(echo, p.species, false);
    echo["radius"] = radius;
    echo["points_per_segment"] = points;
    echo["output_dir"] = shared->out_dir;
    ojson doc = document("dispersion", echo);
    ojson res;
    res["omega_z_rad_s"] = w;
    res["epsilon"] = eps;
    res["rows_written"] = index;
    res["omega_min_rad_s"] = wmin;
    res["omega_max_rad_s"] = wmax;
    res["band_top_is_omega_z"] = (wmax == w);
    doc["result"] = std::move(res);

    OutputSet out(fs::path(shared->out_dir) / "dispersion", shared->force);
    out.add("dispersion.json", dump_json(doc));
    out.add("dispersion.csv", csv);
    out.commit();
    std::printf("dispersion %s: band [%s, %s] rad/s over Gamma-X-M-Gamma "
                "(%d rows)\n",
                p.species.name.c_str(), fmt(wmin).c_str(), fmt(wmax).c_str(),
                index);
    std::printf("wrote %s\n",
                (out.dir() / "dispersion.csv").string().c_str());
  }
};

struct VelocityCmd {
  Shared* shared;
  LatticeOpts lat;
  int grid = 201;
  int radius = 200;
  CLI::Option *grid_opt = nullptr, *radius_opt = nullptr;

  void run(const ojson& cfg) {
    ConfigLayer cl(cfg);
    lat.layer(cl);
    cl.apply(grid_opt, "grid", grid);
    cl.apply(radius_opt, "radius", radius);

    const auto p = build_pipeline(lat, cfg, false);
    const auto field = pg::group_velocity_field(p.design.epsilon,
                                                p.design.omega_z, lat.d, grid,
                                                radius);

    std::string csv =
        io::csv_line({"k1_d", "k2_d", "vx_m_s", "vy_m_s", "speed_m_s"});
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j)
        csv += io::csv_line({fmt(field.axis[i]), fmt(field.axis[j]),
                             fmt(field.vx(i, j)), fmt(field.vy(i, j)),
                             fmt(std::hypot(field.vx(i, j), field.vy(i, j)))});

    ojson echo;
    lat.echo(echo, p.species, false);
    echo["grid"] = grid;
    echo["radius"] = radius;
    echo["output_dir"] = shared->out_dir;
    ojson doc = document("velocity", echo);
    ojson res;
    res["omega_z_rad_s"] = p.design.omega_z;
    res["epsilon"] = p.design.epsilon;
    res["scale_m_s"] = p.design.epsilon * p.design.omega_z * lat.d;
    res["max_speed_m_s"] = field.max_speed;
    res["normalized_max"] = field.normalized_max;
    doc["result"] = std::move(res);

    OutputSet out(fs::path(shared->out_dir) / "velocity", shared->force);
    out.add("velocity.json", dump_json(doc));
    out.add("velocity.csv", csv);
    out.commit();
    std::printf("velocity %s: max |v_g| = %s m/s, normalized %s\n",
                p.species.name.c_str(), fmt(field.max_speed).c_str(),
                fmt(field.normalized_max).c_str());
    std::printf("wrote %s\n", (out.dir() / "velocity.csv").string().c_str());
  }
};

struct PropagateCmd {
  Shared* shared;
  LatticeOpts lat;
  double z0 = 1e-9;
  double v0 = 0.0;
  int source = -1;
  int time_points = 257;
  double periods = 1.0;
  CLI::Option *z0_opt = nullptr, *v0_opt = nullptr, *source_opt = nullptr,
              *tp_opt = nullptr, *periods_opt = nullptr;

  void run(const ojson& cfg) {
    ConfigLayer cl(cfg);
    lat.layer(cl);
    cl.apply(z0_opt, "z0_m", z0);
    cl.apply(v0_opt, "v0_m_s", v0);
    cl.apply(source_opt, "source", source);
    cl.apply(tp_opt, "time_points", time_points);
    cl.apply(periods_opt, "periods", periods);
    if (time_points < 2) throw DomainError("need at least two time points");
    if (!(periods > 0.0)) throw DomainError("periods must be positive");

    const auto p = build_pipeline(lat, cfg, true);
    if (source < 0)
      source = ((lat.rows - 1) / 2) * lat.cols + (lat.cols - 1) / 2;

    const double tend = periods * kTwoPi / p.design.omega_z;
    std::vector<double> times(time_points);
    for (int i = 0; i < time_points; ++i)
      times[i] = tend * static_cast<double>(i) /
                 static_cast<double>(time_points - 1);
    const auto resp =
        pg::evolve_disturbance(p.geometry, p.modes, source, z0, v0, times);

    const int sr = source / lat.cols;
    const int sc = source % lat.cols;
    std::string csv = io::csv_line(
        {"row", "col", "x_m", "y_m", "rho_sites", "envelope_m"});
    std::vector<double> fit_r, fit_e;
    for (int i = 0; i < p.geometry.ion_count(); ++i) {
      const int r = i / lat.cols;
      const int c = i % lat.cols;
      const double rho = std::hypot(r - sr, c - sc);
      const double env = resp.envelope(i);
      if (rho >= 2.0 && rho <= 8.0 && env > 0.0) {
        fit_r.push_back(rho);
        fit_e.push_back(env);
      }
      csv += io::csv_line({std::to_string(r), std::to_string(c),
                           fmt(p.geometry.positions[i][0]),
                           fmt(p.geometry.positions[i][1]), fmt(rho),
                           fmt(env)});
    }

    const auto vmax = pg::max_group_velocity(p.design.epsilon,
                                             p.design.omega_z, lat.d, 201);
    const double cone_sites = vmax.first * tend / lat.d;
    const double far_edge = cone_sites + 3.0;
    const double amp = std::max(std::fabs(z0),
                                std::fabs(v0) / p.design.omega_z);
    double far_max = 0.0;
    int far_count = 0;
    for (int i = 0; i < p.geometry.ion_count(); ++i) {
      const int r = i / lat.cols;
      const int c = i % lat.cols;
      if (std::hypot(r - sr, c - sc) > far_edge) {
        far_max = std::max(far_max, resp.envelope(i));
        ++far_count;
      }
    }

    ojson echo;
    lat.echo(echo, p.species, true);
    echo["z0_m"] = z0;
    echo["v0_m_s"] = v0;
    echo["source"] = source;
    echo["time_points"] = time_points;
    echo["periods"] = periods;
    echo["output_dir"] = shared->out_dir;
    ojson doc = document("propagate", echo);
    ojson res;
    res["omega_z_rad_s"] = p.design.omega_z;
    res["epsilon"] = p.design.epsilon;
    res["window_s"] = tend;
    res["energy_drift"] = resp.energy_drift;
    res["max_speed_m_s"] = vmax.first;
    res["cone_radius_sites"] = cone_sites;
    res["far_zone_sites"] = far_count;
    res["far_zone_max_m"] = far_max;
    res["far_zone_max_over_amplitude"] = amp > 0.0 ? far_max / amp : 0.0;
    if (fit_r.size() >= 2)
      res["envelope_slope_rho_2_8"] = io::loglog_slope(fit_r, fit_e);
    else
      res["envelope_slope_rho_2_8"] = nullptr;
    doc["result"] = std::move(res);

    OutputSet out(fs::path(shared->out_dir) / "propagate", shared->force);
    out.add("propagate.json", dump_json(doc));
    out.add("propagate_envelope.csv", csv);
    out.commit();
    std::printf("propagate %dx%d: energy drift %s, cone %s sites, far-zone "
                "max %s m\n",
                lat.rows, lat.cols, fmt(resp.energy_drift).c_str(),
                fmt(cone_sites).c_str(), fmt(far_max).c_str());
    std::printf("wrote %s\n",
                (out.dir() / "propagate_envelope.csv").string().c_str());
  }
};

struct CrosstalkCmd {
  Shared* shared;
  LatticeOpts lat;
  std::string pattern = "+M,-M";
  int rmax = 12;
  int n = 0;
  bool include_boundary = false;
  CLI::Option *pattern_opt = nullptr, *rmax_opt = nullptr, *n_opt = nullptr,
              *boundary_opt = nullptr;

  void run(const ojson& cfg) {
    ConfigLayer cl(cfg);
    lat.layer(cl);
    cl.apply(pattern_opt, "pattern", pattern);
    cl.apply(rmax_opt, "r_max", rmax);
    cl.apply(n_opt, "n", n);
    cl.apply(boundary_opt, "include_boundary", include_boundary);
    if (rmax < 1) throw DomainError("r-max must be >= 1");

    const auto p = build_pipeline(lat, cfg, true);
    const auto seq = make_sequence(pattern, p);
    const int r0 = (lat.rows - 1) / 2;
    const int c0 = (lat.cols - 1) / 2;
    if (c0 + rmax > lat.cols - 1)
      throw DomainError("r-max reaches past the lattice edge");
    const int center = r0 * lat.cols + c0;

    std::string csv =
        io::csv_line({"r_sites", "theta_rad", "infidelity"});
    std::vector<double> fit_r, fit_t;
    double theta1 = 0.0;
    for (int r = 1; r <= rmax; ++r) {
      const auto e = ct::crosstalk_angle(p.geometry, p.modes, seq, center,
                                         center + r, p.species.mass);
      if (r == 1) theta1 = e.theta;
      if (r >= 3 && r <= 10 && e.theta != 0.0) {
        fit_r.push_back(static_cast<double>(r));
        fit_t.push_back(std::fabs(e.theta));
      }
      csv += io::csv_line({std::to_string(r), fmt(e.theta),
                           fmt(e.infidelity)});
    }

    ojson echo;
    lat.echo(echo, p.species, true);
    echo["pattern"] = pattern;
    echo["r_max"] = rmax;
    echo["n"] = n;
    echo["include_boundary"] = include_boundary;
    echo["output_dir"] = shared->out_dir;
    ojson doc = document("crosstalk", echo);
    ojson res;
    res["omega_z_rad_s"] = p.design.omega_z;
    res["epsilon"] = p.design.epsilon;
    res["theta_r1_rad"] = theta1;
    if (fit_r.size() >= 2)
      res["slope_r_3_10"] = io::loglog_slope(fit_r, fit_t);
    else
      res["slope_r_3_10"] = nullptr;
    if (n >= 2) {
      const auto par = ct::parallel_crosstalk_per_gate(
          n, p.geometry, p.modes, seq, p.species.mass, include_boundary);
      ojson pj;
      pj["n"] = n;
      pj["numeric_per_gate"] = par.numeric_per_gate;
      pj["analytic_per_gate"] = par.analytic_per_gate;
      pj["gates_in_class"] = par.gates_in_class;
      pj["gates_averaged"] = par.gates_averaged;
      res["parallel"] = std::move(pj);
    } else {
      res["parallel"] = nullptr;
    }
    doc["result"] = std::move(res);

    OutputSet out(fs::path(shared->out_dir) / "crosstalk", shared->force);
    out.add("crosstalk.json", dump_json(doc));
    out.add("crosstalk.csv", csv);
    out.commit();
    std::printf("crosstalk %dx%d: theta(1) = %s rad", lat.rows, lat.cols,
                fmt(theta1).c_str());
    if (fit_r.size() >= 2)
      std::printf(", slope(r in [3,10]) = %s",
                  fmt(io::loglog_slope(fit_r, fit_t)).c_str());
    std::printf("\n");
    std::printf("wrote %s\n",
                (out.dir() / "crosstalk.csv").string().c_str());
  }
};

struct ScheduleCmd {
  Shared* shared;
  int rows = 10;
  int cols = 10;
  int n = 5;
  CLI::Option *rows_opt = nullptr, *cols_opt = nullptr, *n_opt = nullptr;

  void run(const ojson& cfg) {
    ConfigLayer cl(cfg);
    cl.apply(rows_opt, "rows", rows);
    cl.apply(cols_opt, "cols", cols);
    cl.apply(n_opt, "n", n);

    const auto sched = ct::build_block_schedule(rows, cols, n);

    ojson echo;
    echo["rows"] = rows;
    echo["cols"] = cols;
    echo["n"] = n;
    echo["output_dir"] = shared->out_dir;
    ojson doc = document("schedule", echo);
    ojson res;
    res["n"] = sched.n;
    res["serial_depth"] = sched.serial_depth;
    int edges = 0;
    ojson sizes = ojson::array();
    ojson groups = ojson::array();
    for (const auto& grp : sched.groups) {
      sizes.push_back(grp.size());
      edges += static_cast<int>(grp.size());
      ojson g = ojson::array();
      for (const auto& [i, j] : grp) g.push_back(ojson::array({i, j}));
      groups.push_back(std::move(g));
    }
    res["edge_count"] = edges;
    res["group_sizes"] = std::move(sizes);
    res["groups"] = std::move(groups);
    doc["result"] = std::move(res);

    OutputSet out(fs::path(shared->out_dir) / "schedule", shared->force);
    out.add("schedule.json", dump_json(doc));
    out.commit();
    std::printf("schedule %dx%d n=%d: %d groups covering %d edges\n", rows,
                cols, n, sched.serial_depth, edges);
    std::printf("wrote %s\n", (out.dir() / "schedule.json").string().c_str());
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SDK gate designer for 2D trapped-ion lattices"};
  app.require_subcommand(1);
  app.fallthrough(true);

  Shared shared;
  app.add_option("--config", shared.config_path,
                 "JSON config file (flags override config fields)");
  app.add_option("--out", shared.out_dir, "output directory (default ./out)");
  app.add_flag("--force", shared.force, "overwrite existing output files");

  DesignCmd design{&shared, {}};
  auto* cd = app.add_subcommand("design",
                                "solve the gate design for a species/spacing");
  design.lat.attach(cd, false);

  ModesCmd modes{&shared, {}};
  auto* cm = app.add_subcommand("modes", "transverse phonon modes of a lattice");
  modes.lat.attach(cm, true);

  FidelityCmd fidelity{&shared, {}};
  auto* cf = app.add_subcommand("fidelity",
                                "thermal gate infidelity for an ion pair");
  fidelity.lat.attach(cf, true);
  fidelity.pattern_opt =
      cf->add_option("--pattern", fidelity.pattern,
                     "kick pattern, arms in units of M (e.g. +M,-M)");
  fidelity.temp_opt = cf->add_option(
      "--temperature", fidelity.temperature, "doppler, zero, or kelvin value");
  fidelity.i_opt = cf->add_option("--i", fidelity.ion_i,
                                  "first ion index (default: central pair)");
  fidelity.j_opt = cf->add_option("--j", fidelity.ion_j, "second ion index");
  fidelity.traj_opt =
      cf->add_option("--trajectory-samples", fidelity.trajectory_samples,
                     "per-kick sample count for trajectory.csv (0 = off)");

  SweepCmd sweep{&shared, {}};
  auto* cs_ = app.add_subcommand("sweep", "sweep spacing d or block size n");
  sweep.lat.attach(cs_, true);
  sweep.var_opt = cs_->add_option("--variable", sweep.variable, "d or n");
  sweep.pattern_opt = cs_->add_option("--pattern", sweep.pattern,
                                      "kick pattern (see fidelity)");
  sweep.temp_opt = cs_->add_option("--temperature", sweep.temperature,
                                   "doppler, zero, or kelvin value");
  sweep.dmin_opt = cs_->add_option("--d-min", sweep.dmin, "sweep start in m");
  sweep.dmax_opt = cs_->add_option("--d-max", sweep.dmax, "sweep end in m");
  sweep.points_opt = cs_->add_option("--points", sweep.points, "sweep points");
  sweep.nmin_opt = cs_->add_option("--n-min", sweep.nmin, "first block size");
  sweep.nmax_opt = cs_->add_option("--n-max", sweep.nmax, "last block size");
  sweep.numeric_opt = cs_->add_flag(
      "--numeric", sweep.numeric, "add the finite-lattice mode sum (n sweep)");

  DispersionCmd dispersion{&shared, {}};
  auto* cdi = app.add_subcommand(
      "dispersion", "band structure along Gamma-X-M-Gamma");
  dispersion.lat.attach(cdi, false);
  dispersion.radius_opt = cdi->add_option("--radius", dispersion.radius,
                                          "lattice-sum window radius");
  dispersion.points_opt = cdi->add_option(
      "--points", dispersion.points, "points per path segment");

  VelocityCmd velocity{&shared, {}};
  auto* cv = app.add_subcommand("velocity",
                                "group-velocity field over the zone");
  velocity.lat.attach(cv, false);
  velocity.grid_opt = cv->add_option("--grid", velocity.grid, "mesh size");
  velocity.radius_opt =
      cv->add_option("--radius", velocity.radius, "lattice-sum window radius");

  PropagateCmd propagate{&shared, {}};
  auto* cp = app.add_subcommand(
      "propagate", "disturbance propagation from a displaced ion");
  propagate.lat.attach(cp, true, 41, 41);
  propagate.z0_opt = cp->add_option("--z0", propagate.z0,
                                    "initial displacement in m");
  propagate.v0_opt =
      cp->add_option("--v0", propagate.v0, "initial velocity in m/s");
  propagate.source_opt = cp->add_option(
      "--source", propagate.source, "source ion index (default: center)");
  propagate.tp_opt = cp->add_option("--time-points", propagate.time_points,
                                    "samples across the window");
  propagate.periods_opt = cp->add_option(
      "--periods", propagate.periods, "window length in units of 2 pi/omega_z");

  CrosstalkCmd crosstalk{&shared, {}};
  auto* cc = app.add_subcommand("crosstalk",
                                "distant-pair rotation angles and parallel "
                                "per-gate error");
  crosstalk.lat.attach(cc, true, 31, 31);
  crosstalk.pattern_opt = cc->add_option("--pattern", crosstalk.pattern,
                                         "kick pattern (see fidelity)");
  crosstalk.rmax_opt = cc->add_option("--r-max", crosstalk.rmax,
                                      "largest pair separation in sites");
  crosstalk.n_opt = cc->add_option(
      "--n", crosstalk.n, "block size for the parallel per-gate error (>= 2)");
  crosstalk.boundary_opt =
      cc->add_flag("--include-boundary", crosstalk.include_boundary,
                   "average boundary gates too, not just interior ones");

  ScheduleCmd schedule{&shared, {}};
  auto* csc = app.add_subcommand("schedule",
                                 "parallel gate schedule for block size n");
  schedule.rows_opt = csc->add_option("--rows", schedule.rows, "lattice rows");
  schedule.cols_opt = csc->add_option("--cols", schedule.cols, "lattice cols");
  schedule.n_opt = csc->add_option("--n", schedule.n, "block size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage errors are exit code 2 regardless of CLI11 defaults
  }

  try {
    const ojson cfg = load_config(shared.config_path);
    ConfigLayer cl(cfg);
    std::string dir = shared.out_dir;
    // --out beats config; config beats the default
    if (app.count("--out") == 0) {
      auto it = cfg.find("output_dir");
      if (it != cfg.end()) dir = it->get<std::string>();
    }
    shared.out_dir = dir;

    if (cd->parsed()) design.run(cfg);
    else if (cm->parsed()) modes.run(cfg);
    else if (cf->parsed()) fidelity.run(cfg);
    else if (cs_->parsed()) sweep.run(cfg);
    else if (cdi->parsed()) dispersion.run(cfg);
    else if (cv->parsed()) velocity.run(cfg);
    else if (cp->parsed()) propagate.run(cfg);
    else if (cc->parsed()) crosstalk.run(cfg);
    else if (csc->parsed()) schedule.run(cfg);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 1;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 0;
}
