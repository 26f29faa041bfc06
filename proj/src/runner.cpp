#include "wrgsim/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "wrgsim/diagnostics.hpp"
#include "wrgsim/errors.hpp"
#include "wrgsim/format.hpp"
#include "wrgsim/graph.hpp"
#include "wrgsim/meanfield.hpp"
#include "wrgsim/model.hpp"
#include "wrgsim/particles.hpp"

namespace fs = std::filesystem;

namespace wrgsim {

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"simulate", "meanfield", "heat",          "compare",
                                             "graphstats", "cutdist", "concentration", "sweep"};
  return c;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["artifact_version"] = artifact_version;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["config"] = config_text;
  j["seed_offset"] = seed_offset;
  j["emit_plot_data"] = emit_plot_data;
  j["mode"] = mode;
  j["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : runs) j["runs"].push_back({{"n", r.n}, {"seed", r.seed}});
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files) j["files"].push_back({{"path", f.path}, {"fnv1a", f.fnv1a}, {"bytes", f.bytes}});
  j["metrics"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : metrics) j["metrics"][k] = v;
  j["status"] = status;
  j["message"] = message;
  j["exit_code"] = exit_code;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  RunManifest m;
  try {
    auto j = nlohmann::json::parse(text);
    m.artifact_version = j.at("artifact_version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config_text = j.at("config").get<std::string>();
    m.seed_offset = j.at("seed_offset").get<std::uint64_t>();
    m.emit_plot_data = j.value("emit_plot_data", false);
    m.mode = j.value("mode", std::string());
    for (const auto& r : j.at("runs")) m.runs.push_back({r.at("n").get<std::size_t>(), r.at("seed").get<std::uint64_t>()});
    m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
    for (const auto& f : j.at("files"))
      m.files.push_back({f.at("path").get<std::string>(), f.at("fnv1a").get<std::string>(), f.at("bytes").get<std::size_t>()});
    for (const auto& [k, v] : j.at("metrics").items()) m.metrics[k] = v.get<double>();
    m.status = j.value("status", std::string("ok"));
    m.message = j.value("message", std::string());
    m.exit_code = j.value("exit_code", 0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("--manifest", std::string("malformed manifest: ") + e.what());
  }
  return m;
}

namespace {

class Outputs {
 public:
  Outputs(fs::path dir, std::string hash) : dir_(std::move(dir)), hash_(std::move(hash)) {
    fs::create_directories(dir_);
  }

  // Every CSV starts with the config hash and the column units.
  void csv(const std::string& name, const std::string& columns, const std::string& units,
           const std::string& body) {
    raw(name, "# config_hash=" + hash_ + " units=" + units + "\n" + columns + "\n" + body);
  }

  void raw(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    files_.push_back({name, hex64(fnv1a(content)), content.size()});
  }

  const std::vector<OutputFile>& files() const { return files_; }
  const std::string& hash() const { return hash_; }

 private:
  fs::path dir_;
  std::string hash_;
  std::vector<OutputFile> files_;
};

std::string fmt(double v) { return format_double(v); }

template <class Fn>
auto as_config_error(const std::string& field, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PreconditionError& e) {
    throw ConfigError(field, e.what());
  } catch (const KernelDomainError& e) {
    throw ConfigError(field, e.what());
  }
}

void check_kernel_params(const std::string& field, const std::string& name, const Params& p) {
  std::vector<std::string> allowed;
  if (name == "er" || name == "constant") allowed = {"p"};
  else if (name == "indicator") allowed = {"R"};
  else if (name == "abs-power" || name == "power-y" || name == "power-xy") allowed = {"alpha"};
  for (const auto& [k, v] : p)
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError(field + "." + k, "not a parameter of kernel " + name);
}

struct Setup {
  const Config& cfg;
  RunOptions opt;
  Kernel P, W;
  DilutionKind dilution = DilutionKind::uniform;
  std::string rho_spec;
  PositionScheme scheme = PositionScheme::deterministic;
  ReferenceLaw law = ReferenceLaw::uniform_unit;
  int pos_dim = 1;
  ModelSpec model;
  InitialLaw init;
  double T = 1, h = 0.01;
  std::size_t Q = 32, M = 200, stride = 1, replicas = 10, n = 100;
  std::vector<std::size_t> n_list;
  std::vector<std::uint64_t> seeds;
  bool kernel_system = false;

  Setup(const Config& c, const RunOptions& o) : cfg(c), opt(o) {
    validate_schema(cfg);
    const std::string kname = cfg.text("kernel.name", "constant");
    const std::string base = cfg.text("kernel.base", "");
    const std::vector<std::string> reserved = {"name", "base", "dilution", "rho"};
    Params kp = cfg.params("kernel", reserved);
    check_kernel_params("kernel", kname == "normalized" ? base : kname, kp);
    P = as_config_error("kernel.name", [&] { return builtin_kernel(kname, kp, base); });
    const std::string dil = cfg.text("kernel.dilution", "uniform");
    if (dil == "uniform") dilution = DilutionKind::uniform;
    else if (dil == "degree-normalized" || dil == "degree_normalized") dilution = DilutionKind::degree_normalized;
    else throw ConfigError("kernel.dilution", "expected uniform or degree-normalized, got " + dil);
    rho_spec = cfg.text("kernel.rho", "1");
    rho_for(2);
    if (cfg.has("macro.name")) {
      const std::string mname = cfg.text("macro.name", ""), mbase = cfg.text("macro.base", "");
      Params mp = cfg.params("macro", {"name", "base"});
      check_kernel_params("macro", mname == "normalized" ? mbase : mname, mp);
      W = as_config_error("macro.name", [&] { return builtin_kernel(mname, mp, mbase); });
    } else {
      W = dilution == DilutionKind::uniform ? P : normalized_kernel(P);
    }

    const std::string sch = cfg.text("positions.scheme", "deterministic");
    if (sch == "deterministic") scheme = PositionScheme::deterministic;
    else if (sch == "iid") scheme = PositionScheme::iid;
    else if (sch == "midpoint") scheme = PositionScheme::midpoint;
    else throw ConfigError("positions.scheme", "expected deterministic, iid or midpoint, got " + sch);
    const std::string lw = cfg.text("positions.law", "uniform");
    if (lw == "uniform") law = ReferenceLaw::uniform_unit;
    else if (lw == "gaussian") law = ReferenceLaw::gaussian;
    else throw ConfigError("positions.law", "expected uniform or gaussian, got " + lw);
    pos_dim = static_cast<int>(cfg.count("positions.dim", 1));
    if (pos_dim < 1) throw ConfigError("positions.dim", "must be >= 1");

    const std::string mname = cfg.text("model.name", "kuramoto");
    model = as_config_error("model", [&] { return builtin_model(mname, cfg.params("model", {"name"})); });

    const std::string il = cfg.text("init.law", "point");
    const double offset = cfg.number("init.offset", 0), slope = cfg.number("init.slope", 0);
    if (il == "point") init = affine_point_law(offset, slope, model.dim);
    else if (il == "uniform")
      init = as_config_error("init", [&] {
        return uniform_law(cfg.number("init.lo", 0), cfg.number("init.hi", 2 * M_PI), model.dim);
      });
    else if (il == "gaussian")
      init = as_config_error("init.sd", [&] { return gaussian_law(offset, slope, cfg.number("init.sd", 1), model.dim); });
    else throw ConfigError("init.law", "expected point, uniform or gaussian, got " + il);

    T = cfg.number("numerics.T", 1);
    h = cfg.number("numerics.h", 0.01);
    if (!(T >= 0)) throw ConfigError("numerics.T", "must be >= 0");
    if (!(h > 0)) throw ConfigError("numerics.h", "must be positive");
    as_config_error("numerics.h", [&] { return step_count(T, h); });
    Q = cfg.count("numerics.Q", 32);
    M = cfg.count("numerics.M", 200);
    stride = std::max<std::size_t>(1, cfg.count("numerics.stride", 1));
    if (Q == 0) throw ConfigError("numerics.Q", "must be positive");
    if (M < 2) throw ConfigError("numerics.M", "must be >= 2");
    replicas = cfg.count("run.replicas", 10);
    if (replicas == 0) throw ConfigError("run.replicas", "must be positive");
    n = cfg.count("run.n", 100);
    if (n == 0) throw ConfigError("run.n", "must be positive");
    n_list = cfg.counts("run.n_list");
    for (auto v : n_list)
      if (v == 0) throw ConfigError("run.n_list", "entries must be positive");
    auto s = cfg.counts("run.seeds");
    if (s.empty()) s = {1};
    for (auto v : s) seeds.push_back(static_cast<std::uint64_t>(v) + opt.seed_offset);
    const std::string sys = cfg.text("run.system", "graph");
    if (sys != "graph" && sys != "kernel") throw ConfigError("run.system", "expected graph or kernel");
    kernel_system = sys == "kernel";
  }

  double rho_for(std::size_t nn) const {
    if (rho_spec.rfind("n^-", 0) == 0) {
      double delta;
      std::istringstream is(rho_spec.substr(3));
      if (!(is >> delta) || !is.eof()) throw ConfigError("kernel.rho", "expected n^-delta, got " + rho_spec);
      return as_config_error("kernel.rho", [&] { return rho_from_rule(nn, delta); });
    }
    double r = cfg.number("kernel.rho", 1);
    if (!(r > 0 && r <= 1)) throw ConfigError("kernel.rho", "must lie in (0, 1] or be n^-delta");
    return r;
  }

  MicroKernel micro(std::size_t nn) const { return {P, rho_for(nn)}; }

  PositionGrid positions(std::size_t nn, std::uint64_t seed) const {
    return as_config_error("positions", [&] {
      return make_positions(scheme, nn, pos_dim,
                            scheme == PositionScheme::iid ? std::optional<std::uint64_t>(seed) : std::nullopt, law);
    });
  }

  PositionGrid quadrature() const {
    if (scheme == PositionScheme::iid || pos_dim != 1 || law != ReferenceLaw::uniform_unit)
      throw ConfigError("positions.scheme", "mean-field pipelines use unit-interval positions");
    return midpoint_grid(Q);
  }

  struct Sampled {
    PositionGrid grid;
    Dilution dil;
    RandomGraph graph;
    MicroKernel mk;
  };
  Sampled sample(std::size_t nn, std::uint64_t seed) const {
    Sampled s;
    s.mk = micro(nn);
    s.grid = positions(nn, seed);
    s.dil = as_config_error("kernel.dilution", [&] { return make_dilution(dilution, s.mk, s.grid, opt.threads); });
    s.graph = sample_graph(s.mk, s.dil.kappas(), s.grid, seed, opt.threads);
    return s;
  }

  std::vector<Trajectory> system_runs(const Sampled& s, std::uint64_t seed) const {
    std::vector<Trajectory> out;
    NoiseBath bath{seed, 0, 1};
    SimOptions so{opt.threads, stride};
    for (std::size_t r = 0; r < replicas; ++r)
      out.push_back(kernel_system ? simulate_w_system(W, s.grid, model, init, T, h, bath, r, so)
                                  : simulate_graph_system(s.graph, model, init, T, h, bath, r, so));
    return out;
  }

  MeanFieldSolution solve_meanfield(std::size_t snapshot_stride) const {
    PicardOptions po;
    po.tol = cfg.number("numerics.tol", 1e-8);
    po.max_iter = static_cast<int>(cfg.count("numerics.max_iter", 50));
    po.seed = cfg.seed("numerics.mf_seed", 0) + opt.seed_offset;
    po.threads = opt.threads;
    po.window = cfg.number("numerics.window", 1.0);
    po.snapshot_stride = snapshot_stride;
    return as_config_error("numerics", [&] { return picard_solve(model, W, quadrature(), M, init, T, h, po); });
  }

  std::vector<Trajectory> copy_runs(const MeanFieldSolution& mf, const Sampled& s, std::uint64_t seed) const {
    std::vector<Trajectory> out;
    NoiseBath bath{seed, 0, 1};
    SimOptions so{opt.threads, stride};
    for (std::size_t r = 0; r < replicas; ++r)
      out.push_back(simulate_coupled_copies(mf, W, s.grid, model, init, T, h, bath, r, so));
    return out;
  }

  CutOptions cut_options(std::size_t nn) const {
    CutOptions co;
    if (opt.mode) co.mode = *opt.mode;
    else if (cfg.has("cut.mode")) co.mode = as_config_error("cut.mode", [&] { return parse_cut_mode(cfg.text("cut.mode", "")); });
    else co.mode = nn <= kMaxExactCut ? CutMode::exact : CutMode::heuristic;
    if (co.mode == CutMode::exact && nn > kMaxExactCut)
      throw ConfigError("cut.mode", "exact mode needs n <= " + std::to_string(kMaxExactCut));
    co.restarts = cfg.count("cut.restarts", 64);
    co.threads = opt.threads;
    return co;
  }
};

struct Table {
  std::string body;
  void row(std::size_t n, std::uint64_t seed, const std::string& metric, double value, double se = 0) {
    body += std::to_string(n) + "," + std::to_string(seed) + "," + metric + "," + fmt(value) + "," + fmt(se) + "\n";
  }
};

constexpr const char* kTableColumns = "n,seed,metric,value,stderr";
constexpr const char* kTableUnits = "-,-,-,metric,metric";

struct Context {
  Setup& setup;
  Outputs& out;
  RunManifest& manifest;
  std::string plot;  // tidy long rows: series,x,y

  void plot_row(const std::string& series, double x, double y) {
    plot += series + "," + fmt(x) + "," + fmt(y) + "\n";
  }
  void metric(const std::string& name, double v) {
    auto it = manifest.metrics.find(name);
    manifest.metrics[name] = it == manifest.metrics.end() ? v : std::max(it->second, v);
  }
};

void run_simulate(Context& c) {
  auto& s = c.setup;
  std::string body;
  for (auto seed : s.seeds) {
    auto smp = s.sample(s.n, seed);
    c.manifest.runs.push_back({s.n, seed});
    for (const auto& tr : s.system_runs(smp, seed)) {
      std::ostringstream os;
      write_trajectory_csv(tr, os);
      body += os.str();
      if (seed == s.seeds.front() && tr.replica == 0)
        for (std::size_t k = 0; k < tr.stored(); ++k)
          for (std::size_t i = 0; i < tr.n; ++i)
            c.plot_row("seed" + std::to_string(seed) + "_replica" + std::to_string(tr.replica) + "_particle" + std::to_string(i),
                       tr.time(k), tr.state(k, i)[0]);
    }
  }
  c.out.csv("trajectory.csv", "replica,step,time,particle,component,value", "-,-,time,-,-,state", body);
}

std::string profile_body(const ProfileField& f, std::size_t stride) {
  std::ostringstream os;
  write_profile_csv(f, os, stride);
  return os.str();
}

void plot_profile(Context& c, const ProfileField& f, std::size_t stride) {
  for (std::size_t s = 0; s <= f.steps; s += stride)
    for (std::size_t q = 0; q < f.Q(); ++q) c.plot_row("node" + std::to_string(q), static_cast<double>(s) * f.h, f.at(s, q)[0]);
}

void run_meanfield(Context& c) {
  auto& s = c.setup;
  auto mf = s.solve_meanfield(0);
  c.manifest.runs.push_back({0, s.cfg.seed("numerics.mf_seed", 0) + s.opt.seed_offset});
  auto prof = mean_profile(mf);
  c.out.csv("meanfield_means.csv", "time,x,component,value", "time,position,-,state", profile_body(prof, s.stride));
  std::string gaps;
  for (std::size_t k = 0; k < mf.gaps.size(); ++k) gaps += std::to_string(k + 2) + "," + fmt(mf.gaps[k]) + "\n";
  c.out.csv("picard_gaps.csv", "iterate,gap", "-,state", gaps);
  c.metric("picard_final_gap", mf.final_gap);
  c.metric("picard_sweeps", static_cast<double>(mf.sweeps));
  if (!mf.converged) c.manifest.message = "picard iteration stopped at max_iter before reaching tol";
  plot_profile(c, prof, s.stride);
}

void run_heat(Context& c) {
  auto& s = c.setup;
  auto quad = s.quadrature();
  auto psi0 = psi0_from_init(s.init, quad);
  auto f = heat_solve(s.model, s.W, quad, psi0.values, s.T, s.h, s.opt.threads, true);
  c.out.csv("heat_profile.csv", "time,x,component,value", "time,position,-,state", profile_body(f, s.stride));
  c.metric("heat_self_convergence", f.self_convergence);
  plot_profile(c, f, s.stride);
}

TestFunction make_phi(const std::string& name) {
  if (name == "theta") return [](std::span<const double> th, double) { return th[0]; };
  if (name == "sin") return [](std::span<const double> th, double) { return std::sin(th[0]); };
  if (name == "cos") return [](std::span<const double> th, double) { return std::cos(th[0]); };
  throw ConfigError("diagnostics.phi", "expected theta, sin or cos, got " + name);
}

void run_compare(Context& c) {
  auto& s = c.setup;
  const auto select = s.cfg.text("diagnostics.select", "propagation,empirical,profile,identification");
  auto wants = [&](const std::string& what) { return ("," + select + ",").find("," + what + ",") != std::string::npos; };
  const auto phi = make_phi(s.cfg.text("diagnostics.phi", "theta"));
  const double k = s.cfg.number("diagnostics.k", 2);
  const std::size_t K = s.cfg.count("diagnostics.dictionary", 4);
  auto mf = s.solve_meanfield(s.stride);
  DiagnosticsReport rep;
  rep.provenance["config_hash"] = c.out.hash();
  rep.provenance["n"] = std::to_string(s.n);
  rep.provenance["replicas"] = std::to_string(s.replicas);
  rep.provenance["picard_tol"] = fmt(s.cfg.number("numerics.tol", 1e-8));
  rep.provenance["dictionary"] = trig_dictionary(K).name;
  Table t;
  for (auto seed : s.seeds) {
    auto smp = s.sample(s.n, seed);
    c.manifest.runs.push_back({s.n, seed});
    auto sys = s.system_runs(smp, seed);
    const std::string tag = "seed" + std::to_string(seed) + ".";
    if (wants("propagation")) {
      auto copies = s.copy_runs(mf, smp, seed);
      auto p = propagation_error(sys, copies);
      t.row(s.n, seed, "propagation_error", p.max, p.max_stderr);
      t.row(s.n, seed, "propagation_error_p95", p.p95, p.p95_stderr);
      rep.add(tag + "propagation_error", p.max, p.max_stderr);
      rep.add(tag + "propagation_error_p95", p.p95, p.p95_stderr);
      c.metric("propagation_error", p.max);
    }
    if (wants("empirical")) {
      auto e = empirical_measure_error(sys, mf, phi);
      t.row(s.n, seed, "empirical_error", e.error.value, e.error.stderr_);
      rep.add(tag + "empirical_error", e.error.value, e.error.stderr_);
      c.metric("empirical_error", e.error.value);
    }
    if (wants("profile") && s.scheme != PositionScheme::iid) {
      auto quad = s.quadrature();
      auto psi = heat_solve(s.model, s.W, quad, psi0_from_init(s.init, quad).values, s.T, s.h, s.opt.threads);
      double worst = 0;
      for (const auto& tr : sys) worst = std::max(worst, profile_error(tr, psi, k));
      t.row(s.n, seed, "profile_error", worst);
      rep.add(tag + "profile_error", worst);
      c.metric("profile_error", worst);
    }
  }
  if (wants("identification")) {
    auto quad = s.quadrature();
    auto psi = heat_solve(s.model, s.W, quad, psi0_from_init(s.init, quad).values, s.T, s.h, s.opt.threads);
    auto r = identification_residual(psi, mf, trig_dictionary(K));
    t.row(0, 0, "identification_residual", r.residual, r.stderr_at_max);
    rep.add("identification_residual", r.residual, r.stderr_at_max);
    rep.add("identification_max_stderr", r.max_stderr);
    c.metric("identification_residual", r.residual);
  }
  for (const auto& [name, bound] : s.cfg.values)
    if (name.rfind("bounds.", 0) == 0) {
      auto it = c.manifest.metrics.find(name.substr(7));
      if (it != c.manifest.metrics.end())
        rep.flag(name.substr(7), name.substr(7) + " <= " + bound, it->second <= std::stod(bound));
    }
  c.out.csv("compare.csv", kTableColumns, kTableUnits, t.body);
  c.out.raw("report.json", rep.to_json() + "\n");
  for (const auto& e : rep.entries) c.plot_row(e.name, 0, e.value);
}

void run_graphstats(Context& c) {
  auto& s = c.setup;
  Table t;
  for (auto seed : s.seeds) {
    auto smp = s.sample(s.n, seed);
    c.manifest.runs.push_back({s.n, seed});
    auto ds = degree_stats(smp.graph);
    t.row(s.n, seed, "edges", static_cast<double>(smp.graph.edge_count()));
    t.row(s.n, seed, "min_degree", static_cast<double>(ds.min_degree));
    t.row(s.n, seed, "max_degree", static_cast<double>(ds.max_degree));
    t.row(s.n, seed, "mean_degree", ds.mean_degree);
    const double bn = b_n(smp.graph);
    t.row(s.n, seed, "b_n", bn);
    t.row(s.n, seed, "rho", smp.mk.rho);
    t.row(s.n, seed, "kappa_cap", smp.dil.kappa_cap);
    t.row(s.n, seed, "w_cap", smp.dil.w_cap);
    const double dn = as_config_error("kernel", [&] { return delta_n(s.W, smp.mk, smp.dil, smp.grid, s.opt.threads); });
    t.row(s.n, seed, "delta_n", dn);
    c.metric("b_n", bn);
    c.metric("delta_n", dn);
    std::ostringstream os;
    export_edges(smp.graph, os);
    c.out.raw("edges_seed" + std::to_string(seed) + ".txt", "# config_hash=" + c.out.hash() + " units=node,node\n" + os.str());
    for (std::size_t i = 0; i < ds.degrees.size(); ++i)
      c.plot_row("degree_seed" + std::to_string(seed), static_cast<double>(i), static_cast<double>(ds.degrees[i]));
  }
  c.out.csv("graphstats.csv", kTableColumns, kTableUnits, t.body);
}

void run_cutdist(Context& c) {
  auto& s = c.setup;
  Table t;
  const auto co = s.cut_options(s.n);
  const int gauss = static_cast<int>(s.cfg.count("cut.gauss", 4));
  for (auto seed : s.seeds) {
    auto smp = s.sample(s.n, seed);
    c.manifest.runs.push_back({s.n, seed});
    auto opt = co;
    opt.seed = seed;
    auto r = cut_distance_graph_kernel(renormalize(smp.graph), s.W, opt, gauss);
    t.row(s.n, seed, std::string("cut_distance_") + to_string(r.mode), r.value);
    c.metric("cut_distance", r.value);
    c.plot_row("cut_distance", static_cast<double>(seed), r.value);
    if (s.cfg.flag("cut.aux", false)) {
      auto a = aux_graphs(smp.graph, smp.mk, s.W, opt, gauss);
      t.row(s.n, seed, "cut_graph_h1", a.graph_h1);
      t.row(s.n, seed, "cut_h1_h2", a.h1_h2);
      t.row(s.n, seed, "cut_h2_w", a.h2_w);
      t.row(s.n, seed, "delta_n", a.delta);
      c.metric("cut_h1_h2_excess", a.h1_h2 - a.delta);
    }
  }
  c.out.csv("cutdist.csv", kTableColumns, kTableUnits, t.body);
}

void run_concentration(Context& c) {
  auto& s = c.setup;
  const double kappa = s.cfg.number("concentration.kappa", 5), w = s.cfg.number("concentration.w", 0.2);
  const std::size_t n = s.cfg.count("concentration.n", 2000), trials = s.cfg.count("concentration.trials", 10000);
  const double p = s.cfg.number("concentration.p", w), v = s.cfg.number("concentration.v", 1);
  Table t;
  for (auto seed : s.seeds) {
    c.manifest.runs.push_back({n, seed});
    auto r = as_config_error("concentration", [&] {
      return concentration_check(kappa, w, n, std::vector<double>(n, p), std::vector<double>(n, v), trials, seed,
                                 s.opt.threads);
    });
    t.row(n, seed, "epsilon_n", r.epsilon);
    t.row(n, seed, "empirical_tail", r.empirical_tail, std::sqrt(r.empirical_tail * (1 - r.empirical_tail) / static_cast<double>(trials)));
    t.row(n, seed, "bound", r.bound);
    t.row(n, seed, "pass", r.pass ? 1 : 0);
    c.metric("concentration_tail_excess", r.empirical_tail - r.bound);
    c.plot_row("empirical_tail", static_cast<double>(seed), r.empirical_tail);
  }
  c.out.csv("concentration.csv", kTableColumns, kTableUnits, t.body);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void run_sweep(Context& c) {
  auto& s = c.setup;
  const std::string metric = s.cfg.text("sweep.metric", "propagation_error");
  auto ns = s.n_list.empty() ? std::vector<std::size_t>{s.n} : s.n_list;
  std::optional<MeanFieldSolution> mf;
  if (metric == "propagation_error") mf = s.solve_meanfield(0);
  else if (metric != "cut_distance" && metric != "delta_n" && metric != "b_n")
    throw ConfigError("sweep.metric", "expected propagation_error, cut_distance, delta_n or b_n, got " + metric);
  Table t;
  std::string trend;
  for (auto nn : ns) {
    std::vector<double> vals;
    for (auto seed : s.seeds) {
      auto smp = s.sample(nn, seed);
      c.manifest.runs.push_back({nn, seed});
      double v = 0, se = 0;
      if (metric == "propagation_error") {
        auto p = propagation_error(s.system_runs(smp, seed), s.copy_runs(*mf, smp, seed));
        v = p.max;
        se = p.max_stderr;
      } else if (metric == "cut_distance") {
        auto opt = s.cut_options(nn);
        opt.seed = seed;
        v = cut_distance_graph_kernel(renormalize(smp.graph), s.W, opt, static_cast<int>(s.cfg.count("cut.gauss", 4))).value;
      } else if (metric == "delta_n") {
        v = delta_n(s.W, smp.mk, smp.dil, smp.grid, s.opt.threads);
      } else {
        v = b_n(smp.graph);
      }
      t.row(nn, seed, metric, v, se);
      vals.push_back(v);
    }
    double mean = 0, ss = 0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double se = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1) / static_cast<double>(vals.size())) : 0;
    const double med = median(vals);
    trend += std::to_string(nn) + "," + metric + "," + fmt(mean) + "," + fmt(med) + "," + fmt(se) + "," +
             std::to_string(vals.size()) + "\n";
    c.metric(metric, med);
    c.plot_row(metric, static_cast<double>(nn), med);
  }
  c.out.csv("sweep.csv", kTableColumns, kTableUnits, t.body);
  c.out.csv("sweep_trend.csv", "n,metric,mean,median,stderr,seeds", "-,-,metric,metric,metric,-", trend);
}

}  // namespace

RunManifest run_experiment(const std::string& command, const Config& cfg, const RunOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  if (std::find(commands().begin(), commands().end(), command) == commands().end())
    throw ConfigError("command", "unknown command " + command);
  if (cfg.has("command") && cfg.text("command", "") != command)
    throw ConfigError("command", "config is for '" + cfg.text("command", "") + "', not '" + command + "'");
  Setup setup(cfg, opt);
  for (const auto& [key, value] : cfg.values)
    if (key.rfind("bounds.", 0) == 0) cfg.number(key, 0);

  RunManifest man;
  man.command = command;
  man.config_text = normalized(cfg);
  man.config_hash = config_hash(cfg);
  man.seed_offset = opt.seed_offset;
  man.emit_plot_data = opt.emit_plot_data;
  man.mode = opt.mode ? to_string(*opt.mode) : "";
  Outputs out(opt.out_dir, man.config_hash);
  Context ctx{setup, out, man, {}};

  auto finish = [&]() {
    if (opt.emit_plot_data)
      out.csv("plot_" + command + ".csv", "series,x,y", "-,see-series,see-series", ctx.plot);
    man.files = out.files();
    man.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream(fs::path(opt.out_dir) / "manifest.json") << man.to_json();
  };

  try {
    if (command == "simulate") run_simulate(ctx);
    else if (command == "meanfield") run_meanfield(ctx);
    else if (command == "heat") run_heat(ctx);
    else if (command == "compare") run_compare(ctx);
    else if (command == "graphstats") run_graphstats(ctx);
    else if (command == "cutdist") run_cutdist(ctx);
    else if (command == "concentration") run_concentration(ctx);
    else run_sweep(ctx);
  } catch (const NumericalAbort& e) {
    man.status = "numerical_abort";
    man.message = e.what();
    man.exit_code = 3;
    finish();
    return man;
  }

  for (const auto& [key, value] : cfg.values) {
    if (key.rfind("bounds.", 0) != 0) continue;
    const std::string metric = key.substr(7);
    auto it = man.metrics.find(metric);
    if (it == man.metrics.end()) throw ConfigError(key, "metric not produced by " + command);
    if (it->second > cfg.number(key, 0)) {
      man.status = "bound_violation";
      man.exit_code = 4;
      man.message += (man.message.empty() ? "" : "; ") + metric + " = " + fmt(it->second) + " exceeds " + value;
    }
  }
  finish();
  return man;
}

ReplayResult replay(const std::string& manifest_path, const RunOptions& opt) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("--manifest", "cannot open " + manifest_path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto stored = RunManifest::from_json(ss.str());
  RunOptions o = opt;
  o.seed_offset = stored.seed_offset;
  o.emit_plot_data = stored.emit_plot_data;
  if (!stored.mode.empty()) o.mode = parse_cut_mode(stored.mode);
  auto cfg = parse_config(stored.config_text);
  ReplayResult r;
  r.manifest = run_experiment(stored.command, cfg, o);
  if (r.manifest.config_hash != stored.config_hash) r.mismatches.push_back("config_hash");
  if (r.manifest.files.size() != stored.files.size()) r.mismatches.push_back("file count");
  for (std::size_t i = 0; i < std::min(r.manifest.files.size(), stored.files.size()); ++i) {
    const auto& a = r.manifest.files[i];
    const auto& b = stored.files[i];
    if (a.path != b.path || a.fnv1a != b.fnv1a || a.bytes != b.bytes) r.mismatches.push_back(b.path);
  }
  r.identical = r.mismatches.empty();
  return r;
}

}  // namespace wrgsim
