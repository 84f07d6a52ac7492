#include "acs/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>

#include "acs/ansatz.hpp"
#include "acs/errors.hpp"
#include "acs/fermi.hpp"
#include "acs/identities.hpp"
#include "acs/io.hpp"
#include "acs/jacobi.hpp"
#include "acs/profile.hpp"
#include "acs/reduction.hpp"
#include "acs/residual.hpp"
#include "acs/spectra.hpp"
#include "acs/surface.hpp"

namespace acs::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_defaults() {
  return {
      {"f", "cubic"},
      {"profile_T", 20.0},
      {"profile_n", 2001},
      {"surface", "catenoid"},
      {"surface_R", 20.0},
      {"grid", 201},
      {"n_theta", 1},
      {"alpha", {0.1}},
      {"beta", nullptr},  // null: (-1, 1) on the catenoid, zeros elsewhere
      {"delta", 0.3},
      {"tol", 1e-8},
      {"max_iter", 80},
      {"threads", 0},
      {"exec", "parallel"},
      {"R", json::array()},
      {"flux_R", {4.0, 6.0, 8.0, 12.0, 16.0}},
      {"nev", 4},
      {"field", "reduced"},
      {"morse_grids", {{{"n_s", 121}, {"dt", 0.1}}, {{"n_s", 161}, {"dt", 0.08}}}},
      {"slice_n", 161},
  };
}

json command_defaults(const std::string& cmd) {
  if (cmd == "jacobi-index") return {{"R", {5.0, 10.0, 20.0}}};
  if (cmd == "residual-scaling") return {{"alpha", {0.2, 0.1, 0.05}}};
  if (cmd == "morse") return {{"alpha", {0.15, 0.1}}, {"R", {8.0, 16.0}}};
  if (cmd == "identities") return {{"R", {20.0, 40.0, 80.0, 160.0}}};
  return json::object();
}

[[noreturn]] void config_error(const std::string& msg, json detail = {}) {
  throw Error(ErrorCode::ConfigError, msg, std::move(detail));
}

double number(const json& c, const char* key) {
  if (!c.at(key).is_number()) config_error("expected a number", {{"key", key}});
  return c.at(key).get<double>();
}

int integer(const json& c, const char* key) {
  if (!c.at(key).is_number_integer()) config_error("expected an integer", {{"key", key}});
  return c.at(key).get<int>();
}

std::vector<double> numbers(const json& c, const char* key) {
  const auto& v = c.at(key);
  if (!v.is_array()) config_error("expected a list of numbers", {{"key", key}});
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) config_error("expected a list of numbers", {{"key", key}});
    out.push_back(x.get<double>());
  }
  return out;
}

std::string text(const json& c, const char* key) {
  if (!c.at(key).is_string()) config_error("expected a string", {{"key", key}});
  return c.at(key).get<std::string>();
}

void validate(const std::string& cmd, const json& c) {
  const auto alpha = numbers(c, "alpha");
  if (alpha.empty()) config_error("alpha list is empty");
  for (double a : alpha)
    if (!(a > 0 && a <= 0.5)) config_error("alpha must lie in (0, 0.5]", {{"alpha", a}});
  const auto surf = text(c, "surface");
  if (surf != "catenoid" && surf != "plane" && !fs::exists(surf)) config_error("surface file not found", {{"surface", surf}});
  if (number(c, "surface_R") <= 0) config_error("surface_R must be positive");
  if (integer(c, "grid") < 5) config_error("grid needs at least 5 nodes");
  if (integer(c, "n_theta") < 1) config_error("n_theta must be positive");
  if (integer(c, "profile_n") < 11) config_error("profile_n too small");
  if (number(c, "profile_T") <= 0) config_error("profile_T must be positive");
  if (!c.at("beta").is_null()) numbers(c, "beta");
  if (number(c, "delta") <= 0) config_error("delta must be positive");
  if (number(c, "tol") <= 0) config_error("tol must be positive");
  if (integer(c, "max_iter") < 1) config_error("max_iter must be positive");
  if (integer(c, "threads") < 0) config_error("threads must be >= 0");
  if (integer(c, "nev") < 1) config_error("nev must be positive");
  if (integer(c, "slice_n") < 2) config_error("slice_n must be at least 2");
  const auto ex = text(c, "exec");
  if (ex != "parallel" && ex != "serial") config_error("exec must be parallel or serial");
  const auto fld = text(c, "field");
  if (fld != "reduced" && fld != "u1") config_error("field must be reduced or u1");
  for (double r : numbers(c, "R"))
    if (!(r > 0)) config_error("R values must be positive");
  for (double r : numbers(c, "flux_R"))
    if (!(r > 0)) config_error("flux_R values must be positive");
  if (!c.at("morse_grids").is_array() || c.at("morse_grids").empty()) config_error("morse_grids must be a non-empty list");
  for (const auto& g : c.at("morse_grids")) {
    if (!g.is_object() || !g.contains("n_s") || !g.contains("dt")) config_error("morse grid needs n_s and dt");
    if (!g["n_s"].is_number_integer() || g["n_s"].get<int>() < 5 || !g["dt"].is_number() || g["dt"].get<double>() <= 0) {
      config_error("bad morse grid", {{"grid", g}});
    }
  }
  if (cmd == "jacobi-index" && numbers(c, "R").size() < 3) config_error("jacobi-index needs at least three R values");
  if (cmd == "morse" && numbers(c, "R").empty()) config_error("morse needs R values");
  if (cmd == "identities" && numbers(c, "R").size() < 2) config_error("identities needs at least two R values");
}

Surface make_surface(const json& c) {
  const auto name = text(c, "surface");
  const double R = number(c, "surface_R");
  const int n = integer(c, "grid"), nt = integer(c, "n_theta");
  if (name == "catenoid") return catenoid(R, n, nt);
  if (name == "plane") return plane(R, n, nt);
  const json j = io::read_json(name);
  if (!j.contains("ends") || !j["ends"].is_array()) config_error("surface file needs an ends list", {{"surface", name}});
  std::vector<EndData> ends;
  try {
    for (const auto& e : j["ends"]) {
      EndData d;
      d.a = e.value("a", 0.0);
      d.b = e.value("b", 0.0);
      d.b1 = e.value("b1", 0.0);
      d.b2 = e.value("b2", 0.0);
      d.sign = e.value("sign", 1);
      d.R0 = e.value("R0", 2.0);
      ends.push_back(d);
    }
  } catch (const json::exception& e) {
    config_error("malformed end data", {{"surface", name}, {"what", e.what()}});
  }
  CoreSpec core;
  core.R_max = R;
  core.n_r = n;
  core.n_theta = nt;
  core.cap = j.value("cap", 1.0);
  return from_end_data(ends, core);
}

std::string tag(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

// Chart, ansatz and global field of u1 for one alpha; heap-held so the
// internal pointers stay valid.
struct Built {
  std::unique_ptr<FermiChart> chart;
  std::unique_ptr<Ansatz> ansatz;
  std::unique_ptr<GlobalField> W;
};

class Runner {
 public:
  Runner(std::string cmd, json cfg, std::string dir) : cmd_(std::move(cmd)), cfg_(std::move(cfg)), dir_(std::move(dir)) {
    man_.command = cmd_;
    man_.config = cfg_;
    exec_ = text(cfg_, "exec") == "serial" ? Exec::Serial : Exec::Parallel;
  }

  io::Manifest& manifest() { return man_; }
  void write_manifest() const { io::write_json(path("manifest.json"), man_.to_json()); }

  void execute() {
    if (const int t = integer(cfg_, "threads"); t > 0) omp_set_num_threads(t);
    if (cmd_ == "profile") return profile_cmd();
    if (cmd_ == "surface") return surface_cmd();
    if (cmd_ == "jacobi-index") return jacobi_index_cmd();
    if (cmd_ == "log-jacobi") return log_jacobi_cmd();
    if (cmd_ == "ansatz") return ansatz_cmd();
    if (cmd_ == "residual-scaling") return residual_cmd();
    if (cmd_ == "reduce") return reduce_cmd();
    if (cmd_ == "morse") return morse_cmd();
    if (cmd_ == "identities") return identities_cmd();
    config_error("unknown command", {{"command", cmd_}});
  }

 private:
  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }
  void emit(const std::string& name, const json& j) {
    io::write_json(path(name), j);
    man_.artifacts.push_back(name);
  }
  void emit(const std::string& name, const io::Table& t) {
    io::write_csv(path(name), t);
    man_.artifacts.push_back(name);
  }
  void mark(const std::string& name) { man_.artifacts.push_back(name); }

  const Profile& prof() {
    if (!profile_) {
      profile_ = std::make_unique<Profile>(
          solve_heteroclinic(nonlinearity_by_name(text(cfg_, "f")), number(cfg_, "profile_T"), integer(cfg_, "profile_n")));
    }
    return *profile_;
  }
  const Surface& surf() {
    if (!surface_) surface_ = std::make_unique<Surface>(make_surface(cfg_));
    return *surface_;
  }
  // Beta from the config or the surface default, validated once.
  const std::vector<double>& beta() {
    if (beta_.empty()) {
      const auto& S = surf();
      if (!cfg_.at("beta").is_null()) {
        beta_ = numbers(cfg_, "beta");
      } else if (S.name == "catenoid") {
        beta_ = {-1.0, 1.0};
      } else {
        beta_.assign(S.ends.size(), 0.0);
      }
      if (beta_.size() != S.ends.size()) {
        config_error("beta needs one entry per end", {{"ends", S.ends.size()}, {"beta", beta_.size()}});
      }
      const auto rep = validate_beta(S.ends, beta_, prof());
      if (!rep.ok) throw Error(ErrorCode::UnbalancedBeta, "beta fails the admissibility checks", rep.to_json());
    }
    return beta_;
  }
  FermiOptions fermi() const {
    FermiOptions o;
    o.delta = number(cfg_, "delta");
    return o;
  }
  Built build(double alpha) {
    const auto& S = surf();
    Built b;
    b.chart = std::make_unique<FermiChart>(build_chart(S, prof(), alpha, log_jacobi_field(S, beta()).h0,
                                                       std::vector<double>(S.num_nodes(), 0.0), fermi(), exec_));
    b.ansatz = std::make_unique<Ansatz>(build_ansatz(*b.chart, prof(), beta()));
    b.W = std::make_unique<GlobalField>(build_global(*b.ansatz));
    return b;
  }

  void profile_cmd() {
    const auto& p = prof();
    emit("profile.json", p.header());
    emit("profile.csv", io::profile_table(p));
  }

  void surface_cmd() {
    const auto& S = surf();
    emit("surface.json", S.describe());
    std::vector<double> H, K, A2;
    for (const auto& G : S.node) {
      H.push_back(G.H);
      K.push_back(G.K);
      A2.push_back(G.A2);
    }
    io::write_vtk_surface(path("surface.vtk"), S, {{"H", &H}, {"K", &K}, {"A2", &A2}});
    mark("surface.vtk");
  }

  void jacobi_index_cmd() {
    const auto& S = surf();
    const int nev = integer(cfg_, "nev");
    const auto W = weighted_index(S, numbers(cfg_, "R"), nev);
    io::Table t;
    t.columns = {"R", "count"};
    for (int k = 1; k <= nev; ++k) t.columns.push_back("lambda" + std::to_string(k));
    for (std::size_t i = 0; i < W.R.size(); ++i) {
      std::vector<double> row = {W.R[i], static_cast<double>(W.counts[i])};
      for (int k = 0; k < nev; ++k) {
        row.push_back(k < static_cast<int>(W.eigenvalues[i].size()) ? W.eigenvalues[i][k]
                                                                     : std::numeric_limits<double>::quiet_NaN());
      }
      t.add(row);
    }
    emit("jacobi_index.csv", t);
    emit("jacobi_index.json", {{"R", W.R},
                               {"counts", W.counts},
                               {"eigenvalues", W.eigenvalues},
                               {"mode_counts", W.mode_counts},
                               {"index", W.i_M},
                               {"stabilized", W.stabilized},
                               {"monotone", W.monotone}});
  }

  void log_jacobi_cmd() {
    const auto& S = surf();
    const auto L = log_jacobi_field(S, beta());
    io::Table t;
    t.columns = {"node", "r", "p", "h0"};
    for (std::size_t k = 0; k < S.num_nodes(); ++k) t.add({static_cast<double>(k), S.node[k].radius, L.p[k], L.h0[k]});
    emit("log_jacobi.csv", t);
    std::vector<double> c(L.c.data(), L.c.data() + L.c.size());
    emit("log_jacobi.json", {{"beta", beta()},
                             {"residual", L.residual},
                             {"multipliers", c},
                             {"flux_z3", end_flux_jacobi(S, beta(), numbers(cfg_, "flux_R"), 3).to_json()}});
    io::write_vtk_surface(path("log_jacobi.vtk"), S, {{"p", &L.p}, {"h0", &L.h0}});
    mark("log_jacobi.vtk");
  }

  void ansatz_cmd() {
    const auto& S = surf();
    json out = json::array();
    for (double alpha : numbers(cfg_, "alpha")) {
      const auto b = build(alpha);
      const auto off = zero_level_offset(*b.ansatz);
      double off_max = 0;
      for (double h : off) off_max = std::max(off_max, std::abs(h));
      out.push_back({{"alpha", alpha},
                     {"chart", b.chart->summary()},
                     {"beta", validate_beta(S.ends, beta(), prof()).to_json()},
                     {"phi1_max", b.ansatz->phi1_max},
                     {"phi1_constant", b.ansatz->phi1_constant},
                     {"zero_level_offset_max", off_max},
                     {"transition", transition_error(*b.W).to_json()}});
      // Zero level set on the x2 = 0 slice over the inner part of the surface.
      const double r_hi = 0.8 * S.R_max;
      double z_max = 0;
      for (const auto& G : S.node)
        if (G.radius <= r_hi) z_max = std::max(z_max, std::abs(G.Y[2]));
      const double X = r_hi / alpha, Z = z_max / alpha + 10;
      const int n = integer(cfg_, "slice_n");
      const auto P = io::level_set_slice([&](const Vec3& x) { return (*b.W)(x); }, -X, X, -Z, Z, n, n);
      const auto name = "levelset_alpha" + tag(alpha) + ".vtk";
      io::write_vtk_lines(path(name), P);
      mark(name);
    }
    emit("ansatz.json", out);
  }

  void residual_cmd() {
    const auto rep = residual_scaling(surf(), prof(), numbers(cfg_, "alpha"), beta(), {}, {}, exec_);
    io::Table t;
    t.columns = {"alpha", "L", "norm_S1", "norm_Pi0", "norm_S0", "phi1_max"};
    for (const auto& r : rep.rows) t.add({r.alpha, r.L, r.norm_S1, r.norm_Pi0, r.norm_S0, r.phi1_max});
    emit("residual_scaling.csv", t);
    emit("residual_scaling.json", rep.to_json());
  }

  ReductionState reduce(double alpha) {
    ReductionOptions opt;
    opt.max_iter = integer(cfg_, "max_iter");
    opt.tol = number(cfg_, "tol");
    opt.fermi = fermi();
    opt.exec = exec_;
    return fixed_point(surf(), prof(), alpha, beta(), opt);
  }

  void reduce_cmd() {
    const auto& S = surf();
    json out = json::array();
    std::vector<double> failed;
    for (double alpha : numbers(cfg_, "alpha")) {
      const auto st = reduce(alpha);
      const auto U = assemble_solution(st, exec_);
      io::Table h;
      h.columns = {"k", "h1_star", "dh1_star", "c_norm", "contraction", "phi_sup", "inner_iterations"};
      for (const auto& r : st.history) {
        h.add({static_cast<double>(r.k), r.h1_star, r.dh1_star, r.c_norm, r.contraction, r.phi_sup,
               static_cast<double>(r.inner_iterations)});
      }
      const auto a = tag(alpha);
      emit("reduce_history_alpha" + a + ".csv", h);
      io::write_vtk_surface(path("reduce_alpha" + a + ".vtk"), S, {{"h0", &st.h0}, {"h1", &st.h1}});
      mark("reduce_alpha" + a + ".vtk");
      out.push_back({{"alpha", alpha}, {"state", st.to_json()}, {"solution", U.to_json()}});
      if (!st.converged) failed.push_back(alpha);
    }
    emit("reduce.json", out);
    if (!failed.empty()) {
      throw Error(ErrorCode::NoConvergence, "fixed point did not reach the tolerance",
                  {{"alpha", failed}, {"max_iter", integer(cfg_, "max_iter")}});
    }
  }

  void morse_cmd() {
    const auto& S = surf();
    std::vector<MeridianGrid> grids;
    for (const auto& g : cfg_.at("morse_grids")) {
      MeridianGrid m;
      m.n_s = g["n_s"].get<int>();
      m.dt = g["dt"].get<double>();
      grids.push_back(m);
    }
    const auto RY = numbers(cfg_, "R");
    const bool reduced = text(cfg_, "field") == "reduced";
    io::Table ev, counts;
    ev.columns = {"alpha", "R", "grid", "mode", "k", "lambda", "lambda_over_alpha2"};
    counts.columns = {"alpha", "R", "grid", "count", "mode0", "mode1", "mode2"};
    json out = json::array();
    for (double alpha : numbers(cfg_, "alpha")) {
      json entry = {{"alpha", alpha}, {"field", text(cfg_, "field")}};
      std::unique_ptr<ReductionState> st;
      std::unique_ptr<GlobalField> W;
      Built b;
      if (reduced) {
        st = std::make_unique<ReductionState>(reduce(alpha));
        W = std::make_unique<GlobalField>(build_global(*st->ansatz, &st->phi));
        entry["reduction"] = {{"converged", st->converged}, {"iterations", st->iterations}};
      } else {
        b = build(alpha);
      }
      const GlobalField& G = reduced ? *W : *b.W;
      const ScalarField3 u = [&G](const Vec3& x) { return G(x); };
      std::vector<double> R;
      for (double r : RY) R.push_back(r / alpha);
      const auto rep = morse_index(u, prof(), S, alpha, R, grids, 2, exec_);
      for (const auto& row : rep.rows) {
        std::vector<double> c = {alpha, row.R, static_cast<double>(row.grid), static_cast<double>(row.count)};
        for (int m = 0; m < 3; ++m) c.push_back(m < static_cast<int>(row.mode_counts.size()) ? row.mode_counts[m] : 0);
        counts.add(c);
        for (std::size_t k = 0; k < row.eigenvalues.size(); ++k) {
          ev.add({alpha, row.R, static_cast<double>(row.grid), 0.0, static_cast<double>(k), row.eigenvalues[k],
                  row.eigenvalues[k] / (alpha * alpha)});
        }
      }
      entry["morse"] = rep.to_json();
      entry["kernel"] = kernel_check(u, prof(), S, alpha, R.back(), grids.front(), exec_).to_json();
      out.push_back(entry);
    }
    emit("morse_eigenvalues.csv", ev);
    emit("morse_counts.csv", counts);
    emit("morse.json", out);
    json kernel = json::array();
    for (const auto& e : out) kernel.push_back(e["kernel"]);
    emit("kernel.json", kernel);
  }

  void identities_cmd() {
    const auto& S = surf();
    const auto R = numbers(cfg_, "R");
    json sweeps = json::array();
    for (double alpha : numbers(cfg_, "alpha")) {
      const auto b = build(alpha);
      const ScalarField3 u = [&b](const Vec3& x) { return (*b.W)(x); };
      sweeps.push_back({{"alpha", alpha},
                        {"pohozaev_z3", pohozaev_sweep(u, prof(), S, alpha, 3, R).to_json()},
                        {"pohozaev_z4", pohozaev_sweep(u, prof(), S, alpha, 4, R).to_json()}});
    }
    emit("identities.json", {{"beta", beta()},
                             {"pohozaev", sweeps},
                             {"jacobi_flux_z3", end_flux_jacobi(S, beta(), numbers(cfg_, "flux_R"), 3).to_json()},
                             {"balancing", balancing(S, beta()).to_json()}});
  }

  std::string cmd_;
  json cfg_;
  std::string dir_;
  io::Manifest man_;
  Exec exec_ = Exec::Parallel;
  std::unique_ptr<Profile> profile_;
  std::unique_ptr<Surface> surface_;
  std::vector<double> beta_;
};

void print_error(const json& e) { std::cerr << e.dump() << "\n"; }

std::vector<double> parse_list(const std::string& s, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      config_error("not a number list", {{"flag", flag}, {"value", s}});
    }
  }
  return out;
}

std::string default_out(const std::string& cmd, const json& cfg) {
  return "acs_runs/" + cmd + "-" + io::config_hash(cfg).substr(0, 8);
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"profile", "surface",  "jacobi-index", "log-jacobi", "ansatz",
                                             "residual-scaling", "reduce", "morse", "identities"};
  return c;
}

json resolve_config(const std::string& command, const json& file, const json& flags) {
  json c = base_defaults();
  for (const auto* layer : {&file, &flags}) {
    if (layer->is_null()) continue;
    if (!layer->is_object()) config_error("config must be a JSON object");
    for (const auto& [k, v] : layer->items())
      if (!c.contains(k)) config_error("unknown config key", {{"key", k}});
  }
  c.merge_patch(command_defaults(command));
  for (const auto* layer : {&file, &flags})
    if (!layer->is_null())
      for (const auto& [k, v] : layer->items()) c[k] = v;  // merge_patch would drop explicit nulls
  validate(command, c);
  return c;
}

int run(const std::string& command, const json& config, const std::string& out_dir) {
  Runner r(command, config, out_dir);
  try {
    fs::create_directories(out_dir);
    r.write_manifest();
  } catch (const std::exception& e) {
    print_error({{"error", "ConfigError"}, {"message", "cannot create the output directory"}, {"detail", e.what()}});
    return 2;
  }
  int status = 0;
  try {
    r.execute();
    r.manifest().status = "ok";
  } catch (const Error& e) {
    r.manifest().status = "failed";
    r.manifest().error = e.to_json();
    status = exit_status(e.code());
  } catch (const std::exception& e) {
    r.manifest().status = "failed";
    r.manifest().error = {{"error", "Internal"}, {"message", e.what()}};
    status = 3;
  }
  if (status != 0) print_error(r.manifest().error);
  try {
    r.write_manifest();
  } catch (const std::exception&) {
    return status ? status : 2;
  }
  return status;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Allen-Cahn solutions from minimal surfaces: batch front end"};
  std::string command, out, config_file, f, surface, field, alpha, beta, R, flux_R;
  double delta = 0, tol = 0, surface_R = 0;
  int grid = 0, threads = 0, max_iter = 0, nev = 0, n_theta = 0;
  std::vector<std::string> names = commands();
  names.push_back("all");
  app.add_option("command", command, "command to run")->required()->check(CLI::IsMember(names));
  app.add_option("--config", config_file, "JSON config file; flags override its values");
  app.add_option("--out", out, "output directory (default acs_runs/<command>-<config hash>)");
  auto* o_f = app.add_option("--f", f, "nonlinearity: cubic, sine or asymmetric");
  auto* o_surface = app.add_option("--surface", surface, "catenoid, plane or an end-data JSON file");
  auto* o_surface_R = app.add_option("--surface-R", surface_R, "meshed radius of the surface");
  auto* o_grid = app.add_option("--grid", grid, "nodes along the radial chart direction");
  auto* o_theta = app.add_option("--n-theta", n_theta, "angular nodes (1: meridian mesh)");
  auto* o_alpha = app.add_option("--alpha", alpha, "comma-separated dilation parameters");
  auto* o_beta = app.add_option("--beta", beta, "comma-separated log coefficients, one per end (use --beta=-1,1)");
  auto* o_delta = app.add_option("--delta", delta, "tube cut-off parameter");
  auto* o_R = app.add_option("--R", R, "comma-separated radii (meaning depends on the command)");
  auto* o_flux_R = app.add_option("--flux-R", flux_R, "comma-separated radii of the Jacobi flux sweep");
  auto* o_tol = app.add_option("--tol", tol, "fixed-point tolerance");
  auto* o_max_iter = app.add_option("--max-iter", max_iter, "fixed-point iteration cap");
  auto* o_threads = app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");
  auto* o_nev = app.add_option("--nev", nev, "eigenvalues per radius in jacobi-index");
  auto* o_field = app.add_option("--field", field, "morse: reduced or u1");
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error({{"error", "ConfigError"}, {"message", e.what()}});
    return 2;
  }

  json file, flags = json::object();
  try {
    if (!config_file.empty()) file = io::read_json(config_file);
    if (o_f->count()) flags["f"] = f;
    if (o_surface->count()) flags["surface"] = surface;
    if (o_surface_R->count()) flags["surface_R"] = surface_R;
    if (o_grid->count()) flags["grid"] = grid;
    if (o_theta->count()) flags["n_theta"] = n_theta;
    if (o_alpha->count()) flags["alpha"] = parse_list(alpha, "--alpha");
    if (o_beta->count()) flags["beta"] = parse_list(beta, "--beta");
    if (o_delta->count()) flags["delta"] = delta;
    if (o_R->count()) flags["R"] = parse_list(R, "--R");
    if (o_flux_R->count()) flags["flux_R"] = parse_list(flux_R, "--flux-R");
    if (o_tol->count()) flags["tol"] = tol;
    if (o_max_iter->count()) flags["max_iter"] = max_iter;
    if (o_threads->count()) flags["threads"] = threads;
    if (o_nev->count()) flags["nev"] = nev;
    if (o_field->count()) flags["field"] = field;

    if (command != "all") {
      const json cfg = resolve_config(command, file, flags);
      return run(command, cfg, out.empty() ? default_out(command, cfg) : out);
    }
    // Validate every stage before running any of them.
    std::vector<json> cfgs;
    for (const auto& c : commands()) cfgs.push_back(resolve_config(c, file, flags));
    json top = {{"file", file}, {"flags", flags}};
    const std::string root = out.empty() ? default_out("all", top) : out;
    io::Manifest man;
    man.command = "all";
    man.config = top;
    fs::create_directories(root);
    io::write_json((fs::path(root) / "manifest.json").string(), man.to_json());
    int status = 0;
    json stages = json::array();
    for (std::size_t i = 0; i < commands().size(); ++i) {
      const int s = run(commands()[i], cfgs[i], (fs::path(root) / commands()[i]).string());
      stages.push_back({{"command", commands()[i]}, {"exit", s}});
      man.artifacts.push_back(commands()[i] + "/manifest.json");
      if (s != 0 && status == 0) status = s;
    }
    man.status = status == 0 ? "ok" : "failed";
    if (status != 0) man.error = {{"stages", stages}};
    io::write_json((fs::path(root) / "manifest.json").string(), man.to_json());
    return status;
  } catch (const Error& e) {
    print_error(e.to_json());
    return exit_status(e.code());
  } catch (const std::exception& e) {
    print_error({{"error", "ConfigError"}, {"message", e.what()}});
    return 2;
  }
}

}  // namespace acs::cli
