#include "anisopf/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace anisopf {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw Error(ErrorKind::ValidationError, key + ": " + why);
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) invalid(key, "not a number: '" + v + "'");
  return x;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int x{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) invalid(key, "not an integer: '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  invalid(key, "not a boolean: '" + v + "'");
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&](const char* key, double PhysicalParams::*field) {
      t[std::string("physics.") + key] = [=](RunConfig& c, const std::string& v) { c.physics.*field = to_double(key, v); };
    };
    real("theta", &PhysicalParams::theta);
    real("lambda", &PhysicalParams::lambda);
    real("a", &PhysicalParams::a);
    real("alpha", &PhysicalParams::alpha);
    real("rho", &PhysicalParams::rho);
    real("Kplus", &PhysicalParams::k_plus);
    real("Kminus", &PhysicalParams::k_minus);
    real("eps", &PhysicalParams::eps);
    real("u_D", &PhysicalParams::u_D);
    real("H", &PhysicalParams::H);
    real("R0", &PhysicalParams::R0);
    real("T_end", &PhysicalParams::T_end);
    real("tau", &PhysicalParams::tau);
    t["physics.eps_inv"] = [](RunConfig& c, const std::string& v) {
      const double inv = to_double("eps_inv", v);
      if (!(inv > 0.0)) invalid("eps_inv", "must be > 0");
      c.physics.eps = 1.0 / inv;
    };
    t["physics.bc"] = [](RunConfig& c, const std::string& v) {
      try {
        c.physics.bc = parse_boundary_case(v);
      } catch (const Error& e) {
        invalid("bc", e.what());
      }
    };
    t["physics.dim"] = [](RunConfig& c, const std::string& v) { c.physics.dim = to_int<int>("dim", v); };

    t["model.anisotropy"] = [](RunConfig& c, const std::string& v) { c.model.anisotropy = v; };
    t["model.mobility"] = [](RunConfig& c, const std::string& v) { c.model.mobility = v; };
    t["model.mu_bar"] = [](RunConfig& c, const std::string& v) { c.model.mu_bar = to_double("mu_bar", v); };
    t["model.potential"] = [](RunConfig& c, const std::string& v) { c.model.potential = v; };
    t["model.shape"] = [](RunConfig& c, const std::string& v) { c.model.shape = v; };
    t["model.cutoff_m"] = [](RunConfig& c, const std::string& v) { c.model.cutoff_m = to_double("cutoff_m", v); };
    t["model.initial"] = [](RunConfig& c, const std::string& v) { c.model.initial = v; };

    t["mesh.N_f"] = [](RunConfig& c, const std::string& v) { c.mesh.N_f = to_int<int>("N_f", v); };
    t["mesh.N_c"] = [](RunConfig& c, const std::string& v) { c.mesh.N_c = to_int<int>("N_c", v); };
    t["mesh.adaptive"] = [](RunConfig& c, const std::string& v) { c.mesh.adaptive = to_bool("adaptive", v); };
    t["mesh.remesh_every"] = [](RunConfig& c, const std::string& v) { c.mesh.remesh_every = to_int<int>("remesh_every", v); };
    t["mesh.safety_layers"] = [](RunConfig& c, const std::string& v) { c.mesh.safety_layers = to_int<int>("safety_layers", v); };

    t["solver.method"] = [](RunConfig& c, const std::string& v) { c.solver.method = parse_solver_method(v); };
    t["solver.tol"] = [](RunConfig& c, const std::string& v) { c.solver.tol = to_double("tol", v); };
    t["solver.max_outer"] = [](RunConfig& c, const std::string& v) { c.solver.max_outer = to_int<int>("max_outer", v); };
    t["solver.omega"] = [](RunConfig& c, const std::string& v) { c.solver.omega = to_double("omega", v); };
    t["solver.pgs_max_sweeps"] = [](RunConfig& c, const std::string& v) { c.solver.pgs_max_sweeps = to_int<int>("pgs_max_sweeps", v); };
    t["solver.newton_tol"] = [](RunConfig& c, const std::string& v) { c.solver.newton_tol = to_double("newton_tol", v); };
    t["solver.newton_max_iter"] = [](RunConfig& c, const std::string& v) { c.solver.newton_max_iter = to_int<int>("newton_max_iter", v); };

    t["output.out_dir"] = [](RunConfig& c, const std::string& v) { c.output.out_dir = v; };
    t["output.vtk_every"] = [](RunConfig& c, const std::string& v) { c.output.vtk_every = to_int<int>("vtk_every", v); };
    t["output.seed"] = [](RunConfig& c, const std::string& v) { c.output.seed = to_int<std::uint64_t>("seed", v); };
    t["output.samples"] = [](RunConfig& c, const std::string& v) { c.output.samples = to_int<std::int64_t>("samples", v); };
    return t;
  }();
  return table;
}

bool power_of_two(int x) { return x > 0 && (x & (x - 1)) == 0; }

}  // namespace

void RunConfig::validate() const {
  physics.validate();
  solver.validate();
  if (mesh.N_f < 2 || mesh.N_f % 2 != 0) invalid("N_f", "must be even and >= 2");
  if (mesh.N_c < 2 || mesh.N_c % 2 != 0) invalid("N_c", "must be even and >= 2");
  if (mesh.adaptive && (mesh.N_f % mesh.N_c != 0 || !power_of_two(mesh.N_f / mesh.N_c))) {
    invalid("N_f", "N_f / N_c must be a power of two for adaptive meshes");
  }
  if (mesh.remesh_every < 1) invalid("remesh_every", "must be >= 1");
  if (mesh.safety_layers < 0) invalid("safety_layers", "must be >= 0");
  if (output.vtk_every < 0) invalid("vtk_every", "must be >= 0");
  if (output.samples < 1) invalid("samples", "must be >= 1");
  if (model.initial != "seed" && model.initial != "liquid") invalid("initial", "must be 'seed' or 'liquid'");
  if (!(model.mu_bar >= 0.0)) invalid("mu_bar", "must be >= 0");
  if (!(model.cutoff_m >= 1.0)) invalid("cutoff_m", "must be >= 1");
  build_model();
}

Model RunConfig::build_model() const {
  try {
    auto aniso = anisotropy_preset(model.anisotropy, physics.dim);
    auto mob = mobility_preset(model.mobility, aniso, model.mu_bar);
    return Model{std::move(aniso), std::move(mob), parse_potential(model.potential),
                 parse_shape(model.shape, physics.u_D, model.cutoff_m)};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ValidationError || e.kind() == ErrorKind::UnknownPreset) throw;
    invalid("model", e.what());
  }
}

std::string RunConfig::output_directory() const {
  if (!output.out_dir.empty()) return output.out_dir;
  if (const char* env = std::getenv("ANISO_PF_OUT"); env != nullptr && *env != '\0') return env;
  return "anisopf_out";
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  static const std::map<std::string, int> sections{{"physics", 0}, {"model", 1}, {"mesh", 2}, {"solver", 3}, {"output", 4}};
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto at = " (line " + std::to_string(line_no) + ")";
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorKind::ParseError, "unterminated section header" + at);
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!sections.contains(section)) throw Error(ErrorKind::ParseError, "unknown section '" + section + "'" + at);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::ParseError, "expected 'key = value'" + at);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::ParseError, "missing key" + at);
    if (section.empty()) throw Error(ErrorKind::ParseError, "key '" + key + "' outside of a section" + at);
    const auto it = setters().find(section + "." + key);
    if (it == setters().end()) invalid(key, "unknown key in [" + section + "]" + at);
    it->second(cfg, value);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream o;
  const auto& p = c.physics;
  o << "[physics]\n"
    << "theta = " << fmt(p.theta) << "\nlambda = " << fmt(p.lambda) << "\na = " << fmt(p.a)
    << "\nalpha = " << fmt(p.alpha) << "\nrho = " << fmt(p.rho) << "\nKplus = " << fmt(p.k_plus)
    << "\nKminus = " << fmt(p.k_minus) << "\neps = " << fmt(p.eps) << "\nu_D = " << fmt(p.u_D)
    << "\nH = " << fmt(p.H) << "\nbc = " << to_string(p.bc) << "\nR0 = " << fmt(p.R0)
    << "\nT_end = " << fmt(p.T_end) << "\ntau = " << fmt(p.tau) << "\ndim = " << p.dim << "\n\n";
  const auto& m = c.model;
  o << "[model]\n"
    << "anisotropy = " << m.anisotropy << "\nmobility = " << m.mobility << "\nmu_bar = " << fmt(m.mu_bar)
    << "\npotential = " << m.potential << "\nshape = " << m.shape << "\ncutoff_m = " << fmt(m.cutoff_m)
    << "\ninitial = " << m.initial << "\n\n";
  o << "[mesh]\n"
    << "N_f = " << c.mesh.N_f << "\nN_c = " << c.mesh.N_c << "\nadaptive = " << (c.mesh.adaptive ? "true" : "false")
    << "\nremesh_every = " << c.mesh.remesh_every << "\nsafety_layers = " << c.mesh.safety_layers << "\n\n";
  const auto& s = c.solver;
  o << "[solver]\n"
    << "method = " << to_string(s.method) << "\ntol = " << fmt(s.tol) << "\nmax_outer = " << s.max_outer
    << "\nomega = " << fmt(s.omega) << "\npgs_max_sweeps = " << s.pgs_max_sweeps
    << "\nnewton_tol = " << fmt(s.newton_tol) << "\nnewton_max_iter = " << s.newton_max_iter << "\n\n";
  o << "[output]\n";
  if (!c.output.out_dir.empty()) o << "out_dir = " << c.output.out_dir << "\n";
  o << "vtk_every = " << c.output.vtk_every << "\nseed = " << c.output.seed << "\nsamples = " << c.output.samples
    << "\n";
  return o.str();
}

}  // namespace anisopf
