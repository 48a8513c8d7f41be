#include "sdaf/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace sdaf {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::uint64_t fnv1a_text(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex_u64(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setfill('0') << std::setw(16) << v;
  return os.str();
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

void atomic_write(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ArchiveError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ArchiveError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_sidecar(const fs::path& csv_path, const std::string& schema) {
  atomic_write(csv_path.string() + ".schema.txt", schema);
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

KeyValueConfig KeyValueConfig::parse_text(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    cfg.kv_[key] = value;
  }
  return cfg;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) { kv_[key] = value; }

bool KeyValueConfig::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("config: missing required key '" + key + "'");
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not a number: '" + s + "'");
  }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const double v = get_double(key);
  if (v != std::floor(v)) throw ConfigError("config: key '" + key + "' must be an integer");
  return static_cast<int>(v);
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get_string(key);
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not an unsigned integer: '" + s + "'");
  }
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  std::istringstream in(get_string(key));
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + key + "' has a non-numeric entry '" + tok + "'");
    }
  }
  return out;
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (double v : get_double_list(key)) {
    if (v != std::floor(v)) throw ConfigError("config: key '" + key + "' must list integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::string KeyValueConfig::canonical_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
  return os.str();
}

std::uint64_t KeyValueConfig::fingerprint() const { return fnv1a_text(canonical_text()); }

ExperimentSetup build_setup(const KeyValueConfig& cfg) {
  const int n = cfg.get_int("domain.n", 16);
  const double side = cfg.get_double("domain.side", 1.0);
  SpinStructure spin;
  spin.sign[0] = cfg.get_int("domain.spin1", 1);
  spin.sign[1] = cfg.get_int("domain.spin2", 1);

  const std::string tkind = cfg.get_string("target.kind", "torus");
  std::shared_ptr<TargetManifold> target;
  HomotopyClass cls;
  if (tkind == "torus") {
    target = std::make_shared<FlatTorus2>(cfg.get_double("target.period", side));
    cls = HomotopyClass::torus_class(cfg.get_int("class.w00", 1), cfg.get_int("class.w01", 0),
                                     cfg.get_int("class.w10", 0), cfg.get_int("class.w11", 1));
  } else if (tkind == "sphere") {
    target = std::make_shared<RoundSphere>();
    cls = HomotopyClass::sphere_class(cfg.get_int("class.degree", 0));
  } else {
    throw ConfigError("config: target.kind must be 'torus' or 'sphere', got '" + tkind + "'");
  }

  ExperimentSetup setup{SurfaceDomain(n, side, spin)};
  setup.target = target;
  setup.cls = cls;

  setup.action.alpha = cfg.get_double("action.alpha");
  if (cfg.has("action.k")) {
    const int k = cfg.get_int("action.k", 0);
    if (k <= 0) throw ConfigError("config: action.k must be a positive integer");
    setup.action.perturbation_scale = 1.0 / k;
  } else {
    setup.action.perturbation_scale = cfg.get_double("action.eps", 0.0);
  }
  setup.action.mu = cfg.get_double("action.mu", 0.0);
  setup.action.validate();

  setup.solver.grad_tol = cfg.get_double("solver.grad_tol", 1e-8);
  setup.solver.max_iters = cfg.get_int("solver.max_iters", 5000);
  setup.solver.newton_max_iters = cfg.get_int("solver.newton_max_iters", 80);
  setup.solver.flow_dt = cfg.get_double("solver.flow_dt", 0.05);
  setup.solver.pseudo_gradient_a = cfg.get_double("solver.pg_a", 1.5);
  setup.solver.step_cap_fraction = cfg.get_double("solver.step_cap", 0.25);
  setup.solver.validate();

  if (cfg.has("schedule.alphas")) setup.schedule.alphas = cfg.get_double_list("schedule.alphas");
  if (cfg.has("schedule.ks")) setup.schedule.ks = cfg.get_int_list("schedule.ks");
  setup.schedule.energy_bound = cfg.get_double("schedule.lambda", 1e6);
  setup.schedule.nontrivial_branch =
      cfg.get_string("schedule.branch", "nontrivial") == "nontrivial";
  setup.schedule.mu = setup.action.mu;
  setup.schedule.solver = setup.solver;

  setup.kind = cfg.get_string("experiment.kind", "solve");
  setup.seed = cfg.get_u64("seed", 1);
  setup.init_noise = cfg.get_double("init.noise", 0.05);
  setup.spectrum_m = cfg.get_int("spectrum.m", 24);
  setup.scan_radius = cfg.get_double("diag.radius", side / 4.0);
  setup.eps0 = cfg.get_double("diag.eps0", 0.1);
  setup.samples = cfg.get_int("diag.samples", 1000);
  setup.flow_horizon = cfg.get_double("solver.flow_horizon", 5.0);
  setup.trials = cfg.get_int("experiment.trials", 5);
  setup.steps = cfg.get_int("experiment.steps", 11);
  setup.growth_kind = cfg.get_string("growth.kind", "canonical");
  setup.config_fingerprint = cfg.fingerprint();
  return setup;
}

namespace {

void append_array(std::string& out, const ArchiveArray& arr) {
  static_assert(std::endian::native == std::endian::little,
                "archive format assumes a little-endian host");
  if (arr.kind == "f64") {
    out.append(reinterpret_cast<const char*>(arr.f64.data()), arr.f64.size() * sizeof(double));
  } else {
    out.append(reinterpret_cast<const char*>(arr.c128.data()), arr.c128.size() * sizeof(cdouble));
  }
}

}  // namespace

void save_state_archive(const fs::path& path, const MapField& phi, const PlainSpinor* psi,
                        std::uint64_t config_fingerprint, std::uint64_t seed) {
  ordered_json header;
  header["version"] = kFormatVersion;
  header["domain"] = {{"n", phi.domain().n()},
                      {"side", phi.domain().side_length()},
                      {"spin", {phi.domain().spin_structure().sign[0],
                                phi.domain().spin_structure().sign[1]}}};
  header["target"]["kind"] = phi.target().name();
  if (phi.target().flat_chart()) {
    header["target"]["period"] = static_cast<const FlatTorus2&>(phi.target()).period();
  }
  header["winding"] = {{phi.winding()[0][0], phi.winding()[0][1]},
                       {phi.winding()[1][0], phi.winding()[1][1]}};
  header["config_fingerprint"] = hex_u64(config_fingerprint);
  header["seed"] = seed;

  std::vector<ArchiveArray> arrays;
  {
    ArchiveArray a;
    a.name = "phi";
    a.kind = "f64";
    a.f64.assign(phi.values().data(), phi.values().data() + phi.values().size());
    arrays.push_back(std::move(a));
  }
  if (psi) {
    ArchiveArray a;
    a.name = "psi";
    a.kind = "c128";
    a.c128.assign(psi->data(), psi->data() + psi->size());
    arrays.push_back(std::move(a));
  }
  header["arrays"] = ordered_json::array();
  for (const auto& a : arrays) {
    header["arrays"].push_back({{"name", a.name},
                                {"kind", a.kind},
                                {"count", a.kind == "f64" ? a.f64.size() : a.c128.size()}});
  }

  std::string bytes = std::string(kFormatVersion) + "\n" + header.dump() + "\n";
  for (const auto& a : arrays) append_array(bytes, a);
  atomic_write(path, bytes);
}

Archive load_archive(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot open archive " + path.string());
  std::string magic;
  if (!std::getline(in, magic)) throw ArchiveError("corrupt archive: missing magic line");
  if (magic != kFormatVersion) {
    throw ArchiveError("archive format version '" + magic + "' does not match '" +
                       kFormatVersion + "'; re-save the fields with this version of the tool");
  }
  std::string header_line;
  if (!std::getline(in, header_line)) throw ArchiveError("corrupt archive: missing header");
  ordered_json header;
  try {
    header = ordered_json::parse(header_line);
  } catch (const std::exception& e) {
    throw ArchiveError(std::string("corrupt archive header: ") + e.what());
  }
  Archive arch;
  arch.header_json = header_line;
  if (!header.contains("arrays")) throw ArchiveError("corrupt archive: no arrays listed");
  for (const auto& meta : header["arrays"]) {
    ArchiveArray a;
    a.name = meta.at("name").get<std::string>();
    a.kind = meta.at("kind").get<std::string>();
    const std::size_t count = meta.at("count").get<std::size_t>();
    if (a.kind == "f64") {
      a.f64.resize(count);
      in.read(reinterpret_cast<char*>(a.f64.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
    } else if (a.kind == "c128") {
      a.c128.resize(count);
      in.read(reinterpret_cast<char*>(a.c128.data()),
              static_cast<std::streamsize>(count * sizeof(cdouble)));
    } else {
      throw ArchiveError("corrupt archive: unknown array kind '" + a.kind + "'");
    }
    if (!in) {
      throw ArchiveError("corrupt archive: truncated while reading array '" + a.name + "'");
    }
    arch.arrays[a.name] = std::move(a);
  }
  return arch;
}

void load_state_archive(const fs::path& path, MapField& phi, PlainSpinor& psi, bool* has_psi) {
  Archive arch = load_archive(path);
  ordered_json header = ordered_json::parse(arch.header_json);
  const int n_arch = header.at("domain").at("n").get<int>();
  if (n_arch != phi.domain().n()) {
    throw ShapeError("archive was written for n = " + std::to_string(n_arch) +
                     " but this run uses n = " + std::to_string(phi.domain().n()));
  }
  const std::string tk = header.at("target").at("kind").get<std::string>();
  if (tk != phi.target().name()) {
    throw ShapeError("archive target '" + tk + "' does not match configured target '" +
                     phi.target().name() + "'");
  }
  const auto& aphi = arch.arrays.at("phi");
  if (aphi.f64.size() != phi.values().size()) {
    throw ShapeError("archive phi has " + std::to_string(aphi.f64.size()) +
                     " values, expected " + std::to_string(phi.values().size()));
  }
  std::copy(aphi.f64.begin(), aphi.f64.end(), phi.values().data());
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < 2; ++a)
      phi.winding()[c][a] = header.at("winding")[c][a].get<int>();
  if (arch.arrays.count("psi")) {
    const auto& apsi = arch.arrays.at("psi");
    if (apsi.c128.size() != psi.size()) {
      throw ShapeError("archive psi has " + std::to_string(apsi.c128.size()) +
                       " values, expected " + std::to_string(psi.size()));
    }
    std::copy(apsi.c128.begin(), apsi.c128.end(), psi.data());
    if (has_psi) *has_psi = true;
  } else if (has_psi) {
    *has_psi = false;
  }
}

void export_spectrum_csv(const fs::path& path, const SpectralData& spec) {
  std::vector<int> order(spec.eigenvalues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(spec.eigenvalues[a]) < std::abs(spec.eigenvalues[b]);
  });
  std::ostringstream os;
  os << "index,eigenvalue,residual\n";
  int row = 0;
  for (int i : order) {
    os << row++ << "," << format_double(spec.eigenvalues[i]) << ","
       << format_double(spec.residuals[i]) << "\n";
  }
  atomic_write(path, os.str());
  write_sidecar(path,
                "index: rank by |eigenvalue| ascending\n"
                "eigenvalue: eigenvalue of the twisted Dirac operator\n"
                "residual: L2 norm of (D e - lambda e)\n");
}

void export_flow_csv(const fs::path& path, const FlowTrace& trace) {
  std::ostringstream os;
  os << "t,action,dl_norm,margin_norm,margin_descent,eta,dt\n";
  for (const auto& s : trace.steps) {
    os << format_double(s.t) << "," << format_double(s.action) << ","
       << format_double(s.dl_norm) << "," << format_double(s.margin_norm) << ","
       << format_double(s.margin_descent) << "," << format_double(s.eta) << ","
       << format_double(s.dt) << "\n";
  }
  atomic_write(path, os.str());
  write_sidecar(path,
                "t: flow time at the start of the step\n"
                "action: action value at the start of the step\n"
                "dl_norm: ||dL|| in the product dual norm\n"
                "margin_norm: 2||dL|| - ||omega|| (pseudo-gradient bound, >= 0)\n"
                "margin_descent: dL(omega) - ||dL||^2 (pseudo-gradient bound, >= 0)\n"
                "eta: step normalization min(1, 1/||omega||)\n"
                "dt: accepted step size (0 on the final stationary record)\n");
}

void export_continuation_csv(const fs::path& path, const ContinuationReport& rep) {
  std::ostringstream os;
  os << "stage,alpha,k,action,psi_l4,energy,bound_flag,converged,nontrivial\n";
  int i = 0;
  for (const auto& s : rep.stages) {
    os << i++ << "," << format_double(s.alpha) << "," << s.k << "," << format_double(s.action)
       << "," << format_double(s.psi_l4) << "," << format_double(s.energy) << ","
       << (s.bound_exceeded ? 1 : 0) << "," << (s.converged ? 1 : 0) << ","
       << (s.nontrivial ? 1 : 0) << "\n";
  }
  atomic_write(path, os.str());
  write_sidecar(path,
                "stage: 0-based stage index\n"
                "alpha, k: continuation parameters of the stage\n"
                "action: total action at the stage solution\n"
                "psi_l4: integral |psi|^4\n"
                "energy: integral (|dphi|^{2 alpha} + |psi|^4)\n"
                "bound_flag: 1 when energy exceeds the configured bound\n"
                "converged, nontrivial: stage solver status\n");
}

void export_concentration_csv(const fs::path& path, const ConcentrationScan& scan,
                              const SurfaceDomain& dom) {
  std::ostringstream os;
  os << "i,j,x,y,local_energy,flagged\n";
  for (int idx = 0; idx < dom.vertices(); ++idx) {
    const bool fl =
        std::binary_search(scan.flagged.begin(), scan.flagged.end(), idx);
    os << dom.coord(idx, 0) << "," << dom.coord(idx, 1) << ","
       << format_double(dom.position(idx, 0)) << "," << format_double(dom.position(idx, 1)) << ","
       << format_double(scan.local_energy[idx]) << "," << (fl ? 1 : 0) << "\n";
  }
  atomic_write(path, os.str());
  write_sidecar(path,
                "i, j: vertex grid coordinates\n"
                "x, y: vertex position on the torus\n"
                "local_energy: integral of |dphi|^2 over the periodic ball\n"
                "flagged: 1 when local_energy >= eps0\n");
}

namespace {

struct Verdicts {
  std::vector<std::pair<std::string, bool>> items;
  void add(const std::string& name, bool pass) { items.emplace_back(name, pass); }
  bool all() const {
    for (const auto& [_, p] : items)
      if (!p) return false;
    return true;
  }
};

// Synthetic hooks for the growth checker.
struct Psi2Perturbation final : Perturbation {
  double value(const double*, const cdouble* psi, int L) const override {
    double a2 = 0.0;
    for (int k = 0; k < 2 * L; ++k) a2 += std::norm(psi[k]);
    return a2;
  }
  void d_psi(const double*, const cdouble* psi, int L, cdouble* out) const override {
    for (int k = 0; k < 2 * L; ++k) out[k] = 2.0 * psi[k];
  }
  void d_phi(const double*, const cdouble*, int L, double* out) const override {
    for (int c = 0; c < L; ++c) out[c] = 0.0;
  }
  std::string name() const override { return "psi2"; }
};

struct NegPsi4Perturbation final : Perturbation {
  double value(const double*, const cdouble* psi, int L) const override {
    double a2 = 0.0;
    for (int k = 0; k < 2 * L; ++k) a2 += std::norm(psi[k]);
    return -a2 * a2;
  }
  void d_psi(const double*, const cdouble* psi, int L, cdouble* out) const override {
    double a2 = 0.0;
    for (int k = 0; k < 2 * L; ++k) a2 += std::norm(psi[k]);
    for (int k = 0; k < 2 * L; ++k) out[k] = -4.0 * a2 * psi[k];
  }
  void d_phi(const double*, const cdouble*, int L, double* out) const override {
    for (int c = 0; c < L; ++c) out[c] = 0.0;
  }
  std::string name() const override { return "negpsi4"; }
};

MapField make_start_map(const ExperimentSetup& setup, Rng& rng) {
  if (setup.init_noise > 0.0) {
    return random_smooth_map(setup.domain, *setup.target, setup.cls, setup.init_noise, rng);
  }
  return class_representative(setup.domain, *setup.target, setup.cls);
}

ordered_json action_json(const ActionValue& v) {
  return {{"total", v.total},
          {"alpha_energy", v.alpha_energy},
          {"dirac_action", v.dirac_action},
          {"perturbation", v.perturbation}};
}

}  // namespace

int run_experiment(const KeyValueConfig& cfg, const fs::path& out_dir) {
  Verdicts verdicts;
  ordered_json report;
  std::ostringstream summary;
  try {
    ExperimentSetup setup = build_setup(cfg);
    fs::create_directories(out_dir);
    Rng rng(setup.seed);

    report["format"] = kFormatVersion;
    report["experiment"] = setup.kind;
    report["seed"] = setup.seed;
    report["config_fingerprint"] = hex_u64(setup.config_fingerprint);
    report["config_echo"] = cfg.canonical_text();
    summary << "experiment: " << setup.kind << "\nseed: " << setup.seed
            << "\nconfig fingerprint: " << hex_u64(setup.config_fingerprint) << "\n";

    const std::string kind = setup.kind;
    if (kind == "solve" || kind == "minimize") {
      MapField start = make_start_map(setup, rng);
      CriticalPoint cp = minimize_alpha_energy(start, setup.action.alpha, setup.solver);
      save_state_archive(out_dir / "state.sdaf", cp.phi, nullptr, setup.config_fingerprint,
                         setup.seed);
      report["m_theta"] = cp.value.alpha_energy;
      report["action"] = action_json(cp.value);
      report["residual"] = cp.horizontal_residual;
      report["iterations"] = cp.iterations;
      report["homotopy_class"] = cp.homotopy.describe();
      summary << "m_theta: " << cp.value.alpha_energy << "\nresidual: " << cp.horizontal_residual
              << "\n";
      verdicts.add("converged", cp.converged);
      verdicts.add("class_preserved", cp.homotopy_ok);
    } else if (kind == "saddle") {
      MapField start = make_start_map(setup, rng);
      CriticalPoint mincp = minimize_alpha_energy(start, setup.action.alpha, setup.solver);
      SpectralData spec = dirac_spectrum(mincp.phi, setup.spectrum_m);
      lambda_plus(mincp.phi, spec);
      MountainPassInit init = mountain_pass_init(mincp.phi, spec, setup.action, setup.solver);
      CriticalPoint cp = newton_solve(mincp.phi, init.psi0, setup.action, setup.solver);
      save_state_archive(out_dir / "state.sdaf", cp.phi, &cp.psi, setup.config_fingerprint,
                         setup.seed);
      report["m_theta"] = mincp.value.alpha_energy;
      report["lambda_plus"] = spec.lambda_plus;
      report["r_star"] = init.r_star;
      report["mountain_pass_height"] = init.action_at_top;
      report["action"] = action_json(cp.value);
      report["residuals"] = {{"horizontal", cp.horizontal_residual},
                             {"vertical", cp.vertical_residual}};
      report["nontrivial"] = cp.nontrivial_spinor;
      summary << "m_theta: " << mincp.value.alpha_energy
              << "\nsaddle action: " << cp.value.total
              << "\nnontrivial spinor: " << (cp.nontrivial_spinor ? "yes" : "no") << "\n";
      verdicts.add("newton_converged", cp.converged);
      verdicts.add("above_m_theta", cp.value.total > mincp.value.alpha_energy);
      verdicts.add("class_preserved", cp.homotopy_ok);
    } else if (kind == "continue" || kind == "continuation") {
      ContinuationReport rep =
          continuation_run(setup.domain, *setup.target, setup.cls, setup.schedule, setup.seed);
      export_continuation_csv(out_dir / "continuation.csv", rep);
      save_state_archive(out_dir / "state.sdaf", rep.phi, &rep.psi, setup.config_fingerprint,
                         setup.seed);
      report["stages"] = ordered_json::array();
      for (const auto& s : rep.stages) {
        report["stages"].push_back({{"alpha", s.alpha},
                                    {"k", s.k},
                                    {"action", s.action},
                                    {"m_theta", s.m_theta},
                                    {"psi_l4", s.psi_l4},
                                    {"energy", s.energy},
                                    {"bound_exceeded", s.bound_exceeded},
                                    {"converged", s.converged},
                                    {"nontrivial", s.nontrivial},
                                    {"note", s.note}});
      }
      report["any_bound_exceeded"] = rep.any_bound_exceeded;
      summary << "stages: " << rep.stages.size()
              << "\nbound exceeded: " << (rep.any_bound_exceeded ? "yes" : "no") << "\n";
      verdicts.add("all_stages_converged", rep.all_converged);
    } else if (kind == "flow") {
      MapField start = make_start_map(setup, rng);
      PlainSpinor psi0 = random_tangent_spinor(start, setup.init_noise, rng);
      FlowTrace trace =
          pseudo_gradient_flow(start, psi0, setup.action, setup.solver, setup.flow_horizon);
      export_flow_csv(out_dir / "flow.csv", trace);
      save_state_archive(out_dir / "state.sdaf", trace.phi, &trace.psi,
                         setup.config_fingerprint, setup.seed);
      report["steps"] = trace.steps.size();
      report["violations"] = trace.violations;
      report["rejected_steps"] = trace.rejected_steps;
      report["aborted"] = trace.aborted;
      report["action_integral"] = trace.action_integral;
      summary << "flow steps: " << trace.steps.size() << "\nviolations: " << trace.violations
              << "\n";
      verdicts.add("pseudo_gradient_bounds", trace.violations == 0);
      verdicts.add("completed", !trace.aborted);
    } else if (kind == "spectrum") {
      MapField start = make_start_map(setup, rng);
      SpectralData spec = dirac_spectrum(start, setup.spectrum_m);
      bool lp_ok = true;
      if (spec.n_positive > 0) {
        lambda_plus(start, spec);
        lp_ok = spec.lambda_plus > 0.0;
      }
      export_spectrum_csv(out_dir / "spectrum.csv", spec);
      report["eigenvalues"] = spec.eigenvalues;
      report["kernel_dim"] = spec.n_zero;
      report["lambda_plus"] = spec.lambda_plus;
      report["lambda_plus_stabilized"] = spec.lambda_plus_stabilized;
      double worst = 0.0;
      for (double r : spec.residuals) worst = std::max(worst, r);
      report["max_residual"] = worst;
      summary << "modes: " << spec.eigenvalues.size() << "\nkernel dim: " << spec.n_zero
              << "\nlambda_plus: " << spec.lambda_plus << "\n";
      verdicts.add("residuals", worst <= 1e-8);
      verdicts.add("lambda_plus_positive", lp_ok);
    } else if (kind == "diagnose") {
      MapField phi(setup.domain, *setup.target);
      PlainSpinor psi(setup.domain, setup.target->ambient_dim());
      if (cfg.has("init.archive")) {
        bool has_psi = false;
        load_state_archive(cfg.get_string("init.archive"), phi, psi, &has_psi);
      } else {
        phi = make_start_map(setup, rng);
        psi = random_tangent_spinor(phi, setup.init_noise, rng);
      }
      DiagnosticsReport rep = diagnose(phi, psi, setup.action, setup.scan_radius, setup.eps0,
                                       setup.target->flat_chart() ? setup.samples : 0,
                                       setup.seed);
      if (rep.concentration) {
        export_concentration_csv(out_dir / "concentration.csv", *rep.concentration,
                                 setup.domain);
      }
      report["action"] = action_json(rep.action);
      report["coupled_energy"] = rep.coupled_energy;
      report["psi_l4"] = rep.psi_l4;
      report["residuals"] = {{"horizontal", rep.horizontal_residual},
                             {"vertical", rep.vertical_residual}};
      report["lambda_plus"] = rep.lambda_plus;
      if (rep.concentration) {
        report["concentration"] = {{"radius", rep.concentration->radius},
                                   {"eps0", rep.concentration->threshold},
                                   {"flagged", rep.concentration->flagged.size()},
                                   {"total_energy", rep.concentration->total_energy}};
      }
      if (rep.minimax) {
        report["minimax"] = {{"a_estimate", rep.minimax->a_estimate},
                             {"b_estimate", rep.minimax->b_estimate},
                             {"m_theta", rep.minimax->m_theta},
                             {"r1", rep.minimax->r1},
                             {"r2", rep.minimax->r2},
                             {"rho", rep.minimax->rho},
                             {"sandwich", rep.minimax->sandwich_holds}};
        verdicts.add("minimax_sandwich", rep.minimax->sandwich_holds);
      }
      summary << "coupled energy: " << rep.coupled_energy
              << "\nlambda_plus: " << rep.lambda_plus << "\n";
      verdicts.add("lambda_plus_positive", rep.lambda_plus > 0.0);
    } else if (kind == "uniqueness") {
      UniquenessReport rep =
          uniqueness_experiment(setup.domain, *setup.target, setup.cls, setup.action.alpha,
                                setup.trials, setup.solver, setup.seed);
      report["applicable"] = rep.applicable;
      report["pass"] = rep.pass;
      report["max_pairwise_deviation"] = rep.max_pairwise_deviation;
      report["max_energy_drift"] = rep.max_energy_drift;
      report["note"] = rep.note;
      summary << (rep.applicable ? (rep.pass ? "PASS" : "FAIL") : "NOT-APPLICABLE") << " "
              << rep.note << "\n";
      verdicts.add("uniqueness", rep.applicable && rep.pass);
    } else if (kind == "convexity") {
      MapField phi0 = class_representative(setup.domain, *setup.target, setup.cls);
      MapField phi1 = make_start_map(setup, rng);
      ConvexityReport rep = convexity_experiment(phi0, phi1, setup.action.alpha, setup.steps);
      report["pass"] = rep.pass;
      report["min_second_difference"] = rep.min_second_difference;
      report["scale"] = rep.scale;
      summary << (rep.pass ? "PASS" : "FAIL")
              << " min second difference: " << rep.min_second_difference << "\n";
      verdicts.add("convexity", rep.pass);
    } else if (kind == "growthcheck") {
      std::shared_ptr<Perturbation> hook;
      double mu_claimed = setup.action.resolved_mu();
      if (setup.growth_kind == "canonical") {
        hook = std::make_shared<CanonicalPerturbation>(mu_claimed);
      } else if (setup.growth_kind == "psi2") {
        hook = std::make_shared<Psi2Perturbation>();
        mu_claimed = 2.0;
      } else if (setup.growth_kind == "negpsi4") {
        hook = std::make_shared<NegPsi4Perturbation>();
        mu_claimed = 4.0;
      } else {
        throw ConfigError("config: growth.kind must be canonical, psi2 or negpsi4");
      }
      GrowthConditionReport rep =
          growth_condition_check(*hook, mu_claimed, setup.action.alpha, 256, setup.seed);
      report["fitted_mu"] = rep.fitted_mu;
      report["fitted_p_minus_1"] = rep.fitted_p_minus_1;
      report["fitted_q"] = rep.fitted_q;
      report["conditions"] = {{"F1", rep.f1}, {"F2", rep.f2}, {"F3", rep.f3}, {"F4", rep.f4},
                              {"F5", rep.f5}, {"F6", rep.f6}, {"F7", rep.f7}};
      const auto fails = rep.failures();
      std::string failtxt;
      for (const auto& f : fails) failtxt += (failtxt.empty() ? "" : ", ") + f;
      report["failures"] = failtxt;
      summary << "fitted mu: " << rep.fitted_mu << "\nfailures: "
              << (failtxt.empty() ? "none" : failtxt) << "\n";
      verdicts.add("growth_conditions_F1_F5", rep.all_pass(false));
    } else {
      throw ConfigError("config: unknown experiment kind '" + kind + "'");
    }

    report["verdicts"] = ordered_json::object();
    for (const auto& [name, pass] : verdicts.items) {
      report["verdicts"][name] = pass;
      summary << "verdict " << name << ": " << (pass ? "PASS" : "FAIL") << "\n";
    }
    atomic_write(out_dir / "report.json", report.dump(2) + "\n");
    atomic_write(out_dir / "summary.txt", summary.str());
    return verdicts.all() ? 0 : 2;
  } catch (const Error& e) {
    try {
      fs::create_directories(out_dir);
      atomic_write(out_dir / "summary.txt", std::string("error: ") + e.what() + "\n");
    } catch (...) {
    }
    fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace sdaf
