#include "tdho/cli_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "tdho/error.hpp"
#include "tdho/interprop.hpp"

namespace tdho {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Strict view of one JSON object: every key must be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& require(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError("missing key \"" + qualified(key) + "\"");
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    seen_.insert(key);
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("key \"" + qualified(key) + "\" has the wrong type");
    }
  }

  template <class T>
  T need(const std::string& key) {
    const json& v = require(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError("key \"" + qualified(key) + "\" has the wrong type");
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key \"" + qualified(it.key()) + "\"");
  }

  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

int line_of_offset(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

const char* dressing_name(Dressing d) {
  return d == Dressing::kScattering ? "scattering" : "tilde_boundary";
}
const char* subtraction_name(Subtraction s) {
  return s == Subtraction::kFree ? "free" : "naive";
}

// Smallest feature size of the potential, for the smear-acceptance rule.
double smallest_feature(const PotentialSpec& spec) {
  double f = std::numeric_limits<double>::infinity();
  for (const auto& c : spec.components) {
    if (auto* g = std::get_if<GaussianBump>(&c)) f = std::min(f, g->width);
    else if (auto* b = std::get_if<SmoothCompactBump>(&c)) f = std::min(f, b->radius);
    else if (auto* s = std::get_if<TruncatedSingular>(&c)) f = std::min(f, s->radius);
  }
  return f;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
      dynamic_cast<const json::exception*>(&e))
    return kExitConfig;
  if (dynamic_cast<const ScanError*>(&e)) return kExitHoles;
  return kExitNumeric;
}

template <class F>
int guarded(std::ostream& out, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    out << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// --- potentials -----------------------------------------------------------------

json potential_to_json(const PotentialSpec& spec) {
  json arr = json::array();
  for (const auto& c : spec.components) {
    if (auto* g = std::get_if<GaussianBump>(&c))
      arr.push_back({{"type", "gaussian"}, {"amplitude", g->amplitude}, {"center", g->center},
                     {"width", g->width}});
    else if (auto* b = std::get_if<SmoothCompactBump>(&c))
      arr.push_back({{"type", "compact"}, {"amplitude", b->amplitude}, {"center", b->center},
                     {"radius", b->radius}});
    else if (auto* p = std::get_if<PowerTail>(&c))
      arr.push_back({{"type", "power_tail"}, {"amplitude", p->amplitude}, {"rho", p->rho}});
    else if (auto* s = std::get_if<TruncatedSingular>(&c))
      arr.push_back({{"type", "singular"}, {"amplitude", s->amplitude}, {"center", s->center},
                     {"alpha", s->alpha}, {"radius", s->radius}, {"q", s->q}});
  }
  return arr;
}

PotentialSpec potential_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("potential: expected an array of components");
  PotentialSpec spec;
  for (std::size_t i = 0; i < j.size(); ++i) {
    Section s(j[i], "potential[" + std::to_string(i) + "]");
    const auto type = s.need<std::string>("type");
    if (type == "gaussian") {
      spec.components.push_back(GaussianBump{s.need<double>("amplitude"),
                                             s.need<Vec>("center"), s.need<double>("width")});
    } else if (type == "compact") {
      spec.components.push_back(SmoothCompactBump{
          s.need<double>("amplitude"), s.need<Vec>("center"), s.need<double>("radius")});
    } else if (type == "power_tail") {
      spec.components.push_back(PowerTail{s.need<double>("amplitude"), s.need<double>("rho")});
    } else if (type == "singular") {
      spec.components.push_back(TruncatedSingular{
          s.need<double>("amplitude"), s.need<Vec>("center"), s.need<double>("alpha"),
          s.need<double>("radius"), s.get<double>("q", 2.0)});
    } else {
      throw ConfigError("potential[" + std::to_string(i) + "].type: unknown component \"" +
                        type + "\"");
    }
    s.finish();
  }
  return spec;
}

// --- configuration ----------------------------------------------------------------

RunConfig parse_config(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ":" + std::to_string(line_of_offset(text, e.byte)) +
                      ": parse error: " + e.what());
  }
  RunConfig cfg;
  Section top(doc, "");

  {
    Section p(top.require("params"), "params");
    cfg.params.omega = p.get("omega", cfg.params.omega);
    cfg.params.sigma = p.get("sigma", cfg.params.sigma);
    cfg.params.r0 = p.get("r0", cfg.params.r0);
    p.finish();
  }
  cfg.potential = potential_from_json(top.require("potential"));
  GridSpec grid;
  {
    Section g(top.require("grid"), "grid");
    grid.n = g.get("n", 2);
    grid.points = g.get("points", 128);
    grid.half_width = g.get("half_width", 6.0);
    g.finish();
  }
  cfg.scatter.frame_grid = grid;
  if (top.has("probe")) {
    Section p(top.require("probe"), "probe");
    cfg.probe.width = p.get("width", 0.25);
    cfg.probe.center = p.get("center", Vec(grid.n, 0.0));
    cfg.probe.velocity = p.get("velocity", Vec{});
    p.finish();
  } else {
    cfg.probe.center = Vec(grid.n, 0.0);
  }
  if (top.has("scan")) {
    Section s(top.require("scan"), "scan");
    cfg.scan.angles = s.get("angles", cfg.scan.angles);
    cfg.scan.offsets = s.get("offsets", cfg.scan.offsets);
    cfg.scan.ds = s.get("ds", cfg.scan.ds);
    cfg.scan.speed = s.get("speed", cfg.scan.speed);
    cfg.scan.hole_threshold = s.get("hole_threshold", cfg.scan.hole_threshold);
    cfg.velocities = s.get("velocities", std::vector<double>{});
    s.finish();
  }
  if (cfg.probe.velocity.empty()) {
    cfg.probe.velocity.assign(grid.n, 0.0);
    cfg.probe.velocity[0] = cfg.scan.speed;
  }
  cfg.scan.probe_width = cfg.probe.width;
  if (top.has("evolve")) {
    Section e(top.require("evolve"), "evolve");
    cfg.scatter.dt_constant = e.get("dt_constant", cfg.scatter.dt_constant);
    cfg.scatter.evolve.tol_window = e.get("tol_window", cfg.scatter.evolve.tol_window);
    cfg.scatter.evolve.clamp = e.get("clamp", cfg.scatter.evolve.clamp);
    cfg.scatter.evolve.monitor_every = e.get("monitor_every", cfg.scatter.evolve.monitor_every);
    cfg.scatter.evolve.monitor_tol = e.get("monitor_tol", cfg.scatter.evolve.monitor_tol);
    cfg.scatter.window.probe_radius_factor =
        e.get("probe_radius_factor", cfg.scatter.window.probe_radius_factor);
    cfg.scatter.window_quantum = e.get("window_quantum", cfg.scatter.window_quantum);
    const auto rule = e.get<std::string>("window_rule", "support");
    if (rule == "support") cfg.scatter.window.rule = WindowRule::kSupport;
    else if (rule == "coupling") cfg.scatter.window.rule = WindowRule::kCoupling;
    else throw ConfigError("evolve.window_rule: expected \"support\" or \"coupling\"");
    const auto dressing = e.get<std::string>("dressing", "scattering");
    if (dressing == "scattering") cfg.scatter.dressing = Dressing::kScattering;
    else if (dressing == "tilde_boundary") cfg.scatter.dressing = Dressing::kTildeBoundary;
    else throw ConfigError("evolve.dressing: expected \"scattering\" or \"tilde_boundary\"");
    const auto sub = e.get<std::string>("subtraction", "free");
    if (sub == "free") cfg.scatter.subtraction = Subtraction::kFree;
    else if (sub == "naive") cfg.scatter.subtraction = Subtraction::kNaive;
    else throw ConfigError("evolve.subtraction: expected \"free\" or \"naive\"");
    e.finish();
  }
  cfg.scatter.window.tol = cfg.scatter.evolve.tol_window;
  if (top.has("recon")) {
    Section r(top.require("recon"), "recon");
    cfg.recon.fbp.points = r.get("points", cfg.recon.fbp.points);
    cfg.recon.fbp.half_width = r.get("half_width", cfg.recon.fbp.half_width);
    cfg.recon.fbp.hann = r.get("hann", cfg.recon.fbp.hann);
    cfg.recon.deconvolve = r.get("deconvolve", cfg.recon.deconvolve);
    cfg.recon.epsilon = r.get("epsilon", cfg.recon.epsilon);
    r.finish();
  }
  cfg.output = top.get<std::string>("output", cfg.output);
  cfg.scan.workers = top.get("workers", 1);
  cfg.seed = top.get("seed", 0u);
  top.finish();

  // Validation.
  try {
    cfg.params.validate();
    grid.validate();
    cfg.probe.validate();
    cfg.scan.validate();
    cfg.scatter.validate();
    cfg.scatter.evolve.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (static_cast<int>(cfg.probe.center.size()) != grid.n)
    throw ConfigError("probe.center: dimension differs from grid.n");
  for (const auto& c : cfg.potential.components) {
    if (std::holds_alternative<PowerTail>(c)) continue;
    std::visit([&](const auto& comp) {
      if constexpr (requires { comp.center; }) {
        if (static_cast<int>(comp.center.size()) != grid.n)
          throw ConfigError("potential: component center dimension differs from grid.n");
      }
    }, c);
  }
  const AdmissibilityReport report = check_admissibility(cfg.potential, cfg.params, grid.n);
  if (!report.passed()) {
    for (const auto& cl : report.clauses)
      if (!cl.passed) throw ConfigError("admissibility check failed: " + cl.clause + " (" + cl.detail + ")");
  }
  if (!cfg.recon.deconvolve && cfg.probe.width > 0.25 * smallest_feature(cfg.potential) + 1e-12)
    throw ConfigError(
        "probe.width must not exceed 1/4 of the smallest potential feature unless "
        "recon.deconvolve is enabled");

  // Normalized document with every default filled in.
  json norm;
  norm["params"] = {{"omega", cfg.params.omega}, {"sigma", cfg.params.sigma}, {"r0", cfg.params.r0}};
  norm["potential"] = potential_to_json(cfg.potential);
  norm["grid"] = {{"n", grid.n}, {"points", grid.points}, {"half_width", grid.half_width}};
  norm["probe"] = {{"width", cfg.probe.width}, {"center", cfg.probe.center},
                   {"velocity", cfg.probe.velocity}};
  norm["scan"] = {{"angles", cfg.scan.angles}, {"offsets", cfg.scan.offsets},
                  {"ds", cfg.scan.ds}, {"speed", cfg.scan.speed},
                  {"hole_threshold", cfg.scan.hole_threshold}, {"velocities", cfg.velocities}};
  norm["evolve"] = {{"dt_constant", cfg.scatter.dt_constant},
                    {"tol_window", cfg.scatter.evolve.tol_window},
                    {"clamp", cfg.scatter.evolve.clamp},
                    {"monitor_every", cfg.scatter.evolve.monitor_every},
                    {"monitor_tol", cfg.scatter.evolve.monitor_tol},
                    {"probe_radius_factor", cfg.scatter.window.probe_radius_factor},
                    {"window_quantum", cfg.scatter.window_quantum},
                    {"window_rule", cfg.scatter.window.rule == WindowRule::kSupport ? "support"
                                                                                  : "coupling"},
                    {"dressing", dressing_name(cfg.scatter.dressing)},
                    {"subtraction", subtraction_name(cfg.scatter.subtraction)}};
  norm["recon"] = {{"points", cfg.recon.fbp.points}, {"half_width", cfg.recon.fbp.half_width},
                   {"hann", cfg.recon.fbp.hann}, {"deconvolve", cfg.recon.deconvolve},
                   {"epsilon", cfg.recon.epsilon}};
  norm["output"] = cfg.output;
  norm["workers"] = cfg.scan.workers;
  norm["seed"] = cfg.seed;
  cfg.document = norm;
  // Worker count does not change results, so it stays out of the hash.
  json hashed = norm;
  hashed.erase("workers");
  hashed.erase("output");
  cfg.hash = fnv1a_hex(hashed.dump());
  return cfg;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path), path); }

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

json provenance(const RunConfig& cfg, const std::string& command) {
  json p;
  p["command"] = command;
  p["config_hash"] = cfg.hash;
  p["config"] = cfg.document;
  p["modules"] = {{"model", kVersion},      {"grid_engine", kVersion}, {"gauss_engine", kVersion},
                  {"quad_prop", kVersion},  {"interprop", kVersion},   {"scatter", kVersion},
                  {"recon", kVersion},      {"cli_io", kVersion}};
  p["tolerances"] = {{"tol_window", cfg.scatter.evolve.tol_window},
                     {"monitor_tol", cfg.scatter.evolve.monitor_tol},
                     {"dt_rule", "dt = dt_constant / (1 + |v|)"},
                     {"dt_constant", cfg.scatter.dt_constant},
                     {"window_quantum", cfg.scatter.window_quantum},
                     {"clamp", cfg.scatter.evolve.clamp > 0.0
                                   ? json(cfg.scatter.evolve.clamp)
                                   : json("1/dx of the frame grid")}};
  p["probe"] = {{"width", cfg.probe.width},
                {"eta", cfg.probe.eta()},
                {"eta_meaning", "8-standard-deviation Fourier radius of the Gaussian envelope"}};
  p["conventions"] = {{"dressing", dressing_name(cfg.scatter.dressing)},
                      {"subtraction", subtraction_name(cfg.scatter.subtraction)},
                      {"element", "i (U - U0) applied to the incoming state, paired "
                                  "conjugate-linearly with the outgoing state"}};
  return p;
}

bool validate_metrics_schema(const json& doc, std::string* why) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (!doc.is_object()) return fail("metrics: not an object");
  for (const char* k : {"field", "metrics", "provenance"})
    if (!doc.contains(k)) return fail(std::string("metrics: missing \"") + k + "\"");
  const auto& f = doc["field"];
  if (!f.is_object() || !f.contains("points") || !f.contains("half_width") ||
      !f["points"].is_number_integer() || !f["half_width"].is_number())
    return fail("metrics.field: needs integer points and numeric half_width");
  const auto& m = doc["metrics"];
  if (!m.is_object()) return fail("metrics.metrics: not an object");
  for (const char* k : {"relative_l2", "linf", "sinogram_rms"}) {
    if (!m.contains(k)) return fail(std::string("metrics.metrics: missing \"") + k + "\"");
    if (!m[k].is_null() && !m[k].is_number())
      return fail(std::string("metrics.metrics.") + k + ": must be a number or null");
  }
  if (!doc["provenance"].is_object()) return fail("metrics.provenance: not an object");
  return true;
}

// --- records journal ----------------------------------------------------------

std::string format_record(const RadonSample& s) {
  std::ostringstream os;
  os << s.angle_index << ' ' << s.offset_index << ' ' << (s.ok ? 1 : 0) << ' '
     << fmt17(s.value.real()) << ' ' << fmt17(s.value.imag()) << ' ' << fmt17(s.error) << ' '
     << fmt17(s.t_star);
  if (!s.ok) {
    std::string reason = s.reason;
    for (char& c : reason)
      if (c == '\n') c = ' ';
    os << ' ' << reason;
  }
  return os.str();
}

RadonSample parse_record(const std::string& line) {
  std::istringstream is(line);
  RadonSample s;
  int ok = 1;
  std::string re, im, err, ts;
  if (!(is >> s.angle_index >> s.offset_index >> ok >> re >> im >> err >> ts))
    throw ConfigError("records journal: malformed line \"" + line + "\"");
  s.ok = ok != 0;
  s.value = {std::strtod(re.c_str(), nullptr), std::strtod(im.c_str(), nullptr)};
  s.error = std::strtod(err.c_str(), nullptr);
  s.t_star = std::strtod(ts.c_str(), nullptr);
  std::getline(is >> std::ws, s.reason);
  return s;
}

// --- commands -------------------------------------------------------------------

int cmd_validate(const std::string& config_path, std::ostream& out) {
  return guarded(out, [&] {
    json doc;
    RunConfig cfg;
    // Admissibility is reported clause by clause even when it fails.
    {
      const std::string text = read_file(config_path);
      try {
        cfg = parse_config(text, config_path);
      } catch (const ConfigError& e) {
        const std::string what = e.what();
        if (what.rfind("admissibility", 0) == 0) {
          const json j = json::parse(text);
          const PotentialSpec spec = potential_from_json(j.at("potential"));
          DecayParams params;
          const auto& p = j.at("params");
          params.omega = p.value("omega", params.omega);
          params.sigma = p.value("sigma", params.sigma);
          params.r0 = p.value("r0", params.r0);
          const int n = j.at("grid").value("n", 2);
          out << check_admissibility(spec, params, n).to_string();
        }
        throw;
      }
    }
    out << check_admissibility(cfg.potential, cfg.params, cfg.scatter.frame_grid.n).to_string();

    const GridSpec& g = cfg.scatter.frame_grid;
    const double bytes = static_cast<double>(g.size()) * 16.0;
    out << "grid budget: " << g.points << "^" << g.n << " points, L = " << g.half_width
        << ", dx = " << g.dx() << ", " << std::setprecision(3) << bytes / 1048576.0
        << " MiB per wavefunction\n";
    // Envelope breathing in the harmonic region stays below max(w, 1/(omega w)).
    const double w = cfg.probe.width;
    const double wmax = std::max(w, 1.0 / (cfg.params.omega * w));
    out << "probe: width " << w << ", eta = " << cfg.probe.eta() << ", max envelope width "
        << wmax << "\n";

    std::vector<double> speeds = cfg.velocities;
    if (speeds.empty()) speeds.push_back(cfg.scan.speed);
    bool ok = true;
    for (double s : speeds) {
      ProbeSpec p = cfg.probe;
      p.center.assign(g.n, 0.0);
      p.velocity.assign(g.n, 0.0);
      p.velocity[0] = s;
      try {
        const InteractionWindow win =
            interaction_window(build_probe(p), cfg.potential, cfg.params, cfg.scatter.window);
        const double steps = win.empty ? 0.0 : std::ceil(2.0 * win.t_star / cfg.scatter.dt_for(s));
        out << "|v| = " << s << ": window t* = " << win.t_star << (win.empty ? " (empty)" : "")
            << ", steps ~ " << steps << "\n";
      } catch (const DomainError& e) {
        out << "|v| = " << s << ": FAIL " << e.what() << "\n";
        ok = false;
      }
    }
    out << (ok ? "validate: PASS\n" : "validate: FAIL (numeric budget)\n");
    return ok ? kExitOk : kExitNumeric;
  });
}

int cmd_element(const std::string& config_path, std::optional<double> angle,
                std::optional<double> offset, std::optional<double> speed,
                const std::string& out_dir, std::ostream& out) {
  return guarded(out, [&] {
    const RunConfig cfg = load_config(config_path);
    ProbeSpec probe = cfg.probe;
    if (angle || offset || speed) {
      if (cfg.scatter.frame_grid.n != 2)
        throw ConfigError("--angle/--offset need a two-dimensional grid");
      ScanConfig sc = cfg.scan;
      if (speed) sc.speed = *speed;
      const double th = angle.value_or(std::atan2(cfg.probe.velocity[1], cfg.probe.velocity[0]));
      double off = 0.0;
      if (offset) {
        off = *offset;
      } else {
        // Offset of the configured centre along the normal of the direction.
        off = -cfg.probe.center[0] * std::sin(th) + cfg.probe.center[1] * std::cos(th);
      }
      probe = scan_probe(sc, th, off);
      if (!speed && !angle) probe.velocity = cfg.probe.velocity;
    }
    const ElementResult r = scattering_element(probe, cfg.potential, cfg.params, cfg.scatter);
    const double error = std::abs(r.scaled.imag());
    out << std::setprecision(17) << "|v|*element = " << r.scaled.real() << " + " << r.scaled.imag()
        << "i  (|v| = " << r.speed << ", t* = " << r.t_star
        << (r.empty_window ? ", empty window" : "") << ", error estimate " << error << ")\n";
    fs::create_directories(out_dir);
    json rec;
    rec["speed"] = r.speed;
    rec["t_star"] = r.t_star;
    rec["empty_window"] = r.empty_window;
    rec["element"] = {r.element.real(), r.element.imag()};
    rec["scaled"] = {r.scaled.real(), r.scaled.imag()};
    rec["error_estimate"] = error;
    rec["probe"] = {{"width", probe.width}, {"center", probe.center}, {"velocity", probe.velocity}};
    rec["provenance"] = provenance(cfg, "element");
    write_json((fs::path(out_dir) / "element.json").string(), rec);
    return kExitOk;
  });
}

namespace {

std::vector<RadonSample> read_journal(const std::string& path, const std::string& hash) {
  std::vector<RadonSample> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  if (!std::getline(in, line)) return out;
  if (line != "# config " + hash)
    throw ConfigError("resume: records journal belongs to a different configuration");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_record(line));
  }
  return out;
}

Sinogram run_scan(const RunConfig& cfg, const std::string& out_dir, int workers, bool resume,
                  const std::string& name, std::ostream& out) {
  fs::create_directories(out_dir);
  const std::string journal = (fs::path(out_dir) / (name + ".records")).string();
  std::vector<RadonSample> completed;
  if (resume) completed = read_journal(journal, cfg.hash);
  std::ofstream rec;
  if (resume && fs::exists(journal)) {
    rec.open(journal, std::ios::app);
  } else {
    rec.open(journal, std::ios::trunc);
    rec << "# config " << cfg.hash << '\n';
  }
  if (!rec) throw Error("cannot write " + journal);
  ScanConfig scan = cfg.scan;
  scan.workers = workers > 0 ? workers : cfg.scan.workers;
  if (!completed.empty())
    out << name << ": resuming with " << completed.size() << " completed samples\n";
  Sinogram sino = sinogram_scan(cfg.potential, cfg.params, cfg.scatter, scan, completed,
                                [&](const RadonSample& s) {
                                  rec << format_record(s) << '\n';
                                  rec.flush();
                                });
  rec.close();
  const std::string stem = (fs::path(out_dir) / name).string();
  write_sinogram(sino, stem);
  json holes = json::array();
  for (const auto& s : sino.samples)
    if (!s.ok)
      holes.push_back({{"angle_index", s.angle_index}, {"offset_index", s.offset_index},
                       {"reason", s.reason}});
  json report;
  report["holes"] = holes;
  report["count"] = sino.holes;
  report["fraction"] = static_cast<double>(sino.holes) / sino.values.size();
  report["threshold"] = cfg.scan.hole_threshold;
  write_json(stem + ".holes.json", report);
  return sino;
}

bool too_many_holes(const Sinogram& s, double threshold) {
  return static_cast<double>(s.holes) > threshold * static_cast<double>(s.values.size());
}

}  // namespace

int cmd_sinogram(const std::string& config_path, const std::string& out_dir, int workers,
                 bool resume, std::ostream& out) {
  return guarded(out, [&] {
    const RunConfig cfg = load_config(config_path);
    if (cfg.scatter.frame_grid.n != 2) throw ConfigError("sinogram: grid.n must be 2");
    const Sinogram sino = run_scan(cfg, out_dir, workers, resume, "sinogram", out);
    write_json((fs::path(out_dir) / "provenance.json").string(), provenance(cfg, "sinogram"));
    out << "sinogram: " << sino.num_angles() << " x " << sino.num_offsets() << " samples, "
        << sino.holes << " holes\n";
    if (too_many_holes(sino, cfg.scan.hole_threshold)) {
      out << "sinogram: hole fraction exceeds " << cfg.scan.hole_threshold << "\n";
      return kExitHoles;
    }
    return kExitOk;
  });
}

namespace {

struct ReconOutput {
  FieldGrid field;
  json metrics;
};

ReconOutput reconstruct(const Sinogram& input, const RunConfig* cfg) {
  ReconOutput r;
  const FbpOptions fbp = cfg ? cfg->recon.fbp : FbpOptions{};
  Sinogram sino = input;
  if (cfg && cfg->recon.deconvolve)
    sino = deconvolve_smear(sino, input.probe_width, cfg->recon.epsilon);
  r.field = fbp_invert(sino, fbp);
  json m;
  m["relative_l2"] = nullptr;
  m["linf"] = nullptr;
  m["sinogram_rms"] = nullptr;
  if (cfg && !cfg->potential.empty()) {
    const FieldGrid ref = sample_field(cfg->potential, fbp.points, fbp.half_width);
    const auto mask = support_mask(cfg->potential, ref);
    const Sinogram oracle = xray_sinogram(cfg->potential, input.num_angles(),
                                          input.num_offsets(), input.ds, input.probe_width);
    const FieldMetrics fm = compare_potentials(r.field, ref, mask, input, oracle);
    m["relative_l2"] = fm.relative_l2;
    m["linf"] = fm.linf;
    m["sinogram_rms"] = fm.sinogram_rms;
    m["mask"] = "disks of radius 2w around Gaussian centres, R around compact components";
  }
  r.metrics = m;
  return r;
}

void write_recon(const ReconOutput& r, const std::string& dir, const std::string& name,
                 const json& prov) {
  const std::string stem = (fs::path(dir) / name).string();
  write_field_binary(r.field, stem + ".bin");
  write_field_csv(r.field, stem + ".csv");
  write_pgm(r.field, stem + ".pgm");
  json doc;
  doc["field"] = {{"points", r.field.points}, {"half_width", r.field.half_width},
                  {"binary", name + ".bin"}, {"csv", name + ".csv"}, {"preview", name + ".pgm"}};
  doc["metrics"] = r.metrics;
  doc["provenance"] = prov;
  write_json(stem + ".metrics.json", doc);
}

}  // namespace

int cmd_reconstruct(const std::string& sinogram_stem, const std::string& config_path,
                    const std::string& out_dir, std::ostream& out) {
  return guarded(out, [&] {
    std::optional<RunConfig> cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    const Sinogram sino = read_sinogram(sinogram_stem);
    fs::create_directories(out_dir);
    const ReconOutput r = reconstruct(sino, cfg ? &*cfg : nullptr);
    json prov = cfg ? provenance(*cfg, "reconstruct") : json{{"command", "reconstruct"}};
    prov["sinogram"] = sinogram_stem;
    write_recon(r, out_dir, "field", prov);
    out << "reconstruct: wrote field (" << r.field.points << "^2)";
    if (!r.metrics["relative_l2"].is_null())
      out << ", relative L2 inside support = " << r.metrics["relative_l2"].get<double>();
    out << "\n";
    return kExitOk;
  });
}

int cmd_compare(const std::string& config_a, const std::string& config_b,
                const std::string& out_dir, int workers, std::ostream& out) {
  return guarded(out, [&] {
    const RunConfig a = load_config(config_a);
    const RunConfig b = load_config(config_b);
    for (const char* key : {"params", "grid", "probe", "scan", "evolve"})
      if (a.document[key] != b.document[key])
        throw ConfigError(std::string("compare: configurations differ in \"") + key +
                          "\"; only the potential may differ");
    fs::create_directories(out_dir);
    const Sinogram sa = run_scan(a, out_dir, workers, false, "sinogram_a", out);
    const Sinogram sb = run_scan(b, out_dir, workers, false, "sinogram_b", out);
    // Noise floor: V = 0 evolved over the windows of phantom A, with the naive
    // subtraction so boundary and discretization residue are measured.
    RunConfig zero = a;
    zero.potential = {};
    zero.scatter.window_potential = a.potential;
    zero.scatter.subtraction = Subtraction::kNaive;
    zero.hash = fnv1a_hex(a.hash + "/noise-floor");
    const Sinogram s0 = run_scan(zero, out_dir, workers, false, "sinogram_zero", out);
    if (too_many_holes(sa, a.scan.hole_threshold) || too_many_holes(sb, b.scan.hole_threshold) ||
        too_many_holes(s0, a.scan.hole_threshold))
      throw ScanError("compare: a scan exceeded the hole threshold");

    const double distance = sinogram_rms_distance(sa, sb);
    const double floor = sinogram_rms(s0);
    const bool distinguishable = distance > 10.0 * floor;
    json field_l2 = nullptr, field_linf = nullptr;
    // Too few angles or offsets for an inversion: the verdict stands on the sinograms.
    if (sa.num_angles() >= 32 && sa.num_offsets() >= 33) {
      const ReconOutput ra = reconstruct(sa, &a);
      const ReconOutput rb = reconstruct(sb, &b);
      write_recon(ra, out_dir, "field_a", provenance(a, "compare"));
      write_recon(rb, out_dir, "field_b", provenance(b, "compare"));
      std::vector<char> mask = support_mask(a.potential, ra.field);
      const auto mb = support_mask(b.potential, rb.field);
      for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mask[i] || mb[i];
      const FieldMetrics fm = compare_potentials(ra.field, rb.field, mask);
      field_l2 = fm.relative_l2;
      field_linf = fm.linf;
    }

    json rep;
    rep["sinogram_rms_distance"] = distance;
    rep["noise_floor"] = floor;
    rep["ratio"] = floor > 0.0 ? json(distance / floor) : json(nullptr);
    rep["field_relative_l2"] = field_l2;
    rep["field_linf"] = field_linf;
    rep["verdict"] = distinguishable ? "distinguishable" : "indistinguishable at this scale";
    rep["thresholds"] = {
        {"distinguishable", "sinogram distance > 10 x noise floor"},
        {"indistinguishable", "otherwise; identical potentials are expected at <= 2 x floor"},
        {"noise_floor",
         "RMS of a V = 0 scan over phantom A's interaction windows, naive subtraction"}};
    rep["config_hash_a"] = a.hash;
    rep["config_hash_b"] = b.hash;
    write_json((fs::path(out_dir) / "compare.json").string(), rep);
    out << std::setprecision(6) << "compare: sinogram distance " << distance << ", noise floor "
        << floor << " -> " << rep["verdict"].get<std::string>() << "\n";
    return kExitOk;
  });
}

}  // namespace tdho
