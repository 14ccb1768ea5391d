#include "pinncli/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <spdlog/fmt/fmt.h>

#include "pinn/error.hpp"
#include "pinn/physics.hpp"

namespace pinncli {

using pinn::Error;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Error bad_value(const std::string& key, const std::string& v, const char* what) {
  return Error("invalid config: " + key + ": cannot parse '" + v + "' as " + what);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* b = v.data();
  const char* e = b + v.size();
  auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || p != e)
    throw bad_value(key, v, std::is_floating_point_v<T> ? "a number" : "an integer");
  return out;
}

void parse_into(const std::string& k, const std::string& v, double& out) {
  out = parse_number<double>(k, v);
}
void parse_into(const std::string& k, const std::string& v, int& out) {
  out = parse_number<int>(k, v);
}
void parse_into(const std::string& k, const std::string& v, long& out) {
  out = parse_number<long>(k, v);
}
void parse_into(const std::string& k, const std::string& v, unsigned long& out) {
  if (!v.empty() && v[0] == '-') throw bad_value(k, v, "a non-negative integer");
  out = parse_number<unsigned long>(k, v);
}
void parse_into(const std::string& k, const std::string& v, bool& out) {
  if (v == "true" || v == "1" || v == "yes") out = true;
  else if (v == "false" || v == "0" || v == "no") out = false;
  else throw bad_value(k, v, "a boolean");
}
void parse_into(const std::string&, const std::string& v, std::string& out) { out = v; }
void parse_into(const std::string& k, const std::string& v, std::vector<int>& out) {
  out.clear();
  for (const auto& s : split_list(v)) out.push_back(parse_number<int>(k, s));
}
void parse_into(const std::string& k, const std::string& v, std::vector<double>& out) {
  out.clear();
  for (const auto& s : split_list(v)) out.push_back(parse_number<double>(k, s));
}
void parse_into(const std::string&, const std::string& v, std::vector<std::string>& out) {
  out = split_list(v);
}

std::string format_value(double d) { return fmt::format("{}", d); }
std::string format_value(int i) { return std::to_string(i); }
std::string format_value(long i) { return std::to_string(i); }
std::string format_value(unsigned long i) { return std::to_string(i); }
std::string format_value(bool b) { return b ? "true" : "false"; }
std::string format_value(const std::string& s) { return s; }
template <class T>
std::string format_value(const std::vector<T>& v) {
  std::string out;
  for (const auto& x : v) out += (out.empty() ? "" : ",") + format_value(x);
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field field(std::string key, T RunConfig::*member) {
  return Field{key,
               [key, member](RunConfig& c, const std::string& v) {
                 parse_into(key, v, c.*member);
               },
               [member](const RunConfig& c) { return format_value(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      field("case.name", &RunConfig::case_name),
      field("case.lid_velocity", &RunConfig::lid_velocity),
      field("case.inflow", &RunConfig::inflow),
      field("case.p_inlet", &RunConfig::p_inlet),
      field("case.p_wall", &RunConfig::p_wall),
      field("case.u_outlet", &RunConfig::u_outlet),
      field("case.v_outlet", &RunConfig::v_outlet),
      field("net.family", &RunConfig::family),
      field("net.layers", &RunConfig::layers),
      field("net.grid", &RunConfig::grid),
      field("net.order", &RunConfig::order),
      field("net.noise", &RunConfig::noise),
      field("scheme.name", &RunConfig::scheme),
      field("scheme.weights", &RunConfig::weights),
      field("scheme.rba_gamma", &RunConfig::rba_gamma),
      field("scheme.rba_eta", &RunConfig::rba_eta),
      field("scheme.sa_lr", &RunConfig::sa_lr),
      field("scheme.lra_alpha", &RunConfig::lra_alpha),
      field("scheme.lra_ceiling", &RunConfig::lra_ceiling),
      field("scheme.gn_alpha", &RunConfig::gn_alpha),
      field("scheme.gn_lr", &RunConfig::gn_lr),
      field("train.epochs", &RunConfig::epochs),
      field("train.batch", &RunConfig::batch),
      field("train.seed", &RunConfig::seed),
      field("train.lr", &RunConfig::lr),
      field("train.beta1", &RunConfig::beta1),
      field("train.beta2", &RunConfig::beta2),
      field("train.eps", &RunConfig::eps),
      field("train.interior", &RunConfig::interior),
      field("train.boundary", &RunConfig::boundary),
      field("train.initial", &RunConfig::initial),
      field("train.checkpoint_every", &RunConfig::checkpoint_every),
      field("train.log_every", &RunConfig::log_every),
      field("train.resume", &RunConfig::resume),
      field("paths.reference", &RunConfig::reference),
      field("paths.output", &RunConfig::output),
      field("paths.checkpoint", &RunConfig::checkpoint),
      field("export.t", &RunConfig::export_t),
      field("export.nx", &RunConfig::export_nx),
      field("export.ny", &RunConfig::export_ny),
      field("sweep.cases", &RunConfig::sweep_cases),
      field("sweep.families", &RunConfig::sweep_families),
      field("sweep.schemes", &RunConfig::sweep_schemes),
      field("sweep.field", &RunConfig::sweep_field),
      field("sweep.reference_dir", &RunConfig::sweep_reference_dir),
  };
  return table;
}

Error invalid(const std::string& key, const std::string& why) {
  return Error("invalid config: " + key + ": " + why);
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::stringstream ss(text);
  std::size_t lineno = 0;
  for (std::string line; std::getline(ss, line);) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("invalid config: line " + std::to_string(lineno) +
                  " is not 'key = value'");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void apply(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (f.key == key) return f.set(cfg, value);
  throw Error("unknown option: '" + key + "'");
}

template <class F>
auto named(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    std::string what = e.what();
    const std::string prefix = "invalid config: ";
    if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
    throw invalid(key, what);
  }
}

void validate(const RunConfig& c) {
  const auto kind = named("case.name", [&] { return pinn::sampling::parse_case(c.case_name); });
  named("net.family", [&] { return pinn::nets::parse_family(c.family); });
  named("scheme.name", [&] { return pinn::balancing::parse_scheme(c.scheme); });
  if (c.epochs < 0) throw invalid("train.epochs", "must be >= 0");
  if (c.batch == 0) throw invalid("train.batch", "must be >= 1");
  if (!(c.lr > 0.0)) throw invalid("train.lr", "must be > 0");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0)) throw invalid("train.beta1", "must be in [0, 1)");
  if (!(c.beta2 >= 0.0 && c.beta2 < 1.0)) throw invalid("train.beta2", "must be in [0, 1)");
  if (!(c.eps > 0.0)) throw invalid("train.eps", "must be > 0");
  if (c.checkpoint_every < 0) throw invalid("train.checkpoint_every", "must be >= 0");
  if (c.log_every < 0) throw invalid("train.log_every", "must be >= 0");
  if (!(c.rba_gamma >= 0.0 && c.rba_gamma <= 1.0))
    throw invalid("scheme.rba_gamma", "must be in [0, 1]");
  if (!(c.rba_eta >= 0.0)) throw invalid("scheme.rba_eta", "must be >= 0");
  if (!(c.sa_lr >= 0.0)) throw invalid("scheme.sa_lr", "must be >= 0");
  if (!(c.lra_alpha >= 0.0 && c.lra_alpha <= 1.0))
    throw invalid("scheme.lra_alpha", "must be in [0, 1]");
  if (!(c.lra_ceiling > 0.0)) throw invalid("scheme.lra_ceiling", "must be > 0");
  if (!std::isfinite(c.gn_alpha)) throw invalid("scheme.gn_alpha", "must be finite");
  if (c.grid < 1) throw invalid("net.grid", "must be >= 1");
  if (c.order < 0) throw invalid("net.order", "must be >= 0");
  if (!(c.noise >= 0.0)) throw invalid("net.noise", "must be >= 0");
  if (!c.layers.empty()) {
    if (c.layers.size() < 2) throw invalid("net.layers", "needs at least 2 sizes");
    if (c.layers.front() != 3 || c.layers.back() != 3)
      throw invalid("net.layers", "must start and end with 3 (t,x,y -> u,v,p)");
    for (int n : c.layers)
      if (n <= 0) throw invalid("net.layers", "sizes must be positive");
  }
  if (!c.weights.empty()) {
    const auto m = pinn::physics::case_terms(pinn::sampling::make_case(kind)).size();
    if (c.weights.size() != m && c.weights.size() != 3)
      throw Error("weight/term arity mismatch: scheme.weights has " +
                  std::to_string(c.weights.size()) + " values, case " + c.case_name +
                  " has " + std::to_string(m) + " terms");
  }
  if (c.export_nx == 0) throw invalid("export.nx", "must be >= 1");
  if (c.export_ny == 0) throw invalid("export.ny", "must be >= 1");
  if (c.output.empty()) throw invalid("paths.output", "must not be empty");
  for (const auto& s : c.sweep_cases)
    named("sweep.cases", [&] { return pinn::sampling::parse_case(s); });
  for (const auto& s : c.sweep_families)
    named("sweep.families", [&] { return pinn::nets::parse_family(s); });
  for (const auto& s : c.sweep_schemes)
    named("sweep.schemes", [&] { return pinn::balancing::parse_scheme(s); });
  if (c.sweep_field != "u" && c.sweep_field != "v" && c.sweep_field != "p")
    throw invalid("sweep.field", "must be u, v or p");
}

RunConfig resolve(RunConfig c) {
  if (c.layers.empty())
    c.layers = pinn::nets::parse_family(c.family) == pinn::nets::Family::Kan
                   ? std::vector<int>{3, 5, 5, 3}
                   : std::vector<int>{3, 20, 20, 3};
  if (c.gn_lr < 0.0) c.gn_lr = c.lr;
  const auto kind = pinn::sampling::parse_case(c.case_name);
  const auto terms = pinn::physics::case_terms(pinn::sampling::make_case(kind));
  std::vector<std::string> names;
  for (const auto& t : terms) names.push_back(t.tag);
  if (c.weights.empty()) {
    c.weights = kind == pinn::sampling::CaseKind::Poiseuille
                    ? pinn::balancing::heuristic_weights(names, 0.1, 2.0, 2.0)
                    : std::vector<double>(names.size(), 1.0);
  } else if (c.weights.size() == 3 && names.size() != 3) {
    c.weights = pinn::balancing::heuristic_weights(names, c.weights[0], c.weights[1],
                                                   c.weights[2]);
  }
  return c;
}

RunConfig parse_config(const std::filesystem::path* file, const KeyValues& flags,
                       bool resolved) {
  RunConfig cfg;
  if (file != nullptr) {
    std::ifstream in(*file);
    if (!in) throw Error("invalid config: cannot read " + file->string());
    std::stringstream ss;
    ss << in.rdbuf();
    for (const auto& [k, v] : parse_key_values(ss.str())) apply(cfg, k, v);
  }
  for (const auto& [k, v] : flags) apply(cfg, k, v);
  validate(cfg);
  return resolved ? resolve(cfg) : cfg;
}

std::string to_manifest(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

pinn::sampling::CaseDefinition make_case(const RunConfig& c) {
  auto cd = pinn::sampling::make_case(pinn::sampling::parse_case(c.case_name));
  cd.lid_velocity = c.lid_velocity;
  cd.inflow = c.inflow;
  cd.p_inlet = c.p_inlet;
  cd.p_wall = c.p_wall;
  cd.u_outlet = c.u_outlet;
  cd.v_outlet = c.v_outlet;
  return cd;
}

pinn::nets::NetworkSpec make_spec(const RunConfig& c) {
  pinn::nets::NetworkSpec s;
  s.family = pinn::nets::parse_family(c.family);
  s.layers = c.layers;
  s.grid = c.grid;
  s.order = c.order;
  s.noise = c.noise;
  s.validate();
  return s;
}

pinn::balancing::Hyper make_hyper(const RunConfig& c) {
  pinn::balancing::Hyper h;
  h.rba_gamma = c.rba_gamma;
  h.rba_eta = c.rba_eta;
  h.sa_lr = c.sa_lr;
  h.lra_alpha = c.lra_alpha;
  h.lra_ceiling = c.lra_ceiling;
  h.gn_alpha = c.gn_alpha;
  h.gn_lr = c.gn_lr < 0.0 ? c.lr : c.gn_lr;
  return h;
}

pinn::sampling::SampleCounts make_counts(const RunConfig& c) {
  return {c.interior, c.boundary, c.initial};
}

pinn::train::AdamConfig make_adam(const RunConfig& c) {
  return {c.lr, c.beta1, c.beta2, c.eps};
}

std::filesystem::path output_dir(const RunConfig& c) {
  std::filesystem::path p(c.output);
  if (p.is_relative())
    if (const char* root = std::getenv("PINN_OUTPUT_ROOT"); root && *root)
      p = std::filesystem::path(root) / p;
  return p;
}

std::filesystem::path checkpoint_path(const RunConfig& c) {
  if (!c.checkpoint.empty()) return c.checkpoint;
  return output_dir(c) / "checkpoint.txt";
}

}  // namespace pinncli
