#include "lattice_ldp/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

#include "lattice_ldp/error.hpp"
#include "lattice_ldp/path_io.hpp"

namespace lattice_ldp {

namespace {

const std::vector<std::pair<std::string, std::vector<std::string>>>& schema() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> s{
      {"lattice", {"d", "n"}},
      {"time", {"T", "dt"}},
      {"kernel", {"family", "rho", "scale", "R", "R_lambda", "M"}},
      {"noise", {"family", "rho_a", "sigma2", "time_profile"}},
      {"fhn", {"a_fr", "c_fr", "u_ini", "f1", "f2"}},
      {"learning", {"J_bar0", "rho_J", "R_J", "J_corr", "J_dec", "J_ini", "v_fn"}},
      {"run", {"seed", "replicas", "record_every", "outputs"}},
  };
  return s;
}

const std::set<std::string> kOutputs{"paths_csv", "paths_bin", "noise_csv", "summary"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct RawValue {
  std::string text;
  int line = 0;
};

class Reader {
 public:
  Reader(std::map<std::string, RawValue> values, std::string source)
      : values_(std::move(values)), source_(std::move(source)) {}

  [[noreturn]] void error(const std::string& key, const std::string& msg) const {
    const auto it = values_.find(key);
    std::string where = source_;
    if (it != values_.end()) where += ":" + std::to_string(it->second.line);
    fail(ErrorCode::config_invalid, where + ": " + key + ": " + msg);
  }

  const std::string* text(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second.text;
  }

  template <class T>
  std::optional<T> number(const std::string& key) const {
    const auto* t = text(key);
    if (!t) return std::nullopt;
    T value{};
    const auto* end = t->data() + t->size();
    const auto res = std::from_chars(t->data(), end, value);
    if (res.ec != std::errc() || res.ptr != end) error(key, "cannot parse '" + *t + "' as a number");
    return value;
  }

  template <class T>
  void set(const std::string& key, T& target) const {
    if (auto v = number<T>(key)) target = *v;
  }

  template <class T, class Parse>
  void set_enum(const std::string& key, T& target, Parse parse) const {
    const auto* t = text(key);
    if (!t) return;
    try {
      target = parse(*t);
    } catch (const Error& e) {
      error(key, e.what());
    }
  }

  std::map<std::string, int> lines() const {
    std::map<std::string, int> out;
    for (const auto& [k, v] : values_) out[k] = v.line;
    return out;
  }

 private:
  std::map<std::string, RawValue> values_;
  std::string source_;
};

RunConfig build(const Reader& r) {
  RunConfig c;
  r.set("lattice.d", c.dim);
  if (c.dim < 1 || c.dim > 3) r.error("lattice.d", "dimension must be 1, 2 or 3");
  r.set("lattice.n", c.radius);
  if (c.radius < 0) r.error("lattice.n", "radius must be >= 0");
  r.set("time.T", c.horizon);
  if (!(c.horizon > 0.0)) r.error("time.T", "horizon must be > 0");
  r.set("time.dt", c.dt);
  if (!(c.dt > 0.0)) r.error("time.dt", "time step must be > 0");

  c.kappa.support = default_kappa_support(c.dim);
  r.set_enum("kernel.family", c.kappa.family, parse_kappa_family);
  r.set("kernel.rho", c.kappa.rate);
  r.set("kernel.scale", c.kappa.scale);
  r.set("kernel.R", c.kappa.support);
  c.lambda_support = std::max(default_lambda_support(c.dim), c.kappa.support);
  r.set("kernel.R_lambda", c.lambda_support);
  c.spectral_grid = std::max(default_spectral_grid(c.dim), 4 * c.lambda_support);
  r.set("kernel.M", c.spectral_grid);

  r.set_enum("noise.family", c.noise.family, parse_covariance_family);
  r.set("noise.rho_a", c.noise.rho);
  r.set("noise.sigma2", c.noise.sigma2);
  r.set_enum("noise.time_profile", c.noise.profile, parse_time_profile);

  auto& fhn = c.model.fhn;
  r.set("fhn.a_fr", fhn.a_fr);
  r.set("fhn.c_fr", fhn.c_fr);
  r.set("fhn.u_ini", fhn.u_ini);
  r.set_enum("fhn.f1", fhn.f1, parse_response);
  r.set_enum("fhn.f2", fhn.f2, parse_response);

  auto& learning = c.model.learning;
  r.set("learning.J_bar0", learning.j_bar0);
  r.set("learning.rho_J", learning.rho_j);
  r.set("learning.R_J", learning.support);
  learning.support = learning.resolved_support(c.radius);
  r.set("learning.J_corr", learning.j_corr);
  r.set("learning.J_dec", learning.j_dec);
  r.set("learning.J_ini", learning.j_ini_fraction);
  r.set_enum("learning.v_fn", learning.activity, parse_response);

  r.set("run.seed", c.seed);
  r.set("run.replicas", c.replicas);
  if (c.replicas == 0) r.error("run.replicas", "need at least one replica");
  r.set("run.record_every", c.record_every);
  if (c.record_every == 0) r.error("run.record_every", "must be >= 1");
  if (const auto* t = r.text("run.outputs")) {
    c.outputs.clear();
    std::istringstream items(*t);
    std::string item;
    while (std::getline(items, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      if (!kOutputs.count(item)) r.error("run.outputs", "unknown output '" + item + "'");
      c.outputs.push_back(item);
    }
  }
  c.lines = r.lines();

  try {
    validate_config(c);
  } catch (const Error& e) {
    // Anchor the message at the most relevant key.
    const std::string msg = e.what();
    std::string key = "lattice.n";
    if (msg.find("time step") != std::string::npos || msg.find("dt") != std::string::npos) key = "time.dt";
    else if (msg.find("kappa^k") != std::string::npos) key = "learning.J_bar0";
    else if (msg.find("R_J") != std::string::npos) key = "learning.R_J";
    else if (msg.find("noise") != std::string::npos || msg.find("a~") != std::string::npos) key = "noise.family";
    else if (msg.find("lambda") != std::string::npos || msg.find("grid") != std::string::npos) key = "kernel.R_lambda";
    else if (msg.find("fhn") != std::string::npos) key = "fhn.c_fr";
    r.error(key, msg);
  }
  return c;
}

std::string num(double v) { return format_double(v); }

}  // namespace

bool RunConfig::wants(const std::string& output) const {
  return std::find(outputs.begin(), outputs.end(), output) != outputs.end();
}

void validate_config(const RunConfig& config) {
  const auto shape = config.shape();
  config.grid();  // dt must divide T
  if (config.lambda_support < config.kappa.support) {
    fail(ErrorCode::config_invalid, "R_lambda must be at least the kernel support R");
  }
  if (config.spectral_grid < 4 * config.lambda_support) {
    fail(ErrorCode::config_invalid, "spectral grid M must be >= 4 R_lambda");
  }
  const auto kernel = build_kappa(config.dim, config.kappa);
  validate_network(config.model, kernel, shape);
  if (!(config.noise.sigma2 >= 0.0)) fail(ErrorCode::config_invalid, "noise sigma2 must be >= 0");
  build_spectral_model(config.noise, shape, TimeGrid(config.horizon, 1), {.limit_grid = 8});
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  std::map<std::string, std::set<std::string>> allowed;
  for (const auto& [section, keys] : schema()) allowed[section].insert(keys.begin(), keys.end());

  std::map<std::string, RawValue> values;
  std::string line, section;
  int line_no = 0;
  auto bad = [&](const std::string& msg) {
    fail(ErrorCode::config_invalid, source + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad("malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!allowed.count(section)) bad("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad("expected key = value");
    if (section.empty()) bad("key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!allowed[section].count(key)) bad("unknown key '" + key + "' in [" + section + "]");
    const std::string full = section + "." + key;
    if (values.count(full)) bad("duplicate key '" + key + "'");
    if (value.empty()) bad("empty value for '" + key + "'");
    values[full] = {value, line_no};
  }
  return build(Reader(std::move(values), source));
}

RunConfig config_from_json(const nlohmann::json& manifest, const std::string& source) {
  const auto& cfg = manifest.contains("config") ? manifest.at("config") : manifest;
  std::ostringstream ini;
  for (const auto& [section, keys] : cfg.items()) {
    ini << '[' << section << "]\n";
    for (const auto& [key, value] : keys.items()) {
      ini << key << " = " << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
    }
  }
  std::istringstream in(ini.str());
  return parse_config(in, source);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config_invalid, path + ": cannot open config");
  const int first = (in >> std::ws).peek();
  if (first == '{') {
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::config_invalid, path + ": " + e.what());
    }
    return config_from_json(doc, path);
  }
  return parse_config(in, path);
}

ConfigSections config_sections(const RunConfig& c) {
  const auto& f = c.model.fhn;
  const auto& l = c.model.learning;
  std::string outputs;
  for (const auto& o : c.outputs) outputs += (outputs.empty() ? "" : ",") + o;
  return {
      {"lattice", {{"d", std::to_string(c.dim)}, {"n", std::to_string(c.radius)}}},
      {"time", {{"T", num(c.horizon)}, {"dt", num(c.dt)}}},
      {"kernel",
       {{"family", to_string(c.kappa.family)},
        {"rho", num(c.kappa.rate)},
        {"scale", num(c.kappa.scale)},
        {"R", std::to_string(c.kappa.support)},
        {"R_lambda", std::to_string(c.lambda_support)},
        {"M", std::to_string(c.spectral_grid)}}},
      {"noise",
       {{"family", to_string(c.noise.family)},
        {"rho_a", num(c.noise.rho)},
        {"sigma2", num(c.noise.sigma2)},
        {"time_profile", to_string(c.noise.profile)}}},
      {"fhn",
       {{"a_fr", num(f.a_fr)},
        {"c_fr", num(f.c_fr)},
        {"u_ini", num(f.u_ini)},
        {"f1", to_string(f.f1)},
        {"f2", to_string(f.f2)}}},
      {"learning",
       {{"J_bar0", num(l.j_bar0)},
        {"rho_J", num(l.rho_j)},
        {"R_J", std::to_string(l.support)},
        {"J_corr", num(l.j_corr)},
        {"J_dec", num(l.j_dec)},
        {"J_ini", num(l.j_ini_fraction)},
        {"v_fn", to_string(l.activity)}}},
      {"run",
       {{"seed", std::to_string(c.seed)},
        {"replicas", std::to_string(c.replicas)},
        {"record_every", std::to_string(c.record_every)},
        {"outputs", outputs}}},
  };
}

std::string to_ini(const RunConfig& config) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, entries] : config_sections(config)) {
    if (!first) out << '\n';
    first = false;
    out << '[' << section << "]\n";
    for (const auto& [key, value] : entries) out << key << " = " << value << '\n';
  }
  return out.str();
}

nlohmann::json config_json(const RunConfig& config) {
  // ordered_json would keep schema order; plain json sorts keys, which is also stable
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [section, entries] : config_sections(config)) {
    for (const auto& [key, value] : entries) out[section][key] = value;
  }
  return out;
}

}  // namespace lattice_ldp
