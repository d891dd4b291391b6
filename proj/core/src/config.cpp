#include "npr/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace npr {

double TomlValue::as_number() const {
  switch (kind) {
    case Kind::boolean: return b ? 1.0 : 0.0;
    case Kind::integer: return static_cast<double>(i);
    case Kind::floating: return f;
    case Kind::string: raise(Errc::bad_config, "expected a number, got a string");
  }
  return 0.0;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

TomlValue parse_value(const std::string& raw, int line_no) {
  TomlValue v;
  if (raw == "true" || raw == "false") {
    v.kind = TomlValue::Kind::boolean;
    v.b = raw == "true";
    return v;
  }
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
    v.kind = TomlValue::Kind::string;
    v.s = raw.substr(1, raw.size() - 2);
    return v;
  }
  try {
    size_t used = 0;
    if (raw.find_first_of(".eE") == std::string::npos) {
      v.kind = TomlValue::Kind::integer;
      v.i = std::stoll(raw, &used);
    } else {
      v.kind = TomlValue::Kind::floating;
      v.f = std::stod(raw, &used);
    }
    if (used != raw.size()) throw std::invalid_argument(raw);
  } catch (const std::exception&) {
    raise(Errc::bad_config, "cannot parse value on line " + std::to_string(line_no));
  }
  return v;
}

}  // namespace

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') raise(Errc::bad_config, "bad section on line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      table[section];
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      raise(Errc::bad_config, "expected key = value on line " + std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string raw = trim(line.substr(eq + 1));
    if (key.empty() || raw.empty()) {
      raise(Errc::bad_config, "empty key or value on line " + std::to_string(line_no));
    }
    table[section][key] = parse_value(raw, line_no);
  }
  return table;
}

std::string write_toml(const TomlTable& table) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [section, entries] : table) {
    if (!first) os << "\n";
    first = false;
    os << "[" << section << "]\n";
    for (const auto& [key, v] : entries) {
      os << key << " = ";
      switch (v.kind) {
        case TomlValue::Kind::boolean: os << (v.b ? "true" : "false"); break;
        case TomlValue::Kind::integer: os << v.i; break;
        case TomlValue::Kind::floating: {
          std::ostringstream num;
          num.precision(17);
          num << v.f;
          std::string s = num.str();
          if (s.find_first_of(".eE") == std::string::npos) s += ".0";
          os << s;
          break;
        }
        case TomlValue::Kind::string: os << '"' << v.s << '"'; break;
      }
      os << "\n";
    }
  }
  return os.str();
}

namespace {

void get_int(const TomlTable& t, const std::string& sec, const std::string& key, int& out) {
  auto s = t.find(sec);
  if (s == t.end()) return;
  auto k = s->second.find(key);
  if (k != s->second.end()) out = static_cast<int>(k->second.as_number());
}

void get_double(const TomlTable& t, const std::string& sec, const std::string& key, double& out) {
  auto s = t.find(sec);
  if (s == t.end()) return;
  auto k = s->second.find(key);
  if (k != s->second.end()) out = k->second.as_number();
}

void get_bool(const TomlTable& t, const std::string& sec, const std::string& key, bool& out) {
  auto s = t.find(sec);
  if (s == t.end()) return;
  auto k = s->second.find(key);
  if (k != s->second.end()) out = k->second.as_number() != 0.0;
}

TomlValue make_int(std::int64_t i) {
  TomlValue v;
  v.kind = TomlValue::Kind::integer;
  v.i = i;
  return v;
}

TomlValue make_double(double f) {
  TomlValue v;
  v.kind = TomlValue::Kind::floating;
  v.f = f;
  return v;
}

TomlValue make_bool(bool b) {
  TomlValue v;
  v.kind = TomlValue::Kind::boolean;
  v.b = b;
  return v;
}

}  // namespace

void EngineConfig::apply(const TomlTable& t) {
  get_int(t, "camera", "width", width);
  get_int(t, "camera", "height", height);
  get_double(t, "camera", "hfov_deg", hfov_deg);

  get_int(t, "features", "grid_h", grid_h);
  get_int(t, "features", "grid_w", grid_w);
  get_int(t, "features", "dim", feature_dim);
  get_int(t, "features", "descriptor_dim", descriptor_dim);

  get_int(t, "sampling", "k", sampling.k);
  get_double(t, "sampling", "radius", sampling.radius);
  get_double(t, "sampling", "radius_hat", sampling.radius_hat);
  get_double(t, "sampling", "epsilon", sampling.epsilon);
  get_double(t, "sampling", "ray_near", sampling.ray_near);
  get_double(t, "sampling", "ray_far", sampling.ray_far);
  get_int(t, "sampling", "samples_per_ray", sampling.samples_per_ray);
  get_double(t, "sampling", "tau", sampling.tau);
  get_int(t, "sampling", "leaf_size", sampling.leaf_size);

  get_int(t, "fusion", "embed_dim", embed_dim);
  get_int(t, "fusion", "heads", attn_heads);
  get_int(t, "fusion", "patch", patch);

  get_int(t, "raster", "tile", raster.tile);
  get_double(t, "raster", "dilation", raster.dilation);
  get_bool(t, "raster", "alpha_cull", raster.alpha_cull);
  get_bool(t, "raster", "early_stop", raster.early_stop);

  get_int(t, "bench", "warmup", bench_warmup);
  get_int(t, "bench", "runs", bench_runs);

  get_int(t, "run", "threads", threads);
  double seed_d = static_cast<double>(seed);
  get_double(t, "run", "seed", seed_d);
  seed = static_cast<std::uint64_t>(seed_d);

  sampling.validate();
}

TomlTable EngineConfig::to_table() const {
  TomlTable t;
  t["camera"]["width"] = make_int(width);
  t["camera"]["height"] = make_int(height);
  t["camera"]["hfov_deg"] = make_double(hfov_deg);

  t["features"]["grid_h"] = make_int(grid_h);
  t["features"]["grid_w"] = make_int(grid_w);
  t["features"]["dim"] = make_int(feature_dim);
  t["features"]["descriptor_dim"] = make_int(descriptor_dim);

  t["sampling"]["k"] = make_int(sampling.k);
  t["sampling"]["radius"] = make_double(sampling.radius);
  t["sampling"]["radius_hat"] = make_double(sampling.radius_hat);
  t["sampling"]["epsilon"] = make_double(sampling.epsilon);
  t["sampling"]["ray_near"] = make_double(sampling.ray_near);
  t["sampling"]["ray_far"] = make_double(sampling.ray_far);
  t["sampling"]["samples_per_ray"] = make_int(sampling.samples_per_ray);
  t["sampling"]["tau"] = make_double(sampling.tau);
  t["sampling"]["leaf_size"] = make_int(sampling.leaf_size);

  t["fusion"]["embed_dim"] = make_int(embed_dim);
  t["fusion"]["heads"] = make_int(attn_heads);
  t["fusion"]["patch"] = make_int(patch);

  t["raster"]["tile"] = make_int(raster.tile);
  t["raster"]["dilation"] = make_double(raster.dilation);
  t["raster"]["alpha_cull"] = make_bool(raster.alpha_cull);
  t["raster"]["early_stop"] = make_bool(raster.early_stop);

  t["bench"]["warmup"] = make_int(bench_warmup);
  t["bench"]["runs"] = make_int(bench_runs);

  t["run"]["threads"] = make_int(threads);
  t["run"]["seed"] = make_int(static_cast<std::int64_t>(seed));
  return t;
}

EngineConfig EngineConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) raise(Errc::io_error, "cannot open " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  EngineConfig cfg;
  cfg.apply(parse_toml(buf.str()));
  return cfg;
}

void EngineConfig::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) raise(Errc::io_error, "cannot open " + path + " for writing");
  os << to_toml();
  if (!os) raise(Errc::io_error, "write failed: " + path);
}

}  // namespace npr
