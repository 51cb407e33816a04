#include "mrf/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace mrf {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("", "expected object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key) && !node_.at(key).is_null();
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? as_number(key) : fallback;
  }

  std::optional<double> opt_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return as_number(key);
  }

  double required_number(const std::string& key) {
    if (!has(key)) fail(key, "required field missing");
    return as_number(key);
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_number_unsigned()) fail(key, "expected non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_boolean()) fail(key, "expected boolean");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_string()) fail(key, "expected string");
    return v.get<std::string>();
  }

  std::optional<Vector> vector(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return to_vector(node_.at(key), child_path(key));
  }

  std::vector<Vector> vector_list(const std::string& key) {
    std::vector<Vector> out;
    if (!has(key)) return out;
    const auto& v = node_.at(key);
    if (!v.is_array()) fail(key, "expected array of states");
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(to_vector(v[i], child_path(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  Reader child(const std::string& key) {
    static const json empty = json::object();
    if (!has(key)) return Reader(empty, child_path(key));
    return Reader(node_.at(key), child_path(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const std::string where = key.empty() ? (path_.empty() ? "<root>" : path_) : child_path(key);
    throw ConfigError(where + ": " + what);
  }

  void reject_unknown() const {
    for (const auto& item : node_.items()) {
      if (!seen_.count(item.key())) fail(item.key(), "unknown field");
    }
  }

 private:
  double as_number(const std::string& key) {
    const auto& v = node_.at(key);
    if (!v.is_number()) fail(key, "expected number");
    return v.get<double>();
  }

  Vector to_vector(const json& v, const std::string& path) const {
    if (v.is_number()) return Vector::Constant(1, v.get<double>());
    if (!v.is_array() || v.empty()) throw ConfigError(path + ": expected number or non-empty array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]: expected number");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

GridConfig read_grid(Reader r) {
  GridConfig g;
  g.lo = r.vector("lo");
  g.hi = r.vector("hi");
  g.spacing = r.opt_number("spacing");
  if (g.spacing && *g.spacing <= 0.0) r.fail("spacing", "must be positive");
  r.reject_unknown();
  return g;
}

void positive(Reader& r, const std::string& key, double v) {
  if (!(v > 0.0)) r.fail(key, "must be positive");
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

ojson vec_json(const Vector& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

template <class T>
ojson opt_json(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

ojson opt_vec_json(const std::optional<Vector>& v) { return v ? vec_json(*v) : ojson(nullptr); }

ojson grid_json(const GridConfig& g) {
  return {{"lo", opt_vec_json(g.lo)}, {"hi", opt_vec_json(g.hi)}, {"spacing", opt_json(g.spacing)}};
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw ConfigError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                      ": " + e.what());
  }

  RunConfig cfg;
  Reader top(root, "");
  cfg.seed = top.unsigned_int("seed", 0);

  {
    Reader sys = top.child("system");
    if (!sys.has("name")) sys.fail("name", "required field missing");
    cfg.system = sys.string("name", "");
    if (sys.has("params")) {
      const auto& p = sys.raw("params");
      if (!p.is_object()) sys.fail("params", "expected object");
      for (const auto& item : p.items()) {
        if (!item.value().is_number()) sys.fail("params." + item.key(), "expected number");
        cfg.params[item.key()] = item.value().get<double>();
      }
    }
    sys.reject_unknown();
  }
  {
    Reader m = top.child("mrf");
    cfg.p0_bar = m.required_number("p0_bar");
    if (!(cfg.p0_bar > 0.0)) m.fail("p0_bar", "must be positive");
    m.reject_unknown();
  }
  {
    Reader v = top.child("verify");
    auto& vc = cfg.verify;
    vc.delta = v.opt_number("delta");
    if (vc.delta && !(*vc.delta > 0.0)) v.fail("delta", "must be positive");
    vc.sigma = v.opt_number("sigma");
    vc.bands = v.unsigned_int("bands", vc.bands);
    if (vc.bands == 0) v.fail("bands", "must be at least 1");
    vc.margin = v.number("margin", vc.margin);
    vc.d_tol = v.number("d_tol", vc.d_tol);
    positive(v, "d_tol", vc.d_tol);
    vc.u_tol = v.number("u_tol", vc.u_tol);
    vc.eta = v.number("eta", vc.eta);
    if (!(vc.eta > 0.0 && vc.eta < 1.0)) v.fail("eta", "must lie in ]0, 1[");
    vc.grid = read_grid(v.child("grid"));
    Reader p = v.child("petrov");
    vc.petrov.enabled = p.boolean("enabled", false);
    vc.petrov.delta = p.opt_number("delta");
    p.reject_unknown();
    v.reject_unknown();
  }
  {
    Reader s = top.child("synthesis");
    auto& sc = cfg.synthesis;
    auto& sp = sc.params;
    sp.epsilon = s.number("epsilon", sp.epsilon);
    sp.nu_ratio = s.number("nu_ratio", sp.nu_ratio);
    sp.max_levels = s.unsigned_int("max_levels", sp.max_levels);
    sp.delta_init = s.number("delta_init", sp.delta_init);
    sp.substeps = s.unsigned_int("substeps", sp.substeps);
    sp.d_tol = s.number("d_tol", sp.d_tol);
    sp.level_tol_rel = s.number("level_tol_rel", sp.level_tol_rel);
    sp.sigma = s.number("sigma", sp.sigma);
    sp.step_radius = s.number("step_radius", sp.step_radius);
    sc.initial_states = s.vector_list("initial_states");
    const std::string mode = s.string("envelope_mode", "conservative");
    if (mode == "conservative") {
      sc.envelope_mode = EnvelopeMode::conservative;
    } else if (mode == "interpolating") {
      sc.envelope_mode = EnvelopeMode::interpolating;
    } else {
      s.fail("envelope_mode", "expected \"conservative\" or \"interpolating\"");
    }
    sc.audit_samples = s.unsigned_int("audit_samples", sc.audit_samples);
    sc.kl_tol = s.number("kl_tol", sc.kl_tol);
    sc.kl_t_max = s.number("kl_t_max", sc.kl_t_max);
    positive(s, "kl_t_max", sc.kl_t_max);
    sc.modulus_scale = s.number("modulus_scale", sc.modulus_scale);
    positive(s, "modulus_scale", sc.modulus_scale);
    sp.validate();
    s.reject_unknown();
  }
  {
    Reader o = top.child("oracle");
    auto& oc = cfg.oracle;
    oc.grid = read_grid(o.child("grid"));
    oc.h = o.opt_number("h");
    if (oc.h && !(*oc.h > 0.0)) o.fail("h", "must be positive");
    oc.iter_tol = o.number("iter_tol", oc.iter_tol);
    positive(o, "iter_tol", oc.iter_tol);
    const auto sweeps = o.unsigned_int("max_sweeps", static_cast<std::uint64_t>(oc.max_sweeps));
    if (sweeps == 0 || sweeps > 100000000) o.fail("max_sweeps", "must lie in [1, 1e8]");
    oc.max_sweeps = static_cast<int>(sweeps);
    try {
      oc.mode = sweep_mode_from_string(o.string("mode", "gauss_seidel"));
    } catch (const ConfigError& e) {
      o.fail("mode", e.what());
    }
    oc.tol = o.opt_number("tol");
    o.reject_unknown();
  }
  top.reject_unknown();

  // Validates the example name and its parameters early.
  make_example(cfg.system, cfg.params, cfg.p0_bar);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

nlohmann::ordered_json default_config(const std::string& system) {
  RunConfig cfg;
  cfg.system = system;
  cfg.params = example_default_params(system);
  const auto ex = make_example(system, cfg.params);
  cfg.p0_bar = ex.mrf.p0_bar;
  return config_to_json(cfg);
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
  ojson params = ojson::object();
  for (const auto& [k, v] : c.params) params[k] = v;
  ojson states = ojson::array();
  for (const auto& x : c.synthesis.initial_states) states.push_back(vec_json(x));
  const auto& sp = c.synthesis.params;
  return {
      {"seed", c.seed},
      {"system", {{"name", c.system}, {"params", params}}},
      {"mrf", {{"p0_bar", c.p0_bar}}},
      {"verify",
       {{"delta", opt_json(c.verify.delta)},
        {"sigma", opt_json(c.verify.sigma)},
        {"bands", c.verify.bands},
        {"margin", c.verify.margin},
        {"d_tol", c.verify.d_tol},
        {"u_tol", c.verify.u_tol},
        {"eta", c.verify.eta},
        {"grid", grid_json(c.verify.grid)},
        {"petrov", {{"enabled", c.verify.petrov.enabled}, {"delta", opt_json(c.verify.petrov.delta)}}}}},
      {"synthesis",
       {{"epsilon", sp.epsilon},
        {"nu_ratio", sp.nu_ratio},
        {"max_levels", sp.max_levels},
        {"delta_init", sp.delta_init},
        {"substeps", sp.substeps},
        {"d_tol", sp.d_tol},
        {"level_tol_rel", sp.level_tol_rel},
        {"sigma", sp.sigma},
        {"step_radius", sp.step_radius},
        {"initial_states", states},
        {"envelope_mode", c.synthesis.envelope_mode == EnvelopeMode::conservative ? "conservative"
                                                                                   : "interpolating"},
        {"audit_samples", c.synthesis.audit_samples},
        {"kl_tol", c.synthesis.kl_tol},
        {"kl_t_max", c.synthesis.kl_t_max},
        {"modulus_scale", c.synthesis.modulus_scale}}},
      {"oracle",
       {{"grid", grid_json(c.oracle.grid)},
        {"h", opt_json(c.oracle.h)},
        {"iter_tol", c.oracle.iter_tol},
        {"max_sweeps", c.oracle.max_sweeps},
        {"mode", to_string(c.oracle.mode)},
        {"tol", opt_json(c.oracle.tol)}}},
  };
}

}  // namespace mrf
