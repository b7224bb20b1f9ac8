#include "graphflow/config.hpp"

#include "graphflow/errors.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <string>

namespace graphflow {

namespace {

using nlohmann::json;

[[noreturn]] void reject(const std::string& why) { throw ConfigRejectedError(why); }

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& required,
                  const std::set<std::string>& optional = {}) {
  if (!obj.is_object()) reject(where + " must be an object");
  for (const auto& k : required) {
    if (!obj.contains(k)) reject(where + " is missing required key '" + k + "'");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!required.count(it.key()) && !optional.count(it.key())) {
      reject(where + " has unknown key '" + it.key() + "'");
    }
  }
}

double num(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.at(key).is_number()) reject(where + "." + key + " must be a number");
  return obj.at(key).get<double>();
}

SurfaceModel parse_surface(const json& obj, const std::string& where) {
  if (!obj.is_object() || !obj.contains("kind")) reject(where + " needs a 'kind'");
  std::string kind = obj.at("kind").get<std::string>();
  if (kind == "flat_torus") {
    require_keys(obj, where, {"kind"}, {"lattice"});
    Mat2 lat = Mat2::identity();
    if (obj.contains("lattice")) {
      auto l = obj.at("lattice");
      if (!l.is_array() || l.size() != 2 || !l[0].is_array() || l[0].size() != 2 ||
          l[1].size() != 2) {
        reject(where + ".lattice must be a 2x2 array of generators (columns)");
      }
      // columns are the generators
      lat.m[0][0] = l[0][0].get<double>();
      lat.m[1][0] = l[0][1].get<double>();
      lat.m[0][1] = l[1][0].get<double>();
      lat.m[1][1] = l[1][1].get<double>();
    }
    return SurfaceModel::flat_torus(lat);
  }
  if (kind == "round_sphere") {
    require_keys(obj, where, {"kind", "kappa"});
    return SurfaceModel::round_sphere(num(obj, "kappa", where));
  }
  if (kind == "warped_sphere") {
    require_keys(obj, where, {"kind", "family"}, {"a"});
    std::string fam = obj.at("family").get<std::string>();
    if (fam == "sin") return SurfaceModel::warped_sphere(WarpFamily::Sin);
    if (fam == "bulge") {
      double a = obj.contains("a") ? num(obj, "a", where) : 0.0;
      return SurfaceModel::warped_sphere(WarpFamily::Bulge, a);
    }
    reject(where + ".family must be 'sin' or 'bulge'");
  }
  reject(where + ".kind must be flat_torus, round_sphere or warped_sphere");
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& doc) {
  require_keys(doc, "config",
               {"schema_version", "domain", "target", "grid", "initial_map", "flow"},
               {"output", "classify", "envelope"});
  if (!doc.at("schema_version").is_number_integer() ||
      doc.at("schema_version").get<int>() != 1) {
    reject("unsupported schema_version (expected 1)");
  }

  RunConfig cfg;
  cfg.echo = doc;
  cfg.domain = parse_surface(doc.at("domain"), "domain");
  cfg.target = parse_surface(doc.at("target"), "target");

  const json& grid = doc.at("grid");
  require_keys(grid, "grid", {"n1", "n2"}, {"stencil_order"});
  cfg.n1 = grid.at("n1").get<int>();
  cfg.n2 = grid.at("n2").get<int>();
  if (cfg.n1 < 8 || cfg.n2 < 8) reject("grid resolution must be at least 8 per axis");
  if (grid.contains("stencil_order")) {
    cfg.stencil_order = grid.at("stencil_order").get<int>();
    if (cfg.stencil_order != 2 && cfg.stencil_order != 4) {
      reject("grid.stencil_order must be 2 or 4");
    }
  }

  const json& im = doc.at("initial_map");
  if (!im.is_object() || !im.contains("family")) reject("initial_map needs a 'family'");
  cfg.map_family = im.at("family").get<std::string>();
  if (cfg.map_family == "constant") {
    require_keys(im, "initial_map", {"family", "point"});
    auto p = im.at("point");
    if (!p.is_array() || p.size() != 2) reject("initial_map.point must be [x1, x2]");
    cfg.constant_point = {p[0].get<double>(), p[1].get<double>()};
  } else if (cfg.map_family == "identity") {
    require_keys(im, "initial_map", {"family"});
  } else if (cfg.map_family == "linear" || cfg.map_family == "fourier") {
    require_keys(im, "initial_map", {"family"}, {"matrix", "modes"});
    if (im.contains("matrix")) {
      auto m = im.at("matrix");
      if (!m.is_array() || m.size() != 2 || m[0].size() != 2 || m[1].size() != 2) {
        reject("initial_map.matrix must be 2x2 (rows)");
      }
      cfg.linear.m[0][0] = m[0][0].get<double>();
      cfg.linear.m[0][1] = m[0][1].get<double>();
      cfg.linear.m[1][0] = m[1][0].get<double>();
      cfg.linear.m[1][1] = m[1][1].get<double>();
    }
    if (im.contains("modes")) {
      for (const auto& jm : im.at("modes")) {
        require_keys(jm, "initial_map.modes[]", {"k", "amplitude"}, {"phase", "direction"});
        FourierMode fm;
        fm.k1 = jm.at("k")[0].get<int>();
        fm.k2 = jm.at("k")[1].get<int>();
        fm.amplitude = jm.at("amplitude").get<double>();
        if (jm.contains("phase")) fm.phase = jm.at("phase").get<double>();
        if (jm.contains("direction")) {
          fm.direction = {jm.at("direction")[0].get<double>(),
                          jm.at("direction")[1].get<double>()};
        }
        cfg.modes.push_back(fm);
      }
    }
  } else if (cfg.map_family == "rotsym") {
    require_keys(im, "initial_map", {"family"}, {"d", "a", "c"});
    if (im.contains("d")) cfg.rotsym_d = im.at("d").get<int>();
    if (im.contains("a")) cfg.rotsym_a = num(im, "a", "initial_map");
    if (im.contains("c")) cfg.rotsym_c = num(im, "c", "initial_map");
  } else if (cfg.map_family == "mobius") {
    require_keys(im, "initial_map", {"family", "k"});
    cfg.mobius_k = num(im, "k", "initial_map");
  } else {
    reject("unknown initial_map.family '" + cfg.map_family + "'");
  }

  const json& fl = doc.at("flow");
  require_keys(fl, "flow", {"t_max"},
               {"cfl", "u1_floor", "h_tol", "blowup_guard", "integrator", "record_every"});
  cfg.flow.t_max = num(fl, "t_max", "flow");
  if (fl.contains("cfl")) cfg.flow.cfl = num(fl, "cfl", "flow");
  if (fl.contains("u1_floor")) cfg.flow.u1_floor = num(fl, "u1_floor", "flow");
  if (fl.contains("h_tol")) cfg.flow.h_tol = num(fl, "h_tol", "flow");
  if (fl.contains("blowup_guard")) cfg.flow.blowup_guard = num(fl, "blowup_guard", "flow");
  if (fl.contains("integrator")) {
    std::string s = fl.at("integrator").get<std::string>();
    if (s == "euler") cfg.flow.integrator = Integrator::Euler;
    else if (s == "heun") cfg.flow.integrator = Integrator::Heun;
    else reject("flow.integrator must be 'euler' or 'heun'");
  }
  if (fl.contains("record_every")) {
    cfg.flow.record_every = fl.at("record_every").get<int>();
    if (cfg.flow.record_every < 1) reject("flow.record_every must be >= 1");
  }
  if (!(cfg.flow.cfl > 0.0 && cfg.flow.cfl <= 0.5)) reject("flow.cfl must be in (0, 0.5]");
  if (!(cfg.flow.t_max > 0.0)) reject("flow.t_max must be positive");
  if (!(cfg.flow.u1_floor > 0.0 && cfg.flow.u1_floor <= 0.1)) {
    reject("flow.u1_floor must be in (0, 0.1]");
  }
  if (!(cfg.flow.h_tol > 0.0)) reject("flow.h_tol must be positive");
  if (!(cfg.flow.blowup_guard > 0.0)) reject("flow.blowup_guard must be positive");

  if (doc.contains("output")) {
    const json& out = doc.at("output");
    require_keys(out, "output", {}, {"directory", "record_every"});
    if (out.contains("directory")) cfg.output_dir = out.at("directory").get<std::string>();
    if (out.contains("record_every")) {
      cfg.flow.record_every = out.at("record_every").get<int>();
      if (cfg.flow.record_every < 1) reject("output.record_every must be >= 1");
    }
  }
  if (doc.contains("classify")) {
    const json& cl = doc.at("classify");
    require_keys(cl, "classify", {}, {"tol_diam", "tol_A", "tol_H"});
    if (cl.contains("tol_diam")) cfg.flow.classify.tol_diam = num(cl, "tol_diam", "classify");
    if (cl.contains("tol_A")) {
      cfg.flow.classify.tol_A = num(cl, "tol_A", "classify");
      cfg.flow.auto_tol_A = false;
    }
    if (cl.contains("tol_H")) {
      cfg.flow.classify.tol_H = num(cl, "tol_H", "classify");
      cfg.flow.auto_tol_H = false;
    }
  }
  if (doc.contains("envelope")) {
    const json& env = doc.at("envelope");
    require_keys(env, "envelope", {}, {"eps_residual_coeff", "eps_dt_coeff"});
    if (env.contains("eps_residual_coeff")) {
      cfg.flow.eps_residual_coeff = num(env, "eps_residual_coeff", "envelope");
    }
    if (env.contains("eps_dt_coeff")) {
      cfg.flow.eps_dt_coeff = num(env, "eps_dt_coeff", "envelope");
    }
  }

  // the standing curvature hypothesis
  CurvatureBounds bM = cfg.domain.curvature_bounds();
  CurvatureBounds bN = cfg.target.curvature_bounds();
  if (bM.min < bN.sup - 1e-12) {
    reject("curvature hypothesis violated: min sigma_M = " + std::to_string(bM.min) +
           " < sup sigma_N = " + std::to_string(bN.sup));
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw ConfigRejectedError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(doc);
}

GridSpec make_grid(const RunConfig& cfg) { return grid_for_surface(cfg.domain, cfg.n1, cfg.n2); }

MapState build_initial_state(const RunConfig& cfg) {
  GridSpec grid = make_grid(cfg);
  if (cfg.map_family == "constant") {
    return make_constant_map(cfg.domain, cfg.target, grid, cfg.constant_point);
  }
  if (cfg.map_family == "identity") {
    return make_identity_map(cfg.domain, cfg.target, grid);
  }
  if (cfg.map_family == "linear" || cfg.map_family == "fourier") {
    return make_torus_map(cfg.domain, cfg.target, grid, cfg.linear, cfg.modes);
  }
  if (cfg.map_family == "rotsym") {
    return make_rotsym_map(cfg.domain, cfg.target, grid, cfg.rotsym_d, cfg.rotsym_a,
                           cfg.rotsym_c);
  }
  if (cfg.map_family == "mobius") {
    return make_mobius_map(cfg.domain, cfg.target, grid, cfg.mobius_k);
  }
  throw ConfigRejectedError("unknown initial_map.family '" + cfg.map_family + "'");
}

RunConfig with_grid_scale(const RunConfig& cfg, double factor) {
  RunConfig out = cfg;
  out.n1 = std::max(8, static_cast<int>(std::lround(cfg.n1 * factor)));
  out.n2 = std::max(8, static_cast<int>(std::lround(cfg.n2 * factor)));
  if (out.domain.is_spherical() && out.n2 % 2 != 0) ++out.n2;
  out.echo["grid"]["n1"] = out.n1;
  out.echo["grid"]["n2"] = out.n2;
  return out;
}

}  // namespace graphflow
