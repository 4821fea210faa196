// Command-line front end: bounds, sharp, interp, reproduce.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "poincare/poincare.hpp"

using json = nlohmann::ordered_json;
using namespace poincare;

namespace {

struct Common {
  std::string format = "text";
  std::uint64_t seed = 20240611;
};

std::string num(double v) {
  if (v == 0.0) v = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<int> parse_index_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse, "bad index '" + tok + "' in " + what);
    }
  }
  return out;
}

/// "--gamma" accepts an index list, "all" (every face) or nothing (file default).
std::vector<int> resolve_gamma(const std::string& arg, const CellDocument& doc) {
  if (arg.empty()) return doc.gamma;
  if (arg == "all") {
    std::vector<int> g;
    for (int f = 0; f < doc.cell.face_count(); ++f) g.push_back(f);
    return g;
  }
  return parse_index_list(arg, "--gamma");
}

CpChoice cp_choice(const std::string& mode, double value) {
  if (mode == "convex") return {CpMode::Convex, 0.0};
  if (mode == "classical") return {CpMode::Classical, 0.0};
  if (mode == "user") {
    if (!(value > 0.0)) throw Error(ErrorKind::Precondition, "--cp-mode user needs --cp > 0");
    return {CpMode::User, value};
  }
  throw Error(ErrorKind::Precondition, "unknown --cp-mode '" + mode + "'");
}

json bound_json(const ConstantBound& b) {
  json pre = json::object();
  for (const auto& [name, ok] : b.preconditions) pre[name] = ok;
  return {{"kind", to_string(b.kind)}, {"value", b.value}, {"formula", b.formula}, {"preconditions", pre}};
}

json cell_json(const Cell& cell) {
  json faces = json::array();
  for (int f = 0; f < cell.face_count(); ++f) {
    const Vec3 n = mean_normal(cell, f);
    json normal = json::array();
    for (int i = 0; i < cell.dim(); ++i) normal.push_back(n[i]);
    faces.push_back({{"index", f},
                     {"measure", measure(cell, f)},
                     {"curvilinear", cell.face(f).kind == FaceKind::Curvilinear},
                     {"mean_normal", normal}});
  }
  return {{"kind", to_string(cell.kind())},
          {"dim", cell.dim()},
          {"diameter", cell.diameter()},
          {"measure", cell.measure()},
          {"convex", is_convex(cell)},
          {"faces", faces}};
}

void add_failure(json& report, const std::string& kind, const std::string& message) {
  report["failures"].push_back({{"kind", kind}, {"message", message}});
}

// ---- text and csv renderers (from the machine report) ---------------------------

std::string bound_line(const json& b) {
  std::string s = "  " + b["kind"].get<std::string>() + "  " + num(b["value"].get<double>()) + "  " +
                  b["formula"].get<std::string>();
  if (!b["preconditions"].empty()) {
    s += "  [";
    bool first = true;
    for (auto it = b["preconditions"].begin(); it != b["preconditions"].end(); ++it) {
      s += (first ? "" : ", ") + it.key() + ": " + (it.value().get<bool>() ? "yes" : "no");
      first = false;
    }
    s += "]";
  }
  return s + "\n";
}

std::string render_cell(const json& c) {
  std::ostringstream os;
  os << "cell: " << c["kind"].get<std::string>() << ", dim " << c["dim"] << ", diameter "
     << num(c["diameter"].get<double>()) << ", measure " << num(c["measure"].get<double>())
     << (c["convex"].get<bool>() ? ", convex" : ", nonconvex") << "\n";
  for (const auto& f : c["faces"]) {
    os << "  face " << f["index"] << ": measure " << num(f["measure"].get<double>()) << ", mean normal (";
    bool first = true;
    for (const auto& x : f["mean_normal"]) {
      os << (first ? "" : ", ") << num(x.get<double>());
      first = false;
    }
    os << ")" << (f["curvilinear"].get<bool>() ? ", curvilinear" : "") << "\n";
  }
  return os.str();
}

std::string render_failures(const json& r) {
  std::ostringstream os;
  for (const auto& f : r["failures"]) {
    os << "failure (" << f["kind"].get<std::string>() << "): " << f["message"].get<std::string>() << "\n";
  }
  return os.str();
}

std::string render_bounds_text(const json& r) {
  std::ostringstream os;
  os << render_cell(r["cell"]);
  os << "gamma:";
  if (r["gamma"].empty()) os << " none";
  for (const auto& g : r["gamma"]) os << " " << g;
  os << "\nC_P bounds\n";
  for (const auto& b : r["cp"]) os << bound_line(b);
  if (!r["c_gamma"].empty()) os << "C_Gamma bounds\n";
  for (const auto& b : r["c_gamma"]) os << bound_line(b);
  if (r.contains("macrocell")) {
    const auto& m = r["macrocell"];
    os << "macrocell (" << m["mode"].get<std::string>() << ")\n";
    for (const auto& row : m.contains("children") ? m["children"] : m["groups"]) {
      if (row.contains("child")) {
        os << "  child " << row["child"] << " face " << row["face"];
      } else {
        os << "  children";
        for (const auto& ch : row["children"]) os << " " << ch;
        os << ", faces";
        for (const auto& f : row["faces"]) os << " " << f[0] << ":" << f[1];
      }
      os << "  " << num(row["value"].get<double>()) << "  " << row["formula"].get<std::string>() << "\n";
    }
    os << "  upper  " << num(m["value"].get<double>()) << "  " << m["formula"].get<std::string>() << "\n";
  }
  if (r.contains("vector")) {
    const auto& v = r["vector"];
    os << "vector constant\n  upper  " << num(v["value"].get<double>()) << "  " << v["formula"].get<std::string>()
       << "  lambda_min " << num(v["lambda_min"].get<double>()) << "\n";
    for (const auto& b : v["scalar_constants"]) os << "  per face:" << bound_line(b).substr(1);
  }
  return os.str();
}

std::string render_bounds_csv(const json& r) {
  std::ostringstream os;
  os.precision(17);
  os << "quantity,kind,value,formula\n";
  for (const auto& b : r["cp"]) {
    os << "C_P," << b["kind"].get<std::string>() << "," << b["value"].get<double>() << "," << b["formula"].get<std::string>()
       << "\n";
  }
  for (const auto& b : r["c_gamma"]) {
    os << "C_Gamma," << b["kind"].get<std::string>() << "," << b["value"].get<double>() << ","
       << b["formula"].get<std::string>() << "\n";
  }
  if (r.contains("vector")) {
    os << "vector,upper," << r["vector"]["value"].get<double>() << "," << r["vector"]["formula"].get<std::string>() << "\n";
    os << "lambda_min,value," << r["vector"]["lambda_min"].get<double>() << ",\n";
  }
  if (r.contains("macrocell")) {
    os << "macrocell,upper," << r["macrocell"]["value"].get<double>() << "," << r["macrocell"]["formula"].get<std::string>()
       << "\n";
  }
  return os.str();
}

std::string render_sharp_text(const json& r) {
  std::ostringstream os;
  os << render_cell(r["cell"]);
  os << "mode " << r["mode"].get<std::string>() << ", gamma:";
  for (const auto& g : r["gamma"]) os << " " << g;
  os << "\nlevel  unknowns  eigenvalue  constant  delta  residual  iterations\n";
  for (const auto& row : r["levels"]) {
    os << row["level"] << "  " << row["unknowns"] << "  " << num(row["eigenvalue"].get<double>()) << "  "
       << num(row["constant"].get<double>()) << "  " << num(row["delta"].get<double>()) << "  "
       << num(row["residual"].get<double>()) << "  " << row["iterations"] << "\n";
  }
  os << "constant " << num(r["constant"].get<double>()) << " (eigenvalue " << num(r["eigenvalue"].get<double>())
     << ", level " << r["level"] << ")\n";
  if (!r["extrapolated"].is_null()) os << "extrapolated " << num(r["extrapolated"].get<double>()) << "\n";
  os << "constraint residual " << num(r["constraint_residual"].get<double>()) << "\n";
  const auto& rs = r["rayleigh_sample"];
  os << "rayleigh samples (" << rs["samples"] << " random, " << rs["samples"]
     << " perturbed eigenvectors): worst ratios " << num(rs["random_worst"].get<double>()) << ", "
     << num(rs["perturbed_worst"].get<double>()) << "\n";
  return os.str();
}

std::string render_sharp_csv(const json& r) {
  std::ostringstream os;
  os.precision(17);
  os << "level,unknowns,eigenvalue,constant,delta\n";
  for (const auto& row : r["levels"]) {
    os << row["level"] << "," << row["unknowns"] << "," << row["eigenvalue"].get<double>() << ","
       << row["constant"].get<double>() << "," << row["delta"].get<double>() << "\n";
  }
  return os.str();
}

std::string render_interp_text(const json& r) {
  std::ostringstream os;
  os << "mesh: " << r["cells"] << " cells, dim " << r["dim"] << "\n";
  os << "field " << r["field"].get<std::string>() << ", mode " << r["mode"].get<std::string>() << ", plan "
     << r["plan"].get<std::string>() << "\n";
  os << "cell  value\n";
  for (std::size_t i = 0; i < r["values"].size(); ++i) {
    os << i << " ";
    for (const auto& x : r["values"][i]) os << " " << num(x.get<double>());
    os << "\n";
  }
  os << "bound " << num(r["bound"].get<double>()) << " (" << r["bound_formula"].get<std::string>() << ")\n";
  os << "error " << num(r["error"].get<double>()) << ", gradient norm " << num(r["gradient_norm"].get<double>())
     << ", bound*gradient " << num(r["bound_times_gradient"].get<double>()) << ", holds "
     << (r["inequality_holds"].get<bool>() ? "yes" : "no") << "\n";
  os << "max preservation residual " << num(r["max_residual"].get<double>()) << "\n";
  if (r.contains("output")) os << "wrote " << r["output"].get<std::string>() << "\n";
  return os.str();
}

std::string render_interp_csv(const json& r) {
  std::ostringstream os;
  os.precision(17);
  os << "cell";
  for (std::size_t c = 0; c < r["values"][0].size(); ++c) os << ",value" << c;
  os << "\n";
  for (std::size_t i = 0; i < r["values"].size(); ++i) {
    os << i;
    for (const auto& x : r["values"][i]) os << "," << x.get<double>();
    os << "\n";
  }
  os << "# bound," << r["bound"].get<double>() << "\n# error," << r["error"].get<double>() << "\n# gradient_norm,"
     << r["gradient_norm"].get<double>() << "\n# max_residual," << r["max_residual"].get<double>() << "\n";
  return os.str();
}

json check_json(const Check& c) {
  return {{"name", c.name},         {"measured", c.measured}, {"expected", c.expected}, {"tolerance", c.tolerance},
          {"relation", to_string(c.relation)}, {"pass", c.pass},         {"note", c.note}};
}

json comparison_json(const ComparisonReport& rep) {
  json rows = json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"label", r.label},
                    {"operator", r.operator_name},
                    {"gamma", r.gamma},
                    {"stated", r.stated_text},
                    {"stated_value", r.stated_value},
                    {"stated_is_upper", r.stated_is_upper},
                    {"table_value", r.table1_value ? json(*r.table1_value) : json(nullptr)},
                    {"oracle", r.oracle},
                    {"oracle_extrapolated", r.oracle_extrapolated ? json(*r.oracle_extrapolated) : json(nullptr)},
                    {"verified", r.verified},
                    {"discrepancy", r.discrepancy},
                    {"note", r.note}});
  }
  return {{"cell", rep.cell == ComparisonCell::Triangle ? "triangle" : "square"},
          {"rows", rows},
          {"parameter_counts", rep.parameter_counts},
          {"seconds", rep.seconds}};
}

int emit(const json& report, const std::string& format, const std::string& text, const std::string& csv) {
  if (format == "machine") {
    std::cout << report.dump(2) << "\n";
  } else if (format == "csv") {
    std::cout << csv;
    std::cerr << render_failures(report);
  } else {
    std::cout << text;
    std::cerr << render_failures(report);
  }
  return report["failures"].empty() ? 0 : 1;
}

json new_report(const std::string& command) {
  json r;
  r["command"] = command;
  r["failures"] = json::array();
  return r;
}

// ---- commands -----------------------------------------------------------------

struct BoundsArgs {
  std::string file, gamma, mode = "scalar", cp_mode = "convex";
  double cp = 0.0;
};

/// Piecewise constants on a macrocell: one face per child (scalar) or the
/// greedy pairing plan (vector), with the resulting macrocell constant.
json macrocell_json(const Cell& macro, const std::string& mode, const CpChoice& choice) {
  json out;
  json rows = json::array();
  if (mode == "vector") {
    std::vector<PairConstant> pcs;
    for (const auto& g : greedy_pair_plan(macro)) {
      pcs.push_back(pair_vector_constant(macro, g, choice));
      rows.push_back({{"children", g.children},
                      {"faces", {{g.faces[0].first, g.faces[0].second}, {g.faces[1].first, g.faces[1].second}}},
                      {"value", pcs.back().constant.value},
                      {"formula", pcs.back().constant.formula}});
    }
    const VectorConstant vc = macrocell_vector_constant(pcs, static_cast<int>(macro.children().size()));
    out = {{"mode", "vector"}, {"groups", rows}, {"value", vc.value}, {"formula", vc.formula}};
  } else {
    const std::vector<int> faces = default_child_faces(macro);
    std::vector<ConstantBound> bs;
    for (std::size_t i = 0; i < faces.size(); ++i) {
      bs.push_back(best_c_gamma_upper(macro.children()[i], {faces[i]}, choice));
      rows.push_back({{"child", i}, {"face", faces[i]}, {"value", bs.back().value}, {"formula", bs.back().formula}});
    }
    const ConstantBound b = macrocell_scalar_constant(bs);
    out = {{"mode", "scalar"}, {"children", rows}, {"value", b.value}, {"formula", b.formula}};
  }
  return out;
}

int cmd_bounds(const BoundsArgs& a, const Common& c) {
  json r = new_report("bounds");
  const CellDocument doc = parse_cell(read_file(a.file));
  const Cell& cell = doc.cell;
  const std::vector<int> gamma = resolve_gamma(a.gamma, doc);
  const CpChoice choice = cp_choice(a.cp_mode, a.cp);
  r["cell"] = cell_json(cell);
  r["gamma"] = gamma;
  r["cp"] = json::array();
  auto attempt = [&](auto&& fn) {
    try {
      r["cp"].push_back(bound_json(fn()));
    } catch (const Error&) {
    }
  };
  attempt([&] { return cp_upper_classical(cell); });
  attempt([&] { return cp_upper_convex(cell); });
  if (is_isosceles(cell)) attempt([&] { return cp_upper_isosceles(cell); });
  if (cell.dim() == 2) attempt([&] { return cp_lower_cheng(cell); });
  if (choice.mode == CpMode::User) attempt([&] { return cp_upper(cell, choice); });
  r["c_gamma"] = json::array();
  const bool macro = cell.kind() == CellKind::Macrocell;
  if (macro) r["macrocell"] = macrocell_json(cell, a.mode, choice);
  if (gamma.empty() && !macro) {
    throw Error(ErrorKind::InvalidFaceSelection, "no gamma given (use --gamma or a GAMMA section)");
  }
  if (gamma.empty()) {
    if (a.mode != "scalar" && a.mode != "vector") throw Error(ErrorKind::Precondition, "bounds --mode must be scalar or vector");
  } else if (a.mode == "scalar") {
    bool upper = false;
    for (const auto& b : applicable_c_gamma_bounds(cell, gamma, choice)) {
      upper = upper || b.kind != BoundKind::Lower;
      r["c_gamma"].push_back(bound_json(b));
    }
    if (!upper) {
      add_failure(r, "precondition",
                  "no closed-form bound applies to this cell/gamma; the generic majorant requires a flux field");
    }
  } else if (a.mode == "vector") {
    const VectorConstant vc = vector_constant_for_cell(cell, gamma, choice, false);
    json used = json::array();
    for (const auto& b : vc.scalar_constants_used) used.push_back(bound_json(b));
    r["vector"] = {{"value", vc.value}, {"lambda_min", vc.lambda_min}, {"formula", vc.formula}, {"scalar_constants", used}};
    if (cell.dim() == 2) {
      const VectorConstant g = vector_constant_general(vc.scalar_constants_used, normal_system(cell, gamma));
      r["vector_general"] = {{"value", g.value}, {"lambda_min", g.lambda_min}, {"formula", g.formula}};
    }
  } else {
    throw Error(ErrorKind::Precondition, "bounds --mode must be scalar or vector");
  }
  std::string text = render_bounds_text(r);
  if (r.contains("vector_general")) {
    text += "  general form  " + num(r["vector_general"]["value"].get<double>()) + "  " +
            r["vector_general"]["formula"].get<std::string>() + "\n";
  }
  return emit(r, c.format, text, render_bounds_csv(r));
}

struct SharpArgs {
  std::string file, gamma, mode = "scalar";
  int level = 4, min_level = -1, samples = 20;
  double tolerance = 1e-10;
};

int cmd_sharp(const SharpArgs& a, const Common& c) {
  json r = new_report("sharp");
  const CellDocument doc = parse_cell(read_file(a.file));
  const Cell& cell = doc.cell;
  std::vector<int> gamma = resolve_gamma(a.gamma, doc);
  OracleOptions opt;
  opt.level = a.level;
  opt.min_level = a.min_level;
  opt.solver.tolerance = a.tolerance;
  opt.solver.seed = c.seed;
  OracleResult res;
  if (a.mode == "cp") {
    gamma.clear();
    res = sharp_cp(cell, opt);
  } else {
    if (gamma.empty()) throw Error(ErrorKind::InvalidFaceSelection, "no gamma given (use --gamma or a GAMMA section)");
    if (a.mode == "scalar") res = sharp_c_gamma(cell, gamma, opt);
    else if (a.mode == "trace") res = sharp_trace_constant(cell, gamma, opt);
    else if (a.mode == "vector") res = sharp_vector_constant(cell, gamma, opt);
    else throw Error(ErrorKind::Precondition, "sharp --mode must be cp, scalar, trace or vector");
  }
  r["cell"] = cell_json(cell);
  r["mode"] = a.mode;
  r["gamma"] = gamma;
  json levels = json::array();
  for (const auto& row : res.table) {
    levels.push_back({{"level", row.level},
                      {"unknowns", row.unknowns},
                      {"eigenvalue", row.eigenvalue},
                      {"constant", row.constant},
                      {"delta", row.delta},
                      {"residual", row.residual},
                      {"iterations", row.iterations}});
  }
  r["levels"] = levels;
  r["constant"] = res.constant;
  r["eigenvalue"] = res.eigenvalue;
  r["level"] = res.level;
  r["extrapolated"] = res.extrapolated ? json(*res.extrapolated) : json(nullptr);
  r["residual"] = res.residual;
  r["constraint_residual"] = res.constraint_residual;
  const double random_worst = rayleigh_sample(res.problem, a.samples, c.seed);
  const double near_worst = rayleigh_sample(res.problem, a.samples, c.seed + 1, &res.eigenvector, 1e-3);
  const double worst = std::max(random_worst, near_worst);
  r["rayleigh_sample"] = {{"samples", a.samples}, {"worst_ratio", worst}, {"random_worst", random_worst},
                          {"perturbed_worst", near_worst}};
  if (worst > res.constant * (1.0 + 1e-10)) {
    add_failure(r, "solver", "a random sample exceeds the computed constant: " + num(worst));
  }
  return emit(r, c.format, render_sharp_text(r), render_sharp_csv(r));
}

struct InterpArgs {
  std::string file, field, mode = "scalar", plan = "default", output, cp_mode = "convex";
  double cp = 0.0;
  double tolerance = 1e-9;
};

int cmd_interp(const InterpArgs& a, const Common& c) {
  json r = new_report("interp");
  const MeshDocument doc = parse_mesh(read_file(a.file));
  const Mesh& mesh = doc.mesh;
  const int n = static_cast<int>(mesh.size());
  InterpOptions opt;
  opt.cp = cp_choice(a.cp_mode, a.cp);
  std::optional<NodalField> nodal;
  if (a.field == "nodal") {
    if (!doc.values) throw Error(ErrorKind::UnknownField, "field 'nodal' needs a VALUES vertex section in the mesh file");
    nodal.emplace(mesh, *doc.values);
  }
  PiecewiseConstant pc;
  double err = 0.0, grad = 0.0;
  const auto cells = cell_pointers(mesh);
  if (a.mode == "scalar") {
    ScalarFn w;
    VectorFn gw;
    if (nodal) {
      if (nodal->components() != 1) throw Error(ErrorKind::UnknownField, "scalar mode needs one value per vertex");
      w = [&](const Vec3& x) { return nodal->value(x)[0]; };
      gw = [&](const Vec3& x) { return Vec3(nodal->jacobian(x).row(0).transpose()); };
    } else {
      const ScalarField f = parse_scalar_field(a.field);
      w = f.value;
      gw = f.gradient;
    }
    MeshScalarPlan plan;
    if (a.plan == "all") plan.all_faces = true;
    else if (a.plan != "default") plan.faces = parse_index_list(a.plan, "--plan");
    pc = interp_mesh_scalar(w, mesh, plan, opt);
    err = interpolation_error(cells, pc, w);
    for (const auto& cell : mesh.cells()) grad += std::pow(gradient_norm(cell, gw), 2);
  } else if (a.mode == "vector") {
    VectorFn v;
    MatrixFn jv;
    if (nodal) {
      if (nodal->components() != mesh.dim()) throw Error(ErrorKind::UnknownField, "vector mode needs d values per vertex");
      v = [&](const Vec3& x) { return nodal->value(x); };
      jv = [&](const Vec3& x) { return nodal->jacobian(x); };
    } else {
      const VectorField f = parse_vector_field(a.field);
      if (f.components != mesh.dim()) throw Error(ErrorKind::UnknownField, "vector field must have d components");
      v = f.value;
      jv = f.jacobian;
    }
    std::vector<std::vector<int>> faces;
    if (a.plan != "default") {
      std::stringstream ss(a.plan);
      std::string group;
      while (std::getline(ss, group, ';')) faces.push_back(parse_index_list(group, "--plan"));
      if (static_cast<int>(faces.size()) != n) {
        throw Error(ErrorKind::InvalidPlan, "vector plan lists " + std::to_string(faces.size()) + " cells, mesh has " +
                                                std::to_string(n));
      }
    }
    pc = interp_mesh_vector(v, mesh, faces, opt);
    err = interpolation_error_vector(cells, pc, v);
    for (const auto& cell : mesh.cells()) grad += std::pow(jacobian_norm(cell, jv), 2);
  } else {
    throw Error(ErrorKind::Precondition, "interp --mode must be scalar or vector");
  }
  grad = std::sqrt(grad);
  // Per-cell values (regions are single cells for mesh operators).
  std::vector<std::vector<double>> rows(n);
  for (std::size_t k = 0; k < pc.values.size(); ++k) {
    for (int cell : pc.regions[k]) rows[cell] = std::vector<double>(pc.values[k].data(), pc.values[k].data() + pc.values[k].size());
  }
  r["dim"] = mesh.dim();
  r["cells"] = n;
  r["field"] = a.field;
  r["mode"] = a.mode;
  r["plan"] = a.plan;
  r["values"] = rows;
  r["bound"] = pc.bound;
  r["bound_formula"] = pc.bound_formula;
  r["error"] = err;
  r["gradient_norm"] = grad;
  r["bound_times_gradient"] = pc.bound * grad;
  r["inequality_holds"] = err <= pc.bound * grad + a.tolerance;
  r["residuals"] = pc.residuals;
  r["max_residual"] = pc.max_residual();
  if (!r["inequality_holds"].get<bool>()) {
    add_failure(r, "precondition", "interpolation error exceeds bound*gradient norm");
  }
  if (!a.output.empty()) {
    MeshValues mv;
    mv.per_cell = true;
    mv.components = pc.components;
    mv.rows = rows;
    std::ofstream out(a.output);
    if (!out) throw Error(ErrorKind::Parse, "cannot write '" + a.output + "'");
    out << serialize_mesh(mesh, mv);
    r["output"] = a.output;
  }
  return emit(r, c.format, render_interp_text(r), render_interp_csv(r));
}

struct ReproduceArgs {
  std::string criteria;
};

int cmd_reproduce(const ReproduceArgs& a, const Common& c) {
  json r = new_report("reproduce");
  ReproduceOptions opt;
  opt.seed = c.seed;
  std::vector<int> ids = a.criteria.empty() ? std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8}
                                            : parse_index_list(a.criteria, "--criteria");
  json crit = json::array();
  std::string text, csv = "criterion,check,measured,expected,tolerance,relation,pass\n";
  for (int id : ids) {
    CriterionResult res;
    ComparisonReport tri, sq;
    if (id == 8) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        res = criterion_comparison(opt, &tri, &sq);
      } catch (const Error& e) {
        res.id = 8;
        res.error = e.what();
      }
      res.seconds = detail::seconds_since(t0);
      if (res.error.empty()) r["comparison"] = {comparison_json(tri), comparison_json(sq)};
    } else {
      res = run_criterion(id, opt);
    }
    json checks = json::array();
    for (const auto& ch : res.checks) {
      checks.push_back(check_json(ch));
      char buf[512];
      std::snprintf(buf, sizeof buf, "%d,\"%s\",%.17g,%.17g,%.17g,%s,%d\n", res.id, ch.name.c_str(), ch.measured,
                    ch.expected, ch.tolerance, to_string(ch.relation).c_str(), ch.pass ? 1 : 0);
      csv += buf;
    }
    crit.push_back({{"id", res.id},
                    {"title", res.title},
                    {"pass", res.pass()},
                    {"seconds", res.seconds},
                    {"error", res.error},
                    {"checks", checks}});
    text += criterion_text(res);
    if (id == 8 && res.error.empty()) text += comparison_text(tri) + comparison_text(sq);
    if (!res.pass()) {
      std::string msg = "criterion " + std::to_string(res.id) + " failed";
      for (const auto& ch : res.checks) {
        if (!ch.pass) msg += "; " + ch.name + ": measured " + num(ch.measured) + " expected " + num(ch.expected);
      }
      if (!res.error.empty()) msg += "; " + res.error;
      add_failure(r, "criterion", msg);
    }
  }
  r["criteria"] = crit;
  return emit(r, c.format, text, csv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explicit bounds, sharp constants and interpolation for Poincare-type constants of mesh cells"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--format", common.format, "Output format")
        ->check(CLI::IsMember({"text", "csv", "machine"}))
        ->capture_default_str();
    sub->add_option("--seed", common.seed, "Seed for random start vectors and samples")->capture_default_str();
  };

  BoundsArgs ba;
  auto* bounds = app.add_subcommand("bounds", "Every applicable upper/lower/exact bound for a cell file");
  bounds->add_option("cell", ba.file, "Cell file")->required();
  bounds->add_option("--gamma", ba.gamma, "Face indices (comma separated) or 'all'; default: the file's GAMMA");
  bounds->add_option("--mode", ba.mode, "scalar or vector")->capture_default_str();
  bounds->add_option("--cp-mode", ba.cp_mode, "C_P bound used inside composite formulas: convex, classical, user")
      ->capture_default_str();
  bounds->add_option("--cp", ba.cp, "User-supplied C_P (with --cp-mode user)");
  add_common(bounds);

  SharpArgs sa;
  auto* sharp = app.add_subcommand("sharp", "Sharp constant by the finite element oracle");
  sharp->add_option("cell", sa.file, "Cell file")->required();
  sharp->add_option("--gamma", sa.gamma, "Face indices (comma separated) or 'all'; default: the file's GAMMA");
  sharp->add_option("--mode", sa.mode, "cp, scalar, trace or vector")->capture_default_str();
  sharp->add_option("--level", sa.level, "Finest refinement level")->capture_default_str();
  sharp->add_option("--min-level", sa.min_level, "Coarsest level of the convergence table (-1: level-1)")
      ->capture_default_str();
  sharp->add_option("--tolerance", sa.tolerance, "Relative eigenvalue tolerance")->capture_default_str();
  sharp->add_option("--samples", sa.samples, "Random Rayleigh samples for the falsification check")
      ->capture_default_str();
  add_common(sharp);

  InterpArgs ia;
  auto* interp = app.add_subcommand("interp", "Piecewise-constant interpolation on a mesh file");
  interp->add_option("mesh", ia.file, "Mesh file")->required();
  interp->add_option("--field", ia.field, "Analytic field (e.g. 'sin(pi*x)', '[y,x]') or 'nodal'")->required();
  interp->add_option("--mode", ia.mode, "scalar or vector")->capture_default_str();
  interp->add_option("--plan", ia.plan,
                     "scalar: default | all | one face per cell 'f0,f1,...'; vector: default | 'a,b;c,d;...'")
      ->capture_default_str();
  interp->add_option("--output", ia.output, "Write the interpolant as a mesh file with a VALUES cell section");
  interp->add_option("--cp-mode", ia.cp_mode, "convex, classical or user")->capture_default_str();
  interp->add_option("--cp", ia.cp, "User-supplied C_P (with --cp-mode user)");
  interp->add_option("--tolerance", ia.tolerance, "Slack for the error inequality check")->capture_default_str();
  add_common(interp);

  ReproduceArgs ra;
  auto* reproduce = app.add_subcommand("reproduce", "Run the reproduction suite and print a pass/fail table");
  reproduce->add_option("--criteria", ra.criteria, "Subset of criteria, e.g. '1,4'");
  add_common(reproduce);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*bounds) return cmd_bounds(ba, common);
    if (*sharp) return cmd_sharp(sa, common);
    if (*interp) return cmd_interp(ia, common);
    if (*reproduce) return cmd_reproduce(ra, common);
  } catch (const Error& e) {
    json r = new_report(app.get_subcommands().front()->get_name());
    add_failure(r, std::string(to_string(e.kind())), e.message());
    if (common.format == "machine") std::cout << r.dump(2) << "\n";
    else std::cerr << render_failures(r);
    return 1;
  }
  return 2;
}
