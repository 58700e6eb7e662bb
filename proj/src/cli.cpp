#include "avieb/cli.hpp"

#include "avieb/bounds.hpp"
#include "avieb/gpm.hpp"
#include "avieb/instgen.hpp"
#include "avieb/json_io.hpp"
#include "avieb/rng.hpp"
#include "avieb/solvers.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace avieb::cli {

namespace {

using nlohmann::json;

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

std::string fmt(const Vector& v) {
  std::string s = "[";
  for (Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v(i));
  return s + "]";
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec_json(const Vector& v) {
  json j = json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(num(v(i)));
  return j;
}

const char* verdict(bool pass) { return pass ? "pass" : "fail"; }

/// "1,2,3", "[1, 2, 3]" or "1 2 3".
Vector parse_vector(const std::string& text, Index n, const char* what) {
  std::string s = text;
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '[' || c == ']'; }, ' ');
  std::istringstream in(s);
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw UsageError(std::string(what) + ": cannot parse \"" + tok + "\" as a number");
    }
  }
  Vector v(static_cast<Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<Index>(i)) = vals[i];
  require_dim(v.size(), n, what);
  return v;
}

std::vector<Index> parse_dims(const std::string& text) {
  std::vector<Index> dims;
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  long long d = 0;
  while (in >> d) {
    if (d <= 0) throw UsageError("--dims entries must be positive");
    dims.push_back(static_cast<Index>(d));
  }
  if (!in.eof() || dims.empty()) throw UsageError("--dims must be a comma-separated list of integers");
  return dims;
}

struct Options {
  std::string instance;
  std::uint64_t seed = 1;
  double eps = 1.0;
  std::size_t samples = 0;  // 0 selects the command default
  double tol = 1e-6;
  std::string out;
  unsigned threads = 1;
  std::string x;
  std::string y;
  std::string method = "extragradient";
  double step = 0.0;
  int max_iters = 10000;
  double stop = 1e-6;
  bool distances = false;
  bool radius_search = false;
  std::size_t active_set_cap = 16;
  std::size_t holdout = 500;
  double slack = 1.05;
  std::size_t points = 10;
  std::string dims = "5,10,20,40";
  std::string spectrum = "both";
  // generate
  std::string kind = "avi";
  std::string monotonicity = "strongly_monotone";
  std::string entry;
  std::string name;
  Index n = 3;
  Index m = 4;
  Index r = 2;
  Index k = 1;
  Index p = 2;
  bool bounded_sections = false;
};

struct Loaded {
  std::string label;
  SuiteItem item;
};

Loaded load(const std::string& spec) {
  if (spec.rfind("canned:", 0) == 0) {
    const std::string name = spec.substr(7);
    for (auto& e : canned_suite()) {
      if (e.name == name) return {name, e.item};
    }
    throw UsageError("unknown canned entry \"" + name + "\"");
  }
  return {std::filesystem::path(spec).stem().string(), load_instance(spec)};
}

const AviInstance& need_avi(const Loaded& l) {
  if (const auto* a = std::get_if<AviInstance>(&l.item)) return *a;
  throw UsageError("this command needs an AVI instance");
}

const GpMultifunction& need_gpm(const Loaded& l) {
  if (const auto* f = std::get_if<GpMultifunction>(&l.item)) return *f;
  throw UsageError("this command needs a multifunction instance");
}

class Context {
 public:
  Context(const Options& o, std::ostream& out) : opt(o), out_(out) { tol.cmp = o.tol; }

  const Options& opt;
  Tolerances tol;
  CommandResult result;

  std::size_t samples(std::size_t fallback) const { return opt.samples ? opt.samples : fallback; }

  EnumerationOptions enumeration() const {
    EnumerationOptions e;
    e.active_set_cap = opt.active_set_cap;
    e.threads = opt.threads;
    return e;
  }

  json envelope(const std::string& command, const std::string& label, bool pass) const {
    json j;
    j["schema_version"] = "1";
    j["command"] = command;
    j["instance"] = label;
    j["seed"] = opt.seed;
    j["verdict"] = verdict(pass);
    return j;
  }

  void write_json(const std::string& name, const json& j) { write(name + ".json", j.dump(2) + "\n"); }

  void write_csv(const std::string& name, const std::string& header, const std::vector<std::string>& rows) {
    std::string text = header + "\n";
    for (const auto& r : rows) text += r + "\n";
    write(name + ".csv", text);
  }

  /// Prints the one-line summary, with the first report path if any.
  void summary(const std::string& line) {
    out_ << line;
    if (!result.reports.empty()) out_ << " report=" << result.reports.front().string();
    out_ << "\n";
  }

  void set_verdict(bool pass) { result.exit_code = pass ? exit_pass : exit_fail; }

 private:
  std::ostream& out_;

  void write(const std::string& file, const std::string& text) {
    if (opt.out.empty()) return;
    const std::filesystem::path dir(opt.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const auto path = dir / file;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw IoError("write failed for " + path.string());
    result.reports.push_back(path);
  }
};

json bound_json(const BoundReport& r) {
  json j;
  j["verdict"] = verdict(r.pass());
  j["c_emp"] = num(r.c_emp);
  j["epsilon"] = r.epsilon;
  j["num_samples"] = r.num_samples;
  j["drawn"] = r.drawn;
  j["worst_ratio_witness"] = r.worst_ratio_witness ? vec_json(*r.worst_ratio_witness) : json(nullptr);
  j["stabilized"] = r.stabilized;
  j["vacuous"] = r.vacuous;
  j["violations"] = r.violations;
  j["notes"] = r.notes;
  j["ratio_trace"] = json::array();
  for (const auto& [count, c] : r.ratio_trace) j["ratio_trace"].push_back({{"samples", count}, {"c_emp", num(c)}});
  j["per_active_set"] = json::array();
  for (const auto& [act, c] : r.per_active_set) j["per_active_set"].push_back({{"active", act.to_string()}, {"c", num(c)}});
  return j;
}

std::vector<std::string> trace_rows(const BoundReport& r) {
  std::vector<std::string> rows;
  for (const auto& [count, c] : r.ratio_trace) rows.push_back(std::to_string(count) + "," + fmt(c));
  return rows;
}

std::string bound_line(const BoundReport& r) {
  std::string s = std::string(r.pass() ? "PASS" : "FAIL") + " c_emp=" + fmt(r.c_emp) +
                  " samples=" + std::to_string(r.num_samples) + "/" + std::to_string(r.drawn);
  if (r.vacuous) s += " vacuous";
  if (!r.violations.empty()) s += " (" + r.violations.front() + ")";
  return s;
}

ErrorBoundConfig error_bound_config(const Context& ctx) {
  ErrorBoundConfig cfg;
  cfg.epsilon = ctx.opt.eps;
  cfg.num_samples = ctx.samples(1000);
  cfg.master_seed = ctx.opt.seed;
  cfg.threads = ctx.opt.threads;
  cfg.enumeration = ctx.enumeration();
  return cfg;
}

LipschitzCheckConfig inverse_lipschitz_config(const Context& ctx, const Vector& ybar) {
  LipschitzCheckConfig cfg;
  cfg.base_point = ybar;
  cfg.samples_per_radius = ctx.samples(200);
  cfg.master_seed = ctx.opt.seed;
  cfg.threads = ctx.opt.threads;
  cfg.enumeration = ctx.enumeration();
  return cfg;
}

SamplerConfig sampler_config(const Context& ctx, std::size_t pairs, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.master_seed = seed;
  cfg.num_pairs = pairs;
  cfg.threads = ctx.opt.threads;
  return cfg;
}

/// Probe points for minimax and domain checks: odd indices are x-parts of
/// random graph points (inside dom F), even indices are Gaussian draws.
std::vector<Vector> probe_points(const GpMultifunction& f, std::size_t count, std::uint64_t seed,
                                 const Tolerances& tol) {
  const PolyhedralSet graph = f.graph();
  const bool has_graph = !is_empty(graph, tol);
  std::vector<Vector> xs;
  for (std::size_t i = 0; i < count; ++i) {
    SplitMix64 rng(derive_seed(seed, i));
    if (i % 2 == 1 && has_graph) {
      const Vector pt = solve_projection_qp({2.0 * rng.normal_vector(f.x_dim() + f.y_dim()), graph}, tol);
      xs.push_back(pt.head(f.x_dim()));
    } else {
      xs.push_back(2.0 * rng.normal_vector(f.x_dim()));
    }
  }
  return xs;
}

json minimax_json(const MinimaxReport& mm, const DomainReport& dom) {
  json j;
  j["verdict"] = verdict(mm.pass && dom.pass);
  j["max_gap"] = num(mm.max_gap);
  j["domain_mismatches"] = dom.mismatches;
  j["points"] = json::array();
  for (std::size_t i = 0; i < mm.entries.size(); ++i) {
    const auto& e = mm.entries[i];
    j["points"].push_back({{"x", vec_json(e.x)},
                           {"g_primal", num(e.primal)},
                           {"g_dual", num(e.dual)},
                           {"gap", num(e.gap)},
                           {"in_domain", dom.entries[i].member},
                           {"agrees", dom.entries[i].agrees}});
  }
  return j;
}

struct GpmLipschitz {
  LipschitzEstimate est;
  HoldoutReport holdout;
};

GpmLipschitz gpm_lipschitz(const Context& ctx, const GpMultifunction& f) {
  GpmLipschitz out;
  out.est = estimate_lipschitz_modulus(f, sampler_config(ctx, ctx.samples(200), ctx.opt.seed), ctx.tol);
  out.holdout = lipschitz_holdout(f, out.est.c_emp, ctx.opt.slack,
                                  sampler_config(ctx, ctx.opt.holdout, derive_seed(ctx.opt.seed, 0x401D)), ctx.tol);
  return out;
}

json gpm_lipschitz_json(const GpmLipschitz& l) {
  json j;
  j["verdict"] = verdict(l.holdout.pass);
  j["c_emp"] = num(l.est.c_emp);
  j["accepted_pairs"] = l.est.accepted_pairs;
  j["rejected_unbounded"] = l.est.rejected_unbounded;
  j["failed_draws"] = l.est.failed_draws;
  j["witness"] = l.est.witness ? json{{"x1", vec_json(l.est.witness->x1)}, {"x2", vec_json(l.est.witness->x2)}}
                               : json(nullptr);
  j["ratio_trace"] = json::array();
  for (const auto& [count, c] : l.est.trace) j["ratio_trace"].push_back({{"samples", count}, {"c_emp", num(c)}});
  j["holdout"] = {{"pairs", l.holdout.pairs},
                  {"violations", l.holdout.violations},
                  {"max_ratio", num(l.holdout.max_ratio)},
                  {"verdict", verdict(l.holdout.pass)}};
  return j;
}

// ---- subcommands ----

void cmd_generate(Context& ctx) {
  const Options& o = ctx.opt;
  InstanceManifest man;
  man.seed = o.seed;
  if (o.kind == "avi") {
    man.generator = "random_avi";
    man.parameters = {{"n", std::to_string(o.n)}, {"m", std::to_string(o.m)}, {"monotonicity", o.monotonicity}};
  } else if (o.kind == "gpm") {
    man.generator = "random_gpm";
    man.parameters = {{"n", std::to_string(o.n)},
                      {"r", std::to_string(o.r)},
                      {"k", std::to_string(o.k)},
                      {"p", std::to_string(o.p)},
                      {"bounded_sections", o.bounded_sections ? "true" : "false"}};
  } else if (o.kind == "truncation") {
    man.generator = "truncation";
    man.parameters = {{"spectrum", o.spectrum == "both" ? "harmonic" : o.spectrum}, {"n", std::to_string(o.n)}};
  } else if (o.kind == "canned") {
    if (o.entry.empty()) throw UsageError("--kind canned needs --entry");
    man.generator = "canned";
    man.parameters = {{"entry", o.entry}};
  } else {
    throw UsageError("unknown --kind \"" + o.kind + "\"");
  }
  man.name = !o.name.empty() ? o.name : o.kind == "canned" ? o.entry : man.generator + "_" + std::to_string(o.seed);
  man.path = "instances/" + man.name + ".json";
  std::optional<SuiteItem> item;
  try {
    item = regenerate(man);
  } catch (const SchemaError& e) {
    throw UsageError(e.what());
  }
  const std::filesystem::path root = o.out.empty() ? "." : o.out;
  ensure_layout(root);
  save_instance(root / man.path, *item);
  const auto mpath = root / "manifests" / (man.name + ".json");
  save_manifest(mpath, man);
  ctx.result.reports = {root / man.path, mpath};
  ctx.summary("generate: wrote " + (root / man.path).string() + " and " + mpath.string());
}

void cmd_project(Context& ctx) {
  const Loaded l = load(ctx.opt.instance);
  const AviInstance& inst = need_avi(l);
  const Vector x = parse_vector(ctx.opt.x, inst.dim(), "--x");
  const Vector z = solve_projection_qp({x, inst.c_set()}, ctx.tol);
  const double gap = projection_optimality_gap(inst.c_set(), x, z, ctx.tol);
  const bool pass = gap <= ctx.tol.opt;
  json j = ctx.envelope("project", l.label, pass);
  j["x"] = vec_json(x);
  j["projection"] = vec_json(z);
  j["distance"] = (x - z).norm();
  j["optimality_gap"] = num(gap);
  ctx.write_json(l.label + "_project", j);
  ctx.set_verdict(pass);
  ctx.summary("p=" + fmt(z) + " distance=" + fmt((x - z).norm()));
}

void cmd_residual(Context& ctx) {
  const Loaded l = load(ctx.opt.instance);
  const AviInstance& inst = need_avi(l);
  const Vector x = parse_vector(ctx.opt.x, inst.dim(), "--x");
  const ResidualValue r = residual(inst, x, ctx.tol);
  const bool sol = is_solution(inst, x, ctx.opt.tol, ctx.tol);
  json j = ctx.envelope("residual", l.label, true);
  j["x"] = vec_json(x);
  j["r"] = vec_json(r.r);
  j["norm"] = r.norm;
  j["projected_point"] = vec_json(r.projected_point);
  j["is_solution"] = sol;
  ctx.write_json(l.label + "_residual", j);
  ctx.summary("r=" + fmt(r.r) + " norm=" + fmt(r.norm));
}

void cmd_solve(Context& ctx) {
  const Loaded l = load(ctx.opt.instance);
  const AviInstance& inst = need_avi(l);
  SolverConfig cfg;
  try {
    cfg.method = method_from_string(ctx.opt.method);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  cfg.step = ctx.opt.step;
  cfg.max_iters = ctx.opt.max_iters;
  cfg.stop_residual = ctx.opt.stop;
  if (!ctx.opt.x.empty()) cfg.x0 = parse_vector(ctx.opt.x, inst.dim(), "--x");
  if (cfg.step < 0.0 || cfg.stop_residual < ctx.tol.cmp || cfg.max_iters < 0) {
    throw UsageError("--step must be positive, --stop at least --tol, --max-iters nonnegative");
  }
  SolveTrace tr = solve(inst, cfg, ctx.tol);

  json j;
  bool pass = tr.converged;
  std::optional<TailCheck> tail;
  std::optional<BoundReport> eb;
  if (ctx.opt.distances) {
    const auto pieces = solution_set_for(inst, ctx.enumeration(), ctx.tol);
    eb = verify_error_bound(inst, pieces, error_bound_config(ctx), ctx.tol);
    tail = annotate_distances(inst, tr, pieces, eb->c_emp, eb->epsilon, ctx.opt.slack, ctx.tol);
    pass = pass && tail->pass();
  }
  j = ctx.envelope("solve", l.label, pass);
  j["method"] = to_string(cfg.method);
  j["step"] = tr.step;
  j["outcome"] = to_string(tr.outcome);
  j["converged"] = tr.converged;
  j["iterations"] = tr.iterates.empty() ? 0 : tr.iterates.back().iter;
  j["final_x"] = vec_json(tr.final_x);
  j["final_residual"] = num(tr.final_residual);
  if (tail) {
    j["error_bound"] = bound_json(*eb);
    j["tail"] = {{"c_emp", num(tail->c_emp)},   {"epsilon", tail->epsilon}, {"slack", tail->slack},
                 {"checked", tail->checked},    {"violations", tail->violations},
                 {"max_ratio", num(tail->max_ratio)}, {"verdict", verdict(tail->pass())}};
  }
  ctx.write_json(l.label + "_solve", j);
  std::vector<std::string> rows;
  for (const auto& it : tr.iterates) {
    rows.push_back(std::to_string(it.iter) + "," + fmt(it.residual) + "," + (it.distance ? fmt(*it.distance) : ""));
  }
  ctx.write_csv(l.label + "_solve_trace", "iter,residual,distance", rows);
  ctx.set_verdict(pass);
  std::string line = std::string("solve ") + l.label + ": " + (pass ? "PASS " : "FAIL ") + to_string(tr.outcome) +
                     " after " + std::to_string(j["iterations"].get<int>()) +
                     " iterations, residual=" + fmt(tr.final_residual) + " x=" + fmt(tr.final_x);
  if (tail) line += " tail_max_ratio=" + fmt(tail->max_ratio);
  ctx.summary(line);
}

void cmd_enumerate(Context& ctx) {
  const Loaded l = load(ctx.opt.instance);
  const AviInstance& inst = need_avi(l);
  std::vector<InversePiece> pieces;
  Vector y = Vector::Zero(inst.dim());
  if (ctx.opt.y.empty()) {
    pieces = solution_set_for(inst, ctx.enumeration(), ctx.tol);
  } else {
    y = parse_vector(ctx.opt.y, inst.dim(), "--y");
    pieces = inverse_residual(inst, y, ctx.enumeration(), ctx.tol);
  }
  json j = ctx.envelope("enumerate", l.label, true);
  j["y"] = vec_json(y);
  j["pieces"] = avieb::json::from_pieces(pieces);
  ctx.write_json(l.label + "_enumerate", j);
  std::string sets;
  for (const auto& p : pieces) sets += (sets.empty() ? "" : " ") + p.active.to_string();
  ctx.summary("enumerate " + l.label + ": " + std::to_string(pieces.size()) + " pieces" +
              (sets.empty() ? "" : " " + sets));
}

void cmd_verify_error_bound(Context& ctx) {
  const Loaded l = load(ctx.opt.instance);
  const AviInstance& inst = need_avi(l);
  const auto pieces = solution_set_for(inst, ctx.enumeration(), ctx.tol);
  const ErrorBoundConfig cfg = error_bound_config(ctx);
  if (ctx.opt.radius_search) {
    const RadiusSearch rs = find_local_radius(inst, pieces, cfg, true, ctx.tol);
    json j = ctx.envelope("verify-error-bound", l.label, rs.found);
    j["report"] = rs.report ? bound_json(*rs.report) : json(nullptr);
    j["radius_search"] = {{"found", rs.found}, {"epsilon", rs.epsilon}, {"c_emp", num(rs.c_emp)}};
    j["curve"] = json::array();
    std::vector<std::string> rows;
    for (const auto& pt : rs.curve) {
      j["curve"].push_back(
          {{"epsilon", pt.epsilon}, {"c_emp", pt.c_emp ? num(*pt.c_emp) : json(nullptr)}, {"stabilized", pt.stabilized}});
      rows.push_back(fmt(pt.epsilon) + "," + (pt.c_emp ? fmt(*pt.c_emp) : "") + "," +
                     (pt.stabilized ? "true" : "false"));
    }
    ctx.write_json(l.label + "_verify-error-bound", j);
    ctx.write_csv(l.label + "_radius_curve", "epsilon,c_emp,stabilized", rows);
    ctx.set_verdict(rs.found);
    ctx.summary("verify-error-bound " + l.label + ": " + (rs.found ? "PASS" : "FAIL") +
                " epsilon=" + fmt(rs.epsilon) + " c_emp=" + fmt(rs.c_emp));
    return;
  }
  const BoundReport rep = verify_error_bound(inst, pieces, cfg, ctx.tol);
  json j = ctx.envelope("verify-error-bound", l.label, rep.pass());
  j["report"] = bound_json(rep);
  ctx.write_json(l.label + "_verify-error-bound", j);
  ctx.write_csv(l.label + "_error_bound_trace", "samples,c_emp", trace_rows(rep));
  ctx.set_verdict(rep.pass());
  ctx.summary("verify-error-bound " + l.label + ": " + bound_line(rep) + " epsilon=" + fmt(rep.epsilon));
}

void cmd_verify_lipschitz(Context& ctx) {
  const Loaded l = load(ctx.opt.instance);
  if (const auto* inst = std::get_if<AviInstance>(&l.item)) {
    const Vector ybar = ctx.opt.y.empty() ? Vector::Zero(inst->dim()) : parse_vector(ctx.opt.y, inst->dim(), "--y");
    const BoundReport rep = verify_upper_lipschitz_inverse(*inst, inverse_lipschitz_config(ctx, ybar), ctx.tol);
    json j = ctx.envelope("verify-lipschitz", l.label, rep.pass());
    j["kind"] = "avi";
    j["base_point"] = vec_json(ybar);
    j["report"] = bound_json(rep);
    ctx.write_json(l.label + "_verify-lipschitz", j);
    ctx.write_csv(l.label + "_lipschitz_trace", "samples,c_emp", trace_rows(rep));
    ctx.set_verdict(rep.pass());
    ctx.summary("verify-lipschitz " + l.label + ": " + bound_line(rep));
    return;
  }
  const GpMultifunction& f = need_gpm(l);
  const GpmLipschitz lip = gpm_lipschitz(ctx, f);
  json j = ctx.envelope("verify-lipschitz", l.label, lip.holdout.pass);
  j["kind"] = "gpm";
  j["report"] = gpm_lipschitz_json(lip);
  ctx.write_json(l.label + "_verify-lipschitz", j);
  std::vector<std::string> rows;
  for (const auto& [count, c] : lip.est.trace) rows.push_back(std::to_string(count) + "," + fmt(c));
  ctx.write_csv(l.label + "_lipschitz_trace", "samples,c_emp", rows);
  ctx.set_verdict(lip.holdout.pass);
  ctx.summary("verify-lipschitz " + l.label + ": " + (lip.holdout.pass ? "PASS" : "FAIL") +
              " c_emp=" + fmt(lip.est.c_emp) + " holdout_max_ratio=" + fmt(lip.holdout.max_ratio) +
              " violations=" + std::to_string(lip.holdout.violations) + "/" + std::to_string(lip.holdout.pairs));
}

void cmd_verify_minimax(Context& ctx) {
  const Loaded l = load(ctx.opt.instance);
  const GpMultifunction& f = need_gpm(l);
  const auto xs = probe_points(f, ctx.opt.points, ctx.opt.seed, ctx.tol);
  const MinimaxReport mm = verify_minimax(f, xs, ctx.tol);
  const DomainReport dom = verify_domain_characterization(f, xs, ctx.tol);
  const bool pass = mm.pass && dom.pass;
  json j = ctx.envelope("verify-minimax", l.label, pass);
  j["report"] = minimax_json(mm, dom);
  ctx.write_json(l.label + "_verify-minimax", j);
  ctx.set_verdict(pass);
  ctx.summary("verify-minimax " + l.label + ": " + (pass ? "PASS" : "FAIL") + " max_gap=" + fmt(mm.max_gap) +
              " domain_mismatches=" + std::to_string(dom.mismatches) + " points=" + std::to_string(xs.size()));
}

void cmd_truncation_study(Context& ctx) {
  const auto dims = parse_dims(ctx.opt.dims);
  std::vector<Spectrum> spectra;
  if (ctx.opt.spectrum == "harmonic" || ctx.opt.spectrum == "both") spectra.push_back(Spectrum::harmonic);
  if (ctx.opt.spectrum == "constant" || ctx.opt.spectrum == "both") spectra.push_back(Spectrum::constant);
  if (spectra.empty()) throw UsageError("--spectrum must be harmonic, constant or both");
  const ErrorBoundConfig cfg = error_bound_config(ctx);
  bool pass = true;
  json j = ctx.envelope("truncation-study", "truncation", true);
  j["families"] = json::array();
  std::vector<std::string> rows;
  std::string line;
  for (Spectrum s : spectra) {
    const auto table = truncation_study(TruncationFamily{s}, dims, cfg, ctx.tol);
    json fam;
    fam["spectrum"] = to_string(s);
    fam["rows"] = json::array();
    bool nondecreasing = true;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto& row = table[i];
      pass = pass && row.found;
      if (i > 0 && row.c_emp < table[i - 1].c_emp) nondecreasing = false;
      fam["rows"].push_back({{"n", row.n}, {"epsilon", row.epsilon}, {"c_emp", num(row.c_emp)}, {"found", row.found}});
      rows.push_back(std::string(to_string(s)) + "," + std::to_string(row.n) + "," + fmt(row.epsilon) + "," +
                     fmt(row.c_emp) + "," + (row.found ? "true" : "false"));
    }
    fam["nondecreasing"] = nondecreasing;
    fam["growth"] = num(table.back().c_emp / table.front().c_emp);
    j["families"].push_back(fam);
    line += std::string(" ") + to_string(s) + "=[";
    for (std::size_t i = 0; i < table.size(); ++i) line += (i ? "," : "") + fmt(table[i].c_emp);
    line += "]";
  }
  j["verdict"] = verdict(pass);
  ctx.write_json("truncation-study", j);
  ctx.write_csv("truncation_table", "spectrum,n,epsilon,c_emp,found", rows);
  ctx.set_verdict(pass);
  ctx.summary(std::string("truncation-study: ") + (pass ? "PASS" : "FAIL") + " c_emp" + line);
}

void cmd_suite(Context& ctx) {
  std::vector<std::string> summary_rows;
  std::size_t passed = 0;
  const auto suite = canned_suite();
  json index = ctx.envelope("suite", "canned", true);
  index["entries"] = json::array();
  for (const auto& e : suite) {
    json j = ctx.envelope("suite", e.name, true);
    j["entry"] = e.name;
    j["note"] = e.expected.note;
    j["checks"] = json::array();
    bool ok = true;
    auto check = [&](const std::string& name, bool pass, double value, std::optional<double> expected) {
      ok = ok && pass;
      j["checks"].push_back({{"name", name},
                             {"verdict", verdict(pass)},
                             {"value", num(value)},
                             {"expected", expected ? num(*expected) : json(nullptr)}});
      summary_rows.push_back(e.name + "," + name + "," + fmt(value) + "," + (expected ? fmt(*expected) : "") + "," +
                             verdict(pass));
    };
    if (const auto* inst = std::get_if<AviInstance>(&e.item)) {
      j["kind"] = "avi";
      const auto pieces = solution_set_for(*inst, ctx.enumeration(), ctx.tol);
      check("solution_set_nonempty", !pieces.empty(), static_cast<double>(pieces.size()), std::nullopt);
      if (!pieces.empty()) {
        const BoundReport eb = verify_error_bound(*inst, pieces, error_bound_config(ctx), ctx.tol);
        j["error_bound"] = bound_json(eb);
        check("error_bound", eb.pass(), eb.c_emp, e.expected.error_bound_c);
        if (e.expected.error_bound_c) {
          const double c = *e.expected.error_bound_c;
          check("error_bound_constant", std::abs(eb.c_emp - c) <= 0.01 * c, eb.c_emp, c);
        }
        ctx.write_csv(e.name + "_error_bound_trace", "samples,c_emp", trace_rows(eb));
      }
      if (inst->num_constraints() <= static_cast<Index>(ctx.opt.active_set_cap)) {
        const BoundReport ul = verify_upper_lipschitz_inverse(
            *inst, inverse_lipschitz_config(ctx, Vector::Zero(inst->dim())), ctx.tol);
        j["upper_lipschitz"] = bound_json(ul);
        check("upper_lipschitz_at_0", ul.pass(), ul.c_emp, std::nullopt);
      }
    } else {
      const auto& f = std::get<GpMultifunction>(e.item);
      j["kind"] = "gpm";
      const auto xs = probe_points(f, ctx.opt.points, ctx.opt.seed, ctx.tol);
      const MinimaxReport mm = verify_minimax(f, xs, ctx.tol);
      const DomainReport dom = verify_domain_characterization(f, xs, ctx.tol);
      j["minimax"] = minimax_json(mm, dom);
      check("minimax", mm.pass, mm.max_gap, std::nullopt);
      check("domain", dom.pass, static_cast<double>(dom.mismatches), 0.0);
      const GpmLipschitz lip = gpm_lipschitz(ctx, f);
      j["lipschitz"] = gpm_lipschitz_json(lip);
      check("lipschitz_holdout", lip.holdout.pass, lip.holdout.max_ratio, std::nullopt);
      if (e.expected.lipschitz_c) {
        const double c = *e.expected.lipschitz_c;
        check("lipschitz_constant", std::abs(lip.est.c_emp - c) <= 0.01 * c, lip.est.c_emp, c);
      }
    }
    j["verdict"] = verdict(ok);
    passed += ok ? 1 : 0;
    index["entries"].push_back({{"entry", e.name}, {"verdict", verdict(ok)}});
    ctx.write_json(e.name, j);
  }
  const bool pass = passed == suite.size();
  index["verdict"] = verdict(pass);
  ctx.write_csv("suite_summary", "entry,check,value,expected,verdict", summary_rows);
  ctx.write_json("suite", index);
  ctx.set_verdict(pass);
  const auto first = ctx.result.reports.empty() ? std::filesystem::path() : ctx.result.reports.back();
  ctx.result.reports.clear();
  if (!first.empty()) ctx.result.reports.push_back(first);
  ctx.summary(std::string("suite: ") + (pass ? "PASS " : "FAIL ") + std::to_string(passed) + "/" +
              std::to_string(suite.size()) + " entries passed");
}

}  // namespace

CommandResult run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Local error bounds for affine variational inequalities", "avieb"};
  app.require_subcommand(1);

  auto instance = [&](CLI::App* s) {
    s->add_option("--instance", o.instance, "instance JSON file, or canned:NAME")->required();
  };
  auto seed = [&](CLI::App* s) { s->add_option("--seed", o.seed, "master seed")->capture_default_str(); };
  auto out_dir = [&](CLI::App* s) { s->add_option("--out", o.out, "report directory (no files when omitted)"); };
  auto tol = [&](CLI::App* s) { s->add_option("--tol", o.tol, "comparison tolerance")->capture_default_str(); };
  auto threads = [&](CLI::App* s) {
    s->add_option("--threads", o.threads, "worker threads (0 = auto)")->capture_default_str();
  };
  auto samples = [&](CLI::App* s, const char* what) { s->add_option("--samples", o.samples, what); };
  auto eps = [&](CLI::App* s) { s->add_option("--eps", o.eps, "residual radius epsilon")->capture_default_str(); };
  auto cap = [&](CLI::App* s) {
    s->add_option("--active-set-cap", o.active_set_cap, "largest m for active-set enumeration")->capture_default_str();
  };

  auto* gen = app.add_subcommand("generate", "generate an instance and its manifest under --out");
  gen->add_option("--kind", o.kind, "avi, gpm, truncation or canned")->capture_default_str();
  gen->add_option("--n", o.n, "dimension of x")->capture_default_str();
  gen->add_option("--m", o.m, "constraint rows (avi)")->capture_default_str();
  gen->add_option("--monotonicity", o.monotonicity, "strongly_monotone, monotone_skew or indefinite")
      ->capture_default_str();
  gen->add_option("--r", o.r, "dimension of y (gpm)")->capture_default_str();
  gen->add_option("--k", o.k, "equality rows (gpm)")->capture_default_str();
  gen->add_option("--p", o.p, "inequality rows (gpm)")->capture_default_str();
  gen->add_flag("--bounded-sections", o.bounded_sections, "box the sections (gpm)");
  gen->add_option("--spectrum", o.spectrum, "harmonic or constant (truncation)");
  gen->add_option("--entry", o.entry, "canned entry name");
  gen->add_option("--name", o.name, "instance name");
  seed(gen);
  gen->add_option("--out", o.out, "root directory (default .)");

  auto* proj = app.add_subcommand("project", "project --x onto the constraint set");
  instance(proj);
  proj->add_option("--x", o.x, "point, e.g. 1,2")->required();
  tol(proj);
  out_dir(proj);

  auto* res = app.add_subcommand("residual", "natural residual R(x)");
  instance(res);
  res->add_option("--x", o.x, "point, e.g. 1,2")->required();
  tol(res);
  out_dir(res);

  auto* sol = app.add_subcommand("solve", "projection-type solver");
  instance(sol);
  sol->add_option("--method", o.method, "extragradient or projected_fixed_point")->capture_default_str();
  sol->add_option("--step", o.step, "step size (0 = 0.3 / (1 + |M|))")->capture_default_str();
  sol->add_option("--max-iters", o.max_iters, "iteration limit")->capture_default_str();
  sol->add_option("--stop", o.stop, "stopping residual")->capture_default_str();
  sol->add_option("--x", o.x, "starting point (default origin)");
  sol->add_flag("--distances", o.distances, "annotate distances and check the error-bound tail");
  sol->add_option("--slack", o.slack, "tail slack factor")->capture_default_str();
  eps(sol);
  samples(sol, "error-bound samples for --distances (default 1000)");
  seed(sol);
  tol(sol);
  threads(sol);
  cap(sol);
  out_dir(sol);

  auto* en = app.add_subcommand("enumerate", "pieces of C* or of R^{-1}(--y)");
  instance(en);
  en->add_option("--y", o.y, "residual value (default: solution set)");
  tol(en);
  threads(en);
  cap(en);
  out_dir(en);

  auto* veb = app.add_subcommand("verify-error-bound", "empirical local error bound");
  instance(veb);
  eps(veb);
  samples(veb, "samples (default 1000)");
  veb->add_flag("--radius-search", o.radius_search, "halving search over epsilon");
  seed(veb);
  tol(veb);
  threads(veb);
  cap(veb);
  out_dir(veb);

  auto* vl = app.add_subcommand("verify-lipschitz", "upper Lipschitz check of R^{-1} (avi) or modulus (gpm)");
  instance(vl);
  vl->add_option("--y", o.y, "base point y-bar (avi, default 0)");
  samples(vl, "samples per radius (avi, default 200) or pairs (gpm, default 200)");
  vl->add_option("--holdout", o.holdout, "fresh pairs for the holdout (gpm)")->capture_default_str();
  vl->add_option("--slack", o.slack, "holdout slack factor (gpm)")->capture_default_str();
  seed(vl);
  tol(vl);
  threads(vl);
  cap(vl);
  out_dir(vl);

  auto* vm = app.add_subcommand("verify-minimax", "primal and dual value functions and dom F");
  instance(vm);
  vm->add_option("--points", o.points, "probe points")->capture_default_str();
  seed(vm);
  tol(vm);
  out_dir(vm);

  auto* ts = app.add_subcommand("truncation-study", "error-bound constants of diagonal truncations");
  ts->add_option("--spectrum", o.spectrum, "harmonic, constant or both")->capture_default_str();
  ts->add_option("--dims", o.dims, "dimensions")->capture_default_str();
  samples(ts, "samples per radius (default 1000)");
  seed(ts);
  tol(ts);
  threads(ts);
  out_dir(ts);

  auto* su = app.add_subcommand("suite", "run every check on the canned suite");
  samples(su, "samples (command defaults when omitted)");
  su->add_option("--points", o.points, "minimax probe points")->capture_default_str();
  su->add_option("--holdout", o.holdout, "holdout pairs")->capture_default_str();
  su->add_option("--slack", o.slack, "holdout slack factor")->capture_default_str();
  eps(su);
  seed(su);
  tol(su);
  threads(su);
  cap(su);
  out_dir(su);

  const std::map<std::string, std::function<void(Context&)>> handlers = {
      {"generate", cmd_generate},
      {"project", cmd_project},
      {"residual", cmd_residual},
      {"solve", cmd_solve},
      {"enumerate", cmd_enumerate},
      {"verify-error-bound", cmd_verify_error_bound},
      {"verify-lipschitz", cmd_verify_lipschitz},
      {"verify-minimax", cmd_verify_minimax},
      {"truncation-study", cmd_truncation_study},
      {"suite", cmd_suite},
  };

  CommandResult result;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return result;
  } catch (const CLI::ParseError& e) {
    err << "avieb: " << e.what() << "\n";
    result.exit_code = exit_usage;
    return result;
  }

  Context ctx(o, out);
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (!(o.tol > 0.0) || !(o.eps > 0.0)) throw UsageError("--tol and --eps must be positive");
    handlers.at(name)(ctx);
    return ctx.result;
  } catch (const UsageError& e) {
    err << "avieb " << name << ": " << e.what() << "\n";
    result.exit_code = exit_usage;
  } catch (const SchemaError& e) {
    err << "avieb " << name << ": " << e.what() << "\n";
    result.exit_code = exit_usage;
  } catch (const DimensionMismatch& e) {
    err << "avieb " << name << ": " << e.what() << "\n";
    result.exit_code = exit_usage;
  } catch (const EmptySet& e) {
    err << "avieb " << name << ": invalid instance: " << e.what() << "\n";
    result.exit_code = exit_usage;
  } catch (const CapExceeded& e) {
    err << "avieb " << name << ": " << e.what() << "\n";
    result.exit_code = exit_resource;
  } catch (const IoError& e) {
    err << "avieb " << name << ": " << e.what() << "\n";
    result.exit_code = exit_resource;
  } catch (const Error& e) {
    out << name << ": FAIL " << e.what() << "\n";
    result.exit_code = exit_fail;
  }
  result.reports = ctx.result.reports;
  return result;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr).exit_code;
}

}  // namespace avieb::cli
