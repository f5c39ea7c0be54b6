#pragma once

#include "proxblock/config.hpp"
#include "proxblock/matrix_io.hpp"
#include "proxblock/nmf.hpp"
#include "proxblock/scene.hpp"
#include "proxblock/solver.hpp"

#include <cmath>
#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace proxblock {

inline constexpr int kExitFeasible = 0;
inline constexpr int kExitCheckMismatch = 1;
inline constexpr int kExitMaxIter = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitInputError = 4;

inline int exit_code_for(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible:
      return kExitFeasible;
    case SolveStatus::MaxIterReached:
      return kExitMaxIter;
    case SolveStatus::Diverged:
      return kExitDiverged;
  }
  return kExitInputError;
}

inline StopCriteria criteria_from_config(const KvConfig& cfg) {
  StopCriteria crit;
  crit.eps_rel = cfg.get_double("eps_rel", crit.eps_rel);
  crit.eps_abs = cfg.get_double("eps_abs", crit.eps_abs);
  crit.max_iter = static_cast<int>(cfg.get_index("max_iter", crit.max_iter));
  require(crit.eps_rel >= 0.0 && crit.eps_abs >= 0.0, "tolerances must be non-negative");
  require(crit.max_iter >= 1, "max_iter must be at least 1");
  return crit;
}

namespace detail {

/// Manifest: ordered key=value lines, parseable by KvConfig so a finished
/// run's manifest can be replayed as the next run's --config.
class Manifest {
 public:
  void add(const std::string& key, const std::string& value) { kv_.emplace_back(key, value); }
  void add(const std::string& key, const char* value) { kv_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, format_double(value)); }
  void add(const std::string& key, Index value) { add(key, std::to_string(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }
  void add_bool(const std::string& key, bool value) { add(key, value ? "true" : "false"); }

  void add_criteria(const StopCriteria& crit) {
    add("eps_rel", crit.eps_rel);
    add("eps_abs", crit.eps_abs);
    add("max_iter", crit.max_iter);
  }

  void add_result(const SolverState& st) {
    add("result.status", to_string(st.status));
    add("result.iterations", st.iterations);
    add_bool("result.feasible", st.feasible());
    if (!st.diagnostic.empty()) add("result.diagnostic", st.diagnostic);
    for (size_t j = 0; j < st.residuals.size(); ++j)
      for (size_t i = 0; i < st.residuals[j].size(); ++i) {
        std::string base =
            "result.constraint." + std::to_string(j) + "." + std::to_string(i) + ".";
        add_bool(base + "feasible", st.residuals[j][i].feasible());
        add(base + "r_norm", st.residuals[j][i].r_norm);
        add(base + "s_norm", st.residuals[j][i].s_norm);
      }
  }

  void write(const std::filesystem::path& path) const {
    std::string text;
    for (const auto& [k, v] : kv_) text += k + "=" + v + "\n";
    atomic_write_file(path.string(), text);
  }

 private:
  std::vector<std::pair<std::string, std::string>> kv_;
};

inline Matrix as_column(const Vector& v) {
  Matrix m(v.size(), 1);
  m.col(0) = v;
  return m;
}

inline Vector as_vector(const Matrix& m, const std::string& what) {
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw InputError(what + " must be a vector (one row or one column), got " +
                   std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

/// Persist the full splitting state so check can recompute residuals offline.
inline void write_state_files(const std::filesystem::path& dir, const SolverState& st) {
  std::filesystem::create_directories(dir / "state");
  std::string rho_csv;
  std::string steps_csv;
  for (size_t j = 0; j < st.x.size(); ++j) {
    save_matrix((dir / "state" / ("x_" + std::to_string(j) + ".pbm")).string(),
                as_column(st.x[j]), MatrixFormat::Bin);
    steps_csv += std::to_string(j) + "," + format_double(st.block_step[j]) + "\n";
    for (size_t i = 0; i < st.z[j].size(); ++i) {
      std::string tag = std::to_string(j) + "_" + std::to_string(i);
      save_matrix((dir / "state" / ("z_" + tag + ".pbm")).string(), as_column(st.z[j][i]),
                  MatrixFormat::Bin);
      save_matrix((dir / "state" / ("z_prev_" + tag + ".pbm")).string(),
                  as_column(st.z_prev[j][i]), MatrixFormat::Bin);
      save_matrix((dir / "state" / ("u_" + tag + ".pbm")).string(), as_column(st.u[j][i]),
                  MatrixFormat::Bin);
      rho_csv += std::to_string(j) + "," + std::to_string(i) + "," +
                 format_double(st.rho[j][i]) + "\n";
    }
  }
  atomic_write_file((dir / "state" / "rho.csv").string(), rho_csv);
  atomic_write_file((dir / "state" / "steps.csv").string(), steps_csv);
}

inline LinearMap operator_from_spec(const std::string& spec, Index n,
                                    const std::string& where) {
  if (spec == "identity") return LinearMap::identity(n);
  if (spec == "ones_row") return LinearMap::ones_row(n);
  for (const char* prefix : {"gradient_x:", "gradient_y:"}) {
    if (spec.rfind(prefix, 0) == 0) {
      std::string shape = spec.substr(std::string(prefix).size());
      std::size_t x = shape.find('x');
      if (x == std::string::npos)
        throw InputError(where + ": expected " + std::string(prefix) + "HEIGHTxWIDTH, got '" +
                         spec + "'");
      Index h = 0, w = 0;
      try {
        h = static_cast<Index>(std::stoll(shape.substr(0, x)));
        w = static_cast<Index>(std::stoll(shape.substr(x + 1)));
      } catch (const std::exception&) {
        throw InputError(where + ": invalid shape in '" + spec + "'");
      }
      require(h > 0 && w > 0 && h * w == n,
              where + ": shape " + shape + " does not cover an input of size " +
                  std::to_string(n));
      bool is_x = spec[9] == 'x';
      return LinearMap::gradient(h, w, is_x ? LinearMap::Axis::X : LinearMap::Axis::Y);
    }
  }
  if (spec.rfind("dense:", 0) == 0) {
    std::string path = spec.substr(6);
    Matrix m = load_matrix(path);
    require(m.cols() == n, where + ": dense operator from " + path + " has " +
                               std::to_string(m.cols()) + " columns, input has size " +
                               std::to_string(n));
    return LinearMap::dense(std::move(m));
  }
  throw InputError(where + ": unknown operator '" + spec +
                   "' (expected identity, ones_row, gradient_x:HxW, gradient_y:HxW, or "
                   "dense:PATH)");
}

inline ProxFn prox_from_spec(const std::string& g, double weight, Index out_dim,
                             const std::string& where) {
  if (g == "nonneg") return ProxFn::nonneg();
  if (g == "none") return ProxFn::soft_threshold(0.0).with_descriptor("none");
  if (g == "ones") return ProxFn::project_to_ones(out_dim);
  if (g == "soft") return ProxFn::soft_threshold(weight);
  throw InputError(where + ": unknown g '" + g +
                   "' (expected nonneg, none, ones, or soft)");
}

}  // namespace detail

inline int cmd_gen_scene(const KvConfig& cfg, std::ostream& out, std::ostream&) {
  cfg.check_known({"out", "bands", "height", "width", "components", "amplitude",
                   "background_level", "noise_sigma", "seed", "format", "rng"});
  const std::string out_dir = cfg.get_string("out");
  SceneSpec spec;
  spec.bands = cfg.get_index("bands", 8);
  spec.height = cfg.get_index("height", 16);
  spec.width = cfg.get_index("width", 16);
  spec.components = cfg.get_index("components", 3);
  spec.amplitude = cfg.get_double("amplitude", spec.amplitude);
  spec.background_level = cfg.get_double("background_level", spec.background_level);
  spec.noise_sigma = cfg.get_double("noise_sigma", 0.0);
  spec.seed = cfg.get_u64("seed", 0);
  const std::string format = cfg.get_string("format", "csv");
  const MatrixFormat fmt = matrix_format_from_name(format);
  const std::string ext = fmt == MatrixFormat::Csv ? ".csv" : ".pbm";

  Scene scene = gen_scene(spec);
  std::filesystem::create_directories(out_dir);
  save_matrix(out_dir + "/D" + ext, scene.D, fmt);
  save_matrix(out_dir + "/A_true" + ext, scene.A_true, fmt);
  save_matrix(out_dir + "/S_true" + ext, scene.S_true, fmt);

  detail::Manifest man;
  man.add("command", "gen-scene");
  man.add("bands", spec.bands);
  man.add("height", spec.height);
  man.add("width", spec.width);
  man.add("components", spec.components);
  man.add("amplitude", spec.amplitude);
  man.add("background_level", spec.background_level);
  man.add("noise_sigma", spec.noise_sigma);
  man.add("seed", spec.seed);
  man.add("format", format);
  man.add("rng", Rng::kName);
  man.write(std::filesystem::path(out_dir) / "manifest.txt");

  out << "gen-scene: wrote " << spec.bands << "x" << spec.height * spec.width
      << " observation to " << out_dir << "\n";
  return kExitFeasible;
}

inline int cmd_unmix(const KvConfig& cfg, std::ostream& out, std::ostream& err) {
  cfg.check_known({"data", "data_format", "out", "components", "background", "lambda_tv",
                   "beta", "height", "width", "reference_pixels", "seed", "eps_rel", "eps_abs",
                   "max_iter", "rng"});
  const std::string data_path = cfg.get_string("data");
  const MatrixFormat data_fmt = cfg.has("data_format")
                                    ? matrix_format_from_name(cfg.get_string("data_format"))
                                    : matrix_format_from_path(data_path);
  const std::string out_dir = cfg.get_string("out");
  Matrix D = load_matrix(data_path, data_fmt);

  UnmixingConfig uc;
  uc.components = cfg.get_index("components");
  uc.background = cfg.get_bool("background", false);
  uc.lambda_tv = cfg.get_double("lambda_tv", 0.0);
  uc.beta = cfg.get_double("beta", 0.0);
  uc.image_height = cfg.get_index("height", 0);
  uc.image_width = cfg.get_index("width", 0);
  uc.reference_pixels = cfg.get_index_list("reference_pixels");
  uc.seed = cfg.get_u64("seed", 0);
  StopCriteria crit = criteria_from_config(cfg);

  UnmixingProblem up = build_unmixing_problem(D, uc);
  SolverState st = bsdmm_solve(up.problem, crit);
  for (const std::string& w : st.warnings) err << "warning: " << w << "\n";

  Matrix A = up.extract_A(st);
  Matrix S = up.extract_S(st);
  std::filesystem::create_directories(out_dir);
  save_matrix(out_dir + "/A.csv", A, MatrixFormat::Csv);
  save_matrix(out_dir + "/S.csv", S, MatrixFormat::Csv);
  write_trace_csv(out_dir + "/trace.csv", st.trace);
  detail::write_state_files(out_dir, st);

  detail::Manifest man;
  man.add("command", "unmix");
  man.add("data", data_path);
  man.add("data_format", data_fmt == MatrixFormat::Csv ? "csv" : "bin");
  man.add("components", uc.components);
  man.add_bool("background", uc.background);
  man.add("lambda_tv", uc.lambda_tv);
  man.add("beta", up.problem.beta);  // effective value, auto-selected when <= 0
  if (uc.image_height > 0) man.add("height", uc.image_height);
  if (uc.image_width > 0) man.add("width", uc.image_width);
  if (!uc.reference_pixels.empty()) {
    std::string refs;
    for (size_t i = 0; i < uc.reference_pixels.size(); ++i) {
      if (i > 0) refs += ',';
      refs += std::to_string(uc.reference_pixels[i]);
    }
    man.add("reference_pixels", refs);
  }
  man.add("seed", uc.seed);
  man.add_criteria(crit);
  man.add("rng", Rng::kName);
  man.add_result(st);
  man.add("result.objective", nmf_objective(A, S, D));
  man.write(std::filesystem::path(out_dir) / "manifest.txt");

  out << "unmix: status=" << to_string(st.status) << " iterations=" << st.iterations
      << " objective=" << format_double(nmf_objective(A, S, D)) << "\n";
  return exit_code_for(st.status);
}

namespace detail {

/// Shared body of solve-admm and solve-sdmm. Solves
///   min 0.5 |x - v|^2 + sum_i g_i(L_i x)
/// for the input vector v; prox of mu*f is the closed form (w + mu v)/(1 + mu).
inline int run_solve_command(const std::string& command, const KvConfig& cfg, std::ostream& out,
                             std::ostream& err) {
  const bool admm = command == "solve-admm";
  if (admm)
    cfg.check_known({"input", "input_format", "out", "operator", "g", "weight", "mu", "rho",
                     "beta", "eps_rel", "eps_abs", "max_iter", "rng"});
  else
    cfg.check_known({"input", "input_format", "out", "mu", "beta", "eps_rel", "eps_abs",
                     "max_iter", "rng"},
                    {"constraint"});

  const std::string input_path = cfg.get_string("input");
  const MatrixFormat input_fmt = cfg.has("input_format")
                                     ? matrix_format_from_name(cfg.get_string("input_format"))
                                     : matrix_format_from_path(input_path);
  const std::string out_dir = cfg.get_string("out");
  const Vector v = as_vector(load_matrix(input_path, input_fmt), "input " + input_path);
  const Index n = v.size();
  const double mu = cfg.get_double("mu", 1.0);
  StopCriteria crit = criteria_from_config(cfg);

  struct Parsed {
    std::string op_spec;
    std::string g_spec;
    double weight;
    LinearMap L;
    ProxFn g;
    double rho;
  };
  std::vector<Parsed> parsed;
  auto parse_one = [&](const std::string& prefix, double default_beta) {
    const std::string op_spec = cfg.get_string(prefix + "operator");
    const std::string g_spec = cfg.get_string(prefix + "g", "none");
    const double weight = cfg.get_double(prefix + "weight", 1.0);
    LinearMap L = operator_from_spec(op_spec, n, prefix + "operator");
    ProxFn g = prox_from_spec(g_spec, weight, L.out_dim(), prefix + "g");
    const std::string rho_spec = cfg.get_string(prefix + "rho", "auto");
    double rho;
    if (rho_spec == "auto") {
      double beta = cfg.get_double("beta", default_beta);
      rho = coupled_rho(beta, mu, L.spectral_norm());
    } else {
      rho = cfg.get_double(prefix + "rho");
    }
    parsed.push_back(Parsed{op_spec, g_spec, weight, std::move(L), std::move(g), rho});
  };

  if (admm) {
    parse_one("", 1.0);
  } else {
    int count = 0;
    while (cfg.has("constraint" + std::to_string(count + 1) + ".operator")) ++count;
    require(count >= 1, "solve-sdmm: no constraints given (constraint1.operator is missing)");
    for (int i = 1; i <= count; ++i)
      parse_one("constraint" + std::to_string(i) + ".", static_cast<double>(count));
  }

  std::vector<ConstraintSpec> constraints;
  constraints.reserve(parsed.size());
  for (const Parsed& pc : parsed) constraints.push_back(ConstraintSpec{pc.L, pc.g, pc.rho});

  SingleProx f_prox = [&v](const Vector& w, double m) {
    return ((w + m * v) / (1.0 + m)).eval();
  };
  SolverState st = sdmm_solve(v, f_prox, mu, std::move(constraints), crit);
  for (const std::string& w : st.warnings) err << "warning: " << w << "\n";

  std::filesystem::create_directories(out_dir);
  save_matrix(out_dir + "/x.csv", as_column(st.x[0]), MatrixFormat::Csv);
  write_trace_csv(out_dir + "/trace.csv", st.trace);
  write_state_files(out_dir, st);

  Manifest man;
  man.add("command", command);
  man.add("input", input_path);
  man.add("input_format", input_fmt == MatrixFormat::Csv ? "csv" : "bin");
  man.add("mu", mu);
  for (size_t i = 0; i < parsed.size(); ++i) {
    const std::string prefix = admm ? "" : "constraint" + std::to_string(i + 1) + ".";
    man.add(prefix + "operator", parsed[i].op_spec);
    man.add(prefix + "g", parsed[i].g_spec);
    man.add(prefix + "weight", parsed[i].weight);
    man.add(prefix + "rho", parsed[i].rho);  // effective numeric value
  }
  man.add_criteria(crit);
  man.add_result(st);
  man.write(std::filesystem::path(out_dir) / "manifest.txt");

  out << command << ": status=" << to_string(st.status) << " iterations=" << st.iterations
      << "\n";
  return exit_code_for(st.status);
}

}  // namespace detail

inline int cmd_solve_admm(const KvConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::run_solve_command("solve-admm", cfg, out, err);
}

inline int cmd_solve_sdmm(const KvConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::run_solve_command("solve-sdmm", cfg, out, err);
}

inline int cmd_check(const KvConfig& cfg, std::ostream& out, std::ostream&) {
  cfg.check_known({"run"});
  const std::filesystem::path run_dir = cfg.get_string("run");
  KvConfig man = KvConfig::load_file((run_dir / "manifest.txt").string());
  const std::string command = man.get_string("command");
  StopCriteria crit = criteria_from_config(man);

  struct AuditConstraint {
    LinearMap L;
    std::string label;
  };
  struct AuditBlock {
    std::string name;
    std::vector<AuditConstraint> constraints;
  };
  std::vector<AuditBlock> blocks;

  if (command == "unmix") {
    Matrix D = load_matrix(man.get_string("data"),
                           matrix_format_from_name(man.get_string("data_format")));
    UnmixingConfig uc;
    uc.components = man.get_index("components");
    uc.background = man.get_bool("background", false);
    uc.lambda_tv = man.get_double("lambda_tv", 0.0);
    uc.beta = man.get_double("beta", 0.0);
    uc.image_height = man.get_index("height", 0);
    uc.image_width = man.get_index("width", 0);
    uc.reference_pixels = man.get_index_list("reference_pixels");
    uc.seed = man.get_u64("seed", 0);
    UnmixingProblem up = build_unmixing_problem(D, uc);
    for (const Block& b : up.problem.blocks) {
      AuditBlock ab{b.name, {}};
      for (const ConstraintSpec& c : b.constraints)
        ab.constraints.push_back(AuditConstraint{c.L, c.g.descriptor()});
      blocks.push_back(std::move(ab));
    }
  } else if (command == "solve-admm" || command == "solve-sdmm") {
    Matrix input = load_matrix(man.get_string("input"),
                               matrix_format_from_name(man.get_string("input_format")));
    const Index n = detail::as_vector(input, "input").size();
    AuditBlock ab{"x", {}};
    if (command == "solve-admm") {
      ab.constraints.push_back(AuditConstraint{
          detail::operator_from_spec(man.get_string("operator"), n, "operator"),
          man.get_string("g", "none")});
    } else {
      int count = 0;
      while (man.has("constraint" + std::to_string(count + 1) + ".operator")) ++count;
      for (int i = 1; i <= count; ++i) {
        std::string prefix = "constraint" + std::to_string(i) + ".";
        ab.constraints.push_back(AuditConstraint{
            detail::operator_from_spec(man.get_string(prefix + "operator"), n,
                                       prefix + "operator"),
            man.get_string(prefix + "g", "none")});
      }
    }
    blocks.push_back(std::move(ab));
  } else {
    throw InputError("check: command '" + command + "' leaves no solver state to audit");
  }

  // rho.csv rows are (block, constraint, rho)
  Matrix rho_table = load_matrix((run_dir / "state" / "rho.csv").string(), MatrixFormat::Csv);
  require(rho_table.cols() == 3, "check: state/rho.csv must have three columns");
  auto rho_of = [&rho_table](size_t j, size_t i) {
    for (Index r = 0; r < rho_table.rows(); ++r)
      if (rho_table(r, 0) == static_cast<double>(j) &&
          rho_table(r, 1) == static_cast<double>(i))
        return rho_table(r, 2);
    throw InputError("check: state/rho.csv has no entry for constraint " + std::to_string(j) +
                     "." + std::to_string(i));
  };

  // steps.csv rows are (block, |x_k - x_{k-1}|); unconstrained blocks join
  // the solver's feasibility conjunction through a stationarity check, so
  // the audit has to replay that gate as well.
  Matrix step_table =
      load_matrix((run_dir / "state" / "steps.csv").string(), MatrixFormat::Csv);
  require(step_table.cols() == 2, "check: state/steps.csv must have two columns");
  auto step_of = [&step_table](size_t j) {
    for (Index r = 0; r < step_table.rows(); ++r)
      if (step_table(r, 0) == static_cast<double>(j)) return step_table(r, 1);
    throw InputError("check: state/steps.csv has no entry for block " + std::to_string(j));
  };

  auto load_state_vector = [&run_dir](const std::string& name) {
    return detail::as_vector(
        load_matrix((run_dir / "state" / name).string(), MatrixFormat::Bin), name);
  };

  bool verdicts_agree = true;
  bool all_feasible = true;
  for (size_t j = 0; j < blocks.size(); ++j) {
    Vector x = load_state_vector("x_" + std::to_string(j) + ".pbm");
    if (blocks[j].constraints.empty()) {
      const double tol = std::sqrt(static_cast<double>(x.size())) * crit.eps_abs +
                         crit.eps_rel * x.norm();
      const double step = step_of(j);
      out << "block " << blocks[j].name << " (unconstrained): step=" << format_double(step)
          << " tol=" << format_double(tol) << " -> "
          << (step <= tol ? "stationary" : "moving") << "\n";
      all_feasible = all_feasible && step <= tol;
      continue;
    }
    for (size_t i = 0; i < blocks[j].constraints.size(); ++i) {
      const AuditConstraint& ac = blocks[j].constraints[i];
      std::string tag = std::to_string(j) + "_" + std::to_string(i);
      Vector z = load_state_vector("z_" + tag + ".pbm");
      Vector z_prev = load_state_vector("z_prev_" + tag + ".pbm");
      Vector u = load_state_vector("u_" + tag + ".pbm");
      Residuals res = compute_residuals(ac.L, x, z, z_prev, u, rho_of(j, i), crit);
      bool feasible = res.primal_feasible() && res.dual_feasible();
      std::string key =
          "result.constraint." + std::to_string(j) + "." + std::to_string(i) + ".feasible";
      bool recorded = man.get_bool(key, !feasible);  // missing key counts as a mismatch
      bool agree = man.has(key) && feasible == recorded;
      out << "block " << blocks[j].name << " constraint " << ac.label << ": r_norm="
          << format_double(res.r_norm()) << " eps_pri=" << format_double(res.eps_pri)
          << " s_norm=" << format_double(res.s_norm())
          << " eps_dual=" << format_double(res.eps_dual) << " -> "
          << (feasible ? "feasible" : "infeasible")
          << (agree ? " [matches manifest]" : " [MISMATCH with manifest]") << "\n";
      verdicts_agree = verdicts_agree && agree;
      all_feasible = all_feasible && feasible;
    }
  }
  bool recorded_overall = man.get_bool("result.feasible", !all_feasible);
  bool overall_agree = man.has("result.feasible") && recorded_overall == all_feasible;
  verdicts_agree = verdicts_agree && overall_agree;
  out << "check: recomputed " << (all_feasible ? "feasible" : "infeasible") << ", manifest says "
      << (recorded_overall ? "feasible" : "infeasible") << " -> "
      << (verdicts_agree ? "PASS" : "FAIL") << "\n";
  return verdicts_agree ? kExitFeasible : kExitCheckMismatch;
}

namespace detail {

inline int dispatch(const std::string& name, const KvConfig& cfg, std::ostream& out,
                    std::ostream& err) {
  if (name == "gen-scene") return cmd_gen_scene(cfg, out, err);
  if (name == "unmix") return cmd_unmix(cfg, out, err);
  if (name == "solve-admm") return cmd_solve_admm(cfg, out, err);
  if (name == "solve-sdmm") return cmd_solve_sdmm(cfg, out, err);
  if (name == "check") return cmd_check(cfg, out, err);
  throw InputError("unknown command '" + name + "'");
}

}  // namespace detail

/// Run a command against an assembled config, mapping exceptions to exit
/// codes. This is the entry point the CLI and the tests share.
inline int run_command(const std::string& name, const KvConfig& cfg, std::ostream& out,
                       std::ostream& err) {
  try {
    return detail::dispatch(name, cfg, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

/// Config assembly as the CLI sees it: optional --config file, then --set
/// overrides applied in order.
inline int run_cli(const std::string& name, const std::string& config_path,
                   const std::vector<std::string>& overrides, std::ostream& out,
                   std::ostream& err) {
  try {
    KvConfig cfg = config_path.empty() ? KvConfig{} : KvConfig::load_file(config_path);
    for (const std::string& o : overrides) cfg.apply_override(o);
    return detail::dispatch(name, cfg, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace proxblock
