#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "membrane/assembly.hpp"
#include "membrane/error_analysis.hpp"
#include "membrane/exact_fields.hpp"
#include "membrane/linear_solve.hpp"
#include "membrane/penalty_lab.hpp"

namespace membrane {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class ProblemKind { symmetric, particles };

struct ReferenceConfig {
  int n = 128;
  PenaltyConfig penalty{SoftCurve{3.0, 1.0, 1e-3}};
};

struct LabConfig {
  int instances = 1000;
  int strang_instances = 200;
  double tau = 1e-3;
  int max_n = 12;
  int max_m = 3;
};

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::symmetric;
  BenchmarkParams benchmark;
  Rect domain{-1.0, 1.0, -1.0, 1.0};
  std::vector<Particle> particles;  ///< particle problems only
  ModelParams model;
  PenaltyConfig penalty;
  std::vector<int> grids{8, 12, 16, 24, 32, 48};
  std::vector<std::string> norms{"L2", "H1", "H2"};
  std::optional<ReferenceConfig> reference;
  QuadratureOptions quad;
  int trefftz_degree = 24;
  std::string output = "study.csv";
  std::uint64_t seed = 1;
  int threads = 1;
  LabConfig lab;
};

namespace detail {

using boost::property_tree::ptree;

template <class T>
T get_or(const ptree& pt, const std::string& key, T fallback) {
  const auto v = pt.get_optional<std::string>(key);
  if (!v) {
    return fallback;
  }
  try {
    return pt.get<T>(key);
  } catch (const boost::property_tree::ptree_bad_data&) {
    throw ConfigError("invalid value for '" + key + "': " + *v);
  }
}

inline bool get_bool(const ptree& pt, const std::string& key, bool fallback) {
  const auto v = pt.get_optional<std::string>(key);
  if (!v) {
    return fallback;
  }
  if (*v == "true" || *v == "1" || *v == "yes") {
    return true;
  }
  if (*v == "false" || *v == "0" || *v == "no") {
    return false;
  }
  throw ConfigError("invalid boolean for '" + key + "': " + *v);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

inline std::vector<int> parse_grids(const std::string& s) {
  std::vector<int> out;
  for (const std::string& t : split_list(s)) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(t, &pos);
      if (pos != t.size()) {
        throw std::invalid_argument(t);
      }
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("invalid grid size '" + t + "'");
    }
  }
  return out;
}

inline PenaltyConfig parse_penalty(const ptree& sec, const std::string& prefix) {
  const std::string form = get_or<std::string>(sec, prefix + "formulation", "soft_curve");
  PenaltyConfig pc;
  if (form == "soft_curve") {
    SoftCurve sc;
    sc.lambda1 = get_or(sec, prefix + "lambda1", sc.lambda1);
    sc.lambda2 = get_or(sec, prefix + "lambda2", sc.lambda2);
    sc.c = get_or(sec, prefix + "c", sc.c);
    if (!(sc.c > 0.0)) {
      throw ConfigError("penalty constant c must be positive");
    }
    pc.formulation = sc;
  } else if (form == "soft_bulk") {
    SoftBulk sb;
    sb.s = get_or(sec, prefix + "s", sb.s);
    if (sb.s != 0 && sb.s != 1) {
      throw ConfigError("soft bulk s must be 0 or 1");
    }
    sb.lambda = get_or(sec, prefix + "lambda", 4.0 - 2.0 * sb.s);
    sb.c = get_or(sec, prefix + "c", sb.c);
    if (!(sb.c > 0.0)) {
      throw ConfigError("penalty constant c must be positive");
    }
    pc.formulation = sb;
  } else {
    throw ConfigError("unknown formulation '" + form + "'");
  }
  return pc;
}

inline Particle parse_particle(const ptree& sec, const std::string& name) {
  const std::string shape = get_or<std::string>(sec, "shape", "ellipse");
  const Point2 c{get_or(sec, "cx", 0.0), get_or(sec, "cy", 0.0)};
  Particle p;
  try {
    if (shape == "circle") {
      p = Particle::circle(c, get_or(sec, "r", 0.0));
    } else if (shape == "ellipse") {
      p = Particle::ellipse(c, get_or(sec, "a", 0.0), get_or(sec, "b", 0.0), get_or(sec, "angle", 0.0));
    } else {
      throw ConfigError(name + ": unknown shape '" + shape + "'");
    }
  } catch (const GeometryError& e) {
    throw ConfigError(name + ": " + e.what());
  }
  p.exterior = get_bool(sec, "exterior", false);
  p.variable_height = get_bool(sec, "variable_height", true);
  const double f1 = get_or(sec, "f1", 0.0);
  const double f2 = get_or(sec, "f2", 0.0);
  const double amp = get_or(sec, "f1_amplitude", 0.0);
  const int mode = get_or(sec, "f1_mode", 0);
  p.f1 = [f1, amp, mode](double t) { return f1 + amp * std::cos(mode * t); };
  p.f2 = constant_data(f2);
  return p;
}

}  // namespace detail

/// Validates cross-field invariants; throws ConfigError.
inline void validate(const ExperimentConfig& cfg) {
  if (cfg.grids.empty()) {
    throw ConfigError("grid list is empty");
  }
  for (std::size_t k = 0; k < cfg.grids.size(); ++k) {
    if (cfg.grids[k] < 1) {
      throw ConfigError("grid sizes must be positive");
    }
    if (k > 0 && cfg.grids[k] <= cfg.grids[k - 1]) {
      throw ConfigError("grid sizes must be strictly increasing");
    }
  }
  for (const std::string& n : cfg.norms) {
    if (n != "L2" && n != "H1" && n != "H2") {
      throw ConfigError("unknown norm '" + n + "'");
    }
  }
  if (!(cfg.model.kappa > 0.0) || cfg.model.sigma < 0.0) {
    throw ConfigError("model needs kappa > 0 and sigma >= 0");
  }
  if (cfg.problem == ProblemKind::symmetric) {
    const auto& b = cfg.benchmark;
    if (!(b.r1 > 0.0 && b.r1 < b.r2 && b.r2 < 1.0)) {
      throw ConfigError("benchmark radii must satisfy 0 < r1 < r2 < 1");
    }
  } else {
    if (cfg.particles.empty()) {
      throw ConfigError("particle problem without particles");
    }
    try {
      validate_particles(cfg.particles, cfg.domain);
    } catch (const GeometryError& e) {
      throw ConfigError(e.what());
    }
  }
  if (cfg.reference) {
    for (int n : cfg.grids) {
      if (cfg.reference->n % n != 0) {
        throw ConfigError("reference grid " + std::to_string(cfg.reference->n) + " is not a multiple of " +
                          std::to_string(n));
      }
    }
  }
  if (cfg.quad.quad_order < 1 || cfg.quad.curve_points < 1 || cfg.quad.cutcell_order < 1 ||
      cfg.quad.cutcell_depth < 0) {
    throw ConfigError("quadrature orders must be positive");
  }
  if (cfg.threads < 1) {
    throw ConfigError("thread count must be positive");
  }
}

inline ExperimentConfig parse_config(std::istream& in) {
  detail::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.what());
  }
  ExperimentConfig cfg;
  const detail::ptree empty;
  const auto section = [&](const std::string& name) -> const detail::ptree& {
    const auto s = pt.get_child_optional(name);
    return s ? *s : empty;
  };

  const auto& study = section("study");
  const std::string problem = detail::get_or<std::string>(study, "problem", "symmetric");
  if (problem == "symmetric") {
    cfg.problem = ProblemKind::symmetric;
  } else if (problem == "particles") {
    cfg.problem = ProblemKind::particles;
  } else {
    throw ConfigError("unknown problem '" + problem + "'");
  }
  cfg.penalty = detail::parse_penalty(study, "");
  if (const auto g = study.get_optional<std::string>("grids")) {
    cfg.grids = detail::parse_grids(*g);
  }
  if (const auto n = study.get_optional<std::string>("norms")) {
    cfg.norms = detail::split_list(*n);
  }
  cfg.output = detail::get_or<std::string>(study, "output", cfg.output);
  cfg.seed = detail::get_or<std::uint64_t>(study, "seed", cfg.seed);
  cfg.threads = detail::get_or(study, "threads", cfg.threads);
  cfg.trefftz_degree = detail::get_or(study, "trefftz_degree", cfg.trefftz_degree);

  const auto& model = section("model");
  cfg.model.kappa = detail::get_or(model, "kappa", cfg.model.kappa);
  cfg.model.sigma = detail::get_or(model, "sigma", cfg.model.sigma);

  const auto& bench = section("benchmark");
  cfg.benchmark.r1 = detail::get_or(bench, "r1", cfg.benchmark.r1);
  cfg.benchmark.r2 = detail::get_or(bench, "r2", cfg.benchmark.r2);
  cfg.benchmark.mode = detail::get_or(bench, "mode", cfg.benchmark.mode);
  cfg.benchmark.amplitude = detail::get_or(bench, "amplitude", cfg.benchmark.amplitude);
  cfg.benchmark.kappa = cfg.model.kappa;
  cfg.benchmark.sigma = cfg.model.sigma;

  const auto& dom = section("domain");
  cfg.domain.xmin = detail::get_or(dom, "xmin", cfg.domain.xmin);
  cfg.domain.xmax = detail::get_or(dom, "xmax", cfg.domain.xmax);
  cfg.domain.ymin = detail::get_or(dom, "ymin", cfg.domain.ymin);
  cfg.domain.ymax = detail::get_or(dom, "ymax", cfg.domain.ymax);
  if (!(cfg.domain.xmax > cfg.domain.xmin) || !(cfg.domain.ymax > cfg.domain.ymin)) {
    throw ConfigError("domain bounds are inverted");
  }

  const auto& quad = section("quadrature");
  cfg.quad.quad_order = detail::get_or(quad, "quad_order", cfg.quad.quad_order);
  cfg.quad.cutcell_depth = detail::get_or(quad, "cutcell_depth", cfg.quad.cutcell_depth);
  cfg.quad.curve_points = detail::get_or(quad, "curve_points", cfg.quad.curve_points);
  cfg.quad.cutcell_order = detail::get_or(quad, "cutcell_order", cfg.quad.cutcell_order);
  const std::string method = detail::get_or<std::string>(quad, "cutcell_method", "polar");
  if (method == "polar") {
    cfg.quad.cutcell_method = CutCellMethod::polar;
  } else if (method == "quadtree") {
    cfg.quad.cutcell_method = CutCellMethod::quadtree;
  } else {
    throw ConfigError("unknown cut-cell method '" + method + "'");
  }

  if (const auto ref = pt.get_child_optional("reference")) {
    ReferenceConfig rc;
    rc.n = detail::get_or(*ref, "n", rc.n);
    if (ref->get_optional<std::string>("formulation")) {
      rc.penalty = detail::parse_penalty(*ref, "");
    }
    cfg.reference = rc;
  }

  for (const auto& [name, sec] : pt) {
    if (name.rfind("particle", 0) == 0) {
      cfg.particles.push_back(detail::parse_particle(sec, name));
    }
  }

  const auto& lab = section("lab");
  cfg.lab.instances = detail::get_or(lab, "instances", cfg.lab.instances);
  cfg.lab.strang_instances = detail::get_or(lab, "strang_instances", cfg.lab.strang_instances);
  cfg.lab.tau = detail::get_or(lab, "tau", cfg.lab.tau);
  cfg.lab.max_n = detail::get_or(lab, "max_n", cfg.lab.max_n);
  cfg.lab.max_m = detail::get_or(lab, "max_m", cfg.lab.max_m);
  if (cfg.lab.instances < 0 || cfg.lab.strang_instances < 0 || cfg.lab.max_n < 4 || cfg.lab.max_m < 1) {
    throw ConfigError("invalid lab sizes");
  }
  validate(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path);
  }
  return parse_config(in);
}

/// Particles and bulk targets of a configured problem.
struct ProblemInstance {
  std::vector<Particle> particles;
  std::vector<BulkField> bulk;
  std::optional<PiecewiseField> exact;
};

inline ProblemInstance make_problem(const ExperimentConfig& cfg) {
  ProblemInstance pi;
  if (cfg.problem == ProblemKind::symmetric) {
    PiecewiseField field = derive_coefficients(cfg.benchmark);
    pi.particles = symmetric_particles(cfg.benchmark);
    pi.bulk = {[field](Point2 x) { return field.eval(x, RadialRegion::inner); },
               [](Point2) { return FieldSample{}; }};
    pi.exact = field;
    return pi;
  }
  pi.particles = cfg.particles;
  for (const Particle& p : pi.particles) {
    const BiharmonicSeriesField g(p, cfg.trefftz_degree);
    pi.bulk.push_back([g](Point2 x) { return g.eval(x); });
  }
  return pi;
}

struct GridSolution {
  int n = 0;
  BfsSpace space;
  Eigen::VectorXd coeffs;  ///< all DOFs
  SolveReport report;
};

inline GridSolution solve_on_grid(const ExperimentConfig& cfg, const ProblemInstance& pi,
                                  const PenaltyConfig& penalty, int n) {
  BfsSpace space(build_grid(cfg.domain, n, n));
  ProblemSetup setup;
  setup.particles = pi.particles;
  setup.model = cfg.model;
  setup.penalty = penalty;
  setup.bulk = pi.bulk;
  setup.quad = cfg.quad;
  const AssembledSystem sys = build_system(space, setup);
  SolveReport rep;
  const Eigen::VectorXd x = solve(sys, &rep);
  Eigen::VectorXd full = expand_solution(space, x);
  return {n, std::move(space), std::move(full), rep};
}

namespace detail {

/// Runs fn(0..count-1) on up to `threads` workers. Results go to caller
/// storage indexed by task, so output does not depend on scheduling.
template <class F>
void parallel_for(int count, int threads, F&& fn) {
  if (threads <= 1 || count <= 1) {
    for (int k = 0; k < count; ++k) {
      fn(k);
    }
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(threads, count);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) {
        fn(k);
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
}

struct RowOutcome {
  std::optional<ErrorRow> row;
  std::string error;
};

inline ErrorReport collect(const std::vector<RowOutcome>& outcomes, std::vector<ErrorRow>& rows_out) {
  for (const RowOutcome& o : outcomes) {
    if (!o.row) {
      break;
    }
    rows_out.push_back(*o.row);
  }
  return make_report(rows_out);
}

}  // namespace detail

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// CSV: header, one row per grid, then "# eoc_fit,<norm>,<slope>" lines.
inline std::string format_csv(const ErrorReport& rep, const std::vector<std::string>& norms) {
  std::ostringstream os;
  os << "N,h,errL2,errH1,errH2\n";
  for (const ErrorRow& r : rep.rows) {
    os << r.n << ',' << format_number(r.h) << ',' << format_number(r.err.l2) << ','
       << format_number(r.err.h1) << ',' << format_number(r.err.h2) << '\n';
  }
  if (rep.rows.size() >= 2) {
    for (const std::string& n : norms) {
      const EocResult& e = n == "L2" ? rep.l2 : (n == "H1" ? rep.h1 : rep.h2);
      os << "# eoc_fit," << n << ',' << format_number(e.fit) << '\n';
    }
  }
  return os.str();
}

/// Writes via a temporary file and rename.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::filesystem::create_directories(target.parent_path());
  }
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out << content;
  }
  std::filesystem::rename(tmp, target);
}

/// Thrown after the partial CSV has been written.
class StudyFailure : public SolverError {
public:
  using SolverError::SolverError;
};

/// Convergence study against the exact symmetric solution.
inline ErrorReport run_convergence_study(const ExperimentConfig& cfg, const std::string& csv_path = "") {
  if (cfg.problem != ProblemKind::symmetric) {
    throw ConfigError("the convergence study needs the symmetric benchmark");
  }
  const ProblemInstance pi = make_problem(cfg);
  const PiecewiseField& field = *pi.exact;
  const RegionField exact = [&field](Point2 x, Region r) { return field.eval(x, r); };
  std::vector<detail::RowOutcome> outcomes(cfg.grids.size());
  detail::parallel_for(static_cast<int>(cfg.grids.size()), cfg.threads, [&](int k) {
    const int n = cfg.grids[static_cast<std::size_t>(k)];
    try {
      const GridSolution sol = solve_on_grid(cfg, pi, cfg.penalty, n);
      const ErrorNorms e = compute_errors(sol.space, sol.coeffs, exact, pi.particles, cfg.quad);
      outcomes[static_cast<std::size_t>(k)].row = ErrorRow{n, sol.space.grid.reported_h(), e};
    } catch (const SolverError& e) {
      outcomes[static_cast<std::size_t>(k)].error = e.what();
    }
  });
  std::vector<ErrorRow> rows;
  const ErrorReport rep = detail::collect(outcomes, rows);
  if (!csv_path.empty()) {
    write_file_atomic(csv_path, format_csv(rep, cfg.norms));
  }
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (!outcomes[k].row) {
      throw StudyFailure("solver failed on grid " + std::to_string(cfg.grids[k]) + ": " + outcomes[k].error);
    }
  }
  return rep;
}

/// Study against a fine-grid reference solution on nested grids.
inline ErrorReport run_nonsymmetric_study(const ExperimentConfig& cfg, const std::string& csv_path = "") {
  const ReferenceConfig ref = cfg.reference.value_or(ReferenceConfig{});
  for (int n : cfg.grids) {
    if (ref.n % n != 0) {
      throw ReferenceError("reference grid is not nested in grid " + std::to_string(n));
    }
  }
  const ProblemInstance pi = make_problem(cfg);
  std::optional<GridSolution> fine;
  try {
    fine = solve_on_grid(cfg, pi, ref.penalty, ref.n);
  } catch (const SolverError& e) {
    if (!csv_path.empty()) {
      write_file_atomic(csv_path, format_csv(ErrorReport{}, cfg.norms));
    }
    throw StudyFailure(std::string("reference solve failed: ") + e.what());
  }
  std::vector<detail::RowOutcome> outcomes(cfg.grids.size());
  detail::parallel_for(static_cast<int>(cfg.grids.size()), cfg.threads, [&](int k) {
    const int n = cfg.grids[static_cast<std::size_t>(k)];
    try {
      const GridSolution sol = solve_on_grid(cfg, pi, cfg.penalty, n);
      const ErrorNorms e = compare_to_reference(sol.space, sol.coeffs, fine->space, fine->coeffs);
      outcomes[static_cast<std::size_t>(k)].row = ErrorRow{n, sol.space.grid.reported_h(), e};
    } catch (const SolverError& e) {
      outcomes[static_cast<std::size_t>(k)].error = e.what();
    }
  });
  std::vector<ErrorRow> rows;
  const ErrorReport rep = detail::collect(outcomes, rows);
  if (!csv_path.empty()) {
    write_file_atomic(csv_path, format_csv(rep, cfg.norms));
  }
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (!outcomes[k].row) {
      throw StudyFailure("solver failed on grid " + std::to_string(cfg.grids[k]) + ": " + outcomes[k].error);
    }
  }
  return rep;
}

struct LabReport {
  lab::SweepSummary theorem;
  lab::SweepSummary strang;
  lab::SweepSummary strang_unperturbed;
  [[nodiscard]] bool all_hold() const {
    return theorem.violations == 0 && strang.violations == 0 && strang_unperturbed.violations == 0;
  }
};

inline std::string format_lab_csv(const LabReport& r) {
  std::ostringstream os;
  os << "check,instances,feasible,holds,violations,skipped,holds_as_stated\n";
  auto line = [&os](const char* name, const lab::SweepSummary& s, bool strang) {
    os << name << ',' << s.instances << ',' << s.feasible << ',' << s.holds << ',' << s.violations << ','
       << s.skipped << ',';
    if (strang) {
      os << s.holds_as_stated;
    }
    os << '\n';
  };
  line("theorem", r.theorem, false);
  line("strang", r.strang, true);
  line("strang_unperturbed", r.strang_unperturbed, true);
  return os.str();
}

inline LabReport run_penalty_lab(const ExperimentConfig& cfg, const std::string& csv_path = "") {
  const lab::GeneratorOptions gen{cfg.lab.max_n, cfg.lab.max_m};
  LabReport r;
  r.theorem = lab::theorem_sweep(cfg.seed, cfg.lab.instances, gen);
  r.strang = lab::strang_sweep(cfg.seed + 1, cfg.lab.strang_instances, cfg.lab.tau, gen);
  r.strang_unperturbed = lab::strang_sweep(cfg.seed + 2, cfg.lab.strang_instances, 0.0, gen);
  if (!csv_path.empty()) {
    write_file_atomic(csv_path, format_lab_csv(r));
  }
  return r;
}

}  // namespace membrane
