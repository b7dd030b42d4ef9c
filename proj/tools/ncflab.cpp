#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ncflab/ncflab.hpp"

namespace fs = std::filesystem;
using namespace ncflab;
using experiments::Result;
using json = nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 20240601;
  std::string out;
};

fs::path output_root(const Globals& g) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv("NCFLAB_OUT")) return env;
  return "ncflab-out";
}

fs::path ensure_dir(const fs::path& p) {
  fs::create_directories(p);
  return p;
}

config::Value num_value(double v) {
  config::Value x;
  x.num = v;
  return x;
}

config::Value list_value(const std::vector<double>& v) {
  config::Value x;
  x.kind = config::Value::Kind::list;
  for (double d : v) x.items.push_back(num_value(d));
  return x;
}

config::Value string_list(const std::vector<std::string>& v) {
  config::Value x;
  x.kind = config::Value::Kind::list;
  for (const auto& s : v) {
    config::Value e;
    e.kind = config::Value::Kind::string;
    e.str = s;
    x.items.push_back(e);
  }
  return x;
}

cplx parse_complex(std::string s) {
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  if (s.empty()) throw invalid_input("empty complex number");
  if (s.back() != 'i') return std::stod(s);
  s.pop_back();
  // Split at the last sign that is not an exponent sign or the leading sign.
  for (size_t i = s.size(); i-- > 1;) {
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
      const std::string im = s.substr(i);
      return {std::stod(s.substr(0, i)), im == "+" ? 1.0 : im == "-" ? -1.0 : std::stod(im)};
    }
  }
  return {0.0, s.empty() || s == "+" ? 1.0 : s == "-" ? -1.0 : std::stod(s)};
}

config::Value lambda_list(const std::vector<std::string>& v) {
  config::Value x;
  x.kind = config::Value::Kind::list;
  for (const auto& s : v) {
    const cplx c = parse_complex(s);
    x.items.push_back(list_value({c.real(), c.imag()}));
  }
  return x;
}

RationalAngle parse_theta(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) throw invalid_input("theta must be written p/q");
  return {std::stol(s.substr(0, slash)), std::stol(s.substr(slash + 1))};
}

/// Writes <id>.csv and <id>.json, prints the checks; returns true when every check passed.
bool emit(const Result& r, const fs::path& dir, bool print_table = false) {
  ensure_dir(dir);
  r.table.write((dir / (r.id + ".csv")).string());
  std::ofstream(dir / (r.id + ".json")) << r.to_json().dump(2) << '\n';
  if (print_table) std::cout << r.table.str();
  for (const auto& c : r.checks)
    std::cerr << r.id << " " << c.name << ": " << (c.passed ? "pass" : "FAIL") << "  " << c.detail << '\n';
  std::cerr << r.id << ": " << r.table.size() << " rows -> " << (dir / (r.id + ".csv")).string() << " ("
            << experiments::fmt(r.wall_seconds) << " s)\n";
  return r.passed();
}

int run_experiment(const std::string& id, const config::Section& s, const Globals& g, bool print_table = true) {
  const Result r = experiments::run_one(id, s, g.seed);
  return emit(r, output_root(g), print_table) ? 0 : 1;
}

BoundaryMajorant parse_majorant(const std::string& desc) {
  // const:c | poly:C:alpha | gauss:C:beta | table:file.csv (two columns y,M)
  std::vector<std::string> parts;
  std::stringstream ss(desc);
  for (std::string t; std::getline(ss, t, ':');) parts.push_back(t);
  if (parts.empty()) throw invalid_input("empty majorant descriptor");
  const std::string& kind = parts[0];
  if (kind == "const" && parts.size() == 2) return BoundaryMajorant::constant(std::stod(parts[1]));
  if (kind == "poly" && parts.size() == 3) return BoundaryMajorant::poly(std::stod(parts[1]), std::stod(parts[2]));
  if (kind == "gauss" && parts.size() == 3) return BoundaryMajorant::gaussian(std::stod(parts[1]), std::stod(parts[2]));
  if (kind == "table" && parts.size() == 2) {
    std::ifstream is(parts[1]);
    if (!is) throw invalid_input("cannot open " + parts[1]);
    std::vector<double> ys, vs;
    for (std::string line; std::getline(is, line);) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      double y, v;
      if (ls >> y >> v) {
        ys.push_back(y);
        vs.push_back(v);
      }
    }
    return BoundaryMajorant::tabulated(ys, vs);
  }
  throw invalid_input("majorant descriptor must be const:c, poly:C:alpha, gauss:C:beta or table:file");
}

std::vector<FamilyMember> grid_family(const std::vector<std::string>& kinds, int G, double R, cplx lambda,
                                      std::mt19937_64& rng) {
  std::vector<FamilyMember> fam;
  for (const auto& k : kinds) {
    if (k == "dual") {
      fam.push_back({"dual", riesz_dual_extremizer(G, R, lambda)});
    } else if (k == "ring") {
      fam.push_back({"ring", ring_sum(G, R, 1.0)});
    } else if (k == "random") {
      fam.push_back({"random", random_matrix_field(G, 1, static_cast<int>(R) + 1, rng)});
    } else if (k == "matrix-random") {
      fam.push_back({"matrix-random", random_matrix_field(G, 2, static_cast<int>(R) + 1, rng)});
    } else {
      throw invalid_input("unknown grid family '" + k + "'");
    }
  }
  return fam;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ncflab: Bochner-Riesz, Kakeya and noncommutative square-function laboratory"};
  app.require_subcommand(1);
  app.option_defaults()->delimiter(',');
  Globals g;
  app.add_option("--seed", g.seed, "base seed for every random family");
  app.add_option("--out", g.out, "output directory (default: $NCFLAB_OUT or ./ncflab-out)");

  // riesz-qt
  auto* qt = app.add_subcommand("riesz-qt", "Riesz means of a quantum-torus polynomial");
  std::string theta = "1/5", qt_input;
  std::string qt_lambda = "0.3";
  double qt_p = 2.0;
  std::vector<double> qt_R{16, 32, 64, 128, 256};
  int qt_grid = 0, qt_K = 10;
  qt->add_option("--theta", theta, "rotation angle p/q");
  qt->add_option("--lambda", qt_lambda, "Riesz exponent, e.g. 0.3 or 0.5+1i");
  qt->add_option("--p", qt_p, "Lp exponent (inf allowed)");
  qt->add_option("--R-list", qt_R, "radii");
  qt->add_option("--grid", qt_grid, "torus sampling grid M (default 2 diam + 1)");
  qt->add_option("--K", qt_K, "spectrum box [-K, K]^2 for the random polynomial");
  qt->add_option("--input", qt_input, "polynomial JSON {p, q, coeffs}");

  // riesz-grid
  auto* rg = app.add_subcommand("riesz-grid", "Riesz-mean ratio sweep on an operator-valued grid");
  double rg_p = 4.0;
  std::string rg_lambda = "0.25", rg_input;
  std::vector<double> rg_R{4, 8, 16, 32, 64};
  std::vector<std::string> rg_family{"dual", "ring"};
  int rg_grid = 512;
  rg->add_option("--p", rg_p, "Lp exponent");
  rg->add_option("--lambda", rg_lambda, "Riesz exponent");
  rg->add_option("--R-list", rg_R, "radii");
  rg->add_option("--family", rg_family, "members: dual, ring, random, matrix-random");
  rg->add_option("--grid", rg_grid, "grid size G");
  rg->add_option("--input", rg_input, "grid file (binary NCFG) used instead of the family");

  // kakeya
  auto* kk = app.add_subcommand("kakeya", "Kakeya maximal experiments");
  kk->require_subcommand(1);
  auto* kk_scal = kk->add_subcommand("scaling", "L2 norm of the scalar maximal function versus N");
  std::vector<double> kk_N{8, 16, 32, 64, 128, 256};
  std::vector<std::string> kk_family{"radial"};
  int kk_grid = 1024;
  kk_scal->add_option("--N-list", kk_N, "eccentricities");
  kk_scal->add_option("--family", kk_family, "members: radial, tube, besicovitch");
  kk_scal->add_option("--grid", kk_grid, "grid size");
  auto* kk_key = kk->add_subcommand("key-inequality", "directional maximal ratios at 2^m and 2^(m-1) directions");
  std::vector<double> kk_m{3, 4, 5, 6, 7};
  int kk_key_grid = 256;
  kk_key->add_option("--m-list", kk_m, "levels m");
  kk_key->add_option("--grid", kk_key_grid, "grid size");
  auto* kk_sand = kk->add_subcommand("sandwich", "samplewise rectangle / smoothed average ratios");
  long kk_trials = 1000;
  kk_sand->add_option("--trials", kk_trials, "random positive fields");

  // audit
  auto* au = app.add_subcommand("audit", "microlocal decomposition audits");
  au->require_subcommand(1);
  auto* au_ov = au->add_subcommand("overlap", "overlap counts of separated difference sets");
  std::vector<double> au_k{22, 24, 26};
  long au_samples = 10000;
  au_ov->add_option("--k-list", au_k, "dyadic levels");
  au_ov->add_option("--samples", au_samples, "targeted samples per k");
  auto* au_l1 = au->add_subcommand("kernel-l1", "kernel L1 norms and decay envelopes");
  std::vector<double> au_k1{6, 7, 8, 9, 10, 11, 12, 13, 14};
  std::vector<std::string> au_lam{"0.1", "0.5", "0.5+1i"};
  au_l1->add_option("--k-list", au_k1, "dyadic levels");
  au_l1->add_option("--lambda", au_lam, "exponents, e.g. 0.5+1i");
  auto* au_ms = au->add_subcommand("multiplier-sum", "square-sum of sector multipliers");
  std::vector<double> au_m{4, 5, 6, 7, 8, 9, 10};
  long au_ms_samples = 10000;
  au_ms->add_option("--m-list", au_m, "sector levels");
  au_ms->add_option("--samples", au_ms_samples, "random unit directions per m");
  auto* au_pt = au->add_subcommand("partition", "partition-of-unity residuals");
  long au_pt_samples = 10000;
  au_pt->add_option("--samples", au_pt_samples, "random points per exponent");

  // fuzz
  auto* fz = app.add_subcommand("fuzz", "operator-inequality fuzzing");
  std::string fz_kind = "trace-cs";
  long fz_trials = 10000;
  int fz_dim = 4;
  fz->add_option("--kind", fz_kind, "convexity, trace-cs, holder-sq, khintchine, monotone")->required();
  fz->add_option("--trials", fz_trials, "random instances");
  fz->add_option("--dim", fz_dim, "matrix dimension");

  // maxnorm
  auto* mx = app.add_subcommand("maxnorm", "two-sided estimate of the maximal norm of positive matrices");
  std::string mx_input;
  double mx_p = 2.0;
  mx->add_option("--input", mx_input, "JSON array of matrices ([re, im] entries)")->required();
  mx->add_option("--p", mx_p, "Lp exponent");

  // interp
  auto* ip = app.add_subcommand("interp", "interpolation constant M(t)");
  std::string ip_m0 = "const:1", ip_m1 = "const:2.718281828459045";
  int ip_t = 99;
  ip->add_option("--m0", ip_m0, "majorant on Re z = 0: const:c | poly:C:a | gauss:C:b | table:file");
  ip->add_option("--m1", ip_m1, "majorant on Re z = 1");
  ip->add_option("--t-grid", ip_t, "number of interior t points");

  auto* re = app.add_subcommand("riesz-exponents", "exponent bookkeeping for Riesz means");
  std::vector<double> re_lam{0.1, 0.2, 0.25, 0.3, 0.4, 0.5};
  double re_eps = 0.05;
  re->add_option("--lambda-list", re_lam, "exponents in (0, 1/2]");
  re->add_option("--eps", re_eps, "epsilon");

  // run
  auto* rn = app.add_subcommand("run", "run every experiment listed in a config file");
  std::string rn_cfg;
  rn->add_option("config", rn_cfg, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; anything else is a usage error.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*qt) {
      const fs::path dir = ensure_dir(output_root(g));
      QTorusPoly f;
      if (!qt_input.empty()) {
        std::ifstream is(qt_input);
        if (!is) throw invalid_input("cannot open " + qt_input);
        f = io::poly_from_json(json::parse(is));
      } else {
        std::mt19937_64 rng(g.seed);
        f = random_qtorus_poly(parse_theta(theta), qt_K, rng);
      }
      const cplx lam = parse_complex(qt_lambda);
      const int M = qt_grid > 0 ? qt_grid : static_cast<int>(2 * f.support_diameter() + 1);
      const double base = lp_norm_qt(f, qt_p, M);
      io::CsvTable t({"R", "norm", "ratio", "defect"});
      for (double R : qt_R) {
        const double nb = lp_norm_qt(bochner_riesz_qt(f, R, lam), qt_p, M);
        t.row() << R << nb << nb / base << lp_norm_qt(bochner_riesz_qt_defect(f, R, lam), qt_p, M);
      }
      t.write((dir / "riesz-qt.csv").string());
      std::cout << t.str();
      return 0;
    }
    if (*rg) {
      const fs::path dir = ensure_dir(output_root(g));
      const cplx lam = parse_complex(rg_lambda);
      std::mt19937_64 rng(g.seed);
      io::CsvTable t({"family_id", "R", "ratio", "error_norm"});
      for (double R : rg_R) {
        std::vector<FamilyMember> fam;
        if (!rg_input.empty()) {
          fam.push_back({rg_input, io::read_opgrid(rg_input)});
        } else {
          fam = grid_family(rg_family, rg_grid, R, lam, rng);
        }
        for (const auto& row : riesz_ratio_sweep(fam, rg_p, lam, {R}).rows)
          t.row() << row.family_id << row.R << row.ratio << row.error_norm;
      }
      t.write((dir / "riesz-grid.csv").string());
      std::cout << t.str();
      return 0;
    }
    if (*kk) {
      config::Section s;
      s.name = "kakeya";
      if (*kk_scal) {
        s.values["N_list"] = list_value(kk_N);
        s.values["family"] = string_list(kk_family);
        s.values["grid"] = num_value(kk_grid);
        return run_experiment("kakeya-scaling", s, g);
      }
      if (*kk_key) {
        s.values["m_list"] = list_value(kk_m);
        s.values["grid"] = num_value(kk_key_grid);
        return run_experiment("kakeya-key-inequality", s, g);
      }
      s.values["trials"] = num_value(static_cast<double>(kk_trials));
      return run_experiment("kakeya-sandwich", s, g);
    }
    if (*au) {
      config::Section s;
      s.name = "audit";
      if (*au_ov) {
        s.values["k_list"] = list_value(au_k);
        s.values["samples"] = num_value(static_cast<double>(au_samples));
        return run_experiment("overlap-audit", s, g);
      }
      if (*au_l1) {
        s.values["k_list"] = list_value(au_k1);
        s.values["lambda"] = lambda_list(au_lam);
        return run_experiment("kernel-l1", s, g);
      }
      if (*au_ms) {
        s.values["m_list"] = list_value(au_m);
        s.values["samples"] = num_value(static_cast<double>(au_ms_samples));
        return run_experiment("multiplier-sum", s, g);
      }
      s.values["samples"] = num_value(static_cast<double>(au_pt_samples));
      return run_experiment("partition", s, g);
    }
    if (*fz) {
      const FuzzReport rep = ineq_fuzz(fz_kind, fz_trials, g.seed, fz_dim);
      json worst = json::array();
      for (const auto& m : rep.worst_instance) worst.push_back(io::matrix_to_json(m));
      json j = {{"kind", rep.kind},
                {"dim", rep.dim},
                {"trials", rep.trials},
                {"seed", g.seed},
                {"violations", rep.violations},
                {"min_scaled_slack", rep.min_scaled_slack},
                {"worst_instance", worst}};
      if (fz_kind == "khintchine") j["khintchine"] = {rep.khintchine_lower, rep.khintchine_upper};
      const fs::path dir = ensure_dir(output_root(g));
      std::ofstream(dir / ("fuzz-" + fz_kind + ".json")) << j.dump(2) << '\n';
      std::cout << j.dump(2) << '\n';
      return rep.violations == 0 ? 0 : 1;
    }
    if (*mx) {
      std::ifstream is(mx_input);
      if (!is) throw invalid_input("cannot open " + mx_input);
      const json in = json::parse(is);
      OpSequence xs;
      for (const auto& m : in) xs.push_back(io::matrix_from_json(m));
      const MaxNormEstimate e = maxnorm_positive(xs, mx_p, g.seed);
      json j = {{"p", mx_p},
                {"lower", e.lower},
                {"upper", e.upper},
                {"majorant", io::matrix_to_json(e.majorant)},
                {"dual_basis", io::matrix_to_json(e.basis)},
                {"dual_assignment", e.assignment}};
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    if (*ip) {
      const BoundaryMajorant m0 = parse_majorant(ip_m0), m1 = parse_majorant(ip_m1);
      io::CsvTable t({"t", "M"});
      for (int i = 1; i <= ip_t; ++i) {
        const double tt = static_cast<double>(i) / (ip_t + 1);
        t.row() << tt << interp_constant(m0, m1, tt);
      }
      const fs::path dir = ensure_dir(output_root(g));
      t.write((dir / "interp.csv").string());
      std::cout << t.str();
      return 0;
    }
    if (*re) {
      config::Section s;
      s.name = "riesz-exponents";
      s.values["lambda_list"] = list_value(re_lam);
      s.values["eps"] = num_value(re_eps);
      return run_experiment("riesz-exponents", s, g);
    }
    if (*rn) {
      const config::Document doc = config::load(rn_cfg);
      const config::Section& head = doc.section("run");
      const std::vector<std::string> ids = head.strings("experiments", {});
      const std::uint64_t seed = static_cast<std::uint64_t>(head.integer("seed", static_cast<long>(g.seed)));
      const fs::path dir = output_root(g) / head.string("output", "run");
      // Validate before any compute starts.
      for (const auto& id : ids) experiments::validate_section(id, doc.section(id));
      for (const auto& name : doc.order)
        if (name != "run") experiments::validate_section(name, doc.section(name));
      std::vector<std::string> failing;
      json all = json::array();
      for (const auto& id : ids) {
        const Result r = experiments::run_one(id, doc.section(id), seed);
        const bool asserted = doc.section(id).boolean("assert", true);
        if (!emit(r, dir) && asserted) failing.push_back(id);
        all.push_back(r.to_json());
      }
      ensure_dir(dir);
      std::ofstream(dir / "results.json") << all.dump(2) << '\n';
      if (!failing.empty()) {
        std::cerr << "failing experiments:";
        for (const auto& f : failing) std::cerr << ' ' << f;
        std::cerr << '\n';
        return 1;
      }
      return 0;
    }
  } catch (const ncflab::invalid_input& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
