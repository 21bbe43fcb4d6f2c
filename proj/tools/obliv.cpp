// Command-line front end: perturbation generation, experiments and solves.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "obliv/experiments.hpp"
#include "obliv/matrix_io.hpp"
#include "obliv/perturb.hpp"
#include "obliv/solver.hpp"
#include "obliv/spectra.hpp"

namespace {

using obliv::PerturbationConfig;

// Exit codes. Solve also uses kNotCertified and kCapHit.
constexpr int kOk = 0;
constexpr int kNotCertified = 1;
constexpr int kCapHit = 2;
constexpr int kInputError = 3;

std::uint64_t parse_seed(const std::string& s) {
  std::size_t pos = 0;
  const std::uint64_t v = std::stoull(s, &pos, 0);
  if (pos != s.size()) throw std::invalid_argument("bad seed '" + s + "'");
  return v;
}

struct Common {
  std::vector<std::size_t> ns{256};
  std::string seed = "1";
  std::vector<std::string> seeds;
  double eps = 0.1;
  double delta = 0.1;
  std::uint32_t K = 8;
  std::uint32_t L = 0;
  double rho = 3.0;
  double alpha = 0.01;
  std::size_t trials = 0;
  std::string out;
  std::string format = "json";
  std::size_t oracle_cap = 0;

  PerturbationConfig perturbation() const {
    PerturbationConfig c;
    c.K = K;
    c.L = L;
    c.pattern.rho = rho;
    c.pattern.alpha = alpha;
    return c;
  }
  std::size_t cap() const { return oracle_cap ? oracle_cap : obliv::default_oracle_cap(); }
};

void emit(const Common& c, const nlohmann::json& j, const std::string& csv = {}) {
  const std::string text = (c.format == "csv" && !csv.empty()) ? csv : j.dump(2) + "\n";
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + c.out + "' for writing");
  f << text;
  f.close();
  if (!f) throw std::runtime_error("write failed for '" + c.out + "'");
}

void add_n(CLI::App* app, Common& c, bool list) {
  if (list)
    app->add_option("--n", c.ns, "Dimension list")->delimiter(',')->check(CLI::PositiveNumber);
  else
    app->add_option("--n", c.ns, "Dimension")->expected(1)->check(CLI::PositiveNumber);
}

void add_perturbation_flags(CLI::App* app, Common& c) {
  app->add_option("--eps", c.eps, "Perturbation size / target backward error, in (0, 1)")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--delta", c.delta, "Failure probability budget, in (0, 1)")->check(CLI::Range(0.0, 1.0));
  app->add_option("--K", c.K, "Nonzeros per column of the sparse part")->check(CLI::PositiveNumber);
  app->add_option("--L", c.L, "Row trimming threshold (default ceil(2 e K))");
  app->add_option("--rho", c.rho, "Norm factor of the pattern matrix")->check(CLI::PositiveNumber);
  app->add_option("--alpha", c.alpha, "Sparsity fraction")->check(CLI::Range(0.0, 1.0));
}

void add_output_flags(CLI::App* app, Common& c, bool csv, const std::string& out_names = "--out") {
  app->add_option(out_names, c.out, "Output path (default stdout)");
  if (csv)
    app->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  else
    app->add_option("--format", c.format, "json")->check(CLI::IsMember({"json"}));
}

std::vector<std::uint64_t> seed_list(const Common& c) {
  std::vector<std::uint64_t> s;
  for (const auto& t : c.seeds) s.push_back(parse_seed(t));
  if (s.empty()) {
    const std::uint64_t first = parse_seed(c.seed);
    const std::size_t count = c.trials ? c.trials : 1;
    for (std::size_t i = 0; i < count; ++i) s.push_back(first + i);
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"obliv: oblivious perturbations for linear systems"};
  app.require_subcommand(1);
  Common c;

  auto* gen = app.add_subcommand("gen-perturbation", "Build a perturbation and write it as JSON");
  add_n(gen, c, false);
  gen->add_option("--seed", c.seed, "Seed (decimal or 0x hex)");
  add_perturbation_flags(gen, c);
  gen->add_option("--out", c.out, "Container path")->required();

  auto* cond = app.add_subcommand("condition-experiment", "Singular values of A + eps R over the hard suite");
  add_n(cond, c, true);
  cond->add_option("--seed", c.seed, "Base seed for the pattern matrix and the suite; also first trial seed");
  cond->add_option("--seeds", c.seeds, "Explicit trial seeds")->delimiter(',');
  cond->add_option("--trials", c.trials, "Trial seeds seed, seed+1, ... when --seeds is absent");
  add_perturbation_flags(cond, c);
  add_output_flags(cond, c, true);
  cond->add_option("--oracle-cap", c.oracle_cap, "Dense oracle dimension cap");

  auto* solve = app.add_subcommand("solve", "Backward-stable solve of A x = b");
  std::string matrix_path, rhs_path, json_out;
  std::uint64_t max_matvecs = 0;
  double cap_constant = 200.0;
  solve->add_option("--matrix", matrix_path, "Matrix file (.csv dense, otherwise coordinate)")->required();
  solve->add_option("--rhs", rhs_path, "Right-hand side file (one column)")->required();
  solve->add_option("--seed", c.seed, "Seed (decimal or 0x hex)");
  add_perturbation_flags(solve, c);
  solve->add_option("--max-matvecs", max_matvecs, "Query cap (default c n ln(1/eps) / eps^3)");
  solve->add_option("--cap-constant", cap_constant, "Constant c of the default cap")->check(CLI::PositiveNumber);
  solve->add_option("--json-out", json_out, "Write the report here instead of stdout");

  auto* bits = app.add_subcommand("bit-audit", "Random bits per n against n log2 n");
  std::vector<std::size_t> bit_ns{256, 1024, 4096};
  bits->add_option("--n", bit_ns, "Dimension list")->delimiter(',')->check(CLI::PositiveNumber);
  bits->add_option("--seed", c.seed, "Seed (decimal or 0x hex)");
  std::size_t bit_trials = 1;
  bits->add_option("--trials", bit_trials, "Builds per n (0 gives an empty table)");
  add_perturbation_flags(bits, c);
  add_output_flags(bits, c, true);

  auto* pat = app.add_subcommand("pattern-check", "Calibrate rho, beta, gamma and report the Hadamard witness");
  add_n(pat, c, false);
  pat->add_option("--seed", c.seed, "Seed (decimal or 0x hex)");
  std::size_t pat_trials = 200;
  unsigned hadamard_k = 2;
  pat->add_option("--trials", pat_trials, "Sparse test vectors")->check(CLI::PositiveNumber);
  pat->add_option("--alpha", c.alpha, "Sparsity fraction")->check(CLI::Range(0.0, 1.0));
  pat->add_option("--hadamard-k", hadamard_k, "Witness order n = 4^k (0 skips)");
  add_output_flags(pat, c, false);
  pat->add_option("--oracle-cap", c.oracle_cap, "Dense oracle dimension cap");

  auto* spectra_cmd = app.add_subcommand("spectra", "Singular values of a matrix file");
  std::string method = "bidiagonal";
  spectra_cmd->add_option("--matrix,--in", matrix_path, "Matrix file")->required();
  spectra_cmd->add_option("--method", method, "bidiagonal or jacobi")->check(CLI::IsMember({"bidiagonal", "jacobi"}));
  add_output_flags(spectra_cmd, c, false, "--out,--json-out");
  spectra_cmd->add_option("--oracle-cap", c.oracle_cap, "Dense oracle dimension cap");

  auto* kw = app.add_subcommand("kwise-audit", "Exhaustive k-wise uniformity check over GF(2^m)");
  unsigned m = 3, k = 2;
  kw->add_option("--m", m, "Field degree")->check(CLI::Range(3u, 16u));
  kw->add_option("--k", k, "Independence order")->check(CLI::Range(1u, 8u));
  add_output_flags(kw, c, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      obliv::BitSource src(parse_seed(c.seed));
      const auto r = obliv::build_perturbation(c.ns.at(0), c.eps, c.delta, c.perturbation(), src);
      obliv::save_perturbation(r, c.out);
      std::cout << obliv::perturbation_summary(r).dump(2) << "\n";
      return kOk;
    }
    if (*cond) {
      obliv::ConditionConfig cc;
      cc.ns = c.ns;
      cc.seeds = seed_list(c);
      cc.eps = c.eps;
      cc.delta = c.delta;
      cc.perturbation = c.perturbation();
      cc.base_seed = parse_seed(c.seed);
      cc.oracle_cap = c.cap();
      const auto res = obliv::condition_experiment(cc);
      emit(c, res.to_json(), res.rows_csv());
      return kOk;
    }
    if (*solve) {
      const auto a = obliv::load_matrix(matrix_path);
      const auto b = obliv::load_vector(rhs_path);
      if (a.rows != a.cols) throw std::invalid_argument(matrix_path + ": matrix must be square");
      if (b.size() != a.rows) throw std::invalid_argument(rhs_path + ": length does not match the matrix");
      const auto op = a.op();
      obliv::SolveConfig sc;
      sc.eps = c.eps;
      sc.delta = c.delta;
      sc.max_matvecs = max_matvecs;
      sc.cap_constant = cap_constant;
      sc.perturbation = c.perturbation();
      obliv::BitSource src(parse_seed(c.seed));
      const auto rep = obliv::solve_backward(op, op.transposed(), b, sc, src);
      const std::string text = rep.to_json().dump(2) + "\n";
      if (json_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream f(json_out, std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open '" + json_out + "' for writing");
        f << text;
        if (!f) throw std::runtime_error("write failed for '" + json_out + "'");
      }
      if (rep.succeeded) return kOk;
      return rep.cap_hit ? kCapHit : kNotCertified;
    }
    if (*bits) {
      if (bit_trials > 0 && bit_ns.size() < 3) throw std::invalid_argument("bit-audit: need at least three values of n");
      const auto res = obliv::bit_audit(bit_ns, c.eps, c.delta, c.perturbation(), parse_seed(c.seed), bit_trials);
      emit(c, res.to_json(), res.rows_csv());
      return kOk;
    }
    if (*pat) {
      emit(c, obliv::pattern_check(c.ns.at(0), parse_seed(c.seed), pat_trials, c.alpha, hadamard_k, c.cap()));
      return kOk;
    }
    if (*spectra_cmd) {
      const auto a = obliv::load_matrix(matrix_path).to_dense();
      const auto rep = method == "jacobi" ? obliv::svd_small(a, c.cap()).report : obliv::singular_values(a, c.cap());
      emit(c, obliv::spectral_report_json(rep));
      return kOk;
    }
    if (*kw) {
      emit(c, obliv::kwise_audit_json(m, k));
      return kOk;
    }
  } catch (const obliv::CapabilityError& e) {
    std::cerr << "obliv: capability exceeded: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "obliv: " << e.what() << "\n";
    return kInputError;
  }
  return kOk;
}
