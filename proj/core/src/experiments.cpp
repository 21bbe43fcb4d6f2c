#include "obliv/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "obliv/kwise.hpp"
#include "obliv/pattern.hpp"

namespace obliv {
namespace {

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::string csv_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fitted_slope: need two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("fitted_slope: x values are all equal");
  return sxy / sxx;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must lie in [0, 1]");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  if (w == 0.0 || v[lo] == v[hi]) return v[lo];
  return v[lo] + w * (v[hi] - v[lo]);
}

ConditionResult condition_experiment(const ConditionConfig& cfg) {
  if (cfg.ns.empty()) throw std::invalid_argument("condition_experiment: empty n list");
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) throw std::invalid_argument("condition_experiment: eps must lie in (0, 1)");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw std::invalid_argument("condition_experiment: delta must lie in (0, 1)");
  const std::size_t cap = cfg.oracle_cap ? cfg.oracle_cap : default_oracle_cap();
  for (auto n : cfg.ns)
    if (n > cap)
      throw CapabilityError("condition_experiment: n=" + std::to_string(n) + " exceeds the dense oracle cap " +
                            std::to_string(cap));

  ConditionResult res;
  const BitSource base(cfg.base_seed);
  for (auto n : cfg.ns) {
    BitSource vsrc = base.derive(2 * n);
    auto v = std::make_shared<const PatternMatrix>(PatternMatrix::build(n, vsrc));
    DenseMatrix vhat = v->to_dense();
    vhat *= 1.0 / (cfg.perturbation.pattern.rho * std::sqrt(static_cast<double>(n)));
    BitSource suite_src = base.derive(2 * n + 1);
    const auto suite = adversarial_suite(n, vhat, suite_src, cap);
    for (const auto& member : suite) {
      for (auto seed : cfg.seeds) {
        BitSource src = BitSource(seed).derive(n);
        const auto r = build_perturbation(n, cfg.eps, cfg.delta, cfg.perturbation, src, v);
        DenseMatrix m = r.to_dense();
        m *= cfg.eps;
        m += member.a;
        const auto rep = singular_values(m, cap);
        res.rows.push_back({member.name, n, seed, rep.s_min, rep.s_max, rep.kappa});
      }
    }
  }
  std::stable_sort(res.rows.begin(), res.rows.end(), [](const ConditionRow& a, const ConditionRow& b) {
    if (a.family != b.family) return a.family < b.family;
    if (a.n != b.n) return a.n < b.n;
    return a.seed < b.seed;
  });

  std::size_t nonsingular_total = 0;
  std::vector<double> lx, ly;
  for (auto n : cfg.ns) {
    std::vector<double> kappas, smins;
    for (const auto& row : res.rows)
      if (row.n == n) {
        kappas.push_back(row.kappa);
        smins.push_back(row.s_min);
      }
    ConditionPoint p;
    p.n = n;
    p.trials = kappas.size();
    if (p.trials == 0) {
      res.summary.points.push_back(p);
      continue;
    }
    p.median_kappa = quantile(kappas, 0.5);
    std::size_t ok = 0;
    for (double s : smins) ok += s > cfg.singular_threshold;
    nonsingular_total += ok;
    p.nonsingular_fraction = static_cast<double>(ok) / static_cast<double>(p.trials);
    p.s_min_q10 = quantile(smins, 0.1);
    std::size_t below = 0;
    for (double s : smins) below += s < p.s_min_q10;
    p.fraction_below_q10 = static_cast<double>(below) / static_cast<double>(p.trials);
    res.summary.points.push_back(p);
    if (std::isfinite(p.median_kappa) && p.median_kappa > 0) {
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log(p.median_kappa));
    }
  }
  res.summary.slope = lx.size() >= 2 ? fitted_slope(lx, ly) : std::numeric_limits<double>::quiet_NaN();
  res.summary.nonsingular_fraction =
      res.rows.empty() ? 0.0 : static_cast<double>(nonsingular_total) / static_cast<double>(res.rows.size());
  return res;
}

nlohmann::json ConditionResult::to_json() const {
  nlohmann::json j;
  j["schema"] = "obliv-condition-experiment";
  j["version"] = 1;
  auto& rs = j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    rs.push_back({{"family", r.family},
                  {"n", r.n},
                  {"seed", r.seed},
                  {"s_min", r.s_min},
                  {"s_max", r.s_max},
                  {"kappa", finite_or_null(r.kappa)}});
  auto& ps = j["summary"]["points"] = nlohmann::json::array();
  for (const auto& p : summary.points)
    ps.push_back({{"n", p.n},
                  {"trials", p.trials},
                  {"median_kappa", finite_or_null(p.median_kappa)},
                  {"nonsingular_fraction", p.nonsingular_fraction},
                  {"s_min_q10", p.s_min_q10},
                  {"fraction_below_q10", p.fraction_below_q10}});
  j["summary"]["slope"] = finite_or_null(summary.slope);
  j["summary"]["nonsingular_fraction"] = summary.nonsingular_fraction;
  return j;
}

std::string ConditionResult::rows_csv() const {
  std::ostringstream os;
  os << "family,n,seed,s_min,s_max,kappa\n";
  for (const auto& r : rows)
    os << r.family << ',' << r.n << ',' << r.seed << ',' << csv_number(r.s_min) << ',' << csv_number(r.s_max) << ','
       << csv_number(r.kappa) << '\n';
  return os.str();
}

BitAuditResult bit_audit(const std::vector<std::size_t>& ns, double eps, double delta,
                         const PerturbationConfig& config, std::uint64_t seed, std::size_t trials) {
  BitAuditResult res;
  if (trials == 0) return res;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (auto n : ns) {
    BitAuditRow row;
    row.n = n;
    double sum = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      BitSource src = BitSource(seed).derive(n * 1000003ULL + t);
      const auto r = build_perturbation(n, eps, delta, config, src);
      if (r.bits().total() != src.bits_consumed())
        throw std::logic_error("bit_audit: component counters disagree with the source counter");
      if (t == 0) row.bits = r.bits();
      sum += static_cast<double>(r.bits().total());
    }
    row.mean_total = sum / static_cast<double>(trials);
    row.ratio = row.mean_total / (static_cast<double>(n) * std::log2(static_cast<double>(n)));
    lo = std::min(lo, row.ratio);
    hi = std::max(hi, row.ratio);
    res.rows.push_back(row);
  }
  res.max_over_min = res.rows.empty() ? 0.0 : hi / lo;
  return res;
}

nlohmann::json BitAuditResult::to_json() const {
  nlohmann::json j;
  j["schema"] = "obliv-bit-audit";
  j["version"] = 1;
  auto& rs = j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) rs.push_back({{"n", r.n}, {"bits", r.bits.to_json()}, {"mean_total", r.mean_total}, {"ratio", r.ratio}});
  j["max_over_min"] = max_over_min;
  return j;
}

std::string BitAuditResult::rows_csv() const {
  std::ostringstream os;
  os << "n,pattern_v1,pattern_v2,pattern_v3,d1,d2,r2_subsets,r2_signs,total,mean_total,ratio\n";
  for (const auto& r : rows)
    os << r.n << ',' << r.bits.pattern_fam1 << ',' << r.bits.pattern_fam2 << ',' << r.bits.pattern_fam3 << ','
       << r.bits.d1 << ',' << r.bits.d2 << ',' << r.bits.r2_subsets << ',' << r.bits.r2_signs << ','
       << r.bits.total() << ',' << csv_number(r.mean_total) << ',' << csv_number(r.ratio) << '\n';
  return os.str();
}

nlohmann::json pattern_check(std::size_t n, std::uint64_t seed, std::size_t trials, double alpha,
                             unsigned hadamard_k, std::size_t oracle_cap) {
  BitSource src(seed);
  const auto v = PatternMatrix::build(n, src);
  BitSource csrc = src.derive(1);
  const auto cal = calibrate(v, trials, alpha, csrc, oracle_cap, false);
  nlohmann::json j;
  j["schema"] = "obliv-pattern-check";
  j["version"] = 1;
  j["n"] = n;
  j["seed"] = seed;
  j["trials"] = trials;
  j["alpha"] = alpha;
  j["rho_hat"] = cal.rho_available ? nlohmann::json(cal.rho_hat) : nlohmann::json(nullptr);
  j["beta_hat"] = cal.beta_hat;
  j["gamma_hat"] = cal.gamma_hat;
  j["warnings"] = nlohmann::json::array();
  if (!cal.rho_available)
    j["warnings"].push_back("rho_hat skipped: n=" + std::to_string(n) + " exceeds the dense oracle cap " +
                            std::to_string(oracle_cap));
  j["bits"] = {{"v1", v.bits().fam1}, {"v2", v.bits().fam2}, {"v3", v.bits().fam3}, {"total", v.bits().total()}};
  if (hadamard_k > 0) {
    const auto w = hadamard_sparse_witness(hadamard_k, oracle_cap);
    j["hadamard"] = {{"k", hadamard_k},
                     {"n", w.n},
                     {"support_x", w.support_x.size()},
                     {"support_hx", w.support_hx.size()}};
  }
  return j;
}

nlohmann::json kwise_audit_json(unsigned m, unsigned k) {
  const auto a = audit_kwise_exhaustive(m, k);
  return {{"schema", "obliv-kwise-audit"}, {"version", 1},
          {"m", a.m},        {"k", a.k},
          {"families", a.families},        {"tuples_checked", a.tuples_checked},
          {"uniform", a.uniform},          {"total_sign_sum", a.total_sign_sum}};
}

nlohmann::json spectral_report_json(const SpectralReport& r) {
  return {{"schema", "obliv-spectral-report"},
          {"version", 1},
          {"method", r.method},
          {"s_max", r.s_max},
          {"s_min", r.s_min},
          {"kappa", finite_or_null(r.kappa)},
          {"residual", r.residual},
          {"sweeps", r.sweeps},
          {"singular_values", r.singular_values}};
}

nlohmann::json perturbation_summary(const ObliviousPerturbation& r) {
  const auto st = heavy_row_stats(r.r2());
  return {{"n", r.n()},
          {"K", r.config().K},
          {"L", r.config().L},
          {"eps", r.eps()},
          {"delta", r.delta()},
          {"bits_total", r.bits().total()},
          {"bits_by_component", r.bits().to_json()},
          {"heavy_rows", st.trimmed_rows}};
}

}  // namespace obliv
