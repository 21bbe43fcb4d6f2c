#include "obliv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "obliv/audit.hpp"

namespace obliv {

std::uint64_t default_matvec_cap(std::size_t n, double eps, double cap_constant) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("default_matvec_cap: eps must lie in (0, 1)");
  if (!(cap_constant > 0.0)) throw std::invalid_argument("default_matvec_cap: constant must be positive");
  const double cap = cap_constant * static_cast<double>(n) * std::log(1.0 / eps) / (eps * eps * eps);
  if (cap >= 1.8e19) return std::numeric_limits<std::uint64_t>::max();
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(cap)));
}

double hutchinson_norm(const LinearOperator& a, std::size_t k, BitSource& src) {
  if (k < 1) throw std::invalid_argument("hutchinson_norm: need at least one probe");
  WorkVector r(a.cols());
  WorkVector w(a.rows());
  double acc = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = src.next_sign();
    a.apply(r.span(), w.span());
    const double nw = norm2(w.span());
    acc += nw * nw;
  }
  return std::sqrt(acc / static_cast<double>(k));
}

NormEstimate estimate_norm(const LinearOperator& a, const LinearOperator& at, BitSource& src, std::size_t steps,
                           std::size_t probes) {
  const std::size_t n = a.cols();
  if (at.rows() != n || at.cols() != a.rows()) throw std::invalid_argument("estimate_norm: A^T dimensions disagree");
  if (n == 0) throw std::invalid_argument("estimate_norm: empty operator");
  if (steps == 0) steps = ceil_log2(n) + 1;
  const std::uint64_t q0 = a.queries() + at.queries();

  NormEstimate est;
  est.probe_seed = src.seed();
  est.Z_hat = hutchinson_norm(a, probes, src);
  if (!(est.Z_hat > 0.0) || !std::isfinite(est.Z_hat))
    throw std::invalid_argument("estimate_norm: every probe mapped to zero; the operator looks like zero");

  for (double c = est.Z_hat / std::sqrt(static_cast<double>(n)); c < est.Z_hat; c *= 2.0) est.candidates.push_back(c);
  est.candidates.push_back(est.Z_hat);

  WorkVector z0(n);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) z0[i] = src.next_gaussian();
    if (norm2(z0.span()) > 0.0) break;
    if (++est.retries > 3) throw std::runtime_error("estimate_norm: start vector was zero after 3 retries");
  }
  const double n0 = norm2(z0.span());
  for (std::size_t i = 0; i < n; ++i) z0[i] /= n0;

  WorkVector z(n);
  WorkVector w(a.rows());
  WorkVector u(n);
  for (double c : est.candidates) {
    std::copy(z0.data(), z0.data() + n, z.data());
    const double inv_c2 = 1.0 / (c * c);
    for (std::size_t s = 0; s < steps; ++s) {
      a.apply(z.span(), w.span());
      at.apply(w.span(), u.span());
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_c2 * u[i] + 0.125 * z[i];
      const double nz = norm2(z.span());
      for (std::size_t i = 0; i < n; ++i) z[i] /= nz;
    }
    a.apply(z.span(), w.span());
    const double e = norm2(w.span()) / norm2(z.span());
    est.candidate_estimates.push_back(e);
    est.Z = std::max(est.Z, e);
  }
  est.matvecs_used = a.queries() + at.queries() - q0;
  if (!(est.Z > 0.0)) throw std::runtime_error("estimate_norm: power iteration returned zero");
  return est;
}

std::string to_string(CgStatus s) {
  switch (s) {
    case CgStatus::converged: return "converged";
    case CgStatus::max_iterations: return "max_iterations";
    case CgStatus::breakdown: return "breakdown";
    case CgStatus::budget_exhausted: return "budget_exhausted";
  }
  return "unknown";
}

CgResult cg_normal_equations(const LinearOperator& m, std::span<const double> v, const CgOptions& opts) {
  const std::size_t n = v.size();
  if (m.rows() != n || m.cols() != n) throw std::invalid_argument("cg_normal_equations: dimension mismatch");
  if (!(opts.tol >= 0.0)) throw std::invalid_argument("cg_normal_equations: tolerance must be nonnegative");
  if (opts.check_every == 0) throw std::invalid_argument("cg_normal_equations: check cadence must be positive");

  CgResult res;
  res.certified_residual = std::numeric_limits<double>::quiet_NaN();
  WorkVector x(n), r(n), p(n), q(n);
  const double vnorm = norm2(v);
  if (vnorm == 0.0) {
    res.status = CgStatus::converged;
    res.certified_residual = 0.0;
    res.x = x.release_vector();
    return res;
  }
  const double rec_tol = opts.recurrence_tol < 0.0 ? opts.tol : opts.recurrence_tol;
  std::copy(v.begin(), v.end(), r.data());
  std::copy(v.begin(), v.end(), p.data());
  double rr = dot(r.span(), r.span());

  // q is free between iterations, so the default certificate uses it as scratch.
  auto certify = [&]() {
    double c;
    if (opts.true_residual) {
      c = opts.true_residual(x.span());
    } else {
      m.apply(x.span(), q.span());
      for (std::size_t i = 0; i < n; ++i) q[i] -= v[i];
      c = norm2(q.span()) / vnorm;
    }
    res.certified_residual = c;
    return c <= opts.tol;
  };

  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    if (opts.out_of_budget && opts.out_of_budget()) {
      res.status = CgStatus::budget_exhausted;
      break;
    }
    m.apply(p.span(), q.span());
    const double pq = dot(p.span(), q.span());
    if (!(pq > 0.0) || !std::isfinite(pq)) {
      res.status = CgStatus::breakdown;
      res.breakdown_curvature = pq / dot(p.span(), p.span());
      break;
    }
    const double alpha = rr / pq;
    axpy(alpha, p.span(), x.span());
    axpy(-alpha, q.span(), r.span());
    const double rr_new = dot(r.span(), r.span());
    res.iterations = it;
    const double rel = std::sqrt(rr_new) / vnorm;
    res.residual_history.push_back(rel);
    if ((it % opts.check_every == 0 || rel <= rec_tol || it == opts.max_iter) && certify()) {
      res.status = CgStatus::converged;
      break;
    }
    const double beta = rr_new / rr;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_new;
  }
  res.x = x.release_vector();
  return res;
}

nlohmann::json SolveReport::to_json(bool include_x) const {
  auto finite_or_null = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json j;
  j["schema"] = "obliv-solve-report";
  j["version"] = 1;
  j["eps"] = eps;
  j["delta"] = delta;
  j["succeeded"] = succeeded;
  j["cap_hit"] = cap_hit;
  j["cg_status"] = to_string(cg_status);
  j["residual_norm"] = finite_or_null(residual_norm);
  j["backward_ratio"] = finite_or_null(backward_ratio);
  j["perturbed_residual"] = finite_or_null(perturbed_residual);
  j["norm_estimate"] = norm_estimate;
  j["sigma"] = sigma;
  j["gamma"] = gamma;
  j["matvecs_used"] = matvecs_used;
  j["matvec_cap"] = matvec_cap;
  j["iterations"] = iterations;
  j["norm"] = {{"Z", norm.Z},
               {"Z_hat", norm.Z_hat},
               {"candidates", norm.candidates},
               {"candidate_estimates", norm.candidate_estimates},
               {"matvecs_used", norm.matvecs_used},
               {"retries", norm.retries},
               {"probe_seed", norm.probe_seed}};
  j["bits"] = bits.to_json();
  if (include_x) j["x"] = x;
  return j;
}

SolveReport solve_backward(const LinearOperator& a, const LinearOperator& at, std::span<const double> b,
                           const SolveConfig& cfg, BitSource& src) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("solve_backward: A must be square");
  if (at.rows() != n || at.cols() != n) throw std::invalid_argument("solve_backward: A^T dimensions disagree");
  if (b.size() != n) throw std::invalid_argument("solve_backward: right-hand side length mismatch");
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) throw std::invalid_argument("solve_backward: eps must lie in (0, 1)");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw std::invalid_argument("solve_backward: delta must lie in (0, 1)");
  if (cfg.residual_check_every == 0) throw std::invalid_argument("solve_backward: check cadence must be positive");
  const double bnorm = norm2(b);
  if (!(bnorm > 0.0)) throw std::invalid_argument("solve_backward: right-hand side must be nonzero");

  const std::uint64_t q0 = a.queries() + at.queries();
  auto used = [&] { return a.queries() + at.queries() - q0; };

  SolveReport rep;
  rep.eps = cfg.eps;
  rep.delta = cfg.delta;
  rep.matvec_cap = cfg.max_matvecs ? cfg.max_matvecs : default_matvec_cap(n, cfg.eps, cfg.cap_constant);
  rep.norm = estimate_norm(a, at, src, cfg.norm_steps, cfg.norm_probes);
  const double Z = rep.norm.Z;
  const double Zhat = rep.norm.Z_hat;
  rep.norm_estimate = Z;

  auto finish_without_solution = [&]() {
    rep.x.assign(n, 0.0);
    rep.cap_hit = true;
    rep.cg_status = CgStatus::budget_exhausted;
    rep.residual_norm = bnorm;
    rep.backward_ratio = std::numeric_limits<double>::infinity();
    rep.perturbed_residual = 1.0;
    rep.matvecs_used = used();
    return rep;
  };
  if (used() + 4 > rep.matvec_cap) return finish_without_solution();

  auto r = std::make_shared<const ObliviousPerturbation>(
      build_perturbation(n, cfg.eps, cfg.delta, cfg.perturbation, src));
  rep.bits = r->bits();

  // Forward products go to `a`, transposed ones to `at`, so both counters see every query.
  LinearOperator joint(
      n, n, std::max(a.eps_mach(), at.eps_mach()),
      [a](std::span<const double> in, std::span<double> out) { a.apply(in, out); },
      [at](std::span<const double> in, std::span<double> out) { at.apply(in, out); }, "A");
  const LinearOperator ahat = sum_op(joint, scaled_op(perturbation_operator(r), cfg.eps * Z));

  // The grid parameter must make the shift negligible: sigma * n <= eps * Z / 8.
  const double nd = static_cast<double>(n);
  const double ratio = 32.0 * nd * Zhat / (cfg.eps * Z);
  const double L_shift = std::max(4.0 * nd * nd * nd / cfg.delta, ratio * ratio);
  rep.gamma = draw_gamma(n, cfg.delta, L_shift, src);
  rep.sigma = rep.gamma * Zhat * std::sqrt(cfg.delta / nd);
  const LinearOperator atil = rank_one_shifted(ahat, rep.sigma);
  const LinearOperator atil_t = atil.transposed();
  const LinearOperator m = normal_equations_op(atil, atil_t);

  WorkVector v(n);
  atil_t.apply(b, v.span());

  CgOptions opts;
  opts.tol = cfg.cg_tolerance > 0.0 ? cfg.cg_tolerance : cfg.eps;
  opts.max_iter = std::numeric_limits<std::size_t>::max();
  opts.check_every = cfg.residual_check_every;
  opts.recurrence_tol = 0.0;
  opts.true_residual = [&](std::span<const double> x) {
    WorkVector t(n);
    atil.apply(x, t.span());
    for (std::size_t i = 0; i < n; ++i) t[i] -= b[i];
    return norm2(t.span()) / bnorm;
  };
  // An iteration costs two queries, a certificate one more, and the final residual one.
  opts.out_of_budget = [&] { return used() + 4 > rep.matvec_cap; };
  CgResult cg = cg_normal_equations(m, v.span(), opts);

  rep.x = std::move(cg.x);
  rep.iterations = cg.iterations;
  rep.cg_status = cg.status;
  rep.perturbed_residual = cg.certified_residual;
  rep.cap_hit = cg.status == CgStatus::budget_exhausted;
  {
    WorkVector t(n);
    a.apply(rep.x, t.span());
    for (std::size_t i = 0; i < n; ++i) t[i] -= b[i];
    rep.residual_norm = norm2(t.span());
  }
  const double xnorm = norm2(rep.x);
  rep.backward_ratio = xnorm > 0.0 ? rep.residual_norm / (Z * xnorm) : std::numeric_limits<double>::infinity();
  rep.succeeded = !rep.cap_hit && rep.backward_ratio <= 4.0 * cfg.eps;
  rep.matvecs_used = used();
  return rep;
}

double backward_error(const LinearOperator& a, std::span<const double> x, std::span<const double> b, double norm_a) {
  if (x.size() != a.cols() || b.size() != a.rows()) throw std::invalid_argument("backward_error: dimension mismatch");
  if (!(norm_a > 0.0)) throw std::invalid_argument("backward_error: norm must be positive");
  const double xnorm = norm2(x);
  if (xnorm == 0.0) return std::numeric_limits<double>::infinity();
  WorkVector t(a.rows());
  a.apply(x, t.span());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] -= b[i];
  return norm2(t.span()) / (norm_a * xnorm);
}

}  // namespace obliv
