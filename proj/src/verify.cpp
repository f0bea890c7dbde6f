#include "qcert/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "qcert/classical.hpp"
#include "qcert/errors.hpp"
#include "qcert/haar_oracle.hpp"
#include "qcert/instances.hpp"
#include "qcert/spectrum.hpp"

namespace qcert {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

HermitianMatrix random_hermitian(std::size_t d, Rng& rng) {
  const CMatrix g = ginibre(d, d, rng);
  CMatrix h = g + g.adjoint();
  h *= 0.5;
  return HermitianMatrix(h);
}

HermitianMatrix random_traceless(std::size_t d, Rng& rng) {
  CMatrix h = random_hermitian(d, rng).matrix();
  const cplx shift = h.trace() / static_cast<double>(d);
  for (std::size_t i = 0; i < d; ++i) h(i, i) -= shift;
  return HermitianMatrix(h);
}

std::size_t uniform_int(std::size_t lo, std::size_t hi, Rng& rng) {
  return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

// Dirichlet(1, ..., 1) entries, with a chance of repeated values so buckets have several entries.
std::vector<double> random_spectrum(std::size_t d, Rng& rng) {
  std::vector<double> v(d);
  const std::size_t distinct = uniform_int(1, d, rng);
  std::vector<double> levels(distinct);
  for (double& x : levels) x = -std::log(1.0 - rng.uniform());
  for (std::size_t i = 0; i < d; ++i) v[i] = levels[i % distinct] * (1.0 + 0.05 * rng.uniform());
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (double& x : v) x /= s;
  return v;
}

// Random POVM with `outcomes` elements from the row blocks of a Haar isometry.
Povm random_povm(std::size_t d, std::size_t outcomes, Rng& rng) {
  const CMatrix w = haar_isometry(d * outcomes, d, rng);
  std::vector<CMatrix> factors;
  for (std::size_t z = 0; z < outcomes; ++z) {
    CMatrix f(d, d);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) f(a, b) = std::conj(w(z * d + b, a));
    factors.push_back(f);
  }
  return Povm(factors, {}, "random");
}

DensityMatrix random_block_state(const BucketDecomposition& b, Rng& rng) {
  CMatrix m(b.dim, b.dim);
  for (const auto& [j, idx] : b.buckets) {
    const CMatrix g = ginibre(idx.size(), idx.size(), rng);
    const CMatrix blk = g * g.adjoint();
    for (std::size_t x = 0; x < idx.size(); ++x)
      for (std::size_t y = 0; y < idx.size(); ++y) m(idx[x], idx[y]) = blk(x, y);
  }
  m *= 1.0 / m.trace().real();
  return DensityMatrix(m);
}

CMatrix random_psd(std::size_t d, std::size_t rank, Rng& rng) {
  const CMatrix g = ginibre(d, rank, rng);
  return g * g.adjoint();
}

CheckResult finish(CheckResult r, std::size_t failures) {
  r.pass = failures == 0;
  r.metrics["failures"] = failures;
  return r;
}

}  // namespace

nlohmann::json to_json(const CheckResult& r) {
  return {{"name", r.name}, {"pass", r.pass}, {"cases", r.cases}, {"summary", r.summary}, {"metrics", r.metrics}};
}

CheckResult check_moments(const std::vector<std::size_t>& dims, std::size_t samples, std::uint64_t seed) {
  CheckResult r;
  r.name = "moments";
  bool first_ok = true, second_ok = true;
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream sum;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const std::size_t d = dims[k];
    Rng rng(seed, k);
    const auto general = verify_moments_basic(random_hermitian(d, rng), samples, rng);
    const auto traceless = verify_moments_basic(random_traceless(d, rng), samples, rng);
    first_ok = first_ok && general.first_pass && traceless.first_pass;
    second_ok = second_ok && traceless.second_pass;
    rows.push_back({{"d", d},
                    {"first_general", general.first.mean},
                    {"first_general_expected", general.first_expected},
                    {"first_general_se", general.first.std_error},
                    {"first_traceless", traceless.first.mean},
                    {"first_traceless_expected", traceless.first_expected},
                    {"first_traceless_se", traceless.first.std_error},
                    {"second", traceless.second.mean},
                    {"second_se", traceless.second.std_error},
                    {"second_bound", traceless.second_bound},
                    {"jensen_floor", traceless.jensen_floor},
                    {"second_times_d2_over_hs4", traceless.second_ratio_d2}});
    sum << " d=" << d << " E[Z^2]/bound=" << fmt(traceless.second.mean / traceless.second_bound)
        << " E[Z^2]d^2/|M|^4=" << fmt(traceless.second_ratio_d2);
    r.cases += 2;
  }
  r.metrics["per_d"] = rows;
  r.metrics["first_clause_pass"] = first_ok;
  r.metrics["second_clause_pass"] = second_ok;
  r.pass = first_ok && second_ok;
  r.summary = std::string("first moment ") + (first_ok ? "ok" : "FAIL") + ", second-moment bound 1.5|M|^4/d^4 " +
              (second_ok ? "ok" : "FAIL") + ";" + sum.str();
  return r;
}

CheckResult check_weingarten(std::size_t cases, std::size_t mc_samples, std::uint64_t seed, std::size_t threads) {
  CheckResult r;
  r.name = "weingarten";
  double worst_exact = 0.0;
  for (std::size_t d = 2; d <= 8; ++d) {
    const auto wg = weingarten_table(2, d);
    const double dd = static_cast<double>(d);
    worst_exact = std::max(worst_exact, std::abs(wg.by_class().at({1, 1}) - 1.0 / (dd * dd - 1.0)));
    worst_exact = std::max(worst_exact, std::abs(wg.by_class().at({2}) + 1.0 / (dd * (dd * dd - 1.0))));
  }
  struct Row {
    std::size_t l = 0, d = 0;
    double exact = 0.0, mc = 0.0, se = 0.0, z = 0.0;
  };
  std::vector<Row> rows(cases);
  parallel_for(cases, threads, [&](std::size_t k) {
    Rng rng(seed, k);
    Row& row = rows[k];
    row.l = uniform_int(1, 3, rng);
    row.d = uniform_int(std::max<std::size_t>(row.l, 2), 4, rng);
    const auto a = random_hermitian(row.d, rng);
    const auto b = random_hermitian(row.d, rng);
    row.exact = haar_moment(a, b, row.l);
    const auto mc = haar_moment_mc(a, b, row.l, mc_samples, rng);
    row.mc = mc.mean;
    row.se = mc.std_error;
    row.z = mc.std_error > 0.0 ? std::abs(mc.mean - row.exact) / mc.std_error : 0.0;
  });
  std::size_t failures = worst_exact <= 1e-12 ? 0 : 1;
  double worst_z = 0.0;
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& row : rows) {
    if (row.z > 4.0) ++failures;
    worst_z = std::max(worst_z, row.z);
    jr.push_back({{"l", row.l}, {"d", row.d}, {"exact", row.exact}, {"mc", row.mc}, {"se", row.se}, {"z", row.z}});
  }
  r.cases = cases + 14;
  r.metrics["max_exact_error_l2"] = worst_exact;
  r.metrics["max_z"] = worst_z;
  r.metrics["fuzzed"] = jr;
  r.summary = "l=2 max error " + fmt(worst_exact) + ", Monte Carlo max |z| " + fmt(worst_z) + " over " +
              std::to_string(cases) + " cases";
  return finish(r, failures);
}

CheckResult check_instances(std::size_t draws, std::uint64_t seed) {
  CheckResult r;
  r.name = "instances";
  std::size_t failures = 0;
  double worst_psd = 0.0, worst_trace = 0.0, worst_pan = 0.0, worst_off = 0.0, worst_corner = 0.0;
  auto audit = [&](const DensityMatrix& rho, const DensityMatrix& sigma, double target, double tol, double& worst) {
    const double lmin = eigenvalues(rho.hermitian()).front();
    const double tr_err = std::abs(rho.hermitian().trace() - 1.0);
    const double td_err = std::abs(trace_distance(rho, sigma) - target);
    worst_psd = std::max(worst_psd, -lmin);
    worst_trace = std::max(worst_trace, tr_err);
    worst = std::max(worst, td_err);
    if (lmin < -1e-9 || tr_err > 1e-9 || td_err > tol) ++failures;
  };
  Rng rng(seed, 0);
  for (std::size_t k = 0; k < draws;) {
    const auto v = random_spectrum(uniform_int(2, 16, rng), rng);
    const auto b = bucketize_entries(v);
    bool multi = false;
    for (const auto& [j, idx] : b.buckets) multi = multi || idx.size() > 1;
    if (!multi) continue;
    const double eps = (0.05 + 0.95 * rng.uniform()) * paninski_saturation(b);
    const auto sigma = DensityMatrix::diagonal(v);
    audit(sample_paninski(sigma, tune_paninski(Spectrum(v), eps), rng), sigma, eps, 1e-8, worst_pan);
    ++k;
  }
  for (std::size_t k = 0; k < draws;) {
    const auto v = random_spectrum(uniform_int(2, 16, rng), rng);
    OffDiagInstance probe;
    try {
      probe = make_offdiag(Spectrum(v), 1e-12);
    } catch (const UnavailableError&) {
      continue;
    }
    const double eps = (0.05 + 0.95 * rng.uniform()) * probe.max_feasible;
    const auto sigma = DensityMatrix::diagonal(v);
    audit(build_offdiag(sigma, make_offdiag(Spectrum(v), eps), rng), sigma, eps, 1e-8, worst_off);
    ++k;
  }
  for (std::size_t k = 0; k < draws; ++k) {
    const std::size_t d = uniform_int(2, 8, rng);
    std::vector<double> v(d, 0.0);
    v[0] = 0.75 + 0.2 * rng.uniform();
    auto rest = random_spectrum(d - 1, rng);
    for (std::size_t i = 1; i < d; ++i) v[i] = (1.0 - v[0]) * rest[i - 1];
    double eps = 0.5 * (0.05 + 0.95 * rng.uniform());
    try {
      make_corner(Spectrum(v), eps);
    } catch (const InfeasibleError& e) {
      eps = (0.05 + 0.95 * rng.uniform()) * e.max_feasible();
    }
    const auto sigma = DensityMatrix::diagonal(v);
    const auto inst = make_corner(Spectrum(v), eps);
    const int u = rng.uniform() < 0.5 ? 1 : -1;
    audit(build_corner(sigma, inst, u), sigma, corner_trace_distance(eps), 1e-10, worst_corner);
  }
  r.cases = 3 * draws;
  r.metrics["max_negative_eigenvalue"] = worst_psd;
  r.metrics["max_trace_error"] = worst_trace;
  r.metrics["max_distance_error_paninski"] = worst_pan;
  r.metrics["max_distance_error_offdiag"] = worst_off;
  r.metrics["max_distance_error_corner"] = worst_corner;
  r.summary = "distance errors paninski " + fmt(worst_pan) + ", offdiag " + fmt(worst_off) + ", corner " +
              fmt(worst_corner) + "; max negative eigenvalue " + fmt(worst_psd);
  return finish(r, failures);
}

CheckResult check_corner(std::size_t schedules, double eps, std::size_t n, std::uint64_t seed) {
  CheckResult r;
  r.name = "corner";
  const double floor = std::pow(1.0 - 32.0 * eps * eps / 9.0, static_cast<double>(n) / 2.0);
  std::size_t failures = 0;
  double min_ratio = std::numeric_limits<double>::infinity(), max_tv = 0.0;
  Rng rng(seed, 0);
  for (std::size_t k = 0; k < schedules; ++k) {
    const double l1 = 0.75 + 0.15 * rng.uniform();
    const auto sigma = DensityMatrix::diagonal({l1, 1.0 - l1});
    const auto inst = make_corner(Spectrum(sigma.diag()), eps);
    const auto ens = StateEnsemble::uniform({build_corner(sigma, inst, 1), build_corner(sigma, inst, -1)});
    NonadaptiveSchedule sched;
    for (std::size_t t = 0; t < n; ++t) sched.povms.push_back(basis_povm(haar_unitary(2, rng), "haar-basis"));
    const auto rec = exact_transcript_divergence(sigma, ens, sched);
    min_ratio = std::min(min_ratio, rec.min_likelihood_ratio);
    max_tv = std::max(max_tv, rec.tv);
    if (rec.min_likelihood_ratio < floor - 1e-12 || rec.tv > 1.0 - floor) ++failures;
  }
  r.cases = schedules;
  r.metrics["floor"] = floor;
  r.metrics["min_likelihood_ratio"] = min_ratio;
  r.metrics["max_tv"] = max_tv;
  r.summary = "min likelihood ratio " + fmt(min_ratio) + " >= " + fmt(floor) + ", max TV " + fmt(max_tv) +
              " <= " + fmt(1.0 - floor);
  return finish(r, failures);
}

CheckResult check_ingster(std::size_t schedules, double eps, std::size_t n_max, std::uint64_t seed) {
  CheckResult r;
  r.name = "ingster";
  std::size_t failures = 0;
  double worst_gap = -std::numeric_limits<double>::infinity(), max_chi = 0.0;
  Rng rng(seed, 0);
  for (std::size_t k = 0; k < schedules; ++k) {
    const double l1 = 0.75 + 0.15 * rng.uniform();
    const auto sigma = DensityMatrix::diagonal({l1, 1.0 - l1});
    const auto inst = make_corner(Spectrum(sigma.diag()), eps);
    const std::vector<DensityMatrix> alts{build_corner(sigma, inst, 1), build_corner(sigma, inst, -1)};
    for (std::size_t n = 1; n <= n_max; ++n) {
      NonadaptiveSchedule sched;
      std::vector<std::vector<double>> phis;
      for (std::size_t t = 0; t < n; ++t) {
        sched.povms.push_back(basis_povm(haar_unitary(2, rng), "haar-basis"));
        std::vector<double> step;
        for (const auto& a : alts)
          for (const auto& b : alts) step.push_back(phi(sched.povms.back(), sigma, a, b));
        phis.push_back(step);
      }
      const double chi = exact_transcript_divergence(sigma, StateEnsemble::uniform(alts), sched).chi2;
      const auto ing = ingster_bound(phis, n);
      // The ensemble is finite, so the bound is exact and its standard error is zero.
      const double gap = chi - ing.bound;
      worst_gap = std::max(worst_gap, gap);
      max_chi = std::max(max_chi, chi);
      if (gap > 3.0 * ing.std_error + 1e-12) ++failures;
      ++r.cases;
    }
  }
  r.metrics["max_chi2_minus_bound"] = worst_gap;
  r.metrics["max_chi2"] = max_chi;
  r.summary = "max (chi2 - bound) " + fmt(worst_gap) + " over " + std::to_string(r.cases) + " schedules, N <= " +
              std::to_string(n_max);
  return finish(r, failures);
}

CheckResult check_basic_power(std::size_t d, std::size_t trials, const CertifyConfig& cfg, std::uint64_t seed,
                              std::size_t threads) {
  CheckResult r;
  r.name = "basic-power";
  TrialPlan null_plan;
  null_plan.sigma = DensityMatrix::maximally_mixed(d);
  null_plan.full = false;
  null_plan.alt_eps = cfg.eps;
  TrialPlan alt_plan = null_plan;
  alt_plan.family = HiddenFamily::HsFar;
  alt_plan.experiment = 1;
  const auto n = summarize(run_trials(null_plan, cfg, trials, seed, threads));
  const auto a = summarize(run_trials(alt_plan, cfg, trials, seed, threads));
  const double null_err = 1.0 - n.yes_rate(), alt_err = 1.0 - a.no_rate();
  r.cases = 2 * trials;
  r.metrics = {{"d", d},           {"eps_hs", cfg.eps},          {"delta", cfg.delta},
               {"null_error", null_err}, {"alt_error", alt_err}, {"mean_copies", n.mean_copies}};
  r.pass = null_err <= 0.15 && alt_err <= 0.15;
  r.summary = "d=" + std::to_string(d) + " null error " + fmt(null_err) + ", alternative error " + fmt(alt_err) +
              " (<= 0.15), copies " + fmt(n.mean_copies);
  return r;
}

CheckResult check_basic_sweep(const SweepSettings& s, double slope_lo, double slope_hi, std::size_t threads) {
  CheckResult r;
  r.name = "basic-sweep";
  const auto res = run_sweep(s, threads);
  bool monotone = true;
  for (std::size_t i = 1; i < res.points.size(); ++i)
    monotone = monotone && res.points[i].min_copies >= res.points[i - 1].min_copies;
  r.cases = res.points.size();
  r.metrics = to_json(res);
  r.metrics["settings"] = to_json(s);
  r.metrics["monotone"] = monotone;
  r.pass = res.fit.defined && res.fit.slope >= slope_lo && res.fit.slope <= slope_hi;
  std::ostringstream os;
  os << "N =";
  for (const auto& p : res.points) os << " " << p.min_copies << "@d" << p.d;
  os << "; slope " << fmt(res.fit.slope) << " in [" << slope_lo << ", " << slope_hi << "]"
     << (monotone ? ", monotone" : ", not monotone");
  r.summary = os.str();
  return r;
}

CheckResult check_certify_two_bucket(std::size_t trials, const CertifyConfig& cfg, std::uint64_t seed,
                                     std::size_t threads) {
  CheckResult r;
  r.name = "certify-two-bucket";
  const std::vector<double> v{0.002, 0.002, 0.249, 0.249, 0.249, 0.083, 0.083, 0.083};
  const auto sigma = DensityMatrix::diagonal(v);
  TrialPlan plan;
  plan.sigma = sigma;
  plan.alt_eps = cfg.eps;
  plan.j = 2;
  plan.jp = 3;
  const auto null = summarize(run_trials(plan, cfg, trials, seed, threads));
  plan.family = HiddenFamily::OffDiagonal;
  plan.experiment = 1;
  const auto off = summarize(run_trials(plan, cfg, trials, seed, threads));
  plan.family = HiddenFamily::Tail;
  plan.experiment = 2;
  const auto tail = summarize(run_trials(plan, cfg, trials, seed, threads));
  r.cases = 3 * trials;
  r.metrics = {{"null_yes_rate", null.yes_rate()},  {"offdiag_no_rate", off.no_rate()},
               {"tail_no_rate", tail.no_rate()},    {"null_mean_copies", null.mean_copies},
               {"offdiag_mean_copies", off.mean_copies}, {"tail_mean_copies", tail.mean_copies},
               {"config", to_json(cfg)}};
  r.pass = null.yes_rate() >= 0.8 && off.no_rate() >= 0.8 && tail.no_rate() >= 0.8;
  r.summary = "null YES " + fmt(null.yes_rate()) + ", offdiag NO " + fmt(off.no_rate()) + ", tail NO " +
              fmt(tail.no_rate()) + " (each >= 0.8); null copies " + fmt(null.mean_copies);
  return r;
}

CheckResult check_certify_scaling(const std::vector<std::size_t>& dims, std::size_t trials, const CertifyConfig& cfg,
                                  std::uint64_t seed, std::size_t threads) {
  CheckResult r;
  r.name = "certify-scaling";
  const auto res = sweep_certify_mixed(dims, cfg, trials, seed, threads);
  r.cases = dims.size() * trials;
  r.metrics = to_json(res);
  r.pass = res.fit.defined && res.fit.slope >= 1.2 && res.fit.slope <= 1.8;
  r.summary = "copies on I/d grow as d^" + fmt(res.fit.slope) + " (expected in [1.2, 1.8])";
  return r;
}

CheckResult check_bounds() {
  CheckResult r;
  r.name = "bounds";
  std::size_t failures = 0;
  double worst_rel = 0.0;
  for (std::size_t d : {2, 4, 16, 64, 256}) {
    for (double eps : {1e-4, 1e-3}) {
      const auto b = predicted_bounds(Spectrum(std::vector<double>(d, 1.0 / static_cast<double>(d))), eps);
      const double expect = std::pow(static_cast<double>(d), 1.5) / (eps * eps);
      const double rel = std::abs(b.lower_nonadaptive - expect) / expect;
      worst_rel = std::max(worst_rel, rel);
      if (rel > 1e-12) ++failures;
      ++r.cases;
    }
  }
  const double eps = 1e-6;
  std::vector<double> xs, ys;
  nlohmann::json spiked = nlohmann::json::array();
  for (std::size_t d : {16, 64, 256, 1024}) {
    const double dd = static_cast<double>(d);
    std::vector<double> v(d + 1, 1.0 / (dd * dd));
    v[0] = 1.0 - 1.0 / dd;
    const auto b = predicted_bounds(Spectrum(v), eps);
    xs.push_back(dd);
    ys.push_back(b.lower_nonadaptive);
    spiked.push_back({{"d", d}, {"lower_nonadaptive", b.lower_nonadaptive}, {"upper", b.upper}});
    ++r.cases;
  }
  const auto fit = fit_loglog(xs, ys);
  if (!(fit.slope >= 0.35 && fit.slope <= 0.65)) ++failures;
  r.metrics["mixed_max_relative_error"] = worst_rel;
  r.metrics["spiked_eps"] = eps;
  r.metrics["spiked"] = spiked;
  r.metrics["spiked_slope"] = fit.slope;
  r.summary = "maximally mixed max relative error " + fmt(worst_rel) + "; spiked slope " + fmt(fit.slope) +
              " in [0.35, 0.65]";
  return finish(r, failures);
}

CheckResult check_pushforward(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  r.name = "pushforward";
  std::size_t failures = 0;
  double worst = 0.0;
  Rng rng(seed, 0);
  for (std::size_t k = 0; k < cases; ++k) {
    const std::size_t d = uniform_int(2, 8, rng);
    auto v = random_spectrum(d, rng);
    if (rng.uniform() < 0.3) v[uniform_int(0, d - 1, rng)] = 0.0;
    const auto b = bucketize_entries(v);
    const Povm m = random_povm(d, uniform_int(1, 4, rng), rng);
    const auto [pm, f] = project_povm_to_blocks(m, b);
    const auto rho = random_block_state(b, rng);
    const auto lhs = pushforward(outcome_distribution(rho, pm), f, m.size());
    const auto rhs = outcome_distribution(rho, m);
    double err = 0.0;
    for (std::size_t z = 0; z < m.size(); ++z) err = std::max(err, std::abs(lhs[z] - rhs[z]));
    worst = std::max(worst, err);
    if (err > 1e-10) ++failures;
  }
  r.cases = cases;
  r.metrics["max_error"] = worst;
  r.summary = "max pushforward error " + fmt(worst) + " over " + std::to_string(cases) + " cases";
  return finish(r, failures);
}

CheckResult check_tracepsd(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  r.name = "tracepsd";
  std::size_t failures = 0;
  double min_slack = std::numeric_limits<double>::infinity(), min_half = min_slack;
  Rng rng(seed, 0);
  for (std::size_t k = 0; k < cases; ++k) {
    const std::size_t da = uniform_int(1, 5, rng), dc = uniform_int(1, 5, rng), n = da + dc;
    const CMatrix rho = random_psd(n, uniform_int(1, n, rng), rng);
    std::vector<std::size_t> ia(da), ic(dc);
    std::iota(ia.begin(), ia.end(), 0);
    std::iota(ic.begin(), ic.end(), da);
    const double ta = rho.select(ia, ia).trace().real(), tc = rho.select(ic, ic).trace().real();
    const double bn = trace_norm(rho.select(ia, ic));
    const double scale = (ta + tc) * (ta + tc);
    const double slack = (ta * tc - bn * bn) / scale;
    const double half = ((ta + tc) / 2.0 - bn) / (ta + tc);
    min_slack = std::min(min_slack, slack);
    min_half = std::min(min_half, half);
    if (slack < -1e-8 || half < -1e-8) ++failures;
  }
  r.cases = cases;
  r.metrics["min_relative_slack"] = min_slack;
  r.metrics["min_relative_half_slack"] = min_half;
  r.summary = "min (Tr A Tr C - |B|_1^2)/Tr^2 " + fmt(min_slack) + ", min (Tr/2 - |B|_1)/Tr " + fmt(min_half);
  return finish(r, failures);
}

CheckResult check_schur(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  r.name = "schur";
  std::size_t failures = 0, positive = 0, skipped = 0;
  Rng rng(seed, 0);
  for (std::size_t k = 0; k < cases;) {
    const std::size_t da = uniform_int(1, 4, rng), dc = uniform_int(1, 4, rng);
    CMatrix a = random_psd(da, da, rng), c = random_psd(dc, dc, rng);
    for (std::size_t i = 0; i < da; ++i) a(i, i) += 0.1;
    for (std::size_t i = 0; i < dc; ++i) c(i, i) += 0.1;
    CMatrix b = ginibre(da, dc, rng);
    b *= 0.15 + 1.2 * rng.uniform();
    const HermitianMatrix ha(a), hc(c);
    const HermitianMatrix full(assemble_blocks(a, b, c));
    const double lmin = eigenvalues(full).front();
    // Draws whose smallest eigenvalue sits at the tolerance scale are redrawn.
    if (std::abs(lmin) < 1e-6) {
      ++skipped;
      continue;
    }
    const bool expect = is_psd(full);
    if (expect) ++positive;
    if (schur_psd_check(ha, b, hc) != expect) ++failures;
    ++k;
  }
  r.cases = cases;
  r.metrics["psd_cases"] = positive;
  r.metrics["redrawn_near_boundary"] = skipped;
  r.summary = std::to_string(cases - failures) + "/" + std::to_string(cases) + " agree with the eigensolver (" +
              std::to_string(positive) + " PSD)";
  return finish(r, failures);
}

CheckResult check_optimize(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  r.name = "optimize";
  std::size_t failures = 0, literal_violations = 0;
  double min_log_slack = std::numeric_limits<double>::infinity();
  Rng rng(seed, 0);
  for (std::size_t k = 0; k < cases; ++k) {
    std::vector<int> pool(20);
    std::iota(pool.begin(), pool.end(), 1);
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t want = uniform_int(1, 6, rng);
    std::vector<std::pair<int, double>> sd;  // (j, d_j)
    double used = 0.0;
    for (int j : pool) {
      if (sd.size() == want) break;
      const double room = (2.0 - used) * std::exp2(j);
      if (room < 1.0) continue;
      const double dj = std::floor(1.0 + rng.uniform() * std::min(room, 64.0));
      const double take = std::min(dj, std::floor(room));
      sd.emplace_back(j, take);
      used += take * std::exp2(-j);
    }
    if (sd.empty()) sd.emplace_back(1, 1.0);
    const double a = 0.1 + 2.9 * rng.uniform(), b = 0.1 + 2.9 * rng.uniform();
    const double s = static_cast<double>(sd.size());
    double lhs = -std::numeric_limits<double>::infinity(), sum = 0.0;
    for (const auto& [j, dj] : sd) {
      lhs = std::max(lhs, b * std::log(dj) - a * j * std::log(2.0));
      sum += dj * std::exp2(-j * a / b);
    }
    // log |p|_{a/b} = (b/a) log sum_j d_j 2^{-ja/b}
    const double log_norm = b / a * std::log(sum);
    const double corrected = -b * std::log(s) + a * log_norm;
    const double literal = -b * std::log(s) - a * log_norm;
    min_log_slack = std::min(min_log_slack, lhs - corrected);
    if (lhs < corrected - 1e-12) ++failures;
    if (lhs < literal - 1e-12) ++literal_violations;
  }
  r.cases = cases;
  r.metrics["min_log_slack"] = min_log_slack;
  r.metrics["literal_form_violations"] = literal_violations;
  r.summary = "max_j d_j^b 2^{-aj} >= |S|^{-b}|p|_{a/b}^a: min log slack " + fmt(min_log_slack) +
              "; literal exponent -a violated in " + std::to_string(literal_violations) + " cases";
  return finish(r, failures);
}

CheckResult check_geoseries(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  r.name = "geoseries";
  std::size_t failures = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  Rng rng(seed, 0);
  for (std::size_t k = 0; k < cases; ++k) {
    const double c = 1.0 + 4.0 * rng.uniform() + 1e-6;
    const std::size_t m = uniform_int(1, 12, rng);
    std::vector<double> v{std::exp(4.0 * rng.uniform() - 2.0)};
    for (std::size_t i = 1; i < m; ++i) v.push_back(v.back() / (c * (1.0 + rng.uniform())));
    const double p = 0.1 + 3.9 * rng.uniform(), q = 0.1 + 3.9 * rng.uniform();
    auto norm = [&](double e) {
      double s = 0.0;
      for (double x : v) s += std::pow(x / v[0], e);
      return v[0] * std::pow(s, 1.0 / e);
    };
    const double ratio = norm(p) / (std::pow(1.0 - std::pow(c, -q), 1.0 / q) * norm(q));
    min_ratio = std::min(min_ratio, ratio);
    if (ratio < 1.0 - 1e-12) ++failures;
  }
  r.cases = cases;
  r.metrics["min_ratio"] = min_ratio;
  r.summary = "min |v|_p / ((1-c^-q)^{1/q} |v|_q) = " + fmt(min_ratio);
  return finish(r, failures);
}

CheckResult check_sort_mix(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  r.name = "sort_mix";
  std::size_t failures = 0, full = 0;
  Rng rng(seed, 0);
  for (std::size_t k = 0; k < cases; ++k) {
    const std::size_t m = uniform_int(0, 8, rng), n = uniform_int(1, 8, rng);
    std::vector<double> u, v;
    std::vector<int> dv;
    double x = std::exp(-6.0 * rng.uniform());
    for (std::size_t i = 0; i < m; ++i) {
      u.push_back(x);
      x *= 2.0 + 2.0 * rng.uniform();
    }
    for (std::size_t i = 0; i < n; ++i) {
      v.push_back(std::exp(-6.0 * rng.uniform()) * (rng.uniform() < 0.2 && !v.empty() ? 0.0 : 1.0));
      dv.push_back(static_cast<int>(uniform_int(2, 6, rng)));
    }
    for (double& y : v)
      if (y == 0.0) y = 1e-3;
    std::sort(v.begin(), v.end());
    struct W {
      double value;
      bool is_u;
      std::size_t index;
    };
    std::vector<W> w;
    for (std::size_t i = 0; i < m; ++i) w.push_back({u[i], true, i});
    for (std::size_t i = 0; i < n; ++i) w.push_back({v[i], false, i});
    std::stable_sort(w.begin(), w.end(), [](const W& a, const W& b) { return a.value < b.value; });
    double total = 0.0;
    for (const auto& e : w) total += e.value * (e.is_u ? 1.0 : dv[e.index]);
    const double eps = total * rng.uniform() / 2.0;
    double prefix = 0.0;
    std::size_t b = 0;
    for (const auto& e : w) {
      const double add = e.value * (e.is_u ? 1.0 : dv[e.index]);
      if (prefix + add > 3.0 * eps) break;
      prefix += add;
      if (!e.is_u) b = e.index + 1;
    }
    if (b == n) {
      ++full;
      continue;
    }
    double vd = 0.0;
    for (std::size_t i = 0; i <= b; ++i) vd += v[i] * dv[i];
    if (!(vd > eps)) ++failures;
  }
  r.cases = cases;
  r.metrics["cases_with_b_equal_n"] = full;
  r.summary = std::to_string(cases - failures) + "/" + std::to_string(cases) + " satisfy b = n or sum_{i<=b+1} v_i d_i > eps (" +
              std::to_string(full) + " with b = n)";
  return finish(r, failures);
}

CheckResult check_phi_second_moment(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  r.name = "phi-second-moment";
  std::size_t failures = 0, literal_violations = 0, mc_failures = 0;
  double max_ratio = 0.0, max_literal_ratio = 0.0;
  Rng rng(seed, 0);
  for (std::size_t k = 0; k < cases;) {
    const std::size_t d = uniform_int(2, 12, rng);
    const auto v = rng.uniform() < 0.2 ? std::vector<double>(d, 1.0 / static_cast<double>(d)) : random_spectrum(d, rng);
    const auto b = bucketize_entries(v);
    std::vector<int> multi;
    for (const auto& [j, idx] : b.buckets)
      if (idx.size() > 1) multi.push_back(j);
    if (multi.empty()) continue;
    const double eps = (0.05 + 0.95 * rng.uniform()) * paninski_saturation(b);
    const auto inst = tune_paninski(Spectrum(v), eps);
    const int j = multi[uniform_int(0, multi.size() - 1, rng)];
    const auto& idx = b.buckets.at(j);
    const std::size_t dj = idx.size();
    const auto e_full = paninski_perturbation(inst);
    std::vector<double> ej(dj), sj(dj);
    for (std::size_t a = 0; a < dj; ++a) {
      ej[a] = e_full[idx[a]];
      sj[a] = v[idx[a]];
    }
    const CMatrix m = random_psd(dj, rng.uniform() < 0.5 ? 1 : uniform_int(1, dj, rng), rng);
    CMatrix mt = m;
    mt *= 1.0 / trace_product(m, CMatrix::diagonal(sj));
    const HermitianMatrix mh(mt), eh(CMatrix::diagonal(ej));
    const double second = haar_moment(mh, eh, 2);
    const double eps_j = inst.eps_j.at(j);
    const double ddj = static_cast<double>(dj);
    const double bound = 4.0 * std::exp2(2.0 * j) * eps_j * eps_j / (ddj + 1.0);
    const double literal = 2.0 * std::exp2(2.0 * j) * eps_j * eps_j / ddj;
    if (bound > 0.0) max_ratio = std::max(max_ratio, second / bound);
    if (literal > 0.0) max_literal_ratio = std::max(max_literal_ratio, second / literal);
    if (second > bound * (1.0 + 1e-9) + 1e-300) ++failures;
    if (second > literal * (1.0 + 1e-9)) ++literal_violations;
    if (k < 5) {
      // Monte Carlo cross-check of the exact Weingarten value.
      const auto mc = haar_moment_mc(mh, eh, 2, 20000, rng);
      if (std::abs(mc.mean - second) > 4.0 * mc.std_error + 1e-12) ++mc_failures;
    }
    ++k;
  }
  r.cases = cases;
  r.metrics["max_ratio_to_bound_4"] = max_ratio;
  r.metrics["max_ratio_to_literal_bound_2"] = max_literal_ratio;
  r.metrics["literal_form_violations"] = literal_violations;
  r.metrics["monte_carlo_mismatches"] = mc_failures;
  r.summary = "max E[g^2] / (4 2^{2j} eps_j^2/(d_j+1)) = " + fmt(max_ratio) + "; literal 2 2^{2j} eps_j^2/d_j exceeded in " +
              std::to_string(literal_violations) + " cases (max ratio " + fmt(max_literal_ratio) + ")";
  return finish(r, failures + mc_failures);
}

CheckResult check_offdiag_second_moment(std::size_t cases, std::size_t draws, double c, std::uint64_t seed) {
  CheckResult r;
  r.name = "offdiag-second-moment";
  std::size_t failures = 0;
  double max_ratio = 0.0;
  Rng rng(seed, 0);
  for (std::size_t k = 0; k < cases;) {
    const std::size_t d = uniform_int(2, 10, rng);
    const auto v = random_spectrum(d, rng);
    OffDiagInstance probe;
    try {
      probe = make_offdiag(Spectrum(v), 1e-12);
    } catch (const UnavailableError&) {
      continue;
    }
    const double eps = (0.05 + 0.95 * rng.uniform()) * probe.max_feasible;
    const auto inst = make_offdiag(Spectrum(v), eps);
    const auto sigma = DensityMatrix::diagonal(v);
    const Povm m = rng.uniform() < 0.5 ? basis_povm(haar_unitary(d, rng)) : random_povm(d, 3, rng);
    const auto p0 = outcome_distribution(sigma, m);
    double s = 0.0, s2 = 0.0;
    for (std::size_t t = 0; t < draws; ++t) {
      const CMatrix w = haar_isometry(inst.rows.size(), inst.cols.size(), rng);
      const CMatrix dw = offdiag_perturbation(d, inst, w);
      double val = 0.0;
      for (std::size_t z = 0; z < m.size(); ++z) {
        if (p0[z] <= 1e-15) continue;
        const CMatrix e = m.element(z);
        const double g = trace_product(e, dw) / p0[z];
        val += p0[z] * g * g;
      }
      s += val;
      s2 += val * val;
    }
    const double nd = static_cast<double>(draws);
    const double mean = s / nd;
    const double se = std::sqrt(std::max(0.0, s2 / nd - mean * mean) / (nd - 1.0));
    const double dcols = static_cast<double>(inst.cols.size());
    const double bound = c * eps * eps / (dcols * dcols * std::exp2(-inst.jp));
    max_ratio = std::max(max_ratio, mean / bound);
    if (mean - 3.0 * se > bound) ++failures;
    ++k;
  }
  r.cases = cases;
  r.metrics["constant"] = c;
  r.metrics["max_ratio_to_bound"] = max_ratio;
  r.summary = "max E[g^2] / (" + fmt(c) + " eps^2/(d_j'^2 2^{-j'})) = " + fmt(max_ratio);
  return finish(r, failures);
}

CheckResult check_paninski_mean(std::size_t draws, std::uint64_t seed) {
  CheckResult r;
  r.name = "paninski-mean";
  Rng rng(seed, 0);
  const std::vector<double> v{0.3, 0.3, 0.1, 0.1, 0.1, 0.1};
  const auto sigma = DensityMatrix::diagonal(v);
  const auto inst = tune_paninski(Spectrum(v), 0.2);
  const CMatrix col = CMatrix::column(haar_vector(v.size(), rng));
  const CMatrix element = col * col.adjoint();
  double s = 0.0, s2 = 0.0;
  for (std::size_t t = 0; t < draws; ++t) {
    const double g = likelihood_g(element, sigma, sample_paninski(sigma, inst, rng));
    s += g;
    s2 += g * g;
  }
  const double nd = static_cast<double>(draws);
  const double mean = s / nd;
  const double se = std::sqrt(std::max(0.0, s2 / nd - mean * mean) / (nd - 1.0));
  const double z = se > 0.0 ? std::abs(mean) / se : 0.0;
  r.cases = draws;
  r.metrics = {{"mean", mean}, {"std_error", se}, {"z", z}};
  r.pass = z <= 5.0;
  r.summary = "mean g " + fmt(mean) + " (" + fmt(z) + " standard errors from 0)";
  return r;
}

CheckResult check_phi_tail(std::size_t d, std::size_t pairs, std::uint64_t seed) {
  CheckResult r;
  r.name = "phi-tail";
  Rng rng(seed, 0);
  const double eps = 0.5;
  const auto sigma = DensityMatrix::maximally_mixed(d);
  const auto inst = tune_paninski(Spectrum(sigma.diag()), eps);
  const Povm m = basis_povm(haar_unitary(d, rng));
  std::vector<double> phis(pairs);
  for (auto& x : phis) x = phi(m, sigma, sample_paninski(sigma, inst, rng), sample_paninski(sigma, inst, rng));
  const double dd = static_cast<double>(d);
  // Audited constants for this ensemble: varsigma = L = eps / sqrt(d).
  const double varsigma = eps / std::sqrt(dd), lip = varsigma;
  double sd = 0.0;
  for (double x : phis) sd += x * x;
  sd = std::sqrt(sd / static_cast<double>(pairs));
  nlohmann::json grid = nlohmann::json::array();
  bool monotone = true;
  double prev = 1.0, fitted_c = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 12; ++k) {
    const double s = 0.25 * k * sd;
    std::size_t above = 0;
    for (double x : phis)
      if (std::abs(x) > s) ++above;
    const double p = static_cast<double>(above) / static_cast<double>(pairs);
    monotone = monotone && p <= prev;
    prev = p;
    if (p > 0.0) fitted_c = std::min(fitted_c, std::log(1.2 / p) * lip * lip * varsigma * varsigma / (dd * s * s));
    grid.push_back({{"s", s}, {"tail", p}});
  }
  r.cases = pairs;
  r.metrics = {{"d", d}, {"eps", eps}, {"varsigma", varsigma}, {"L", lip}, {"phi_rms", sd},
               {"grid", grid}, {"monotone", monotone}, {"fitted_c", fitted_c}};
  r.pass = monotone && fitted_c > 0.0;
  r.summary = "tail of |phi| non-increasing: " + std::string(monotone ? "yes" : "no") + ", fitted c " + fmt(fitted_c);
  return r;
}

const std::vector<NamedCheck>& verification_battery() {
  static const std::vector<NamedCheck> battery = [] {
    std::vector<NamedCheck> b;
    auto add = [&](std::string name, std::string group, std::function<CheckResult(const VerifyOptions&)> run) {
      b.push_back({std::move(name), std::move(group), std::move(run)});
    };
    auto seed = [](const VerifyOptions& o, std::uint64_t k) { return Rng(o.seed, stream_id(900, k))(); };
    add("moments", "acceptance", [=](const VerifyOptions& o) { return check_moments({2, 4, 8}, 100000, seed(o, 1)); });
    add("weingarten", "acceptance",
        [=](const VerifyOptions& o) { return check_weingarten(20, 1000000, seed(o, 2), o.threads); });
    add("instances", "acceptance", [=](const VerifyOptions& o) { return check_instances(1000, seed(o, 3)); });
    add("corner", "acceptance", [=](const VerifyOptions& o) { return check_corner(50, 0.3, 5, seed(o, 4)); });
    add("ingster", "acceptance", [=](const VerifyOptions& o) { return check_ingster(20, 0.3, 4, seed(o, 5)); });
    add("basic-power", "acceptance", [=](const VerifyOptions& o) {
      CertifyConfig cfg = o.certify;
      cfg.eps = 0.3;
      cfg.delta = 0.1;
      return check_basic_power(16, 200, cfg, seed(o, 6), o.threads);
    });
    add("basic-sweep", "acceptance", [](const VerifyOptions& o) { return check_basic_sweep(o.sweep, 0.3, 0.7, o.threads); });
    add("certify-two-bucket", "acceptance", [=](const VerifyOptions& o) {
      CertifyConfig cfg = o.certify;
      cfg.eps = 0.3;
      cfg.delta = 0.2;
      return check_certify_two_bucket(100, cfg, seed(o, 7), o.threads);
    });
    add("certify-scaling", "scaling", [=](const VerifyOptions& o) {
      CertifyConfig cfg = o.certify;
      cfg.eps = 0.3;
      return check_certify_scaling({4, 8, 16}, 3, cfg, seed(o, 8), o.threads);
    });
    add("bounds", "acceptance", [](const VerifyOptions&) { return check_bounds(); });
    add("pushforward", "acceptance", [=](const VerifyOptions& o) { return check_pushforward(100, seed(o, 9)); });
    add("tracepsd", "property", [=](const VerifyOptions& o) { return check_tracepsd(1000, seed(o, 10)); });
    add("schur", "property", [=](const VerifyOptions& o) { return check_schur(1000, seed(o, 11)); });
    add("optimize", "property", [=](const VerifyOptions& o) { return check_optimize(1000, seed(o, 12)); });
    add("geoseries", "property", [=](const VerifyOptions& o) { return check_geoseries(1000, seed(o, 13)); });
    add("sort_mix", "property", [=](const VerifyOptions& o) { return check_sort_mix(1000, seed(o, 14)); });
    add("phi-second-moment", "property",
        [=](const VerifyOptions& o) { return check_phi_second_moment(1000, seed(o, 15)); });
    add("offdiag-second-moment", "measurement",
        [=](const VerifyOptions& o) { return check_offdiag_second_moment(200, 200, 16.0, seed(o, 16)); });
    add("paninski-mean", "measurement", [=](const VerifyOptions& o) { return check_paninski_mean(10000, seed(o, 17)); });
    add("phi-tail", "measurement", [=](const VerifyOptions& o) { return check_phi_tail(8, 10000, seed(o, 18)); });
    return b;
  }();
  return battery;
}

const NamedCheck& find_check(const std::string& name) {
  for (const auto& c : verification_battery())
    if (c.name == name) return c;
  throw ValidationError("unknown check: " + name);
}

}  // namespace qcert
