#include "qcert/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "qcert/errors.hpp"
#include "qcert/instances.hpp"
#include "qcert/spectrum.hpp"

namespace qcert {

namespace {

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t experiment, std::uint64_t trial) {
  Rng r(master, stream_id(experiment, trial));
  return r();
}

// Two-sided 95% Student t quantiles for df = 1..30.
double t_quantile_95(std::size_t df) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                 2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                 2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (df == 0) return std::numeric_limits<double>::infinity();
  return df <= 30 ? table[df - 1] : 1.96;
}

TrialPlan mixed_plan(std::size_t d, HiddenFamily family, bool full, double alt_eps, std::uint64_t experiment) {
  TrialPlan plan{DensityMatrix::maximally_mixed(d), family, full, alt_eps, std::nullopt, std::nullopt};
  plan.experiment = experiment;
  return plan;
}

}  // namespace

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

DensityMatrix hs_far_from_mixed(std::size_t d, double hs, Rng& rng) {
  if (d < 2) throw ValidationError("an HS-far state needs d >= 2");
  const double dd = static_cast<double>(d);
  const double s = hs / std::sqrt(1.0 - 1.0 / dd);
  if (!(s > 0.0 && s <= 1.0)) throw InfeasibleError("HS gap too large for a mixture with a pure state", std::sqrt(1.0 - 1.0 / dd));
  const CMatrix psi = CMatrix::column(haar_vector(d, rng));
  CMatrix m = CMatrix::identity(d);
  m *= (1.0 - s) / dd;
  m += s * (psi * psi.adjoint());
  return DensityMatrix(m);
}

RateSummary summarize(const std::vector<TrialRecord>& rows) {
  RateSummary s;
  s.trials = rows.size();
  double copies = 0.0;
  for (const auto& r : rows) {
    if (r.answer == Answer::Yes) ++s.yes;
    else if (r.answer == Answer::No) ++s.no;
    else ++s.inconclusive;
    copies += static_cast<double>(r.copies);
  }
  s.mean_copies = rows.empty() ? 0.0 : copies / static_cast<double>(rows.size());
  return s;
}

std::string to_string(HiddenFamily f) {
  switch (f) {
    case HiddenFamily::Null: return "null";
    case HiddenFamily::HsFar: return "hs-far";
    case HiddenFamily::OffDiagonal: return "offdiag";
    case HiddenFamily::Tail: return "tail";
    case HiddenFamily::Paninski: return "paninski";
  }
  return "?";
}

HiddenFamily hidden_family_from_string(const std::string& s) {
  if (s == "null") return HiddenFamily::Null;
  if (s == "hs-far") return HiddenFamily::HsFar;
  if (s == "offdiag") return HiddenFamily::OffDiagonal;
  if (s == "tail") return HiddenFamily::Tail;
  if (s == "paninski") return HiddenFamily::Paninski;
  throw ValidationError("unknown hidden-state family: " + s);
}

DensityMatrix tail_alternative(const std::vector<double>& lambdas, double eps) {
  const auto removal = remove_mass_upper(Spectrum(lambdas), eps);
  if (removal.tail.empty()) throw UnavailableError("tail alternative needs a nonempty tail");
  const double shift = eps / 2.0;
  std::vector<bool> in_tail(lambdas.size(), false);
  for (std::size_t i : removal.tail) in_tail[i] = true;
  double rest = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    if (!in_tail[i]) rest += lambdas[i];
  if (rest <= shift) throw InfeasibleError("surviving mass cannot fund the tail shift", 2.0 * rest);
  auto v = lambdas;
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = in_tail[i] ? v[i] + shift / static_cast<double>(removal.tail.size()) : v[i] * (1.0 - shift / rest);
  return DensityMatrix::diagonal(v);
}

DensityMatrix draw_hidden_state(const TrialPlan& plan, Rng& rng) {
  const std::size_t d = plan.sigma.dim();
  switch (plan.family) {
    case HiddenFamily::Null:
      return plan.sigma;
    case HiddenFamily::HsFar: {
      const auto mm = DensityMatrix::maximally_mixed(d);
      if ((plan.sigma.matrix() - mm.matrix()).max_abs() > 1e-12)
        throw ValidationError("the HS-far family is defined around the maximally mixed state");
      return hs_far_from_mixed(d, plan.alt_eps, rng);
    }
    case HiddenFamily::OffDiagonal:
      return build_offdiag(plan.sigma, make_offdiag(Spectrum(plan.sigma.diag()), plan.alt_eps, plan.j, plan.jp), rng);
    case HiddenFamily::Tail:
      return tail_alternative(plan.sigma.diag(), plan.alt_eps);
    case HiddenFamily::Paninski:
      return sample_paninski(plan.sigma, tune_paninski(Spectrum(plan.sigma.diag()), plan.alt_eps), rng);
  }
  throw ValidationError("unknown family");
}

std::vector<TrialRecord> run_trials(const TrialPlan& plan, const CertifyConfig& cfg, std::size_t trials,
                                    std::uint64_t master_seed, std::size_t threads) {
  if (trials == 0) throw ValidationError("trials must be at least 1");
  cfg.validate();
  std::vector<TrialRecord> rows(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    const auto start = std::chrono::steady_clock::now();
    TrialRecord& r = rows[t];
    r.seed = trial_seed(master_seed, plan.experiment, t);
    r.family = to_string(plan.family);
    Rng state_rng(r.seed, 1);
    CopySource src(draw_hidden_state(plan, state_rng), plan.budget, Rng(r.seed, 2));
    CertifyConfig c = cfg;
    c.seed = r.seed;
    const Verdict v = plan.full ? certify(src, plan.sigma, c) : basic_certify(src, plan.sigma, c.eps, c.delta, c);
    r.answer = v.answer;
    r.copies = v.copies_used;
    r.fired = v.fired;
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });
  return rows;
}

CalibrationResult calibrate_basic(std::size_t d, double eps, double c_l2, const std::vector<double>& grid,
                                  std::size_t trials, std::uint64_t seed, double target, std::size_t threads) {
  CalibrationResult res;
  res.d = d;
  res.eps = eps;
  res.c_l2 = c_l2;
  res.trials = trials;
  CertifyConfig cfg;
  cfg.eps = eps;
  cfg.c_l2 = c_l2;
  cfg.rounds = 1;
  const TrialPlan null_plan = mixed_plan(d, HiddenFamily::Null, false, eps, 0);
  const TrialPlan alt_plan = mixed_plan(d, HiddenFamily::HsFar, false, eps, 1);
  for (double c : grid) {
    cfg.c_basic = c;
    SinglePower p;
    p.c_basic = c;
    p.null_accept = summarize(run_trials(null_plan, cfg, trials, seed, threads)).yes_rate();
    p.alt_reject = summarize(run_trials(alt_plan, cfg, trials, seed, threads)).no_rate();
    res.grid.push_back(p);
    if (!res.chosen && p.null_accept >= target && p.alt_reject >= target) res.chosen = c;
  }
  return res;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("fit needs matching vectors");
  SlopeFit f;
  const std::size_t n = x.size();
  if (n < 2) return f;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw ValidationError("log-log fit needs positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) return f;
  f.defined = true;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ly[i] - f.intercept - f.slope * lx[i];
      sse += r * r;
    }
    f.std_error = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    const double t = t_quantile_95(n - 2);
    f.ci_low = f.slope - t * f.std_error;
    f.ci_high = f.slope + t * f.std_error;
  } else {
    f.std_error = std::numeric_limits<double>::infinity();
    f.ci_low = -std::numeric_limits<double>::infinity();
    f.ci_high = std::numeric_limits<double>::infinity();
  }
  return f;
}

SweepResult sweep_basic(const std::vector<std::size_t>& dims, const CertifyConfig& cfg, std::size_t trials,
                        std::uint64_t seed, double target, std::size_t threads) {
  SweepResult res;
  std::vector<double> xs, ys;
  for (std::size_t d : dims) {
    const TrialPlan null_plan = mixed_plan(d, HiddenFamily::Null, false, cfg.eps, 2 * d);
    const TrialPlan alt_plan = mixed_plan(d, HiddenFamily::HsFar, false, cfg.eps, 2 * d + 1);
    SweepPoint pt;
    pt.d = d;
    auto evaluate = [&](std::uint64_t n, double& acc, double& rej) {
      CertifyConfig c = cfg;
      c.copies_per_round = n;
      ++pt.evaluations;
      acc = summarize(run_trials(null_plan, c, trials, seed, threads)).yes_rate();
      rej = summarize(run_trials(alt_plan, c, trials, seed, threads)).no_rate();
      return acc >= target && rej >= target;
    };
    double acc = 0.0, rej = 0.0;
    std::uint64_t hi = 8, lo = 0;
    while (!evaluate(hi, acc, rej)) {
      lo = hi;
      hi *= 2;
      if (hi > (std::uint64_t{1} << 40)) throw NumericError("sweep did not reach the target success rate");
    }
    double best_acc = acc, best_rej = rej;
    while (hi - lo > std::max<std::uint64_t>(1, lo / 32)) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      if (evaluate(mid, acc, rej)) {
        hi = mid;
        best_acc = acc;
        best_rej = rej;
      } else {
        lo = mid;
      }
    }
    pt.min_copies = hi;
    pt.null_accept = best_acc;
    pt.alt_reject = best_rej;
    res.points.push_back(pt);
    xs.push_back(static_cast<double>(d));
    ys.push_back(static_cast<double>(hi));
  }
  res.fit = fit_loglog(xs, ys);
  return res;
}

SweepResult sweep_certify_mixed(const std::vector<std::size_t>& dims, const CertifyConfig& cfg, std::size_t trials,
                                std::uint64_t seed, std::size_t threads) {
  SweepResult res;
  std::vector<double> xs, ys;
  for (std::size_t d : dims) {
    const TrialPlan plan = mixed_plan(d, HiddenFamily::Null, true, cfg.eps, 1000 + d);
    const auto s = summarize(run_trials(plan, cfg, trials, seed, threads));
    SweepPoint pt;
    pt.d = d;
    pt.min_copies = static_cast<std::uint64_t>(std::llround(s.mean_copies));
    pt.null_accept = s.yes_rate();
    pt.evaluations = 1;
    res.points.push_back(pt);
    xs.push_back(static_cast<double>(d));
    ys.push_back(s.mean_copies);
  }
  res.fit = fit_loglog(xs, ys);
  return res;
}

nlohmann::json to_json(const SweepSettings& s) {
  nlohmann::json j{{"dims", s.dims},     {"eps", s.eps},       {"delta", s.delta}, {"target", s.target},
                   {"trials", s.trials}, {"seed", s.seed},     {"c_l2", s.c_l2}};
  if (s.rounds) j["rounds"] = *s.rounds;
  return j;
}

SweepSettings sweep_settings_from_json(const nlohmann::json& j, SweepSettings base) {
  if (j.contains("dims")) base.dims = j.at("dims").get<std::vector<std::size_t>>();
  if (j.contains("eps")) base.eps = j.at("eps").get<double>();
  if (j.contains("delta")) base.delta = j.at("delta").get<double>();
  if (j.contains("target")) base.target = j.at("target").get<double>();
  if (j.contains("trials")) base.trials = j.at("trials").get<std::size_t>();
  if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("c_l2")) base.c_l2 = j.at("c_l2").get<double>();
  if (j.contains("rounds")) {
    if (j.at("rounds").is_null()) base.rounds.reset();
    else base.rounds = j.at("rounds").get<std::size_t>();
  }
  if (base.dims.empty()) throw ValidationError("sweep needs at least one dimension");
  if (!(base.target > 0.0 && base.target < 1.0)) throw ValidationError("sweep target must lie in (0, 1)");
  if (base.trials == 0) throw ValidationError("trials must be at least 1");
  return base;
}

SweepResult run_sweep(const SweepSettings& s, std::size_t threads) {
  CertifyConfig cfg;
  cfg.eps = s.eps;
  cfg.delta = s.delta;
  cfg.c_l2 = s.c_l2;
  cfg.rounds = s.rounds;
  return sweep_basic(s.dims, cfg, s.trials, s.seed, s.target, threads);
}

nlohmann::json to_json(const SweepResult& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points)
    pts.push_back({{"d", p.d},
                   {"copies", p.min_copies},
                   {"null_accept", p.null_accept},
                   {"alt_reject", p.alt_reject},
                   {"evaluations", p.evaluations}});
  nlohmann::json fit{{"defined", r.fit.defined}};
  if (r.fit.defined) {
    fit["slope"] = r.fit.slope;
    fit["intercept"] = r.fit.intercept;
    if (std::isfinite(r.fit.std_error)) {
      fit["std_error"] = r.fit.std_error;
      fit["ci95"] = {r.fit.ci_low, r.fit.ci_high};
    }
  }
  return {{"points", pts}, {"fit", fit}};
}

nlohmann::json to_json(const CalibrationResult& r) {
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& g : r.grid)
    grid.push_back({{"c_basic", g.c_basic}, {"null_accept", g.null_accept}, {"alt_reject", g.alt_reject}});
  nlohmann::json j{{"d", r.d}, {"eps", r.eps}, {"c_l2", r.c_l2}, {"trials", r.trials}, {"grid", grid}};
  j["chosen_c_basic"] = r.chosen ? nlohmann::json(*r.chosen) : nlohmann::json(nullptr);
  return j;
}

std::vector<double> family_spectrum(const SigmaSpec& s) {
  if (s.d == 0) throw ValidationError("d must be at least 1");
  const double d = static_cast<double>(s.d);
  if (s.family == "mm") return std::vector<double>(s.d, 1.0 / d);
  if (s.family == "rank") {
    if (s.rank == 0 || s.rank > s.d) throw ValidationError("rank must lie in [1, d]");
    std::vector<double> v(s.d, 0.0);
    for (std::size_t i = 0; i < s.rank; ++i) v[i] = 1.0 / static_cast<double>(s.rank);
    return v;
  }
  if (s.family == "spiked") {
    std::vector<double> v(s.d + 1, 1.0 / (d * d));
    v[0] = 1.0 - 1.0 / d;
    return v;
  }
  if (s.family == "geometric") {
    if (!(s.ratio > 0.0 && s.ratio <= 1.0)) throw ValidationError("geometric ratio must lie in (0, 1]");
    std::vector<double> v(s.d);
    double x = 1.0;
    for (double& y : v) {
      y = x;
      x *= s.ratio;
    }
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& y : v) y /= total;
    return v;
  }
  throw ValidationError("unknown spectrum family: " + s.family);
}

nlohmann::json to_json(const SigmaSpec& s) {
  return {{"family", s.family}, {"d", s.d}, {"rank", s.rank}, {"ratio", s.ratio}};
}

std::vector<double> spectrum_from_json(const nlohmann::json& j) {
  const nlohmann::json& arr = j.is_object() ? j.at("lambdas") : j;
  if (!arr.is_array() || arr.empty()) throw ValidationError("spectrum JSON needs a nonempty array of entries");
  std::vector<double> v;
  for (const auto& x : arr) {
    if (!x.is_number()) throw ValidationError("spectrum entries must be numbers");
    const double y = x.get<double>();
    if (!(y >= 0.0) || !std::isfinite(y)) throw ValidationError("spectrum entries must be finite and nonnegative");
    v.push_back(y);
  }
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (!(total > 0.0)) throw ValidationError("spectrum entries sum to zero and cannot be normalized");
  for (double& y : v) y /= total;
  return v;
}

}  // namespace qcert
