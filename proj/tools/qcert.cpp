// Batch driver: spectra, certification runs, sweeps, verification, bounds and exact divergences.
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qcert/classical.hpp"
#include "qcert/errors.hpp"
#include "qcert/experiments.hpp"
#include "qcert/haar_oracle.hpp"
#include "qcert/instances.hpp"
#include "qcert/verify.hpp"

using namespace qcert;
using nlohmann::json;

namespace {

constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

struct Output {
  std::string format = "csv";
  std::string path;
};

struct Table {
  std::vector<std::string> header;
  std::vector<json> rows;  // each row an array in header order
};

std::string csv_cell(const json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  if (v.is_null()) return "";
  return v.dump();
}

// CSV: the config as a comment line, then one table per section. JSON: one document.
void emit(const Output& out, const json& config, const std::vector<std::pair<std::string, Table>>& sections,
          const json& extra = json::object()) {
  std::ostringstream os;
  if (out.format == "json") {
    json doc{{"config", config}};
    for (const auto& [name, t] : sections) {
      json rows = json::array();
      for (const auto& r : t.rows) {
        json o = json::object();
        for (std::size_t i = 0; i < t.header.size(); ++i) o[t.header[i]] = r[i];
        rows.push_back(o);
      }
      doc[name] = rows;
    }
    for (const auto& [k, v] : extra.items()) doc[k] = v;
    os << doc.dump(2) << "\n";
  } else {
    os << "# config: " << config.dump() << "\n";
    bool first = true;
    for (const auto& [name, t] : sections) {
      if (!first) os << "\n";
      first = false;
      if (sections.size() > 1) os << "# " << name << "\n";
      for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
      os << "\n";
      for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_cell(r[i]);
        os << "\n";
      }
    }
  }
  if (out.path.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream f(out.path);
    if (!f) throw std::runtime_error("cannot write " + out.path);
    f << os.str();
  }
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

struct SigmaOptions {
  SigmaSpec spec;
  std::string file;

  void add(CLI::App* app) {
    app->add_option("--family", spec.family, "spectrum family: mm, rank, spiked, geometric, json")
        ->check(CLI::IsMember({"mm", "rank", "spiked", "geometric", "json"}));
    app->add_option("--d", spec.d, "dimension")->check(CLI::PositiveNumber);
    app->add_option("--rank", spec.rank, "rank for the rank family");
    app->add_option("--ratio", spec.ratio, "ratio for the geometric family");
    app->add_option("--sigma", file, "spectrum JSON file (family json)");
  }
  std::vector<double> resolve() const {
    if (spec.family == "json" || !file.empty()) {
      if (file.empty()) throw ValidationError("family json needs --sigma FILE");
      return spectrum_from_json(read_json_file(file));
    }
    return family_spectrum(spec);
  }
  json to_config() const {
    json j = to_json(spec);
    if (!file.empty()) j["sigma_file"] = file;
    return j;
  }
};

int run_gen_sigma(const SigmaOptions& so, const Output& out) {
  const auto v = so.resolve();
  Spectrum check(v);
  const json config{{"command", "gen-sigma"}, {"sigma", so.to_config()}};
  if (out.format == "json") {
    std::ostringstream os;
    os << json{{"config", config}, {"lambdas", v}}.dump(2) << "\n";
    if (out.path.empty()) std::cout << os.str();
    else std::ofstream(out.path) << os.str();
    return 0;
  }
  Table t{{"index", "lambda"}, {}};
  for (std::size_t i = 0; i < v.size(); ++i) t.rows.push_back(json::array({i, v[i]}));
  emit(out, config, {{"spectrum", t}});
  return 0;
}

struct CertifyOptions {
  std::string config_file;
  std::optional<double> eps, delta;
  std::optional<std::uint64_t> seed;
  std::string hidden = "null";
  std::optional<double> alt_eps;
  std::optional<int> j, jp;
  std::optional<std::uint64_t> budget;
  bool basic = false;
  std::size_t trials = 100;
  std::size_t threads = 1;
};

CertifyConfig resolve_certify(const std::string& file, std::optional<double> eps, std::optional<double> delta,
                              std::optional<std::uint64_t> seed) {
  CertifyConfig cfg;
  if (!file.empty()) cfg = config_from_json(read_json_file(file));
  if (eps) cfg.eps = *eps;
  if (delta) cfg.delta = *delta;
  if (seed) cfg.seed = *seed;
  cfg.validate();
  return cfg;
}

int run_certify(const SigmaOptions& so, const CertifyOptions& co, const Output& out) {
  if (co.trials < 1) throw ValidationError("--trials must be at least 1");
  const CertifyConfig cfg = resolve_certify(co.config_file, co.eps, co.delta, co.seed);
  TrialPlan plan;
  plan.sigma = DensityMatrix::diagonal(so.resolve());
  plan.family = hidden_family_from_string(co.hidden);
  plan.full = !co.basic;
  plan.alt_eps = co.alt_eps.value_or(cfg.eps);
  plan.j = co.j;
  plan.jp = co.jp;
  if (co.budget) plan.budget = *co.budget;
  const auto rows = run_trials(plan, cfg, co.trials, cfg.seed, co.threads);
  const auto s = summarize(rows);

  json config{{"command", "certify"},
              {"sigma", so.to_config()},
              {"certify", to_json(cfg)},
              {"algorithm", co.basic ? "basic" : "full"},
              {"hidden", co.hidden},
              {"alt_eps", plan.alt_eps},
              {"trials", co.trials},
              {"seed", cfg.seed}};
  if (co.j) config["j"] = *co.j;
  if (co.jp) config["jp"] = *co.jp;
  if (co.budget) config["budget"] = *co.budget;

  Table t{{"trial", "seed", "family", "verdict", "copies", "fired", "wall_ms"}, {}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    t.rows.push_back(json::array({i, r.seed, r.family, to_string(r.answer), r.copies, r.fired, r.wall_ms}));
  }
  const double error = plan.family == HiddenFamily::Null ? 1.0 - s.yes_rate() : 1.0 - s.no_rate();
  Table sum{{"family", "trials", "yes_rate", "no_rate", "inconclusive_rate", "error_rate", "mean_copies"}, {}};
  sum.rows.push_back(json::array({co.hidden, s.trials, s.yes_rate(), s.no_rate(),
                                  static_cast<double>(s.inconclusive) / static_cast<double>(s.trials), error,
                                  s.mean_copies}));
  emit(out, config, {{"trials", t}, {"summary", sum}});
  return 0;
}

struct SweepOptions {
  std::string config_file;
  std::vector<std::size_t> dims;
  std::optional<double> eps, delta, target, c_l2;
  std::optional<std::size_t> trials, rounds;
  std::optional<std::uint64_t> seed;
  std::string mode = "basic";
  std::string certify_file;
  std::size_t threads = 1;
};

int run_sweep_cmd(const SweepOptions& so, const Output& out) {
  SweepSettings s;
  if (!so.config_file.empty()) s = sweep_settings_from_json(read_json_file(so.config_file));
  if (!so.dims.empty()) s.dims = so.dims;
  if (so.eps) s.eps = *so.eps;
  if (so.delta) s.delta = *so.delta;
  if (so.target) s.target = *so.target;
  if (so.c_l2) s.c_l2 = *so.c_l2;
  if (so.trials) s.trials = *so.trials;
  if (so.rounds) s.rounds = *so.rounds;
  if (so.seed) s.seed = *so.seed;
  s = sweep_settings_from_json(to_json(s));
  if (s.trials < 1) throw ValidationError("--trials must be at least 1");

  json config{{"command", "sweep"}, {"mode", so.mode}, {"seed", s.seed}};
  SweepResult res;
  if (so.mode == "basic") {
    config["sweep"] = to_json(s);
    res = run_sweep(s, so.threads);
  } else {
    CertifyConfig cfg = resolve_certify(so.certify_file, s.eps, s.delta, s.seed);
    config["certify"] = to_json(cfg);
    config["dims"] = s.dims;
    config["trials"] = s.trials;
    res = sweep_certify_mixed(s.dims, cfg, s.trials, s.seed, so.threads);
  }
  Table t{{"d", "min_copies", "null_accept", "alt_reject", "evaluations"}, {}};
  for (const auto& p : res.points)
    t.rows.push_back(json::array({p.d, p.min_copies, p.null_accept, p.alt_reject, p.evaluations}));
  Table fit{{"slope", "ci_low", "ci_high", "intercept", "defined"}, {}};
  if (res.fit.defined)
    fit.rows.push_back(json::array({res.fit.slope, res.fit.ci_low, res.fit.ci_high, res.fit.intercept, true}));
  else
    fit.rows.push_back(json::array({nullptr, nullptr, nullptr, nullptr, false}));
  emit(out, config, {{"points", t}, {"fit", fit}});
  if (!res.fit.defined) std::cerr << "slope undefined: need at least two dimensions\n";
  return 0;
}

struct VerifyCliOptions {
  std::vector<std::string> checks;
  std::string group;
  std::string certify_file, sweep_file;
  std::uint64_t seed = VerifyOptions{}.seed;
  std::size_t threads = 1;
  bool list = false;
};

int run_verify(const VerifyCliOptions& vo, const Output& out) {
  if (vo.list) {
    for (const auto& c : verification_battery()) std::cout << c.name << " " << c.group << "\n";
    return 0;
  }
  VerifyOptions opts;
  opts.seed = vo.seed;
  opts.threads = vo.threads;
  if (!vo.certify_file.empty()) opts.certify = config_from_json(read_json_file(vo.certify_file));
  if (!vo.sweep_file.empty()) opts.sweep = sweep_settings_from_json(read_json_file(vo.sweep_file));
  std::vector<const NamedCheck*> selected;
  if (!vo.checks.empty()) {
    for (const auto& n : vo.checks) selected.push_back(&find_check(n));
  } else {
    for (const auto& c : verification_battery())
      if (vo.group.empty() || c.group == vo.group) selected.push_back(&c);
    if (selected.empty()) throw ValidationError("no checks in group " + vo.group);
  }
  json names = json::array();
  for (const auto* c : selected) names.push_back(c->name);
  const json config{{"command", "verify"},  {"seed", opts.seed},           {"checks", names},
                    {"certify", to_json(opts.certify)}, {"sweep", to_json(opts.sweep)}};
  Table t{{"check", "group", "result", "cases", "summary"}, {}};
  json reports = json::array();
  bool all = true;
  for (const auto* c : selected) {
    const CheckResult r = c->run(opts);
    all = all && r.pass;
    t.rows.push_back(json::array({c->name, c->group, r.pass ? "pass" : "fail", r.cases, r.summary}));
    reports.push_back(to_json(r));
  }
  emit(out, config, {{"checks", t}}, json{{"reports", reports}});
  return all ? 0 : kCheckFailed;
}

double normalized_fidelity(const std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  if (!(total > 0.0)) return 0.0;
  std::vector<double> w;
  for (double x : v)
    if (x > 0.0) w.push_back(x / total);
  return fidelity_mm(w) * static_cast<double>(w.size()) / static_cast<double>(v.size());
}

int run_bounds(const SigmaOptions& so, double eps, const Output& out) {
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("--eps must lie in (0, 1)");
  const auto v = so.resolve();
  const Spectrum spec(v);
  const auto b = predicted_bounds(spec, eps);
  const auto lower = remove_mass_lower_nonadaptive(spec, eps);
  const auto adaptive = remove_mass_adaptive(spec, eps);
  const auto upper = remove_mass_upper(spec, eps);
  const json config{{"command", "bounds"}, {"sigma", so.to_config()}, {"eps", eps}, {"dim", v.size()}};
  Table t{{"quantity", "value"}, {}};
  auto row = [&](const std::string& k, const json& val) { t.rows.push_back(json::array({k, val})); };
  row("lower_nonadaptive", b.lower_nonadaptive);
  row("lower_adaptive", b.lower_adaptive);
  row("upper", b.upper);
  row("degenerate_nonadaptive", b.degenerate_nonadaptive);
  row("degenerate_adaptive", b.degenerate_adaptive);
  row("degenerate_upper", b.degenerate_upper);
  row("d_eff_nonadaptive", b.d_eff_nonadaptive);
  row("d_eff_adaptive", b.d_eff_adaptive);
  row("d_eff_upper", b.d_eff_upper);
  row("log_d_over_eps", b.log_d_over_eps);
  row("norm_2_5_sigma_prime", schatten_quasinorm(upper.sigma_prime, 0.4));
  row("norm_1_2_sigma_star", schatten_quasinorm(adaptive.sigma_star, 0.5));
  row("fidelity_mm_sigma", fidelity_mm(v));
  row("fidelity_mm_sigma_2star_normalized", normalized_fidelity(lower.sigma_2star));
  row("fidelity_mm_sigma_star_normalized", normalized_fidelity(adaptive.sigma_star));
  row("fidelity_mm_sigma_prime_normalized", normalized_fidelity(upper.sigma_prime));
  row("removed_mass_nonadaptive", lower.removed_mass);
  row("removed_mass_adaptive", adaptive.removed_mass);
  row("removed_mass_upper", upper.removed_mass);
  row("l23_functional", l23_functional(v, eps));
  emit(out, config, {{"bounds", t}});
  return 0;
}

struct DivergenceOptions {
  std::string ensemble = "corner";
  double eps = 0.3;
  std::size_t n = 3;
  std::size_t schedules = 10;
  std::size_t draws = 16;
  std::uint64_t seed = 1;
};

int run_divergence(const SigmaOptions& so, const DivergenceOptions& dv, const Output& out) {
  if (dv.n < 1 || dv.schedules < 1) throw ValidationError("--n and --schedules must be at least 1");
  std::vector<double> v;
  const bool default_sigma = so.file.empty() && so.spec.family == "mm" && dv.ensemble == "corner";
  v = default_sigma ? std::vector<double>{0.8, 0.2} : so.resolve();
  const auto sigma = DensityMatrix::diagonal(v);
  const std::size_t d = v.size();
  if (std::pow(static_cast<double>(d), static_cast<double>(dv.n)) > static_cast<double>(kMaxTranscripts))
    throw ValidationError("d^n exceeds the transcript enumeration limit");
  Rng rng(dv.seed, 0);
  std::vector<DensityMatrix> members;
  if (dv.ensemble == "corner") {
    const auto inst = make_corner(Spectrum(v), dv.eps);
    members = {build_corner(sigma, inst, 1), build_corner(sigma, inst, -1)};
  } else if (dv.ensemble == "paninski") {
    const auto inst = tune_paninski(Spectrum(v), dv.eps);
    for (std::size_t k = 0; k < dv.draws; ++k) members.push_back(sample_paninski(sigma, inst, rng));
  } else {
    throw ValidationError("unknown ensemble: " + dv.ensemble);
  }
  const auto ens = StateEnsemble::uniform(members);
  json config{{"command", "divergence"}, {"ensemble", dv.ensemble}, {"sigma", v},       {"eps", dv.eps},
              {"n", dv.n},               {"schedules", dv.schedules}, {"seed", dv.seed}};
  if (dv.ensemble == "paninski") config["draws"] = dv.draws;
  Table t{{"schedule", "tv", "chi2", "kl", "min_likelihood_ratio", "ingster_bound", "transcripts"}, {}};
  for (std::size_t s = 0; s < dv.schedules; ++s) {
    NonadaptiveSchedule sched;
    std::vector<std::vector<double>> phis;
    for (std::size_t t2 = 0; t2 < dv.n; ++t2) {
      sched.povms.push_back(basis_povm(haar_unitary(d, rng), "haar-basis"));
      std::vector<double> step;
      for (const auto& a : members)
        for (const auto& b : members) step.push_back(phi(sched.povms.back(), sigma, a, b));
      phis.push_back(step);
    }
    const auto rec = exact_transcript_divergence(sigma, ens, sched);
    const auto ing = ingster_bound(phis, dv.n);
    t.rows.push_back(json::array({s, rec.tv, rec.chi2, rec.kl, rec.min_likelihood_ratio, ing.bound, rec.transcripts}));
  }
  emit(out, config, {{"schedules", t}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulation driver for quantum state certification"};
  app.require_subcommand(1);
  Output out;
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--out", out.path, "output file (stdout by default)");
    sub->add_option("--format", out.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };

  SigmaOptions gen_sigma;
  auto* gen = app.add_subcommand("gen-sigma", "emit a spectrum");
  gen_sigma.add(gen);
  add_output(gen);

  SigmaOptions cert_sigma;
  CertifyOptions co;
  auto* cert = app.add_subcommand("certify", "repeated certification trials against a hidden state");
  cert_sigma.add(cert);
  cert->add_option("--config", co.config_file, "certification constants JSON");
  cert->add_option("--eps", co.eps);
  cert->add_option("--delta", co.delta);
  cert->add_option("--seed", co.seed);
  cert->add_option("--hidden", co.hidden, "hidden-state family: null, hs-far, offdiag, tail, paninski")
      ->check(CLI::IsMember({"null", "hs-far", "offdiag", "tail", "paninski"}));
  cert->add_option("--alt-eps", co.alt_eps, "distance of the alternative (default eps)");
  cert->add_option("--j", co.j);
  cert->add_option("--jp", co.jp);
  cert->add_option("--budget", co.budget, "copy budget per trial");
  cert->add_flag("--basic", co.basic, "run basic certification (HS gap) instead of the full algorithm");
  cert->add_option("--trials", co.trials);
  cert->add_option("--threads", co.threads)->check(CLI::PositiveNumber);
  add_output(cert);

  SweepOptions so;
  auto* sweep = app.add_subcommand("sweep", "minimal copies across dimensions with a log-log fit");
  sweep->add_option("--config", so.config_file, "sweep settings JSON");
  sweep->add_option("--d", so.dims, "dimensions");
  sweep->add_option("--eps", so.eps);
  sweep->add_option("--delta", so.delta);
  sweep->add_option("--target", so.target);
  sweep->add_option("--c-l2", so.c_l2);
  sweep->add_option("--rounds", so.rounds);
  sweep->add_option("--trials", so.trials);
  sweep->add_option("--seed", so.seed);
  sweep->add_option("--mode", so.mode, "basic (minimal N) or certify (copies used on I/d)")
      ->check(CLI::IsMember({"basic", "certify"}));
  sweep->add_option("--certify-config", so.certify_file);
  sweep->add_option("--threads", so.threads)->check(CLI::PositiveNumber);
  add_output(sweep);

  VerifyCliOptions vo;
  auto* ver = app.add_subcommand("verify", "run named verification checks");
  ver->add_option("--check", vo.checks, "check name (repeatable); default: every check");
  ver->add_option("--group", vo.group)->check(CLI::IsMember({"acceptance", "scaling", "property", "measurement"}));
  ver->add_option("--config", vo.certify_file, "certification constants JSON");
  ver->add_option("--sweep-config", vo.sweep_file);
  ver->add_option("--seed", vo.seed);
  ver->add_option("--threads", vo.threads)->check(CLI::PositiveNumber);
  ver->add_flag("--list", vo.list, "list check names");
  add_output(ver);

  SigmaOptions bounds_sigma;
  double bounds_eps = 0.1;
  auto* bnd = app.add_subcommand("bounds", "predicted copy bounds for a spectrum");
  bounds_sigma.add(bnd);
  bnd->add_option("--eps", bounds_eps);
  add_output(bnd);

  SigmaOptions div_sigma;
  DivergenceOptions dv;
  auto* div = app.add_subcommand("divergence", "exact transcript divergences of an ensemble");
  div_sigma.add(div);
  div->add_option("--ensemble", dv.ensemble)->check(CLI::IsMember({"corner", "paninski"}));
  div->add_option("--eps", dv.eps);
  div->add_option("--n", dv.n, "copies per transcript");
  div->add_option("--schedules", dv.schedules);
  div->add_option("--draws", dv.draws, "ensemble size for paninski");
  div->add_option("--seed", dv.seed);
  add_output(div);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen) return run_gen_sigma(gen_sigma, out);
    if (*cert) return run_certify(cert_sigma, co, out);
    if (*sweep) return run_sweep_cmd(so, out);
    if (*ver) return run_verify(vo, out);
    if (*bnd) return run_bounds(bounds_sigma, bounds_eps, out);
    if (*div) return run_divergence(div_sigma, dv, out);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const UnavailableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const UnsupportedRange& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
  return kUsage;
}
