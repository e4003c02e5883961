#include "latmut/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "latmut/ancestry.hpp"
#include "latmut/asg.hpp"
#include "latmut/diffusion.hpp"
#include "latmut/moran.hpp"
#include "latmut/quadrature.hpp"
#include "latmut/specfun.hpp"
#include "latmut/stationary.hpp"
#include "latmut/stats.hpp"

namespace latmut {

double ExperimentConfig::effective_beta() const {
  return use_beta_tilde ? beta_tilde * static_cast<double>(n2) : beta;
}

ExperimentConfig ExperimentConfig::defaults_for(const std::string& scenario) {
  ExperimentConfig c;
  c.scenario = scenario;
  if (scenario == "i") {
    c.theta1 = c.theta2 = 0.5;
    c.beta = 800.0;
    c.n1 = 2;
    c.n2 = 2;
    c.replicates = 10000;
  } else if (scenario == "ii") {
    c.theta1 = 0.2;
    c.theta2 = 0.3;
    c.beta = -5.0;
    c.n1 = 3;
    c.n2 = 10000;
    c.replicates = 100000;
  } else if (scenario == "iii_a") {
    c.theta1 = 0.2;
    c.theta2 = 0.3;
    c.use_beta_tilde = true;
    c.beta_tilde = -0.5;
    c.n1 = 3;
    c.n2 = 10000;
    c.replicates = 100000;
  } else if (scenario == "iii_b") {
    c.theta1 = c.theta2 = 0.5;
    c.use_beta_tilde = true;
    c.beta_tilde = 2.0;
    c.n1 = 3;
    c.n2 = 10000;
    c.replicates = 5000;
  } else if (scenario == "time_varying") {
    c.theta1 = 0.2;
    c.theta2 = 0.3;
    c.beta = -5.0;
    c.n1 = 3;
    c.n2 = 400;
    c.replicates = 50000;
    c.demog_T = 2.0;
    c.demog_rho0 = 1.0;
    c.demog_rho1 = 3.0;
  } else if (scenario == "asg_crosscheck") {
    c.theta = 1.0;
    c.pi1 = 0.5;
    c.beta = -1.0;
    c.n1 = 2;
    c.n2 = 2;
    c.replicates = 100000;
  } else if (scenario == "moran") {
    c.theta1 = 0.4;
    c.moran_s = 0.5;
    c.moran_alpha = 0.2;
    c.replicates = 50000;  // stationary subsamples of the BDI chain
  } else if (scenario == "asymptotics_audit") {
    c.replicates = 1;
  } else {
    throw std::invalid_argument("unknown scenario: " + scenario);
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (scenario.empty()) throw std::invalid_argument("config: scenario is required");
  if (replicates < 1) throw std::invalid_argument("config: replicates must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("config: dt must be positive");
  if (format != "csv" && format != "json")
    throw std::invalid_argument("config: format must be csv or json");
  if (scenario == "iii_b" && use_beta_tilde && !(beta_tilde > 1.0))
    throw std::invalid_argument("config: scenario iii_b requires beta_tilde > 1");
  if (scenario == "iii_a" && use_beta_tilde && !(beta_tilde < 1.0))
    throw std::invalid_argument("config: scenario iii_a requires beta_tilde < 1");
}

namespace {

using nlohmann::json;

template <typename T>
void maybe(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig c = defaults_for(j.at("scenario").get<std::string>());
  maybe(j, "theta1", c.theta1);
  maybe(j, "theta2", c.theta2);
  if (j.contains("beta_tilde")) {
    c.use_beta_tilde = true;
    c.beta_tilde = j.at("beta_tilde").get<double>();
  }
  if (j.contains("beta")) {
    c.use_beta_tilde = false;
    c.beta = j.at("beta").get<double>();
  }
  maybe(j, "theta", c.theta);
  maybe(j, "pi1", c.pi1);
  maybe(j, "n1", c.n1);
  maybe(j, "n2", c.n2);
  maybe(j, "replicates", c.replicates);
  maybe(j, "replicate_offset", c.replicate_offset);
  maybe(j, "dt", c.dt);
  maybe(j, "seed", c.seed);
  maybe(j, "threads", c.threads);
  maybe(j, "out", c.out);
  maybe(j, "format", c.format);
  maybe(j, "check", c.check);
  maybe(j, "demog_T", c.demog_T);
  maybe(j, "demog_rho0", c.demog_rho0);
  maybe(j, "demog_rho1", c.demog_rho1);
  maybe(j, "moran_s", c.moran_s);
  maybe(j, "moran_alpha", c.moran_alpha);
  maybe(j, "dump_events", c.dump_events);
  maybe(j, "dump_limit", c.dump_limit);
  return c;
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["scenario"] = scenario;
  j["theta1"] = theta1;
  j["theta2"] = theta2;
  if (use_beta_tilde)
    j["beta_tilde"] = beta_tilde;
  else
    j["beta"] = beta;
  j["theta"] = theta;
  j["pi1"] = pi1;
  j["n1"] = n1;
  j["n2"] = n2;
  j["replicates"] = replicates;
  j["replicate_offset"] = replicate_offset;
  j["dt"] = dt;
  j["seed"] = seed;
  j["threads"] = threads;
  j["out"] = out;
  j["format"] = format;
  j["check"] = check;
  j["demog_T"] = demog_T;
  j["demog_rho0"] = demog_rho0;
  j["demog_rho1"] = demog_rho1;
  j["moran_s"] = moran_s;
  j["moran_alpha"] = moran_alpha;
  return j.dump(2) + "\n";
}

bool RunOutput::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

void run_replicates(long replicates, long offset, std::uint64_t seed, int threads,
                    const std::function<void(long, Philox&)>& fn) {
  int n_threads = threads > 0 ? threads
                              : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = static_cast<int>(std::min<long>(n_threads, replicates));
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::string error_text;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      long r = next.fetch_add(1);
      if (r >= replicates || failed.load()) return;
      try {
        Philox rng(seed, static_cast<std::uint64_t>(offset + r));
        fn(r, rng);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true))
          error_text = "replicate " + std::to_string(offset + r) + ": " + e.what();
        return;
      }
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw std::runtime_error(error_text);
}

namespace {

struct Checker {
  std::vector<CheckResult>* out;
  bool enabled;

  void require(const std::string& name, bool pass, const std::string& detail) {
    if (!enabled) return;
    out->push_back({name, pass, detail});
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// --- event-log dump ---------------------------------------------------------

struct EventDump {
  std::string path;
  long limit = 0;
  std::string buffer = "replicate,time,kind,frequency,a1,l1,a2,l2\n";
  std::mutex mutex;

  void add(long replicate, const AncestryEventLog& log) {
    if (path.empty() || replicate >= limit) return;
    std::ostringstream os;
    for (const auto& e : log.events) {
      os << replicate << ',' << e.time << ',' << event_kind_name(e.kind) << ','
         << e.freq << ',' << e.after.a1 << ',' << e.after.l1 << ',' << e.after.a2
         << ',' << e.after.l2 << '\n';
    }
    std::lock_guard<std::mutex> lock(mutex);
    buffer += os.str();
  }

  void flush() {
    if (!path.empty()) write_file(path, buffer);
  }
};

// --- shared pieces ----------------------------------------------------------

double ks_vs_exponential(std::vector<double> sample, double mean) {
  std::sort(sample.begin(), sample.end());
  std::vector<double> cdf(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) cdf[i] = exp_cdf(sample[i], mean);
  return ks_statistic(cdf);
}

std::vector<double> pmf_from_counts(const std::vector<long>& counts, long total) {
  std::vector<double> pmf(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    pmf[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return pmf;
}

// TV between an empirical K histogram over 1..n and a reference pmf over 1..n.
double tv_vs_pmf(const std::vector<long>& k_counts, const std::vector<double>& ref_pmf,
                 long total) {
  std::vector<double> emp = pmf_from_counts(k_counts, total);
  return tv_distance(emp, ref_pmf);
}

// --- scenarios --------------------------------------------------------------

RunOutput run_scenario_random_background(const ExperimentConfig& cfg) {
  const ModelParams params{cfg.theta1, cfg.theta2, cfg.effective_beta()};
  const SampleCounts counts{cfg.n1, cfg.n2};
  const bool both = cfg.scenario == "i";
  const long R = cfg.replicates;

  std::vector<int> k1(R, -1), k2(R, 0);
  std::vector<double> tau(R, 0.0);
  std::vector<std::vector<double>> gaps(static_cast<std::size_t>(std::max(0L, cfg.n1 - 1)));
  for (auto& g : gaps) g.assign(static_cast<std::size_t>(R), 0.0);

  EventDump dump;
  dump.path = cfg.dump_events;
  dump.limit = cfg.dump_limit;

  WfOptions wf;
  wf.dt = cfg.dt;

  run_replicates(R, cfg.replicate_offset, cfg.seed, cfg.threads, [&](long r, Philox& rng) {
    ReversedStationaryPathSource path(counts, params, wf, rng);
    AncestryEventLog log = simulate_conditional_ancestry(
        counts, params, path, rng, both ? TrackMode::Both : TrackMode::Type1Only);
    if (!log.complete)
      throw std::runtime_error("ancestry simulation incomplete: " + log.error);
    auto [m1, m2] = latent_counts(log);
    k1[r] = m1;
    k2[r] = m2;
    tau[r] = log.jump_time_type1(static_cast<int>(cfg.n1));
    double prev = 0.0;
    for (long i = 1; i <= cfg.n1 - 1; ++i) {
      double ti = log.jump_time_type1(static_cast<int>(i));
      gaps[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(r)] = ti - prev;
      prev = ti;
    }
    dump.add(r, log);
  });
  dump.flush();

  RunOutput out;
  Checker chk{&out.checks, cfg.check};
  const double beta = params.beta;

  std::vector<long> k1_counts(static_cast<std::size_t>(cfg.n1) + 1, 0);
  for (int v : k1) k1_counts[static_cast<std::size_t>(v)] += 1;
  double p_k1_1 = static_cast<double>(k1_counts[1]) / static_cast<double>(R);
  out.table.add("p_k1_eq_1", p_k1_1,
                std::sqrt(p_k1_1 * (1.0 - p_k1_1) / static_cast<double>(R)), R, cfg.seed);
  for (long k = 1; k <= cfg.n1; ++k)
    out.table.add("k1_count_" + std::to_string(k),
                  static_cast<double>(k1_counts[static_cast<std::size_t>(k)]), 0.0, R,
                  cfg.seed);

  EwensAllelesPmf ewens1 = ewens_alleles_pmf(static_cast<int>(cfg.n1), cfg.theta1);
  std::vector<long> k1_cells(k1_counts.begin() + 1, k1_counts.end());
  double tv1 = tv_vs_pmf(k1_cells, ewens1.pmf, R);
  out.table.add("tv_k1_vs_ewens", tv1, 0.0, R, cfg.seed);

  if (cfg.scenario == "i") {
    // Age of the single latent mutation, in units of beta.
    std::vector<double> scaled(tau);
    for (double& t : scaled) t /= beta;
    double mean_age = 2.0 / (cfg.theta1 * cfg.theta2);
    double ks = ks_vs_exponential(scaled, mean_age);
    out.table.add("ks_age_over_beta_vs_exp", ks, 0.0, R, cfg.seed);
    out.table.add("age_exp_mean", mean_age, 0.0, R, cfg.seed);

    std::vector<long> k2_counts(static_cast<std::size_t>(cfg.n2) + 1, 0);
    for (int v : k2) k2_counts[static_cast<std::size_t>(v)] += 1;
    for (long k = 1; k <= cfg.n2; ++k)
      out.table.add("k2_count_" + std::to_string(k),
                    static_cast<double>(k2_counts[static_cast<std::size_t>(k)]), 0.0, R,
                    cfg.seed);
    EwensAllelesPmf ewens2 = ewens_alleles_pmf(static_cast<int>(cfg.n2), cfg.theta2);
    std::vector<long> k2_cells(k2_counts.begin() + 1, k2_counts.end());
    double tv2 = tv_vs_pmf(k2_cells, ewens2.pmf, R);
    out.table.add("tv_k2_vs_ewens", tv2, 0.0, R, cfg.seed);

    chk.require("p(k1=1) >= 0.97", p_k1_1 >= 0.97, "p=" + fmt(p_k1_1));
    chk.require("ks(age/beta, exp) < 0.05", ks < 0.05, "ks=" + fmt(ks));
    chk.require("tv(k2, ewens) < 0.05", tv2 < 0.05, "tv=" + fmt(tv2));
  } else if (cfg.scenario == "ii" || cfg.scenario == "iii_a") {
    Summary tau_sum = summarize(tau);
    out.table.add("mean_age", tau_sum.mean, tau_sum.std_error, R, cfg.seed);
    chk.require("tv(k1, ewens) < 0.03", tv1 < 0.03, "tv=" + fmt(tv1));
  } else if (cfg.scenario == "iii_b") {
    double n = static_cast<double>(counts.n());
    std::vector<double> scaled(tau);
    for (double& t : scaled) t /= n;
    double bt = cfg.use_beta_tilde ? cfg.beta_tilde : beta / static_cast<double>(cfg.n2);
    double mean_age = 2.0 * bt / (cfg.theta1 * cfg.theta2);
    double ks = ks_vs_exponential(scaled, mean_age);
    out.table.add("ks_age_over_n_vs_exp", ks, 0.0, R, cfg.seed);
    out.table.add("age_exp_mean", mean_age, 0.0, R, cfg.seed);
    chk.require("ks(age/n, exp) < 0.05", ks < 0.05, "ks=" + fmt(ks));
    chk.require("p(k1=1) >= 0.97", p_k1_1 >= 0.97, "p=" + fmt(p_k1_1));
    // Pre-final jumps against the pure-death rates binom(k,2).
    for (long i = 1; i <= cfg.n1 - 1; ++i) {
      long k = cfg.n1 - i + 1;
      double expect = 2.0 / (static_cast<double>(k) * static_cast<double>(k - 1));
      Summary g = summarize(gaps[static_cast<std::size_t>(i - 1)]);
      out.table.add("gap_mean_a1_" + std::to_string(k), g.mean, g.std_error, R, cfg.seed);
      bool ok = std::fabs(g.mean - expect) <= 3.0 * g.std_error;
      chk.require("gap mean (a1=" + std::to_string(k) + ") within 3 se of " + fmt(expect),
                  ok, "mean=" + fmt(g.mean) + " se=" + fmt(g.std_error));
    }
  }
  return out;
}

RunOutput run_scenario_time_varying(const ExperimentConfig& cfg) {
  const ModelParams params{cfg.theta1, cfg.theta2, cfg.effective_beta()};
  const SampleCounts counts{cfg.n1, cfg.n2};
  const long R = cfg.replicates;
  Demography demog = Demography::ramp(cfg.demog_T, cfg.demog_rho0, cfg.demog_rho1);

  std::vector<int> k1(R, -1);
  std::vector<long> attempts(R, 0);
  std::vector<char> exhausted(R, 0);
  EventDump dump;
  dump.path = cfg.dump_events;
  dump.limit = cfg.dump_limit;

  // The initial law of the forward path: the stationary law of the
  // constant-size model at the same parameters.
  auto mu0 = [params](Philox& rng) { return posterior_sample({0, 0}, params, rng); };

  run_replicates(R, cfg.replicate_offset, cfg.seed, cfg.threads, [&](long r, Philox& rng) {
    WfOptions wf;
    wf.dt = cfg.dt;
    wf.boundary_floor = 1e-4 * cfg.dt;  // the K1 statistic is insensitive below this
    ConditionedPath path =
        conditioned_varying_path(counts, params, demog, mu0, cfg.dt, rng, 100000, wf);
    attempts[r] = path.attempts;
    ReplayPathSource src(path);
    AncestrySimOptions opts;
    AncestryEventLog log =
        simulate_conditional_ancestry(counts, params, src, rng, TrackMode::Type1Only, opts);
    if (!log.complete) {
      exhausted[r] = 1;
      return;
    }
    k1[r] = latent_counts(log).first;
    dump.add(r, log);
  });
  dump.flush();

  RunOutput out;
  Checker chk{&out.checks, cfg.check};
  long n_exhausted = 0, n_ok = 0;
  double total_attempts = 0.0;
  std::vector<long> k1_counts(static_cast<std::size_t>(cfg.n1) + 1, 0);
  for (long r = 0; r < R; ++r) {
    total_attempts += static_cast<double>(attempts[r]);
    if (exhausted[r]) {
      ++n_exhausted;
      continue;
    }
    ++n_ok;
    k1_counts[static_cast<std::size_t>(k1[r])] += 1;
  }
  for (long k = 1; k <= cfg.n1; ++k)
    out.table.add("k1_count_" + std::to_string(k),
                  static_cast<double>(k1_counts[static_cast<std::size_t>(k)]), 0.0, n_ok,
                  cfg.seed);
  EwensAllelesPmf ewens1 = ewens_alleles_pmf(static_cast<int>(cfg.n1), cfg.theta1);
  std::vector<long> cells(k1_counts.begin() + 1, k1_counts.end());
  double tv1 = n_ok > 0 ? tv_vs_pmf(cells, ewens1.pmf, n_ok) : 1.0;
  out.table.add("tv_k1_vs_ewens", tv1, 0.0, n_ok, cfg.seed);
  out.table.add("acceptance_rate", static_cast<double>(R) / std::max(1.0, total_attempts),
                0.0, R, cfg.seed);
  out.table.add("exhausted_paths", static_cast<double>(n_exhausted), 0.0, R, cfg.seed);

  chk.require("tv(k1, ewens) < 0.05", tv1 < 0.05, "tv=" + fmt(tv1));
  chk.require("exhausted fraction < 0.01",
              static_cast<double>(n_exhausted) < 0.01 * static_cast<double>(R),
              "exhausted=" + std::to_string(n_exhausted));
  return out;
}

RunOutput run_scenario_asg_crosscheck(const ExperimentConfig& cfg) {
  PimParams pim{cfg.theta, cfg.pi1, 1.0 - cfg.pi1};
  const double beta = cfg.effective_beta();
  const ModelParams params = pim.to_model(beta);
  const SampleCounts counts{cfg.n1, cfg.n2};
  const long R = cfg.replicates;

  std::vector<int> k1_asg(R, 0), k1_rb(R, 0);
  std::vector<double> mean_virtual(R, 0.0);
  WfOptions wf;
  wf.dt = cfg.dt;

  run_replicates(R, cfg.replicate_offset, cfg.seed, cfg.threads, [&](long r, Philox& rng) {
    AsgRunResult asg = simulate_asg(counts, pim, beta, rng, AsgMode::Reduced);
    k1_asg[r] = asg.k1;
    mean_virtual[r] = asg.mean_virtual;
    ReversedStationaryPathSource path(counts, params, wf, rng);
    AncestryEventLog log =
        simulate_conditional_ancestry(counts, params, path, rng, TrackMode::Type1Only);
    if (!log.complete)
      throw std::runtime_error("ancestry simulation incomplete: " + log.error);
    k1_rb[r] = latent_counts(log).first;
  });

  RunOutput out;
  Checker chk{&out.checks, cfg.check};
  std::vector<long> ca(static_cast<std::size_t>(cfg.n1) + 1, 0),
      cb(static_cast<std::size_t>(cfg.n1) + 1, 0);
  for (long r = 0; r < R; ++r) {
    ca[static_cast<std::size_t>(k1_asg[r])] += 1;
    cb[static_cast<std::size_t>(k1_rb[r])] += 1;
  }
  std::vector<double> pa = pmf_from_counts(ca, R), pb = pmf_from_counts(cb, R);
  double tv = tv_distance(pa, pb);
  out.table.add("tv_k1_asg_vs_random_background", tv, 0.0, R, cfg.seed);
  for (long k = 1; k <= cfg.n1; ++k) {
    out.table.add("k1_asg_count_" + std::to_string(k),
                  static_cast<double>(ca[static_cast<std::size_t>(k)]), 0.0, R, cfg.seed);
    out.table.add("k1_rb_count_" + std::to_string(k),
                  static_cast<double>(cb[static_cast<std::size_t>(k)]), 0.0, R, cfg.seed);
  }
  Summary mv = summarize(mean_virtual);
  out.table.add("asg_mean_virtual", mv.mean, mv.std_error, R, cfg.seed);
  chk.require("tv(k1 asg, k1 random background) < 0.05", tv < 0.05, "tv=" + fmt(tv));

  // Harmonicity: the conditional rates, empty mutations included, add up to
  // the unconditional total on every small state.
  double worst_harm = 0.0;
  for (long r1 = 0; r1 <= 6; ++r1)
    for (long r2 = 0; r2 <= 6 - r1; ++r2)
      for (long v = 0; v <= 6 - r1 - r2; ++v) {
        if (r1 + r2 + v == 0) continue;
        AsgState s = beta < 0 ? AsgState{r1, r2, v, 0} : AsgState{r1, r2, 0, v};
        RateTable tab = full_rates(s, pim, beta);
        double sum = tab.null_rate;
        for (const auto& e : tab.entries)
          if (!e.null_event) sum += e.rate;
        worst_harm = std::max(worst_harm,
                              std::fabs(sum - tab.total_unconditional) /
                                  tab.total_unconditional);
      }
  out.table.add("harmonicity_worst_rel_err", worst_harm, 0.0, R, cfg.seed);
  chk.require("harmonicity <= 1e-8", worst_harm <= 1e-8, "worst=" + fmt(worst_harm));

  // Full -> reduced collapse, entry by entry.
  double worst_collapse = 0.0;
  for (long r1 = 0; r1 <= 4; ++r1)
    for (long r2 = 0; r2 <= 4 - r1; ++r2)
      for (long v = 0; v <= 4 - r1 - r2; ++v) {
        if (r1 + r2 < 1) continue;
        AsgState s = beta < 0 ? AsgState{r1, r2, v, 0} : AsgState{r1, r2, 0, v};
        worst_collapse = std::max(worst_collapse, collapse_worst_rel_err(s, pim, beta));
      }
  out.table.add("collapse_worst_rel_err", worst_collapse, 0.0, R, cfg.seed);
  chk.require("full->reduced collapse <= 1e-10", worst_collapse <= 1e-10,
              "worst=" + fmt(worst_collapse));
  return out;
}

RunOutput run_scenario_moran(const ExperimentConfig& cfg) {
  RunOutput out;
  Checker chk{&out.checks, cfg.check};
  const double s = cfg.moran_s;
  const double theta1 = cfg.theta1;
  const double alpha = cfg.moran_alpha;

  // BDI long run, subsampled at well-separated times, against the negative
  // binomial stationary law.
  {
    Philox rng(cfg.seed, 0);
    BdiParams bp{1.0, 1.0 + s, theta1};
    double spacing = 10.0 / s;  // several relaxation times apart
    double burn = 50.0 / s;
    long samples = cfg.replicates;
    std::vector<long> states = bdi_states_at(bp, burn, spacing, samples, 0, rng);
    long max_state = 0;
    for (long st : states) max_state = std::max(max_state, st);
    std::vector<long> counts(static_cast<std::size_t>(max_state) + 1, 0);
    for (long st : states) counts[static_cast<std::size_t>(st)] += 1;
    std::vector<double> pmf(counts.size());
    for (std::size_t k = 0; k < pmf.size(); ++k)
      pmf[k] = negbinom_pmf(static_cast<long>(k), s, theta1);
    double pval = chi2_gof_pvalue(counts, pmf);
    out.table.add("bdi_chi2_pvalue", pval, 0.0, samples, cfg.seed);
    chk.require("bdi chi-square p > 0.01", pval > 0.01, "p=" + fmt(pval));
  }

  // Mixing identity: binomial subsample of the negative binomial equals the
  // closed form, with a certified truncation tail.
  {
    double worst = 0.0;
    for (long n1 = 0; n1 <= 12; ++n1) {
      double tail_at = 0.0;
      long L = 0;
      double acc = 0.0;
      // Truncate when the negative-binomial tail is below 1e-14.
      double cum = 0.0;
      for (L = 0; L < 100000; ++L) {
        cum += negbinom_pmf(L, s, theta1);
        if (1.0 - cum < 1e-14 && L > n1) break;
      }
      for (long ell = n1; ell <= L; ++ell) {
        std::vector<double> sub = subsample_pmf(ell, 0, 0, SubsampleMode::BinomialLimit, alpha);
        acc += sub[static_cast<std::size_t>(n1)] * negbinom_pmf(ell, s, theta1);
      }
      tail_at = 1.0 - cum;
      double closed = mixed_sampling_prob(n1, alpha, s, theta1);
      worst = std::max(worst, std::fabs(acc - closed) / closed);
      (void)tail_at;
    }
    out.table.add("mixing_identity_worst_rel_err", worst, 0.0, 1, cfg.seed);
    chk.require("mixing identity <= 1e-10", worst <= 1e-10, "worst=" + fmt(worst));
  }

  // Bridge to the diffusion-scale closed form at |beta~| = s/alpha.
  {
    double worst = 0.0;
    ModelParams par{theta1, cfg.theta2, 0.0};
    long n2 = 4000;
    par.beta = -(s / alpha) * static_cast<double>(n2);
    for (long n1 = 0; n1 <= 8; ++n1) {
      double lq = log_sampling_prob_asym({n1, n2}, par, AsymRegime::ScaledBetaLt1);
      double closed = mixed_sampling_prob(n1, alpha, s, theta1);
      worst = std::max(worst, std::fabs(std::exp(lq) - closed) / closed);
    }
    out.table.add("bridge_to_diffusion_worst_rel_err", worst, 0.0, 1, cfg.seed);
    chk.require("bridge identity <= 1e-10", worst <= 1e-10, "worst=" + fmt(worst));
  }

  // Wright-Fisher branching contrast: the stationary variance is not the
  // negative-binomial variance.
  {
    Philox rng(cfg.seed, 1);
    long gens = 1000000;
    long burn = 1000;
    long ell = 0;
    for (long g = 0; g < burn; ++g) ell = wf_poisson_step(ell, theta1, s, rng);
    // Batch means over the chain to get an honest standard error.
    const long batches = 100;
    long per = gens / batches;
    std::vector<double> batch_var(batches, 0.0);
    double grand_mean = 0.0;
    std::vector<double> all;
    all.reserve(static_cast<std::size_t>(gens));
    for (long b = 0; b < batches; ++b) {
      std::vector<double> vals;
      vals.reserve(static_cast<std::size_t>(per));
      for (long g = 0; g < per; ++g) {
        ell = wf_poisson_step(ell, theta1, s, rng);
        vals.push_back(static_cast<double>(ell));
      }
      Summary sm = summarize(vals);
      batch_var[static_cast<std::size_t>(b)] = sm.variance;
      grand_mean += sm.mean / static_cast<double>(batches);
    }
    Summary var_sum = summarize(batch_var);
    double nb_var = theta1 * (1.0 + s) / (s * s);
    double markov_var = theta1 / (s * s * (2.0 - s));
    double z_nb = std::fabs(var_sum.mean - nb_var) / var_sum.std_error;
    double z_markov = std::fabs(var_sum.mean - markov_var) / var_sum.std_error;
    out.table.add("wf_poisson_variance", var_sum.mean, var_sum.std_error, gens, cfg.seed);
    out.table.add("negbinom_variance", nb_var, 0.0, 0, cfg.seed);
    out.table.add("wf_poisson_variance_z_vs_negbinom", z_nb, 0.0, gens, cfg.seed);
    chk.require("wf branching variance rejects negbinom at 3 se", z_nb > 3.0,
                "z=" + fmt(z_nb));
    chk.require("wf branching variance matches its own closed form within 3 se",
                z_markov <= 3.0, "z=" + fmt(z_markov));
  }
  return out;
}

struct AuditRow {
  std::string name;
  double err_lo = 0.0, err_hi = 0.0, ratio = 0.0, expected = 0.0;
  bool checked = true;
};

double rel_err(double approx_log, double exact_log) {
  return std::fabs(std::expm1(approx_log - exact_log));
}

RunOutput run_scenario_audit(const ExperimentConfig& cfg) {
  RunOutput out;
  Checker chk{&out.checks, cfg.check};
  std::vector<AuditRow> rows;

  auto ratio_row = [&](const std::string& name, double err_lo, double err_hi,
                       double expected, bool checked = true) {
    rows.push_back({name, err_lo, err_hi, err_lo / err_hi, expected, checked});
  };

  // Sampling probability, strong selection (leading order).
  {
    ModelParams p{0.1, 0.3, -400.0};
    SampleCounts c{2, 4};
    double e1 = rel_err(log_sampling_prob_asym(c, p, AsymRegime::LargeBetaNeg),
                        log_sampling_prob(c, p));
    p.beta = -800.0;
    double e2 = rel_err(log_sampling_prob_asym(c, p, AsymRegime::LargeBetaNeg),
                        log_sampling_prob(c, p));
    ratio_row("sampling_strong_neg", e1, e2, 2.0);
    p.beta = 400.0;
    double e3 = rel_err(log_sampling_prob_asym(c, p, AsymRegime::LargeBetaPos),
                        log_sampling_prob(c, p));
    p.beta = 800.0;
    double e4 = rel_err(log_sampling_prob_asym(c, p, AsymRegime::LargeBetaPos),
                        log_sampling_prob(c, p));
    ratio_row("sampling_strong_pos", e3, e4, 2.0);
  }
  // Sampling probability, large sample (leading order).
  {
    ModelParams p{0.2, 0.4, -3.0};
    double e1 = rel_err(log_sampling_prob_asym({2, 200}, p, AsymRegime::LargeN2FixedBeta),
                        log_sampling_prob({2, 200}, p));
    double e2 = rel_err(log_sampling_prob_asym({2, 400}, p, AsymRegime::LargeN2FixedBeta),
                        log_sampling_prob({2, 400}, p));
    ratio_row("sampling_large_n2", e1, e2, 2.0);
  }
  // Scaled-selection sampling forms (informational rows).
  {
    ModelParams p{0.2, 0.3, 0.0};
    p.beta = -0.5 * 400;
    double e1 = rel_err(log_sampling_prob_asym({3, 400}, p, AsymRegime::ScaledBetaLt1),
                        log_sampling_prob({3, 400}, p));
    p.beta = -0.5 * 800;
    double e2 = rel_err(log_sampling_prob_asym({3, 800}, p, AsymRegime::ScaledBetaLt1),
                        log_sampling_prob({3, 800}, p));
    ratio_row("sampling_scaled_neg", e1, e2, 2.0, false);
    ModelParams q{0.5, 0.5, 2.0 * 300};
    double e3 = rel_err(log_sampling_prob_asym({1, 300}, q, AsymRegime::ScaledBetaGt1),
                        log_sampling_prob({1, 300}, q));
    q.beta = 2.0 * 600;
    double e4 = rel_err(log_sampling_prob_asym({1, 600}, q, AsymRegime::ScaledBetaGt1),
                        log_sampling_prob({1, 600}, q));
    ratio_row("sampling_scaled_gt1", e3, e4, 2.0, false);
  }
  // Hypergeometric asymptotics: leading order halves, the displayed
  // first-correction forms quarter, like the gamma-ratio expansion.
  {
    HypArgs lo{1.2, 3.4, -200.0}, hi{1.2, 3.4, -400.0};
    double l1 = rel_err(hyp1f1_asym(lo, AsymRegime::LargeBetaNeg, 0, AsymOrder::Leading)
                            .log_magnitude,
                        hyp1f1(lo).log_magnitude);
    double l2 = rel_err(hyp1f1_asym(hi, AsymRegime::LargeBetaNeg, 0, AsymOrder::Leading)
                            .log_magnitude,
                        hyp1f1(hi).log_magnitude);
    ratio_row("hyp_large_neg_leading", l1, l2, 2.0);
    double c1 = rel_err(hyp1f1_asym(lo, AsymRegime::LargeBetaNeg, 0).log_magnitude,
                        hyp1f1(lo).log_magnitude);
    double c2 = rel_err(hyp1f1_asym(hi, AsymRegime::LargeBetaNeg, 0).log_magnitude,
                        hyp1f1(hi).log_magnitude);
    ratio_row("hyp_large_neg_corrected", c1, c2, 4.0);
    lo.z = 200.0;
    hi.z = 400.0;
    double p1 = rel_err(hyp1f1_asym(lo, AsymRegime::LargeBetaPos, 0, AsymOrder::Leading)
                            .log_magnitude,
                        hyp1f1(lo).log_magnitude);
    double p2 = rel_err(hyp1f1_asym(hi, AsymRegime::LargeBetaPos, 0, AsymOrder::Leading)
                            .log_magnitude,
                        hyp1f1(hi).log_magnitude);
    ratio_row("hyp_large_pos_leading", p1, p2, 2.0);
    double q1 = rel_err(hyp1f1_asym(lo, AsymRegime::LargeBetaPos, 0).log_magnitude,
                        hyp1f1(lo).log_magnitude);
    double q2 = rel_err(hyp1f1_asym(hi, AsymRegime::LargeBetaPos, 0).log_magnitude,
                        hyp1f1(hi).log_magnitude);
    ratio_row("hyp_large_pos_corrected", q1, q2, 4.0);
  }
  {
    HypArgs lo{1.5, 2.0 + 200.0, 1.7}, hi{1.5, 2.0 + 400.0, 1.7};
    double l1 = rel_err(
        hyp1f1_asym(lo, AsymRegime::LargeN2FixedBeta, 200, AsymOrder::Leading).log_magnitude,
        hyp1f1(lo).log_magnitude);
    double l2 = rel_err(
        hyp1f1_asym(hi, AsymRegime::LargeN2FixedBeta, 400, AsymOrder::Leading).log_magnitude,
        hyp1f1(hi).log_magnitude);
    ratio_row("hyp_large_n2_leading", l1, l2, 2.0);
    double c1 = rel_err(hyp1f1_asym(lo, AsymRegime::LargeN2FixedBeta, 200).log_magnitude,
                        hyp1f1(lo).log_magnitude);
    double c2 = rel_err(hyp1f1_asym(hi, AsymRegime::LargeN2FixedBeta, 400).log_magnitude,
                        hyp1f1(hi).log_magnitude);
    ratio_row("hyp_large_n2_corrected", c1, c2, 4.0);
  }
  // Gamma-ratio expansion is second order.
  {
    double e1 = std::fabs(gamma_ratio_asym(0.4, 2.1, 50) /
                              std::exp(log_gamma_ratio_exact(0.4, 2.1, 50)) -
                          1.0);
    double e2 = std::fabs(gamma_ratio_asym(0.4, 2.1, 100) /
                              std::exp(log_gamma_ratio_exact(0.4, 2.1, 100)) -
                          1.0);
    ratio_row("gamma_ratio", e1, e2, 4.0);
  }
  // Scaled-argument hypergeometric forms at n2 = 400.
  {
    long n2 = 400;
    for (double bt : {-0.5, 0.5}) {
      HypArgs a{0.5, 1.0 + static_cast<double>(n2), bt * static_cast<double>(n2)};
      double e = rel_err(hyp1f1_asym(a, AsymRegime::ScaledBetaLt1, n2).log_magnitude,
                         hyp1f1(a).log_magnitude);
      std::string name = bt < 0 ? "hyp_scaled_lt1_neg" : "hyp_scaled_lt1_pos";
      out.table.add(name + "_rel_err", e, 0.0, 1, cfg.seed);
      chk.require(name + " rel err < 0.05", e < 0.05, "err=" + fmt(e));
    }
    HypArgs a{0.5, 1.0 + static_cast<double>(n2), 2.0 * static_cast<double>(n2)};
    double e = rel_err(hyp1f1_asym(a, AsymRegime::ScaledBetaGt1, n2).log_magnitude,
                       hyp1f1(a).log_magnitude);
    out.table.add("hyp_scaled_gt1_rel_err", e, 0.0, 1, cfg.seed);
    chk.require("hyp_scaled_gt1 rel err < 0.05", e < 0.05, "err=" + fmt(e));
  }

  for (const auto& r : rows) {
    out.table.add(r.name + "_err_lo", r.err_lo, 0.0, 1, cfg.seed);
    out.table.add(r.name + "_err_hi", r.err_hi, 0.0, 1, cfg.seed);
    out.table.add(r.name + "_ratio", r.ratio, 0.0, 1, cfg.seed);
    if (r.checked) {
      bool ok = r.ratio > 0.7 * r.expected && r.ratio < 1.3 * r.expected;
      chk.require(r.name + " error ratio ~ " + fmt(r.expected), ok,
                  "ratio=" + fmt(r.ratio));
    }
  }
  return out;
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunOutput out;
  if (cfg.scenario == "i" || cfg.scenario == "ii" || cfg.scenario == "iii_a" ||
      cfg.scenario == "iii_b") {
    out = run_scenario_random_background(cfg);
  } else if (cfg.scenario == "time_varying") {
    out = run_scenario_time_varying(cfg);
  } else if (cfg.scenario == "asg_crosscheck") {
    out = run_scenario_asg_crosscheck(cfg);
  } else if (cfg.scenario == "moran") {
    out = run_scenario_moran(cfg);
  } else if (cfg.scenario == "asymptotics_audit") {
    out = run_scenario_audit(cfg);
  } else {
    throw std::invalid_argument("unknown scenario: " + cfg.scenario);
  }
  if (!cfg.out.empty()) {
    write_file(cfg.out, cfg.format == "json" ? to_json(out.table) : to_csv(out.table));
  }
  return out;
}

}  // namespace latmut
