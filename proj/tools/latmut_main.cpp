#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "latmut/ancestry.hpp"
#include "latmut/asg.hpp"
#include "latmut/diffusion.hpp"
#include "latmut/experiment.hpp"
#include "latmut/moran.hpp"
#include "latmut/stationary.hpp"
#include "latmut/table.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_output(const latmut::RunOutput& out, const latmut::ExperimentConfig& cfg) {
  std::cout << latmut::to_csv(out.table);
  for (const auto& c : out.checks)
    std::printf("[%s] %s (%s)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                c.detail.c_str());
  if (!cfg.out.empty()) std::fprintf(stderr, "wrote %s\n", cfg.out.c_str());
}

struct CommonFlags {
  std::string config_path;
  std::string scenario;
  double theta1 = -1.0, theta2 = -1.0, beta = 0.0, beta_tilde = 0.0;
  bool beta_set = false, beta_tilde_set = false;
  long n1 = -1, n2 = -1, replicates = -1, replicate_offset = -1;
  double dt = -1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;
  std::string out, format;
  bool check = false;
  std::string dump_events;
  long dump_limit = -1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file (flags override fields)");
  cmd->add_option("--theta1", f.theta1, "scaled A2->A1 mutation rate");
  cmd->add_option("--theta2", f.theta2, "scaled A1->A2 mutation rate");
  auto* b = cmd->add_option("--beta", f.beta, "scaled selection coefficient");
  auto* bt = cmd->add_option("--beta-tilde", f.beta_tilde, "beta / n2");
  b->excludes(bt);
  cmd->add_option("--n1", f.n1, "observed count of allele 1");
  cmd->add_option("--n2", f.n2, "observed count of allele 2");
  cmd->add_option("--replicates", f.replicates, "Monte Carlo replicates");
  cmd->add_option("--replicate-offset", f.replicate_offset,
                  "index offset for split invocations");
  cmd->add_option("--dt", f.dt, "time step");
  auto* s = cmd->add_option("--seed", f.seed, "64-bit RNG seed");
  cmd->add_option("--threads", f.threads, "worker threads (0 = hardware)");
  cmd->add_option("--out", f.out, "output file");
  cmd->add_option("--format", f.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--check", f.check, "turn embedded thresholds into the exit code");
  cmd->add_option("--dump-events", f.dump_events, "event-log CSV path");
  cmd->add_option("--dump-limit", f.dump_limit, "replicates to dump");
  cmd->callback([&f, b, bt, s]() {
    f.beta_set = b->count() > 0;
    f.beta_tilde_set = bt->count() > 0;
    f.seed_set = s->count() > 0;
  });
}

latmut::ExperimentConfig build_config(const CommonFlags& f, const std::string& scenario) {
  latmut::ExperimentConfig cfg;
  if (!f.config_path.empty())
    cfg = latmut::ExperimentConfig::from_json_text(read_file(f.config_path));
  else
    cfg = latmut::ExperimentConfig::defaults_for(scenario);
  if (!scenario.empty()) cfg.scenario = scenario;
  if (f.theta1 >= 0.0) cfg.theta1 = f.theta1;
  if (f.theta2 >= 0.0) cfg.theta2 = f.theta2;
  if (f.beta_set) {
    cfg.beta = f.beta;
    cfg.use_beta_tilde = false;
  }
  if (f.beta_tilde_set) {
    cfg.beta_tilde = f.beta_tilde;
    cfg.use_beta_tilde = true;
  }
  if (f.n1 >= 0) cfg.n1 = f.n1;
  if (f.n2 >= 0) cfg.n2 = f.n2;
  if (f.replicates > 0) cfg.replicates = f.replicates;
  if (f.replicate_offset >= 0) cfg.replicate_offset = f.replicate_offset;
  if (f.dt > 0.0) cfg.dt = f.dt;
  if (f.seed_set) cfg.seed = f.seed;
  if (f.threads >= 0) cfg.threads = f.threads;
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.format.empty()) cfg.format = f.format;
  if (f.check) cfg.check = true;
  if (!f.dump_events.empty()) cfg.dump_events = f.dump_events;
  if (f.dump_limit >= 0) cfg.dump_limit = f.dump_limit;
  return cfg;
}

int run_and_report(const latmut::ExperimentConfig& cfg) {
  latmut::RunOutput out = latmut::run_experiment(cfg);
  print_output(out, cfg);
  return cfg.check && !out.all_pass() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Genealogy and latent mutations of a two-allele locus under selection"};
  app.require_subcommand(1);

  // scenario
  auto* sc = app.add_subcommand("scenario", "run a limit-theorem scenario experiment");
  CommonFlags sf;
  std::string scenario_name;
  sc->add_option("--scenario", scenario_name,
                 "i | ii | iii_a | iii_b | time_varying | asg_crosscheck | moran | "
                 "asymptotics_audit");
  add_common(sc, sf);

  // asg
  auto* asg = app.add_subcommand("asg", "conditional ancestral selection graph tools");
  CommonFlags af;
  add_common(asg, af);
  double asg_theta = 1.0, asg_pi1 = 0.5;
  long ar1 = 2, ar2 = 2, av1 = 0, av2 = 0;
  bool asg_full = false, asg_dump = false, asg_crosscheck = false;
  asg->add_option("--theta", asg_theta, "total parent-independent mutation rate");
  asg->add_option("--pi1", asg_pi1, "target probability of allele 1");
  asg->add_option("--r1", ar1);
  asg->add_option("--r2", ar2);
  asg->add_option("--v1", av1);
  asg->add_option("--v2", av2);
  asg->add_flag("--full", asg_full, "dump the full table instead of the reduced one");
  asg->add_flag("--dump", asg_dump, "print the rate table as JSON");
  asg->add_flag("--crosscheck", asg_crosscheck, "run the cross-model experiment");

  // moran
  auto* moran = app.add_subcommand("moran", "discrete-model comparisons");
  CommonFlags mf;
  add_common(moran, mf);
  double moran_s = -1.0, moran_alpha = -1.0;
  moran->add_option("--s", moran_s, "selection against allele 1");
  moran->add_option("--alpha", moran_alpha, "sampled fraction n2/N");

  // audit
  auto* audit = app.add_subcommand("audit", "asymptotic-approximation error audit");
  CommonFlags uf;
  add_common(audit, uf);

  // sample-prob
  auto* sp = app.add_subcommand("sample-prob", "log sampling probability of (n1, n2)");
  CommonFlags pf;
  add_common(sp, pf);
  std::string sp_regime;
  sp->add_option("--regime", sp_regime,
                 "optional asymptotic regime: strong-neg | strong-pos | large-n2 | "
                 "scaled-lt1 | scaled-gt1");

  // posterior-sample
  auto* ps = app.add_subcommand("posterior-sample", "draws from the posterior frequency");
  CommonFlags qf;
  add_common(ps, qf);
  long ps_n = 1000;
  ps->add_option("--draws", ps_n, "number of draws");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sc->parsed()) {
      if (scenario_name.empty() && sf.config_path.empty())
        throw std::runtime_error("scenario: need --scenario or --config");
      return run_and_report(build_config(sf, scenario_name));
    }
    if (asg->parsed()) {
      if (asg_crosscheck) {
        latmut::ExperimentConfig cfg = build_config(af, "asg_crosscheck");
        cfg.theta = asg_theta;
        cfg.pi1 = asg_pi1;
        return run_and_report(cfg);
      }
      latmut::PimParams pim{asg_theta, asg_pi1, 1.0 - asg_pi1};
      double beta = af.beta_set ? af.beta : -1.0;
      latmut::AsgState state{ar1, ar2, av1, av2};
      latmut::RateTable tab = asg_full ? latmut::full_rates(state, pim, beta)
                                       : latmut::reduced_rates(state, pim, beta);
      nlohmann::json doc;
      doc["state"] = {{"r1", state.r1}, {"r2", state.r2}, {"v1", state.v1}, {"v2", state.v2}};
      doc["beta"] = beta;
      doc["theta"] = asg_theta;
      doc["pi1"] = asg_pi1;
      doc["null_rate"] = tab.null_rate;
      doc["total_unconditional"] = tab.total_unconditional;
      nlohmann::json entries = nlohmann::json::array();
      for (const auto& e : tab.entries)
        entries.push_back({{"label", e.label},
                           {"target", {e.target.r1, e.target.r2, e.target.v1, e.target.v2}},
                           {"rate", e.rate},
                           {"null", e.null_event}});
      doc["entries"] = entries;
      std::string text = doc.dump(2) + "\n";
      if (!af.out.empty())
        latmut::write_file(af.out, text);
      else
        std::cout << text;
      return 0;
    }
    if (moran->parsed()) {
      latmut::ExperimentConfig cfg = build_config(mf, "moran");
      if (moran_s > 0.0) cfg.moran_s = moran_s;
      if (moran_alpha > 0.0) cfg.moran_alpha = moran_alpha;
      return run_and_report(cfg);
    }
    if (audit->parsed()) {
      latmut::ExperimentConfig cfg = build_config(uf, "asymptotics_audit");
      return run_and_report(cfg);
    }
    if (sp->parsed()) {
      latmut::ExperimentConfig cfg = build_config(pf, pf.config_path.empty() ? "ii" : "");
      latmut::ModelParams par{cfg.theta1, cfg.theta2, cfg.effective_beta()};
      latmut::SampleCounts counts{cfg.n1, cfg.n2};
      double lq;
      if (sp_regime.empty()) {
        lq = latmut::log_sampling_prob(counts, par);
      } else {
        latmut::AsymRegime reg;
        if (sp_regime == "strong-neg") reg = latmut::AsymRegime::LargeBetaNeg;
        else if (sp_regime == "strong-pos") reg = latmut::AsymRegime::LargeBetaPos;
        else if (sp_regime == "large-n2") reg = latmut::AsymRegime::LargeN2FixedBeta;
        else if (sp_regime == "scaled-lt1") reg = latmut::AsymRegime::ScaledBetaLt1;
        else if (sp_regime == "scaled-gt1") reg = latmut::AsymRegime::ScaledBetaGt1;
        else throw std::runtime_error("unknown regime: " + sp_regime);
        lq = latmut::log_sampling_prob_asym(counts, par, reg);
      }
      std::printf("%.17g\n", lq);
      return 0;
    }
    if (ps->parsed()) {
      latmut::ExperimentConfig cfg = build_config(qf, qf.config_path.empty() ? "ii" : "");
      latmut::ModelParams par{cfg.theta1, cfg.theta2, cfg.effective_beta()};
      latmut::SampleCounts counts{cfg.n1, cfg.n2};
      std::string csv = "draw,value\n";
      latmut::Philox rng(cfg.seed, 0);
      for (long i = 0; i < ps_n; ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%ld,%.17g\n", i,
                      latmut::posterior_sample(counts, par, rng));
        csv += buf;
      }
      if (!qf.out.empty())
        latmut::write_file(qf.out, csv);
      else
        std::cout << csv;
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
