// roamsim command-line front end.
//
//   roamsim run      --scenario F --policy rssi|eps|madar --seed N --duration S --out DIR
//   roamsim compare  --scenario F --policies rssi,eps,madar --seeds 1,2,3 --out DIR [--stas 5,10]
//   roamsim train    --scenario F --episodes N --checkpoint FILE
//   roamsim calc     shannon|contention|scan-time ...
//   roamsim contention [--taus ...] [--ksta ...]
//
// Exit status is 0 on success and 2 on any usage, configuration or runtime
// error. ROAMSIM_LOG=error|info|debug controls standard-error logging.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "roamsim/commands.hpp"

namespace {

using namespace roamsim;
using roamsim::cli::UsageError;

constexpr int kExitError = 2;

template <class T>
std::optional<T> opt_if(const CLI::Option* o, const T& v) {
  return o->count() ? std::optional<T>(v) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  const auto log = Logger::from_env();
  CLI::App app{"roamsim: multi-AP roaming simulator with RSSI, epsilon-greedy and MADAR AP selection"};
  app.set_version_flag("--version", ROAMSIM_VERSION);
  app.require_subcommand(1);

  // run ---------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Simulate one policy for one seed and write CSV outputs");
  cli::RunRequest run_req;
  std::string manifest_path;
  double run_duration = 0, run_eps = 0;
  run->add_option("--scenario", run_req.scenario_path, "Scenario file (key = value lines)");
  run->add_option("--policy", run_req.policy, "rssi, eps or madar");
  run->add_option("--seed", run_req.seed, "Root seed");
  auto* run_dur_opt = run->add_option("--duration", run_duration, "Simulated seconds (default: scenario duration_s)");
  run->add_option("--out", run_req.out, "Output directory");
  auto* run_eps_opt = run->add_option("--epsilon", run_eps, "Fixed exploration rate");
  run->add_option("--episodes", run_req.episodes, "MADAR training episodes before the measured run");
  run->add_option("--episode-duration", run_req.episode_s, "Seconds per training episode");
  run->add_option("--checkpoint", run_req.checkpoint, "Initial MADAR networks from `roamsim train`");
  auto* manifest_opt =
      run->add_option("--manifest", manifest_path, "Re-run a previous manifest.json (other flags except --out ignored)");

  // compare -----------------------------------------------------------------
  auto* compare = app.add_subcommand("compare", "Run policies x seeds (x STA counts) and write summary.csv");
  cli::CompareRequest cmp_req;
  double cmp_duration = 0, cmp_eps = 0;
  compare->add_option("--scenario", cmp_req.scenario_path, "Scenario file")->required();
  compare->add_option("--policies", cmp_req.policies, "Comma-separated policies")->delimiter(',');
  compare->add_option("--seeds", cmp_req.seeds, "Comma-separated seeds")->delimiter(',');
  compare->add_option("--stas", cmp_req.stas, "Comma-separated STA counts to sweep")->delimiter(',');
  auto* cmp_dur_opt = compare->add_option("--duration", cmp_duration, "Simulated seconds per run");
  compare->add_option("--out", cmp_req.out, "Output directory")->required();
  auto* cmp_eps_opt = compare->add_option("--epsilon", cmp_eps, "Fixed exploration rate");
  compare->add_option("--episodes", cmp_req.episodes, "MADAR training episodes per seed");
  compare->add_option("--episode-duration", cmp_req.episode_s, "Seconds per training episode");
  compare->add_option("--jobs", cmp_req.jobs, "Worker threads");

  // train -------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train MADAR agents and save a checkpoint");
  cli::TrainRequest train_req;
  std::string train_scenario;
  train->add_option("--scenario", train_scenario, "Scenario file")->required();
  train->add_option("--seed", train_req.seed, "Root seed");
  train->add_option("--episodes", train_req.episodes, "Training episodes");
  train->add_option("--duration", train_req.episode_s, "Seconds per episode");
  train->add_option("--checkpoint", train_req.checkpoint, "Output checkpoint file")->required();

  // calc --------------------------------------------------------------------
  auto* calc = app.add_subcommand("calc", "Formula calculators (JSON on standard output)");
  calc->require_subcommand(1);
  auto* shannon = calc->add_subcommand("shannon", "Shannon capacity B log2(1 + SNR)");
  double snr_linear = 0, bw = 20e6;
  shannon->add_option("--snr-linear", snr_linear, "Linear SNR")->required();
  shannon->add_option("--bw", bw, "Bandwidth in Hz");

  auto* cont = calc->add_subcommand("contention", "UORA success probability, stages, backoff and delay");
  double tau = 0.25, pc = 0;
  int ksta = 1, w0 = 16, stages = 6;
  double t_ifs_us = 16, slot_us = 9;
  bool idle = false;
  cont->add_option("--tau", tau, "Transmit probability per stage")->required();
  auto* pc_opt = cont->add_option("--pc", pc, "Collision probability (derived from tau and K when omitted)");
  cont->add_option("--ksta", ksta, "Contending STAs")->required();
  cont->add_option("--w0", w0, "Minimum contention window");
  cont->add_option("--stages", stages, "Backoff stage limit U");
  cont->add_option("--t-ifs-us", t_ifs_us, "Inter-frame space in microseconds");
  cont->add_option("--slot-us", slot_us, "Slot time in microseconds");
  cont->add_flag("--idle", idle, "Report T_cont for an idle channel");

  auto* scan = calc->add_subcommand("scan-time", "Total active-scan time T_CS");
  int channels = 5, responding = 0;
  std::string mode = "fsm";
  scanning::ScanTiming timing;
  double t_pb_ms = 1, t_min_ms = 10, t_max_ms = 100, t_sw_ms = 5;
  scan->add_option("--channels", channels, "Channels scanned")->required();
  auto* resp_opt = scan->add_option("--responding", responding, "Channels with a responding AP (default: all)");
  scan->add_option("--mode", mode, "fsm or eq3-literal");
  scan->add_option("--t-pb-ms", t_pb_ms, "Probe time");
  scan->add_option("--t-min-ms", t_min_ms, "MinChannelTime");
  scan->add_option("--t-max-ms", t_max_ms, "MaxChannelTime");
  scan->add_option("--t-sw-ms", t_sw_ms, "Channel switch time");

  // contention sweep --------------------------------------------------------
  auto* sweep = app.add_subcommand("contention", "CSV sweep of contention statistics over (tau, K_sta)");
  std::vector<double> taus{0.1, 0.25, 0.5};
  std::vector<int> ks{2, 5, 10, 20};
  int sweep_w0 = 16, sweep_stages = 6;
  double sweep_ifs = 16, sweep_slot = 9;
  sweep->add_option("--taus", taus, "Comma-separated tau values")->delimiter(',');
  sweep->add_option("--ksta", ks, "Comma-separated K_sta values")->delimiter(',');
  sweep->add_option("--w0", sweep_w0, "Minimum contention window");
  sweep->add_option("--stages", sweep_stages, "Backoff stage limit U");
  sweep->add_option("--t-ifs-us", sweep_ifs, "Inter-frame space in microseconds");
  sweep->add_option("--slot-us", sweep_slot, "Slot time in microseconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*run) {
      if (manifest_opt->count()) {
        const auto out_override = run_req.out;
        run_req = cli::request_from_manifest(cli::read_file(manifest_path, "--manifest"));
        if (!out_override.empty()) run_req.out = out_override;
      } else {
        if (run_req.scenario_path.empty()) throw UsageError("--scenario", "scenario file required");
        run_req.scenario_text = cli::read_file(run_req.scenario_path, "--scenario");
        run_req.duration_s = opt_if(run_dur_opt, run_duration);
        run_req.epsilon = opt_if(run_eps_opt, run_eps);
      }
      cli::execute_run(run_req, log);
    } else if (*compare) {
      cmp_req.scenario_text = cli::read_file(cmp_req.scenario_path, "--scenario");
      cmp_req.duration_s = opt_if(cmp_dur_opt, cmp_duration);
      cmp_req.epsilon = opt_if(cmp_eps_opt, cmp_eps);
      const auto rows = cli::execute_compare(cmp_req, log);
      report::write_summary(std::cout, rows);
    } else if (*train) {
      train_req.scenario_text = cli::read_file(train_scenario, "--scenario");
      const auto stats = cli::execute_train(train_req, log);
      std::cout << "episode,handoffs,assoc_delay_s,loss\n";
      for (const auto& s : stats) {
        std::cout << s.episode << ',' << s.handoffs << ',' << report::num(s.mean_association_delay) << ','
                  << report::num(s.mean_loss) << '\n';
      }
    } else if (*shannon) {
      std::cout << cli::calc_shannon(snr_linear, bw).dump(2) << '\n';
    } else if (*cont) {
      std::cout << cli::calc_contention(tau, opt_if(pc_opt, pc), ksta, w0, stages, t_ifs_us, slot_us, idle).dump(2)
                << '\n';
    } else if (*scan) {
      for (auto [flag, v] : {std::pair{"--t-pb-ms", t_pb_ms}, {"--t-min-ms", t_min_ms}, {"--t-max-ms", t_max_ms},
                             {"--t-sw-ms", t_sw_ms}}) {
        if (!(v >= 0)) throw UsageError(flag, "must be >= 0");
      }
      timing = {t_pb_ms / 1000.0, t_min_ms / 1000.0, t_max_ms / 1000.0, t_sw_ms / 1000.0};
      std::cout << cli::calc_scan_time(channels, opt_if(resp_opt, responding), mode, timing).dump(2) << '\n';
    } else if (*sweep) {
      cli::contention_sweep(std::cout, taus, ks, sweep_w0, sweep_stages, sweep_ifs, sweep_slot);
    }
  } catch (const std::exception& e) {
    std::cerr << "roamsim: " << e.what() << '\n';
    return kExitError;
  }
  return 0;
}
