// keyneg: run scenarios, benchmark the maskers, demo the attacks, train.
//
// Set KEYNEG_LOG to trace, debug, info, warn (default) or off.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "keyneg/attacks.hpp"
#include "keyneg/bench.hpp"
#include "keyneg/fl.hpp"
#include "keyneg/scenario.hpp"
#include "keyneg/simnet.hpp"

using namespace keyneg;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("keyneg");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("KEYNEG_LOG")) spdlog::cfg::helpers::load_levels(env);
}

bool write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
  return static_cast<bool>(out);
}

json failure_summary(const Transcript& t) {
  json rounds = json::array();
  for (const auto& r : t.rounds) {
    if (r.status == RoundStatus::success) continue;
    json verdicts = json::object();
    for (const auto& [u, v] : r.verdicts)
      if (v != Verdict::accept) verdicts["u" + std::to_string(u)] = to_string(v);
    json rejections = json::array();
    for (const auto& x : r.rejections)
      rejections.push_back({{"at", to_string(x.at)}, {"from", to_string(x.from)}, {"reason", to_string(x.reason)}});
    rounds.push_back({{"round", r.round},
                      {"outcome", to_string(r.status)},
                      {"verdicts", verdicts},
                      {"failures", r.failures},
                      {"rejections", rejections}});
  }
  return {{"scenario", t.scenario}, {"ok", false}, {"rounds", rounds}};
}

struct RunArgs {
  std::string scenario;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool concurrent = false;
};

int cmd_run(const RunArgs& a) {
  ScenarioScript script;
  try {
    script = load_scenario(a.scenario);
    if (!a.mode.empty()) {
      auto m = parse_mode(a.mode);
      if (!m) throw ScriptError("--mode must be semi-honest or malicious");
      script.mode = *m;
    }
    if (a.seed) script.seed = *a.seed;
    script.validate();
  } catch (const ScriptError& e) {
    std::cerr << "keyneg run: " << e.what() << "\n";
    return kExitUsage;
  }

  Session session(script, a.concurrent ? Execution::concurrent : Execution::sequential);
  while (!session.finished()) {
    const RoundOutcome& r = session.run_round();
    spdlog::info("round {}: {} (|A|={}, |I|={})", r.round, to_string(r.status), r.roster_a.size(), r.roster_i.size());
    for (const auto& n : r.notes) spdlog::debug("round {}: {}", r.round, n);
  }
  const Transcript& t = session.transcript();
  if (!a.out.empty() && !write_file(a.out, t.to_jsonl())) {
    std::cerr << "keyneg run: cannot write " << a.out << "\n";
    return kExitUsage;
  }
  if (t.all_succeeded()) {
    std::cout << json{{"scenario", t.scenario}, {"ok", true}, {"rounds", t.rounds.size()}}.dump() << "\n";
    return 0;
  }
  std::cout << failure_summary(t).dump() << "\n";
  return kExitFailure;
}

struct BenchArgs {
  std::vector<std::size_t> users{100};
  std::vector<std::size_t> vec{16384};
  std::vector<std::size_t> servers{5};
  std::string mode = "semi-honest";
  std::string masker = "keyneg";
  std::string csv;
  std::size_t reps = 5;
  std::size_t sample = 0;
  std::uint64_t seed = 1;
  bool masking_only = false;
};

int cmd_bench(const BenchArgs& a) {
  auto mode = parse_mode(a.mode);
  auto masker = parse_masker(a.masker);
  if (!mode || !masker) {
    std::cerr << "keyneg bench: unknown --mode or --masker\n";
    return kExitUsage;
  }
  std::string body = bench_csv_header() + "\n";
  for (std::size_t m : a.users) {
    for (std::size_t l : a.vec) {
      for (std::size_t d : a.servers) {
        BenchParams p;
        p.masker = *masker;
        p.mode = *mode;
        p.users = m;
        p.vec_len = l;
        p.servers = d;
        p.reps = a.reps;
        p.seed = a.seed;
        p.masking_only = a.masking_only;
        p.masking_sample = a.sample;
        spdlog::info("bench users={} vec={} servers={}", m, l, d);
        for (const auto& row : bench_point(p)) body += to_csv(row) + "\n";
      }
    }
  }
  if (a.csv.empty()) {
    std::cout << body;
  } else if (!write_file(a.csv, body)) {
    std::cerr << "keyneg bench: cannot write " << a.csv << "\n";
    return kExitUsage;
  }
  return 0;
}

std::string preview(const FieldVector& v, const FixedPointCodec& codec, std::size_t n = 4) {
  const auto reals = decode(v, codec);
  std::string out = "[";
  for (std::size_t i = 0; i < std::min(n, reals.size()); ++i) {
    if (i) out += ", ";
    out += std::to_string(reals[i]);
  }
  if (reals.size() > n) out += ", ...";
  return out + "]";
}

ScenarioScript fsbs_script(std::uint64_t seed, std::size_t rounds) {
  ScenarioScript s;
  s.name = "fsbs";
  s.seed = seed;
  s.rounds = rounds;
  s.users = {1, 2, 3, 4, 5};
  s.intermediate_servers = 3;
  s.vector_length = 64;
  s.threshold = 2;
  return s;
}

int cmd_attack_demo(const std::string& which, std::uint64_t seed, std::size_t rounds, std::uint64_t leak) {
  const FixedPointCodec codec = FixedPointCodec::defaults();
  if (which == "fsbs-baseline" || which == "fsbs-ours") {
    if (leak == 0 || leak > rounds) {
      std::cerr << "keyneg attack-demo: --leak-round must lie in 1.." << rounds << "\n";
      return kExitUsage;
    }
    const ScenarioScript script = fsbs_script(seed, rounds);
    const UserId target = 1;
    const bool ours = which == "fsbs-ours";
    const FsbsReport rep = ours ? attack_fsbs_ours(script, target, leak)
                                : attack_fsbs_baseline(script, target, leak, script.intermediate_servers);
    std::cout << rep.scheme << ": secrets of u" << target << " leaked at round " << leak << "\n";
    for (std::size_t i = 0; i < rep.recovered.size(); ++i) {
      std::cout << "round " << i + 1 << ": ";
      if (rep.recovered[i])
        std::cout << "recovered x = " << preview(rep.reconstructed[i], codec) << " (matches plaintext)";
      else
        std::cout << "not recovered";
      if (i + 1 == leak) std::cout << " [leaked round]";
      std::cout << "\n";
    }
    if (ours) {
      const bool none = rep.other_rounds_recovered() == 0;
      std::cout << (none ? "no rounds recovered" : "ROUNDS RECOVERED") << " outside the leaked round; residual "
                << (rep.residual_uniform() ? "looks uniform" : "is NOT uniform") << " (mean " << rep.residual_mean
                << ", chi2 " << rep.residual_chi2 << ")\n";
      return none && rep.residual_uniform() ? 0 : kExitFailure;
    }
    const FsbsReport partial =
        attack_fsbs_baseline(script, target, leak, script.intermediate_servers - 1);
    std::cout << "recovered " << rep.rounds_recovered() << "/" << rounds << " rounds with all seeds; "
              << partial.rounds_recovered() << "/" << rounds << " with " << script.intermediate_servers - 1 << " of "
              << script.intermediate_servers << " seeds\n";
    return rep.rounds_recovered() == rounds && partial.rounds_recovered() == 0 ? 0 : kExitFailure;
  }

  auto kind = parse_attack_kind(which);
  if (!kind) {
    std::cerr << "keyneg attack-demo: unknown attack '" << which << "'\n";
    return kExitUsage;
  }
  const AttackTrial t = run_attack(*kind, seed);
  std::cout << to_string(*kind) << ": " << t.script.users.size() << " users, " << t.script.intermediate_servers
            << " intermediate servers, round outcome " << to_string(t.outcome.status) << "\n";
  if (*kind == AttackKind::sybil) {
    for (const auto& r : t.outcome.rejections)
      std::cout << to_string(r.at) << " rejected share claiming " << to_string(r.from) << ": " << to_string(r.reason)
                << "\n";
    std::cout << "rejection reason " << t.observed.begin()->second << "\n";
  } else {
    for (const auto& [u, v] : t.outcome.verdicts) std::cout << "u" << u << ": " << to_string(v) << "\n";
  }
  std::cout << (t.detected ? "attack detected" : "ATTACK NOT DETECTED") << " (expected " << t.expected << ")\n";
  return t.detected ? 0 : kExitFailure;
}

struct FlArgs {
  std::size_t rounds = 50;
  std::size_t users = 8;
  std::uint64_t seed = 7;
  std::string mode = "semi-honest";
  std::string csv;
};

int cmd_fl(const FlArgs& a) {
  FlConfig cfg;
  cfg.rounds = a.rounds;
  cfg.users = a.users;
  cfg.seed = a.seed;
  auto mode = parse_mode(a.mode);
  if (!mode) {
    std::cerr << "keyneg fl: unknown --mode\n";
    return kExitUsage;
  }
  cfg.mode = *mode;
  const FlResult r = train_paired(cfg);
  if (!a.csv.empty() && !write_file(a.csv, r.to_csv())) {
    std::cerr << "keyneg fl: cannot write " << a.csv << "\n";
    return kExitUsage;
  }
  std::cout << "final accuracy: secure " << r.final_secure_accuracy() << ", plain " << r.final_plain_accuracy()
            << "\nmax aggregate gap " << r.max_gap() << " (bound " << r.gap_bound << "), field sums exact: "
            << (r.all_exact() ? "yes" : "no") << "\n";
  return r.all_exact() && r.max_gap() <= r.gap_bound ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Secure aggregation with key-negation masking"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Execute a scenario file");
  run->add_option("scenario", run_args.scenario, "Scenario JSON file")->required();
  run->add_option("--mode", run_args.mode, "Override the scenario mode (semi-honest|malicious)");
  run->add_option("--seed", run_args.seed, "Override the scenario seed");
  run->add_option("--out", run_args.out, "Write the transcript (JSON lines) here");
  run->add_flag("--concurrent", run_args.concurrent, "Run each phase's parties on threads");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Time the protocol kernels");
  bench->add_option("--users", bench_args.users, "User counts")->delimiter(',');
  bench->add_option("--vec", bench_args.vec, "Vector lengths")->delimiter(',');
  bench->add_option("--servers", bench_args.servers, "Intermediate server counts")->delimiter(',');
  bench->add_option("--mode", bench_args.mode, "semi-honest|malicious");
  bench->add_option("--masker", bench_args.masker, "keyneg|prf-baseline");
  bench->add_option("--csv", bench_args.csv, "Write CSV here instead of stdout");
  bench->add_option("--reps", bench_args.reps, "Repetitions per point (median reported)")->check(CLI::Range(1, 1000));
  bench->add_option("--sample", bench_args.sample, "Users timed per masking repetition (0: all)");
  bench->add_option("--seed", bench_args.seed, "Seed");
  bench->add_flag("--masking-only", bench_args.masking_only, "Skip the aggregation and verification phases");

  std::string which;
  std::uint64_t attack_seed = 1;
  std::size_t attack_rounds = 5;
  std::uint64_t leak_round = 3;
  auto* attack = app.add_subcommand("attack-demo", "Demonstrate an attack and its outcome");
  attack->add_option("--which", which, "fsbs-baseline|fsbs-ours|inconsistency|sybil|roster-forge|drop-honest-user")
      ->required();
  attack->add_option("--seed", attack_seed, "Seed");
  attack->add_option("--rounds", attack_rounds, "Rounds for the secrecy demos");
  attack->add_option("--leak-round", leak_round, "Round whose secrets leak");

  FlArgs fl_args;
  auto* fl = app.add_subcommand("fl", "Train with secure and plaintext averaging side by side");
  fl->add_option("--rounds", fl_args.rounds, "Training rounds");
  fl->add_option("--users", fl_args.users, "Users");
  fl->add_option("--seed", fl_args.seed, "Seed");
  fl->add_option("--mode", fl_args.mode, "semi-honest|malicious");
  fl->add_option("--csv", fl_args.csv, "Write the paired curve here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*bench) return cmd_bench(bench_args);
    if (*attack) return cmd_attack_demo(which, attack_seed, attack_rounds, leak_round);
    if (*fl) return cmd_fl(fl_args);
  } catch (const std::exception& e) {
    std::cerr << "keyneg: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
