#include "exq/encoding.hpp"
#include "exq/invariants.hpp"
#include "exq/schedule_io.hpp"
#include "exq/sectors.hpp"
#include "exq/synthesis.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <string>

// Command-line front end: synthesize exchange schedules, verify them from
// scratch, and inspect the encoding. Exit codes: 0 success, 2 search failure,
// 64 usage error, 65 malformed data.

namespace {

using namespace exq;
using nlohmann::ordered_json;

constexpr const char* kToolVersion = "exq 0.1.0";

constexpr int kExitSearchFailure = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;

struct TargetSpec {
  std::string name;
  bool two_qubit = false;
  Matrix4cd gate4;
  Matrix2cd gate2;
};

TargetSpec parse_target(const std::string& text) {
  TargetSpec t;
  t.name = text;
  if (text == "cnot") {
    t.two_qubit = true;
    t.gate4 = cnot_gate();
  } else if (text == "cz") {
    t.two_qubit = true;
    t.gate4 = cz_gate();
  } else if (text == "swap-logical") {
    t.two_qubit = true;
    t.gate4 = swap_gate();
  } else if (text.rfind("rz:", 0) == 0) {
    t.gate2 = rz_gate(std::stod(text.substr(3)));
  } else if (text.rfind("rx:", 0) == 0) {
    t.gate2 = rx_gate(std::stod(text.substr(3)));
  } else if (text.rfind("file:", 0) == 0) {
    const ordered_json j = ordered_json::parse(read_text_file(text.substr(5)));
    if (j.at("dim").get<int>() != 2)
      throw ScheduleParseError("target files hold a 2x2 unitary");
    const auto& e = j.at("entries");
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        t.gate2(r, c) = Complex{e.at(r).at(c).at(0).get<double>(),
                                e.at(r).at(c).at(1).get<double>()};
    if (!is_unitary(Matrix(t.gate2), 1e-8))
      throw ScheduleParseError("target file entries are not unitary");
  } else {
    throw CLI::ValidationError("--target",
                               "expected cnot, cz, swap-logical, rz:<angle>, "
                               "rx:<angle> or file:<path>");
  }
  return t;
}

double parse_half_integer(const std::string& text) {
  const auto slash = text.find('/');
  if (slash != std::string::npos)
    return std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
  return std::stod(text);
}

ordered_json report_common(const OptimizationReport& rep) {
  ordered_json j;
  j["success"] = rep.success;
  j["seed"] = rep.seed;
  j["restarts"] = rep.restarts;
  j["best_restart"] = rep.best_restart;
  j["iterations"] = rep.total_iterations;
  j["f"] = format_time(rep.objective);
  j["leakage"] = format_time(rep.leakage);
  if (rep.correction_residual >= 0.0)
    j["correction_residual"] = format_time(rep.correction_residual);
  ordered_json times = ordered_json::array();
  for (Eigen::Index k = 0; k < rep.best_times.size(); ++k)
    times.push_back(format_time(rep.best_times(k)));
  j["times"] = times;
  if (!rep.observed_relations.empty()) j["observed_relations"] = rep.observed_relations;
  return j;
}

ordered_json pattern_json(const PulseSequence& seq) {
  ordered_json steps = ordered_json::array();
  for (const auto& step : seq.steps) {
    ordered_json s = ordered_json::array();
    for (const Coupling& c : step) s.push_back(ordered_json::array({c.i, c.j}));
    steps.push_back(s);
  }
  return steps;
}

int cmd_synthesize(const std::string& target_text, const std::string& mode_text,
                   int max_steps, int restarts, std::uint64_t seed,
                   const std::string& out_path, int threads, bool subsystem,
                   bool exact, int max_patterns) {
  const TargetSpec target = parse_target(target_text);
  const Mode mode = mode_from_string(mode_text);
  const std::string report_path = out_path + ".report.json";

  ordered_json report;
  report["format"] = "exq-report";
  report["version"] = 1;
  report["command"] = "synthesize";
  report["target"] = target.name;
  report["mode"] = mode_text;
  report["max_steps"] = max_steps;
  report["seed"] = seed;

  bool success = false;
  PulseSequence sequence;
  ordered_json metadata;
  metadata["tool"] = kToolVersion;
  metadata["target"] = target.name;
  metadata["seed"] = seed;

  if (target.two_qubit) {
    TwoQubitSearchOptions opts;
    opts.mode = mode;
    opts.max_steps = max_steps;
    opts.restarts = restarts;
    opts.seed = seed;
    opts.threads = threads;
    opts.subsystem = subsystem;
    opts.max_patterns = max_patterns;
    if (exact) opts.equivalence = EquivalenceMode::Exact;
    const SynthesisOutcome outcome = synthesize_two_qubit(target.gate4, opts);
    success = outcome.success;
    sequence = outcome.sequence;
    report["patterns_tried"] = outcome.patterns_tried;
    report["pattern_index"] = outcome.pattern_index;
    report["min_f_seen"] = format_time(outcome.min_f_seen);
    report["best"] = report_common(outcome.report);
    metadata["objective"] = std::string(exact ? "exact" : "local-equivalence") +
                            (subsystem ? ", S=1 and S=0 sectors" : ", S=1 Sz=+1 sector") +
                            ", leakage weight 10";
    metadata["restarts"] = restarts;
    metadata["pattern_index"] = outcome.pattern_index;
    metadata["f"] = format_time(outcome.report.objective);
    metadata["leakage"] = format_time(outcome.report.leakage);
    if (outcome.report.correction_residual >= 0.0)
      metadata["correction_residual"] = format_time(outcome.report.correction_residual);
    if (!outcome.report.observed_relations.empty())
      metadata["observed_relations"] = outcome.report.observed_relations;
    std::cerr << "search: " << outcome.patterns_tried << " patterns, best f "
              << outcome.report.objective << ", leakage " << outcome.report.leakage
              << ", wall " << outcome.report.wall_seconds << " s\n";
  } else {
    SingleQubitOptions opts;
    opts.seed = seed;
    opts.restarts = std::max(restarts, 1);
    opts.threads = std::max(1, threads);
    const SingleQubitResult r =
        synthesize_single_qubit(target.gate2, mode, max_steps, opts);
    success = r.success;
    sequence = r.sequence;
    report["best"] = report_common(r.report);
    report["residual"] = format_time(r.residual);
    metadata["objective"] = "exact single-qubit, leakage weight 10";
    metadata["residual"] = format_time(r.residual);
    std::cerr << "single-qubit search: residual " << r.residual << "\n";
  }

  report["success"] = success;
  if (success) {
    report["pattern"] = pattern_json(sequence);
    save_schedule(make_schedule(sequence, metadata), out_path);
    std::cerr << "schedule written to " << out_path << "\n";
  }
  write_text_file(report_path, report.dump(2) + "\n");
  std::cerr << "report written to " << report_path << "\n";
  return success ? 0 : kExitSearchFailure;
}

int cmd_verify(const std::string& schedule_path, const std::string& target_text,
               const VerifyThresholds& thresholds, const std::string& report_path) {
  const ScheduleFile schedule = load_schedule(schedule_path);
  const TargetSpec target = parse_target(target_text);
  const PulseSequence seq = to_sequence(schedule);
  const Matrix target_matrix =
      target.two_qubit ? Matrix(target.gate4) : Matrix(target.gate2);
  const VerificationResult result = verify_sequence(seq, target_matrix, thresholds);
  for (const VerificationCheck& c : result.checks)
    std::printf("%-28s %14.6e  (< %.1e)  %s\n", c.name.c_str(), c.value, c.threshold,
                c.pass ? "pass" : "FAIL");
  std::printf("verdict: %s\n", result.pass ? "PASS" : "FAIL");
  if (!report_path.empty()) {
    ordered_json j = verification_json(result);
    j["schedule"] = schedule_path;
    j["target"] = target_text;
    write_text_file(report_path, j.dump(2) + "\n");
  }
  return result.pass ? 0 : 1;
}

int cmd_sector_info(const std::string& n_text, const std::string& s_text,
                    const std::string& sz_text) {
  const int n = std::stoi(n_text);
  const double s = parse_half_integer(s_text);
  const double sz = parse_half_integer(sz_text);
  const SectorBasis basis = sector_basis(n, s, sz);
  std::printf("sites      %d\n", n);
  std::printf("S          %s\n", s_text.c_str());
  std::printf("Sz         %s\n", sz_text.c_str());
  std::printf("dimension  %lld\n", static_cast<long long>(basis.dim()));
  std::printf("checksum   %016llx\n",
              static_cast<unsigned long long>(basis_checksum(basis.columns)));
  return 0;
}

int cmd_single_qubit(const std::string& target_text, const std::string& flavor_text,
                     int restarts, std::uint64_t seed, const std::string& out_path) {
  const TargetSpec target = parse_target(target_text);
  if (target.two_qubit)
    throw CLI::ValidationError("--target", "single-qubit targets only");
  SingleQubitFlavor flavor;
  if (flavor_text == "serial-4-nearest") flavor = SingleQubitFlavor::Serial4Nearest;
  else if (flavor_text == "serial-3-anypair") flavor = SingleQubitFlavor::Serial3AnyPair;
  else if (flavor_text == "parallel-3") flavor = SingleQubitFlavor::Parallel3;
  else
    throw CLI::ValidationError("--flavor",
                               "expected serial-4-nearest, serial-3-anypair or parallel-3");
  SingleQubitOptions opts;
  opts.restarts = restarts;
  opts.seed = seed;
  const SingleQubitResult r = decompose_single_qubit(target.gate2, flavor, opts);
  std::printf("residual  %.6e\n", r.residual);
  std::printf("times    ");
  for (Eigen::Index k = 0; k < r.times.size(); ++k)
    std::printf(" %s", format_time(r.times(k)).c_str());
  std::printf("\n");
  if (!out_path.empty() && r.success) {
    ordered_json metadata;
    metadata["tool"] = kToolVersion;
    metadata["target"] = target.name;
    metadata["flavor"] = flavor_text;
    metadata["seed"] = seed;
    metadata["residual"] = format_time(r.residual);
    save_schedule(make_schedule(r.sequence, metadata), out_path);
  }
  return r.success ? 0 : kExitSearchFailure;
}

int cmd_bloch_axis(const std::string& pair_text, const std::string& block_text) {
  int bi = 0, bj = 0, bk = 0;
  if (std::sscanf(block_text.c_str(), "%d,%d,%d", &bi, &bj, &bk) != 3)
    throw CLI::ValidationError("--block", "expected three comma-separated sites");
  int i = 0, j = 0;
  if (std::sscanf(pair_text.c_str(), "%d,%d", &i, &j) != 2)
    throw CLI::ValidationError("--pair", "expected two comma-separated sites");
  const BlochAxis axis = bloch_axis(CodeBlock{{bi, bj, bk}}, i, j);
  const double angle =
      std::acos(std::clamp(axis.axis.z(), -1.0, 1.0)) * 180.0 / 3.14159265358979323846;
  std::printf("axis          (%+.12f, %+.12f, %+.12f)\n", axis.axis.x(), axis.axis.y(),
              axis.axis.z());
  std::printf("angle-from-z  %.9f deg\n", angle);
  std::printf("rate          %.12f rad per unit tau\n", axis.rate);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exchange-only quantum logic on three-spin coded qubits"};
  app.require_subcommand(1);

  std::string target_text = "cnot", mode_text = "serial", out_path = "schedule.json";
  int max_steps = 19, restarts = 1500, threads = 0, max_patterns = 20000;
  std::uint64_t seed = 42;
  bool subsystem = false, exact = false;
  auto* syn = app.add_subcommand("synthesize", "search for an exchange schedule");
  syn->add_option("--target", target_text,
                  "cnot | cz | swap-logical | rz:<angle> | rx:<angle> | file:<path>");
  syn->add_option("--mode", mode_text, "serial | parallel-1d | parallel-2d");
  syn->add_option("--max-steps", max_steps, "steps (serial) or cycles (parallel)");
  syn->add_option("--restarts", restarts, "multistart budget per candidate pattern");
  syn->add_option("--seed", seed, "random seed; fixes the whole search");
  syn->add_option("--max-patterns", max_patterns, "serial pattern budget");
  syn->add_option("-o,--output", out_path, "schedule output path");
  syn->add_option("--threads", threads,
                  "worker threads (default: EXQ_THREADS or all cores)");
  syn->add_flag("--subsystem", subsystem, "score the S=0 six-spin sector as well");
  syn->add_flag("--exact", exact, "match the gate exactly instead of up to one-qubit gates");

  std::string schedule_path, verify_target = "cnot", verify_report;
  VerifyThresholds thresholds;
  auto* ver = app.add_subcommand("verify", "recompute a schedule from scratch and check it");
  ver->add_option("schedule", schedule_path, "schedule file")->required();
  ver->add_option("--target", verify_target, "gate the schedule claims to implement");
  ver->add_option("--tol-f", thresholds.f, "objective threshold");
  ver->add_option("--tol-leakage", thresholds.leakage, "leakage threshold");
  ver->add_option("--tol-residual", thresholds.entrywise_residual,
                  "entrywise residual threshold");
  ver->add_option("--tol-block", thresholds.block_offdiagonal,
                  "sector block off-diagonal threshold");
  ver->add_option("--report", verify_report, "write the verification report here");

  std::string n_text, s_text, sz_text;
  auto* sec = app.add_subcommand("sector-info", "dimension and checksum of a spin sector");
  sec->add_option("n", n_text, "number of spins")->required();
  sec->add_option("S", s_text, "total spin (e.g. 1 or 1/2)")->required();
  sec->add_option("Sz", sz_text, "projection (e.g. 0 or -1/2)")->required();

  std::string sq_target = "rz:1.5707963267948966", sq_flavor = "serial-4-nearest", sq_out;
  int sq_restarts = 60;
  std::uint64_t sq_seed = 7;
  auto* sq = app.add_subcommand("single-qubit", "decompose a coded one-qubit gate");
  sq->add_option("--target", sq_target, "rz:<angle> | rx:<angle> | file:<path>");
  sq->add_option("--flavor", sq_flavor,
                 "serial-4-nearest | serial-3-anypair | parallel-3");
  sq->add_option("--restarts", sq_restarts, "multistart budget");
  sq->add_option("--seed", sq_seed, "random seed");
  sq->add_option("-o,--output", sq_out, "write the schedule here");

  std::string pair_text = "1,2", block_text = "0,1,2";
  auto* ba = app.add_subcommand("bloch-axis", "logical rotation axis of an exchange pair");
  ba->add_option("--pair", pair_text, "coupled sites, e.g. 1,2");
  ba->add_option("--block", block_text, "code block sites, e.g. 0,1,2");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (syn->parsed())
      return cmd_synthesize(target_text, mode_text, max_steps, restarts, seed, out_path,
                            threads, subsystem, exact, max_patterns);
    if (ver->parsed())
      return cmd_verify(schedule_path, verify_target, thresholds, verify_report);
    if (sec->parsed()) return cmd_sector_info(n_text, s_text, sz_text);
    if (sq->parsed())
      return cmd_single_qubit(sq_target, sq_flavor, sq_restarts, sq_seed, sq_out);
    if (ba->parsed()) return cmd_bloch_axis(pair_text, block_text);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ScheduleParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
