#pragma once

#include "exq/synthesis.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Schedule persistence and the verification entry point. Schedules are
// self-describing JSON documents; durations are stored as decimal strings
// (17 significant digits) and kept verbatim across parse/serialize so files
// round-trip byte-identically.

namespace exq {

struct ScheduleParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScheduleCoupling {
  int i = 0;
  int j = 0;
  std::string tau_text;
  double tau = 0.0;
};

struct ScheduleFile {
  int version = 1;
  int n_spins = 0;
  Mode mode = Mode::Serial;
  std::string layout;  // "line" or "grid-2x3"
  std::vector<std::vector<ScheduleCoupling>> steps;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

std::string format_time(double tau);         // fixed 17-significant-digit form
double parse_time(const std::string& text);  // strict, finite

std::string default_layout(Mode mode);

ScheduleFile make_schedule(const PulseSequence& seq,
                           nlohmann::ordered_json metadata = nlohmann::ordered_json::object());
PulseSequence to_sequence(const ScheduleFile& schedule);

std::string serialize_schedule(const ScheduleFile& schedule);
ScheduleFile parse_schedule(const std::string& text);

void save_schedule(const ScheduleFile& schedule, const std::string& path);
ScheduleFile load_schedule(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// FNV-1a over the basis entries rounded at 1e-12; stable across runs.
std::uint64_t basis_checksum(const Matrix& columns);

// --- verification ------------------------------------------------------------

struct VerifyThresholds {
  double f = 1e-12;
  double leakage = 1e-8;
  double entrywise_residual = 6e-5;
  double block_offdiagonal = 1e-8;
  double single_qubit_residual = 1e-8;
  double leakage_weight = 10.0;
};

struct VerificationCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct VerificationResult {
  double f = 0.0;
  double leakage = 0.0;
  double invariant_distance = 0.0;
  double entrywise_residual = 0.0;
  double block_offdiagonal = 0.0;
  double residual_unitarity = 0.0;
  bool pass = false;
  std::vector<VerificationCheck> checks;
};

// Recomputes everything from the full 2^n unitary by brute-force products,
// independent of the optimizer's sector-compiled path. The target is 4x4 for
// six-spin schedules and 2x2 for three-spin schedules.
VerificationResult verify_sequence(const PulseSequence& seq, const Matrix& target,
                                   const VerifyThresholds& thresholds = {});

nlohmann::ordered_json verification_json(const VerificationResult& result);

}  // namespace exq
