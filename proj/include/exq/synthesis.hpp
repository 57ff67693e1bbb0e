#pragma once

#include "exq/encoding.hpp"
#include "exq/invariants.hpp"
#include "exq/optimize.hpp"
#include "exq/sectors.hpp"
#include "exq/spin.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

// Pulse-sequence synthesis: express a target gate as a product of exchange
// steps by multi-start local minimization of the invariant-mismatch objective
//   f(tau) = sum_i |m_i(target) - m_i(logical block)|^2 + lambda * leakage^2
// evaluated in total-spin sector coordinates (the dynamics never leaves a
// sector, so a six-spin search runs in the nine-dimensional S=1, Sz=+1 space).

namespace exq {

enum class Mode { Serial, Parallel1D, Parallel2D };
enum class EquivalenceMode { LocalEquivalence, Exact };
enum class OptMethod { Bfgs, NelderMead };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& text);

struct PulseSequence {
  Mode mode = Mode::Serial;
  int sites = 0;
  std::vector<std::vector<Coupling>> steps;
};

// Layout rules: serial steps hold exactly one coupling (any distinct pair);
// parallel-1D couplings must be line-adjacent (|i-j| = 1); parallel-2D
// couplings must be adjacent on the 2x3 grid. A pair may appear once per step.
void validate_sequence(const PulseSequence& seq);

// Serial durations reduced to [0,1); a full period is a global phase.
PulseSequence canonicalized(PulseSequence seq);

// Ordered product of step unitaries on the full 2^n space.
Matrix sequence_unitary(const PulseSequence& seq);

std::vector<std::pair<int, int>> line_pairs(int n);
std::vector<std::pair<int, int>> grid_pairs_2x3();

using StepPattern = std::vector<std::pair<int, int>>;
using Pattern = std::vector<StepPattern>;

Pattern pattern_of(const PulseSequence& seq);
PulseSequence sequence_from(Mode mode, int sites, const Pattern& pattern,
                            const Eigen::VectorXd& taus);

struct SynthesisObjective {
  Matrix target;  // 2x2 (one block) or 4x4 (two blocks) unitary
  LogicalBasis basis;
  bool include_singlet_sector = false;  // score the six-spin S=0 sector too
  double leakage_weight = 10.0;
  EquivalenceMode equivalence = EquivalenceMode::LocalEquivalence;
};

SynthesisObjective two_qubit_objective(
    const Matrix4cd& target,
    EquivalenceMode equivalence = EquivalenceMode::LocalEquivalence,
    bool subsystem = false);
SynthesisObjective single_qubit_objective(const Matrix2cd& target);

// Pattern-specialized evaluator in sector coordinates.
class CompiledObjective {
 public:
  CompiledObjective(const SynthesisObjective& obj, const Pattern& pattern);

  int parameter_count() const { return n_params_; }
  const Pattern& pattern() const { return pattern_; }

  double value(const Eigen::VectorXd& taus, double* leakage = nullptr) const;
  double value_and_gradient(const Eigen::VectorXd& taus, Eigen::VectorXd& grad,
                            double* leakage = nullptr) const;
  // raw logical block of the sequence in the principal sector
  Matrix logical_block(const Eigen::VectorXd& taus) const;

 private:
  struct SectorData {
    Matrix c;                  // sector dim x logical dim
    std::vector<Matrix> swaps; // restricted pair SWAPs, indexed by pair id
    Eigen::Index dim = 0;
  };

  double sector_terms(const SectorData& s, const Eigen::VectorXd& taus,
                      Eigen::VectorXd* grad, double* leak_sq) const;

  Pattern pattern_;
  std::vector<std::vector<std::pair<int, int>>> steps_;  // (pair id, param id)
  int n_params_ = 0;
  Eigen::Index logical_dim_ = 0;
  Matrix target_;
  InvariantPair target_invariants_;
  EquivalenceMode equivalence_;
  double leakage_weight_ = 0.0;
  std::vector<SectorData> sectors_;
};

double evaluate_objective(const PulseSequence& seq, const SynthesisObjective& obj,
                          double* leakage = nullptr);
Eigen::VectorXd analytic_gradient(const PulseSequence& seq,
                                  const SynthesisObjective& obj);

struct OptimizationReport {
  bool success = false;
  Eigen::VectorXd best_times;
  double objective = 0.0;
  double leakage = 0.0;
  double correction_residual = -1.0;  // entrywise, after local corrections
  int restarts = 0;
  std::uint64_t seed = 0;
  int best_restart = -1;
  long long total_iterations = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> observed_relations;
};

struct MultistartOptions {
  int restarts = 200;
  std::uint64_t seed = 0;
  OptMethod method = OptMethod::Bfgs;
  int max_iterations = 250;
  double success_f = 1e-12;
  double success_leakage = 1e-8;
  int threads = 0;  // 0: EXQ_THREADS env var, then hardware count
  bool polish = true;
  std::uint64_t substream = 0;  // extra key so pattern scans draw fresh starts
};

// Deterministic given (seed, pattern): restart k draws its start from an
// independent substream and the best (lowest f, then lowest k) wins.
OptimizationReport minimize_multistart(const SynthesisObjective& obj,
                                       const Pattern& pattern,
                                       const MultistartOptions& opts);

int default_thread_count();

// --- serial pattern search -------------------------------------------------

bool pairs_commute(const std::pair<int, int>& a, const std::pair<int, int>& b);
// lexicographically least word reachable by swapping adjacent commuting pulses
std::vector<std::pair<int, int>> normal_form(std::vector<std::pair<int, int>> word);
// true when the normal form has equal adjacent pulses (mergeable step)
bool reducible(const std::vector<std::pair<int, int>>& word);

// Deterministic stream of serial nearest-neighbor candidate patterns of the
// given length for the six-spin two-qubit search: mirror-symmetric sandwich
// layouts first (crossing pulses on (2,3) separated by intra-block segments),
// then seeded random mirror-symmetric words, deduplicated by normal form.
std::vector<Pattern> serial_two_qubit_pattern_stream(int length, int max_patterns,
                                                     std::uint64_t seed);
// every irreducible serial nearest-neighbor word up to the given length
std::vector<Pattern> all_short_serial_patterns(int max_length);

struct TwoQubitSearchOptions {
  Mode mode = Mode::Serial;
  int max_steps = 19;
  int restarts = 1500;          // deep multistart on promising patterns
  int screen_restarts = 24;
  int screen_iterations = 150;
  double promote_f = 1e-3;
  int max_patterns = 20000;
  std::uint64_t seed = 42;
  int threads = 0;
  bool subsystem = false;
  EquivalenceMode equivalence = EquivalenceMode::LocalEquivalence;
  double success_f = 1e-12;
  double success_leakage = 1e-8;
  std::vector<std::pair<int, int>> excluded_pairs;  // parallel modes only
};

struct SynthesisOutcome {
  bool success = false;
  OptimizationReport report;
  PulseSequence sequence;
  long long patterns_tried = 0;
  int pattern_index = -1;
  double min_f_seen = 0.0;
  std::vector<double> screen_min_f;  // per-pattern failure distribution
};

SynthesisOutcome synthesize_two_qubit(const Matrix4cd& target,
                                      const TwoQubitSearchOptions& opts);
SynthesisOutcome synthesize_cnot(const TwoQubitSearchOptions& opts);

// --- single-qubit decompositions -------------------------------------------

enum class SingleQubitFlavor { Serial4Nearest, Serial3AnyPair, Parallel3 };

struct SingleQubitOptions {
  int restarts = 60;
  std::uint64_t seed = 7;
  int max_iterations = 300;
  double success_residual = 1e-8;
  int threads = 1;
};

struct SingleQubitResult {
  bool success = false;
  Eigen::VectorXd times;
  double residual = 0.0;
  PulseSequence sequence;
  OptimizationReport report;
};

SingleQubitResult decompose_single_qubit(const Matrix2cd& target,
                                         SingleQubitFlavor flavor,
                                         const SingleQubitOptions& opts = {});

// pattern search over intra-block pairs for CLI-driven single-qubit targets
SingleQubitResult synthesize_single_qubit(const Matrix2cd& target, Mode mode,
                                          int max_steps,
                                          const SingleQubitOptions& opts = {});

}  // namespace exq
