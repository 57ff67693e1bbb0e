#include "exq/schedule_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace exq {

using nlohmann::ordered_json;

std::string format_time(double tau) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.16e", tau);
  return buf;
}

double parse_time(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ScheduleParseError("bad duration '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v))
    throw ScheduleParseError("bad duration '" + text + "'");
  return v;
}

std::string default_layout(Mode mode) {
  return mode == Mode::Parallel2D ? "grid-2x3" : "line";
}

ScheduleFile make_schedule(const PulseSequence& seq, ordered_json metadata) {
  validate_sequence(seq);
  ScheduleFile out;
  out.n_spins = seq.sites;
  out.mode = seq.mode;
  out.layout = default_layout(seq.mode);
  out.metadata = std::move(metadata);
  for (const auto& step : seq.steps) {
    std::vector<ScheduleCoupling> s;
    for (const Coupling& c : step)
      s.push_back(ScheduleCoupling{c.i, c.j, format_time(c.tau), c.tau});
    out.steps.push_back(std::move(s));
  }
  return out;
}

PulseSequence to_sequence(const ScheduleFile& schedule) {
  PulseSequence seq;
  seq.mode = schedule.mode;
  seq.sites = schedule.n_spins;
  for (const auto& step : schedule.steps) {
    std::vector<Coupling> s;
    for (const ScheduleCoupling& c : step) s.push_back(Coupling{c.i, c.j, c.tau});
    seq.steps.push_back(std::move(s));
  }
  return seq;
}

std::string serialize_schedule(const ScheduleFile& schedule) {
  ordered_json j;
  j["format"] = "exq-schedule";
  j["version"] = schedule.version;
  j["n_spins"] = schedule.n_spins;
  j["mode"] = to_string(schedule.mode);
  j["layout"] = schedule.layout;
  ordered_json steps = ordered_json::array();
  for (const auto& step : schedule.steps) {
    ordered_json s = ordered_json::array();
    for (const ScheduleCoupling& c : step)
      s.push_back(ordered_json{{"i", c.i}, {"j", c.j}, {"tau", c.tau_text}});
    steps.push_back(s);
  }
  j["steps"] = steps;
  j["metadata"] = schedule.metadata;
  return j.dump(2) + "\n";
}

ScheduleFile parse_schedule(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ScheduleParseError(std::string("invalid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "exq-schedule")
      throw ScheduleParseError("not an exq schedule file");
    ScheduleFile out;
    out.version = j.at("version").get<int>();
    if (out.version != 1) throw ScheduleParseError("unsupported schedule version");
    out.n_spins = j.at("n_spins").get<int>();
    out.mode = mode_from_string(j.at("mode").get<std::string>());
    out.layout = j.at("layout").get<std::string>();
    if (out.layout != default_layout(out.mode))
      throw ScheduleParseError("layout does not match mode");
    for (const auto& step : j.at("steps")) {
      std::vector<ScheduleCoupling> s;
      for (const auto& c : step) {
        ScheduleCoupling sc;
        sc.i = c.at("i").get<int>();
        sc.j = c.at("j").get<int>();
        sc.tau_text = c.at("tau").get<std::string>();
        sc.tau = parse_time(sc.tau_text);
        s.push_back(sc);
      }
      out.steps.push_back(std::move(s));
    }
    if (j.contains("metadata")) out.metadata = j.at("metadata");

    const PulseSequence seq = to_sequence(out);
    validate_sequence(seq);
    if (out.mode == Mode::Serial) {
      for (const auto& step : seq.steps)
        if (step[0].tau < 0.0 || step[0].tau >= 1.0)
          throw ScheduleParseError("serial durations must lie in [0,1)");
    }
    return out;
  } catch (const ScheduleParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScheduleParseError(std::string("malformed schedule: ") + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_schedule(const ScheduleFile& schedule, const std::string& path) {
  write_text_file(path, serialize_schedule(schedule));
}

ScheduleFile load_schedule(const std::string& path) {
  return parse_schedule(read_text_file(path));
}

std::uint64_t basis_checksum(const Matrix& columns) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](long long v) {
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<std::uint64_t>(v >> (8 * b)) & 0xffULL;
      h *= 1099511628211ULL;
    }
  };
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    for (Eigen::Index r = 0; r < columns.rows(); ++r) {
      mix(std::llround(columns(r, c).real() * 1e12));
      mix(std::llround(columns(r, c).imag() * 1e12));
    }
  }
  return h;
}

// --- verification ------------------------------------------------------------

VerificationResult verify_sequence(const PulseSequence& seq, const Matrix& target,
                                   const VerifyThresholds& th) {
  const Matrix u = sequence_unitary(seq);
  VerificationResult out;

  auto add_check = [&out](const std::string& name, double value, double threshold) {
    out.checks.push_back(VerificationCheck{name, value, threshold, value < threshold});
  };

  if (seq.sites == 6 && target.rows() == 4) {
    const LogicalBasis basis = two_qubit_basis();
    const BlockDecomposition proj = logical_action(u, basis);
    out.leakage = proj.leakage_norm;
    out.residual_unitarity = proj.residual_unitarity;

    const Matrix4cd polar = polar_unitary(proj.inside_block);
    const InvariantPair inv = makhlin_invariants(polar);
    const InvariantPair target_inv = makhlin_invariants(Matrix4cd(target));
    out.invariant_distance = invariant_distance(inv, target_inv);
    out.f = out.invariant_distance + th.leakage_weight * out.leakage * out.leakage;

    // 4 + 5 block structure inside the nine-dimensional S=1, Sz=+1 sector
    const SectorBasis sector = sector_basis(6, 1.0, 1.0);
    const BlockDecomposition in_sector = project_to_block(u, sector);
    const Matrix c9 = sector.columns.adjoint() * basis.vectors;  // 9 x 4
    Eigen::JacobiSVD<Matrix> svd(c9, Eigen::ComputeFullU);
    const Matrix complement = svd.matrixU().rightCols(sector.dim() - 4);
    const double off =
        std::sqrt((complement.adjoint() * in_sector.inside_block * c9).squaredNorm() +
                  (c9.adjoint() * in_sector.inside_block * complement).squaredNorm() +
                  in_sector.leakage_norm * in_sector.leakage_norm);
    out.block_offdiagonal = off;

    try {
      const LocalCorrections corr = extract_local_corrections(polar, Matrix4cd(target));
      out.entrywise_residual = phase_aligned_distance(
          kron2(corr.a1, corr.a2) * proj.inside_block * kron2(corr.b1, corr.b2),
          target);
    } catch (const NoLocalEquivalence&) {
      out.entrywise_residual = std::numeric_limits<double>::infinity();
    }

    add_check("objective_f", out.f, th.f);
    add_check("leakage", out.leakage, th.leakage);
    add_check("sector_block_offdiagonal", out.block_offdiagonal, th.block_offdiagonal);
    add_check("entrywise_residual", out.entrywise_residual, th.entrywise_residual);
  } else if (seq.sites == 3 && target.rows() == 2) {
    const LogicalBasis basis = make_logical_basis(3, {CodeBlock{{0, 1, 2}}});
    const BlockDecomposition proj = logical_action(u, basis);
    out.leakage = proj.leakage_norm;
    out.residual_unitarity = proj.residual_unitarity;
    out.entrywise_residual = phase_aligned_distance(proj.inside_block, target);
    const double overlap = std::abs((target.adjoint() * proj.inside_block).trace());
    out.f = proj.inside_block.squaredNorm() + 2.0 - 2.0 * overlap +
            th.leakage_weight * out.leakage * out.leakage;
    out.invariant_distance = 0.0;
    out.block_offdiagonal = 0.0;
    add_check("leakage", out.leakage, th.leakage);
    add_check("entrywise_residual", out.entrywise_residual, th.single_qubit_residual);
  } else {
    throw std::invalid_argument(
        "verification expects a 4x4 target on 6 spins or a 2x2 target on 3 spins");
  }

  out.pass = true;
  for (const VerificationCheck& c : out.checks) out.pass = out.pass && c.pass;
  return out;
}

ordered_json verification_json(const VerificationResult& r) {
  ordered_json j;
  j["f"] = format_time(r.f);
  j["leakage"] = format_time(r.leakage);
  j["invariant_distance"] = format_time(r.invariant_distance);
  j["entrywise_residual"] = format_time(r.entrywise_residual);
  j["sector_block_offdiagonal"] = format_time(r.block_offdiagonal);
  j["residual_unitarity"] = format_time(r.residual_unitarity);
  ordered_json checks = ordered_json::array();
  for (const VerificationCheck& c : r.checks)
    checks.push_back(ordered_json{{"name", c.name},
                                  {"value", format_time(c.value)},
                                  {"threshold", format_time(c.threshold)},
                                  {"pass", c.pass}});
  j["checks"] = checks;
  j["pass"] = r.pass;
  return j;
}

}  // namespace exq
