#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "poet/costmodel.hpp"
#include "poet/milp.hpp"
#include "poet/solver.hpp"

namespace poet {

/// Square boolean matrix indexed [timestep][node], both 0-based.
class BitMatrix {
 public:
  BitMatrix() = default;
  explicit BitMatrix(int n) : n_(n), bits_(static_cast<std::size_t>(n) * n, 0) {}

  int n() const { return n_; }
  bool operator()(int t, int i) const { return bits_[static_cast<std::size_t>(t) * n_ + i] != 0; }
  void set(int t, int i, bool value = true) {
    bits_[static_cast<std::size_t>(t) * n_ + i] = value ? 1 : 0;
  }
  std::size_t count() const;
  std::size_t row_count(int t) const;
  bool operator==(const BitMatrix&) const = default;

 private:
  int n_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct Schedule {
  BitMatrix r;
  BitMatrix s_ram;
  BitMatrix s_aux;
  BitMatrix m_in;
  BitMatrix m_out;

  Schedule() = default;
  explicit Schedule(int n) : r(n), s_ram(n), s_aux(n), m_in(n), m_out(n) {}
  int n() const { return r.n(); }
  bool operator==(const Schedule&) const = default;
};

struct Violation {
  std::string family;  // shape, dep, c1c, c1d, c1e, c1f, mem, deadline, init, diag
  int t = -1;
  int i = -1;
  int k = -1;
  std::string detail;
};

struct VerifyReport {
  bool ok = true;
  std::vector<Violation> violations;

  bool has(const std::string& family) const;
  std::string summary() const;
};

struct Metrics {
  Rational energy;
  Rational compute_time;
  std::uint64_t peak_ram = 0;
  std::size_t pagein_count = 0;
  std::size_t pageout_count = 0;
  std::size_t remat_count = 0;
};

/// True when node i may be released right after node k runs at timestep t:
/// k runs, i is k or one of its inputs, i is neither kept for t+1 nor being
/// paged out, and no later consumer of i runs at t.
bool greedy_free(const Schedule& s, const CostedGraph& cg, int t, int i, int k);

/// RAM in use right after node k's step at timestep t, with greedy freeing,
/// indexed [t][k].
std::vector<std::vector<std::uint64_t>> memory_usage(const Schedule& s, const CostedGraph& cg);

/// Checks every constraint family and lists all violations.
VerifyReport verify(const Schedule& s, const CostedGraph& cg);

/// Direct summation of energy, compute time, peak RAM and transfer counts.
Metrics evaluate(const Schedule& s, const CostedGraph& cg);

/// Fills S_RAM with the least residency that the given compute and paging
/// decisions require, and S_AUX with everything paged out so far. The
/// result still has to pass verify (e.g. a tensor needed at t = 0).
Schedule complete_storage(const BitMatrix& r, const BitMatrix& m_in, const BitMatrix& m_out,
                          const CostedGraph& cg);

/// Identity R, no paging, least residency.
Schedule diagonal_schedule(const CostedGraph& cg);

/// Reads the five matrices out of a solver assignment. Throws
/// Error(kShapeMismatch) when sizes disagree and Error(kUnverifiedSchedule)
/// when the diagonal rule is broken.
Schedule from_assignment(const Assignment& a, const MilpInstance& inst);

/// Full variable vector for `s` in `inst`: matrix bits, greedy FREE, and the
/// continuous variables implied by them.
std::vector<Rational> to_assignment(const Schedule& s, const CostedGraph& cg,
                                    const MilpInstance& inst);

struct ScheduleFile {
  Schedule schedule;
  std::string name;
  std::string graph_hash;
  Budget budget;
  std::optional<Rational> objective;
};

nlohmann::json schedule_to_json(const ScheduleFile& f);
ScheduleFile schedule_from_json(const nlohmann::json& doc);

/// Compact form: "PSCH", version byte, LEB128 n, 8-byte little-endian graph
/// hash, then per matrix (R, S_RAM, S_AUX, M_in, M_out) a LEB128 run count
/// and LEB128 run lengths of the row-major bitstream, starting with zeros.
std::string schedule_to_binary(const ScheduleFile& f);
ScheduleFile schedule_from_binary(const std::string& bytes);

/// Writes JSON, or the compact form when the extension is ".psch".
void save_schedule(const ScheduleFile& f, const std::filesystem::path& path);
/// Detects the compact form by its magic bytes.
ScheduleFile load_schedule(const std::filesystem::path& path);

}  // namespace poet
