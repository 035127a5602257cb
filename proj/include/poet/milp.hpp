#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poet/costmodel.hpp"
#include "poet/numeric.hpp"

namespace poet {

/// Decision-variable families. U is continuous, everything else binary.
enum class VarKind : std::uint8_t { kR, kSRam, kSAux, kMIn, kMOut, kFree, kU };

/// Metadata carried by every variable; t, i, k are 0-based. For kU the
/// operator index is stored in `i`.
struct VarInfo {
  VarKind kind = VarKind::kR;
  int t = 0;
  int i = 0;
  int k = -1;
  Rational lb = 0;
  std::optional<Rational> ub = Rational(1);

  bool is_binary() const { return kind != VarKind::kU; }
};

/// Which line of the formulation a constraint encodes.
enum class Tag : std::uint8_t {
  kDep,
  k1c,
  k1d,
  k1e,
  k1f,
  kMem,
  kDeadline,
  kInit,
  kDiag,
  kFreeDef,
  kUDef,
};
inline constexpr int kTagCount = 11;

const char* to_string(Tag tag);
/// Inverse of to_string; nullopt for unknown names.
std::optional<Tag> parse_tag(const std::string& name);

enum class Sense : std::uint8_t { kLe, kGe, kEq };

struct Term {
  int var = 0;
  Rational coef;
};

struct Constraint {
  std::vector<Term> terms;
  Sense sense = Sense::kLe;
  Rational rhs;
  Tag tag = Tag::kDep;
};

enum class RestrictMode { kNone, kRematOnly, kPagingOnly };
const char* to_string(RestrictMode mode);
RestrictMode parse_restrict_mode(const std::string& text);

/// Solver-independent binary program. Byte quantities are expressed in
/// units of `byte_unit` bytes.
class MilpInstance {
 public:
  MilpInstance() = default;

  int n() const { return n_; }
  const std::vector<VarInfo>& vars() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<Term>& objective() const { return objective_; }
  std::uint64_t byte_unit() const { return byte_unit_; }
  RestrictMode mode() const { return mode_; }

  int num_binaries() const;
  int num_continuous() const;
  std::array<std::size_t, kTagCount> tag_counts() const;

  /// Index of a schedule-matrix variable (kinds kR..kMOut).
  int var(VarKind kind, int t, int i) const;
  /// Index of FREE[t,i,k], or -1 when i is neither k nor a dependency of k.
  int free_var(int t, int i, int k) const;
  int u_var(int t, int k) const;

  /// LP-file name: R_t_i, SRAM_t_i, SAUX_t_i, MIN_t_i, MOUT_t_i, FREE_t_i_k,
  /// U_t_k, with 1-based indices.
  std::string name(int v) const;
  /// Inverse of name(); -1 when the name is unknown.
  int find(const std::string& name) const;

  // Construction interface used by build_milp, restrict and parse_lp.
  int add_var(VarInfo info);
  void add_constraint(Constraint c);
  void set_objective(std::vector<Term> objective) { objective_ = std::move(objective); }
  void set_shape(int n, std::uint64_t byte_unit) {
    n_ = n;
    byte_unit_ = byte_unit;
  }
  void set_mode(RestrictMode mode) { mode_ = mode; }
  VarInfo& var_info(int v) { return vars_[v]; }

 private:
  int n_ = 0;
  std::uint64_t byte_unit_ = 1;
  RestrictMode mode_ = RestrictMode::kNone;
  std::vector<VarInfo> vars_;
  std::vector<Constraint> constraints_;
  std::vector<Term> objective_;
  std::map<std::string, int> by_name_;
};

/// Encodes the integrated rematerialization/paging program for `cg`.
MilpInstance build_milp(const CostedGraph& cg);

/// remat-only fixes every M_in/M_out to 0; paging-only fixes every
/// off-diagonal R to 0. Restrictions are expressed as variable bounds.
MilpInstance restrict(const MilpInstance& instance, RestrictMode mode);

/// Closed-form constraint counts per tag for a graph with n nodes and the
/// given dependency sets, mirroring what build_milp emits.
std::array<std::size_t, kTagCount> expected_tag_counts(const CostedGraph& cg);

}  // namespace poet
