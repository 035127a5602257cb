#include "poet/schedule.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "io_util.hpp"
#include "poet/error.hpp"

namespace poet {

std::size_t BitMatrix::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::size_t BitMatrix::row_count(int t) const {
  const auto begin = bits_.begin() + static_cast<std::ptrdiff_t>(t) * n_;
  return static_cast<std::size_t>(std::count(begin, begin + n_, 1));
}

bool VerifyReport::has(const std::string& family) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.family == family; });
}

std::string VerifyReport::summary() const {
  if (ok) return "ok";
  std::ostringstream out;
  for (const Violation& v : violations) {
    out << v.family;
    if (v.t >= 0) out << " t=" << v.t + 1;
    if (v.i >= 0) out << " i=" << v.i + 1;
    if (v.k >= 0) out << " k=" << v.k + 1;
    if (!v.detail.empty()) out << ": " << v.detail;
    out << '\n';
  }
  return out.str();
}

bool greedy_free(const Schedule& s, const CostedGraph& cg, int t, int i, int k) {
  const int n = s.n();
  if (!s.r(t, k)) return false;
  if (t + 1 < n && s.s_ram(t + 1, i)) return false;
  if (s.m_out(t, i)) return false;
  for (int j : cg.users(i)) {
    if (j > k && s.r(t, j)) return false;
  }
  return true;
}

std::vector<std::vector<std::uint64_t>> memory_usage(const Schedule& s, const CostedGraph& cg) {
  const int n = s.n();
  std::vector<std::vector<std::uint64_t>> usage(n, std::vector<std::uint64_t>(n, 0));
  for (int t = 0; t < n; ++t) {
    // Signed so that a malformed schedule cannot wrap around.
    __int128 live = cg.mu_static();
    for (int i = 0; i < n; ++i) {
      const __int128 m = cg.cost(i).mem_out;
      if (s.s_ram(t, i)) live += m;
      if (s.m_in(t, i)) live += m;
    }
    for (int k = 0; k < n; ++k) {
      if (s.r(t, k)) live += cg.cost(k).mem_out;
      auto release = [&](int i) {
        if (greedy_free(s, cg, t, i, k)) live -= cg.cost(i).mem_out;
      };
      for (int i : cg.deps(k)) release(i);
      release(k);
      usage[t][k] = live < 0 ? 0 : static_cast<std::uint64_t>(live);
    }
  }
  return usage;
}

VerifyReport verify(const Schedule& s, const CostedGraph& cg) {
  VerifyReport rep;
  auto flag = [&](const char* family, int t, int i, int k, std::string detail = {}) {
    rep.ok = false;
    rep.violations.push_back({family, t, i, k, std::move(detail)});
  };
  const int n = cg.size();
  for (const BitMatrix* m : {&s.r, &s.s_ram, &s.s_aux, &s.m_in, &s.m_out}) {
    if (m->n() != n) {
      flag("shape", -1, -1, -1,
           "matrix is " + std::to_string(m->n()) + "x" + std::to_string(m->n()) + ", graph has " +
               std::to_string(n) + " nodes");
      return rep;
    }
  }
  for (int v = 0; v < n; ++v) {
    if (!s.r(v, v)) flag("diag", v, v, -1, "node not computed at its own timestep");
  }
  for (int i = 0; i < n; ++i) {
    if (s.s_ram(0, i)) flag("init", 0, i, -1, "resident in RAM before anything ran");
    if (s.s_aux(0, i)) flag("init", 0, i, -1, "resident on flash before anything ran");
  }
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < n; ++k) {
      if (!s.r(t, k)) continue;
      for (int i : cg.deps(k)) {
        if (!s.r(t, i) && !s.s_ram(t, i)) flag("dep", t, i, k, "input missing when consumer runs");
      }
    }
  }
  for (int t = 1; t < n; ++t) {
    for (int i = 0; i < n; ++i) {
      if (s.s_ram(t, i) && !s.r(t - 1, i) && !s.s_ram(t - 1, i) && !s.m_in(t - 1, i)) {
        flag("c1c", t, i, -1, "RAM residency without a source");
      }
      if (s.s_aux(t, i) && !s.s_aux(t - 1, i) && !s.m_out(t - 1, i)) {
        flag("c1d", t, i, -1, "flash residency without a page-out");
      }
    }
  }
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < n; ++i) {
      if (s.m_in(t, i) && !s.s_aux(t, i)) flag("c1e", t, i, -1, "page-in of a tensor not on flash");
      if (s.m_out(t, i) && !s.s_ram(t, i)) flag("c1f", t, i, -1, "page-out of a tensor not in RAM");
    }
  }
  if (cg.budget().ram) {
    const auto usage = memory_usage(s, cg);
    for (int t = 0; t < n; ++t) {
      for (int k = 0; k < n; ++k) {
        if (usage[t][k] > *cg.budget().ram) {
          flag("mem", t, -1, k,
               std::to_string(usage[t][k]) + " bytes > " + std::to_string(*cg.budget().ram));
        }
      }
    }
  }
  if (cg.budget().deadline) {
    Rational time = 0;
    for (int t = 0; t < n; ++t) {
      for (int i = 0; i < n; ++i) {
        if (s.r(t, i)) time += cg.cost(i).psi_compute;
      }
    }
    if (time > *cg.budget().deadline) {
      flag("deadline", -1, -1, -1,
           format_rational(time) + " s > " + format_rational(*cg.budget().deadline) + " s");
    }
  }
  return rep;
}

Metrics evaluate(const Schedule& s, const CostedGraph& cg) {
  const int n = s.n();
  Metrics m;
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < n; ++i) {
      const NodeCost& c = cg.cost(i);
      if (s.r(t, i)) {
        m.energy += c.phi_compute;
        m.compute_time += c.psi_compute;
      }
      if (s.m_in(t, i)) m.energy += c.phi_pagein;
      if (s.m_out(t, i)) m.energy += c.phi_pageout;
    }
  }
  for (const auto& row : memory_usage(s, cg)) {
    for (std::uint64_t u : row) m.peak_ram = std::max(m.peak_ram, u);
  }
  m.pagein_count = s.m_in.count();
  m.pageout_count = s.m_out.count();
  const std::size_t computes = s.r.count();
  m.remat_count = computes > static_cast<std::size_t>(n) ? computes - n : 0;
  return m;
}

Schedule complete_storage(const BitMatrix& r, const BitMatrix& m_in, const BitMatrix& m_out,
                          const CostedGraph& cg) {
  const int n = cg.size();
  if (r.n() != n || m_in.n() != n || m_out.n() != n) {
    throw Error(ErrorKind::kShapeMismatch, "matrices do not match the graph size");
  }
  Schedule s(n);
  s.r = r;
  s.m_in = m_in;
  s.m_out = m_out;
  for (int t = n - 1; t >= 0; --t) {
    for (int i = 0; i < n; ++i) {
      bool need = m_out(t, i);
      if (!need && !r(t, i)) {
        for (int k : cg.users(i)) {
          if (r(t, k)) {
            need = true;
            break;
          }
        }
      }
      if (!need && t + 1 < n && s.s_ram(t + 1, i) && !r(t, i) && !m_in(t, i)) need = true;
      s.s_ram.set(t, i, need);
    }
  }
  for (int t = 1; t < n; ++t) {
    for (int i = 0; i < n; ++i) s.s_aux.set(t, i, s.s_aux(t - 1, i) || m_out(t - 1, i));
  }
  return s;
}

Schedule diagonal_schedule(const CostedGraph& cg) {
  const int n = cg.size();
  BitMatrix r(n);
  for (int v = 0; v < n; ++v) r.set(v, v);
  return complete_storage(r, BitMatrix(n), BitMatrix(n), cg);
}

Schedule from_assignment(const Assignment& a, const MilpInstance& inst) {
  if (a.values.size() != inst.vars().size()) {
    throw Error(ErrorKind::kShapeMismatch, "assignment does not match the instance");
  }
  const int n = inst.n();
  Schedule s(n);
  BitMatrix* mats[] = {&s.r, &s.s_ram, &s.s_aux, &s.m_in, &s.m_out};
  const VarKind kinds[] = {VarKind::kR, VarKind::kSRam, VarKind::kSAux, VarKind::kMIn,
                           VarKind::kMOut};
  for (int m = 0; m < 5; ++m) {
    for (int t = 0; t < n; ++t) {
      for (int i = 0; i < n; ++i) {
        const int v = inst.var(kinds[m], t, i);
        if (v < 0) throw Error(ErrorKind::kShapeMismatch, "instance lacks a schedule variable");
        const Rational& x = a.values[v];
        if (x != 0 && x != 1) throw Error(ErrorKind::kShapeMismatch, "non-binary schedule value");
        mats[m]->set(t, i, x == 1);
      }
    }
  }
  for (int v = 0; v < n; ++v) {
    if (!s.r(v, v)) {
      throw Error(ErrorKind::kUnverifiedSchedule,
                  "assignment does not compute node " + std::to_string(v + 1) + " at its own timestep");
    }
  }
  return s;
}

std::vector<Rational> to_assignment(const Schedule& s, const CostedGraph& cg,
                                    const MilpInstance& inst) {
  const int n = inst.n();
  if (s.n() != n || cg.size() != n) {
    throw Error(ErrorKind::kShapeMismatch, "schedule does not match the instance");
  }
  std::vector<Rational> values(inst.vars().size(), Rational(0));
  for (int v = 0; v < static_cast<int>(inst.vars().size()); ++v) {
    const VarInfo& info = inst.vars()[v];
    bool bit = false;
    switch (info.kind) {
      case VarKind::kR: bit = s.r(info.t, info.i); break;
      case VarKind::kSRam: bit = s.s_ram(info.t, info.i); break;
      case VarKind::kSAux: bit = s.s_aux(info.t, info.i); break;
      case VarKind::kMIn: bit = s.m_in(info.t, info.i); break;
      case VarKind::kMOut: bit = s.m_out(info.t, info.i); break;
      case VarKind::kFree: bit = greedy_free(s, cg, info.t, info.i, info.k); break;
      case VarKind::kU: break;
    }
    values[v] = bit ? 1 : 0;
  }
  return complete_continuous(inst, std::move(values));
}

namespace {

constexpr const char* kMatrixKeys[] = {"R", "S_RAM", "S_AUX", "M_in", "M_out"};

const BitMatrix& matrix(const Schedule& s, int m) {
  const BitMatrix* mats[] = {&s.r, &s.s_ram, &s.s_aux, &s.m_in, &s.m_out};
  return *mats[m];
}

BitMatrix& matrix(Schedule& s, int m) {
  BitMatrix* mats[] = {&s.r, &s.s_ram, &s.s_aux, &s.m_in, &s.m_out};
  return *mats[m];
}

void put_leb128(std::string& out, std::uint64_t v) {
  do {
    std::uint8_t byte = v & 0x7f;
    v >>= 7;
    if (v != 0) byte |= 0x80;
    out.push_back(static_cast<char>(byte));
  } while (v != 0);
}

std::uint64_t get_leb128(const std::string& in, std::size_t& p) {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    if (p >= in.size()) throw Error(ErrorKind::kParse, "truncated schedule file");
    const auto byte = static_cast<std::uint8_t>(in[p++]);
    v |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
    if ((byte & 0x80) == 0) return v;
  }
  throw Error(ErrorKind::kParse, "overlong LEB128 value in schedule file");
}

constexpr char kMagic[] = "PSCH";
constexpr std::uint8_t kBinaryVersion = 1;

}  // namespace

nlohmann::json schedule_to_json(const ScheduleFile& f) {
  nlohmann::json doc;
  doc["format"] = "poet-schedule";
  doc["version"] = 1;
  if (!f.name.empty()) doc["name"] = f.name;
  doc["n"] = f.schedule.n();
  doc["graph_hash"] = f.graph_hash;
  nlohmann::json budget;
  budget["ram"] = f.budget.ram ? nlohmann::json(*f.budget.ram) : nlohmann::json(nullptr);
  budget["deadline"] =
      f.budget.deadline ? detail::rational_json(*f.budget.deadline) : nlohmann::json(nullptr);
  doc["budget"] = budget;
  doc["objective"] = f.objective ? detail::rational_json(*f.objective) : nlohmann::json(nullptr);
  const int n = f.schedule.n();
  for (int m = 0; m < 5; ++m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int t = 0; t < n; ++t) {
      std::string row(n, '0');
      for (int i = 0; i < n; ++i) row[i] = matrix(f.schedule, m)(t, i) ? '1' : '0';
      rows.push_back(row);
    }
    doc[kMatrixKeys[m]] = rows;
  }
  return doc;
}

ScheduleFile schedule_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "schedule document must be an object");
  ScheduleFile f;
  try {
    const int n = doc.at("n").get<int>();
    if (n < 0) throw Error(ErrorKind::kParse, "negative schedule size");
    f.schedule = Schedule(n);
    f.name = doc.value("name", std::string());
    f.graph_hash = doc.value("graph_hash", std::string());
    if (doc.contains("budget")) {
      const auto& b = doc.at("budget");
      if (b.contains("ram") && !b.at("ram").is_null()) f.budget.ram = b.at("ram").get<std::uint64_t>();
      if (b.contains("deadline") && !b.at("deadline").is_null()) {
        f.budget.deadline = detail::json_rational(b.at("deadline"), "budget.deadline");
      }
    }
    if (doc.contains("objective") && !doc.at("objective").is_null()) {
      f.objective = detail::json_rational(doc.at("objective"), "objective");
    }
    for (int m = 0; m < 5; ++m) {
      const auto& rows = doc.at(kMatrixKeys[m]);
      if (!rows.is_array() || static_cast<int>(rows.size()) != n) {
        throw Error(ErrorKind::kShapeMismatch, std::string(kMatrixKeys[m]) + " must have n rows");
      }
      for (int t = 0; t < n; ++t) {
        const std::string row = rows[t].get<std::string>();
        if (static_cast<int>(row.size()) != n) {
          throw Error(ErrorKind::kShapeMismatch, std::string(kMatrixKeys[m]) + " row " +
                                                     std::to_string(t + 1) + " has wrong length");
        }
        for (int i = 0; i < n; ++i) {
          if (row[i] != '0' && row[i] != '1') {
            throw Error(ErrorKind::kParse, "schedule rows may only contain 0 and 1");
          }
          matrix(f.schedule, m).set(t, i, row[i] == '1');
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("schedule document: ") + e.what());
  }
  return f;
}

std::string schedule_to_binary(const ScheduleFile& f) {
  std::string out(kMagic, 4);
  out.push_back(static_cast<char>(kBinaryVersion));
  const int n = f.schedule.n();
  put_leb128(out, static_cast<std::uint64_t>(n));
  std::uint64_t hash = 0;
  if (!f.graph_hash.empty()) hash = std::stoull(f.graph_hash, nullptr, 16);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((hash >> (8 * b)) & 0xff));
  for (int m = 0; m < 5; ++m) {
    std::vector<std::uint64_t> runs;
    bool current = false;
    std::uint64_t length = 0;
    for (int t = 0; t < n; ++t) {
      for (int i = 0; i < n; ++i) {
        const bool bit = matrix(f.schedule, m)(t, i);
        if (bit != current) {
          runs.push_back(length);
          current = bit;
          length = 0;
        }
        ++length;
      }
    }
    if (length > 0) runs.push_back(length);
    put_leb128(out, runs.size());
    for (std::uint64_t r : runs) put_leb128(out, r);
  }
  return out;
}

ScheduleFile schedule_from_binary(const std::string& bytes) {
  if (bytes.size() < 5 || bytes.compare(0, 4, kMagic) != 0) {
    throw Error(ErrorKind::kParse, "not a compact schedule file");
  }
  if (static_cast<std::uint8_t>(bytes[4]) != kBinaryVersion) {
    throw Error(ErrorKind::kUnsupported, "unknown compact schedule version");
  }
  std::size_t p = 5;
  const std::uint64_t n64 = get_leb128(bytes, p);
  if (n64 > 1u << 20) throw Error(ErrorKind::kParse, "schedule size out of range");
  const int n = static_cast<int>(n64);
  if (p + 8 > bytes.size()) throw Error(ErrorKind::kParse, "truncated schedule file");
  std::uint64_t hash = 0;
  for (int b = 0; b < 8; ++b) hash |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes[p++])) << (8 * b);
  ScheduleFile f;
  f.schedule = Schedule(n);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
  f.graph_hash = hex;
  const std::uint64_t cells = static_cast<std::uint64_t>(n) * n;
  for (int m = 0; m < 5; ++m) {
    const std::uint64_t run_count = get_leb128(bytes, p);
    std::uint64_t cell = 0;
    bool bit = false;
    for (std::uint64_t r = 0; r < run_count; ++r) {
      const std::uint64_t length = get_leb128(bytes, p);
      if (cell + length > cells) throw Error(ErrorKind::kParse, "run lengths exceed matrix size");
      for (std::uint64_t c = cell; c < cell + length; ++c) {
        if (bit) matrix(f.schedule, m).set(static_cast<int>(c / n), static_cast<int>(c % n));
      }
      cell += length;
      bit = !bit;
    }
    if (cell != cells) throw Error(ErrorKind::kParse, "run lengths do not cover the matrix");
  }
  if (p != bytes.size()) throw Error(ErrorKind::kParse, "trailing bytes in schedule file");
  return f;
}

void save_schedule(const ScheduleFile& f, const std::filesystem::path& path) {
  if (path.extension() == ".psch") {
    detail::write_text_file(path, schedule_to_binary(f));
  } else {
    detail::write_text_file(path, schedule_to_json(f).dump(2) + "\n");
  }
}

ScheduleFile load_schedule(const std::filesystem::path& path) {
  const std::string text = detail::read_text_file(path);
  if (text.compare(0, 4, kMagic) == 0) return schedule_from_binary(text);
  return schedule_from_json(detail::parse_json_text(text, path.string()));
}

}  // namespace poet
