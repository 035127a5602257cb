#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include "poet/error.hpp"
#include "poet/solver.hpp"

namespace poet {

namespace {

constexpr std::size_t kTermsPerLine = 8;

std::string lp_number(const Rational& v) {
  if (is_terminating_decimal(v)) return format_rational(v);
  // Only reachable for objective coefficients; rows are scaled to integers.
  std::ostringstream ss;
  ss.precision(20);
  ss << to_double(v);
  return ss.str();
}

void write_expr(std::ostringstream& out, const std::vector<Term>& terms, const Rational& scale,
                const MilpInstance& inst) {
  std::size_t count = 0;
  for (const Term& term : terms) {
    const Rational c = term.coef * scale;
    if (c == 0) continue;
    if (count > 0 && count % kTermsPerLine == 0) out << "\n   ";
    out << (c < 0 ? " - " : (count == 0 ? " " : " + "));
    const Rational mag = c < 0 ? Rational(-c) : c;
    if (mag != 1) out << lp_number(mag) << ' ';
    out << inst.name(term.var);
    ++count;
  }
  if (count == 0) out << " 0 " << (inst.vars().empty() ? "x" : inst.name(0));
}

/// Factor that makes every coefficient of the row a terminating decimal.
Rational row_scale(const Constraint& c) {
  bool exact = is_terminating_decimal(c.rhs);
  for (const Term& t : c.terms) exact = exact && is_terminating_decimal(t.coef);
  if (exact) return 1;
  BigInt l = boost::multiprecision::denominator(c.rhs);
  for (const Term& t : c.terms) l = boost::multiprecision::lcm(l, boost::multiprecision::denominator(t.coef));
  return Rational(l);
}

std::optional<VarInfo> info_from_name(const std::string& name) {
  std::vector<std::string> parts;
  std::stringstream ss(name);
  std::string piece;
  while (std::getline(ss, piece, '_')) parts.push_back(piece);
  if (parts.size() < 3) return std::nullopt;
  std::vector<int> idx;
  for (std::size_t p = 1; p < parts.size(); ++p) {
    if (parts[p].empty() || parts[p].size() > 9 ||
        !std::all_of(parts[p].begin(), parts[p].end(), [](unsigned char ch) { return std::isdigit(ch); })) {
      return std::nullopt;
    }
    const int x = std::stoi(parts[p]);
    if (x < 1) return std::nullopt;
    idx.push_back(x - 1);
  }
  static const std::map<std::string, VarKind> kinds = {
      {"R", VarKind::kR},       {"SRAM", VarKind::kSRam}, {"SAUX", VarKind::kSAux},
      {"MIN", VarKind::kMIn},   {"MOUT", VarKind::kMOut}, {"FREE", VarKind::kFree},
      {"U", VarKind::kU}};
  const auto it = kinds.find(parts[0]);
  if (it == kinds.end()) return std::nullopt;
  VarInfo info;
  info.kind = it->second;
  const std::size_t want = info.kind == VarKind::kFree ? 3 : 2;
  if (idx.size() != want) return std::nullopt;
  info.t = idx[0];
  info.i = idx[1];
  if (info.kind == VarKind::kFree) info.k = idx[2];
  if (info.kind == VarKind::kU) info.ub = std::nullopt;
  return info;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return s;
}

enum class Section { kNone, kObjective, kConstraints, kBounds, kBinaries, kGenerals, kEnd };

std::optional<Section> section_keyword(const std::string& line) {
  const std::string l = lower(line);
  if (l == "minimize" || l == "minimise" || l == "minimum" || l == "min") return Section::kObjective;
  if (l == "subject to" || l == "such that" || l == "st" || l == "s.t.") return Section::kConstraints;
  if (l == "bounds" || l == "bound") return Section::kBounds;
  if (l == "binaries" || l == "binary" || l == "bin") return Section::kBinaries;
  if (l == "generals" || l == "general" || l == "gen") return Section::kGenerals;
  if (l == "end") return Section::kEnd;
  return std::nullopt;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::size_t p = 0;
  while (p < text.size()) {
    const char ch = text[p];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++p;
    } else if (ch == '<' || ch == '>' || ch == '=') {
      std::string op(1, ch);
      ++p;
      if (p < text.size() && (text[p] == '=' || text[p] == '<' || text[p] == '>')) op += text[p++];
      if (op == "=<" || op == "<") op = "<=";
      if (op == "=>" || op == ">") op = ">=";
      out.push_back(op);
    } else if (ch == '+' || ch == '-' || ch == ':') {
      out.emplace_back(1, ch);
      ++p;
    } else {
      std::size_t q = p;
      while (q < text.size() && !std::isspace(static_cast<unsigned char>(text[q])) &&
             std::string("<>=+-:").find(text[q]) == std::string::npos) {
        ++q;
      }
      // Exponent signs belong to numbers.
      while (q < text.size() && (text[q] == '+' || text[q] == '-') && q > p &&
             (text[q - 1] == 'e' || text[q - 1] == 'E') &&
             std::isdigit(static_cast<unsigned char>(text[p]))) {
        ++q;
        while (q < text.size() && std::isdigit(static_cast<unsigned char>(text[q]))) ++q;
      }
      out.push_back(text.substr(p, q - p));
      p = q;
    }
  }
  return out;
}

bool is_number(const std::string& tok) {
  return !tok.empty() && (std::isdigit(static_cast<unsigned char>(tok[0])) || tok[0] == '.');
}

bool is_sense(const std::string& tok) { return tok == "<=" || tok == ">=" || tok == "="; }

struct RawRow {
  std::string name;
  std::vector<std::pair<std::string, Rational>> terms;
  Sense sense = Sense::kLe;
  Rational rhs;
};

/// Parses `[name:] expr` starting at tokens[p]; stops at a sense token or end.
std::vector<std::pair<std::string, Rational>> parse_expr(const std::vector<std::string>& toks,
                                                         std::size_t& p) {
  std::vector<std::pair<std::string, Rational>> terms;
  while (p < toks.size() && !is_sense(toks[p])) {
    Rational sign = 1;
    while (p < toks.size() && (toks[p] == "+" || toks[p] == "-")) {
      if (toks[p] == "-") sign = -sign;
      ++p;
    }
    if (p >= toks.size()) throw Error(ErrorKind::kParse, "LP expression ends after a sign");
    Rational coef = sign;
    if (is_number(toks[p])) {
      coef *= parse_rational(toks[p]);
      ++p;
      if (p >= toks.size() || is_sense(toks[p]) || is_number(toks[p])) {
        throw Error(ErrorKind::kParse, "LP constant terms are not supported");
      }
    }
    if (toks[p] == "+" || toks[p] == "-" || toks[p] == ":") {
      throw Error(ErrorKind::kParse, "malformed LP expression near '" + toks[p] + "'");
    }
    terms.emplace_back(toks[p], coef);
    ++p;
  }
  return terms;
}

Rational parse_signed_number(const std::vector<std::string>& toks, std::size_t& p) {
  Rational sign = 1;
  while (p < toks.size() && (toks[p] == "+" || toks[p] == "-")) {
    if (toks[p] == "-") sign = -sign;
    ++p;
  }
  if (p >= toks.size() || !is_number(toks[p])) throw Error(ErrorKind::kParse, "expected a number in LP file");
  return sign * parse_rational(toks[p++]);
}

}  // namespace

std::string write_lp(const MilpInstance& inst) {
  std::ostringstream out;
  out << "\\ poet n=" << inst.n() << " byte_unit=" << inst.byte_unit()
      << " mode=" << to_string(inst.mode()) << "\n";
  out << "Minimize\n obj:";
  write_expr(out, inst.objective(), 1, inst);
  out << "\nSubject To\n";
  std::array<std::size_t, kTagCount> seq{};
  for (const Constraint& c : inst.constraints()) {
    const int tag = static_cast<int>(c.tag);
    out << ' ' << to_string(c.tag) << '_' << ++seq[tag] << ':';
    const Rational scale = row_scale(c);
    write_expr(out, c.terms, scale, inst);
    out << (c.sense == Sense::kLe ? " <= " : c.sense == Sense::kGe ? " >= " : " = ")
        << lp_number(c.rhs * scale) << '\n';
  }
  out << "Bounds\n";
  std::vector<int> binaries;
  std::vector<int> generals;
  for (int v = 0; v < static_cast<int>(inst.vars().size()); ++v) {
    const VarInfo& info = inst.vars()[v];
    if (info.is_binary()) {
      const bool tightened = info.lb != 0 || (info.ub && *info.ub != 1);
      if (tightened) {
        out << ' ' << lp_number(info.lb) << " <= " << inst.name(v) << " <= "
            << lp_number(info.ub ? *info.ub : Rational(1)) << '\n';
        generals.push_back(v);
      } else {
        binaries.push_back(v);
      }
      continue;
    }
    if (info.ub) {
      out << ' ' << lp_number(info.lb) << " <= " << inst.name(v) << " <= " << lp_number(*info.ub)
          << '\n';
    } else {
      out << ' ' << inst.name(v) << " >= " << lp_number(info.lb) << '\n';
    }
  }
  auto write_list = [&](const char* header, const std::vector<int>& list) {
    if (list.empty()) return;
    out << header << '\n';
    for (std::size_t p = 0; p < list.size(); ++p) {
      out << ' ' << inst.name(list[p]);
      if (p % kTermsPerLine == kTermsPerLine - 1 || p + 1 == list.size()) out << '\n';
    }
  };
  write_list("Binaries", binaries);
  write_list("Generals", generals);
  out << "End\n";
  return out.str();
}

MilpInstance parse_lp(const std::string& text) {
  std::map<Section, std::string> bodies;
  Section current = Section::kNone;
  int n_header = -1;
  std::uint64_t unit_header = 1;
  RestrictMode mode_header = RestrictMode::kNone;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    std::string trimmed = line.substr(first);
    if (trimmed[0] == '\\') {
      std::istringstream hs(trimmed.substr(1));
      std::string word;
      hs >> word;
      if (word == "poet") {
        while (hs >> word) {
          const auto eq = word.find('=');
          if (eq == std::string::npos) continue;
          const std::string key = word.substr(0, eq);
          const std::string value = word.substr(eq + 1);
          if (key == "n") n_header = std::stoi(value);
          if (key == "byte_unit") unit_header = std::stoull(value);
          if (key == "mode") mode_header = parse_restrict_mode(value);
        }
      }
      continue;
    }
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) trimmed.pop_back();
    if (auto s = section_keyword(trimmed)) {
      current = *s;
      continue;
    }
    if (current == Section::kNone || current == Section::kEnd) {
      throw Error(ErrorKind::kParse, "LP content outside a section: " + trimmed);
    }
    bodies[current] += trimmed + "\n";
  }

  // Collect every variable name, then create variables in canonical order.
  std::map<std::string, VarInfo> seen;
  auto note = [&](const std::string& name) {
    if (seen.count(name)) return;
    auto info = info_from_name(name);
    if (!info) throw Error(ErrorKind::kParse, "unrecognized variable name '" + name + "'");
    seen.emplace(name, *info);
  };

  std::vector<std::pair<std::string, Rational>> objective;
  {
    const auto toks = tokenize(bodies[Section::kObjective]);
    std::size_t p = 0;
    if (toks.size() >= 2 && toks[1] == ":") p = 2;
    objective = parse_expr(toks, p);
    if (p != toks.size()) throw Error(ErrorKind::kParse, "unexpected token in objective");
  }
  for (const auto& [name, c] : objective) note(name);

  std::vector<RawRow> raw;
  {
    const auto toks = tokenize(bodies[Section::kConstraints]);
    std::size_t p = 0;
    while (p < toks.size()) {
      RawRow row;
      if (p + 1 < toks.size() && toks[p + 1] == ":") {
        row.name = toks[p];
        p += 2;
      }
      row.terms = parse_expr(toks, p);
      if (p >= toks.size()) throw Error(ErrorKind::kParse, "constraint without a sense");
      row.sense = toks[p] == "<=" ? Sense::kLe : toks[p] == ">=" ? Sense::kGe : Sense::kEq;
      ++p;
      row.rhs = parse_signed_number(toks, p);
      for (const auto& [name, c] : row.terms) note(name);
      raw.push_back(std::move(row));
    }
  }

  std::map<std::string, std::pair<Rational, std::optional<Rational>>> bounds;
  {
    std::istringstream bl(bodies[Section::kBounds]);
    while (std::getline(bl, line)) {
      const auto toks = tokenize(line);
      if (toks.empty()) continue;
      std::size_t p = 0;
      std::optional<Rational> lo;
      std::optional<Rational> hi;
      std::string name;
      bool free_var = false;
      if (!is_number(toks[0]) && toks[0] != "-" && toks[0] != "+") {
        name = toks[0];
        p = 1;
        if (p < toks.size() && lower(toks[p]) == "free") {
          free_var = true;
        } else if (p < toks.size()) {
          const std::string op = toks[p++];
          const Rational x = parse_signed_number(toks, p);
          if (op == ">=") lo = x;
          else if (op == "<=") hi = x;
          else { lo = x; hi = x; }
        }
      } else {
        lo = parse_signed_number(toks, p);
        if (p >= toks.size() || toks[p] != "<=") throw Error(ErrorKind::kParse, "malformed bound: " + line);
        ++p;
        if (p >= toks.size()) throw Error(ErrorKind::kParse, "malformed bound: " + line);
        name = toks[p++];
        if (p < toks.size()) {
          if (toks[p] != "<=") throw Error(ErrorKind::kParse, "malformed bound: " + line);
          ++p;
          hi = parse_signed_number(toks, p);
        }
      }
      if (free_var) throw Error(ErrorKind::kUnsupported, "free variables are not supported: " + name);
      note(name);
      auto& b = bounds.try_emplace(name, Rational(0), std::nullopt).first->second;
      if (lo) b.first = *lo;
      if (hi) b.second = *hi;
    }
  }
  std::map<std::string, bool> integral;
  for (Section s : {Section::kBinaries, Section::kGenerals}) {
    std::istringstream bs(bodies[s]);
    std::string name;
    while (bs >> name) {
      note(name);
      integral[name] = true;
    }
  }

  std::vector<std::pair<std::tuple<int, int, int, int, int>, std::string>> ordered;
  int max_index = 0;
  for (const auto& [name, info] : seen) {
    // Matrices by (kind, t, i); FREE by (t, k, i); U by (t, k).
    const int kind = static_cast<int>(info.kind);
    ordered.push_back({info.kind == VarKind::kFree ? std::make_tuple(kind, info.t, info.k, info.i, 0)
                                                   : std::make_tuple(kind, info.t, info.i, 0, 0),
                       name});
    max_index = std::max({max_index, info.t + 1, info.i + 1, info.k + 1});
  }
  std::sort(ordered.begin(), ordered.end());

  MilpInstance inst;
  inst.set_shape(n_header >= 0 ? n_header : max_index, unit_header);
  inst.set_mode(mode_header);
  for (const auto& [key, name] : ordered) {
    VarInfo info = seen.at(name);
    if (info.is_binary() && !integral.count(name)) {
      throw Error(ErrorKind::kParse, "variable " + name + " must be declared integral");
    }
    if (!info.is_binary() && integral.count(name)) {
      throw Error(ErrorKind::kParse, "variable " + name + " must be continuous");
    }
    const auto b = bounds.find(name);
    if (b != bounds.end()) {
      info.lb = b->second.first;
      if (info.is_binary()) {
        info.ub = b->second.second ? *b->second.second : Rational(1);
      } else {
        info.ub = b->second.second;
      }
    }
    inst.add_var(info);
  }

  std::vector<Term> obj;
  for (const auto& [name, c] : objective) obj.push_back({inst.find(name), c});
  inst.set_objective(std::move(obj));
  for (RawRow& row : raw) {
    const auto us = row.name.rfind('_');
    const auto tag = us == std::string::npos ? std::nullopt : parse_tag(row.name.substr(0, us));
    if (!tag) throw Error(ErrorKind::kParse, "constraint name '" + row.name + "' carries no known tag");
    Constraint c;
    c.sense = row.sense;
    c.rhs = row.rhs;
    c.tag = *tag;
    for (const auto& [name, coef] : row.terms) c.terms.push_back({inst.find(name), coef});
    inst.add_constraint(std::move(c));
  }
  return inst;
}

Assignment parse_solution(const std::string& text, const MilpInstance& inst) {
  std::vector<Rational> values(inst.vars().size(), Rational(0));
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string name;
    std::string value_text;
    if (!(ls >> name) || name[0] == '#') continue;
    if (!(ls >> value_text)) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": missing value");
    }
    const int v = inst.find(name);
    if (v < 0) throw Error(ErrorKind::kParse, "unknown variable '" + name + "'");
    const Rational x = parse_rational(value_text);
    if (inst.vars()[v].is_binary()) {
      const double d = to_double(x);
      if (std::fabs(d) <= 1e-6) {
        values[v] = 0;
      } else if (std::fabs(d - 1.0) <= 1e-6) {
        values[v] = 1;
      } else {
        throw Error(ErrorKind::kParse, "non-integral value " + value_text + " for binary " + name);
      }
    } else {
      values[v] = x;
    }
  }
  Assignment a;
  a.values = complete_continuous(inst, std::move(values));
  a.objective = objective_value(inst, a.values);
  return a;
}

std::string write_solution(const Assignment& a, const MilpInstance& inst) {
  std::ostringstream out;
  for (int v = 0; v < static_cast<int>(inst.vars().size()); ++v) {
    out << inst.name(v) << ' ' << format_rational(a.values.at(v)) << '\n';
  }
  return out.str();
}

}  // namespace poet
