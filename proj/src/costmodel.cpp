#include "poet/costmodel.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "io_util.hpp"
#include "poet/error.hpp"

namespace poet {

const NodeCost* CostProfile::find(NodeId id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  return it == ids.end() ? nullptr : &costs[it - ids.begin()];
}

namespace {

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorKind::kInvalidProfile, message);
}

std::vector<Rational> rational_vector(const nlohmann::json& doc, const char* field) {
  if (!doc.contains(field)) invalid(std::string("missing required field '") + field + "'");
  const auto& arr = doc.at(field);
  if (!arr.is_array()) invalid(std::string("field '") + field + "' must be an array");
  std::vector<Rational> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Rational v;
    try {
      v = detail::json_rational(arr[i], field);
    } catch (const Error& e) {
      invalid(std::string("field '") + field + "' entry " + std::to_string(i) + ": " + e.what());
    }
    if (v < 0) {
      invalid(std::string("field '") + field + "' entry " + std::to_string(i) + " is negative");
    }
    out.push_back(v);
  }
  return out;
}

std::uint64_t as_bytes(const Rational& v, const std::string& what) {
  if (boost::multiprecision::denominator(v) != 1) invalid(what + " must be a whole number of bytes");
  const BigInt b = boost::multiprecision::numerator(v);
  if (b < 0 || b > std::numeric_limits<std::uint64_t>::max()) invalid(what + " out of range");
  return b.convert_to<std::uint64_t>();
}

}  // namespace

LoadedProfile load_profile(const nlohmann::json& doc) {
  if (!doc.is_object()) invalid("profile document must be an object");
  static const std::set<std::string> kKnown = {
      "phi_compute", "phi_pagein", "phi_pageout", "psi_compute", "psi_pagein",
      "psi_pageout", "mem_out",    "mu_static",   "node_ids",    "device_label"};
  LoadedProfile out;
  for (const auto& [key, unused] : doc.items()) {
    if (!kKnown.count(key)) out.warnings.push_back("ignored unknown field '" + key + "'");
  }

  std::vector<std::vector<Rational>> columns;
  for (const char* field : kProfileFields) columns.push_back(rational_vector(doc, field));
  const std::size_t n = columns.front().size();
  for (std::size_t f = 0; f < columns.size(); ++f) {
    if (columns[f].size() != n) {
      invalid(std::string("field '") + kProfileFields[f] + "' has " +
              std::to_string(columns[f].size()) + " entries, expected " + std::to_string(n));
    }
  }

  CostProfile& p = out.profile;
  if (doc.contains("node_ids")) {
    try {
      p.ids = doc.at("node_ids").get<std::vector<NodeId>>();
    } catch (const nlohmann::json::exception&) {
      invalid("field 'node_ids' must be an array of integers");
    }
    if (p.ids.size() != n) invalid("field 'node_ids' length does not match the cost vectors");
    if (std::set<NodeId>(p.ids.begin(), p.ids.end()).size() != n) invalid("duplicate node id");
  } else {
    for (std::size_t i = 0; i < n; ++i) p.ids.push_back(static_cast<NodeId>(i + 1));
  }
  if (doc.contains("mu_static")) {
    Rational ms;
    try {
      ms = detail::json_rational(doc.at("mu_static"), "mu_static");
    } catch (const Error& e) {
      invalid(e.what());
    }
    if (ms < 0) invalid("field 'mu_static' is negative");
    p.mu_static = as_bytes(ms, "mu_static");
  }
  if (doc.contains("device_label")) {
    if (!doc.at("device_label").is_string()) invalid("field 'device_label' must be a string");
    p.device_label = doc.at("device_label").get<std::string>();
  }
  p.costs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    NodeCost& c = p.costs[i];
    c.phi_compute = columns[0][i];
    c.phi_pagein = columns[1][i];
    c.phi_pageout = columns[2][i];
    c.psi_compute = columns[3][i];
    c.psi_pagein = columns[4][i];
    c.psi_pageout = columns[5][i];
    c.mem_out = as_bytes(columns[6][i], "mem_out entry " + std::to_string(i));
  }
  return out;
}

LoadedProfile load_profile_file(const std::filesystem::path& path) {
  return load_profile(detail::parse_json_text(detail::read_text_file(path), path.string()));
}

nlohmann::json profile_to_json(const CostProfile& p) {
  nlohmann::json doc;
  doc["device_label"] = p.device_label;
  doc["mu_static"] = p.mu_static;
  doc["node_ids"] = p.ids;
  auto column = [&](auto member) {
    nlohmann::json arr = nlohmann::json::array();
    for (const NodeCost& c : p.costs) arr.push_back(detail::rational_json(c.*member));
    return arr;
  };
  doc["phi_compute"] = column(&NodeCost::phi_compute);
  doc["phi_pagein"] = column(&NodeCost::phi_pagein);
  doc["phi_pageout"] = column(&NodeCost::phi_pageout);
  doc["psi_compute"] = column(&NodeCost::psi_compute);
  doc["psi_pagein"] = column(&NodeCost::psi_pagein);
  doc["psi_pageout"] = column(&NodeCost::psi_pageout);
  nlohmann::json mem = nlohmann::json::array();
  for (const NodeCost& c : p.costs) mem.push_back(c.mem_out);
  doc["mem_out"] = mem;
  return doc;
}

void save_profile(const CostProfile& p, const std::filesystem::path& path) {
  detail::write_text_file(path, profile_to_json(p).dump(2) + "\n");
}

CostedGraph::CostedGraph(TrainingGraph graph, Topology topology, std::vector<NodeCost> costs,
                         std::uint64_t mu_static, Budget budget, std::string device_label)
    : graph_(std::move(graph)),
      topology_(std::move(topology)),
      costs_(std::move(costs)),
      mu_static_(mu_static),
      budget_(std::move(budget)),
      device_label_(std::move(device_label)) {}

CostedGraph CostedGraph::with_budget(Budget budget) const {
  return attach(graph_, profile(), std::move(budget));
}

Rational CostedGraph::energy_floor() const {
  Rational sum = 0;
  for (const NodeCost& c : costs_) sum += c.phi_compute;
  return sum;
}

Rational CostedGraph::compute_time_floor() const {
  Rational sum = 0;
  for (const NodeCost& c : costs_) sum += c.psi_compute;
  return sum;
}

std::uint64_t CostedGraph::full_memory() const {
  std::uint64_t sum = mu_static_;
  for (const NodeCost& c : costs_) sum += c.mem_out;
  return sum;
}

CostProfile CostedGraph::profile() const {
  CostProfile p;
  for (int k = 0; k < size(); ++k) p.ids.push_back(topology_.id(k));
  p.costs = costs_;
  p.mu_static = mu_static_;
  p.device_label = device_label_;
  return p;
}

CostedGraph attach(const TrainingGraph& g, const CostProfile& p, Budget budget) {
  Topology topo(g);
  std::vector<NodeCost> costs;
  std::string missing;
  for (int k = 0; k < topo.size(); ++k) {
    const NodeCost* c = p.find(topo.id(k));
    if (!c) {
      if (!missing.empty()) missing += ", ";
      missing += std::to_string(topo.id(k)) + " (" + topo.label(k) + ")";
      continue;
    }
    costs.push_back(*c);
  }
  if (!missing.empty()) throw Error(ErrorKind::kCoverage, "profile lacks nodes " + missing);
  for (int k = 0; k < topo.size(); ++k) {
    if (!topo.users(k).empty() && costs[k].mem_out == 0) {
      throw Error(ErrorKind::kInvalidProfile,
                  "node " + topo.label(k) + " is consumed but has mem_out = 0");
    }
  }
  if (budget.ram && *budget.ram <= p.mu_static) {
    throw Error(ErrorKind::kInfeasibleBudget,
                "RAM budget " + std::to_string(*budget.ram) + " leaves no room above mu_static " +
                    std::to_string(p.mu_static));
  }
  if (budget.deadline && *budget.deadline <= 0) {
    throw Error(ErrorKind::kInfeasibleBudget, "deadline must be positive");
  }
  return CostedGraph(g, std::move(topo), std::move(costs), p.mu_static, std::move(budget),
                     p.device_label);
}

namespace {

Rational micro(std::int64_t units) { return Rational(units, 1000000); }

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  // Inclusive integer range; modulo keeps results identical across libraries.
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(rng_() % span);
  }

 private:
  std::mt19937_64 rng_;
};

struct LayerDraw {
  Rational phi_compute, phi_page_in, phi_page_out, psi_compute;
  std::uint64_t mem = 0;
};

struct RegimeShape {
  bool uniform = false;
  bool mixed = false;
  bool tradeoff = false;
  Rational time_scale = 1;  // multiplies every time
  std::string label;
};

RegimeShape regime_shape(const std::string& regime) {
  RegimeShape shape;
  shape.label = regime;
  if (regime == "uniform") {
    shape.uniform = true;
  } else if (regime == "conv-like") {
  } else if (regime == "mixed" || regime == "mixed-cheap-expensive") {
    shape.mixed = true;
  } else if (regime == "tradeoff") {
    shape.tradeoff = true;
  } else if (regime.rfind("device:", 0) == 0) {
    // Base times are for a 48 MHz part; faster clocks scale them down.
    static const std::map<std::string, Rational> kClockRatio = {
        {"M0", Rational(1)},               // 48 MHz
        {"M4", Rational(48, 64)},          // 64 MHz
        {"A72", Rational(48, 1500)},       // 1.5 GHz
        {"TX2", Rational(48, 2000)},       // 2 GHz
    };
    const auto it = kClockRatio.find(regime.substr(7));
    if (it == kClockRatio.end()) throw Error(ErrorKind::kUnknownRegime, regime);
    shape.mixed = true;
    shape.time_scale = it->second;
  } else {
    throw Error(ErrorKind::kUnknownRegime, regime);
  }
  return shape;
}

std::uint64_t regime_salt(const std::string& regime) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : regime) h = (h ^ c) * 1099511628211ULL;
  return h;
}

LayerDraw draw_layer(Draw& d, const RegimeShape& shape, OpClass cls) {
  LayerDraw l;
  if (shape.uniform) {
    l.phi_compute = 1;
    l.phi_page_in = Rational(1, 2);
    l.phi_page_out = Rational(1, 2);
    l.psi_compute = Rational(1, 1000);
    l.mem = 1024;
    return l;
  }
  if (shape.tradeoff) {
    // Fixed costs, equal sizes: cheap layers are far cheaper to recompute
    // than to move, heavy layers the reverse.
    const bool cheap = cls == OpClass::kCheap;
    l.phi_compute = cheap ? Rational(1, 5) : Rational(4);
    l.phi_page_in = cheap ? Rational(5) : Rational(1, 5);
    l.phi_page_out = l.phi_page_in;
    l.psi_compute = cheap ? Rational(2, 10000) : Rational(4, 1000);
    l.mem = 8192;
    return l;
  }
  if (!shape.mixed) {
    // conv-like: compute dominates, paging moderately priced.
    l.phi_compute = micro(d.between(1500000, 3000000));
    l.phi_page_in = micro(d.between(300000, 600000));
    l.phi_page_out = micro(d.between(300000, 600000));
    l.psi_compute = micro(d.between(1500, 3000));
    l.mem = 256 * static_cast<std::uint64_t>(d.between(16, 64));
    return l;
  }
  if (cls == OpClass::kCheap) {
    // Elementwise: nearly free to recompute, large and costly to move.
    l.phi_compute = micro(d.between(50000, 150000));
    l.phi_page_in = micro(d.between(400000, 600000));
    l.phi_page_out = micro(d.between(400000, 600000));
    l.psi_compute = micro(d.between(100, 200));
    l.mem = 256 * static_cast<std::uint64_t>(d.between(48, 64));
  } else {
    l.phi_compute = micro(d.between(2000000, 4000000));
    l.phi_page_in = micro(d.between(300000, 500000));
    l.phi_page_out = micro(d.between(300000, 500000));
    l.psi_compute = micro(d.between(2000, 4000));
    l.mem = 256 * static_cast<std::uint64_t>(d.between(16, 32));
  }
  return l;
}

NodeCost to_cost(const LayerDraw& l, const RegimeShape& shape, int compute_factor) {
  // Transfer time follows size: 0.1 microseconds per byte at the base clock.
  const Rational per_byte(1, 10000000);
  NodeCost c;
  c.phi_compute = l.phi_compute * compute_factor;
  c.phi_pagein = l.phi_page_in;
  c.phi_pageout = l.phi_page_out;
  c.psi_compute = l.psi_compute * compute_factor * shape.time_scale;
  c.psi_pagein = per_byte * l.mem * shape.time_scale;
  c.psi_pageout = per_byte * l.mem * shape.time_scale;
  c.mem_out = l.mem;
  return c;
}

}  // namespace

CostProfile synth_profile(const TrainingGraph& g, const std::string& regime, std::uint64_t seed) {
  const RegimeShape shape = regime_shape(regime);
  const Topology topo(g);
  // Device regimes share draws so they differ only by clock.
  Draw draw(seed ^ regime_salt(regime.rfind("device:", 0) == 0 ? "device" : regime));

  std::map<NodeId, const Node*> by_id;
  for (const Node& node : g.nodes) by_id[node.id] = &node;

  // One draw per forward layer, shared with that layer's backward node.
  std::map<int, OpClass> layer_class;
  for (int k = 0; k < topo.size(); ++k) {
    const Node& node = *by_id[topo.id(k)];
    if (node.layer > 0 && !layer_class.count(node.layer)) {
      layer_class[node.layer] = node.op_class.value_or(OpClass::kHeavy);
    }
  }
  std::map<int, LayerDraw> layers;
  for (const auto& [layer, cls] : layer_class) layers[layer] = draw_layer(draw, shape, cls);

  CostProfile p;
  p.device_label = shape.label;
  p.mu_static = shape.uniform ? 0 : 4096;
  for (int k = 0; k < topo.size(); ++k) {
    const Node& node = *by_id[topo.id(k)];
    NodeCost c;
    if (node.role == NodeRole::kLoss) {
      LayerDraw loss;
      loss.phi_compute = shape.uniform ? Rational(1) : Rational(1, 20);
      loss.phi_page_in = shape.uniform ? Rational(1, 2) : Rational(1, 5);
      loss.phi_page_out = loss.phi_page_in;
      loss.psi_compute = shape.uniform ? Rational(1, 1000) : Rational(1, 10000);
      loss.mem = shape.uniform ? 1024 : 256;
      c = to_cost(loss, shape, 1);
    } else if (node.layer > 0) {
      const bool backward = node.role == NodeRole::kBackward;
      c = to_cost(layers[node.layer], shape, backward && !shape.uniform ? 2 : 1);
    } else {
      c = to_cost(draw_layer(draw, shape, node.op_class.value_or(OpClass::kHeavy)), shape, 1);
    }
    p.ids.push_back(node.id);
    p.costs.push_back(c);
  }
  return p;
}

}  // namespace poet
