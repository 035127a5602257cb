// Python bindings. Rationals cross the boundary as exact decimal or p/q
// strings and schedules as their JSON documents; the package wrapper turns
// them into fractions.Fraction and dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <utility>

#include "poet/baselines.hpp"
#include "poet/costmodel.hpp"
#include "poet/error.hpp"
#include "poet/graph.hpp"
#include "poet/milp.hpp"
#include "poet/oracle.hpp"
#include "poet/planner.hpp"
#include "poet/schedule.hpp"
#include "poet/solver.hpp"

namespace py = pybind11;

namespace poet {
namespace {

Budget make_budget(std::optional<std::uint64_t> ram, const std::optional<std::string>& deadline) {
  Budget b;
  b.ram = ram;
  if (deadline) b.deadline = parse_rational(*deadline);
  return b;
}

CostedGraph make_instance(const std::string& graph_json, const std::string& profile_json,
                          std::optional<std::uint64_t> ram, const std::optional<std::string>& deadline) {
  const TrainingGraph g = graph_from_json(nlohmann::json::parse(graph_json));
  const LoadedProfile p = load_profile(nlohmann::json::parse(profile_json));
  return attach(g, p.profile, make_budget(ram, deadline));
}

std::optional<std::string> opt_text(const std::optional<Rational>& v) {
  if (!v) return std::nullopt;
  return format_rational(*v);
}

std::string schedule_json(const Schedule& s, const CostedGraph& cg, const std::string& name,
                          const std::optional<Rational>& objective) {
  return schedule_to_json(ScheduleFile{s, name, graph_hash(cg.graph()), cg.budget(), objective}).dump();
}

Schedule parse_schedule(const std::string& text) {
  return schedule_from_json(nlohmann::json::parse(text)).schedule;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["energy"] = format_rational(m.energy);
  d["compute_time"] = format_rational(m.compute_time);
  d["peak_ram"] = m.peak_ram;
  d["remat"] = m.remat_count;
  d["pagein"] = m.pagein_count;
  d["pageout"] = m.pageout_count;
  return d;
}

py::dict baseline_dict(const BaselineResult& r, const CostedGraph& cg) {
  py::dict d;
  d["name"] = r.name;
  d["feasible"] = r.feasible();
  d["status"] = r.status ? py::cast(std::string(to_string(*r.status))) : py::none();
  d["schedule"] = r.feasible() ? py::cast(schedule_json(*r.schedule, cg, r.name, r.metrics->energy)) : py::none();
  d["metrics"] = r.feasible() ? py::object(metrics_dict(*r.metrics)) : py::none();
  return d;
}

}  // namespace
}  // namespace poet

PYBIND11_MODULE(_core, m) {
  using namespace poet;
  m.doc() = "Energy-optimal rematerialization and paging schedules";

  static py::exception<Error> poet_error(m, "PoetError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      poet_error(e.what());
    }
  });

  m.def(
      "generate",
      [](const std::string& kind, int depth, const std::string& regime, std::uint64_t seed,
         const std::string& tags) {
        GraphSpec spec;
        spec.kind = parse_graph_kind(kind);
        spec.depth = depth;
        if (!tags.empty()) spec.tags = parse_tags(tags);
        const TrainingGraph g = build_training_graph(spec);
        return std::make_pair(graph_to_json(g).dump(), profile_to_json(synth_profile(g, regime, seed)).dump());
      },
      py::arg("kind"), py::arg("depth"), py::arg("regime") = "mixed", py::arg("seed") = 0, py::arg("tags") = "",
      "Returns (graph_json, profile_json) for a synthetic instance.");

  py::class_<CostedGraph>(m, "Instance")
      .def(py::init(&make_instance), py::arg("graph_json"), py::arg("profile_json"), py::arg("ram") = py::none(),
           py::arg("deadline") = py::none())
      .def(
          "with_budget",
          [](const CostedGraph& cg, std::optional<std::uint64_t> ram, const std::optional<std::string>& deadline) {
            return cg.with_budget(make_budget(ram, deadline));
          },
          py::arg("ram") = py::none(), py::arg("deadline") = py::none())
      .def_property_readonly("size", &CostedGraph::size)
      .def_property_readonly("mu_static", &CostedGraph::mu_static)
      .def_property_readonly("full_memory", &CostedGraph::full_memory)
      .def_property_readonly("energy_floor", [](const CostedGraph& cg) { return format_rational(cg.energy_floor()); })
      .def_property_readonly("compute_time_floor",
                             [](const CostedGraph& cg) { return format_rational(cg.compute_time_floor()); })
      .def_property_readonly("ram", [](const CostedGraph& cg) { return cg.budget().ram; })
      .def_property_readonly("deadline", [](const CostedGraph& cg) { return opt_text(cg.budget().deadline); })
      .def_property_readonly("diagonal_peak", [](const CostedGraph& cg) {
        const CostedGraph open = cg.with_budget(Budget{});
        return evaluate(diagonal_schedule(open), open).peak_ram;
      });

  m.def(
      "solve",
      [](const CostedGraph& cg, const std::string& mode, double time_limit) {
        const MilpInstance inst = restrict(build_milp(cg), parse_restrict_mode(mode));
        SolveLimits limits;
        limits.time_limit = time_limit;
        SolveResult r;
        {
          py::gil_scoped_release release;
          r = solve_exact(inst, limits);
        }
        py::dict d;
        d["status"] = std::string(to_string(r.status));
        d["gap"] = r.gap;
        d["nodes"] = r.nodes;
        d["seconds"] = r.seconds;
        d["objective"] = r.assignment ? py::cast(format_rational(r.assignment->objective)) : py::none();
        d["schedule"] = r.assignment ? py::cast(schedule_json(from_assignment(*r.assignment, inst), cg, mode,
                                                              r.assignment->objective))
                                     : py::none();
        return d;
      },
      py::arg("instance"), py::arg("mode") = "integrated", py::arg("time_limit") = 60.0,
      "Exact branch-and-bound solve of the integrated (or restricted) program.");

  m.def(
      "verify",
      [](const CostedGraph& cg, const std::string& schedule) {
        const VerifyReport rep = verify(parse_schedule(schedule), cg);
        py::list violations;
        for (const Violation& v : rep.violations) {
          py::dict d;
          d["family"] = v.family;
          d["t"] = v.t;
          d["i"] = v.i;
          d["k"] = v.k;
          d["detail"] = v.detail;
          violations.append(d);
        }
        py::dict d;
        d["ok"] = rep.ok;
        d["violations"] = violations;
        return d;
      },
      py::arg("instance"), py::arg("schedule"));

  m.def(
      "evaluate",
      [](const CostedGraph& cg, const std::string& schedule) { return metrics_dict(evaluate(parse_schedule(schedule), cg)); },
      py::arg("instance"), py::arg("schedule"));

  m.def(
      "diagonal",
      [](const CostedGraph& cg) { return schedule_json(diagonal_schedule(cg), cg, "diagonal", std::nullopt); },
      py::arg("instance"));

  m.def(
      "brute_force",
      [](const CostedGraph& cg, std::uint64_t cap) {
        OracleResult o;
        {
          py::gil_scoped_release release;
          o = brute_force(cg, cap);
        }
        py::dict d;
        d["energy"] = opt_text(o.optimal_energy);
        d["explored"] = o.explored;
        d["schedule"] = o.witness ? py::cast(schedule_json(*o.witness, cg, "oracle", o.optimal_energy)) : py::none();
        return d;
      },
      py::arg("instance"), py::arg("cap") = 100000000ULL);

  m.def(
      "baseline",
      [](const CostedGraph& cg, const std::string& name, double time_limit) {
        SolveLimits limits;
        limits.time_limit = time_limit;
        BaselineResult r;
        if (name == "chen" || name == "chen-sqrt") {
          r = chen_sqrt(cg);
        } else if (name == "capuchin" || name == "capuchin-greedy") {
          r = capuchin_greedy(cg);
        } else {
          py::gil_scoped_release release;
          r = solve_restricted(cg, parse_restrict_mode(name), limits);
        }
        return baseline_dict(r, cg);
      },
      py::arg("instance"), py::arg("name"), py::arg("time_limit") = 60.0,
      "chen, capuchin, or a solver mode (integrated, remat, paging).");

  m.def(
      "chen_budget", [](const CostedGraph& cg) { return chen_sqrt_budget(cg); }, py::arg("instance"));

  m.def(
      "simulate",
      [](const CostedGraph& cg, const std::string& schedule, bool hide, bool sync_paging) {
        const SimOptions opts{sync_paging};
        ExecutionPlan plan = emit_plan(parse_schedule(schedule), cg);
        if (hide) plan = hide_latency(plan, cg, opts);
        const SimReport rep = simulate(plan, cg, opts);
        py::dict d;
        d["ok"] = rep.ok;
        d["violation"] = rep.violation;
        d["peak_ram"] = rep.peak_ram;
        d["wall_clock"] = format_rational(rep.wall_clock);
        d["compute_time"] = format_rational(rep.compute_time);
        d["hidden_transfer"] = format_rational(rep.hidden_transfer);
        d["transfers_exposed"] = plan.transfers_exposed;
        d["plan"] = plan_to_text(plan, cg.topology());
        return d;
      },
      py::arg("instance"), py::arg("schedule"), py::arg("hide_latency") = false, py::arg("sync_paging") = false);
}
