#include "seamstress/segment.hpp"

#include <algorithm>
#include <set>
#include <json.hpp>
#include <map>

#include "seamstress/error.hpp"
#include "seamstress/text.hpp"
#include "seamstress/tokens.hpp"

namespace seamstress {

std::string_view to_string(UnitStatus s) {
  switch (s) {
    case UnitStatus::pending: return "pending";
    case UnitStatus::translated: return "translated";
    case UnitStatus::compiled: return "compiled";
    case UnitStatus::failed: return "failed";
    case UnitStatus::aborted: return "aborted";
  }
  return "pending";
}

std::optional<UnitStatus> parse_unit_status(std::string_view s) {
  for (auto v : {UnitStatus::pending, UnitStatus::translated, UnitStatus::compiled,
                 UnitStatus::failed, UnitStatus::aborted})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

std::string_view to_string(ResizeTrigger t) {
  switch (t) {
    case ResizeTrigger::initial: return "initial";
    case ResizeTrigger::context_overflow: return "context_overflow";
    case ResizeTrigger::compile_stall: return "compile_stall";
  }
  return "initial";
}

std::optional<ResizeTrigger> parse_resize_trigger(std::string_view s) {
  for (auto v : {ResizeTrigger::initial, ResizeTrigger::context_overflow,
                 ResizeTrigger::compile_stall})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

std::vector<TranslationUnit*> SegmentPlan::units_of(std::string_view module) {
  std::vector<TranslationUnit*> out;
  for (auto& u : units)
    if (u.module == module) out.push_back(&u);
  return out;
}

TranslationUnit* SegmentPlan::find(std::string_view unit_id) {
  for (auto& u : units)
    if (u.id() == unit_id) return &u;
  return nullptr;
}

const TranslationUnit* SegmentPlan::find(std::string_view unit_id) const {
  for (const auto& u : units)
    if (u.id() == unit_id) return &u;
  return nullptr;
}

std::vector<AtomGroup> group_sccs(const ModuleSource& module) {
  const auto& els = module.elements();
  auto atoms = build_atoms(els, module.scan.blocks);
  if (atoms.empty()) return {};
  std::vector<std::size_t> atom_of(els.size(), 0);
  for (std::size_t a = 0; a < atoms.size(); ++a)
    for (auto e : atoms[a].elements) atom_of[e] = a;

  // Every atom starts as its own run; an SCC fuses the run from its first
  // to its last member atom.
  std::vector<std::size_t> reach(atoms.size());
  for (std::size_t a = 0; a < atoms.size(); ++a) reach[a] = a;
  auto graph = build_call_graph(els, {{module.file_id(), module.text()}});
  for (const auto& scc : graph.scc_groups) {
    if (scc.size() < 2) continue;
    std::size_t lo = atoms.size(), hi = 0;
    for (auto n : scc) {
      auto a = atom_of[graph.element_index[n]];
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    reach[lo] = std::max(reach[lo], hi);
  }

  std::vector<AtomGroup> out;
  for (std::size_t a = 0; a < atoms.size();) {
    std::size_t end = reach[a];
    for (std::size_t k = a; k <= end; ++k) end = std::max(end, reach[k]);
    AtomGroup g;
    g.start_line = atoms[a].start_line;
    g.end_line = atoms[end].end_line;
    for (std::size_t k = a; k <= end; ++k)
      g.elements.insert(g.elements.end(), atoms[k].elements.begin(), atoms[k].elements.end());
    out.push_back(std::move(g));
    a = end + 1;
  }
  return out;
}

namespace {

TranslationUnit make_unit(const ModuleSource& m, int ordinal, int start, int end, bool oversized) {
  TranslationUnit u;
  u.module = m.name;
  u.ordinal = ordinal;
  u.start_line = start;
  u.end_line = end;
  u.oversized = oversized;
  for (const auto& e : m.elements())
    if (e.start_line >= start && e.start_line <= end) u.element_ids.push_back(e.id());
  u.text = span_text(m.scan.lines, start, end);
  u.est_tokens = estimate_tokens(u.text);
  return u;
}

void check_cap(int cap, int floor_lines) {
  if (cap < floor_lines)
    throw FloorReached("cap " + std::to_string(cap) + " is below the floor of " +
                       std::to_string(floor_lines) + " lines");
}

}  // namespace

std::vector<TranslationUnit> plan_segments(const ModuleSource& module, int cap_lines,
                                           int from_line, int to_line, int first_ordinal) {
  const int n = static_cast<int>(module.lines.size());
  if (to_line < 0) to_line = n;
  std::vector<std::pair<int, int>> chunks;
  for (const auto& g : group_sccs(module)) {
    if (g.start_line < from_line || g.end_line > to_line) continue;
    int start = chunks.empty() ? from_line : chunks.back().second + 1;
    chunks.emplace_back(start, g.end_line);
  }
  if (chunks.empty()) return {};
  chunks.back().second = to_line;

  std::vector<TranslationUnit> units;
  int ordinal = first_ordinal;
  int cur_start = chunks.front().first, cur_end = -1, cur_chunks = 0;
  auto close = [&] {
    bool oversized = cur_chunks == 1 && cur_end - cur_start + 1 > cap_lines;
    units.push_back(make_unit(module, ordinal++, cur_start, cur_end, oversized));
  };
  for (auto [cs, ce] : chunks) {
    if (cur_chunks > 0 && ce - cur_start + 1 > cap_lines) {
      close();
      cur_start = cs;
      cur_chunks = 0;
    }
    cur_end = ce;
    ++cur_chunks;
  }
  close();
  return units;
}

int initial_cap_lines(std::size_t context_window, int max_cap, int floor_lines) {
  auto by_window = static_cast<long long>(context_window / 2 / 15);
  long long cap = std::min<long long>(max_cap, by_window);
  return static_cast<int>(std::max<long long>(cap, floor_lines));
}

SegmentPlan make_plan(std::span<const ModuleSource> modules, int cap_lines, int floor_lines) {
  check_cap(cap_lines, floor_lines);
  SegmentPlan p;
  p.cap_lines = cap_lines;
  p.floor_lines = floor_lines;
  p.history.push_back({cap_lines, ResizeTrigger::initial});
  for (const auto& m : modules) {
    auto us = plan_segments(m, cap_lines);
    p.units.insert(p.units.end(), us.begin(), us.end());
  }
  return p;
}

int next_cap_for_overflow(int cap, int floor_lines) {
  int next = static_cast<int>(static_cast<long long>(cap) * 7 / 8);
  check_cap(next, floor_lines);
  if (next >= cap) throw FloorReached("cap " + std::to_string(cap) + " cannot shrink further");
  return next;
}

int next_cap_for_stall(int cap, int floor_lines) {
  int next = std::max(floor_lines, (cap + 1) / 2);
  check_cap(next, floor_lines);
  if (next >= cap) throw FloorReached("cap " + std::to_string(cap) + " cannot shrink further");
  return next;
}

namespace {

SegmentPlan replan(SegmentPlan plan, std::span<const ModuleSource> modules, int cap,
                   ResizeTrigger trigger) {
  plan.cap_lines = cap;
  plan.history.push_back({cap, trigger});
  std::vector<TranslationUnit> out;
  for (const auto& m : modules) {
    std::vector<TranslationUnit> old;
    for (auto& u : plan.units)
      if (u.module == m.name) old.push_back(std::move(u));
    std::sort(old.begin(), old.end(),
              [](const auto& a, const auto& b) { return a.start_line < b.start_line; });
    int next_ordinal = 1;
    for (const auto& u : old) next_ordinal = std::max(next_ordinal, u.ordinal + 1);

    for (std::size_t i = 0; i < old.size();) {
      if (old[i].status == UnitStatus::compiled) {
        out.push_back(std::move(old[i++]));
        continue;
      }
      std::size_t j = i;
      while (j < old.size() && old[j].status != UnitStatus::compiled) ++j;
      auto fresh = plan_segments(m, cap, old[i].start_line, old[j - 1].end_line, next_ordinal);
      for (auto& f : fresh) {
        // A unit whose range did not change keeps its id.
        for (std::size_t k = i; k < j; ++k)
          if (old[k].start_line == f.start_line && old[k].end_line == f.end_line)
            f.ordinal = old[k].ordinal;
        if (f.ordinal >= next_ordinal) next_ordinal = f.ordinal + 1;
        out.push_back(std::move(f));
      }
      i = j;
    }
  }
  plan.units = std::move(out);
  return plan;
}

}  // namespace

SegmentPlan shrink_for_overflow(SegmentPlan plan, std::span<const ModuleSource> modules) {
  int cap = next_cap_for_overflow(plan.cap_lines, plan.floor_lines);
  return replan(std::move(plan), modules, cap, ResizeTrigger::context_overflow);
}

SegmentPlan shrink_for_stall(SegmentPlan plan, std::span<const ModuleSource> modules) {
  int cap = next_cap_for_stall(plan.cap_lines, plan.floor_lines);
  return replan(std::move(plan), modules, cap, ResizeTrigger::compile_stall);
}

std::string plan_to_json(const SegmentPlan& plan) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["cap_lines"] = plan.cap_lines;
  j["floor_lines"] = plan.floor_lines;
  j["history"] = ordered_json::array();
  for (const auto& h : plan.history)
    j["history"].push_back({{"cap", h.cap}, {"trigger", to_string(h.trigger)}});
  j["units"] = ordered_json::array();
  for (const auto& u : plan.units)
    j["units"].push_back({{"id", u.id()},
                          {"module", u.module},
                          {"ordinal", u.ordinal},
                          {"start_line", u.start_line},
                          {"end_line", u.end_line},
                          {"element_ids", u.element_ids},
                          {"est_tokens", u.est_tokens},
                          {"status", to_string(u.status)},
                          {"oversized", u.oversized}});
  return j.dump(2) + "\n";
}

SegmentPlan plan_from_json(std::string_view text, std::span<const ModuleSource> modules) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("plan.json: ") + e.what());
  }
  std::map<std::string, const ModuleSource*> by_name;
  for (const auto& m : modules) by_name[m.name] = &m;
  SegmentPlan p;
  try {
    p.cap_lines = j.at("cap_lines").get<int>();
    p.floor_lines = j.at("floor_lines").get<int>();
    for (const auto& h : j.at("history")) {
      auto t = parse_resize_trigger(h.at("trigger").get<std::string>());
      if (!t) throw FormatError("plan.json: unknown trigger");
      p.history.push_back({h.at("cap").get<int>(), *t});
    }
    for (const auto& ju : j.at("units")) {
      auto mod = ju.at("module").get<std::string>();
      auto it = by_name.find(mod);
      if (it == by_name.end()) throw FormatError("plan.json: unknown module " + mod);
      const auto& m = *it->second;
      int s = ju.at("start_line").get<int>(), e = ju.at("end_line").get<int>();
      if (s < 1 || e < s || e > static_cast<int>(m.lines.size()))
        throw FormatError("plan.json: unit range outside module " + mod);
      auto u = make_unit(m, ju.at("ordinal").get<int>(), s, e, ju.at("oversized").get<bool>());
      auto st = parse_unit_status(ju.at("status").get<std::string>());
      if (!st) throw FormatError("plan.json: unknown status");
      u.status = *st;
      p.units.push_back(std::move(u));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("plan.json: ") + e.what());
  }
  return p;
}

void write_plan_outputs(const SegmentPlan& plan, const fs::path& out_dir) {
  auto dir = out_dir / "segments";
  fs::create_directories(dir);
  std::set<std::string> keep;
  for (const auto& u : plan.units) {
    keep.insert(u.id() + ".c");
    write_file_atomic(dir / (u.id() + ".c"), u.text);
  }
  // Units of an earlier plan.
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".c" && !keep.count(e.path().filename().string())) fs::remove(e.path());
  write_file_atomic(out_dir / "plan.json", plan_to_json(plan));
}

}  // namespace seamstress
