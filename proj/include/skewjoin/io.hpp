#pragma once

// File formats: JSON for histograms, chain specs, class sets, plans and
// reports; a little-endian binary format for materialized relations.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "skewjoin/core.hpp"
#include "skewjoin/error.hpp"
#include "skewjoin/freqclass.hpp"
#include "skewjoin/planner.hpp"
#include "skewjoin/rational.hpp"
#include "skewjoin/selectivity.hpp"
#include "skewjoin/simulator.hpp"

namespace skewjoin {

using Json = nlohmann::json;

inline constexpr std::string_view kRelationMagic = "SKJREL01";

// Writes to a sibling temporary and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

namespace detail {

template <class T>
T json_get(const Json& j, const char* key, std::string_view what) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw FormatError(std::string(what) + ": field '" + key + "': " + e.what());
  }
}

inline std::uint32_t parse_id(const std::string& s, std::string_view what) {
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size() || v > UINT32_MAX) throw std::out_of_range(s);
    return static_cast<std::uint32_t>(v);
  } catch (const std::exception&) {
    throw FormatError(std::string(what) + ": bad value id '" + s + "'");
  }
}

inline Json id_list(const std::vector<JoinValue>& values) {
  Json out = Json::array();
  for (JoinValue v : values) out.push_back(v.id);
  return out;
}

inline std::vector<JoinValue> parse_id_list(const Json& j) {
  std::vector<JoinValue> out;
  for (const auto& x : j) out.push_back(JoinValue{x.get<std::uint32_t>()});
  return out;
}

}  // namespace detail

// {"domain_size": m, "total": t, "counts": {"<id>": c, ...}}
inline Json to_json(const ValueHistogram& h) {
  Json counts = Json::object();
  for (const auto& [v, c] : h.counts()) counts[std::to_string(v.id)] = c;
  return Json{{"domain_size", h.domain_size()}, {"total", h.total()}, {"counts", counts}};
}

inline ValueHistogram histogram_from_json(const Json& j) {
  constexpr std::string_view what = "histogram";
  ValueHistogram h(detail::json_get<std::uint32_t>(j, "domain_size", what));
  const auto total = detail::json_get<std::uint64_t>(j, "total", what);
  try {
    for (const auto& [key, c] : j.at("counts").items()) h.add(JoinValue{detail::parse_id(key, what)}, c.get<std::uint64_t>());
  } catch (const Json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
  if (h.total() != total) {
    throw FormatError("histogram: counts sum to " + std::to_string(h.total()) + " but total is " +
                      std::to_string(total));
  }
  return h;
}

// "SKJREL01" then (u32 value, u64 payload) records, little-endian.
inline std::string encode_relation(const Relation& rel) {
  std::string out(kRelationMagic);
  out.reserve(out.size() + rel.tuples.size() * 12);
  auto put = [&](std::uint64_t x, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
  };
  for (const auto& t : rel.tuples) {
    put(t.value.id, 4);
    put(t.payload, 8);
  }
  return out;
}

inline Relation decode_relation(std::string_view bytes, std::string name) {
  if (bytes.substr(0, kRelationMagic.size()) != kRelationMagic) {
    throw FormatError("relation '" + name + "': missing SKJREL01 magic");
  }
  bytes.remove_prefix(kRelationMagic.size());
  if (bytes.size() % 12 != 0) throw FormatError("relation '" + name + "': truncated record");
  auto get = [&](std::size_t off, int n) {
    std::uint64_t x = 0;
    for (int i = 0; i < n; ++i) x |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[off + i])) << (8 * i);
    return x;
  };
  Relation rel;
  rel.name = std::move(name);
  rel.tuples.reserve(bytes.size() / 12);
  for (std::size_t off = 0; off < bytes.size(); off += 12) {
    rel.tuples.push_back(Tuple{JoinValue{static_cast<std::uint32_t>(get(off, 4))}, get(off + 4, 8)});
  }
  return rel;
}

inline bool looks_like_relation(std::string_view bytes) { return bytes.starts_with(kRelationMagic); }

inline Json to_json(const ChainSpec& spec) {
  Json rels = Json::array();
  for (const auto& r : spec.relations) {
    rels.push_back(Json{{"name", r.name},
                        {"left_attr_hist", r.left_attr_hist ? to_json(*r.left_attr_hist) : Json(nullptr)},
                        {"right_attr_hist", r.right_attr_hist ? to_json(*r.right_attr_hist) : Json(nullptr)},
                        {"total", r.total}});
  }
  return Json{{"relations", rels}, {"independent", spec.independent}};
}

inline ChainSpec chain_spec_from_json(const Json& j) {
  constexpr std::string_view what = "chain spec";
  ChainSpec spec;
  spec.independent = j.contains("independent") ? detail::json_get<bool>(j, "independent", what) : true;
  if (!j.contains("relations") || !j["relations"].is_array()) throw FormatError("chain spec: missing relations array");
  for (const auto& rj : j["relations"]) {
    ChainRelation r;
    r.name = rj.contains("name") ? detail::json_get<std::string>(rj, "name", what) : "";
    for (auto [key, slot] : {std::pair{"left_attr_hist", &r.left_attr_hist}, std::pair{"right_attr_hist", &r.right_attr_hist}}) {
      if (rj.contains(key) && !rj[key].is_null()) *slot = histogram_from_json(rj[key]);
    }
    if (rj.contains("total")) {
      r.total = detail::json_get<std::uint64_t>(rj, "total", what);
    } else if (r.left_attr_hist || r.right_attr_hist) {
      r.total = (r.left_attr_hist ? r.left_attr_hist : r.right_attr_hist)->total();
    }
    spec.relations.push_back(std::move(r));
  }
  return spec;
}

inline Json to_json(const FrequencyClassSet& cs) {
  Json classes = Json::array();
  for (const auto& c : cs.classes) {
    Json cj{{"key", to_string(c.key)}, {"members", detail::id_list(c.members)}};
    if (c.upper) cj["upper"] = to_string(*c.upper);
    if (!c.member_products.empty()) {
      Json prods = Json::array();
      for (const auto& p : c.member_products) prods.push_back(to_string(p));
      cj["member_products"] = prods;
    }
    classes.push_back(std::move(cj));
  }
  return Json{{"mode", std::string(to_string(cs.mode))}, {"classes", classes}};
}

inline FrequencyClassSet class_set_from_json(const Json& j) {
  FrequencyClassSet cs;
  cs.mode = parse_class_mode(detail::json_get<std::string>(j, "mode", "class set"));
  for (const auto& cj : j.at("classes")) {
    FrequencyClass c;
    c.key = parse_rational(cj.at("key").get<std::string>());
    if (cj.contains("upper")) c.upper = parse_rational(cj["upper"].get<std::string>());
    c.members = detail::parse_id_list(cj.at("members"));
    if (cj.contains("member_products")) {
      for (const auto& p : cj["member_products"]) c.member_products.push_back(parse_rational(p.get<std::string>()));
    }
    cs.classes.push_back(std::move(c));
  }
  return cs;
}

inline Json to_json(const FrequencyTree& tree) {
  Json nodes = Json::array();
  for (const auto& node : tree.nodes) {
    nodes.push_back(Json{{"key", to_string(node.key)}, {"leaves", detail::id_list(node.leaves)}});
  }
  return Json{{"mode", std::string(to_string(tree.mode))}, {"root", Json{{"classes", nodes}}}};
}

inline Json to_json(const ClassAssignment& a, const FrequencyTree& tree) {
  Json procs = Json::array();
  for (const auto& sel : a.selections) {
    Json leaves = Json::array();
    for (const auto& leaf : sel.leaves) {
      leaves.push_back(Json{{"class", leaf.class_index}, {"value", tree.nodes.at(leaf.class_index).leaves.at(leaf.leaf_index).id}});
    }
    procs.push_back(Json{{"p", sel.processor}, {"load", to_string(sel.load)}, {"classes", sel.classes}, {"leaves", leaves}});
  }
  return Json{{"target", to_string(a.target)}, {"max_load", to_string(a.max_load())}, {"processors", procs}};
}

inline Json to_json(const PartitionPlan& plan) {
  Json vwl = Json::object(), pn = Json::object();
  for (const auto& [v, w] : plan.stats.vwl) vwl[std::to_string(v.id)] = w;
  for (const auto& [v, p] : plan.stats.pn) pn[std::to_string(v.id)] = to_string(p);
  Json stats{{"tpc", plan.stats.tpc},
             {"pwl", to_string(plan.stats.pwl)},
             {"threshold", to_string(plan.stats.threshold)},
             {"vwl", vwl},
             {"pn", pn},
             {"sk", detail::id_list(plan.stats.skewed)},
             {"both_skewed", detail::id_list(plan.stats.both_skewed)},
             {"unplaced", detail::id_list(plan.stats.unplaced)}};
  Json directives = Json::array();
  for (const auto& [v, d] : plan.directives) {
    directives.push_back(Json{{"value", v.id},
                              {"r", Json{{"action", std::string(to_string(d.r_action))}}},
                              {"s", Json{{"action", std::string(to_string(d.s_action))}}},
                              {"group", d.group}});
  }
  return Json{{"strategy", std::string(to_string(plan.strategy))},
              {"n", plan.n},
              {"domain_size", plan.domain_size},
              {"skew_stats", stats},
              {"directives", directives},
              {"residual_processors", plan.residual_processors}};
}

inline PartitionPlan plan_from_json(const Json& j) {
  constexpr std::string_view what = "plan";
  PartitionPlan plan;
  try {
    plan.strategy = parse_strategy(j.at("strategy").get<std::string>());
    plan.n = j.at("n").get<std::uint32_t>();
    plan.domain_size = j.value("domain_size", std::uint32_t{1});
    plan.residual_processors = j.at("residual_processors").get<std::vector<std::uint32_t>>();
    const auto& st = j.at("skew_stats");
    plan.stats.tpc = st.at("tpc").get<std::uint64_t>();
    plan.stats.pwl = parse_rational(st.at("pwl").get<std::string>());
    plan.stats.threshold = parse_rational(st.value("threshold", std::string("0")));
    for (const auto& [k, w] : st.at("vwl").items()) plan.stats.vwl.emplace(JoinValue{detail::parse_id(k, what)}, w.get<std::uint64_t>());
    for (const auto& [k, p] : st.at("pn").items()) plan.stats.pn.emplace(JoinValue{detail::parse_id(k, what)}, parse_rational(p.get<std::string>()));
    plan.stats.skewed = detail::parse_id_list(st.at("sk"));
    plan.stats.both_skewed = detail::parse_id_list(st.value("both_skewed", Json::array()));
    plan.stats.unplaced = detail::parse_id_list(st.value("unplaced", Json::array()));
    for (const auto& dj : j.at("directives")) {
      RouteDirective d;
      d.value = JoinValue{dj.at("value").get<std::uint32_t>()};
      d.r_action = parse_route_action(dj.at("r").at("action").get<std::string>());
      d.s_action = parse_route_action(dj.at("s").at("action").get<std::string>());
      d.group = dj.at("group").get<std::vector<std::uint32_t>>();
      plan.directives.emplace(d.value, std::move(d));
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
  return plan;
}

inline Json to_json(const ExecutionReport& report) {
  Json loads = Json::array();
  for (const auto& l : report.loads) {
    loads.push_back(Json{{"p", l.processor_id}, {"recv_r", l.received_r}, {"recv_s", l.received_s}, {"joins", l.produced_joins}});
  }
  const auto& m = report.metrics;
  return Json{{"n", report.n},
              {"strategy", std::string(to_string(report.strategy))},
              {"size_r", report.size_r},
              {"size_s", report.size_s},
              {"loads", loads},
              {"total_joins", report.total_joins},
              {"max_joins", report.max_joins()},
              {"metrics", Json{{"jps_factor", to_double(m.jps_factor)},
                               {"redist_r", to_double(m.redist_r)},
                               {"redist_s", to_double(m.redist_s)},
                               {"definition", "max over processors / (total / n)"}}},
              {"metrics_exact", Json{{"jps_factor", to_string(m.jps_factor)},
                                     {"redist_r", to_string(m.redist_r)},
                                     {"redist_s", to_string(m.redist_s)}}},
              {"digest", report.output_digest ? Json(report.output_digest->hex()) : Json(nullptr)}};
}

}  // namespace skewjoin
