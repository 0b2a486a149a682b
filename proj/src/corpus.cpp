#include "qter/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qter/names.hpp"

namespace qter {

using nlohmann::json;

std::optional<double> parse_real(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

namespace {

std::string attr_text(const json& value, const std::string& where) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_array()) {
    std::string joined;
    for (const auto& item : value) {
      if (!item.is_string()) throw DataError(where + ": attribute arrays must hold strings");
      if (!joined.empty()) joined.push_back(' ');
      joined += item.get<std::string>();
    }
    return joined;
  }
  if (value.is_number()) return value.dump();
  throw DataError(where + ": unsupported attribute value " + value.dump());
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

Dataset Dataset::from_parts(std::vector<Reference> refs, std::vector<HyperEdge> edges) {
  Dataset ds;
  ds.refs_ = std::move(refs);
  ds.edges_ = std::move(edges);
  for (RefIdx r = 0; r < ds.refs_.size(); ++r) {
    auto& ref = ds.refs_[r];
    if (ref.id.empty()) throw DataError("reference with empty id");
    if (blank(ref.name)) throw DataError("reference " + ref.id + " has an empty name");
    if (!ds.ref_by_id_.emplace(ref.id, r).second) {
      throw DataError("duplicate reference id " + ref.id);
    }
    ref.normalized = normalize_name(ref.name);
  }
  for (EdgeIdx e = 0; e < ds.edges_.size(); ++e) {
    const auto& edge = ds.edges_[e];
    if (edge.id.empty()) throw DataError("hyper-edge with empty id");
    if (!ds.edge_by_id_.emplace(edge.id, e).second) {
      throw DataError("duplicate publication id " + edge.id);
    }
    if (edge.refs.empty()) throw DataError("hyper-edge " + edge.id + " has no references");
    std::set<RefIdx> seen;
    for (RefIdx r : edge.refs) {
      if (r >= ds.refs_.size()) throw DataError("hyper-edge " + edge.id + " lists an unknown reference");
      if (!seen.insert(r).second) {
        throw DataError("hyper-edge " + edge.id + " lists reference " + ds.refs_[r].id + " twice");
      }
      const auto& back = ds.refs_[r].hyperedges;
      if (std::find(back.begin(), back.end(), e) == back.end()) {
        throw DataError("reference " + ds.refs_[r].id + " does not list hyper-edge " + edge.id);
      }
    }
  }
  for (const auto& ref : ds.refs_) {
    for (EdgeIdx e : ref.hyperedges) {
      if (e >= ds.edges_.size()) throw DataError("reference " + ref.id + " lists an unknown hyper-edge");
      const auto& members = ds.edges_[e].refs;
      const RefIdx self = ds.ref_by_id_.at(ref.id);
      if (std::find(members.begin(), members.end(), self) == members.end()) {
        throw DataError("hyper-edge " + ds.edges_[e].id + " does not list reference " + ref.id);
      }
    }
  }
  ds.build_indexes();
  return ds;
}

Dataset Dataset::from_records(const std::vector<PublicationRecord>& records) {
  std::vector<Reference> refs;
  std::vector<HyperEdge> edges;
  edges.reserve(records.size());
  for (const auto& rec : records) {
    if (rec.pub_id.empty()) throw DataError("publication record without pub_id");
    if (rec.authors.empty()) throw DataError("publication " + rec.pub_id + " has no authors");
    HyperEdge edge;
    edge.id = rec.pub_id;
    edge.attrs = rec.attrs;
    const auto e = static_cast<EdgeIdx>(edges.size());
    for (const auto& author : rec.authors) {
      if (blank(author.name)) throw DataError("publication " + rec.pub_id + " has an empty author name");
      Reference ref;
      ref.id = author.ref_id.empty() ? "r" + std::to_string(refs.size() + 1) : author.ref_id;
      ref.name = author.name;
      ref.attrs = rec.attrs;
      for (const auto& [k, v] : author.attrs) ref.attrs[k] = v;
      ref.hyperedges.push_back(e);
      edge.refs.push_back(static_cast<RefIdx>(refs.size()));
      refs.push_back(std::move(ref));
    }
    edges.push_back(std::move(edge));
  }
  return from_parts(std::move(refs), std::move(edges));
}

void Dataset::build_indexes() {
  names_.clear();
  name_ids_.clear();
  name_refs_.clear();
  block_index_.clear();
  numeric_.assign(refs_.size(), std::nullopt);
  numeric_index_.clear();
  for (RefIdx r = 0; r < refs_.size(); ++r) {
    auto& ref = refs_[r];
    auto [it, inserted] = name_ids_.emplace(ref.normalized, static_cast<NameId>(names_.size()));
    if (inserted) {
      names_.push_back(ref.normalized);
      name_refs_.emplace_back();
    }
    ref.name_id = it->second;
    name_refs_[it->second].push_back(r);
    block_index_[blocking_key(ref.normalized)].push_back(r);
    if (auto v = parse_real(ref.normalized)) {
      numeric_[r] = *v;
      numeric_index_.emplace_back(*v, r);
    }
  }
  std::sort(numeric_index_.begin(), numeric_index_.end());
}

std::optional<RefIdx> Dataset::find_ref(std::string_view id) const {
  auto it = ref_by_id_.find(std::string(id));
  if (it == ref_by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<EdgeIdx> Dataset::find_edge(std::string_view id) const {
  auto it = edge_by_id_.find(std::string(id));
  if (it == edge_by_id_.end()) return std::nullopt;
  return it->second;
}

RefIdx Dataset::require_ref(std::string_view id) const {
  auto r = find_ref(id);
  if (!r) throw DataError("unknown reference id " + std::string(id));
  return *r;
}

std::optional<NameId> Dataset::find_name(std::string_view normalized) const {
  auto it = name_ids_.find(std::string(normalized));
  if (it == name_ids_.end()) return std::nullopt;
  return it->second;
}

std::span<const RefIdx> Dataset::block(std::string_view key) const {
  auto it = block_index_.find(std::string(key));
  if (it == block_index_.end()) return {};
  return it->second;
}

std::vector<RefIdx> Dataset::lookup_name(std::string_view name) const {
  auto id = find_name(normalize_name(name));
  if (!id) return {};
  const auto& refs = name_refs_[*id];
  return {refs.begin(), refs.end()};
}

std::vector<RefIdx> Dataset::cooccurring(RefIdx r) const {
  if (r >= refs_.size()) throw DataError("unknown reference index " + std::to_string(r));
  std::vector<RefIdx> out;
  for (EdgeIdx e : refs_[r].hyperedges) {
    for (RefIdx other : edges_[e].refs) {
      if (other != r) out.push_back(other);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<PublicationRecord> read_records(std::istream& in) {
  std::vector<PublicationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line) || line.find_first_not_of(" \t") == line.find('#')) continue;
    const std::string where = "line " + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": malformed record: " + e.what());
    }
    if (!obj.is_object()) throw DataError(where + ": record must be a JSON object");
    PublicationRecord rec;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      const std::string& key = it.key();
      if (key == "pub_id") {
        if (it->is_string()) {
          rec.pub_id = it->get<std::string>();
        } else if (it->is_number_integer()) {
          rec.pub_id = it->dump();
        } else {
          throw DataError(where + ": pub_id must be a string");
        }
      } else if (key == "authors") {
        if (!it->is_array()) throw DataError(where + ": authors must be an array");
        for (const auto& a : *it) {
          AuthorEntry author;
          if (a.is_string()) {
            author.name = a.get<std::string>();
          } else if (a.is_object()) {
            for (auto f = a.begin(); f != a.end(); ++f) {
              if (f.key() == "name") {
                if (!f->is_string()) throw DataError(where + ": author name must be a string");
                author.name = f->get<std::string>();
              } else if (f.key() == "ref_id") {
                if (!f->is_string()) throw DataError(where + ": ref_id must be a string");
                author.ref_id = f->get<std::string>();
              } else {
                author.attrs[f.key()] = attr_text(*f, where);
              }
            }
          } else {
            throw DataError(where + ": author entries must be strings or objects");
          }
          if (blank(author.name)) throw DataError(where + ": empty author name");
          rec.authors.push_back(std::move(author));
        }
      } else {
        rec.attrs[key] = attr_text(*it, where);
      }
    }
    if (rec.pub_id.empty()) throw DataError(where + ": missing pub_id");
    if (rec.authors.empty()) throw DataError(where + ": record " + rec.pub_id + " has no authors");
    records.push_back(std::move(rec));
  }
  return records;
}

void write_records(std::ostream& out, const std::vector<PublicationRecord>& records) {
  for (const auto& rec : records) {
    json obj = json::object();
    obj["pub_id"] = rec.pub_id;
    json authors = json::array();
    for (const auto& a : rec.authors) {
      if (a.ref_id.empty() && a.attrs.empty()) {
        authors.push_back(a.name);
      } else {
        json entry = {{"name", a.name}};
        if (!a.ref_id.empty()) entry["ref_id"] = a.ref_id;
        for (const auto& [k, v] : a.attrs) entry[k] = v;
        authors.push_back(std::move(entry));
      }
    }
    obj["authors"] = std::move(authors);
    for (const auto& [k, v] : rec.attrs) obj[k] = v;
    out << obj.dump() << '\n';
  }
}

Dataset ingest(std::istream& in) {
  return Dataset::from_records(read_records(in));
}

void write_snapshot(std::ostream& out, const Dataset& ds) {
  json refs = json::array();
  for (const auto& r : ds.refs()) {
    json edges = json::array();
    for (EdgeIdx e : r.hyperedges) edges.push_back(ds.edge(e).id);
    refs.push_back({{"id", r.id}, {"name", r.name}, {"attrs", r.attrs}, {"hyperedges", edges}});
  }
  json edges = json::array();
  for (const auto& e : ds.edges()) {
    json members = json::array();
    for (RefIdx r : e.refs) members.push_back(ds.ref(r).id);
    edges.push_back({{"id", e.id}, {"refs", members}, {"attrs", e.attrs}});
  }
  json doc = {{"format", "qter-dataset"},
              {"version", kSnapshotVersion},
              {"references", refs},
              {"hyperedges", edges}};
  out << doc.dump(1) << '\n';
}

Dataset read_snapshot(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed snapshot: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "qter-dataset") {
    throw DataError("not a dataset snapshot");
  }
  if (doc.value("version", 0) != kSnapshotVersion) {
    throw DataError("unsupported snapshot version " + doc.value("version", json(0)).dump());
  }
  try {
    std::unordered_map<std::string, RefIdx> ref_ids;
    std::unordered_map<std::string, EdgeIdx> edge_ids;
    const auto& jrefs = doc.at("references");
    const auto& jedges = doc.at("hyperedges");
    for (const auto& je : jedges) {
      edge_ids.emplace(je.at("id").get<std::string>(), static_cast<EdgeIdx>(edge_ids.size()));
    }
    std::vector<Reference> refs;
    for (const auto& jr : jrefs) {
      Reference ref;
      ref.id = jr.at("id").get<std::string>();
      ref.name = jr.at("name").get<std::string>();
      ref.attrs = jr.value("attrs", AttrMap{});
      for (const auto& eid : jr.at("hyperedges")) {
        auto it = edge_ids.find(eid.get<std::string>());
        if (it == edge_ids.end()) throw DataError("snapshot reference " + ref.id + " lists unknown hyper-edge");
        ref.hyperedges.push_back(it->second);
      }
      ref_ids.emplace(ref.id, static_cast<RefIdx>(refs.size()));
      refs.push_back(std::move(ref));
    }
    std::vector<HyperEdge> edges;
    for (const auto& je : jedges) {
      HyperEdge edge;
      edge.id = je.at("id").get<std::string>();
      edge.attrs = je.value("attrs", AttrMap{});
      for (const auto& rid : je.at("refs")) {
        auto it = ref_ids.find(rid.get<std::string>());
        if (it == ref_ids.end()) throw DataError("snapshot hyper-edge " + edge.id + " lists unknown reference");
        edge.refs.push_back(it->second);
      }
      edges.push_back(std::move(edge));
    }
    return Dataset::from_parts(std::move(refs), std::move(edges));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed snapshot: ") + e.what());
  }
}

GoldLabeling::GoldLabeling(std::vector<EntityIdx> entity_of, std::vector<std::string> entity_names)
    : entity_of_(std::move(entity_of)), entity_names_(std::move(entity_names)) {
  for (EntityIdx e : entity_of_) {
    if (e >= entity_names_.size()) throw DataError("gold labeling refers to an unknown entity");
  }
}

std::vector<std::vector<RefIdx>> GoldLabeling::groups() const {
  std::vector<std::vector<RefIdx>> out(entity_names_.size());
  for (RefIdx r = 0; r < entity_of_.size(); ++r) out[entity_of_[r]].push_back(r);
  return out;
}

GoldLabeling read_gold(std::istream& in, const Dataset& ds) {
  constexpr EntityIdx kUnset = ~EntityIdx{0};
  std::vector<EntityIdx> entity_of(ds.num_refs(), kUnset);
  std::vector<std::string> names;
  std::unordered_map<std::string, EntityIdx> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line) || line.find_first_not_of(" \t") == line.find('#')) continue;
    std::istringstream fields(line);
    std::string ref_id, entity_id, extra;
    if (!(fields >> ref_id >> entity_id) || (fields >> extra)) {
      throw DataError("gold line " + std::to_string(line_no) + ": expected `ref_id entity_id`");
    }
    auto r = ds.find_ref(ref_id);
    if (!r) throw DataError("gold line " + std::to_string(line_no) + ": unknown reference " + ref_id);
    if (entity_of[*r] != kUnset) {
      throw DataError("gold line " + std::to_string(line_no) + ": reference " + ref_id + " labeled twice");
    }
    auto [it, inserted] = ids.emplace(entity_id, static_cast<EntityIdx>(names.size()));
    if (inserted) names.push_back(entity_id);
    entity_of[*r] = it->second;
  }
  for (RefIdx r = 0; r < entity_of.size(); ++r) {
    if (entity_of[r] == kUnset) throw DataError("gold labeling misses reference " + ds.ref(r).id);
  }
  return GoldLabeling(std::move(entity_of), std::move(names));
}

void write_gold(std::ostream& out, const Dataset& ds, const GoldLabeling& gold) {
  for (RefIdx r = 0; r < ds.num_refs(); ++r) {
    out << ds.ref(r).id << ' ' << gold.entity_name(gold.entity(r)) << '\n';
  }
}

}  // namespace qter
