#pragma once

// Reference/hyper-edge data model and the immutable lookup index built over it.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qter {

using RefIdx = std::uint32_t;
using EdgeIdx = std::uint32_t;
using NameId = std::uint32_t;
using EntityIdx = std::uint32_t;
using AttrMap = std::map<std::string, std::string>;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Whole-string real number, or nullopt.
std::optional<double> parse_real(std::string_view text);

struct Reference {
  std::string id;
  std::string name;        // as observed
  std::string normalized;  // normalize_name(name)
  NameId name_id = 0;
  AttrMap attrs;
  std::vector<EdgeIdx> hyperedges;
};

struct HyperEdge {
  std::string id;
  std::vector<RefIdx> refs;
  AttrMap attrs;
};

// One input line: a publication and its ordered author list.
struct AuthorEntry {
  std::string name;
  std::string ref_id;  // optional; generated as r<N> when empty
  AttrMap attrs;
};

struct PublicationRecord {
  std::string pub_id;
  std::vector<AuthorEntry> authors;
  AttrMap attrs;  // keywords, affiliation, title, ...
};

class Dataset {
 public:
  Dataset() = default;

  // Validates id uniqueness and reference/hyper-edge back-links, then builds
  // the name, block and numeric indexes.
  static Dataset from_parts(std::vector<Reference> refs, std::vector<HyperEdge> edges);
  static Dataset from_records(const std::vector<PublicationRecord>& records);

  std::size_t num_refs() const { return refs_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Reference>& refs() const { return refs_; }
  const std::vector<HyperEdge>& edges() const { return edges_; }
  const Reference& ref(RefIdx r) const { return refs_.at(r); }
  const HyperEdge& edge(EdgeIdx e) const { return edges_.at(e); }

  std::optional<RefIdx> find_ref(std::string_view id) const;
  std::optional<EdgeIdx> find_edge(std::string_view id) const;
  RefIdx require_ref(std::string_view id) const;

  // Distinct normalized names, indexed by NameId.
  const std::vector<std::string>& names() const { return names_; }
  std::optional<NameId> find_name(std::string_view normalized) const;
  std::span<const RefIdx> refs_with_name(NameId id) const { return name_refs_.at(id); }
  std::span<const RefIdx> block(std::string_view key) const;
  const std::unordered_map<std::string, std::vector<RefIdx>>& blocks() const { return block_index_; }

  // References whose normalized name equals normalize_name(name).
  std::vector<RefIdx> lookup_name(std::string_view name) const;

  // References sharing a hyper-edge with r, excluding r; sorted.
  std::vector<RefIdx> cooccurring(RefIdx r) const;

  // Names that parse completely as a real number (synthetic data).
  std::optional<double> numeric_value(RefIdx r) const {
    return numeric_[r];
  }
  // (value, ref) sorted by value; covers only numeric names.
  const std::vector<std::pair<double, RefIdx>>& numeric_index() const { return numeric_index_; }

 private:
  void build_indexes();

  std::vector<Reference> refs_;
  std::vector<HyperEdge> edges_;
  std::unordered_map<std::string, RefIdx> ref_by_id_;
  std::unordered_map<std::string, EdgeIdx> edge_by_id_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, NameId> name_ids_;
  std::vector<std::vector<RefIdx>> name_refs_;
  std::unordered_map<std::string, std::vector<RefIdx>> block_index_;
  std::vector<std::optional<double>> numeric_;
  std::vector<std::pair<double, RefIdx>> numeric_index_;
};

// Newline-delimited JSON records:
//   {"pub_id": "p1", "authors": ["W. Wang", {"name": "C. Chen", "ref_id": "r2"}],
//    "keywords": "...", "affiliation": "..."}
// Blank lines and lines starting with '#' are skipped.
std::vector<PublicationRecord> read_records(std::istream& in);
void write_records(std::ostream& out, const std::vector<PublicationRecord>& records);
Dataset ingest(std::istream& in);

// Versioned JSON snapshot of a built dataset.
inline constexpr int kSnapshotVersion = 1;
void write_snapshot(std::ostream& out, const Dataset& ds);
Dataset read_snapshot(std::istream& in);

// E(r): entity label per reference.
class GoldLabeling {
 public:
  GoldLabeling() = default;
  GoldLabeling(std::vector<EntityIdx> entity_of, std::vector<std::string> entity_names);

  EntityIdx entity(RefIdx r) const { return entity_of_.at(r); }
  std::size_t num_refs() const { return entity_of_.size(); }
  std::size_t num_entities() const { return entity_names_.size(); }
  const std::string& entity_name(EntityIdx e) const { return entity_names_.at(e); }
  const std::vector<EntityIdx>& assignments() const { return entity_of_; }
  // References grouped by entity.
  std::vector<std::vector<RefIdx>> groups() const;

 private:
  std::vector<EntityIdx> entity_of_;
  std::vector<std::string> entity_names_;
};

// Two whitespace-separated columns per line: `ref_id entity_id`. Must label
// every reference of ds exactly once.
GoldLabeling read_gold(std::istream& in, const Dataset& ds);
void write_gold(std::ostream& out, const Dataset& ds, const GoldLabeling& gold);

struct Query {
  std::string attribute = "Name";
  std::string value;
};

}  // namespace qter
