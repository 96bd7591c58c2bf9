#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tdb/model.hpp"

namespace tdb {

// Name <-> id map; ids follow first appearance.
class Vocab {
 public:
  std::size_t intern(std::string_view name);
  // Throws ConfigError for unknown names.
  std::size_t id(std::string_view name) const;
  bool contains(std::string_view name) const;
  const std::string& name(std::size_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> ids_;
};

// (head, relation) -> sorted, duplicate-free known tails.
class FilterIndex {
 public:
  void add(const Triplet& x);
  // Sorts and deduplicates every key's tails; call after the last add().
  void finalize();

  std::span<const std::size_t> tails(std::size_t head, std::size_t rel) const;
  bool contains(const Triplet& x) const;
  std::size_t num_keys() const { return map_.size(); }
  // Sum of set sizes over all keys.
  std::size_t num_entries() const;

 private:
  static std::uint64_t key(std::size_t head, std::size_t rel) {
    return (static_cast<std::uint64_t>(head) << 32) | static_cast<std::uint64_t>(rel);
  }
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> map_;
};

enum class Split { train, valid, test };
std::string_view split_name(Split s);
Split split_from_name(std::string_view name);

struct Dataset {
  Vocab entities;
  Vocab relations;
  std::vector<Triplet> train;
  std::vector<Triplet> valid;
  std::vector<Triplet> test;
  FilterIndex filter;
  bool inverse_augmented = false;

  const std::vector<Triplet>& split(Split s) const;
};

// Reads train.txt, valid.txt and test.txt (head<TAB>relation<TAB>tail per line).
Dataset load_dataset(const std::filesystem::path& dir);
// Same parser over in-memory split contents; `origin` prefixes error messages.
Dataset parse_dataset(std::string_view train, std::string_view valid, std::string_view test,
                      std::string_view origin = "<memory>");

FilterIndex build_filter_index(const Dataset& ds);

// Adds relation r' = r + |R| named "<r>_inverse" and (t, r', h) for every triplet in every split.
Dataset with_inverse_relations(const Dataset& ds);

// Writes entities.dict and relations.dict as "id<TAB>name" lines.
void write_vocab(const Dataset& ds, const std::filesystem::path& dir);

// "head<TAB>relation<TAB>tail" using vocab names.
std::string format_triplet(const Dataset& ds, const Triplet& x);

}  // namespace tdb
