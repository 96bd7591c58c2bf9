#include "tdb/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tdb/error.hpp"

namespace tdb {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\v\f";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void parse_split(std::string_view text, const std::string& origin, Dataset& ds,
                 std::vector<Triplet>& out) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;

    std::string_view fields[3];
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      const auto field = line.substr(start, tab == std::string_view::npos ? line.npos : tab - start);
      if (count < 3) fields[count] = trim(field);
      ++count;
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (count != 3)
      throw ParseError(origin + ":" + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                       std::to_string(count));
    for (const auto& f : fields)
      if (f.empty()) throw ParseError(origin + ":" + std::to_string(line_no) + ": empty field");
    const std::size_t h = ds.entities.intern(fields[0]);
    const std::size_t r = ds.relations.intern(fields[1]);
    const std::size_t t = ds.entities.intern(fields[2]);
    out.push_back({h, r, t});
  }
}

}  // namespace

std::size_t Vocab::intern(std::string_view name) {
  const std::string key(name);
  const auto it = ids_.find(key);
  if (it != ids_.end()) return it->second;
  const std::size_t id = names_.size();
  names_.push_back(key);
  ids_.emplace(key, id);
  return id;
}

std::size_t Vocab::id(std::string_view name) const {
  const auto it = ids_.find(std::string(name));
  if (it == ids_.end()) throw ConfigError("unknown name '" + std::string(name) + "'");
  return it->second;
}

bool Vocab::contains(std::string_view name) const { return ids_.count(std::string(name)) != 0; }

void FilterIndex::add(const Triplet& x) { map_[key(x.head, x.rel)].push_back(x.tail); }

void FilterIndex::finalize() {
  for (auto& [k, v] : map_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
}

std::span<const std::size_t> FilterIndex::tails(std::size_t head, std::size_t rel) const {
  const auto it = map_.find(key(head, rel));
  if (it == map_.end()) return {};
  return it->second;
}

bool FilterIndex::contains(const Triplet& x) const {
  const auto t = tails(x.head, x.rel);
  return std::binary_search(t.begin(), t.end(), x.tail);
}

std::size_t FilterIndex::num_entries() const {
  std::size_t n = 0;
  for (const auto& [k, v] : map_) n += v.size();
  return n;
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::valid:
      return "valid";
    case Split::test:
      return "test";
  }
  return "test";
}

Split split_from_name(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "valid") return Split::valid;
  if (name == "test") return Split::test;
  throw ConfigError("unknown split '" + std::string(name) + "' (expected train, valid or test)");
}

const std::vector<Triplet>& Dataset::split(Split s) const {
  switch (s) {
    case Split::train:
      return train;
    case Split::valid:
      return valid;
    case Split::test:
      return test;
  }
  return test;
}

Dataset parse_dataset(std::string_view train, std::string_view valid, std::string_view test,
                      std::string_view origin) {
  Dataset ds;
  const std::string o(origin);
  parse_split(train, o + "/train.txt", ds, ds.train);
  parse_split(valid, o + "/valid.txt", ds, ds.valid);
  parse_split(test, o + "/test.txt", ds, ds.test);
  if (ds.train.empty()) throw ParseError(o + ": empty training split");
  if (ds.entities.size() >= (std::size_t{1} << 32) || ds.relations.size() >= (std::size_t{1} << 32))
    throw ParseError(o + ": vocabulary too large");
  ds.filter = build_filter_index(ds);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("dataset directory '" + dir.string() + "' does not exist");
  for (const char* f : {"train.txt", "valid.txt", "test.txt"})
    if (!std::filesystem::exists(dir / f))
      throw IoError("dataset file '" + (dir / f).string() + "' is missing");
  return parse_dataset(read_file(dir / "train.txt"), read_file(dir / "valid.txt"),
                       read_file(dir / "test.txt"), dir.string());
}

FilterIndex build_filter_index(const Dataset& ds) {
  FilterIndex idx;
  for (const auto* split : {&ds.train, &ds.valid, &ds.test})
    for (const auto& x : *split) idx.add(x);
  idx.finalize();
  return idx;
}

Dataset with_inverse_relations(const Dataset& ds) {
  if (ds.inverse_augmented) return ds;
  Dataset out;
  out.entities = ds.entities;
  out.relations = ds.relations;
  const std::size_t nr = ds.relations.size();
  for (std::size_t r = 0; r < nr; ++r) out.relations.intern(ds.relations.name(r) + "_inverse");
  auto augment = [nr](const std::vector<Triplet>& in) {
    std::vector<Triplet> v;
    v.reserve(in.size() * 2);
    for (const auto& x : in) v.push_back(x);
    for (const auto& x : in) v.push_back({x.tail, x.rel + nr, x.head});
    return v;
  };
  out.train = augment(ds.train);
  out.valid = augment(ds.valid);
  out.test = augment(ds.test);
  out.inverse_augmented = true;
  out.filter = build_filter_index(out);
  return out;
}

void write_vocab(const Dataset& ds, const std::filesystem::path& dir) {
  auto dump = [](const Vocab& v, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (std::size_t i = 0; i < v.size(); ++i) out << i << '\t' << v.name(i) << '\n';
  };
  dump(ds.entities, dir / "entities.dict");
  dump(ds.relations, dir / "relations.dict");
}

std::string format_triplet(const Dataset& ds, const Triplet& x) {
  return ds.entities.name(x.head) + '\t' + ds.relations.name(x.rel) + '\t' +
         ds.entities.name(x.tail);
}

}  // namespace tdb
