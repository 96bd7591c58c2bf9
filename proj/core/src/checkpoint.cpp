#include "tdb/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "tdb/error.hpp"

namespace tdb {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'T', 'D', 'B', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

class HashingWriter {
 public:
  explicit HashingWriter(std::ostream& out) : out_(out) {}

  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) hash_ = (hash_ ^ p[i]) * kFnvPrime;
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  template <typename T>
  void pod(T v) {
    bytes(&v, sizeof v);
  }
  void reals(std::span<const double> v) { bytes(v.data(), v.size_bytes()); }
  std::uint64_t hash() const { return hash_; }

 private:
  std::ostream& out_;
  std::uint64_t hash_ = kFnvOffset;
};

class HashingReader {
 public:
  explicit HashingReader(std::istream& in) : in_(in) {}

  void bytes(void* data, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw ParseError(std::string("checkpoint truncated while reading ") + what);
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) hash_ = (hash_ ^ p[i]) * kFnvPrime;
  }
  template <typename T>
  T pod(const char* what) {
    T v{};
    bytes(&v, sizeof v, what);
    return v;
  }
  void reals(std::span<double> v, const char* what) { bytes(v.data(), v.size_bytes(), what); }
  std::uint64_t hash() const { return hash_; }

 private:
  std::istream& in_;
  std::uint64_t hash_ = kFnvOffset;
};

void check_count(std::uint64_t n, const char* what) {
  if (n > kMaxElements) throw ParseError(std::string("implausible ") + what + " in checkpoint");
}

}  // namespace

void write_checkpoint(std::ostream& out, const TdbModel& model) {
  HashingWriter w(out);
  w.bytes(kMagic.data(), kMagic.size());
  w.pod<std::uint32_t>(kCheckpointVersion);
  const std::string& name = model.preset();
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  w.bytes(name.data(), name.size());
  w.pod<std::uint64_t>(model.parts());
  w.pod<std::uint64_t>(model.blocks());
  std::uint8_t flags = 0;
  if (model.tied()) flags |= 1u;
  if (model.core().trainable) flags |= 2u;
  w.pod(flags);
  w.pod<std::uint64_t>(model.num_heads());
  w.pod<std::uint64_t>(model.num_relations());
  w.pod<std::uint64_t>(model.num_tails());
  w.reals(model.core().values.values());
  w.reals(model.head().values());
  w.reals(model.rel().values());
  if (!model.tied()) w.reals(model.tail().values());
  const std::uint64_t checksum = w.hash();
  out.write(reinterpret_cast<const char*>(&checksum), sizeof checksum);
  if (!out) throw IoError("failed writing checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const TdbModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, model);
}

TdbModel read_checkpoint(std::istream& in) {
  HashingReader r(in);
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw ParseError("not a tdb checkpoint (bad magic)");
  const auto version = r.pod<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  const auto name_len = r.pod<std::uint32_t>("name length");
  if (name_len > 256) throw ParseError("implausible preset name length in checkpoint");
  std::string name(name_len, '\0');
  r.bytes(name.data(), name_len, "preset name");
  const auto parts = r.pod<std::uint64_t>("parts");
  const auto blocks = r.pod<std::uint64_t>("blocks");
  const auto flags = r.pod<std::uint8_t>("flags");
  if (flags & ~3u) throw ParseError("unknown checkpoint flags");
  const auto heads = r.pod<std::uint64_t>("head count");
  const auto relations = r.pod<std::uint64_t>("relation count");
  const auto tails = r.pod<std::uint64_t>("tail count");
  const bool tied = flags & 1u;
  if (parts == 0 || blocks == 0) throw ParseError("checkpoint has zero parts or blocks");
  check_count(parts * parts * parts, "core size");
  check_count(heads * blocks * parts, "head table size");
  check_count(relations * blocks * parts, "relation table size");
  check_count(tails * blocks * parts, "tail table size");
  if (tied && heads != tails) throw ParseError("tied checkpoint with differing head/tail counts");

  CoreTensor core;
  core.parts = parts;
  core.trainable = flags & 2u;
  core.values = DenseTensor3({parts, parts, parts});
  r.reals(core.values.values(), "core");
  EmbeddingTable head(heads, blocks, parts);
  r.reals(head.values(), "head table");
  EmbeddingTable rel(relations, blocks, parts);
  r.reals(rel.values(), "relation table");
  EmbeddingTable tail;
  if (!tied) {
    tail = EmbeddingTable(tails, blocks, parts);
    r.reals(tail.values(), "tail table");
  }
  const std::uint64_t computed = r.hash();
  std::uint64_t stored = 0;
  in.read(reinterpret_cast<char*>(&stored), sizeof stored);
  if (in.gcount() != sizeof stored) throw ParseError("checkpoint truncated before checksum");
  if (stored != computed) throw IntegrityError("checkpoint checksum mismatch (file corrupted or modified)");
  if (in.peek() != std::char_traits<char>::eof())
    throw IntegrityError("checkpoint has trailing bytes after checksum");

  if (tied) return TdbModel(std::move(name), std::move(core), std::move(head), std::move(rel));
  return TdbModel(std::move(name), std::move(core), std::move(head), std::move(rel),
                  std::move(tail));
}

TdbModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace tdb
