#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "tdb/dataset.hpp"
#include "tdb/error.hpp"

using namespace tdb;

namespace {

std::filesystem::path kinship_dir() { return std::filesystem::path(TDB_DATA_DIR) / "kinship"; }

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tdb_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++n;
  return n;
}

}  // namespace

TEST(Parse, VocabFollowsFirstAppearance) {
  const auto ds = parse_dataset("x\tp\ty\ny\tq\tz\n", "z\tp\tx\n", "w\tq\tx\n");
  EXPECT_EQ(ds.entities.names(), (std::vector<std::string>{"x", "y", "z", "w"}));
  EXPECT_EQ(ds.relations.names(), (std::vector<std::string>{"p", "q"}));
  EXPECT_EQ(ds.train[1], (Triplet{1, 1, 2}));
  EXPECT_EQ(ds.test[0], (Triplet{3, 1, 0}));
  EXPECT_EQ(ds.entities.id("z"), 2u);
  EXPECT_THROW(ds.entities.id("nope"), ConfigError);
}

TEST(Parse, ToleratesCrlfAndBlankLines) {
  const auto ds = parse_dataset("a\tr\tb\r\n\nb\tr\tc\n", "", "");
  EXPECT_EQ(ds.train.size(), 2u);
  EXPECT_EQ(ds.entities.size(), 3u);
}

TEST(Parse, MalformedLineReportsLineNumber) {
  try {
    parse_dataset("a\tr\tb\nb\tr\n", "", "", "train.txt");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("train.txt:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_dataset("a\tr\tb\tc\n", "", ""), ParseError);
  EXPECT_THROW(parse_dataset("a\t\tb\n", "", ""), ParseError);
}

TEST(Parse, EmptyTrainingSplit) {
  try {
    parse_dataset("", "a\tr\tb\n", "");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("empty training split"), std::string::npos);
  }
}

TEST(Filter, DuplicatesKeptInSplitsButNotInFilter) {
  const auto ds = parse_dataset("a\tr\tb\na\tr\tb\na\tr\tc\n", "a\tr\tb\n", "b\tr\ta\n");
  EXPECT_EQ(ds.train.size(), 3u);
  EXPECT_EQ(ds.filter.num_entries(), 3u);
  EXPECT_EQ(ds.filter.num_keys(), 2u);
  const auto tails = ds.filter.tails(0, 0);
  EXPECT_EQ(std::vector<std::size_t>(tails.begin(), tails.end()), (std::vector<std::size_t>{1, 2}));
  EXPECT_TRUE(ds.filter.tails(2, 0).empty());
  EXPECT_TRUE(ds.filter.contains({1, 0, 0}));
  EXPECT_FALSE(ds.filter.contains({1, 0, 2}));
}

TEST(Load, MissingDirectoryAndFile) {
  EXPECT_THROW(load_dataset("/nonexistent/dataset"), IoError);
  const auto dir = scratch_dir("missing_file");
  write_file(dir / "train.txt", "a\tr\tb\n");
  write_file(dir / "valid.txt", "");
  EXPECT_THROW(load_dataset(dir), IoError);
  std::filesystem::remove_all(dir);
}

TEST(Load, RoundTripThroughFiles) {
  const auto ds = parse_dataset("a\tr\tb\nb\ts\tc\n", "c\tr\ta\n", "a\ts\tc\n");
  const auto dir = scratch_dir("round_trip");
  for (Split s : {Split::train, Split::valid, Split::test}) {
    std::ofstream out(dir / (std::string(split_name(s)) + ".txt"));
    for (const auto& x : ds.split(s)) out << format_triplet(ds, x) << "\n";
  }
  const auto back = load_dataset(dir);
  EXPECT_EQ(back.train, ds.train);
  EXPECT_EQ(back.valid, ds.valid);
  EXPECT_EQ(back.test, ds.test);
  EXPECT_EQ(back.entities.names(), ds.entities.names());
  std::filesystem::remove_all(dir);
}

TEST(Inverse, AugmentsEverySplit) {
  const auto ds = parse_dataset("a\tr\tb\nb\ts\tc\n", "c\tr\ta\n", "a\ts\tc\n");
  const auto aug = with_inverse_relations(ds);
  EXPECT_TRUE(aug.inverse_augmented);
  EXPECT_EQ(aug.relations.size(), 4u);
  EXPECT_EQ(aug.relations.name(2), "r_inverse");
  EXPECT_EQ(aug.train.size(), 4u);
  EXPECT_EQ(aug.valid.size(), 2u);
  EXPECT_EQ(aug.test.size(), 2u);
  EXPECT_TRUE(aug.filter.contains({1, 2, 0}));
  EXPECT_TRUE(aug.filter.contains({2, 3, 0}));
}

TEST(Vocab, WritesDictionaries) {
  const auto ds = parse_dataset("a\tr\tb\n", "", "");
  const auto dir = scratch_dir("vocab");
  write_vocab(ds, dir);
  std::ifstream in(dir / "entities.dict");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "0\ta\n1\tb\n");
  std::filesystem::remove_all(dir);
}

TEST(Kinship, BundledFilesLoad) {
  const auto ds = load_dataset(kinship_dir());
  EXPECT_EQ(ds.entities.size(), 104u);
  EXPECT_EQ(ds.relations.size(), 25u);
  EXPECT_EQ(ds.train.size(), count_lines(kinship_dir() / "train.txt"));
  EXPECT_EQ(ds.valid.size(), count_lines(kinship_dir() / "valid.txt"));
  EXPECT_EQ(ds.test.size(), count_lines(kinship_dir() / "test.txt"));
  EXPECT_EQ(ds.train.size() + ds.valid.size() + ds.test.size(), 10686u);
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> distinct;
  for (Split s : {Split::train, Split::valid, Split::test})
    for (const auto& x : ds.split(s)) distinct.insert({x.head, x.rel, x.tail});
  EXPECT_EQ(ds.filter.num_entries(), distinct.size());
}

TEST(Kinship, LoadIsDeterministic) {
  const auto a = load_dataset(kinship_dir());
  const auto b = load_dataset(kinship_dir());
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.entities.names(), b.entities.names());
}
