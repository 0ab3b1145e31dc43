#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "dmca/error.hpp"
#include "dmca/params.hpp"

namespace dmca {
namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "dmca_test_checkpoint";
  std::filesystem::create_directories(dir);
  return dir / name;
}

TEST(Checkpoint, BitExactRoundTrip) {
  ParamStore store;
  CounterRng rng(3);
  store.add_uniform("gat.0.W", {9, 64}, 9, rng);
  store.add_constant("gat.0.gain", {64}, 1.0);
  store.add("odd", Tensor({3}, {0.1, -0.0, 1e-300}, true));
  const auto path = temp_file("roundtrip.ckpt");
  write_checkpoint(path, snapshot(store));
  const auto back = read_checkpoint(path);
  const auto orig = snapshot(store);
  ASSERT_EQ(back.size(), orig.size());
  for (std::size_t k = 0; k < orig.size(); ++k) {
    EXPECT_EQ(back[k].name, orig[k].name);
    EXPECT_EQ(back[k].shape, orig[k].shape);
    ASSERT_EQ(back[k].values.size(), orig[k].values.size());
    EXPECT_EQ(std::memcmp(back[k].values.data(), orig[k].values.data(), orig[k].values.size() * sizeof(double)), 0);
  }
}

TEST(Checkpoint, HeaderIsReadableText) {
  ParamStore store;
  store.add_constant("a.b", {2, 3}, 0.5);
  const auto path = temp_file("header.ckpt");
  write_checkpoint(path, snapshot(store));
  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "DMCA-CHECKPOINT 1");
  std::getline(in, line);
  EXPECT_EQ(line, "dtype float64");
}

TEST(Checkpoint, RestoreIntoFreshStore) {
  ParamStore a, b;
  CounterRng r1(1), r2(2);
  a.add_uniform("w", {4, 4}, 4, r1);
  b.add_uniform("w", {4, 4}, 4, r2);
  restore(b, snapshot(a));
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(b.get("w")[i], a.get("w")[i]);
}

TEST(Checkpoint, RestoreShapeMismatchAndMissing) {
  ParamStore a, b, c;
  a.add_constant("w", {2, 2}, 1.0);
  b.add_constant("w", {4}, 1.0);
  c.add_constant("v", {2, 2}, 1.0);
  EXPECT_THROW(restore(b, snapshot(a)), Error);
  EXPECT_THROW(restore(c, snapshot(a)), Error);
}

TEST(Checkpoint, RejectsForeignFiles) {
  const auto path = temp_file("garbage.ckpt");
  std::ofstream(path) << "hello\n";
  EXPECT_THROW(read_checkpoint(path), DataError);
  EXPECT_THROW(read_checkpoint(temp_file("missing.ckpt")), DataError);
}

TEST(ParamStore, NamesAreUniqueAndCounted) {
  ParamStore s;
  s.add_constant("x.a", {2, 3}, 0.0);
  s.add_constant("y.b", {4}, 0.0);
  EXPECT_THROW(s.add_constant("x.a", {1}, 0.0), ConfigError);
  EXPECT_EQ(s.parameter_count(), 10u);
  EXPECT_EQ(s.parameter_count("x."), 6u);
}

}  // namespace
}  // namespace dmca
