#include <gtest/gtest.h>

#include <sstream>

#include "latentpass/leak_io.hpp"

using namespace latentpass;

TEST(LeakIo, CountsMergesAndSkips) {
  std::istringstream in("abc\n3\tabc\nxyz\r\n\ntoolongpassword\n\xC3\n12\t\n");
  LeakReadOptions opt;
  opt.max_len = 6;
  LeakReadStats st;
  const LeakDataset d = read_leak(in, opt, &st);
  EXPECT_EQ(st.lines, 7u);
  EXPECT_EQ(st.accepted, 3u);
  EXPECT_EQ(st.skipped_empty, 1u);
  EXPECT_EQ(st.skipped_over_length, 1u);
  EXPECT_EQ(st.skipped_malformed, 2u);
  ASSERT_EQ(d.unique_count(), 2u);
  EXPECT_EQ(d.entries[0].password, U"abc");
  EXPECT_EQ(d.entries[0].count, 4u);
  EXPECT_EQ(d.total_count(), 5u);
  EXPECT_EQ(d.expanded().size(), 5u);
  EXPECT_EQ(d.alphabet.symbols(), U"abcxyz");
}

TEST(LeakIo, FixedAlphabetSkipsForeignSymbols) {
  std::istringstream in("ab\naz\n");
  LeakReadOptions opt;
  opt.alphabet = Alphabet(U"ab");
  LeakReadStats st;
  const LeakDataset d = read_leak(in, opt, &st);
  EXPECT_EQ(d.unique_count(), 1u);
  EXPECT_EQ(st.skipped_alphabet, 1u);
}

TEST(LeakIo, NonNumericPrefixIsPartOfPassword) {
  std::istringstream in("x\tab\n");
  const LeakDataset d = read_leak(in, LeakReadOptions{});
  ASSERT_EQ(d.unique_count(), 1u);
  EXPECT_EQ(d.entries[0].password, U"x\tab");
}

TEST(LeakIo, WriteReadRoundTrip) {
  const LeakDataset d = make_dataset({U"aa", U"b", U"aa"}, Alphabet(U"ab"), 4);
  std::ostringstream out;
  write_leak(out, d);
  EXPECT_EQ(out.str(), "2\taa\n1\tb\n");
  std::istringstream in(out.str());
  const LeakDataset back = read_leak(in, LeakReadOptions{});
  ASSERT_EQ(back.unique_count(), 2u);
  EXPECT_EQ(back.entries[0].count, 2u);
  EXPECT_THROW(make_dataset({U"abc"}, Alphabet(U"ab"), 4), Error);
}

TEST(LeakIo, MissingFileThrows) {
  EXPECT_THROW(read_leak_file("/nonexistent/leak.txt", LeakReadOptions{}), Error);
}
