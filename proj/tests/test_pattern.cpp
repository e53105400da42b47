#include <gtest/gtest.h>

#include "toxlex/pattern.hpp"

using namespace toxlex;

TEST(Pattern, Phrase) {
  const Pattern p = parse_pattern("blood libel");
  EXPECT_EQ(p.kind, PatternKind::kPhrase);
  ASSERT_EQ(p.left.size(), 2u);
  EXPECT_EQ(p.left[0], Slot{"blood"});
  EXPECT_EQ(p.left[1], Slot{"libel"});
  EXPECT_TRUE(p.right.empty());
}

TEST(Pattern, ComboWithDefaultWindow) {
  const Pattern p = parse_pattern("gas/kill + jews");
  EXPECT_EQ(p.kind, PatternKind::kCombo);
  ASSERT_EQ(p.left.size(), 1u);
  EXPECT_EQ(p.left[0], (Slot{"gas", "kill"}));
  ASSERT_EQ(p.right.size(), 1u);
  EXPECT_EQ(p.right[0], Slot{"jews"});
  EXPECT_EQ(p.window, 3);
}

TEST(Pattern, SpacedAlternation) {
  const Pattern p = parse_pattern("filthy / degenerate + Jew / Jewish");
  EXPECT_EQ(p.left[0], (Slot{"degenerate", "filthy"}));
  EXPECT_EQ(p.right[0], (Slot{"jew", "jewish"}));
  EXPECT_EQ(p.canonical(), "degenerate/filthy + jew/jewish");
}

TEST(Pattern, WindowOverride) {
  const Pattern p = parse_pattern("gas + jews ~5");
  EXPECT_EQ(p.window, 5);
  EXPECT_EQ(p.canonical(), "gas + jews ~5");
  EXPECT_EQ(parse_pattern("gas + jews~1").window, 1);
  EXPECT_EQ(parse_pattern("gas + jews ~10").window, 10);
}

TEST(Pattern, WordsAreNormalized) {
  const Pattern p = parse_pattern("LÜGENPRESSE");
  EXPECT_EQ(p.left[0], Slot{"lugenpresse"});
  EXPECT_EQ(parse_pattern("bagel-eating").left.size(), 2u);
}

TEST(Pattern, CanonicalIsStable) {
  EXPECT_EQ(parse_pattern("kill/gas +  jews").canonical(), parse_pattern("gas/kill + JEWS").canonical());
  EXPECT_EQ(parse_pattern(parse_pattern("a/b c + d ~7").canonical()), parse_pattern("a/b c + d ~7"));
}

TEST(Pattern, Errors) {
  EXPECT_THROW(parse_pattern("a + b + c"), SyntaxError);
  EXPECT_THROW(parse_pattern(""), SyntaxError);
  EXPECT_THROW(parse_pattern("   "), SyntaxError);
  EXPECT_THROW(parse_pattern("a + "), SyntaxError);
  EXPECT_THROW(parse_pattern(" + b"), SyntaxError);
  EXPECT_THROW(parse_pattern("a//b"), SyntaxError);
  EXPECT_THROW(parse_pattern("a/ + b"), SyntaxError);
  EXPECT_THROW(parse_pattern("!!!"), SyntaxError);
  EXPECT_THROW(parse_pattern("a + b ~0"), RangeError);
  EXPECT_THROW(parse_pattern("a + b ~11"), RangeError);
  EXPECT_THROW(parse_pattern("a + b ~x"), SyntaxError);
  EXPECT_THROW(parse_pattern("a b ~2"), SyntaxError);
  EXPECT_THROW(parse_pattern("bagel-eating/jew"), SyntaxError);
}
