#pragma once

// Shared fixtures: the demo lexicon and a seeded corpus whose aggregate
// numbers are known in advance.

#include <algorithm>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "toxlex/toxlex.hpp"

namespace fixtures {

using namespace toxlex;

inline std::string data_path(const std::string& name) { return std::string(TOXLEX_DATA_DIR) + "/" + name; }

inline Lexicon demo_lexicon() {
  std::ifstream in(data_path("demo_lexicon.tsv"));
  return parse_lexicon(in);
}

inline std::vector<std::string> keywords() {
  std::ifstream in(data_path("keywords.txt"));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

// 1000 messages against the demo lexicon:
//   50 score 100 and are violent, 50 more score 100 without KILL,
//   900 are clean, and "kikes" occurs 500 times, all in the flagged ones.
// Expected: mean toxicity 10.0, 10.0% anti-Semitic, 5.0% violent.
inline std::vector<std::string> seeded_texts(std::uint64_t seed = 7) {
  static const std::vector<std::string> clean = {
      "the weather is lovely today",      "did anyone watch the match last night",
      "new recipe for apple pie",         "traffic on the bridge again",
      "happy birthday to my sister",      "the library opens at nine",
      "this thread is about gardening",   "selling a used bicycle, barely ridden"};
  std::vector<std::string> out;
  for (int i = 0; i < 50; ++i) out.push_back("gas the jews kikes kikes kikes kikes kikes");
  for (int i = 0; i < 50; ++i) out.push_back("the holohoax kikes kikes kikes kikes kikes");
  std::mt19937_64 rng(seed);
  for (int i = 0; i < 900; ++i) out.push_back(clean[rng() % clean.size()] + " #" + std::to_string(i));
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

inline std::vector<Message> as_messages(const std::vector<std::string>& texts) {
  std::vector<Message> out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Message m;
    m.id = std::to_string(i);
    m.text = texts[i];
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace fixtures
