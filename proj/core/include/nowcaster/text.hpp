#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace nowcaster {

struct TimeBinnedCorpus;

// A token is a lowercase word: letters, digits and intra-word apostrophes.
using Token = std::string;

struct NGram {
  std::vector<Token> tokens;

  size_t arity() const { return tokens.size(); }
  // canonical text form: tokens joined by a single space ("pour rain")
  std::string text() const;
  // CSV-header form: tokens joined by '|' ("pour|rain")
  std::string csv_label() const;

  bool operator==(const NGram& other) const = default;
  auto operator<=>(const NGram& other) const = default;
};

enum class FeatureClass { U, B, UB };

// Ordered candidate-feature list; entries are unique and sorted so that
// feature indices are stable across runs.
struct FeatureVocabulary {
  std::vector<NGram> entries;
  FeatureClass feature_class = FeatureClass::U;
  bool stemmed = true;

  size_t size() const { return entries.size(); }
  // -1 when absent
  long index_of(const std::string& text_form) const;
  void rebuild_index();

 private:
  std::unordered_map<std::string, size_t> index_;
};

// Lowercases and splits on anything that is not a letter, digit or an
// apostrophe between two word characters. Multi-byte UTF-8 sequences other
// than the typographic apostrophe act as separators.
std::vector<Token> tokenize(std::string_view text);

// Original Porter (1980) suffix-stripping stem.
Token porter_stem(const Token& word);

std::unordered_set<Token> load_stoplist(const std::string& path);

std::vector<Token> remove_stop_words(std::span<const Token> tokens,
                                     const std::unordered_set<Token>& stoplist);

// All contiguous n-grams in order; n must be 1 or 2.
std::vector<NGram> extract_ngrams(std::span<const Token> tokens, int n);

// Full preprocessing used before any scoring: tokenize, drop stop words on
// the surface form, then stem. Stop-word removal happens first so 2-grams
// never straddle a removed stop word.
std::vector<Token> preprocess_text(std::string_view text,
                                   const std::unordered_set<Token>& stoplist,
                                   bool stem = true);

// Unique stemmed, stop-word-filtered n-grams from the reference documents,
// keeping those whose total raw count in the corpus exceeds min_count.
// Entries come out in lexicographic order. Throws when the result is empty.
FeatureVocabulary build_candidate_vocabulary(std::span<const std::string> reference_docs,
                                             const TimeBinnedCorpus& corpus, int n,
                                             long min_count,
                                             const std::unordered_set<Token>& stoplist);

// One entry per line; 2-gram tokens separated by a single space.
void save_vocabulary(const FeatureVocabulary& vocab, const std::string& path);
FeatureVocabulary load_vocabulary(const std::string& path, FeatureClass feature_class);

}  // namespace nowcaster
