#include "nowcaster/text.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

#include "nowcaster/corpus.hpp"
#include "nowcaster/io.hpp"

namespace nowcaster {

std::string NGram::text() const {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string NGram::csv_label() const {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += '|';
    out += tokens[i];
  }
  return out;
}

long FeatureVocabulary::index_of(const std::string& text_form) const {
  auto it = index_.find(text_form);
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

void FeatureVocabulary::rebuild_index() {
  index_.clear();
  index_.reserve(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) index_.emplace(entries[i].text(), i);
}

namespace {

bool is_word_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  Token current;
  bool pending_apostrophe = false;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
    pending_apostrophe = false;
  };
  for (size_t i = 0; i < text.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    bool apostrophe = (c == '\'');
    // typographic apostrophe U+2019
    if (c == 0xe2 && i + 2 < text.size() &&
        static_cast<unsigned char>(text[i + 1]) == 0x80 &&
        static_cast<unsigned char>(text[i + 2]) == 0x99) {
      apostrophe = true;
      i += 2;
    }
    if (is_word_char(c)) {
      if (pending_apostrophe) {
        current += '\'';
        pending_apostrophe = false;
      }
      current += static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
    } else if (apostrophe && !current.empty()) {
      // kept only if another word character follows
      pending_apostrophe = true;
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::unordered_set<Token> load_stoplist(const std::string& path) {
  std::unordered_set<Token> stoplist;
  for (const std::string& line : read_lines(path)) {
    if (!line.empty()) stoplist.insert(line);
  }
  return stoplist;
}

std::vector<Token> remove_stop_words(std::span<const Token> tokens,
                                     const std::unordered_set<Token>& stoplist) {
  std::vector<Token> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) {
    if (!stoplist.contains(t)) out.push_back(t);
  }
  return out;
}

std::vector<NGram> extract_ngrams(std::span<const Token> tokens, int n) {
  if (n != 1 && n != 2) throw std::invalid_argument("extract_ngrams: arity must be 1 or 2");
  std::vector<NGram> grams;
  if (tokens.size() + 1 <= static_cast<size_t>(n)) return grams;
  grams.reserve(tokens.size() - n + 1);
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    NGram g;
    g.tokens.assign(tokens.begin() + i, tokens.begin() + i + n);
    grams.push_back(std::move(g));
  }
  return grams;
}

std::vector<Token> preprocess_text(std::string_view text,
                                   const std::unordered_set<Token>& stoplist, bool stem) {
  std::vector<Token> tokens = tokenize(text);
  if (!stoplist.empty()) tokens = remove_stop_words(tokens, stoplist);
  if (stem) {
    for (Token& t : tokens) t = porter_stem(t);
  }
  return tokens;
}

FeatureVocabulary build_candidate_vocabulary(std::span<const std::string> reference_docs,
                                             const TimeBinnedCorpus& corpus, int n,
                                             long min_count,
                                             const std::unordered_set<Token>& stoplist) {
  if (reference_docs.empty()) {
    throw std::invalid_argument("build_candidate_vocabulary: no reference documents");
  }
  if (min_count < 0) throw std::invalid_argument("build_candidate_vocabulary: min_count < 0");

  // std::map keeps candidates in lexicographic order
  std::map<std::string, NGram> candidates;
  for (const std::string& doc : reference_docs) {
    const std::vector<Token> tokens = preprocess_text(doc, stoplist, true);
    for (NGram& g : extract_ngrams(tokens, n)) {
      std::string key = g.text();
      candidates.emplace(std::move(key), std::move(g));
    }
  }

  std::unordered_map<std::string, long> counts;
  counts.reserve(candidates.size());
  for (const auto& [key, gram] : candidates) counts.emplace(key, 0);
  for (const Post& post : corpus.posts) {
    for (const NGram& g : extract_ngrams(post.tokens, n)) {
      auto it = counts.find(g.text());
      if (it != counts.end()) ++it->second;
    }
  }

  FeatureVocabulary vocab;
  vocab.feature_class = n == 1 ? FeatureClass::U : FeatureClass::B;
  vocab.stemmed = true;
  for (const auto& [key, gram] : candidates) {
    if (counts[key] > min_count) vocab.entries.push_back(gram);
  }
  if (vocab.entries.empty()) {
    throw std::runtime_error("build_candidate_vocabulary: empty vocabulary after filtering");
  }
  vocab.rebuild_index();
  return vocab;
}

void save_vocabulary(const FeatureVocabulary& vocab, const std::string& path) {
  std::ostringstream out;
  for (const NGram& g : vocab.entries) out << g.text() << '\n';
  atomic_write_file(path, out.str());
}

FeatureVocabulary load_vocabulary(const std::string& path, FeatureClass feature_class) {
  FeatureVocabulary vocab;
  vocab.feature_class = feature_class;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    NGram g;
    std::istringstream ss(line);
    Token t;
    while (ss >> t) g.tokens.push_back(t);
    vocab.entries.push_back(std::move(g));
  }
  vocab.rebuild_index();
  return vocab;
}

}  // namespace nowcaster
