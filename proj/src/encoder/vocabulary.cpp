#include <algorithm>
#include <set>

#include "relcl/encoder.hpp"
#include "relcl/error.hpp"
#include "relcl/mining.hpp"

namespace relcl {

Vocabulary Vocabulary::build(const std::vector<std::string>& entity_types, const std::vector<Document>& docs) {
  std::vector<std::string> tokens{"[UNK]", "[MASK]", "[E]", "[/E]"};
  std::set<std::string> types(entity_types.begin(), entity_types.end());
  for (const auto& d : docs) {
    for (const auto& e : d.entities) types.insert(e.type);
  }
  for (const auto& t : types) tokens.push_back(blank_token(t));
  const std::size_t specials = tokens.size();
  std::set<std::string> words;
  for (const auto& d : docs) words.insert(d.tokens.begin(), d.tokens.end());
  for (const auto& w : words) {
    if (std::find(tokens.begin(), tokens.begin() + static_cast<long>(specials), w) ==
        tokens.begin() + static_cast<long>(specials)) {
      tokens.push_back(w);
    }
  }
  return Vocabulary(std::move(tokens), specials);
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::size_t special_count)
    : tokens_(std::move(tokens)), special_count_(special_count) {
  if (tokens_.size() < 4 || special_count_ < 4 || special_count_ > tokens_.size() || tokens_[0] != "[UNK]" ||
      tokens_[1] != "[MASK]" || tokens_[2] != "[E]" || tokens_[3] != "[/E]") {
    throw ValidationError("vocabulary: missing special tokens");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw ValidationError("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

int Vocabulary::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

MarkedDocument insert_markers(const Document& doc, const Vocabulary& vocab, std::size_t max_len) {
  std::vector<std::size_t> order(doc.mentions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return doc.mentions[a].start < doc.mentions[b].start; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (doc.mentions[order[i]].start < doc.mentions[order[i - 1]].end) {
      throw ValidationError("document '" + doc.id + "': overlapping mentions cannot be marked");
    }
  }
  const std::size_t length = doc.tokens.size() + 2 * doc.mentions.size();
  if (length > max_len) {
    throw LengthError("document '" + doc.id + "': marked length " + std::to_string(length) +
                      " exceeds max_len " + std::to_string(max_len));
  }
  MarkedDocument out;
  out.ids.reserve(length);
  out.marker_index.assign(doc.mentions.size(), 0);
  std::size_t cursor = 0;
  for (std::size_t mi : order) {
    const Mention& m = doc.mentions[mi];
    for (; cursor < m.start; ++cursor) out.ids.push_back(vocab.id(doc.tokens[cursor]));
    out.marker_index[mi] = out.ids.size();
    out.ids.push_back(Vocabulary::kOpenMarker);
    for (; cursor < m.end; ++cursor) out.ids.push_back(vocab.id(doc.tokens[cursor]));
    out.ids.push_back(Vocabulary::kCloseMarker);
  }
  for (; cursor < doc.tokens.size(); ++cursor) out.ids.push_back(vocab.id(doc.tokens[cursor]));
  return out;
}

}  // namespace relcl
