#include "rarecorpus/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "rarecorpus/error.hpp"
#include "rarecorpus/text.hpp"
#include "rarecorpus/unicode.hpp"

namespace rarecorpus {

using nlohmann::json;

// ---------------------------------------------------------------------------
// DocumentCollection

DocumentCollection::DocumentCollection(std::vector<Document> documents, std::string source_note)
    : documents_(std::move(documents)), source_note_(std::move(source_note)) {
  std::unordered_set<std::string_view> texts;
  index_.reserve(documents_.size());
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const Document& doc = documents_[i];
    if (doc.doc_id.empty()) throw ValidationError("document at position " + std::to_string(i) + " has an empty id");
    if (doc.text.empty()) throw ValidationError("document " + doc.doc_id + " has empty text");
    if (!index_.emplace(doc.doc_id, i).second) throw ValidationError("duplicate doc_id " + doc.doc_id);
    if (!texts.insert(doc.text).second) throw ValidationError("duplicate text for doc_id " + doc.doc_id);
  }
}

std::optional<std::size_t> DocumentCollection::index_of(std::string_view doc_id) const {
  const auto it = index_.find(std::string(doc_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Document& DocumentCollection::by_id(std::string_view doc_id) const {
  const auto index = index_of(doc_id);
  if (!index) throw NotFoundError("unknown doc_id " + std::string(doc_id));
  return documents_[*index];
}

bool DocumentCollection::fully_labeled() const {
  return std::all_of(documents_.begin(), documents_.end(), [](const Document& d) { return d.gold_label.has_value(); });
}

// ---------------------------------------------------------------------------
// HateLexicon

HateLexicon::HateLexicon(std::vector<std::string> terms, std::string source_note)
    : terms_(std::move(terms)), source_note_(std::move(source_note)) {
  if (terms_.empty()) throw ValidationError("hate lexicon is empty");
  std::unordered_set<std::string> seen;
  for (const auto& term : terms_) {
    const auto lowered = unicode::encode_utf8(unicode::to_lower(unicode::decode_utf8(term)));
    if (lowered != term) throw ValidationError("lexicon term is not lowercase: " + term);
    if (!seen.insert(term).second) throw ValidationError("duplicate lexicon term: " + term);
    auto tokens = word_tokens(term);
    if (tokens.empty()) throw ValidationError("lexicon term has no word tokens: " + term);
    std::string first = tokens.front();
    tokens.erase(tokens.begin());
    by_first_token_[first].push_back(std::move(tokens));
  }
}

HateLexicon HateLexicon::parse(std::istream& in, std::string source_note) {
  std::vector<std::string> terms;
  std::unordered_set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::string term = unicode::encode_utf8(unicode::to_lower(unicode::decode_utf8(line.substr(first, last - first + 1))));
    if (word_tokens(term).empty()) continue;
    if (seen.insert(term).second) terms.push_back(std::move(term));
  }
  return HateLexicon(std::move(terms), std::move(source_note));
}

HateLexicon HateLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon file " + path);
  return parse(in, path);
}

bool HateLexicon::matches_tokens(const std::vector<std::string>& tokens) const {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto it = by_first_token_.find(tokens[i]);
    if (it == by_first_token_.end()) continue;
    for (const auto& rest : it->second) {
      if (i + 1 + rest.size() > tokens.size()) continue;
      if (std::equal(rest.begin(), rest.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i) + 1)) return true;
    }
  }
  return false;
}

bool HateLexicon::matches(std::string_view text) const { return matches_tokens(word_tokens(text)); }

HateLexicon HateLexicon::merge(const HateLexicon& a, const HateLexicon& b) {
  std::vector<std::string> terms = a.terms_;
  std::unordered_set<std::string> seen(terms.begin(), terms.end());
  for (const auto& term : b.terms_) {
    if (seen.insert(term).second) terms.push_back(term);
  }
  return HateLexicon(std::move(terms), a.source_note_ + "+" + b.source_note_);
}

bool contains_hate_word(const Document& doc, const HateLexicon& lexicon) { return lexicon.matches(doc.text); }

// ---------------------------------------------------------------------------
// Cleaning

namespace {

bool starts_with_ci(std::u32string_view text, std::size_t pos, std::u32string_view prefix) {
  if (pos + prefix.size() > text.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (unicode::to_lower(text[pos + i]) != prefix[i]) return false;
  }
  return true;
}

bool is_username_char(char32_t cp) {
  return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') || cp == '_';
}

bool url_starts_at(std::u32string_view token, std::size_t pos) {
  return starts_with_ci(token, pos, U"http://") || starts_with_ci(token, pos, U"https://") ||
         starts_with_ci(token, pos, U"www.");
}

// Removes URL tails and @-mentions from one whitespace-free token.
std::u32string scrub_token(std::u32string_view token) {
  std::u32string out;
  std::size_t i = 0;
  while (i < token.size()) {
    if (url_starts_at(token, i)) break;  // a URL runs to the end of the token
    const bool mention_boundary = out.empty() || !is_username_char(out.back());
    if (token[i] == U'@' && mention_boundary && i + 1 < token.size() && is_username_char(token[i + 1])) {
      i += 1;
      while (i < token.size() && is_username_char(token[i])) ++i;
      if (i < token.size() && token[i] == U':') ++i;
      continue;
    }
    out.push_back(token[i]);
    ++i;
  }
  return out;
}

bool is_rt_token(std::u32string_view token) {
  return token.size() == 2 && unicode::to_lower(token[0]) == U'r' && unicode::to_lower(token[1]) == U't';
}

}  // namespace

std::string clean_text(std::string_view raw) {
  const std::u32string text = unicode::decode_utf8(unicode::normalize_nfc(raw));
  std::vector<std::u32string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && unicode::is_whitespace(text[i])) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !unicode::is_whitespace(text[i])) ++i;
    if (i == begin) continue;
    auto scrubbed = scrub_token(std::u32string_view(text).substr(begin, i - begin));
    if (!scrubbed.empty()) tokens.push_back(std::move(scrubbed));
  }
  std::size_t first = 0;
  while (first < tokens.size() && is_rt_token(tokens[first])) ++first;

  std::u32string joined;
  for (std::size_t t = first; t < tokens.size(); ++t) {
    if (!joined.empty()) joined.push_back(U' ');
    joined += tokens[t];
  }
  return unicode::encode_utf8(joined);
}

bool is_retweet(std::string_view raw) {
  const auto start = raw.find_first_not_of(" \t\r\n");
  if (start == std::string_view::npos || raw.size() - start < 3) return false;
  const char r = raw[start];
  const char t = raw[start + 1];
  return (r == 'R' || r == 'r') && (t == 'T' || t == 't') && (raw[start + 2] == ' ' || raw[start + 2] == '\t');
}

// ---------------------------------------------------------------------------
// Ingest

namespace {

std::optional<std::string> string_field(const json& record, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    const auto it = record.find(name);
    if (it == record.end() || it->is_null()) continue;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    if (it->is_number_unsigned()) return std::to_string(it->get<unsigned long long>());
    throw ValidationError(std::string("field ") + name + " has the wrong type");
  }
  return std::nullopt;
}

std::optional<Label> label_field(const json& record) {
  for (const char* name : {"label", "gold_label"}) {
    const auto it = record.find(name);
    if (it == record.end() || it->is_null()) continue;
    if (it->is_boolean()) return to_label(it->get<bool>());
    if (it->is_number_integer()) {
      const auto value = it->get<long long>();
      if (value == 0 || value == 1) return to_label(value == 1);
    }
    if (it->is_string()) {
      if (auto parsed = parse_label(it->get<std::string>())) return parsed;
    }
    throw ValidationError("label must be 0 or 1");
  }
  return std::nullopt;
}

json document_to_json(const Document& doc) {
  json out;
  out["doc_id"] = doc.doc_id;
  out["text"] = doc.text;
  out["user_id"] = doc.user_id ? json(*doc.user_id) : json(nullptr);
  out["gold_label"] = doc.gold_label ? json(to_int(*doc.gold_label)) : json(nullptr);
  if (doc.created_at) out["created_at"] = *doc.created_at;
  return out;
}

}  // namespace

IngestResult ingest(std::istream& records, const CleaningConfig& config, std::string source_note) {
  IngestReport report;
  std::vector<Document> documents;
  std::unordered_set<std::string> seen_text;
  std::unordered_set<std::string> seen_id;
  std::string line;
  while (std::getline(records, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++report.records;
    Document doc;
    std::string raw_text;
    try {
      const json record = json::parse(line);
      if (!record.is_object()) throw ValidationError("record is not an object");
      auto id = string_field(record, {"id", "doc_id"});
      const auto text = record.find("text");
      if (!id || id->empty() || text == record.end() || !text->is_string()) throw ValidationError("missing id or text");
      raw_text = text->get<std::string>();
      if (!unicode::is_valid_utf8(raw_text)) throw ValidationError("text is not valid UTF-8");
      doc.doc_id = std::move(*id);
      doc.user_id = string_field(record, {"user", "user_id"});
      doc.gold_label = label_field(record);
      doc.created_at = string_field(record, {"created_at"});
    } catch (const std::exception&) {
      ++report.malformed;
      continue;
    }
    if (config.drop_retweets && is_retweet(raw_text)) {
      ++report.retweets;
      continue;
    }
    doc.text = clean_text(raw_text);
    if (doc.text.empty()) {
      ++report.empty;
      continue;
    }
    if (config.accept_language && !config.accept_language(doc.text)) {
      ++report.filtered;
      continue;
    }
    if (seen_text.contains(doc.text)) {
      ++report.duplicate;
      continue;
    }
    if (seen_id.contains(doc.doc_id)) {
      ++report.duplicate_id;
      continue;
    }
    seen_text.insert(doc.text);
    seen_id.insert(doc.doc_id);
    documents.push_back(std::move(doc));
  }
  report.accepted = documents.size();
  return {DocumentCollection(std::move(documents), std::move(source_note)), report};
}

void write_collection(std::ostream& out, const DocumentCollection& collection) {
  for (const auto& doc : collection) out << document_to_json(doc).dump() << '\n';
}

DocumentCollection read_collection(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open collection file " + path);
  std::vector<Document> documents;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json record = json::parse(line);
      Document doc;
      doc.doc_id = string_field(record, {"doc_id", "id"}).value_or("");
      doc.text = record.at("text").get<std::string>();
      doc.user_id = string_field(record, {"user_id", "user"});
      doc.gold_label = label_field(record);
      doc.created_at = string_field(record, {"created_at"});
      documents.push_back(std::move(doc));
    } catch (const std::exception& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return DocumentCollection(std::move(documents), path);
}

}  // namespace rarecorpus
