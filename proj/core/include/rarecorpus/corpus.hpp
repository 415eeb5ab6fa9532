#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rarecorpus/label.hpp"

namespace rarecorpus {

/// One social-media post after cleaning.
struct Document {
  std::string doc_id;
  std::string text;
  std::optional<std::string> user_id;
  std::optional<Label> gold_label;
  std::optional<std::string> created_at;

  friend bool operator==(const Document&, const Document&) = default;
};

/// Ordered, deduplicated set of documents. Immutable once built.
///
/// Construction enforces the collection invariants: unique ids, non-empty text,
/// and no two documents with identical text. Iteration order is the insertion
/// order.
class DocumentCollection {
 public:
  DocumentCollection() = default;
  explicit DocumentCollection(std::vector<Document> documents, std::string source_note = {});

  const std::vector<Document>& documents() const noexcept { return documents_; }
  const std::string& source_note() const noexcept { return source_note_; }
  std::size_t size() const noexcept { return documents_.size(); }
  bool empty() const noexcept { return documents_.empty(); }
  const Document& operator[](std::size_t i) const { return documents_[i]; }

  auto begin() const noexcept { return documents_.begin(); }
  auto end() const noexcept { return documents_.end(); }

  std::optional<std::size_t> index_of(std::string_view doc_id) const;
  /// Throws NotFoundError for unknown ids.
  const Document& by_id(std::string_view doc_id) const;

  /// True when every document carries a gold label.
  bool fully_labeled() const;

  friend bool operator==(const DocumentCollection& a, const DocumentCollection& b) {
    return a.documents_ == b.documents_;
  }

 private:
  std::vector<Document> documents_;
  std::string source_note_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Known hate words and phrases. Used for analysis only, never for selection.
class HateLexicon {
 public:
  /// Terms must be lowercase, non-empty, and tokenize to at least one token.
  /// Throws ValidationError otherwise, or when the list is empty or has duplicates.
  explicit HateLexicon(std::vector<std::string> terms, std::string source_note = {});

  /// Reads one term per line; blank lines and lines starting with '#' are skipped.
  /// Terms are lowercased and de-duplicated on the way in.
  static HateLexicon load(const std::string& path);
  static HateLexicon parse(std::istream& in, std::string source_note = {});

  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const std::string& source_note() const noexcept { return source_note_; }
  std::size_t size() const noexcept { return terms_.size(); }

  /// Whole-token match, case-insensitive; multiword terms match a contiguous
  /// token subsequence.
  bool matches(std::string_view text) const;
  bool matches_tokens(const std::vector<std::string>& tokens) const;

  static HateLexicon merge(const HateLexicon& a, const HateLexicon& b);

 private:
  std::vector<std::string> terms_;
  std::string source_note_;
  // first token -> remaining token sequences
  std::unordered_map<std::string, std::vector<std::vector<std::string>>> by_first_token_;
};

bool contains_hate_word(const Document& doc, const HateLexicon& lexicon);

/// Strips URLs, @-mentions (with a directly attached colon) and leading retweet
/// markers, collapses whitespace, and NFC-normalizes. Emojis are preserved.
/// Idempotent: clean_text(clean_text(s)) == clean_text(s).
std::string clean_text(std::string_view raw);

/// True when the raw post starts with a retweet marker ("RT ", any case).
bool is_retweet(std::string_view raw);

struct CleaningConfig {
  bool drop_retweets = true;
  /// Language filter applied to cleaned text; the default accepts everything.
  std::function<bool(std::string_view)> accept_language;
};

struct IngestReport {
  std::size_t records = 0;
  std::size_t accepted = 0;
  std::size_t malformed = 0;
  std::size_t empty = 0;
  std::size_t duplicate = 0;     // identical cleaned text
  std::size_t duplicate_id = 0;  // id already seen with different text
  std::size_t filtered = 0;      // language predicate
  std::size_t retweets = 0;
};

struct IngestResult {
  DocumentCollection collection;
  IngestReport report;
};

/// Streams JSON Lines records. Accepts both the raw schema (id, text, user,
/// label, created_at) and the collection schema (doc_id, text, user_id,
/// gold_label), so re-ingesting an ingest output is the identity.
IngestResult ingest(std::istream& records, const CleaningConfig& config = {}, std::string source_note = {});

void write_collection(std::ostream& out, const DocumentCollection& collection);
DocumentCollection read_collection(const std::string& path);

}  // namespace rarecorpus
