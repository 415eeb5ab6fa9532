#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "rarecorpus/corpus.hpp"
#include "rarecorpus/error.hpp"

using namespace rarecorpus;
using testutil::doc;

TEST_SUITE("corpus") {
  TEST_CASE("cleaning strips mentions, URLs and retweet markers") {
    CHECK(clean_text("RT @someone: look at https://t.co/xyz this") == "look at this");
    CHECK(clean_text("@a @b_c hello") == "hello");
    CHECK(clean_text("mail me at x@y.com") == "mail me at x@y.com");
    CHECK(clean_text("  spaced \t\n out  ") == "spaced out");
    CHECK(clean_text("see www.example.org/page now") == "see now");
    CHECK(clean_text("emoji \xF0\x9F\x98\xA1 stays") == "emoji \xF0\x9F\x98\xA1 stays");
    CHECK(clean_text("cafe\xCC\x81") == "caf\xC3\xA9");
  }

  TEST_CASE("cleaning is idempotent") {
    for (const char* raw : {"RT RT @x: hi http://a.b", "@u:@v: text", "  a  b ", "rt  @a:  b", "@@x y", "wow!!! @me"}) {
      const auto once = clean_text(raw);
      CHECK(clean_text(once) == once);
    }
  }

  TEST_CASE("retweet detection") {
    CHECK(is_retweet("RT @x: y"));
    CHECK(is_retweet("  rt hello"));
    CHECK_FALSE(is_retweet("RTs are fine"));
    CHECK_FALSE(is_retweet("ART show"));
  }

  TEST_CASE("collection invariants") {
    CHECK_THROWS_AS(DocumentCollection({doc("a", "x"), doc("a", "y")}), ValidationError);
    CHECK_THROWS_AS(DocumentCollection({doc("a", "x"), doc("b", "x")}), ValidationError);
    CHECK_THROWS_AS(DocumentCollection({doc("a", "")}), ValidationError);
    DocumentCollection c({doc("b", "one", Label::hateful), doc("a", "two")});
    CHECK(c.size() == 2);
    CHECK(c[0].doc_id == "b");
    CHECK(c.index_of("a") == 1u);
    CHECK_FALSE(c.index_of("zz").has_value());
    CHECK_THROWS_AS(c.by_id("zz"), NotFoundError);
    CHECK_FALSE(c.fully_labeled());
  }

  TEST_CASE("ingest reports every rejection reason") {
    std::istringstream in(
        R"({"id": "1", "text": "hello world", "label": 1})"
        "\n"
        R"({"id": "2", "text": "RT @x: hello again"})"
        "\n"
        "not json\n"
        R"({"id": "3", "text": "@only_a_mention"})"
        "\n"
        R"({"id": "4", "text": "hello   world"})"
        "\n"
        R"({"id": "1", "text": "something else"})"
        "\n"
        R"({"id": 5, "text": "numeric id", "user": "u9"})"
        "\n\n");
    const auto result = ingest(in);
    CHECK(result.report.records == 7);
    CHECK(result.report.accepted == 2);
    CHECK(result.report.retweets == 1);
    CHECK(result.report.malformed == 1);
    CHECK(result.report.empty == 1);
    CHECK(result.report.duplicate == 1);
    CHECK(result.report.duplicate_id == 1);
    REQUIRE(result.collection.size() == 2);
    CHECK(result.collection[0].gold_label == Label::hateful);
    CHECK(result.collection[1].doc_id == "5");
    CHECK(result.collection[1].user_id == "u9");
  }

  TEST_CASE("language predicate filters after cleaning") {
    std::istringstream in(R"({"id": "1", "text": "keep me"})"
                          "\n"
                          R"({"id": "2", "text": "drop me"})"
                          "\n");
    CleaningConfig config;
    config.accept_language = [](std::string_view text) { return text.starts_with("keep"); };
    const auto result = ingest(in, config);
    CHECK(result.report.filtered == 1);
    CHECK(result.collection.size() == 1);
  }

  TEST_CASE("re-ingesting a written collection is the identity") {
    std::istringstream in(R"({"id": "a", "text": "café 😀 x", "label": 0, "created_at": "2020-01-01"})"
                          "\n"
                          R"({"id": "b", "text": "second", "user": "u"})"
                          "\n");
    const auto first = ingest(in).collection;
    std::stringstream written;
    write_collection(written, first);
    const auto second = ingest(written).collection;
    CHECK(first == second);
    CHECK(second[0].created_at == "2020-01-01");
  }

  TEST_CASE("lexicon matches whole tokens and phrases") {
    HateLexicon lexicon({"trash", "go back home"});
    CHECK(lexicon.matches("You are TRASH!"));
    CHECK_FALSE(lexicon.matches("trashy day"));
    CHECK(lexicon.matches("go   back home"));
    CHECK_FALSE(lexicon.matches("back home at last"));
    CHECK_THROWS_AS(HateLexicon({"a", "a"}), ValidationError);
    CHECK_THROWS_AS(HateLexicon(std::vector<std::string>{}), ValidationError);
    std::istringstream file("# comment\nVermin\n\nvermin\nscum\n");
    const auto parsed = HateLexicon::parse(file);
    CHECK(parsed.size() == 2);
    const auto merged = HateLexicon::merge(lexicon, parsed);
    CHECK(merged.size() == 4);
  }

  TEST_CASE("relative-coverage fixture flags") {
    HateLexicon lexicon({"trash", "vermin", "go back home"});
    const std::vector<std::pair<const char*, bool>> expected = {
        {"you are trash", true},          {"vermin everywhere", true},  {"they should go back home now", true},
        {"trashy day", false},            {"nobody wants you here", false}, {"what a lovely morning", false},
        {"Trash talk aside", true},       {"back home at last", false},  {"Vermin!!", true},
        {"I hate mondays", false},        {"people like them are a disease", false}, {"go back   home", true}};
    for (const auto& [text, flag] : expected) CHECK_MESSAGE(lexicon.matches(text) == flag, text);
  }
}
