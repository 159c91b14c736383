#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mlmkit/unicode.hpp"
#include "test_util.hpp"

using namespace mlmkit;

TEST_CASE("utf8 round trip") {
  std::string s = "abc \xc3\xa9 \xe2\x82\xac \xf0\x9f\x98\x80";
  CHECK(uni::encode_utf8(uni::decode_utf8(s)) == s);
  CHECK(uni::is_valid_utf8(s));
}

TEST_CASE("invalid utf8 reports byte offset") {
  std::string bad = "ab\xff";
  CHECK(!uni::is_valid_utf8(bad));
  try {
    uni::decode_utf8(bad);
    FAIL("expected Utf8Error");
  } catch (const uni::Utf8Error& e) {
    CHECK(e.byte_offset == 2);
  }

  CHECK(!uni::is_valid_utf8("\xc0\xaf"));          // overlong
  CHECK(!uni::is_valid_utf8("\xed\xa0\x80"));      // surrogate
  CHECK(!uni::is_valid_utf8("\xf4\x90\x80\x80"));  // > U+10FFFF
  CHECK(!uni::is_valid_utf8("\xe2\x82"));          // truncated
}

TEST_CASE("nfc composes combining sequences") {
  CHECK(uni::normalize("e\xcc\x81", uni::NormForm::NFC) == "\xc3\xa9");
  CHECK(uni::normalize("abc", uni::NormForm::NFC) == "abc");
}

TEST_CASE("nfkc folds compatibility forms") {
  CHECK(uni::normalize("\xef\xac\x81", uni::NormForm::NFKC) == "fi");
  CHECK(uni::normalize("\xef\xac\x81", uni::NormForm::NFC) == "\xef\xac\x81");
}

TEST_CASE("normalization matches the golden fixture") {
  auto rows = testutil::load_tsv(testutil::data_path("normalization_golden.tsv"));
  REQUIRE(rows.size() > 1000);
  std::size_t checked = 0;
  for (const auto& row : rows) {
    REQUIRE(row.size() == 3);
    std::string input = testutil::from_hex(row[0]);
    std::string nfc = testutil::from_hex(row[1]);
    std::string nfkc = testutil::from_hex(row[2]);
    CAPTURE(row[0]);
    CHECK(uni::normalize(input, uni::NormForm::NFC) == nfc);
    CHECK(uni::normalize(input, uni::NormForm::NFKC) == nfkc);
    ++checked;
  }
  CHECK(checked == rows.size());
}

TEST_CASE("normalization is idempotent over fixture inputs") {
  auto rows = testutil::load_tsv(testutil::data_path("normalization_golden.tsv"));
  REQUIRE(rows.size() >= 1000);
  for (const auto& row : rows) {
    std::string input = testutil::from_hex(row[0]);
    for (auto form : {uni::NormForm::NFC, uni::NormForm::NFKC}) {
      std::string once = uni::normalize(input, form);
      CHECK(uni::normalize(once, form) == once);
    }
  }
}

TEST_CASE("lowercase matches the golden fixture") {
  auto rows = testutil::load_tsv(testutil::data_path("lowercase_golden.tsv"));
  REQUIRE(rows.size() > 1000);
  for (const auto& row : rows) {
    REQUIRE(row.size() == 2);
    CAPTURE(row[0]);
    CHECK(uni::to_lower(testutil::from_hex(row[0])) == testutil::from_hex(row[1]));
  }
}

TEST_CASE("lowercase handles expanding mappings") {
  CHECK(uni::to_lower("Chat") == "chat");
  CHECK(uni::to_lower("\xc3\x89T\xc3\x89") == "\xc3\xa9t\xc3\xa9");  // ÉTÉ
  // U+0130 lowers to i + combining dot above.
  CHECK(uni::to_lower("\xc4\xb0") == "i\xcc\x87");
}

TEST_CASE("character classes") {
  CHECK(uni::is_alpha(U'a'));
  CHECK(uni::is_alpha(U'é'));
  CHECK(uni::is_alpha(U'œ'));  // œ
  CHECK(!uni::is_alpha(U'.'));
  CHECK(!uni::is_alpha(U'3'));
  CHECK(uni::is_digit(U'0'));
  CHECK(uni::is_digit(U'9'));
  CHECK(!uni::is_digit(U'x'));
  CHECK(uni::combining_class(U'́') == 230);
  CHECK(uni::combining_class(U'a') == 0);
}

TEST_CASE("hangul round trip") {
  // Jamo sequence composes to a syllable under NFC.
  std::string jamo = "\xe1\x84\x80\xe1\x85\xa1\xe1\x86\xa8";
  std::string syllable = "\xea\xb0\x81";
  CHECK(uni::normalize(jamo, uni::NormForm::NFC) == syllable);
  CHECK(uni::normalize(syllable, uni::NormForm::NFC) == syllable);
}
