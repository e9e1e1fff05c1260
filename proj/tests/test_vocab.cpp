// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bofnet/error.hpp"
#include "bofnet/vocabulary.hpp"

namespace fs = std::filesystem;
using namespace bofnet;
using namespace bofnet::asmpipe;

namespace {

std::vector<TokenStream> streams() {
  return {{"b", {"push", "rbp", "\n", "mov", "rbp", ",", "rsp", "\n"}},
          {"a", {"mov", "eax", ",", "0", "\n", "ret", "\n"}}};
}

}  // namespace

TEST_CASE("reserved ids and first-occurrence order by source id") {
  auto v = Vocabulary::build(streams());
  CHECK(v.token(kPadId) == "<PAD>");
  CHECK(v.token(kUnkId) == "<UNK>");
  // Stream "a" is visited first.
  CHECK(*v.find("mov") == 2);
  CHECK(*v.find("eax") == 3);
  CHECK(*v.find(",") == 4);
  CHECK(*v.find("0") == 5);
  CHECK(*v.find("\n") == 6);
  CHECK(*v.find("ret") == 7);
  CHECK(*v.find("push") == 8);
  CHECK(v.size() == 11);
}

TEST_CASE("build is independent of input order") {
  auto s = streams();
  std::vector<TokenStream> rev(s.rbegin(), s.rend());
  CHECK(Vocabulary::build(s) == Vocabulary::build(rev));
}

TEST_CASE("encode maps unknown tokens to UNK and decode inverts known ids") {
  auto v = Vocabulary::build(streams());
  TokenStream t{"x", {"mov", "r15", "\n"}};
  auto ids = v.encode(t);
  CHECK(ids == std::vector<TokenId>{2, kUnkId, 6});
  CHECK(v.decode(ids) == std::vector<std::string>{"mov", "<UNK>", "\n"});
  for (TokenId id = 0; id < static_cast<TokenId>(v.size()); ++id) {
    CHECK(*v.find(v.token(id)) == id);
  }
  CHECK_THROWS_AS(v.token(static_cast<TokenId>(v.size())), Error);
  CHECK_THROWS_AS(v.token(-1), Error);
}

TEST_CASE("save and load round-trip, including awkward tokens") {
  TokenStream odd{"z", {"\\", "\t", "\"a b\"", "\n", "x\\n"}};
  auto v = Vocabulary::build(std::vector<TokenStream>{odd});
  auto path = fs::temp_directory_path() / "bofnet-test-vocab.txt";
  v.save(path);
  auto back = Vocabulary::load(path);
  CHECK(back == v);
  CHECK(back.content_hash() == v.content_hash());
  CHECK(Vocabulary::deserialize(v.serialize()) == v);
  fs::remove(path);
}

TEST_CASE("content hash tracks content") {
  auto a = Vocabulary::build(streams());
  auto s = streams();
  s[0].tokens.push_back("leave");
  auto b = Vocabulary::build(s);
  CHECK(a.content_hash() != b.content_hash());
}

TEST_CASE("corrupt or foreign vocabulary files are rejected") {
  auto text = Vocabulary::build(streams()).serialize();
  auto version = text;
  version.replace(version.find(" 1 "), 3, " 9 ");
  try {
    Vocabulary::deserialize(version);
    FAIL("expected VersionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::VersionMismatch);
  }
  try {
    Vocabulary::deserialize("not a vocabulary\n");
    FAIL("expected CorruptFile");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorruptFile);
  }
  auto truncated = text.substr(0, text.size() / 2);
  truncated = truncated.substr(0, truncated.rfind('\n') + 1);
  CHECK_THROWS_AS(Vocabulary::deserialize(truncated), Error);
}
