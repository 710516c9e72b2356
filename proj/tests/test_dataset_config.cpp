// Copyright 2026 The nuqta authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License. You may
// obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nuqta/config.hpp"
#include "nuqta/dataset.hpp"
#include "nuqta/synthgen.hpp"

namespace fs = std::filesystem;
using namespace nuqta;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("nuqta_dataset_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const std::string text =
      "# comment\n"
      "[model]\n"
      "backbone = unet\n"
      "hidden = 48\n"
      "\n"
      "[train]\n"
      "lr = 1.0\n"
      "augment = off\n";
  Config cfg = Config::parse(text);
  CHECK(cfg.get("model", "backbone") == "unet");
  CHECK(cfg.get_int("model", "hidden", 0) == 48);
  CHECK(cfg.get_num("train", "lr", 0) == doctest::Approx(1.0));
  CHECK(cfg.get_bool("train", "augment", true) == false);
  CHECK(cfg.get("model", "missing", "dflt") == "dflt");
  CHECK_FALSE(cfg.has("model", "missing"));

  SUBCASE("serialize round trip") {
    Config again = Config::parse(cfg.serialize());
    CHECK(again.serialize() == cfg.serialize());
  }
  SUBCASE("overrides win") {
    cfg.apply_override("model.hidden=64");
    CHECK(cfg.get_int("model", "hidden", 0) == 64);
    cfg.apply_override("fresh.key=v");
    CHECK(cfg.get("fresh", "key") == "v");
    CHECK_THROWS_AS(cfg.apply_override("no-dot=3"), data_error);
  }
  SUBCASE("malformed input is rejected with line numbers") {
    CHECK_THROWS_AS((void)Config::parse("[unterminated\n"), data_error);
    CHECK_THROWS_AS((void)Config::parse("keyvalue\n"), data_error);
    Config bad = Config::parse("[a]\nx = notanumber\n");
    CHECK_THROWS_AS((void)bad.get_num("a", "x", 0), data_error);
    CHECK_THROWS_AS((void)bad.get_int("a", "x", 0), data_error);
    CHECK_THROWS_AS((void)bad.get_bool("a", "x", false), data_error);
  }
}

TEST_CASE("charset") {
  const fs::path dir = temp_dir("charset");
  SUBCASE("load, encode, decode") {
    write_file(dir / "charset.txt", "a\nb\n \nc\n");
    CharSet cs = CharSet::load((dir / "charset.txt").string());
    CHECK(cs.size() == 4);
    CHECK(cs.blank_index() == 4);
    CHECK(cs.encode(utf8_decode("ab c")) == std::vector<int>{0, 1, 2, 3});
    CHECK(cs.decode({3, 0}) == utf8_decode("ca"));
    try {
      (void)cs.encode(utf8_decode("az"));
      FAIL("expected data_error");
    } catch (const data_error& e) {
      CHECK(std::string(e.what()).find("'z'") != std::string::npos);
    }
  }
  SUBCASE("duplicates are rejected") {
    write_file(dir / "dup.txt", "a\nb\na\n");
    CHECK_THROWS_AS((void)CharSet::load((dir / "dup.txt").string()),
                    data_error);
  }
  SUBCASE("multi-character lines are rejected") {
    write_file(dir / "multi.txt", "ab\n");
    CHECK_THROWS_AS((void)CharSet::load((dir / "multi.txt").string()),
                    data_error);
  }
  fs::remove_all(dir);
}

TEST_CASE("load_dataset") {
  const fs::path dir = temp_dir("load");
  fs::remove_all(dir);
  GenerateConfig gcfg;
  gcfg.n = 6;
  gcfg.seed = 9;
  generate_dataset(dir.string(), gcfg, GlyphAtlas::builtin());

  SUBCASE("a generated dataset loads with zero violations") {
    Dataset ds = load_dataset(dir.string());
    CHECK(ds.samples.size() == 6);
    CHECK(ds.charset.size() == 25);
    for (const auto& s : ds.samples) {
      CHECK(s.image.h == 32);
      CHECK(!s.transcript.empty());
      CHECK(s.labels.size() == s.transcript.size());
    }
  }
  SUBCASE("a manifest row naming a missing file is a named error") {
    const std::string orig = slurp(dir / "labels.tsv");
    write_file(dir / "labels.tsv", orig + "images/nope.png\tabc\n");
    try {
      (void)load_dataset(dir.string());
      FAIL("expected data_error");
    } catch (const data_error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 7") != std::string::npos);
      CHECK(msg.find("nope.png") != std::string::npos);
    }
    write_file(dir / "labels.tsv", orig);
  }
  SUBCASE("an out-of-charset transcript character is a named error") {
    const std::string orig = slurp(dir / "labels.tsv");
    write_file(dir / "labels.tsv", orig + "images/000000.png\tZebra\n");
    try {
      (void)load_dataset(dir.string());
      FAIL("expected data_error");
    } catch (const data_error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 7") != std::string::npos);
      CHECK(msg.find("'Z'") != std::string::npos);
    }
    write_file(dir / "labels.tsv", orig);
  }
  SUBCASE("missing manifest is an error") {
    CHECK_THROWS_AS((void)load_dataset((dir / "nosuch").string()), data_error);
  }
  fs::remove_all(dir);
}

TEST_CASE("png round trip preserves 8-bit pixels") {
  const fs::path dir = temp_dir("png");
  Image img(16, 24);
  Rng rng(4);
  for (float& v : img.px)
    v = static_cast<float>(std::round(rng.uniform() * 255.0) / 255.0);
  const std::string path = (dir / "probe.png").string();
  write_png_gray8(path, img);
  Image back = read_png_gray8(path);
  REQUIRE(back.h == img.h);
  REQUIRE(back.w == img.w);
  for (size_t i = 0; i < img.px.size(); ++i)
    CHECK(back.px[i] == doctest::Approx(img.px[i]).epsilon(1e-6));
  fs::remove_all(dir);
}
