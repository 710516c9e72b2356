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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nuqta/synthgen.hpp"
#include "nuqta/trainer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace nuqta;

namespace {

using Td = Tensor<double>;

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("nuqta_trainer_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ModelConfig micro_model() {
  ModelConfig m;
  m.backbone = "lowres-baseline";
  m.lowres_channels = {4, 6, 8, 8};
  m.hidden = 12;
  m.dropout_passes = 5;
  m.dropout_fraction = 0.0;  // keep the micro fixture deterministic and easy
  return m;
}

Dataset tiny_dataset(const fs::path& dir, size_t n, uint64_t seed) {
  GenerateConfig g;
  g.n = n;
  g.seed = seed;
  g.max_words = 1;
  generate_dataset(dir.string(), g, GlyphAtlas::builtin());
  return load_dataset(dir.string());
}

}  // namespace

TEST_CASE("he_init") {
  SUBCASE("fixed seed reproduces the tensor") {
    Rng r1(5), r2(5);
    Td a = he_init<double>({4, 7}, 7, r1);
    Td b = he_init<double>({4, 7}, 7, r2);
    CHECK(a.values() == b.values());
    CHECK(a.requires_grad());
  }
  SUBCASE("sample std matches sqrt(2/fan_in) within 2% on 1e5 draws") {
    Rng rng(11);
    Td t = he_init<double>({100000}, 50, rng);
    double mean = 0;
    for (double v : t.values()) mean += v;
    mean /= t.size();
    double var = 0;
    for (double v : t.values()) var += (v - mean) * (v - mean);
    var /= t.size();
    const double want = std::sqrt(2.0 / 50.0);
    CHECK(std::abs(std::sqrt(var) - want) / want < 0.02);
  }
  SUBCASE("std decreases monotonically with fan_in") {
    double prev = 1e9;
    for (size_t fan : {4u, 16u, 64u, 256u}) {
      Rng rng(3);
      Td t = he_init<double>({20000}, fan, rng);
      double var = 0;
      for (double v : t.values()) var += v * v;
      const double sd = std::sqrt(var / t.size());
      CHECK(sd < prev);
      prev = sd;
    }
  }
  SUBCASE("fan_in of zero is a contract error") {
    Rng rng(0);
    CHECK_THROWS_AS((void)he_init<double>({2}, 0, rng), contract_error);
  }
}

TEST_CASE("clip_gradients") {
  auto make_params = [](std::vector<double> grads) {
    ParamSet<double> ps;
    Td t({grads.size()}, std::vector<double>(grads.size(), 0.0));
    t.set_requires_grad(true);
    double* g = t.grad();
    for (size_t i = 0; i < grads.size(); ++i) g[i] = grads[i];
    ps.add("p", t);
    return ps;
  };
  SUBCASE("norm below the bound is untouched") {
    auto ps = make_params({1.5, 2.0});  // norm 2.5
    const std::vector<double> before = ps.params[0].second.grad_values();
    CHECK(clip_gradients(ps, 5.0) == doctest::Approx(2.5));
    CHECK(ps.params[0].second.grad_values() == before);
  }
  SUBCASE("norm above the bound is scaled down") {
    auto ps = make_params({6.0, 8.0});  // norm 10
    CHECK(clip_gradients(ps, 5.0) == doctest::Approx(10.0));
    CHECK(ps.params[0].second.grad_values()[0] == doctest::Approx(3.0));
    CHECK(ps.params[0].second.grad_values()[1] == doctest::Approx(4.0));
  }
  SUBCASE("post-clip norm equals min(norm, bound) and never grows") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      std::vector<double> g(16);
      for (auto& v : g) v = rng.uniform(-3.0, 3.0);
      auto ps = make_params(g);
      const double before = clip_gradients(ps, 5.0);
      double sq = 0;
      for (size_t i = 0; i < g.size(); ++i) {
        const double gi = ps.params[0].second.grad_values()[i];
        CHECK(std::abs(gi) <= std::abs(g[i]) + 1e-15);
        sq += gi * gi;
      }
      CHECK(std::sqrt(sq) == doctest::Approx(std::min(before, 5.0)).epsilon(1e-9));
    }
  }
}

TEST_CASE("adadelta_step") {
  SUBCASE("zero gradient leaves the parameter unchanged") {
    Td p({3}, {1.0, -2.0, 0.5});
    p.set_requires_grad(true);
    p.grad();  // allocate zeros
    std::vector<double> eg2(3, 0.25), edx2(3, 0.25);
    adadelta_step(p, eg2, edx2, 0.95, 1e-6, 1.0);
    CHECK(p.values() == std::vector<double>{1.0, -2.0, 0.5});
    for (double e : eg2) CHECK(e == doctest::Approx(0.95 * 0.25));
    for (double e : edx2) CHECK(e == doctest::Approx(0.95 * 0.25));
  }
  SUBCASE("first step with unit gradient matches the scalar recurrence") {
    Td p({1}, {0.0});
    p.set_requires_grad(true);
    p.grad()[0] = 1.0;
    std::vector<double> eg2(1, 0.0), edx2(1, 0.0);
    adadelta_step(p, eg2, edx2, 0.95, 1e-6, 1.0);
    oracles::ScalarAdaDelta oracle{0.95, 1e-6, 1.0};
    const double want = oracle.step(1.0);
    CHECK(p.values()[0] == doctest::Approx(want).epsilon(1e-15));
    // The closed form: -sqrt(eps) / sqrt(0.05 + eps).
    CHECK(p.values()[0] == doctest::Approx(-4.4721e-3).epsilon(1e-3));
  }
  SUBCASE("scalar quadratic descends monotonically in |x|") {
    Td p({1}, {1.0});
    p.set_requires_grad(true);
    std::vector<double> eg2(1, 0.0), edx2(1, 0.0);
    double prev = 1.0;
    for (int i = 0; i < 100; ++i) {
      p.zero_grad();
      p.grad()[0] = 2.0 * p.values()[0];
      adadelta_step(p, eg2, edx2, 0.95, 1e-6, 1.0);
      CHECK(std::abs(p.values()[0]) < prev + 1e-12);
      prev = std::abs(p.values()[0]);
    }
    CHECK(prev < 1.0);
  }
  SUBCASE("one thousand steps stay within 1e-12 of the scalar oracle") {
    Td p({1}, {0.3});
    p.set_requires_grad(true);
    std::vector<double> eg2(1, 0.0), edx2(1, 0.0);
    oracles::ScalarAdaDelta oracle{0.95, 1e-6, 1.0};
    double x = 0.3;
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
      const double g = rng.uniform(-1.0, 1.0);
      p.zero_grad();
      p.grad()[0] = g;
      adadelta_step(p, eg2, edx2, 0.95, 1e-6, 1.0);
      x += oracle.step(g);
      CHECK(std::abs(p.values()[0] - x) < 1e-12);
    }
  }
}

TEST_CASE("batching geometry") {
  const fs::path dir = temp_dir("batch");
  fs::remove_all(dir);
  Dataset ds = tiny_dataset(dir, 4, 21);
  std::vector<const Sample*> chunk;
  for (const auto& s : ds.samples) chunk.push_back(&s);
  Batch<float> batch = make_batch<float>(chunk, 32, 16);
  CHECK(batch.images.dim(0) == 4);
  CHECK(batch.images.dim(2) == 32);
  CHECK(batch.images.dim(3) % 16 == 0);
  for (size_t w : batch.widths) {
    CHECK(w % 16 == 0);
    CHECK(w <= batch.images.dim(3));
  }
  // Ink is inverted: padding columns are exactly zero.
  const Sample& s0 = ds.samples[0];
  const size_t wmax = batch.images.dim(3);
  if (s0.image.w < wmax) {
    for (size_t y = 0; y < 32; ++y)
      CHECK(batch.images.data()[y * wmax + (wmax - 1)] == 0.0f);
  }
  fs::remove_all(dir);
}

TEST_CASE("checkpoint round trip") {
  const fs::path dir = temp_dir("ckpt");
  ModelConfig mc = micro_model();
  CharSet cs = CharSet::from_chars(utf8_decode("abcd"));
  Recognizer<float> model(mc, cs.size(), 42);

  const std::string p1 = (dir / "a.ckpt").string();
  const std::string p2 = (dir / "b.ckpt").string();
  save_checkpoint(p1, model, cs);

  SUBCASE("save-load-save is byte identical") {
    CharSet loaded_cs;
    auto loaded = load_checkpoint<float>(p1, &loaded_cs);
    CHECK(loaded_cs == cs);
    save_checkpoint(p2, *loaded, loaded_cs);
    CHECK(slurp(p1) == slurp(p2));
  }
  SUBCASE("probe batch outputs are identical after reload") {
    auto loaded = load_checkpoint<float>(p1);
    Rng rng(0);
    Tensor<float> probe =
        testutil::rand_tensor<float>({2, 1, 32, 48}, rng, 0.0, 1.0);
    Rng r1(0), r2(0);
    auto a = model.forward(probe, false, r1);
    auto b = loaded->forward(probe, false, r2);
    REQUIRE(a.size() == b.size());
    for (size_t t = 0; t < a.size(); ++t)
      CHECK(a[t].values() == b[t].values());
  }
  SUBCASE("a tampered header is rejected") {
    std::string bytes = slurp(p1);
    bytes[0] = 'X';
    std::ofstream out(dir / "tampered.ckpt", std::ios::binary);
    out << bytes;
    out.close();
    CHECK_THROWS_AS(
        (void)load_checkpoint<float>((dir / "tampered.ckpt").string()),
        data_error);
  }
  SUBCASE("wrong precision mode is refused") {
    CHECK_THROWS_AS((void)load_checkpoint<double>(p1), data_error);
  }
  fs::remove_all(dir);
}

TEST_CASE("training loop") {
  const fs::path data_dir = temp_dir("train_data");
  fs::remove_all(data_dir);
  Dataset ds = tiny_dataset(data_dir, 6, 31);

  SUBCASE("lr = 0 leaves every parameter unchanged") {
    Recognizer<float> model(micro_model(), ds.charset.size(), 7);
    std::vector<std::vector<float>> before;
    for (auto& [name, t] : model.params().params) before.push_back(t.values());
    TrainConfig tc;
    tc.batch_size = 4;
    tc.max_iters = 5;
    tc.eval_every = 0;
    tc.lr = 0.0;
    const fs::path out = temp_dir("train_lr0");
    (void)train(model, ds, nullptr, tc, out.string());
    size_t i = 0;
    for (auto& [name, t] : model.params().params)
      CHECK(t.values() == before[i++]);
    fs::remove_all(out);
  }
  SUBCASE("identical seeds give identical loss trajectories") {
    TrainConfig tc;
    tc.batch_size = 4;
    tc.max_iters = 8;
    tc.eval_every = 4;
    tc.seed = 3;
    const fs::path o1 = temp_dir("train_det1"), o2 = temp_dir("train_det2");
    {
      Recognizer<float> m(micro_model(), ds.charset.size(), 99);
      (void)train(m, ds, nullptr, tc, o1.string());
    }
    {
      Recognizer<float> m(micro_model(), ds.charset.size(), 99);
      (void)train(m, ds, nullptr, tc, o2.string());
    }
    const std::string log1 = slurp(o1 / "train.log");
    CHECK(log1 == slurp(o2 / "train.log"));
    CHECK(log1.find('\t') != std::string::npos);
    fs::remove_all(o1);
    fs::remove_all(o2);
  }
  SUBCASE("log format is iter TAB loss with periodic accuracy column") {
    TrainConfig tc;
    tc.batch_size = 4;
    tc.max_iters = 4;
    tc.eval_every = 2;
    const fs::path out = temp_dir("train_log");
    Recognizer<float> model(micro_model(), ds.charset.size(), 1);
    TrainStats stats = train(model, ds, nullptr, tc, out.string());
    CHECK(stats.iters_run == 4);
    CHECK(fs::exists(stats.checkpoint_path));
    std::istringstream log(slurp(out / "train.log"));
    std::string line;
    size_t rows = 0;
    while (std::getline(log, line)) {
      ++rows;
      const size_t tabs = std::count(line.begin(), line.end(), '\t');
      const size_t iter = std::stoull(line.substr(0, line.find('\t')));
      CHECK(iter == rows);
      CHECK(tabs == (iter % 2 == 0 ? 2 : 1));
    }
    CHECK(rows == 4);
    fs::remove_all(out);
  }
  fs::remove_all(data_dir);
}
