// Model stacks: embedder padding and determinism, classifier and regressor
// shapes, autoencoder teacher/greedy agreement, and checkpoint round trips
// that preserve forward outputs bit for bit.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "mann/models/annc.hpp"
#include "mann/models/annr.hpp"
#include "mann/models/autoencoder.hpp"
#include "mann/models/cnn_embedder.hpp"
#include "mann/models/model_io.hpp"
#include "mann/rng.hpp"
#include "mann/unicode.hpp"
#include "mann/vocab.hpp"

using namespace mann;
using T = double;

namespace {

Vocabulary abc_vocab() { return Vocabulary::from_words({utf8_to_word("abcde")}); }

std::filesystem::path temp_dir(const std::string& tag) {
  std::filesystem::path dir = std::filesystem::temp_directory_path() / ("mann_test_" + tag);
  std::filesystem::create_directories(dir);
  return dir;
}

// Greedy decoding re-derived through the teacher path: extend the prefix by
// the argmax of the last teacher distribution until the end symbol or the
// budget. Valid as long as no reserved symbol other than the end symbol wins
// the argmax, which the caller checks.
struct EmulatedDecode {
  Word word;
  bool truncated = false;
  bool clean = true;  // emulation stayed within data characters
};

EmulatedDecode emulate_greedy(Autoencoder<T>& ae, const nn::Tensor<T>& emb, int budget) {
  EmulatedDecode out;
  for (int step = 0; step < budget; ++step) {
    nn::Tensor<T> dists = ae.decode_teacher(emb, out.word);
    int rows = dists.dim(0), classes = dists.dim(1);
    const auto& dv = dists.values();
    std::size_t base = static_cast<std::size_t>(rows - 1) * classes;
    int best = 0;
    for (int i = 1; i < classes; ++i)
      if (dv[base + i] > dv[base + best]) best = i;
    if (best == Vocabulary::kEow) return out;
    if (best < Vocabulary::kReserved) {
      out.clean = false;
      return out;
    }
    out.word.push_back(ae.vocab.decode(best));
  }
  out.truncated = true;
  return out;
}

}  // namespace

TEST_CASE("embedder output is sized by windows and filters") {
  Rng rng(1);
  CnnEmbedderConfig cfg{4, {2, 3}, 3, 5};
  CHECK(cfg.output_dim() == 6);
  auto emb = CnnEmbedder<T>::init(cfg, abc_vocab(), rng);

  for (const char* s : {"", "a", "abcde", "abcdeabcde"}) {
    nn::Tensor<T> e = emb.embed(utf8_to_word(s));
    CHECK(e.shape() == std::vector<int>{6});
  }
  CHECK(emb.embed_values(utf8_to_word("ab")) == emb.embed_values(utf8_to_word("ab")));
  CHECK(emb.embed_values(utf8_to_word("ab")) != emb.embed_values(utf8_to_word("ba")));
}

TEST_CASE("unknown characters share the unknown slot") {
  Rng rng(2);
  auto emb = CnnEmbedder<T>::init(CnnEmbedderConfig{4, {2}, 3, 4}, abc_vocab(), rng);
  // x and z are both out of vocabulary, so the words embed identically
  CHECK(emb.embed_values(utf8_to_word("axb")) == emb.embed_values(utf8_to_word("azb")));
  CHECK(emb.embed_values(utf8_to_word("axb")) != emb.embed_values(utf8_to_word("acb")));
}

TEST_CASE("embedder parameter names are stable") {
  Rng rng(3);
  auto emb = CnnEmbedder<T>::init(CnnEmbedderConfig{4, {2, 4}, 3, 4}, abc_vocab(), rng);
  auto ps = emb.params();
  REQUIRE(ps.size() == 3);
  CHECK(ps[0]->name == "embedder.char_table");
  CHECK(ps[1]->name == "embedder.conv_w2");
  CHECK(ps[2]->name == "embedder.conv_w4");
}

TEST_CASE("classifier scores pairs of pairs in the unit interval") {
  Rng rng(4);
  AnncConfig cfg{6, 5, 4};
  CHECK(cfg.dense_in() == 4 * 5);
  auto annc = Annc<T>::init(cfg, rng);

  Rng vrng(5);
  auto vec = [&] {
    std::vector<T> v(6);
    for (auto& x : v) x = vrng.uniform(-1.0, 1.0);
    return nn::Tensor<T>::from({6}, std::move(v));
  };
  nn::Tensor<T> a = vec(), b = vec(), c = vec(), d = vec();
  nn::Tensor<T> s = annc.score(a, b, c, d);
  REQUIRE(s.numel() == 1);
  CHECK(s.item() > 0.0);
  CHECK(s.item() < 1.0);
  CHECK(annc.score(a, b, c, d).item() == s.item());
}

TEST_CASE("regressor maps three embeddings to one") {
  Rng rng(6);
  AnnrConfig cfg{5, 7};
  auto annr = Annr<T>::init(cfg, rng);
  Rng vrng(7);
  auto vec = [&] {
    std::vector<T> v(5);
    for (auto& x : v) x = vrng.uniform(-1.0, 1.0);
    return nn::Tensor<T>::from({5}, std::move(v));
  };
  nn::Tensor<T> a = vec(), b = vec(), c = vec();
  nn::Tensor<T> out = annr.predict(a, b, c);
  CHECK(out.shape() == std::vector<int>{5});
  CHECK(annr.predict(a, b, c).values() == out.values());
}

TEST_CASE("autoencoder embedding packs both directions' final states") {
  Rng rng(8);
  AutoencoderConfig cfg{3, 10, 2};
  CHECK(cfg.embed_dim() == 12);
  auto ae = Autoencoder<T>::init(cfg, abc_vocab(), rng);

  nn::Tensor<T> e = ae.encode(utf8_to_word("bad"));
  CHECK(e.shape() == std::vector<int>{12});
  CHECK(ae.encode_values(utf8_to_word("bad")) == e.values());

  // forget gates start open: bias slice [h, 2h) is one on every lstm
  for (auto* lstm : {&ae.enc_fwd, &ae.enc_bwd, &ae.dec}) {
    int h = lstm->hidden();
    const auto& bias = lstm->bias.value.values();
    for (int i = 0; i < h; ++i) {
      CHECK(bias[static_cast<std::size_t>(h + i)] == 1.0);
      CHECK(bias[static_cast<std::size_t>(i)] == 0.0);
    }
  }
}

TEST_CASE("teacher forcing produces one distribution per symbol") {
  Rng rng(9);
  auto ae = Autoencoder<T>::init(AutoencoderConfig{3, 10, 2}, abc_vocab(), rng);
  Word gold = utf8_to_word("dab");

  std::vector<int> targets = ae.teacher_targets(gold);
  REQUIRE(targets.size() == 4);
  CHECK(targets[0] == ae.vocab.encode(U'd'));
  CHECK(targets[3] == Vocabulary::kEow);

  nn::Tensor<T> dists = ae.decode_teacher(ae.encode(gold), gold);
  REQUIRE(dists.shape() == std::vector<int>{4, ae.vocab.size()});
  for (int r = 0; r < 4; ++r) {
    T sum = 0;
    for (int c = 0; c < ae.vocab.size(); ++c) sum += dists.values()[r * ae.vocab.size() + c];
    CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("greedy decoding follows the teacher distributions") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    auto ae = Autoencoder<T>::init(AutoencoderConfig{3, 8, 2}, abc_vocab(), rng);
    nn::Tensor<T> emb = ae.encode(utf8_to_word("cade"));
    int budget = ae.decode_budget(4);
    REQUIRE(budget == 8);

    EmulatedDecode expect = emulate_greedy(ae, emb, budget);
    if (!expect.clean) continue;
    Autoencoder<T>::Decoded got = ae.decode_greedy(emb, budget);
    CHECK(got.word == expect.word);
    CHECK(got.truncated == expect.truncated);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("decode budget and truncation") {
  Rng rng(10);
  auto ae = Autoencoder<T>::init(AutoencoderConfig{3, 5, 2}, abc_vocab(), rng);
  CHECK(ae.decode_budget(0) == 5);
  CHECK(ae.decode_budget(10) == 12);

  Autoencoder<T>::Decoded zero = ae.decode_greedy(ae.encode(utf8_to_word("abc")), 0);
  CHECK(zero.word.empty());
  CHECK(zero.truncated);

  Autoencoder<T>::Decoded r1 = ae.round_trip(utf8_to_word("abc"));
  Autoencoder<T>::Decoded r2 = ae.round_trip(utf8_to_word("abc"));
  CHECK(r1.word == r2.word);
  CHECK(r1.truncated == r2.truncated);
}

TEST_CASE("model checkpoints restore identical forward passes") {
  auto dir = temp_dir("model_io");
  Rng rng(11);
  Word w1 = utf8_to_word("bead"), w2 = utf8_to_word("cab"), w3 = utf8_to_word("dad");

  auto emb = CnnEmbedder<T>::init(CnnEmbedderConfig{4, {2, 3}, 3, 5}, abc_vocab(), rng);
  save_embedder((dir / "embedder").string(), emb);
  auto emb2 = load_embedder<T>((dir / "embedder").string());
  CHECK(emb2.cfg.windows == emb.cfg.windows);
  CHECK(emb2.vocab == emb.vocab);
  CHECK(emb2.embed_values(w1) == emb.embed_values(w1));

  auto annc = Annc<T>::init(AnncConfig{6, 5, 4}, rng);
  save_annc((dir / "annc").string(), annc);
  auto annc2 = load_annc<T>((dir / "annc").string());
  nn::Tensor<T> ea = nn::Tensor<T>::from({6}, {1, 0, -1, 0.5, 0.25, -0.5});
  CHECK(annc2.score(ea, ea, ea, ea).item() == annc.score(ea, ea, ea, ea).item());

  auto annr = Annr<T>::init(AnnrConfig{6, 4}, rng);
  save_annr((dir / "annr").string(), annr);
  auto annr2 = load_annr<T>((dir / "annr").string());
  CHECK(annr2.predict(ea, ea, ea).values() == annr.predict(ea, ea, ea).values());

  auto ae = Autoencoder<T>::init(AutoencoderConfig{3, 8, 2}, abc_vocab(), rng);
  save_autoencoder((dir / "ae").string(), ae);
  auto ae2 = load_autoencoder<T>((dir / "ae").string());
  CHECK(ae2.encode_values(w2) == ae.encode_values(w2));
  CHECK(ae2.round_trip(w3).word == ae.round_trip(w3).word);

  // a sidecar of the wrong kind is rejected
  CHECK_THROWS(load_embedder<T>((dir / "annc").string()));
  CHECK_THROWS(load_annr<T>((dir / "ae").string()));
}

TEST_CASE("config json survives the round trip") {
  nlohmann::json j;
  CnnEmbedderConfig e{7, {2, 5}, 9, 3};
  to_json(j, e);
  CnnEmbedderConfig e2;
  from_json(j, e2);
  CHECK(e2.char_dim == 7);
  CHECK(e2.windows == std::vector<int>{2, 5});
  CHECK(e2.filters_per_window == 9);
  CHECK(e2.min_length == 3);

  AutoencoderConfig a{5, 20, 3};
  to_json(j, a);
  AutoencoderConfig a2;
  from_json(j, a2);
  CHECK(a2.hidden == 5);
  CHECK(a2.max_decode == 20);
  CHECK(a2.decode_slack == 3);
}
