#include <doctest.h>

#include <fstream>

#include "entail/embedding.hpp"
#include "entail/vocab.hpp"
#include "test_helpers.hpp"

using namespace entail;
using namespace entail::testing;

namespace {

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

Vocabulary vocab_of(const std::vector<std::string>& tokens) {
  Vocabulary v;
  for (const auto& t : tokens) v.add(t);
  return v;
}

}  // namespace

TEST_CASE("vocabulary is a bijection with reserved tokens first") {
  Vocabulary v;
  CHECK(v.size() == 2);
  CHECK(v.find(Vocabulary::kDelim) == Vocabulary::kDelimIndex);
  CHECK(v.find(Vocabulary::kUnk) == Vocabulary::kUnkIndex);
  const int cat = v.add("cat");
  CHECK(v.add("cat") == cat);  // idempotent
  CHECK(v.token(cat) == "cat");
  CHECK(v.find("dog") == -1);

  const uint64_t h = v.hash();
  v.add("dog");
  CHECK(v.hash() != h);
}

TEST_CASE("vocabulary dump/load round trip") {
  TempDir dir("vocab");
  Vocabulary v = vocab_of({"cat", "dog", "runs"});
  v.dump(dir.file("vocab.tsv"));
  Vocabulary loaded = Vocabulary::load(dir.file("vocab.tsv"));
  CHECK(loaded.size() == v.size());
  CHECK(loaded.hash() == v.hash());
}

TEST_CASE("word2vec text loading with header") {
  TempDir dir("w2v");
  write_file(dir.file("vecs.txt"), "2 3\ncat 1 0 0\ndog 0 1 0\n");
  Vocabulary v = vocab_of({"cat", "dog"});
  Word2VecTable table = load_word2vec_text(dir.file("vecs.txt"), v);
  CHECK(table.dim == 3);
  CHECK(table.rows.size() == 2);
  CHECK(table.rows.at(v.find("cat"))[0] == doctest::Approx(1.0));
  // the two reserved tokens count as missing
  CHECK(table.missing == 2);
}

TEST_CASE("word2vec missing vocabulary words are reported") {
  TempDir dir("w2v-miss");
  write_file(dir.file("vecs.txt"), "cat 1 0 0\n");
  Vocabulary v = vocab_of({"cat", "zyx"});
  Word2VecTable table = load_word2vec_text(dir.file("vecs.txt"), v);
  CHECK(table.rows.size() == 1);
  CHECK(table.missing == 3);  // zyx + the two reserved tokens
  CHECK(!table.rows.count(v.find("zyx")));
}

TEST_CASE("word2vec malformed input names the line") {
  TempDir dir("w2v-bad");
  Vocabulary v = vocab_of({"cat", "dog"});
  write_file(dir.file("short.txt"), "cat 1 0 0\ndog\n");
  CHECK_THROWS_WITH_AS(load_word2vec_text(dir.file("short.txt"), v), doctest::Contains("line 2"),
                       DataError);
  write_file(dir.file("dim.txt"), "cat 1 0 0\ndog 1 0\n");
  CHECK_THROWS_WITH_AS(load_word2vec_text(dir.file("dim.txt"), v), doctest::Contains("line 2"),
                       DataError);
  write_file(dir.file("num.txt"), "cat 1 zz 0\n");
  CHECK_THROWS_AS(load_word2vec_text(dir.file("num.txt"), v), DataError);
}

TEST_CASE("embedding policy: frozen vs tunable vs inference-OOV") {
  TempDir dir("embed");
  write_file(dir.file("vecs.txt"), "cat 1 0 0\n");
  Vocabulary v = vocab_of({"cat", "zyx"});
  Word2VecTable pre = load_word2vec_text(dir.file("vecs.txt"), v);
  EmbeddingTable<double> table = EmbeddingTable<double>::build(v, 3, &pre, 99);

  // pretrained row kept verbatim and frozen
  LookupResult<double> cat = lookup(table, v, "cat", Phase::Train);
  CHECK(!cat.tunable);
  CHECK(cat.vector(0, 0) == 1.0);
  CHECK(cat.vector(1, 0) == 0.0);

  // training-corpus word without a vector: tunable, uniform(-0.05, 0.05)
  LookupResult<double> zyx = lookup(table, v, "zyx", Phase::Train);
  CHECK(zyx.tunable);
  for (int i = 0; i < 3; ++i) {
    CHECK(zyx.vector(i, 0) > -0.05);
    CHECK(zyx.vector(i, 0) < 0.05);
  }
  // the delimiter is treated the same way
  LookupResult<double> delim = lookup(table, v, Vocabulary::kDelim, Phase::Train);
  CHECK(delim.tunable);

  // unseen token at inference: deterministic, bounded, never tunable
  LookupResult<double> oov1 = lookup(table, v, "qwerty", Phase::Inference);
  LookupResult<double> oov2 = lookup(table, v, "qwerty", Phase::Inference);
  CHECK(!oov1.tunable);
  CHECK(oov1.vocab_index == -1);
  for (int i = 0; i < 3; ++i) {
    CHECK(oov1.vector(i, 0) == oov2.vector(i, 0));
    CHECK(std::abs(oov1.vector(i, 0)) < 0.05);
  }
  CHECK(lookup(table, v, "asdf", Phase::Inference).vector.data != oov1.vector.data);

  // same seed rebuild reproduces the tunable rows exactly
  EmbeddingTable<double> again = EmbeddingTable<double>::build(v, 3, &pre, 99);
  CHECK(again.table.data == table.table.data);

  CHECK(table.tunable_rows() == 2);  // zyx + delimiter (the placeholder row is frozen)
  CHECK(table.tunable_value_count() == 6);
}

TEST_CASE("projection maps word vectors to the hidden size") {
  const int d = 4, k = 4;
  ParameterSet<double> params;
  params.add("proj/W", Mat<double>(k, d));
  params.add("proj/b", Mat<double>(k, 1));
  Rng rng(61);
  Mat<double> x = random_mat(d, 1, rng);

  {
    Tape<double> tape;
    GraphBinder<double> binder(tape);
    Tensor<double> out = project(binder, params, Tensor<double>::constant(x));
    for (int i = 0; i < k; ++i) CHECK(out.value()(i, 0) == 0.0);
  }
  params.at("proj/W") = Mat<double>::identity(k);
  {
    Tape<double> tape;
    GraphBinder<double> binder(tape);
    Tensor<double> out = project(binder, params, Tensor<double>::constant(x));
    for (int i = 0; i < k; ++i) CHECK(out.value()(i, 0) == doctest::Approx(x(i, 0)));
  }
  params.at("proj/W") = random_mat(k, d, rng);
  params.at("proj/b") = random_mat(k, 1, rng);
  {
    Tape<double> tape;
    GraphBinder<double> binder(tape);
    Tensor<double> out = project(binder, params, Tensor<double>::constant(x));
    for (int i = 0; i < k; ++i) {
      double expect = params.at("proj/b")(i, 0);
      for (int j = 0; j < d; ++j) expect += params.at("proj/W")(i, j) * x(j, 0);
      CHECK(out.value()(i, 0) == doctest::Approx(expect).epsilon(1e-6));
    }
    CHECK_THROWS_AS(project(binder, params, Tensor<double>::constant(Mat<double>(d + 1, 1))),
                    DimensionError);
  }
}
