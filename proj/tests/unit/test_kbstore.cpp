#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "emql/errors.hpp"
#include "emql/kbstore.hpp"
#include "helpers.hpp"

namespace emql {
namespace {

KnowledgeBase parse(const std::string& text, const LoadOptions& o = {}) {
  std::istringstream in(text);
  return parse_kb(in, o);
}

TEST(Vocab, AssignsDenseIdsAndRejectsUnknownNames) {
  Vocab v;
  EXPECT_EQ(v.add_entity("a"), 0u);
  EXPECT_EQ(v.add_entity("b"), 1u);
  EXPECT_EQ(v.add_entity("a"), 0u);
  EXPECT_EQ(v.add_relation("p"), 0u);
  EXPECT_EQ(v.entity_id("b"), 1u);
  EXPECT_EQ(v.entity_name(1), "b");
  EXPECT_THROW(v.entity_id("zzz"), UnknownNameError);
  EXPECT_THROW(v.relation_id("q"), UnknownNameError);
  EXPECT_FALSE(v.find_entity("zzz").has_value());
}

TEST(ParseKb, ReadsTriplesAndSkipsBlankLines) {
  const auto kb = parse("Apple_Inc\theadquarters_of\tCupertino\n\nGoogle\theadquarters_of\tMountain_View\n");
  EXPECT_EQ(kb.num_entities(), 4u);
  EXPECT_EQ(kb.num_relations(), 1u);
  ASSERT_EQ(kb.triples.size(), 2u);
  const auto hq = kb.vocab.relation_id("headquarters_of");
  EXPECT_EQ(kb.triples[0], (Triple{hq, kb.vocab.entity_id("Apple_Inc"), kb.vocab.entity_id("Cupertino")}));
}

TEST(ParseKb, DuplicatesCollapse) {
  const auto kb = parse("a\tp\tb\na\tp\tb\nb\tp\ta\n");
  EXPECT_EQ(kb.triples.size(), 2u);
}

TEST(ParseKb, MalformedLineReportsLineNumber) {
  try {
    parse("a\tp\tb\nc\td\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse("a\tp\t\n"), ParseError);
  EXPECT_THROW(parse("a\tp\tb\tc\n"), ParseError);
}

TEST(ParseKb, EmptyInputThrows) {
  EXPECT_THROW(parse(""), EmptyKbError);
  EXPECT_THROW(parse("\n\n"), EmptyKbError);
}

TEST(ParseKb, MaxFanoutDropsWholeGroups) {
  LoadOptions o;
  o.max_fanout = 2;
  const auto kb = parse("a\tp\tx\na\tp\ty\na\tp\tz\nb\tp\tx\na\tq\tx\n", o);
  EXPECT_EQ(kb.triples.size(), 2u);
  const auto a = kb.vocab.entity_id("a");
  const auto p = kb.vocab.relation_id("p");
  for (const auto& t : kb.triples) EXPECT_FALSE(t.subject == a && t.relation == p);
}

TEST(ParseKb, InverseRelations) {
  LoadOptions o;
  o.add_inverses = true;
  const auto kb = parse("a\tp\tb\n", o);
  EXPECT_EQ(kb.num_relations(), 2u);
  const auto inv = kb.vocab.relation_id("p_inv");
  EXPECT_EQ(kb.triples.size(), 2u);
  EXPECT_NE(std::find(kb.triples.begin(), kb.triples.end(),
                      Triple{inv, kb.vocab.entity_id("b"), kb.vocab.entity_id("a")}),
            kb.triples.end());
}

TEST(ParseKb, WriteReadRoundTrip) {
  const auto kb = parse("a\tp\tb\nb\tq\tc\nc\tp\ta\n");
  std::stringstream buf;
  write_kb(buf, kb.vocab, kb.triples);
  const auto back = parse_kb(buf);
  EXPECT_EQ(back.triples, kb.triples);
  EXPECT_EQ(back.num_entities(), kb.num_entities());
}

TEST(LoadKb, ReadsExampleFile) {
  const auto kb = load_kb(std::string(EMQL_EXAMPLE_DATA_DIR) + "/apple.tsv");
  EXPECT_TRUE(kb.vocab.find_entity("Cupertino").has_value());
  EXPECT_THROW(load_kb("/nonexistent/kb.tsv"), Error);
}

TEST(KbSplit, HeldOutIsFullMinusTraining) {
  KbSplit s;
  s.full = {{0, 0, 1}, {0, 1, 2}, {1, 2, 0}};
  s.training = {{0, 0, 1}};
  EXPECT_EQ(s.held_out(), (std::vector<Triple>{{0, 1, 2}, {1, 2, 0}}));
}

TEST(TripleStore, RejectsOutOfRangeTriples) {
  EXPECT_THROW(TripleStore(2, 1, {{0, 0, 2}}, 4), UniverseError);
  EXPECT_THROW(TripleStore(2, 1, {{1, 0, 1}}, 4), UniverseError);
}

TEST(TripleStore, InitializationIsSeededAndBounded) {
  TripleStore a(10, 3, {{0, 1, 2}}, 16), b(10, 3, {{0, 1, 2}}, 16), c(10, 3, {{0, 1, 2}}, 16);
  a.initialize_embeddings(5);
  b.initialize_embeddings(5);
  c.initialize_embeddings(6);
  EXPECT_EQ(a.entities(), b.entities());
  EXPECT_EQ(a.relations(), b.relations());
  EXPECT_FALSE(a.entities() == c.entities());
  const float bound = 1.0f / std::sqrt(16.0f);
  for (float v : a.entities().data()) EXPECT_LE(std::abs(v), bound);
}

TEST(TripleStore, TripleMatrixRowsConcatenateEmbeddings) {
  std::mt19937_64 rng(1);
  const std::vector<Triple> triples = {{0, 1, 2}, {1, 2, 0}, {0, 0, 0}};
  TripleStore s(3, 2, triples, 3);
  s.set_embeddings(test::random_matrix(rng, 3, 3), test::random_matrix(rng, 2, 3));
  s.build_triple_matrix();
  const Matrix& k = s.triple_matrix();
  ASSERT_EQ(k.rows(), 3u);
  ASSERT_EQ(k.cols(), 9u);
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(k(t, c), s.relations()(triples[t].relation, c));
      EXPECT_EQ(k(t, 3 + c), s.entities()(triples[t].subject, c));
      EXPECT_EQ(k(t, 6 + c), s.entities()(triples[t].object, c));
    }
  }
}

TEST(TripleStore, StaleAndUninitializedStates) {
  TripleStore s(3, 1, {{0, 0, 1}}, 4);
  EXPECT_THROW(s.build_triple_matrix(), UninitializedEmbeddingError);
  s.initialize_embeddings(1);
  EXPECT_THROW(s.triple_matrix(), StaleTripleMatrixError);
  s.build_triple_matrix();
  EXPECT_NO_THROW(s.triple_matrix());
  s.mutable_entities()(0, 0) += 1.0f;
  EXPECT_FALSE(s.triple_matrix_current());
  EXPECT_THROW(s.triple_matrix(), StaleTripleMatrixError);
  s.build_triple_matrix();
  EXPECT_EQ(s.triple_matrix()(0, 4), s.entities()(0, 0));
}

TEST(TripleStore, SetEmbeddingsChecksShape) {
  TripleStore s(3, 1, {{0, 0, 1}}, 4);
  EXPECT_THROW(s.set_embeddings(Matrix(3, 5), Matrix(1, 4)), ShapeError);
  EXPECT_THROW(s.set_embeddings(Matrix(2, 4), Matrix(1, 4)), ShapeError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  TripleStore s(7, 2, {{0, 0, 1}}, 5);
  s.initialize_embeddings(99);
  std::stringstream buf;
  write_checkpoint(buf, s);
  const Checkpoint ck = read_checkpoint(buf);
  EXPECT_EQ(ck.entities, s.entities());
  EXPECT_EQ(ck.relations, s.relations());
  EXPECT_EQ(ck.seed, 99u);

  test::TempDir dir;
  save_checkpoint(dir / "e.bin", s);
  EXPECT_EQ(load_checkpoint(dir / "e.bin").entities, s.entities());
}

TEST(Checkpoint, RejectsGarbage) {
  std::stringstream bad("not a checkpoint");
  EXPECT_THROW(read_checkpoint(bad), FormatError);
}

}  // namespace
}  // namespace emql
