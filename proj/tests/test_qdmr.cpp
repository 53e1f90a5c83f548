#include "mhqg/error.hpp"
#include "mhqg/qdmr.hpp"

#include <doctest.h>

#include <filesystem>

using namespace mhqg;

namespace {

LinkedTableContext grand_prix() {
  return load_table_corpus(std::filesystem::path(MHQG_FIXTURE_DIR) / "tables.json").at(0);
}

// Backend whose translator echoes the step count.
class EchoTranslator final : public Backend {
 protected:
  std::string do_gen_question_with_answer(std::string_view, std::string_view) const override { return "?"; }
  GeneratedQuestion do_gen_question_with_entity(std::string_view, std::string_view) const override { return {}; }
  std::string do_describe_entity(std::string_view, std::string_view) const override { return ""; }
  std::string do_fill_mask(std::string_view, EntityType) const override { return ""; }
  double do_perplexity(std::string_view) const override { return 1.0; }
  std::string do_qdmr_to_question(const std::vector<std::string>& steps) const override {
    return "What has " + std::to_string(steps.size()) + " steps?";
  }
};

}  // namespace

TEST_CASE("table-to-text program") {
  auto progs = make_qdmr(grand_prix(), GraphKind::TableToText, 0);
  REQUIRE(progs.size() == 1);
  CHECK(progs[0].steps == std::vector<std::string>{"Return Driver", "Return #1 in Pos 4",
                                                   "Return #2 in 2004 United States Grand Prix",
                                                   "Return what is the birthdate of #3"});
  CHECK(check_qdmr(progs[0]).empty());
  CHECK(realize(progs[0]) == "What is the birthdate of the Driver that Pos is 4 in 2004 United States Grand Prix?");
}

TEST_CASE("text-to-table program") {
  auto progs = make_qdmr(grand_prix(), GraphKind::TextToTable, 0);
  REQUIRE(progs.size() == 1);
  CHECK(progs[0].steps[2] == "Return #2 that born 19 January 1980");
  CHECK(progs[0].steps[3] == "Return what is the Pos of #3");
  CHECK(realize(progs[0]) == "What is the Pos of the Driver in 2004 United States Grand Prix that born 19 January 1980?");
}

TEST_CASE("structure requirements") {
  auto ctx = grand_prix();
  ctx.table.headers = {"Driver"};
  for (auto& row : ctx.table.rows) row.resize(1);
  CHECK_THROWS_AS(make_qdmr(ctx, GraphKind::TableToText), InsufficientStructure);
  auto empty = grand_prix();
  empty.table.rows.clear();
  CHECK_THROWS_AS(make_qdmr(empty, GraphKind::TableToText), InsufficientStructure);
  CHECK_THROWS_AS(make_qdmr(grand_prix(), GraphKind::Comparison), PreconditionError);
}

TEST_CASE("reference checks") {
  QdmrProgram p;
  CHECK(!check_qdmr(p).empty());
  CHECK_THROWS_AS(realize(p), PreconditionError);
  p.steps = {"Return #1", "Return #1 in X"};
  CHECK(check_qdmr(p).size() == 1);
  p.steps = {"Return A", "Return #3 in X", "Return #2"};
  CHECK(check_qdmr(p).size() == 1);
  p.steps = {"Return A", "Return #1 in X"};
  CHECK(check_qdmr(p).empty());
}

TEST_CASE("remote translator path") {
  auto progs = make_qdmr(grand_prix(), GraphKind::TableToText);
  EchoTranslator t;
  CHECK(realize(progs[0], &t) == "What has 4 steps?");
  StubBackend stub;
  CHECK_THROWS_AS(realize(progs[0], &stub), BackendUnavailable);
}
