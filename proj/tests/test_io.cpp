#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "drsf/io.hpp"

using drsf::CovariateInfo;
using drsf::CovariateKind;
using drsf::SurvivalDataset;

namespace {

const std::string kSmallCsv =
    "id,time,event,treatment,age,grp\n"
    "1,5.5,1,0,63,a\n"
    "2,3.25,0,1,41,b\n"
    "3,10,1,1,55,a\n";

drsf::TreeNode terminal_node(int id) {
  drsf::TreeNode node;
  node.is_terminal = true;
  node.terminal_id = id;
  return node;
}

drsf::TreeNode split_node(int variable, double threshold, int left, int right) {
  drsf::TreeNode node;
  node.is_terminal = false;
  node.split.variable = variable;
  node.split.threshold = threshold;
  node.left = left;
  node.right = right;
  return node;
}

// Two-leaf profile with one defined and one undefined leaf effect.
drsf::ProfileResult two_leaf_profile() {
  drsf::ProfileResult profile;
  profile.tree.nodes = {split_node(0, 0.25, 1, 2), terminal_node(0), terminal_node(1)};
  profile.tree.n_leaves = 2;
  profile.tree.min_leaf_size = 120;
  profile.k = 3;
  profile.num_leaves = 2;
  profile.p_leaf = 0.004;
  profile.metric = 0.004;
  profile.heterogeneous = true;
  drsf::LeafEffect defined;
  defined.leaf = 0;
  defined.n_treatment = 50;
  defined.n_control = 50;
  defined.events_treatment = 10;
  defined.events_control = 20;
  defined.hazard_ratio = 0.5;
  defined.logrank_p = 0.001;
  defined.defined = true;
  drsf::LeafEffect undefined;
  undefined.leaf = 1;
  undefined.n_treatment = 0;
  undefined.n_control = 60;
  undefined.events_treatment = 0;
  undefined.events_control = 30;
  undefined.defined = false;
  profile.leaf_effects = {defined, undefined};
  return profile;
}

std::string broken_rows(int n, int bad_row) {
  std::string text = "id,time,event,treatment,age\n";
  for (int i = 1; i <= n; ++i) {
    const std::string time = i == bad_row ? "-1" : "5";
    text += std::to_string(i) + "," + time + ",1,0,40\n";
  }
  return text;
}

}  // namespace

TEST_CASE("sha256 matches the published test vectors") {
  CHECK(drsf::sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(drsf::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  // one-byte change, completely different digest
  CHECK(drsf::sha256_hex("abd") != drsf::sha256_hex("abc"));
}

TEST_CASE("csv ingestion infers kinds and parses the mandatory columns") {
  const SurvivalDataset data = drsf::dataset_from_csv(kSmallCsv);
  CHECK(data.n() == 3);
  CHECK(data.p() == 2);
  CHECK(data.time(0) == 5.5);
  CHECK(data.time(2) == 10.0);
  CHECK(data.event(0));
  CHECK_FALSE(data.event(1));
  CHECK(data.treatment(0) == 0);
  CHECK(data.treatment(1) == 1);
  CHECK(data.schema()[0].kind == CovariateKind::Numeric);
  CHECK(data.schema()[0].name == "age");
  CHECK(data.schema()[1].kind == CovariateKind::Categorical);
  CHECK(data.schema()[1].level_names == std::vector<std::string>{"a", "b"});
  CHECK(data.covariate(0, 0) == 63.0);
  CHECK(data.covariate(0, 1) == 0.0);  // a
  CHECK(data.covariate(1, 1) == 1.0);  // b
}

TEST_CASE("csv writer reproduces the canonical bytes and round-trips") {
  const SurvivalDataset data = drsf::dataset_from_csv(kSmallCsv);
  const std::string text = drsf::dataset_to_csv(data);
  CHECK(text == kSmallCsv);
  CHECK(drsf::dataset_from_csv(text) == data);
}

TEST_CASE("numeric round-trip is exact for awkward doubles") {
  const std::vector<double> awkward = {0.1, 1.0 / 3.0, 1e-300, 12345.678901234567,
                                       std::exp(1.0)};
  std::string text = "id,time,event,treatment,x\n";
  for (std::size_t i = 0; i < awkward.size(); ++i) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", awkward[i]);
    text += std::to_string(i + 1) + "," + buffer + ",1,0," + buffer + "\n";
  }
  const SurvivalDataset data = drsf::dataset_from_csv(text);
  for (std::size_t i = 0; i < awkward.size(); ++i) {
    CHECK(data.time(static_cast<Eigen::Index>(i)) == awkward[i]);
    CHECK(data.covariate(static_cast<Eigen::Index>(i), 0) == awkward[i]);
  }
  CHECK(drsf::dataset_from_csv(drsf::dataset_to_csv(data)) == data);
}

TEST_CASE("mixed cells fall back to categorical with lexicographic levels") {
  const SurvivalDataset data = drsf::dataset_from_csv(
      "id,time,event,treatment,lab\n"
      "1,5,1,0,1\n"
      "2,6,1,1,x\n"
      "3,7,0,1,1\n");
  CHECK(data.schema()[0].kind == CovariateKind::Categorical);
  CHECK(data.schema()[0].level_names == std::vector<std::string>{"1", "x"});
  CHECK(data.covariate(0, 0) == 0.0);
  CHECK(data.covariate(1, 0) == 1.0);
}

TEST_CASE("declared schema overrides inference and keeps its level order") {
  const std::vector<CovariateInfo> schema = {
      CovariateInfo::numeric("age"), CovariateInfo::categorical("grp", {"b", "a"})};
  const SurvivalDataset data = drsf::dataset_from_csv(kSmallCsv, schema);
  CHECK(data.covariate(0, 1) == 1.0);  // a is level 1 under the declared order
  CHECK(data.covariate(1, 1) == 0.0);
  CHECK(data.schema() == schema);

  SUBCASE("wrong names or width are rejected") {
    const std::vector<CovariateInfo> misnamed = {CovariateInfo::numeric("age"),
                                                 CovariateInfo::numeric("group")};
    CHECK_THROWS_WITH(drsf::dataset_from_csv(kSmallCsv, misnamed),
                      "schema does not match header");
    CHECK_THROWS_WITH(drsf::dataset_from_csv(kSmallCsv, {CovariateInfo::numeric("age")}),
                      "schema does not match header");
  }
  SUBCASE("unseen level is an error") {
    const std::vector<CovariateInfo> narrow = {
        CovariateInfo::numeric("age"), CovariateInfo::categorical("grp", {"a"})};
    CHECK_THROWS_WITH(drsf::dataset_from_csv(kSmallCsv, narrow),
                      "unknown level \"b\" at row 2, column \"grp\"");
  }
}

TEST_CASE("csv validation errors carry data-row coordinates") {
  CHECK_THROWS_WITH(drsf::dataset_from_csv(broken_rows(7, 7)),
                    "negative time at row 7, column \"time\"");
  CHECK_THROWS_WITH(drsf::dataset_from_csv(broken_rows(3, 2)),
                    "negative time at row 2, column \"time\"");
  CHECK_THROWS_WITH(drsf::dataset_from_csv("id,time,event\n1,5,1\n"),
                    "missing column \"treatment\"");
  CHECK_THROWS_WITH(drsf::dataset_from_csv("time,id,event,treatment\n5,1,1,0\n"),
                    "missing column \"id\"");
  CHECK_THROWS_WITH(
      drsf::dataset_from_csv("id,time,event,treatment\n1,5,2,0\n"),
      "event must be 0 or 1 at row 1, column \"event\"");
  CHECK_THROWS_WITH(
      drsf::dataset_from_csv("id,time,event,treatment\n1,5,1,0\n2,5,1,0.5\n"),
      "treatment must be 0 or 1 at row 2, column \"treatment\"");
  CHECK_THROWS_WITH(
      drsf::dataset_from_csv("id,time,event,treatment,age\n1,5,1,0\n"),
      "wrong field count at row 1");
  CHECK_THROWS_WITH(
      drsf::dataset_from_csv("id,time,event,treatment,age\n1,5,1,0,40\n2,5,1,0,\n"),
      "missing value at row 2, column \"age\"");
  CHECK_THROWS_WITH(
      drsf::dataset_from_csv("id,time,event,treatment\n1,abc,1,0\n"),
      "unparsable number at row 1, column \"time\"");
  CHECK_THROWS_WITH(drsf::dataset_from_csv(""), "missing header");
  CHECK_THROWS_WITH(drsf::dataset_from_csv("\n\n"), "missing header");
  CHECK_THROWS_WITH(drsf::dataset_from_csv("id,time,event,treatment\n"), "no data rows");

  std::string wide = "id,time,event,treatment,lab\n";
  for (int i = 1; i <= 11; ++i)
    wide += std::to_string(i) + ",5,1,0,v" + std::to_string(i) + "\n";
  CHECK_THROWS_WITH(drsf::dataset_from_csv(wide),
                    "more than 10 distinct values in column \"lab\"");
}

TEST_CASE("csv files survive an export/ingest cycle") {
  std::filesystem::create_directories("io_tmp");
  const SurvivalDataset data = drsf::dataset_from_csv(kSmallCsv);
  drsf::export_csv(data, "io_tmp/small.csv");
  CHECK(drsf::ingest_csv("io_tmp/small.csv") == data);
  CHECK(drsf::sha256_file("io_tmp/small.csv") == drsf::sha256_hex(kSmallCsv));
  CHECK_THROWS_WITH(drsf::ingest_csv("io_tmp/absent.csv"),
                    "cannot open file: io_tmp/absent.csv");
}

TEST_CASE("proximity files round-trip bit for bit") {
  std::filesystem::create_directories("io_tmp");
  drsf::FusedProximity fused;
  fused.values.resize(2, 3);
  fused.values << 0.1, 1.0 / 3.0, 0.0, 1.0, std::numeric_limits<double>::denorm_min(),
      0.9999999999999999;
  fused.total_trees = 2000;
  fused.config_count = 4;
  drsf::write_proximity(fused, "io_tmp/prox.bin");

  CHECK(std::filesystem::file_size("io_tmp/prox.bin") == 40 + 8 * 2 * 3);
  const drsf::FusedProximity back = drsf::read_proximity("io_tmp/prox.bin");
  CHECK(back.total_trees == 2000);
  CHECK(back.config_count == 4);
  CHECK(back.values.rows() == 2);
  CHECK(back.values.cols() == 3);
  CHECK((back.values.array() == fused.values.array()).all());

  SUBCASE("corrupt magic is rejected") {
    std::string bytes = drsf::read_file("io_tmp/prox.bin");
    bytes[0] = 'X';
    drsf::write_file("io_tmp/bad_magic.bin", bytes);
    CHECK_THROWS_WITH(drsf::read_proximity("io_tmp/bad_magic.bin"),
                      "bad proximity magic");
  }
  SUBCASE("truncation is rejected") {
    const std::string bytes = drsf::read_file("io_tmp/prox.bin");
    drsf::write_file("io_tmp/short1.bin", bytes.substr(0, 39));
    CHECK_THROWS_WITH(drsf::read_proximity("io_tmp/short1.bin"),
                      "truncated proximity file");
    drsf::write_file("io_tmp/short2.bin", bytes.substr(0, bytes.size() - 1));
    CHECK_THROWS_WITH(drsf::read_proximity("io_tmp/short2.bin"),
                      "truncated proximity file");
  }
  SUBCASE("trailing bytes are rejected") {
    drsf::write_file("io_tmp/long.bin", drsf::read_file("io_tmp/prox.bin") + "z");
    CHECK_THROWS_WITH(drsf::read_proximity("io_tmp/long.bin"),
                      "trailing bytes in proximity file");
  }
}

TEST_CASE("profile json round-trips including undefined leaf effects") {
  const drsf::ProfileResult profile = two_leaf_profile();
  const std::vector<CovariateInfo> schema = {CovariateInfo::numeric("age")};
  const std::string text = drsf::profile_to_json(profile, schema, 0.01);

  CHECK(text.find("\"format\": \"drsf-profile/1\"") != std::string::npos);
  CHECK(text.find("\"hazard_ratio\": null") != std::string::npos);
  CHECK(text.back() == '\n');

  const drsf::ProfileResult back = drsf::profile_from_json(text);
  CHECK(back.heterogeneous == profile.heterogeneous);
  CHECK(back.k == profile.k);
  CHECK(back.num_leaves == profile.num_leaves);
  CHECK(back.p_leaf == profile.p_leaf);
  CHECK(back.metric == profile.metric);
  CHECK(back.tree.n_leaves == 2);
  CHECK(back.tree.min_leaf_size == 120);
  REQUIRE(back.tree.nodes.size() == 3);
  CHECK_FALSE(back.tree.nodes[0].is_terminal);
  CHECK(back.tree.nodes[0].split.variable == 0);
  CHECK(back.tree.nodes[0].split.threshold == 0.25);
  CHECK(back.tree.nodes[0].left == 1);
  CHECK(back.tree.nodes[0].right == 2);
  CHECK(back.tree.nodes[1].terminal_id == 0);
  CHECK(back.tree.nodes[2].terminal_id == 1);
  REQUIRE(back.leaf_effects.size() == 2);
  CHECK(back.leaf_effects[0].hazard_ratio == 0.5);
  CHECK(back.leaf_effects[0].logrank_p == 0.001);
  CHECK(back.leaf_effects[0].defined);
  CHECK(std::isnan(back.leaf_effects[1].hazard_ratio));
  CHECK(std::isnan(back.leaf_effects[1].logrank_p));
  CHECK_FALSE(back.leaf_effects[1].defined);

  SUBCASE("a different format marker is rejected") {
    std::string other = text;
    other.replace(other.find("drsf-profile/1"), 14, "drsf-profile/9");
    CHECK_THROWS_WITH(drsf::profile_from_json(other), "unknown profile format");
  }
  SUBCASE("serialization is deterministic") {
    CHECK(drsf::profile_to_json(profile, schema, 0.01) == text);
  }
}

TEST_CASE("profile text rendering is stable") {
  const std::vector<CovariateInfo> schema = {CovariateInfo::numeric("age")};
  const std::string want =
      "verdict: heterogeneous\n"
      "p_leaf = 0.004 < p* = 0.01, clusters k = 3, leaves = 2\n"
      "\n"
      "age <= 0.25:\n"
      "  leaf 0: treatment 10/50 events, control 20/50 events, HR = 0.5, "
      "log-rank p = 0.001\n"
      "age > 0.25:\n"
      "  leaf 1: effect undefined (treatment n=0, control n=60)\n";
  CHECK(drsf::render_profile_text(two_leaf_profile(), schema, 0.01) == want);

  SUBCASE("homogeneous single-leaf rendering") {
    drsf::ProfileResult flat;
    flat.tree.nodes = {terminal_node(0)};
    flat.tree.n_leaves = 1;
    CHECK(drsf::render_profile_text(flat, schema, 0.01) ==
          "verdict: homogeneous\n"
          "no candidate p_leaf below p* = 0.01\n"
          "\n"
          "leaf 0\n");
  }
}

TEST_CASE("ecdf csv lists sorted sample points with step probabilities") {
  CHECK(drsf::ecdf_csv({0.5, 0.25}) == "value,probability\n0.25,0.5\n0.5,1\n");
  CHECK(drsf::ecdf_csv({2.0, 2.0}) == "value,probability\n2,0.5\n2,1\n");
  CHECK(drsf::ecdf_csv({3.0, 1.0, 2.0}) ==
        "value,probability\n"
        "1,0.33333333333333331\n"
        "2,0.66666666666666663\n"
        "3,1\n");
  CHECK_THROWS_WITH(drsf::ecdf_csv({}), "empty value list");
}

TEST_CASE("gradient csv is a 301 by 301 table at six decimals") {
  drsf::GradientGrid grid;
  grid.values(0, 1) = 0.765432109;
  const std::string text = drsf::gradient_csv(grid);

  std::istringstream in(text);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    if (lines == 0) {
      CHECK(line.substr(0, 17) == "0.000000,0.765432");
      CHECK(std::count(line.begin(), line.end(), ',') == 300);
    }
    ++lines;
  }
  CHECK(lines == 301);
}

TEST_CASE("gradient pgm flips rows so the top is the upper end") {
  drsf::GradientGrid grid;
  grid.values(5, 300) = 1.0;   // (first = 5 * 0.01 - 1.5, second = +1.5)
  grid.values(0, 0) = -1.0;    // lower-left corner
  const std::string text = drsf::gradient_pgm(grid);

  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "P2");
  std::getline(in, line);
  CHECK(line == "301 301");
  std::getline(in, line);
  CHECK(line == "255");

  std::vector<std::vector<int>> pixels;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::vector<int> row;
    int value = 0;
    while (cells >> value) row.push_back(value);
    pixels.push_back(row);
  }
  REQUIRE(pixels.size() == 301);
  REQUIRE(pixels[0].size() == 301);
  CHECK(pixels[0][5] == 255);    // +1 at the second covariate's max -> top row
  CHECK(pixels[300][0] == 0);    // -1 at the minimum corner -> bottom-left
  CHECK(pixels[0][0] == 128);    // untouched cells sit at the zero level
  CHECK(pixels[150][150] == 128);
}

TEST_CASE("config text parses sections, comments and duplicates") {
  const drsf::ConfigDoc doc = drsf::parse_config_text(
      "# top comment\n"
      "seed = 7\n"
      "scenario = null  # inline\n"
      "\r\n"
      "[grid]\r\n"
      "mtry = 1 2\n"
      "ntree = 25\n"
      "ntree = 50\n"
      "[empty]\n");
  CHECK(doc.at("").at("seed") == "7");
  CHECK(doc.at("").at("scenario") == "null");
  CHECK(doc.at("grid").at("mtry") == "1 2");
  CHECK(doc.at("grid").at("ntree") == "50");  // last duplicate wins
  CHECK(doc.at("empty").empty());
  CHECK(drsf::parse_config_text("").empty());

  CHECK_THROWS_WITH(drsf::parse_config_text("seed = 1\nnot a pair\n"),
                    "bad config line 2");
  CHECK_THROWS_WITH(drsf::parse_config_text("[grid\n"), "bad config line 1");
  CHECK_THROWS_WITH(drsf::parse_config_text("[]\n"), "bad config line 1");
  CHECK_THROWS_WITH(drsf::parse_config_text("= 3\n"), "bad config line 1");
}
