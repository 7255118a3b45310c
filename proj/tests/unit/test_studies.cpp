#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cbound/studies.hpp"

using namespace cbound;

namespace {

ErrorCategory category_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCategory::Io;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("cbound_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

StudyConfig small_config(const std::string& out) {
  StudyConfig c;
  c.datasets = {std::string(CBOUND_SOURCE_DIR) + "/data/iris.csv", std::string(CBOUND_SOURCE_DIR) + "/data/wine.csv"};
  c.rounds = {3, 10};
  c.depths = {1, 2};
  c.output_dir = out;
  return c;
}

}  // namespace

TEST(Csv, FourRowsThreeClasses) {
  const auto d = parse_csv("f1,f2,label\n1,2,x\n3,4,y\n5,6,z\n7,8,x\n", {});
  EXPECT_EQ(d.size(), 4u);
  EXPECT_EQ(d.space().q(), 3u);
  EXPECT_EQ(d.num_features(), 2u);
  EXPECT_EQ(d.row(1)[1], 4.0);
}

TEST(Csv, FirstAppearanceMapping) {
  const auto d = parse_csv("v,c\n0.5,a\n1.5,b\n2.5,a\n", {});
  EXPECT_EQ(d.class_names(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.label(0), Label::cls(0));
  EXPECT_EQ(d.label(1), Label::cls(1));
  EXPECT_EQ(d.label(2), Label::cls(0));
}

TEST(Csv, MissingCellNamesLocation) {
  try {
    parse_csv("a,b,c\n1,2,x\n3,,y\n", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Parse);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  }
  EXPECT_EQ(category_of([] { parse_csv("a,b\n1,x\n?,y\n", {}); }), ErrorCategory::Parse);
  EXPECT_EQ(category_of([] { parse_csv("a,b\n1,x\nfoo,y\n", {}); }), ErrorCategory::Parse);
  EXPECT_EQ(category_of([] { parse_csv("a,b\n1,x\n2,y,3\n", {}); }), ErrorCategory::Parse);
}

TEST(Csv, SingleClassAndEmptyInputs) {
  EXPECT_EQ(category_of([] { parse_csv("a,b\n1,x\n2,x\n", {}); }), ErrorCategory::Degenerate);
  EXPECT_EQ(category_of([] { parse_csv("a,b\n", {}); }), ErrorCategory::EmptyDataset);
  EXPECT_EQ(category_of([] { load_csv("/nonexistent/file.csv"); }), ErrorCategory::Io);
}

TEST(Csv, SchemaOptions) {
  CsvSchema s;
  s.header = false;
  s.label_column = 0;
  s.classes = {"n", "p"};
  const auto d = parse_csv("p,1,2\nn,3,4\r\n", s);
  EXPECT_EQ(d.label(0), Label::cls(1));
  EXPECT_EQ(d.row(1)[0], 3.0);
  EXPECT_EQ(category_of([&] { parse_csv("q,1,2\nn,3,4\n", s); }), ErrorCategory::Parse);
  s.feature_columns = {2};
  EXPECT_EQ(parse_csv("p,1,2\nn,3,4\n", s).num_features(), 1u);
}

TEST(Csv, BundledDatasets) {
  const std::string dir = CBOUND_SOURCE_DIR;
  EXPECT_EQ(load_csv(dir + "/data/iris.csv").size(), 150u);
  EXPECT_EQ(load_csv(dir + "/data/wine.csv").space().q(), 3u);
  EXPECT_EQ(load_csv(dir + "/data/digits.csv").num_features(), 64u);
  EXPECT_EQ(load_csv(dir + "/data/blobs5.csv").space().q(), 5u);
}

TEST(Split, HalvesAndDeterminism) {
  std::ostringstream csv;
  csv << "x,y\n";
  for (int i = 0; i < 100; ++i) csv << i << "," << (i % 2 == 0 ? "a" : "b") << "\n";
  const auto d = parse_csv(csv.str(), {});
  const auto s1 = split(d, 0.5, 42);
  const auto s2 = split(d, 0.5, 42);
  EXPECT_EQ(s1.train.size(), 50u);
  EXPECT_EQ(s1.test.size(), 50u);
  EXPECT_TRUE(s1.stratified);
  EXPECT_EQ(s1.train.features(), s2.train.features());
  EXPECT_EQ(s1.test.features(), s2.test.features());
  EXPECT_NE(split(d, 0.5, 43).train.features(), s1.train.features());
  std::size_t a = 0;
  for (const auto& l : s1.train.labels()) a += l.index() == 0;
  EXPECT_EQ(a, 25u);
}

TEST(Split, FallsBackWhenAClassIsTiny) {
  const auto d = parse_csv("x,y\n1,a\n2,a\n3,a\n4,b\n5,a\n6,a\n", {});
  const auto s = split(d, 0.5, 1);
  EXPECT_FALSE(s.stratified);
  EXPECT_EQ(s.train.size() + s.test.size(), 6u);
}

TEST(Split, Errors) {
  const auto d = parse_csv("x,y\n1,a\n2,b\n", {});
  EXPECT_NO_THROW(split(d, 0.5, 1));
  EXPECT_EQ(category_of([&] { split(d.subset(std::vector<std::size_t>{0}), 0.5, 1); }), ErrorCategory::InvalidParameter);
  EXPECT_EQ(category_of([&] { split(d, 1.0, 1); }), ErrorCategory::InvalidParameter);
}

TEST(Pearson, ClosedForms) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> lin, neg;
  for (double v : x) {
    lin.push_back(2 * v + 3);
    neg.push_back(-v);
  }
  EXPECT_NEAR(pearson(x, lin), 1.0, 1e-15);
  EXPECT_NEAR(pearson(x, neg), -1.0, 1e-15);
  EXPECT_NEAR(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 0.5, 1e-15);
  EXPECT_EQ(category_of([] { pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}); }),
            ErrorCategory::UndefinedCorrelation);
  EXPECT_EQ(category_of([] { pearson(std::vector<double>{1}, std::vector<double>{1}); }), ErrorCategory::UndefinedCorrelation);
  EXPECT_EQ(category_of([] { pearson(std::vector<double>{1, 2}, std::vector<double>{1}); }), ErrorCategory::DimensionMismatch);
}

TEST(StudyConfig, ParsesFlatDocument) {
  const auto c = parse_study_config(
      "# comment\n"
      "datasets = a.csv, /abs/b.csv\n"
      "rounds = 5, 7\n"
      "depths = 1\n"
      "omegas = 1/2, 1/Q   # trailing\n"
      "split_ratio = 0.6\n"
      "seed = 9\n"
      "delta = 0.1\n"
      "label_column = 0\n"
      "header = false\n"
      "output_dir = out\n",
      "/base");
  EXPECT_EQ(c.datasets, (std::vector<std::string>{"/base/a.csv", "/abs/b.csv"}));
  EXPECT_EQ(c.rounds, (std::vector<std::size_t>{5, 7}));
  EXPECT_EQ(c.depths, (std::vector<std::size_t>{1}));
  EXPECT_EQ(c.omegas.size(), 2u);
  EXPECT_EQ(c.split_ratio, 0.6);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.delta, 0.1);
  EXPECT_EQ(c.schema.label_column, std::optional<std::size_t>{0});
  EXPECT_FALSE(c.schema.header);
  EXPECT_EQ(c.output_dir, "/base/out");
}

TEST(StudyConfig, Defaults) {
  const StudyConfig c;
  EXPECT_EQ(c.split_ratio, 0.5);
  EXPECT_EQ(c.rounds, (std::vector<std::size_t>{100, 250, 500, 1000}));
  EXPECT_EQ(c.depths, (std::vector<std::size_t>{2, 3, 4, 5}));
  EXPECT_EQ(c.omegas.size(), 4u);
  EXPECT_EQ(c.delta, 0.05);
}

TEST(StudyConfig, Errors) {
  EXPECT_EQ(category_of([] { parse_study_config("colour = red\n"); }), ErrorCategory::Parse);
  EXPECT_EQ(category_of([] { parse_study_config("rounds = ten\n"); }), ErrorCategory::Parse);
  EXPECT_EQ(category_of([] { parse_study_config("just text\n"); }), ErrorCategory::Parse);
  EXPECT_EQ(category_of([] { parse_study_config("rounds =\n"); }), ErrorCategory::Parse);
  StudyConfig c;
  EXPECT_EQ(category_of([&] { validate(c); }), ErrorCategory::InvalidParameter);
  c.datasets = {"x.csv"};
  c.split_ratio = 1.0;
  EXPECT_EQ(category_of([&] { validate(c); }), ErrorCategory::InvalidParameter);
}

TEST(Study, SmallGridRunsAndHolds) {
  const auto out = scratch("small");
  const auto rep = run_study(small_config(out.string()));
  ASSERT_EQ(rep.rows.size(), 8u);
  EXPECT_EQ(rep.rows[0].dataset, "iris");
  EXPECT_EQ(rep.rows[0].rounds, 3u);
  EXPECT_EQ(rep.rows[1].depth, 2u);
  EXPECT_EQ(rep.rows[4].dataset, "wine");
  EXPECT_EQ(rep.bound_violations, 0u);
  for (const auto& row : rep.rows) {
    ASSERT_TRUE(row.report.has_value());
    EXPECT_EQ(row.report->m, 75u + (row.dataset == "wine" ? 14u : 0u));
    if (row.report->c_bound) {
      EXPECT_GE(*row.report->c_bound, row.report->risk_margin_rule);
    }
  }
  for (const auto& c : rep.correlations) {
    if (c.value) {
      EXPECT_GE(*c.value, -1.0);
      EXPECT_LE(*c.value, 1.0);
    }
  }
  EXPECT_EQ(rep.datasets[0].classes.size(), 3u);
  EXPECT_TRUE(rep.datasets[0].stratified);
}

TEST(Study, OutputsAreByteIdenticalAcrossRunsAndThreadCounts) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  setenv("CBOUND_THREADS", "1", 1);
  write_study_outputs(run_study(small_config(a.string())), a.string());
  setenv("CBOUND_THREADS", "3", 1);
  write_study_outputs(run_study(small_config(b.string())), b.string());
  unsetenv("CBOUND_THREADS");
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
  }
  EXPECT_GE(files, 10u);
  EXPECT_TRUE(std::filesystem::exists(a / "scatter_c_bound.csv"));
}

TEST(Study, ScatterHasOnePointPerRow) {
  const auto rep = run_study(small_config(""));
  for (std::size_t q = 0; q < rep.quantities.size(); ++q) {
    const auto text = scatter_csv(rep, q);
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), rep.rows.size() - rep.excluded + 1);
  }
}

TEST(Study, SingleRowHasUndefinedCorrelations) {
  auto c = small_config("");
  c.datasets.resize(1);
  c.rounds = {3};
  c.depths = {1};
  const auto rep = run_study(c);
  ASSERT_EQ(rep.rows.size(), 1u);
  for (const auto& corr : rep.correlations) {
    EXPECT_FALSE(corr.value.has_value());
    EXPECT_NE(corr.status, "ok");
  }
  for (const auto& o : rep.ordering) EXPECT_FALSE(o.holds.has_value());
}

TEST(Study, ConstantRiskSurfacesUndefinedCorrelation) {
  const auto dir = scratch("constant");
  std::ofstream f(dir / "sep.csv");
  f << "x,y\n";
  for (int i = 0; i < 40; ++i) f << (i % 2 == 0 ? i : 100 + i) << "," << (i % 2) << "\n";
  f.close();
  StudyConfig c;
  c.datasets = {(dir / "sep.csv").string()};
  c.rounds = {2, 5};
  c.depths = {1, 2};
  const auto rep = run_study(c);
  EXPECT_EQ(rep.rows.size(), 4u);
  for (const auto& row : rep.rows) EXPECT_EQ(row.report->risk_test, 0.0);
  for (const auto& corr : rep.correlations) {
    EXPECT_FALSE(corr.value.has_value()) << corr.quantity;
    EXPECT_NE(corr.status.find("constant"), std::string::npos);
  }
}

TEST(Study, DegenerateConfigurationIsExcluded) {
  const auto dir = scratch("degenerate");
  std::ofstream f(dir / "twins.csv");
  f << "x,y\n";
  for (int i = 0; i < 20; ++i) f << 0 << "," << (i % 2) << "\n";
  f.close();
  StudyConfig c;
  c.datasets = {(dir / "twins.csv").string()};
  c.rounds = {2};
  c.depths = {1, 2};
  const auto rep = run_study(c);
  EXPECT_EQ(rep.excluded, rep.rows.size());
  for (const auto& row : rep.rows) {
    EXPECT_TRUE(row.excluded);
    EXPECT_FALSE(row.note.empty());
  }
}

TEST(Study, MarginGeometryGrid) {
  const auto text = simplex_margin_grid_csv(0, 4, {0.5});
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), 1u + 15u);
  EXPECT_EQ(text.substr(0, text.find('\n')), "g0,g1,g2,margin,omega_margin[0.5]");
}
