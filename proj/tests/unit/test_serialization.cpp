#include <gtest/gtest.h>

#include <filesystem>

#include "cbound/format.hpp"
#include "cbound/learners.hpp"
#include "cbound/report.hpp"
#include "cbound/serialization.hpp"
#include "../support/samme_toy.hpp"

using namespace cbound;

TEST(Serialization, BoostedEnsembleRoundTrips) {
  const auto d = toy::samme_data();
  const auto e = train_samme(d, BoostConfig{6, 2, 0, 1}).ensemble();
  const auto j = ensemble_to_json(e, {"a", "b", "c"});
  const auto back = ensemble_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.classes, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(back.ensemble.rho(), e.rho());
  ASSERT_TRUE(back.ensemble.pi().has_value());
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(aggregate(back.ensemble, d.row(i)), aggregate(e, d.row(i)));
  EXPECT_EQ(ensemble_to_json(back.ensemble, back.classes), j);
}

TEST(Serialization, ConstantAndTableVoters) {
  const auto s = OutputSpace::multilabel(2);
  const WeightedEnsemble e(s,
                           {std::make_shared<ConstantVoter>(s, std::vector<double>{0.1, -0.2}),
                            std::make_shared<TableVoter>(s, std::vector<std::vector<double>>{{0.5, 0.5}, {-0.3, 0.0}})},
                           {0.25, 0.75});
  const auto back = ensemble_from_json(ensemble_to_json(e));
  EXPECT_EQ(back.ensemble.space(), s);
  EXPECT_EQ(aggregate(back.ensemble, std::vector<double>{1.0}), aggregate(e, std::vector<double>{1.0}));
}

TEST(Serialization, MalformedDocumentsAreParseErrors) {
  for (const char* text : {R"({"space":{"kind":"multiclass","Q":3}})",
                           R"({"space":{"kind":"weird"},"rho":[1],"voters":[]})",
                           R"({"space":{"kind":"multiclass","Q":2},"rho":[1],"voters":[{"type":"nope"}]})",
                           R"({"space":{"kind":"multiclass","Q":2},"rho":"x","voters":[{"type":"constant","output":[1,0]}]})"}) {
    try {
      ensemble_from_json(nlohmann::json::parse(text));
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), ErrorCategory::Parse) << text;
    }
  }
}

TEST(Serialization, CorruptVoterInDocument) {
  const auto j = nlohmann::json::parse(R"({"space":{"kind":"multiclass","Q":2},"rho":[1],"voters":[{"type":"constant","output":[0.9,0.9]}]})");
  try {
    ensemble_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::CorruptVoter);
  }
}

TEST(Serialization, TreeJsonValidation) {
  EXPECT_THROW(DecisionTree::from_json(nlohmann::json::parse(R"({"leaf": 5})"), 3), Error);
  EXPECT_THROW(DecisionTree::from_json(nlohmann::json::parse(R"({"feature": 0, "threshold": 1})"), 3), Error);
  const auto t = DecisionTree::from_json(nlohmann::json::parse(R"({"feature":1,"threshold":0.5,"left":{"leaf":0},"right":{"leaf":2}})"), 3);
  EXPECT_EQ(t.predict(std::vector<double>{9.0, 0.2}), 0u);
  EXPECT_EQ(t.predict(std::vector<double>{9.0, 0.7}), 2u);
  EXPECT_EQ(t.min_input_dim(), 2u);
}

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(std::stod(format_double(0.8105239)), 0.8105239);
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("plain"), "plain");
}

TEST(Report, CsvColumnsMatchValues) {
  const auto d = toy::samme_data();
  const auto e = train_samme(d, BoostConfig{5, 1, 0, 1}).ensemble();
  const auto r = make_bound_report(e, d, &d);
  EXPECT_EQ(report_csv_columns(r).size(), report_csv_values(r).size());
  const auto j = report_to_json(r);
  EXPECT_EQ(j["omega_c_bounds"].size(), 4u);
  EXPECT_TRUE(j["pac"].is_object());
}
