#include <gtest/gtest.h>

#include "chainid/errors.hpp"
#include "chainid/io.hpp"
#include "chainid/sem.hpp"

using namespace chainid;

TEST(Io, GraphRoundTrip) {
  const auto g = generate_chain_graph(12, 4, 2.0, 3);
  const Json j = graph_to_json(g);
  EXPECT_EQ(graph_from_json(j), g);
  EXPECT_EQ(graph_to_json(graph_from_json(parse_json(j.dump(), "graph"))).dump(), j.dump());
  EXPECT_EQ(j.begin().key(), "n");
}

TEST(Io, SemRoundTripIsIdentity) {
  const auto sem = generate_sem(9, 3, 5);
  const std::string text = sem_to_json(sem).dump(2);
  const AmpSem back = sem_from_json(parse_json(text, "sem"));
  EXPECT_EQ(back.graph, sem.graph);
  EXPECT_EQ(back.weights, sem.weights);
  ASSERT_EQ(back.noise_covs.size(), sem.noise_covs.size());
  for (std::size_t i = 0; i < sem.noise_covs.size(); ++i) EXPECT_EQ(back.noise_covs[i], sem.noise_covs[i]);
  EXPECT_EQ(sem_to_json(back).dump(2), text);
}

TEST(Io, CovarianceJsonAndCsvRoundTrip) {
  const CovMatrix sigma = population_covariance(generate_sem(6, 2, 8));
  const CovMatrix from_json = covariance_from_json(parse_json(covariance_to_json(sigma).dump(), "cov"));
  EXPECT_EQ(from_json.entries(), sigma.entries());
  EXPECT_EQ(from_json.labels(), sigma.labels());
  const CovMatrix from_csv = covariance_from_csv(covariance_to_csv(sigma));
  EXPECT_EQ(from_csv.entries(), sigma.entries());
  EXPECT_EQ(covariance_to_csv(from_csv), covariance_to_csv(sigma));
}

TEST(Io, DatasetCsvRoundTrip) {
  const Dataset data = sample(generate_sem(5, 2, 1), 20, 2);
  const std::string csv = dataset_to_csv(data);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x0,x1,x2,x3,x4");
  const Dataset back = dataset_from_csv(csv);
  EXPECT_EQ(back.values, data.values);
  EXPECT_EQ(back.n_samples, 20);
  EXPECT_EQ(dataset_to_csv(back), csv);
}

TEST(Io, LearnResultShape) {
  LearnResult r;
  r.order.sequence = {1, 0};
  r.partition = {{2}, {0, 1}};
  r.step_values = {0.5, 1.5};
  const Json j = learn_result_to_json(r);
  EXPECT_EQ(j.dump(), R"({"order":[1,0],"partition":[[2],[0,1]],"step_values":[0.5,1.5],"graph":null,"mode":"population"})");
}

TEST(Io, ComponentsFromEitherShape) {
  EXPECT_EQ(components_from_json(Json::parse("[[0,1],[2]]")).size(), 2u);
  EXPECT_EQ(components_from_json(Json::parse(R"({"components": [[0],[1],[2]]})")).size(), 3u);
  EXPECT_THROW(components_from_json(Json::parse(R"({"x": 1})")), ArgumentError);
}

TEST(Io, MalformedInputs) {
  EXPECT_THROW(parse_json("{not json", "x"), ArgumentError);
  EXPECT_THROW(graph_from_json(Json::parse(R"({"n": 2})")), ArgumentError);
  EXPECT_THROW(dataset_from_csv("x0,x1\n1,2\n3\n"), ArgumentError);
  EXPECT_THROW(dataset_from_csv("x0\nabc\n"), ArgumentError);
  EXPECT_THROW(covariance_from_json(Json::parse(R"({"matrix": [[1, 2], [3]]})")), ArgumentError);
  EXPECT_THROW(read_file("/nonexistent/file.json"), ArgumentError);
}

TEST(Io, NumbersKeepSeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}
