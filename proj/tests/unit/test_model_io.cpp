#include <gtest/gtest.h>

#include <algorithm>

#include "adafilter/model_io.hpp"

using namespace adafilter;

namespace {

bool has_issue(const ModelLoadResult& r, const std::string& pointer, const std::string& fragment) {
  return std::any_of(r.issues.begin(), r.issues.end(), [&](const ValidationIssue& i) {
    return i.pointer == pointer && i.message.find(fragment) != std::string::npos;
  });
}

}  // namespace

TEST(ModelIo, HeadlineFileLoads) {
  const auto r = validate_model(std::string(ADAFILTER_MODEL_DIR) + "/headline.json");
  ASSERT_TRUE(r.ok()) << (r.issues.empty() ? "" : r.issues.front().message);
  EXPECT_EQ(r.model->params(), 21u);
  EXPECT_EQ(r.model->states(), 2u);
  EXPECT_EQ(r.model->family().param(10)[0], 0.5);
  EXPECT_DOUBLE_EQ(r.model->prior()[0], 1.0 / 21.0);
  ASSERT_TRUE(r.true_param_index.has_value());
  EXPECT_EQ(*r.true_param_index, 10u);
}

TEST(ModelIo, ExplicitKernels) {
  const auto r = parse_model(R"({"states": 2, "h": [0, 1], "sigma": 1, "param_grid": [[0.1], [0.2]],
    "kernels": [[[0.9, 0.1], [0.1, 0.9]], [[0.5, 0.5], [0.5, 0.5]]],
    "prior": [0.5, 0.5], "initial": [1, 0]})");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.model->family().kernel(1)(0, 0), 0.5);
  EXPECT_FALSE(r.true_param_index.has_value());
}

TEST(ModelIo, NonStochasticRowNamed) {
  const auto r = parse_model(R"({"states": 2, "h": [0, 1], "sigma": 1, "param_grid": [[0.1]],
    "kernels": [[[0.9, 0.1], [0.5, 0.4]]], "prior": [1], "initial": [1, 0]})");
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_issue(r, "/kernels/0/1", "row 1 is not stochastic"));
}

TEST(ModelIo, DuplicateGridPoints) {
  const auto r = parse_model(R"({"states": 2, "h": [0, 1], "sigma": 1, "param_grid": [[0.1], [0.1]],
    "kernel_template": {"name": "symmetric_flip"}, "prior": "uniform", "initial": [1, 0]})");
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_issue(r, "/param_grid/1", "distinct"));
}

TEST(ModelIo, ReportsEveryViolation) {
  const auto r = parse_model(R"({"states": 2, "h": [0, 1, 2], "sigma": -1, "param_grid": [[0.1], [0.2]],
    "kernels": [[[0.9, 0.2], [0.5, 0.5]], [[0.5, 0.5], [1.5, -0.5]]],
    "prior": [0.7, 0.7], "initial": [1, 0]})");
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_issue(r, "/h", "one value per state"));
  EXPECT_TRUE(has_issue(r, "/sigma", "positive"));
  EXPECT_TRUE(has_issue(r, "/kernels/0/0", "row 0"));
  EXPECT_TRUE(has_issue(r, "/kernels/1/1/1", "negative"));
  EXPECT_TRUE(has_issue(r, "/prior", "sum to"));
  EXPECT_GE(r.issues.size(), 5u);
}

TEST(ModelIo, MalformedAndMissing) {
  EXPECT_FALSE(parse_model("{not json").ok());
  const auto r = parse_model(R"({"states": 2})");
  EXPECT_TRUE(has_issue(r, "/h", "missing"));
  EXPECT_TRUE(has_issue(r, "/sigma", "missing"));
  EXPECT_TRUE(has_issue(r, "/param_grid", "non-empty"));
  EXPECT_FALSE(validate_model("/nonexistent/model.json").ok());
}

TEST(ModelIo, AffineTemplateWithBadShape) {
  const auto r = parse_model(R"({"states": 2, "h": [0, 1], "sigma": 1, "param_grid": [[0.1]],
    "kernel_template": {"name": "affine", "base": [[1, 0]], "slopes": [[[-1, 1], [0, 0]]]},
    "prior": [1], "initial": [1, 0]})");
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_issue(r, "/kernel_template/base", "rows"));
}

TEST(ModelIo, TemplateLeavingSimplex) {
  // theta = 1.5 makes the affine kernel negative.
  const auto r = parse_model(R"({"states": 2, "h": [0, 1], "sigma": 1, "param_grid": [[1.5]],
    "kernel_template": {"name": "affine", "base": [[1, 0], [0.3, 0.7]], "slopes": [[[-1, 1], [0, 0]]]},
    "prior": [1], "initial": [1, 0]})");
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.issues.empty());
}
