#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "mosanet/common/error.hpp"
#include "mosanet/evalstats/stats.hpp"

namespace fs = std::filesystem;
using namespace mosanet;
using namespace mosanet::evalstats;

TEST(Stats, DegenerateCorrelation) {
  const std::vector<double> flat{2, 2, 2}, x{1, 2, 3};
  EXPECT_THROW(lcc(flat, x), UsageError);
  EXPECT_THROW(srcc(x, flat), UsageError);
  EXPECT_THROW(lcc(std::vector<double>{1}, std::vector<double>{1}), UsageError);
  EXPECT_THROW(lcc(x, std::vector<double>{1, 2}), UsageError);
}

TEST(Stats, RanksAndKnownValues) {
  EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8.5};
  EXPECT_NEAR(lcc(a, b), 0.9983814394570298, 1e-12);  // numpy.corrcoef
  EXPECT_DOUBLE_EQ(srcc(a, b), 1.0);
  EXPECT_DOUBLE_EQ(mse(a, b), (1 + 4 + 9 + 4.5 * 4.5) / 4);
}

TEST(Stats, StudentT) {
  EXPECT_DOUBLE_EQ(t_two_tailed_p(0.0, 19), 1.0);
  EXPECT_NEAR(t_two_tailed_p(2.093, 19), 0.05, 1e-4);
  EXPECT_DOUBLE_EQ(t_two_tailed_p(-1.3, 7), t_two_tailed_p(1.3, 7));
}

TEST(Stats, GroupedTTest) {
  std::vector<double> a(20), b(20);
  for (int i = 0; i < 20; ++i) {
    a[i] = i;
    b[i] = i + 1;
  }
  const auto constant = grouped_ttest(a, b, 5, 1);
  EXPECT_EQ(constant.n_pairs, 4);
  EXPECT_TRUE(std::isinf(constant.t));
  EXPECT_EQ(constant.p, 1e-300);
  const auto same = grouped_ttest(a, a, 5, 1);
  EXPECT_EQ(same.p, 1.0);
  EXPECT_EQ(grouped_ttest(a, b, 5, 9).order, grouped_ttest(a, b, 5, 9).order);
  EXPECT_THROW(grouped_ttest(a, b, 7, 1), UsageError);
}

TEST(Stats, LeastSquaresLine) {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto fit = least_squares(x, y);
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-12);
}

TEST(Scatter, WritesSvgAndPairs) {
  const auto dir = fs::temp_directory_path() / "mosanet_scatter_test";
  fs::create_directories(dir);
  const std::vector<double> pred{1.5, 2.5, 3.0}, truth{1.0, 2.0, 3.5};
  scatter_emit(pred, truth, {"a", "b", "c"}, dir / "q.svg", "true PESQ", "predicted PESQ");
  ASSERT_TRUE(fs::exists(dir / "q.svg"));
  const auto back = read_scatter_csv(dir / "q.csv");
  EXPECT_EQ(back.ids, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(back.pred, pred);
  EXPECT_EQ(back.truth, truth);
}
