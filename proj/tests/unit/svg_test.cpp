#include <gtest/gtest.h>

#include <cmath>

#include "odrop/svg.hpp"
#include "odrop/text.hpp"

namespace odrop::svg {
namespace {

TEST(Svg, EscapeAndCoordinates) {
  EXPECT_EQ(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
  EXPECT_EQ(coord(1.0 / 3.0), "0.33");
  EXPECT_EQ((Rgb{255, 0, 16}).hex(), "#ff0010");
}

TEST(Svg, TicksCoverRange) {
  const auto t = ticks(0.13, 0.97);
  ASSERT_GE(t.size(), 2u);
  const double step = t[1] - t[0];
  EXPECT_GE(t.front(), 0.13 - 1e-12);
  EXPECT_LT(t.front() - step, 0.13);
  EXPECT_LE(t.back(), 0.97 + 1e-12);
  EXPECT_GT(t.back() + step, 0.97);
  for (std::size_t i = 2; i < t.size(); ++i) EXPECT_NEAR(t[i] - t[i - 1], t[1] - t[0], 1e-12);
}

TEST(Svg, LinePlotIsDeterministicAndWellFormed) {
  PlotOptions o;
  o.title = "AUROC vs rejection";
  o.reference_y = 0.8;
  const std::vector<Series> s{{"vae", {0, 0.1, 0.2}, {0.8, 0.85, 0.9}}, {"energy", {0, 0.1, 0.2}, {0.8, 0.79, 0.81}}};
  const auto a = line_plot(s, o);
  EXPECT_EQ(a, line_plot(s, o));
  EXPECT_EQ(a.rfind("<svg", 0), 0u);
  EXPECT_NE(a.find("</svg>"), std::string::npos);
  EXPECT_NE(a.find("stroke-dasharray"), std::string::npos);
  EXPECT_NE(a.find(">vae<"), std::string::npos);
}

TEST(Text, ShortestNumbers) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

}  // namespace
}  // namespace odrop::svg
