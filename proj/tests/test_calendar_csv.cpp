#include <sstream>

#include <gtest/gtest.h>

#include "seatrade/calendar.hpp"
#include "seatrade/csv.hpp"

using seatrade::Date;
using seatrade::YearMonth;

TEST(YearMonth, ParseAndFormat) {
  auto ym = YearMonth::parse("2022-06");
  EXPECT_EQ(ym.year, 2022);
  EXPECT_EQ(ym.month, 6);
  EXPECT_EQ(ym.str(), "2022-06");
  EXPECT_THROW(YearMonth::parse("2022-13"), seatrade::DataError);
  EXPECT_THROW(YearMonth::parse("2022/06"), seatrade::DataError);
  EXPECT_THROW(YearMonth::parse("22-06"), seatrade::DataError);
}

TEST(YearMonth, ArithmeticCrossesYears) {
  YearMonth ym{2021, 11};
  EXPECT_EQ(ym.plus(2), (YearMonth{2022, 1}));
  EXPECT_EQ(ym.plus(-11), (YearMonth{2020, 12}));
  EXPECT_EQ(seatrade::months_between({2016, 1}, {2024, 12}), 108);
  EXPECT_EQ(seatrade::months_between({2024, 1}, {2023, 12}), 0);
}

TEST(Date, ParseValidatesDayOfMonth) {
  EXPECT_EQ(Date::parse("2024-02-29").str(), "2024-02-29");
  EXPECT_THROW(Date::parse("2023-02-29"), seatrade::DataError);
  EXPECT_THROW(Date::parse("2023-04-31"), seatrade::DataError);
  EXPECT_EQ(Date::parse("2023-04-30").year_month(), (YearMonth{2023, 4}));
}

TEST(Csv, SplitHandlesQuotes) {
  auto f = seatrade::csv::split_record(R"(a,"b,c","d""e",)");
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[1], "b,c");
  EXPECT_EQ(f[2], "d\"e");
  EXPECT_EQ(f[3], "");
}

TEST(Csv, QuoteRoundTrip) {
  std::ostringstream out;
  seatrade::csv::write_record(out, {"plain", "with,comma", "with\"quote"});
  auto line = out.str();
  line.pop_back();
  auto back = seatrade::csv::split_record(line);
  EXPECT_EQ(back, (std::vector<std::string>{"plain", "with,comma", "with\"quote"}));
}

TEST(Csv, NumbersRoundTripExactly) {
  for (double v : {0.1, -80.0, 1.0 / 3.0, 6.90875477931522, 1e-300}) {
    auto s = seatrade::csv::format_number(v);
    EXPECT_EQ(seatrade::csv::parse_number(s), v) << s;
  }
  EXPECT_EQ(seatrade::csv::format_optional(std::nullopt), "");
  EXPECT_FALSE(seatrade::csv::parse_optional_number("").has_value());
  EXPECT_THROW(seatrade::csv::parse_number("abc"), seatrade::DataError);
}

TEST(Csv, TableRejectsRaggedRows) {
  std::istringstream in("a,b\n1,2\n3\n");
  EXPECT_THROW(seatrade::csv::Table::read(in), seatrade::DataError);
  std::istringstream ok("a,b\r\n1,2\r\n");
  auto t = seatrade::csv::Table::read(ok);
  EXPECT_EQ(t.at(0, "b"), "2");
  EXPECT_THROW((void)t.column("c"), seatrade::SchemaError);
}
