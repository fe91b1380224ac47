#include <sstream>

#include <gtest/gtest.h>

#include "scopt/returns.hpp"

using namespace scopt;

TEST(IngestReturns, SimpleReturn)
{
    std::istringstream in("date,ticker,close\n2024-01-01,AAA,100\n2024-01-02,AAA,110\n");
    const ReturnSeries s = ingest_returns(in);
    ASSERT_EQ(s.tickers.size(), 1u);
    ASSERT_EQ(s.returns.rows(), 1);
    EXPECT_NEAR(s.returns(0, 0), 0.10, 1e-15);
    EXPECT_EQ(s.dates.front(), "2024-01-02");
}

TEST(IngestReturns, AssetsWithGapsAreDropped)
{
    std::istringstream in("date,ticker,close\n"
                          "2024-01-01,AAA,100\n2024-01-01,BBB,50\n"
                          "2024-01-02,AAA,101\n"
                          "2024-01-03,AAA,102\n2024-01-03,BBB,51\n");
    const ReturnSeries s = ingest_returns(in);
    EXPECT_EQ(s.tickers, std::vector<std::string>{"AAA"});
    EXPECT_EQ(s.dropped, std::vector<std::string>{"BBB"});
    EXPECT_EQ(s.returns.rows(), 2);
}

TEST(IngestReturns, RowOrderDoesNotMatter)
{
    std::istringstream a("date,ticker,close\n2024-01-01,X,1\n2024-01-02,X,2\n2024-01-01,Y,4\n2024-01-02,Y,3\n");
    std::istringstream b("date,ticker,close\n2024-01-02,Y,3\n2024-01-01,X,1\n2024-01-01,Y,4\n2024-01-02,X,2\n");
    EXPECT_EQ(ingest_returns(a).returns, ingest_returns(b).returns);
}

TEST(IngestReturns, MalformedInputReportsLine)
{
    std::istringstream empty("");
    try {
        ingest_returns(empty);
        FAIL();
    } catch (const MalformedCsv& e) {
        EXPECT_EQ(e.line(), 1u);
    }
    std::istringstream bad("date,ticker,close\n2024-01-01,AAA,100\n2024-01-02,AAA,abc\n");
    try {
        ingest_returns(bad);
        FAIL();
    } catch (const MalformedCsv& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream negative("date,ticker,close\n2024-01-01,AAA,-1\n");
    EXPECT_THROW(ingest_returns(negative), MalformedCsv);
    std::istringstream dup("date,ticker,close\n2024-01-01,AAA,1\n2024-01-01,AAA,2\n");
    EXPECT_THROW(ingest_returns(dup), MalformedCsv);
}

TEST(IngestReturns, SingleDateIsTooFew)
{
    std::istringstream in("date,ticker,close\n2024-01-01,AAA,100\n");
    EXPECT_THROW(ingest_returns(in), TooFewDates);
}

TEST(ReturnSamples, CenteringRemovesMean)
{
    std::istringstream in("date,ticker,close\n2024-01-01,A,100\n2024-01-02,A,110\n2024-01-03,A,99\n");
    const ReturnSeries s = ingest_returns(in);
    const auto raw = return_samples(s, false);
    const auto centered = return_samples(s, true);
    ASSERT_EQ(raw.size(), 2u);
    EXPECT_NEAR(raw[0](0), 0.1, 1e-15);
    EXPECT_NEAR(centered[0](0) + centered[1](0), 0.0, 1e-15);
}
