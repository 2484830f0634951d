#include "protegi/selection.hpp"
#include "table_scorer.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace protegi;
using protegi::test::TableScorer;

namespace {

SelectionConfig config(SelectAlgorithm a, std::size_t b, std::size_t budget)
{
    SelectionConfig c;
    c.algorithm = a;
    c.beam_width = b;
    c.budget = budget;
    return c;
}

const SelectAlgorithm kAll[] = {SelectAlgorithm::uniform, SelectAlgorithm::ucb, SelectAlgorithm::ucb_e,
                                SelectAlgorithm::sr, SelectAlgorithm::sh};

} // namespace

TEST(Algorithm, NamesRoundTrip)
{
    for (auto a : kAll)
        EXPECT_EQ(parse_algorithm(algorithm_name(a)), a);
    EXPECT_THROW(parse_algorithm("greedy"), std::invalid_argument);
}

TEST(SrSchedule, WorkedExamples)
{
    EXPECT_EQ(sr_schedule(4, 100), (std::vector<std::size_t>{16, 21, 31}));
    EXPECT_EQ(sr_schedule(2, 10), (std::vector<std::size_t>{4}));
    EXPECT_THROW(sr_schedule(4, 4), SelectError);
    EXPECT_THROW(sr_schedule(1, 100), SelectError);
}

TEST(SrSchedule, Monotone)
{
    for (std::size_t n = 2; n <= 12; ++n) {
        const auto s = sr_schedule(n, 1000);
        EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    }
}

TEST(ShAllocation, Formula)
{
    EXPECT_EQ(sh_allocation(8, 8, 240), 10u);
    EXPECT_EQ(sh_allocation(4, 8, 240), 20u);
    EXPECT_EQ(sh_allocation(5, 5, 10), 0u);
}

TEST(Ledger, RankingAndBudget)
{
    ScoreLedger l({"b", "a", "c"}, 10);
    l.record(0, 2, 1);
    l.record(1, 2, 1);
    const auto r = l.ranked();
    EXPECT_EQ(r, (std::vector<std::size_t>{1, 0, 2})) << "ties by id, unpulled last";
    EXPECT_EQ(l.spent(), 4u);
    EXPECT_THROW(l.record(2, 7, 0), SelectError);
}

TEST(Ledger, UpdateRules)
{
    ScoreLedger mean({"a"}, 100), inc({"a"}, 100);
    mean.record(0, 5, 5);
    mean.record(0, 5, 0);
    inc.record(0, 5, 5, UcbUpdate::increment);
    inc.record(0, 5, 0, UcbUpdate::increment);
    EXPECT_DOUBLE_EQ(mean.arm(0).estimate, 0.5);
    EXPECT_NE(inc.arm(0).estimate, 0.5);
}

TEST(Select, FewArmsReturnedUnevaluated)
{
    TableScorer s({0.1, 0.9}, 50, 1);
    const auto r = select(s, config(SelectAlgorithm::ucb, 4, 100), 1);
    EXPECT_EQ(r.selected.size(), 2u);
    EXPECT_EQ(s.evaluations, 0u);
}

TEST(Select, EverySelectorFindsClearWinner)
{
    for (auto a : kAll) {
        TableScorer s({0.2, 0.3, 0.95, 0.25, 0.1, 0.3}, 500, 7);
        const auto r = select(s, config(a, 1, 600), 3);
        ASSERT_EQ(r.selected.size(), 1u) << algorithm_name(a);
        EXPECT_EQ(r.selected[0], 2u) << algorithm_name(a);
        EXPECT_LE(s.evaluations, 600u);
        EXPECT_EQ(s.evaluations, r.ledger.spent());
    }
}

TEST(Select, ReturnsBeamWidthDistinctArms)
{
    for (auto a : kAll) {
        TableScorer s({0.2, 0.3, 0.95, 0.25, 0.1, 0.3, 0.6, 0.7}, 500, 7);
        const auto r = select(s, config(a, 3, 800), 3);
        EXPECT_EQ(r.selected.size(), 3u) << algorithm_name(a);
        EXPECT_EQ(std::set<std::size_t>(r.selected.begin(), r.selected.end()).size(), 3u);
    }
}

TEST(Select, InfeasibleBudgetsThrowWithoutOverspend)
{
    TableScorer s({0.2, 0.3, 0.9, 0.25, 0.1}, 100, 1);
    EXPECT_THROW(select(s, config(SelectAlgorithm::sr, 1, 5), 1), SelectError);
    EXPECT_THROW(select(s, config(SelectAlgorithm::sh, 1, 10), 1), SelectError);
    EXPECT_THROW(select(s, config(SelectAlgorithm::ucb, 1, 20), 1), SelectError);
    EXPECT_THROW(select(s, config(SelectAlgorithm::uniform, 1, 4), 1), SelectError);
    EXPECT_EQ(s.evaluations, 0u);
}

TEST(Select, Deterministic)
{
    for (auto a : kAll) {
        TableScorer s1({0.5, 0.55, 0.6, 0.45}, 300, 2), s2({0.5, 0.55, 0.6, 0.45}, 300, 2);
        const auto r1 = select(s1, config(a, 2, 200), 9);
        const auto r2 = select(s2, config(a, 2, 200), 9);
        EXPECT_EQ(r1.selected, r2.selected);
        EXPECT_EQ(r1.ledger.to_json(), r2.ledger.to_json());
    }
}

TEST(DrawSample, RefillsWhenLargerThanPool)
{
    Rng rng(1);
    const auto s = draw_sample(rng, 3, 7);
    ASSERT_EQ(s.size(), 7u);
    EXPECT_EQ(std::set<std::size_t>(s.begin(), s.begin() + 3).size(), 3u);
    EXPECT_THROW(draw_sample(rng, 0, 1), SelectError);
}
