#include "protegi/rng.hpp"
#include "protegi/sim_backend.hpp"
#include "protegi/task_eval.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace protegi;
using protegi::test::ex;

namespace {

PromptCandidate ethos() { return make_initial_prompt(std::string(*builtin_task_prompt("ethos"))); }

PredictionRecord rec(Label gold, std::optional<Label> pred)
{
    return {"id", gold, pred, pred ? std::string(label_text(*pred)) : "??"};
}

} // namespace

TEST(RenderTaskPrompt, FillsSlotsAndDropsEmptyExamples)
{
    const auto p = ethos();
    const auto with = render_task_prompt(p, FewShotSet{{ex("a", "hi", Label::positive)}}, ex("b", "yo", Label::negative));
    EXPECT_NE(with.find("# Examples\nText: hi\nLabel: Yes\n\n# Prediction\nText: yo\nLabel:"), std::string::npos);
    const auto without = render_task_prompt(p, {}, ex("b", "yo", Label::negative));
    EXPECT_EQ(without.find("# Examples"), std::string::npos);
    EXPECT_TRUE(without.ends_with("Text: yo\nLabel:"));
    EXPECT_THROW(render_task_prompt(PromptCandidate("# Task\nno slot"), {}, ex("b", "yo", Label::negative)),
                 TemplateError);
}

TEST(ParseLabel, Cases)
{
    EXPECT_EQ(parse_label("Yes"), Label::positive);
    EXPECT_EQ(parse_label(" no."), Label::negative);
    EXPECT_EQ(parse_label("Label: YES"), Label::positive);
    EXPECT_EQ(parse_label("Answer: No, it is not"), Label::negative);
    EXPECT_EQ(parse_label("Yesterday nothing"), std::nullopt);
    EXPECT_EQ(parse_label(""), std::nullopt);
    EXPECT_EQ(parse_label("maybe"), std::nullopt);
    EXPECT_EQ(parse_label("no yes"), Label::negative);
}

TEST(ParseLabel, TotalOverRandomBytes)
{
    Rng rng(42);
    for (int i = 0; i < 20000; ++i) {
        std::string s(rng.uniform_index(24), '\0');
        for (auto& c : s)
            c = static_cast<char>(rng.uniform_index(256));
        (void)parse_label(s);
    }
    SUCCEED();
}

TEST(F1, ZeroDenominatorConventions)
{
    EXPECT_EQ(f1_score({}).value, 0.0);
    std::vector<PredictionRecord> all_neg{rec(Label::negative, Label::negative), rec(Label::negative, Label::negative)};
    EXPECT_EQ(f1_score(all_neg).value, 0.0);
    std::vector<PredictionRecord> no_pred{rec(Label::positive, std::nullopt)};
    EXPECT_EQ(f1_score(no_pred).value, 0.0);
    std::vector<PredictionRecord> perfect{rec(Label::positive, Label::positive), rec(Label::negative, Label::negative)};
    EXPECT_EQ(f1_score(perfect).value, 1.0);
    EXPECT_EQ(f1_score(perfect).n_evaluated, 2u);
    EXPECT_EQ(f1_score(perfect).metric_name, "f1");
}

TEST(F1, KnownValue)
{
    // tp=2 fp=1 fn=1 -> P=R=2/3
    std::vector<PredictionRecord> r{rec(Label::positive, Label::positive), rec(Label::positive, Label::positive),
                                    rec(Label::negative, Label::positive), rec(Label::positive, Label::negative),
                                    rec(Label::negative, std::nullopt)};
    EXPECT_NEAR(f1_score(r).value, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(accuracy(r), 0.4, 1e-12);
}

TEST(Evaluate, ParallelMatchesSerial)
{
    const auto ds = make_synthetic_dataset(500, 9);
    SimBackend b(SimProfile{}, 5, {&ds});
    const FewShotSet fs = select_few_shot(ds, 2, 1);
    const auto par = evaluate(b, ethos(), fs, ds.examples());
    const auto ser = evaluate_serial(b, ethos(), fs, ds.examples());
    ASSERT_EQ(par.size(), ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
        EXPECT_EQ(par[i].example_id, ds[i].id);
        EXPECT_EQ(par[i].raw_completion, ser[i].raw_completion);
        EXPECT_EQ(par[i].predicted, ser[i].predicted);
    }
}

TEST(CollectErrors, GroupsOnlyWrongPredictions)
{
    std::vector<LabeledExample> exs;
    std::vector<PredictionRecord> recs;
    for (int i = 0; i < 10; ++i) {
        exs.push_back(ex("e" + std::to_string(i), "t" + std::to_string(i), Label::positive));
        recs.push_back({exs.back().id, Label::positive, i % 3 == 0 ? std::optional(Label::positive) : std::nullopt, "x"});
    }
    const auto groups = collect_errors(exs, recs, 4, 3);
    ASSERT_EQ(groups.size(), 2u);
    EXPECT_EQ(groups[0].size(), 4u);
    EXPECT_EQ(groups[1].size(), 2u);
    std::set<std::string> seen;
    for (const auto& g : groups)
        for (const auto& e : g) {
            EXPECT_FALSE(e.record.correct());
            EXPECT_EQ(e.example.id, e.record.example_id);
            seen.insert(e.example.id);
        }
    EXPECT_EQ(seen.size(), 6u);
    for (auto& r : recs)
        r.predicted = Label::positive;
    EXPECT_TRUE(collect_errors(exs, recs, 4, 3).empty());
}

TEST(ErrorString, ShowsRawCompletionWhenUnparseable)
{
    ErrorGroup g{{ex("a", "hello", Label::positive), PredictionRecord{"a", Label::positive, std::nullopt, "  unsure \n"}}};
    EXPECT_EQ(render_error_string(g), "Text: hello\nLabel: Yes\nPrediction: unsure");
}
