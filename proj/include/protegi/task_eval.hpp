#pragma once

#include "protegi/data_model.hpp"
#include "protegi/llm_backend.hpp"

#include <optional>
#include <span>

namespace protegi {

/// `{examples}` becomes the few-shot block (the "# Examples" section is
/// dropped when `fs` is empty) and `{text}` the input text. Throws
/// TemplateError if the template has no text slot.
std::string render_task_prompt(const PromptCandidate& p, const FewShotSet& fs, const LabeledExample& ex);

/// "Text: ...\nLabel: Yes|No" blocks separated by blank lines.
std::string render_few_shot_block(const FewShotSet& fs);

/// First standalone yes/no token, case-insensitive. Total over arbitrary
/// input; nullopt means the completion carried no label.
std::optional<Label> parse_label(std::string_view completion) noexcept;

struct PredictionRecord {
    std::string example_id;
    Label gold = Label::negative;
    std::optional<Label> predicted;
    std::string raw_completion;

    bool correct() const noexcept { return predicted && *predicted == gold; }
};

/// Classifies every example at temperature 0, one backend call each, fanned
/// out with OpenMP. Records come back in input order.
std::vector<PredictionRecord> evaluate(Backend& backend, const PromptCandidate& p, const FewShotSet& fs,
                                       std::span<const LabeledExample> exs);

/// Sequential reference for evaluate().
std::vector<PredictionRecord> evaluate_serial(Backend& backend, const PromptCandidate& p, const FewShotSet& fs,
                                              std::span<const LabeledExample> exs);

struct MetricScore {
    double value = 0.0;
    std::size_t n_evaluated = 0;
    std::string metric_name = "f1";
};

/// Binary F1 on the positive class. A zero-denominator precision or recall
/// counts as 0; no records scores 0.
MetricScore f1_score(std::span<const PredictionRecord> records);

/// Fraction of records whose prediction matches the gold label.
double accuracy(std::span<const PredictionRecord> records);

struct ErrorCase {
    LabeledExample example;
    PredictionRecord record;
};
using ErrorGroup = std::vector<ErrorCase>;

/// Wrong (or unparseable) predictions, shuffled under `seed` and chunked into
/// groups of `group_size`; the last group may be short. `examples` must be
/// the list the records were produced from.
std::vector<ErrorGroup> collect_errors(std::span<const LabeledExample> examples,
                                       std::span<const PredictionRecord> records, std::size_t group_size,
                                       std::uint64_t seed);

/// "Text: ...\nLabel: ...\nPrediction: ..." blocks separated by blank lines.
/// An unparseable prediction is shown as the trimmed raw completion.
std::string render_error_string(const ErrorGroup& group);

} // namespace protegi
