#include "protegi/task_eval.hpp"
#include "protegi/rng.hpp"
#include "protegi/templates.hpp"

#include <omp.h>

#include <cctype>
#include <exception>

namespace protegi {

std::string render_few_shot_block(const FewShotSet& fs)
{
    std::string block;
    for (const auto& ex : fs.examples) {
        if (!block.empty())
            block += "\n\n";
        block += "Text: " + ex.text + "\nLabel: " + std::string(label_text(ex.label));
    }
    return block;
}

std::string render_task_prompt(const PromptCandidate& p, const FewShotSet& fs, const LabeledExample& ex)
{
    if (count_slot(p.template_text(), "text") == 0)
        throw TemplateError("task prompt " + p.id() + " has no {text} slot");
    std::string tmpl = p.template_text();
    if (fs.empty())
        tmpl = remove_section(tmpl, "Examples");
    return fill_slots(tmpl, {{"examples", render_few_shot_block(fs)}, {"text", ex.text}});
}

std::optional<Label> parse_label(std::string_view completion) noexcept
{
    // tokens are maximal runs of ASCII letters; everything else separates
    std::size_t i = 0;
    while (i < completion.size()) {
        while (i < completion.size() && !std::isalpha(static_cast<unsigned char>(completion[i])))
            ++i;
        std::size_t start = i;
        while (i < completion.size() && std::isalpha(static_cast<unsigned char>(completion[i])))
            ++i;
        const std::size_t len = i - start;
        // a letter run glued to non-ASCII bytes is part of a longer word
        const bool glued_before = start > 0 && (static_cast<unsigned char>(completion[start - 1]) & 0x80);
        const bool glued_after = i < completion.size() && (static_cast<unsigned char>(completion[i]) & 0x80);
        if (glued_before || glued_after || (len != 2 && len != 3))
            continue;
        auto lc = [&](std::size_t k) { return static_cast<char>(std::tolower(static_cast<unsigned char>(completion[start + k]))); };
        if (len == 3 && lc(0) == 'y' && lc(1) == 'e' && lc(2) == 's')
            return Label::positive;
        if (len == 2 && lc(0) == 'n' && lc(1) == 'o')
            return Label::negative;
    }
    return std::nullopt;
}

namespace {

PredictionRecord classify_one(Backend& backend, const PromptCandidate& p, const FewShotSet& fs,
                              const LabeledExample& ex)
{
    CompletionRequest req;
    req.prompt_text = render_task_prompt(p, fs, ex);
    req.temperature = 0.0;
    req.n_samples = 1;
    req.max_tokens = kClassifyMaxTokens;
    req.kind = CallKind::classify;
    auto resp = backend.complete(req);

    PredictionRecord rec;
    rec.example_id = ex.id;
    rec.gold = ex.label;
    rec.raw_completion = resp.texts.empty() ? std::string{} : std::move(resp.texts.front());
    rec.predicted = parse_label(rec.raw_completion);
    return rec;
}

// below this many examples the thread fan-out costs more than it saves
constexpr std::ptrdiff_t kParallelThreshold = 16;

} // namespace

std::vector<PredictionRecord> evaluate(Backend& backend, const PromptCandidate& p, const FewShotSet& fs,
                                       std::span<const LabeledExample> exs)
{
    const auto n = static_cast<std::ptrdiff_t>(exs.size());
    std::vector<PredictionRecord> records(exs.size());
    std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 4) if (n >= kParallelThreshold)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            records[static_cast<std::size_t>(i)] = classify_one(backend, p, fs, exs[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical(protegi_evaluate_failure)
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);
    return records;
}

std::vector<PredictionRecord> evaluate_serial(Backend& backend, const PromptCandidate& p, const FewShotSet& fs,
                                              std::span<const LabeledExample> exs)
{
    std::vector<PredictionRecord> records;
    records.reserve(exs.size());
    for (const auto& ex : exs)
        records.push_back(classify_one(backend, p, fs, ex));
    return records;
}

MetricScore f1_score(std::span<const PredictionRecord> records)
{
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& r : records) {
        const bool pred_pos = r.predicted && *r.predicted == Label::positive;
        const bool gold_pos = r.gold == Label::positive;
        tp += pred_pos && gold_pos;
        fp += pred_pos && !gold_pos;
        fn += !pred_pos && gold_pos;
    }
    MetricScore score;
    score.n_evaluated = records.size();
    const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    score.value = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    return score;
}

double accuracy(std::span<const PredictionRecord> records)
{
    if (records.empty())
        return 0.0;
    std::size_t hits = 0;
    for (const auto& r : records)
        hits += r.correct();
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

std::vector<ErrorGroup> collect_errors(std::span<const LabeledExample> examples,
                                       std::span<const PredictionRecord> records, std::size_t group_size,
                                       std::uint64_t seed)
{
    if (group_size == 0)
        throw std::invalid_argument("error group size must be >= 1");
    if (examples.size() != records.size())
        throw std::invalid_argument("collect_errors: examples and records differ in length");
    std::vector<ErrorCase> wrong;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].correct())
            wrong.push_back({examples[i], records[i]});
    }
    Rng rng(seed);
    rng.shuffle(wrong);

    std::vector<ErrorGroup> groups;
    for (std::size_t i = 0; i < wrong.size(); i += group_size) {
        const std::size_t end = std::min(wrong.size(), i + group_size);
        groups.emplace_back(std::make_move_iterator(wrong.begin() + static_cast<std::ptrdiff_t>(i)),
                            std::make_move_iterator(wrong.begin() + static_cast<std::ptrdiff_t>(end)));
    }
    return groups;
}

std::string render_error_string(const ErrorGroup& group)
{
    auto shown = [](const PredictionRecord& r) -> std::string {
        if (r.predicted)
            return std::string(label_text(*r.predicted));
        std::string_view raw = r.raw_completion;
        while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.front())))
            raw.remove_prefix(1);
        while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.back())))
            raw.remove_suffix(1);
        return std::string(raw);
    };
    std::string out;
    for (const auto& e : group) {
        if (!out.empty())
            out += "\n\n";
        out += "Text: " + e.example.text + "\nLabel: " + std::string(label_text(e.example.label)) +
               "\nPrediction: " + shown(e.record);
    }
    return out;
}

} // namespace protegi
