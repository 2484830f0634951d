#include "protegi/expansion.hpp"
#include "protegi/rng.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace protegi {

namespace {

constexpr std::string_view kStart = "<START>";
constexpr std::string_view kEnd = "<END>";

std::string trimmed(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return std::string(s);
}

CompletionRequest meta_request(std::string prompt, int n, CallKind kind)
{
    CompletionRequest req;
    req.prompt_text = std::move(prompt);
    req.temperature = 1.0;
    req.n_samples = n;
    req.max_tokens = kMetaMaxTokens;
    req.kind = kind;
    return req;
}

/// An edited prompt may come back as a bare task sentence, a quoted one, or
/// a whole template; keep only the task description.
std::string edited_task(std::string_view span)
{
    std::string task = trimmed(span);
    if (task.find("# Task\n") != std::string::npos)
        task = trimmed(extract_task(task));
    if (task.size() >= 2 && task.front() == '"' && task.back() == '"')
        task = trimmed(std::string_view(task).substr(1, task.size() - 2));
    return task;
}

} // namespace

std::vector<std::string> parse_delimited(std::string_view text)
{
    std::vector<std::string> spans;
    std::size_t pos = 0;
    while (true) {
        auto start = text.find(kStart, pos);
        if (start == std::string_view::npos)
            break;
        auto end = text.find(kEnd, start + kStart.size());
        if (end == std::string_view::npos)
            break;
        // "<START>a<START>b<END>": the innermost opener wins
        auto inner = text.rfind(kStart, end);
        auto body = text.substr(inner + kStart.size(), end - inner - kStart.size());
        if (auto s = trimmed(body); !s.empty())
            spans.push_back(std::move(s));
        pos = end + kEnd.size();
    }
    return spans;
}

std::string render_gradient_prompt(const MetaPromptSet& t, const PromptCandidate& p, const ErrorGroup& errors, int m)
{
    return fill_slots(t.gradient_template, {{"prompt", p.task_description()},
                                            {"error_string", render_error_string(errors)},
                                            {"num_feedbacks", std::to_string(m)}});
}

std::string render_edit_prompt(const MetaPromptSet& t, const PromptCandidate& p, const ErrorGroup& errors,
                               std::string_view gradient, int q)
{
    return fill_slots(t.edit_template, {{"prompt", p.task_description()},
                                        {"error_str", render_error_string(errors)},
                                        {"gradient", std::string(gradient)},
                                        {"steps_per_gradient", std::to_string(q)}});
}

std::string render_paraphrase_prompt(const MetaPromptSet& t, const PromptCandidate& p)
{
    return fill_slots(t.paraphrase_template, {{"prompt_instruction", p.task_description()}});
}

std::vector<TextGradient> generate_gradients(const ExpansionContext& ctx, const PromptCandidate& p,
                                             const ErrorGroup& errors, int m)
{
    if (errors.empty())
        throw std::invalid_argument("generate_gradients needs a non-empty error group");
    if (m < 1)
        throw std::invalid_argument("generate_gradients needs m >= 1");
    auto resp = ctx.backend.complete(meta_request(render_gradient_prompt(ctx.templates, p, errors, m), 1,
                                                  CallKind::gradient));
    auto spans = parse_delimited(resp.texts.front());
    if (spans.empty())
        throw GradientError("no <START>...<END> reasons in gradient reply for " + p.id());
    if (spans.size() > static_cast<std::size_t>(m))
        spans.resize(static_cast<std::size_t>(m));

    std::vector<std::string> group_ids;
    for (const auto& e : errors)
        group_ids.push_back(e.example.id);
    std::vector<TextGradient> out;
    for (auto& s : spans)
        out.push_back({std::move(s), p.id(), group_ids});
    return out;
}

std::vector<PromptCandidate> apply_gradient(const ExpansionContext& ctx, const PromptCandidate& p,
                                            const TextGradient& g, const ErrorGroup& errors, int q)
{
    if (q < 1)
        throw std::invalid_argument("apply_gradient needs q >= 1");
    auto resp = ctx.backend.complete(
        meta_request(render_edit_prompt(ctx.templates, p, errors, g.text, q), 1, CallKind::edit));
    std::vector<PromptCandidate> out;
    for (const auto& span : parse_delimited(resp.texts.front())) {
        auto task = edited_task(span);
        if (!task.empty())
            out.push_back(p.derive(task, Origin::gradient_edit, g.text));
    }
    if (out.empty())
        throw EditError("no <START>...<END> prompts in edit reply for " + p.id());
    return out;
}

std::vector<PromptCandidate> paraphrase(const ExpansionContext& ctx, const PromptCandidate& p, int k)
{
    if (k < 0)
        throw std::invalid_argument("paraphrase needs k >= 0");
    if (k == 0)
        return {};
    auto resp = ctx.backend.complete(meta_request(render_paraphrase_prompt(ctx.templates, p), k, CallKind::paraphrase));
    std::vector<PromptCandidate> out;
    for (const auto& text : resp.texts) {
        std::string task = trimmed(text);
        if (task.starts_with("Output:"))
            task = trimmed(std::string_view(task).substr(7));
        if (!task.empty())
            out.push_back(p.derive(task, Origin::paraphrase));
    }
    return out;
}

std::vector<PromptCandidate> canonicalize_successors(const PromptCandidate& parent,
                                                     std::vector<PromptCandidate> raw, std::size_t limit,
                                                     std::uint64_t seed)
{
    std::unordered_set<std::string> seen{parent.id()};
    seen.insert(parent.lineage().ancestry.begin(), parent.lineage().ancestry.end());
    std::vector<PromptCandidate> unique;
    for (auto& c : raw) {
        if (seen.insert(c.id()).second)
            unique.push_back(std::move(c));
    }
    std::sort(unique.begin(), unique.end(), [](const auto& a, const auto& b) { return a.id() < b.id(); });
    if (unique.size() <= limit)
        return unique;

    Rng rng(seed);
    auto keep = rng.sample_without_replacement(unique.size(), limit);
    std::sort(keep.begin(), keep.end());
    std::vector<PromptCandidate> out;
    out.reserve(limit);
    for (auto i : keep)
        out.push_back(std::move(unique[i]));
    return out;
}

ExpansionResult expand(const ExpansionContext& ctx, const PromptCandidate& p, const Dataset& train,
                       const ExpansionConfig& cfg, std::uint64_t seed)
{
    if (train.empty())
        throw ExpandError("expand needs training examples");
    ExpansionResult result;

    Rng batch_rng(derive_seed(seed, {1}));
    const std::size_t batch_size = std::min(cfg.minibatch_size, train.size());
    std::vector<LabeledExample> minibatch;
    minibatch.reserve(batch_size);
    for (auto i : batch_rng.sample_without_replacement(train.size(), batch_size))
        minibatch.push_back(train[i]);

    const auto records = evaluate(ctx.backend, p, ctx.few_shot, minibatch);
    const auto groups = collect_errors(minibatch, records, cfg.error_group_size, derive_seed(seed, {2}));
    for (const auto& g : groups)
        result.minibatch_errors += g.size();

    if (groups.empty()) {
        auto only = expand_paraphrase_only(ctx, p, cfg, seed);
        only.minibatch_errors = 0;
        return only;
    }

    std::vector<PromptCandidate> raw;
    const std::size_t used = std::min(groups.size(), std::max<std::size_t>(cfg.error_groups_used, 1));
    for (std::size_t gi = 0; gi < used; ++gi) {
        const auto& errors = groups[gi];
        std::vector<TextGradient> gradients;
        try {
            gradients = generate_gradients(ctx, p, errors, cfg.gradients_per_group);
        } catch (const GradientError&) {
            try {
                gradients = generate_gradients(ctx, p, errors, cfg.gradients_per_group);
            } catch (const GradientError&) {
                continue;
            }
        }
        for (const auto& g : gradients) {
            std::vector<PromptCandidate> edits;
            try {
                edits = apply_gradient(ctx, p, g, errors, cfg.edits_per_gradient);
            } catch (const EditError&) {
                continue;
            }
            for (auto& e : edits) {
                auto variants = paraphrase(ctx, e, cfg.paraphrases_per_edit);
                raw.push_back(std::move(e));
                std::move(variants.begin(), variants.end(), std::back_inserter(raw));
            }
        }
        std::move(gradients.begin(), gradients.end(), std::back_inserter(result.gradients));
    }
    if (raw.empty())
        throw ExpandError("every gradient and edit call for " + p.id() + " failed to parse");

    result.raw_count = raw.size();
    result.successors = canonicalize_successors(p, std::move(raw), cfg.max_successors, derive_seed(seed, {3}));
    return result;
}

ExpansionResult expand_paraphrase_only(const ExpansionContext& ctx, const PromptCandidate& p,
                                       const ExpansionConfig& cfg, std::uint64_t seed)
{
    ExpansionResult result;
    auto raw = paraphrase(ctx, p, static_cast<int>(cfg.max_successors));
    result.raw_count = raw.size();
    result.successors = canonicalize_successors(p, std::move(raw), cfg.max_successors, derive_seed(seed, {3}));
    return result;
}

} // namespace protegi
