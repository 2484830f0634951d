#include "protegi/sim_backend.hpp"
#include "protegi/digest.hpp"
#include "protegi/rng.hpp"
#include "protegi/templates.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace protegi {

namespace {

std::string lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

/// Text between the first `open` and the last `close` after it.
std::string_view between(std::string_view text, std::string_view open, std::string_view close)
{
    auto b = text.find(open);
    if (b == std::string_view::npos)
        return {};
    b += open.size();
    auto e = text.rfind(close);
    if (e == std::string_view::npos || e < b)
        return text.substr(b);
    return text.substr(b, e - b);
}

int leading_int(std::string_view s, int fallback)
{
    s = trim(s);
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return (ec == std::errc() && ptr != s.data() && v > 0) ? std::min(v, 64) : fallback;
}

bool mentions(std::string_view lowered_text, std::string_view keyword)
{
    return lowered_text.find(lower(keyword)) != std::string_view::npos;
}

constexpr std::string_view kCritiqueWithKeyword[] = {
    "the prompt ignores {kw}, which these examples hinge on.",
    "the prompt does not mention {kw}, so the model misses the deciding signal.",
    "it overlooks {kw} as a deciding factor.",
    "the prompt never asks the model to consider {kw}.",
};

constexpr std::string_view kCritiqueDecoy[] = {
    "the prompt is too vague about borderline cases.",
    "the prompt assumes every example is explicit and direct.",
    "the prompt does not explain what counts as a positive label.",
    "the prompt is too narrowly focused on surface wording.",
    "the prompt gives no guidance on sarcasm or irony.",
};

constexpr std::string_view kEditClause[] = {
    "Pay particular attention to {kw}.",   "Consider whether the text involves {kw}.",
    "Take {kw} into account.",             "Check the text for {kw}.",
    "Weigh any reference to {kw}.",        "Note whether {kw} plays a role.",
};

constexpr std::string_view kDecoyClause[] = {
    "Judge borderline cases carefully.",        "Focus on the intent of the author.",
    "Consider the wider context of the message.", "Look past surface wording.",
    "Be wary of indirect phrasing.",            "Read the whole message before deciding.",
    "Do not rely on single words.",             "Think about who the message is aimed at.",
};

constexpr std::string_view kLeadIns[] = {
    "Please decide: ", "In short: ", "Carefully consider: ", "Question: ",
    "Your job: ",      "Task: ",     "Briefly: ",            "Answer this: ",
};

std::string with_kw(std::string_view pattern, std::string_view kw)
{
    std::string out(pattern);
    auto at = out.find("{kw}");
    if (at != std::string::npos)
        out.replace(at, 4, kw);
    return out;
}

template <std::size_t N>
std::string_view pick(const std::string_view (&options)[N], Rng& rng)
{
    return options[rng.uniform_index(N)];
}

std::string_view strip_lead_in(std::string_view text)
{
    for (auto lead : kLeadIns) {
        if (text.starts_with(lead))
            return text.substr(lead.size());
    }
    return text;
}

/// Splits at sentence ends (". ", "? ", "! ").
std::vector<std::string> sentences(std::string_view text)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i + 1 < text.size(); ++i) {
        if ((text[i] == '.' || text[i] == '?' || text[i] == '!') && text[i + 1] == ' ') {
            out.emplace_back(text.substr(start, i + 1 - start));
            start = i + 2;
        }
    }
    if (start < text.size())
        out.emplace_back(text.substr(start));
    return out;
}

} // namespace

void SimProfile::validate() const
{
    auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!prob(base_accuracy) || !prob(cap) || base_accuracy > cap)
        throw std::invalid_argument("sim profile needs 0 <= base_accuracy <= cap <= 1");
    if (!prob(gradient_hit_rate) || !prob(paraphrase_inject_rate) || !prob(paraphrase_drop_rate))
        throw std::invalid_argument("sim profile rates must lie in [0, 1]");
    for (const auto& [kw, w] : keyword_weights) {
        if (kw.empty() || !prob(w))
            throw std::invalid_argument("sim keyword weights must be non-empty keywords with weight in [0, 1]");
    }
}

double sim_accuracy_of(std::string_view instruction, const SimProfile& profile)
{
    const std::string text = lower(instruction);
    double acc = profile.base_accuracy;
    for (const auto& [kw, w] : profile.keyword_weights) {
        if (mentions(text, kw))
            acc += w;
    }
    return std::min(profile.cap, acc);
}

double sim_accuracy(const PromptCandidate& p, const SimProfile& profile)
{
    return sim_accuracy_of(instruction_region(p.template_text()), profile);
}

namespace {

Label sim_decision(std::string_view instruction, const LabeledExample& ex, const SimProfile& profile)
{
    const double u = uniform_from_key(digest64({"sim-classify", instruction, ex.id}));
    return u < sim_accuracy_of(instruction, profile) ? ex.label : flip(ex.label);
}

} // namespace

std::string sim_classify(const PromptCandidate& p, const LabeledExample& ex, const SimProfile& profile)
{
    return std::string(label_text(sim_decision(instruction_region(p.template_text()), ex, profile)));
}

SimBackend::SimBackend(SimProfile profile, std::uint64_t seed, const std::vector<const Dataset*>& known)
    : profile_(std::move(profile)), seed_(seed)
{
    profile_.validate();
    for (const Dataset* ds : known) {
        for (const auto& ex : ds->examples())
            by_text_.emplace(ex.text, ex);
    }
}

CompletionResponse SimBackend::complete(const CompletionRequest& req)
{
    req.validate();
    CompletionResponse out;
    out.backend_id = id();
    const std::string_view prompt = req.prompt_text;
    const std::uint64_t prompt_key = digest64({"sim-prompt", prompt});

    for (int i = 0; i < req.n_samples; ++i) {
        Rng rng(derive_seed(seed_, {prompt_key, static_cast<std::uint64_t>(i)}));
        if (trim(prompt).ends_with("Label:"))
            out.texts.push_back(classify(prompt));
        else if (prompt.find("<START>") != std::string_view::npos && prompt.find("reasons") != std::string_view::npos)
            out.texts.push_back(critique(prompt, rng));
        else if (prompt.find("improved prompts") != std::string_view::npos)
            out.texts.push_back(edit(prompt, rng));
        else if (prompt.find("Generate a variation") != std::string_view::npos)
            out.texts.push_back(reword(prompt, rng));
        else
            out.texts.emplace_back();
    }
    return out;
}

std::string SimBackend::classify(std::string_view prompt) const
{
    const std::string_view instruction = instruction_region(prompt);
    std::string_view body = trim(prompt);
    body.remove_suffix(std::string_view("Label:").size());
    auto at = body.rfind("Text: ");
    std::string_view input = at == std::string_view::npos ? body : body.substr(at + 6);
    if (input.ends_with('\n'))
        input.remove_suffix(1);

    if (auto it = by_text_.find(std::string(input)); it != by_text_.end())
        return std::string(label_text(sim_decision(instruction, it->second, profile_)));
    const double u = uniform_from_key(digest64({"sim-unknown", instruction, input}));
    return u < 0.5 ? "Yes" : "No";
}

std::string SimBackend::critique(std::string_view prompt, Rng& rng) const
{
    const std::string current = lower(between(prompt, "My current prompt is:\n\"", "\"\n\nBut"));
    const auto give = prompt.find("give ");
    const int m = give == std::string_view::npos ? 4 : leading_int(prompt.substr(give + 5, 8), 4);

    std::vector<std::string_view> missing;
    for (const auto& [kw, w] : profile_.keyword_weights) {
        if (w > 0.0 && !mentions(current, kw))
            missing.push_back(kw);
    }
    std::string out;
    for (int i = 0; i < m; ++i) {
        std::string reason;
        if (!missing.empty() && rng.bernoulli(profile_.gradient_hit_rate))
            reason = with_kw(pick(kCritiqueWithKeyword, rng), missing[rng.uniform_index(missing.size())]);
        else
            reason = std::string(pick(kCritiqueDecoy, rng));
        if (i > 0)
            out += "\n";
        out += "<START>" + reason + "<END>";
    }
    return out;
}

std::string SimBackend::edit(std::string_view prompt, Rng& rng) const
{
    const std::string current(trim(between(prompt, "My current prompt is:\n\"", "\"\n\nBut")));
    std::string_view gradient = prompt;
    if (auto b = prompt.find("prompt is that "); b != std::string_view::npos) {
        gradient = prompt.substr(b);
        if (auto e = gradient.find("\n\nBased on the above"); e != std::string_view::npos)
            gradient = gradient.substr(0, e);
    }
    const std::string gradient_lower = lower(gradient);
    int q = 1;
    if (auto at = prompt.find(" different improved prompts"); at != std::string_view::npos) {
        auto line_start = prompt.rfind('\n', at);
        line_start = line_start == std::string_view::npos ? 0 : line_start + 1;
        q = leading_int(prompt.substr(line_start, at - line_start), 1);
    }

    std::vector<std::string_view> named;
    for (const auto& [kw, w] : profile_.keyword_weights) {
        if (w > 0.0 && mentions(gradient_lower, kw))
            named.push_back(kw);
    }
    std::string out;
    for (int i = 0; i < q; ++i) {
        std::string clause = named.empty() ? std::string(pick(kDecoyClause, rng))
                                           : with_kw(pick(kEditClause, rng), named[rng.uniform_index(named.size())]);
        if (i > 0)
            out += "\n";
        out += "<START>" + current + (current.empty() ? "" : " ") + clause + "<END>";
    }
    return out;
}

std::string SimBackend::reword(std::string_view prompt, Rng& rng) const
{
    const std::string_view instruction = trim(between(prompt, "Input: ", "\n\nOutput:"));
    auto parts = sentences(strip_lead_in(instruction));
    if (parts.size() > 1 && rng.bernoulli(profile_.paraphrase_drop_rate))
        parts.pop_back();
    if (!profile_.keyword_weights.empty() && rng.bernoulli(profile_.paraphrase_inject_rate)) {
        auto it = profile_.keyword_weights.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(rng.uniform_index(profile_.keyword_weights.size())));
        parts.push_back(with_kw(pick(kEditClause, rng), it->first));
    }
    std::string body;
    for (const auto& s : parts)
        body += (body.empty() ? "" : " ") + s;

    const std::string_view lead = rng.uniform_index(std::size(kLeadIns) + 1) == 0 ? std::string_view{}
                                                                                   : pick(kLeadIns, rng);
    std::string result = std::string(lead) + body;
    if (result == instruction)
        result = std::string(kLeadIns[rng.uniform_index(std::size(kLeadIns))]) + body;
    return result;
}

} // namespace protegi
