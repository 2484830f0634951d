#pragma once

#include "protegi/data_model.hpp"
#include "protegi/llm_backend.hpp"
#include "protegi/task_eval.hpp"
#include "protegi/templates.hpp"

namespace protegi {

class GradientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class EditError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class ExpandError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TextGradient {
    std::string text;
    std::string source_prompt_id;
    std::vector<std::string> error_group;
};

struct ExpansionConfig {
    std::size_t minibatch_size = 64;
    std::size_t error_group_size = 4;
    int gradients_per_group = 4;
    int edits_per_gradient = 1;
    int paraphrases_per_edit = 2;
    std::size_t max_successors = 8;
    /// How many error groups feed gradient generation per expansion.
    std::size_t error_groups_used = 1;
};

/// What every expansion call needs besides the prompt itself.
struct ExpansionContext {
    Backend& backend;
    const FewShotSet& few_shot;
    const MetaPromptSet& templates;
};

/// Contents of well-formed `<START>...<END>` spans, trimmed, in order. An
/// unterminated trailing `<START>` is ignored, as are empty spans.
std::vector<std::string> parse_delimited(std::string_view text);

std::string render_gradient_prompt(const MetaPromptSet& t, const PromptCandidate& p, const ErrorGroup& errors, int m);
std::string render_edit_prompt(const MetaPromptSet& t, const PromptCandidate& p, const ErrorGroup& errors,
                               std::string_view gradient, int q);
std::string render_paraphrase_prompt(const MetaPromptSet& t, const PromptCandidate& p);

/// Up to m critiques of `p` on `errors`. Throws GradientError when the reply
/// holds no usable span.
std::vector<TextGradient> generate_gradients(const ExpansionContext& ctx, const PromptCandidate& p,
                                             const ErrorGroup& errors, int m);

/// Rewrites the task description of `p` against one gradient; the rest of
/// the template is kept. Throws EditError when nothing parses.
std::vector<PromptCandidate> apply_gradient(const ExpansionContext& ctx, const PromptCandidate& p,
                                            const TextGradient& g, const ErrorGroup& errors, int q);

/// k semantically equivalent rewordings of the task description.
std::vector<PromptCandidate> paraphrase(const ExpansionContext& ctx, const PromptCandidate& p, int k);

struct ExpansionResult {
    std::vector<PromptCandidate> successors;
    std::vector<TextGradient> gradients;
    std::size_t minibatch_errors = 0;
    /// Candidates produced before dedup and subsampling.
    std::size_t raw_count = 0;
};

/// One expansion of `p`: minibatch errors -> gradients -> edits ->
/// paraphrases, deduplicated (including against `p` and its ancestors),
/// ordered by id and subsampled to at most max_successors under `seed`.
/// Without minibatch errors the successors are paraphrases of `p`.
ExpansionResult expand(const ExpansionContext& ctx, const PromptCandidate& p, const Dataset& train,
                       const ExpansionConfig& cfg, std::uint64_t seed);

/// Directionless variant: max_successors paraphrases of `p`, same dedup and
/// subsampling.
ExpansionResult expand_paraphrase_only(const ExpansionContext& ctx, const PromptCandidate& p,
                                       const ExpansionConfig& cfg, std::uint64_t seed);

/// Drops self/ancestor/duplicate ids, sorts by id, subsamples to `limit`.
std::vector<PromptCandidate> canonicalize_successors(const PromptCandidate& parent,
                                                     std::vector<PromptCandidate> raw, std::size_t limit,
                                                     std::uint64_t seed);

} // namespace protegi
