#pragma once

#include "protegi/data_model.hpp"
#include "protegi/llm_backend.hpp"
#include "protegi/rng.hpp"

#include <map>
#include <unordered_map>

namespace protegi {

/// Latent behaviour of the simulated LLM. A prompt's accuracy is
/// min(cap, base + sum of weights of the keywords it mentions).
struct SimProfile {
    std::map<std::string, double> keyword_weights{{"religion", 0.15}, {"targets", 0.15}};
    double base_accuracy = 0.55;
    double cap = 0.95;
    /// Chance that one critique names a keyword the prompt is missing.
    double gradient_hit_rate = 0.75;
    /// Chance that a paraphrase appends a random keyword clause.
    double paraphrase_inject_rate = 0.05;
    /// Chance that a paraphrase drops the last sentence of the instruction.
    double paraphrase_drop_rate = 0.2;

    /// Throws std::invalid_argument unless base <= cap <= 1 and rates are
    /// probabilities.
    void validate() const;
};

/// Accuracy implied by an instruction text (case-insensitive keyword scan).
double sim_accuracy_of(std::string_view instruction, const SimProfile& profile);

/// Keyword scan over the instruction part of the template (everything before
/// the examples and prediction sections).
double sim_accuracy(const PromptCandidate& p, const SimProfile& profile);

/// Gold label iff a pseudo-uniform draw keyed by (prompt instruction,
/// example id) falls below sim_accuracy; the flipped label otherwise.
std::string sim_classify(const PromptCandidate& p, const LabeledExample& ex, const SimProfile& profile);

/// Offline stand-in LLM. Recognises rendered classification prompts and the
/// gradient, edit and paraphrase meta-prompts, and answers each from the
/// profile. Every answer is a pure function of (seed, prompt text, sample
/// index).
class SimBackend final : public Backend {
public:
    SimBackend(SimProfile profile, std::uint64_t seed, const std::vector<const Dataset*>& known = {});

    CompletionResponse complete(const CompletionRequest& req) override;
    std::string id() const override { return "sim"; }

    const SimProfile& profile() const noexcept { return profile_; }

private:
    std::string classify(std::string_view prompt) const;
    std::string critique(std::string_view prompt, Rng& rng) const;
    std::string edit(std::string_view prompt, Rng& rng) const;
    std::string reword(std::string_view prompt, Rng& rng) const;

    SimProfile profile_;
    std::uint64_t seed_;
    std::unordered_map<std::string, LabeledExample> by_text_;
};

} // namespace protegi
