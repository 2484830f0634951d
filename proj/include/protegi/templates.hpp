#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace protegi {

// Default meta-prompts and initial task prompts, verbatim including
// whitespace. Slots are written `{name}`; task prompts use `{ name }`.
extern const std::string_view kGradientTemplate;
extern const std::string_view kEditTemplate;
extern const std::string_view kParaphraseTemplate;

extern const std::string_view kJailbreakPrompt;
extern const std::string_view kEthosPrompt;
extern const std::string_view kLiarPrompt;
extern const std::string_view kSarcasmPrompt;

/// Built-in task prompt by name (jailbreak, ethos, liar, sarcasm).
std::optional<std::string_view> builtin_task_prompt(std::string_view name);

/// Number of `{name}` slots, tolerating blanks inside the braces.
std::size_t count_slot(std::string_view tmpl, std::string_view name);

/// Single left-to-right pass over `tmpl`; substituted values are never
/// rescanned, and slots without a value are copied through.
std::string fill_slots(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values);

/// Text of the "# Task" section (without the heading and the blank line
/// before the next heading). Without a "# Task" heading, everything before
/// the first section heading.
std::string extract_task(std::string_view tmpl);

/// `tmpl` with its task section replaced by `task`.
std::string replace_task(std::string_view tmpl, std::string_view task);

/// Drops a "# <heading>" section including its trailing blank line.
std::string remove_section(std::string_view tmpl, std::string_view heading);

/// Prefix of a task template or rendered task prompt that precedes the
/// "# Examples" / "# Prediction" sections. Rendering never changes it.
std::string_view instruction_region(std::string_view text);

struct MetaPromptSet {
    std::string gradient_template = std::string(kGradientTemplate);
    std::string edit_template = std::string(kEditTemplate);
    std::string paraphrase_template = std::string(kParaphraseTemplate);

    /// Throws TemplateError if a required slot is missing.
    void validate() const;
};

/// Defaults, overridden by gradient.txt / edit.txt / paraphrase.txt found in
/// `dir`.
MetaPromptSet load_meta_prompts(const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);

} // namespace protegi
