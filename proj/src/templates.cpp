#include "protegi/templates.hpp"
#include "protegi/data_model.hpp"

#include <fstream>
#include <sstream>

namespace protegi {

const std::string_view kGradientTemplate =
    "I'm trying to write a zero-shot classifier prompt.\n"
    "    \n"
    "My current prompt is:\n"
    "\"{prompt}\"\n"
    "\n"
    "But this prompt gets the following examples wrong:\n"
    "{error_string}\n"
    "\n"
    "give {num_feedbacks} reasons why the prompt could \n"
    "have gotten these examples wrong.\n"
    "Wrap each reason with <START> and <END>";

const std::string_view kEditTemplate =
    "I'm trying to write a zero-shot classifier.\n"
    "        \n"
    "My current prompt is:\n"
    "\"{prompt}\"\n"
    "\n"
    "But it gets the following examples wrong:\n"
    "{error_str}\n"
    "\n"
    "Based on these examples the problem with this \n"
    "prompt is that {gradient}\n"
    "\n"
    "Based on the above information, I wrote \n"
    "{steps_per_gradient} different improved prompts.\n"
    "Each prompt is wrapped with <START> and <END>.\n"
    "\n"
    "The {steps_per_gradient} new prompts are:";

const std::string_view kParaphraseTemplate =
    "Generate a variation of the following instruction \n"
    "while keeping the semantic meaning.\n"
    "\n"
    "Input: {prompt_instruction}\n"
    "\n"
    "Output:";

#define PROTEGI_TASK_TAIL                                                                          \
    "\n"                                                                                           \
    "\n"                                                                                           \
    "# Output format\n"                                                                            \
    "Answer Yes or No as labels\n"                                                                 \
    "\n"                                                                                           \
    "# Examples\n"                                                                                 \
    "{ examples }\n"                                                                               \
    "\n"                                                                                           \
    "# Prediction\n"                                                                               \
    "Text: { text }\n"                                                                             \
    "Label:"

const std::string_view kJailbreakPrompt =
    "# Task\n"
    "Detect if the message is a jailbreak attack, \n"
    "i.e. an attempt by a user to break through an \n"
    "AI system's protections" PROTEGI_TASK_TAIL;

const std::string_view kEthosPrompt =
    "# Task\n"
    "Is the following text hate speech?" PROTEGI_TASK_TAIL;

const std::string_view kLiarPrompt =
    "# Task\n"
    "Determine whether the Statement is a \n"
    "lie (Yes) or not (No) based on the Context \n"
    "and other information." PROTEGI_TASK_TAIL;

const std::string_view kSarcasmPrompt =
    "# Task\n"
    "Is this tweet sarcastic?" PROTEGI_TASK_TAIL;

#undef PROTEGI_TASK_TAIL

std::optional<std::string_view> builtin_task_prompt(std::string_view name)
{
    if (name == "jailbreak")
        return kJailbreakPrompt;
    if (name == "ethos")
        return kEthosPrompt;
    if (name == "liar")
        return kLiarPrompt;
    if (name == "sarcasm")
        return kSarcasmPrompt;
    return std::nullopt;
}

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t'; }

bool is_slot_char(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

/// If a slot starts at tmpl[pos] ('{'), returns its name and the index one
/// past the closing brace.
std::optional<std::pair<std::string_view, std::size_t>> slot_at(std::string_view tmpl, std::size_t pos)
{
    std::size_t i = pos + 1;
    while (i < tmpl.size() && is_blank(tmpl[i]))
        ++i;
    std::size_t start = i;
    while (i < tmpl.size() && is_slot_char(tmpl[i]))
        ++i;
    std::size_t end = i;
    while (i < tmpl.size() && is_blank(tmpl[i]))
        ++i;
    if (end == start || i >= tmpl.size() || tmpl[i] != '}')
        return std::nullopt;
    return std::pair{tmpl.substr(start, end - start), i + 1};
}

constexpr std::string_view kTaskHeading = "# Task\n";

/// [begin, end) of the task text within tmpl.
std::pair<std::size_t, std::size_t> task_bounds(std::string_view tmpl)
{
    std::size_t begin = 0;
    if (tmpl.starts_with(kTaskHeading)) {
        begin = kTaskHeading.size();
    } else if (auto at = tmpl.find(std::string("\n") + std::string(kTaskHeading)); at != std::string_view::npos) {
        begin = at + 1 + kTaskHeading.size();
    }
    std::size_t end = tmpl.find("\n\n# ", begin);
    if (end == std::string_view::npos)
        end = tmpl.size();
    return {begin, end};
}

} // namespace

std::size_t count_slot(std::string_view tmpl, std::string_view name)
{
    std::size_t n = 0;
    for (std::size_t pos = tmpl.find('{'); pos != std::string_view::npos; pos = tmpl.find('{', pos + 1)) {
        if (auto slot = slot_at(tmpl, pos); slot && slot->first == name)
            ++n;
    }
    return n;
}

std::string fill_slots(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values)
{
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t brace = tmpl.find('{', pos);
        if (brace == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, brace - pos));
        auto slot = slot_at(tmpl, brace);
        if (slot) {
            if (auto it = values.find(slot->first); it != values.end()) {
                out.append(it->second);
                pos = slot->second;
                continue;
            }
        }
        out.push_back('{');
        pos = brace + 1;
    }
    return out;
}

std::string extract_task(std::string_view tmpl)
{
    auto [begin, end] = task_bounds(tmpl);
    return std::string(tmpl.substr(begin, end - begin));
}

std::string replace_task(std::string_view tmpl, std::string_view task)
{
    auto [begin, end] = task_bounds(tmpl);
    std::string out;
    out.reserve(tmpl.size() + task.size());
    out.append(tmpl.substr(0, begin));
    out.append(task);
    out.append(tmpl.substr(end));
    return out;
}

std::string remove_section(std::string_view tmpl, std::string_view heading)
{
    const std::string marker = "# " + std::string(heading) + "\n";
    std::size_t begin = std::string_view::npos;
    if (tmpl.starts_with(marker))
        begin = 0;
    else if (auto at = tmpl.find("\n" + marker); at != std::string_view::npos)
        begin = at + 1;
    if (begin == std::string_view::npos)
        return std::string(tmpl);
    std::size_t next = tmpl.find("\n\n# ", begin);
    std::string out(tmpl.substr(0, begin));
    if (next != std::string_view::npos)
        out.append(tmpl.substr(next + 2));
    else if (!out.empty() && out.ends_with("\n\n"))
        out.resize(out.size() - 2);
    return out;
}

std::string_view instruction_region(std::string_view text)
{
    std::size_t cut = text.size();
    for (std::string_view heading : {"# Examples\n", "# Prediction\n"}) {
        if (text.starts_with(heading))
            return {};
        auto at = text.find(std::string("\n") + std::string(heading));
        if (at != std::string_view::npos)
            cut = std::min(cut, at + 1);
    }
    return text.substr(0, cut);
}

void MetaPromptSet::validate() const
{
    auto require = [](const std::string& tmpl, std::string_view which, std::initializer_list<std::string_view> slots) {
        for (auto slot : slots) {
            if (count_slot(tmpl, slot) == 0)
                throw TemplateError(std::string(which) + " template lacks {" + std::string(slot) + "}");
        }
    };
    require(gradient_template, "gradient", {"prompt", "error_string", "num_feedbacks"});
    require(edit_template, "edit", {"prompt", "error_str", "gradient", "steps_per_gradient"});
    require(paraphrase_template, "paraphrase", {"prompt_instruction"});
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

MetaPromptSet load_meta_prompts(const std::filesystem::path& dir)
{
    MetaPromptSet set;
    if (dir.empty())
        return set;
    if (!std::filesystem::is_directory(dir))
        throw TemplateError("template directory not found: " + dir.string());
    auto maybe_load = [&](const char* file, std::string& slot) {
        auto path = dir / file;
        if (std::filesystem::exists(path))
            slot = read_text_file(path);
    };
    maybe_load("gradient.txt", set.gradient_template);
    maybe_load("edit.txt", set.edit_template);
    maybe_load("paraphrase.txt", set.paraphrase_template);
    set.validate();
    return set;
}

} // namespace protegi
