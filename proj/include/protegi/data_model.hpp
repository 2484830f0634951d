#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace protegi {

enum class Label { negative, positive };

/// "Yes" for positive, "No" for negative; the label vocabulary of every
/// classification prompt the engine renders.
std::string_view label_text(Label label) noexcept;
Label flip(Label label) noexcept;

struct LabeledExample {
    std::string id;
    std::string text;
    Label label = Label::negative;

    friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

class IngestError : public std::runtime_error {
public:
    IngestError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }
    /// 1-based line number of the offending record; 0 for whole-file problems.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SplitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TemplateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ordered, id-unique collection of labeled examples. Immutable after
/// construction.
class Dataset {
public:
    Dataset() = default;
    /// Throws IngestError on duplicate ids or empty text.
    Dataset(std::string name, std::vector<LabeledExample> examples);

    const std::string& name() const noexcept { return name_; }
    const std::vector<LabeledExample>& examples() const noexcept { return examples_; }
    std::size_t size() const noexcept { return examples_.size(); }
    bool empty() const noexcept { return examples_.empty(); }
    const LabeledExample& operator[](std::size_t i) const { return examples_[i]; }
    std::size_t count(Label label) const noexcept;

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::string name_;
    std::vector<LabeledExample> examples_;
};

struct LabelMapping {
    std::string positive = "Yes";
    std::string negative = "No";
};

/// Reads line-delimited JSON records with `text` and `label` string fields
/// (and an optional `id`; otherwise the id is "<stem>:<line>"). Blank lines
/// are skipped. Labels are matched case-insensitively after trimming.
Dataset load_dataset(const std::filesystem::path& path, std::string_view format = "jsonl",
                     const LabelMapping& labels = {});

struct DataSplit {
    Dataset dev;
    Dataset test;
    Dataset train;
};

/// Seeded disjoint partition. Each partition keeps the source order.
DataSplit split_dataset(const Dataset& ds, std::uint64_t seed, std::size_t n_dev, std::size_t n_test);

/// Few-shot examples held fixed for an entire optimization run.
struct FewShotSet {
    std::vector<LabeledExample> examples;

    bool empty() const noexcept { return examples.empty(); }
    std::size_t size() const noexcept { return examples.size(); }
};

FewShotSet select_few_shot(const Dataset& train, std::size_t k, std::uint64_t seed);

/// Seeded synthetic binary dataset for offline runs against the simulated
/// backend.
Dataset make_synthetic_dataset(std::size_t n, std::uint64_t seed, std::string name = "synthetic");

enum class Origin { initial, gradient_edit, paraphrase };

std::string_view origin_name(Origin origin) noexcept;

struct Lineage {
    Origin origin = Origin::initial;
    std::string parent_id;
    /// Number of derivations between this prompt and the initial prompt.
    int step = 0;
    /// Ids from the initial prompt down to the parent.
    std::vector<std::string> ancestry;
    /// Critique that produced a gradient edit; empty otherwise.
    std::string gradient;
};

/// A task prompt template plus where it came from. The id is a 128-bit hex
/// digest of the template text only.
class PromptCandidate {
public:
    PromptCandidate() = default;
    explicit PromptCandidate(std::string template_text, Lineage lineage = {});

    const std::string& id() const noexcept { return id_; }
    const std::string& template_text() const noexcept { return template_; }
    const Lineage& lineage() const noexcept { return lineage_; }

    /// The "# Task" description the meta-prompts operate on.
    std::string task_description() const;

    /// Same scaffolding with the task description replaced, derived from this
    /// prompt.
    PromptCandidate derive(std::string_view new_task, Origin origin, std::string gradient = {}) const;

    bool has_ancestor(std::string_view id) const noexcept;

private:
    std::string template_;
    std::string id_;
    Lineage lineage_;
};

/// Validating factory for p0: the template must hold exactly one text slot.
PromptCandidate make_initial_prompt(std::string template_text);

std::string candidate_id(std::string_view template_text);

} // namespace protegi
