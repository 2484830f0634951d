#include "protegi/data_model.hpp"
#include "protegi/digest.hpp"
#include "protegi/rng.hpp"
#include "protegi/templates.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

namespace protegi {

std::string_view label_text(Label label) noexcept
{
    return label == Label::positive ? "Yes" : "No";
}

Label flip(Label label) noexcept
{
    return label == Label::positive ? Label::negative : Label::positive;
}

Dataset::Dataset(std::string name, std::vector<LabeledExample> examples)
    : name_(std::move(name)), examples_(std::move(examples))
{
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 0; i < examples_.size(); ++i) {
        const auto& ex = examples_[i];
        if (ex.text.empty())
            throw IngestError(i + 1, "empty text for id '" + ex.id + "'");
        if (!seen.insert(ex.id).second)
            throw IngestError(i + 1, "duplicate id '" + ex.id + "'");
    }
}

std::size_t Dataset::count(Label label) const noexcept
{
    return static_cast<std::size_t>(
        std::count_if(examples_.begin(), examples_.end(), [&](const auto& ex) { return ex.label == label; }));
}

namespace {

std::string trim_lower(std::string_view s)
{
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    auto b = std::find_if(s.begin(), s.end(), not_space);
    auto e = std::find_if(s.rbegin(), s.rend(), not_space).base();
    std::string out(b, b < e ? e : b);
    for (auto& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

} // namespace

Dataset load_dataset(const std::filesystem::path& path, std::string_view format, const LabelMapping& labels)
{
    if (format != "jsonl")
        throw IngestError(0, "unsupported record format '" + std::string(format) + "'");
    std::ifstream in(path);
    if (!in)
        throw IngestError(0, "cannot open " + path.string());

    const std::string pos = trim_lower(labels.positive);
    const std::string neg = trim_lower(labels.negative);
    const std::string stem = path.stem().string();

    std::vector<LabeledExample> examples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_lower(line).empty())
            continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw IngestError(line_no, std::string("malformed record: ") + e.what());
        }
        if (!record.is_object())
            throw IngestError(line_no, "record is not an object");
        for (const char* field : {"text", "label"}) {
            if (!record.contains(field) || !record[field].is_string())
                throw IngestError(line_no, std::string("missing string field '") + field + "'");
        }
        LabeledExample ex;
        ex.text = record["text"].get<std::string>();
        const std::string label = trim_lower(record["label"].get<std::string>());
        if (label == pos)
            ex.label = Label::positive;
        else if (label == neg)
            ex.label = Label::negative;
        else
            throw IngestError(line_no, "unknown label '" + record["label"].get<std::string>() + "'");
        if (record.contains("id") && record["id"].is_string())
            ex.id = record["id"].get<std::string>();
        else if (record.contains("id") && record["id"].is_number_integer())
            ex.id = std::to_string(record["id"].get<long long>());
        else
            ex.id = stem + ":" + std::to_string(line_no);
        if (ex.text.empty())
            throw IngestError(line_no, "empty text");
        examples.push_back(std::move(ex));
    }
    if (examples.empty())
        throw IngestError(0, "no records in " + path.string());
    return Dataset(stem, std::move(examples));
}

DataSplit split_dataset(const Dataset& ds, std::uint64_t seed, std::size_t n_dev, std::size_t n_test)
{
    if (n_dev + n_test > ds.size())
        throw SplitError("split needs " + std::to_string(n_dev + n_test) + " examples, dataset has " +
                         std::to_string(ds.size()));
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    auto take = [&](std::size_t from, std::size_t to, const char* suffix) {
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(from),
                                     order.begin() + static_cast<std::ptrdiff_t>(to));
        std::sort(idx.begin(), idx.end());
        std::vector<LabeledExample> out;
        out.reserve(idx.size());
        for (auto i : idx)
            out.push_back(ds[i]);
        return Dataset(ds.name() + suffix, std::move(out));
    };
    return DataSplit{
        take(0, n_dev, "/dev"),
        take(n_dev, n_dev + n_test, "/test"),
        take(n_dev + n_test, ds.size(), "/train"),
    };
}

FewShotSet select_few_shot(const Dataset& train, std::size_t k, std::uint64_t seed)
{
    if (train.size() < k)
        throw SplitError("few-shot set of " + std::to_string(k) + " needs that many training examples, have " +
                         std::to_string(train.size()));
    Rng rng(seed);
    FewShotSet fs;
    for (auto i : rng.sample_without_replacement(train.size(), k))
        fs.examples.push_back(train[i]);
    return fs;
}

Dataset make_synthetic_dataset(std::size_t n, std::uint64_t seed, std::string name)
{
    static constexpr std::string_view subjects[] = {"the council", "my neighbour", "this forum", "the article",
                                                    "a stranger", "the reviewer", "our team", "the speaker"};
    static constexpr std::string_view verbs[] = {"wrote about", "complained about", "joked about", "argued against",
                                                 "praised", "questioned", "described", "mocked"};
    static constexpr std::string_view objects[] = {"the new policy", "last night's game", "the local market",
                                                   "a recent film", "the weather", "their coworkers",
                                                   "an old tradition", "the election"};
    Rng rng(seed);
    std::vector<LabeledExample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        LabeledExample ex;
        ex.id = name + ":" + std::to_string(i + 1);
        ex.text = std::string(subjects[rng.uniform_index(std::size(subjects))]) + " " +
                  std::string(verbs[rng.uniform_index(std::size(verbs))]) + " " +
                  std::string(objects[rng.uniform_index(std::size(objects))]) + " (#" + std::to_string(i + 1) + ")";
        ex.label = rng.bernoulli(0.5) ? Label::positive : Label::negative;
        out.push_back(std::move(ex));
    }
    return Dataset(std::move(name), std::move(out));
}

std::string_view origin_name(Origin origin) noexcept
{
    switch (origin) {
    case Origin::initial:
        return "initial";
    case Origin::gradient_edit:
        return "gradient-edit";
    case Origin::paraphrase:
        return "paraphrase";
    }
    return "unknown";
}

std::string candidate_id(std::string_view template_text)
{
    return sha256_hex(template_text).substr(0, 32);
}

PromptCandidate::PromptCandidate(std::string template_text, Lineage lineage)
    : template_(std::move(template_text)), id_(candidate_id(template_)), lineage_(std::move(lineage))
{
}

std::string PromptCandidate::task_description() const
{
    return extract_task(template_);
}

PromptCandidate PromptCandidate::derive(std::string_view new_task, Origin origin, std::string gradient) const
{
    Lineage child;
    child.origin = origin;
    child.parent_id = id_;
    child.step = lineage_.step + 1;
    child.ancestry = lineage_.ancestry;
    child.ancestry.push_back(id_);
    child.gradient = std::move(gradient);
    return PromptCandidate(replace_task(template_, new_task), std::move(child));
}

bool PromptCandidate::has_ancestor(std::string_view id) const noexcept
{
    return std::find(lineage_.ancestry.begin(), lineage_.ancestry.end(), id) != lineage_.ancestry.end();
}

PromptCandidate make_initial_prompt(std::string template_text)
{
    const auto slots = count_slot(template_text, "text");
    if (slots != 1)
        throw TemplateError("task prompt must contain exactly one {text} slot, found " + std::to_string(slots));
    return PromptCandidate(std::move(template_text));
}

} // namespace protegi
