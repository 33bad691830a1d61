#include "iclbench/prompt_builder.hpp"

#include "iclbench/errors.hpp"
#include "iclbench/numeric_format.hpp"
#include "iclbench/random.hpp"

#include <algorithm>
#include <charconv>
#include <fmt/format.h>
#include <numeric>
#include <set>

namespace iclbench::prompt {

namespace {

std::string quoted_list(const std::vector<std::string>& names)
{
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) {
            out += i + 1 == names.size() ? " and " : ", ";
        }
        out += fmt::format("\"{}\"", names[i]);
    }
    return out;
}

bool shows_stats(PromptKind kind)
{
    return kind == PromptKind::DirectQA || kind == PromptKind::Reasoning;
}

std::string feature_lines(const data::Record& record, const PromptConfig& config, std::size_t k,
                          const NameTable& naming)
{
    if (record.features.size() < k) {
        throw ValidationError(fmt::format("record {} has {} features, {} requested", record.index,
                                          record.features.size(), k));
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    if (config.ablation) {
        if (const auto* perm = std::get_if<FeaturePermutation>(&*config.ablation)) {
            order = perm->order;
        }
    }
    std::string out;
    for (std::size_t pos = 0; pos < k; ++pos) {
        out += fmt::format("{}: {}\n", naming.features[pos], format_value(record.features[order[pos]]));
    }
    return out;
}

std::vector<std::string_view> split_blocks(std::string_view text)
{
    std::vector<std::string_view> blocks;
    std::size_t start = 0;
    for (;;) {
        const auto pos = text.find("\n\n", start);
        if (pos == std::string_view::npos) {
            blocks.push_back(text.substr(start));
            return blocks;
        }
        blocks.push_back(text.substr(start, pos - start));
        start = pos + 2;
    }
}

std::vector<std::string_view> split_lines(std::string_view block)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    for (;;) {
        const auto pos = block.find('\n', start);
        if (pos == std::string_view::npos) {
            lines.push_back(block.substr(start));
            return lines;
        }
        lines.push_back(block.substr(start, pos - start));
        start = pos + 1;
    }
}

struct LabelValue {
    std::string_view label;
    std::string_view value;
};

LabelValue split_line(std::string_view line)
{
    const auto colon = line.rfind(':');
    if (colon == std::string_view::npos) {
        throw ParseError(fmt::format("prompt line '{}' is not of the form 'Label: value'", line));
    }
    auto value = line.substr(colon + 1);
    while (!value.empty() && value.front() == ' ') {
        value.remove_prefix(1);
    }
    return {line.substr(0, colon), value};
}

double line_value(std::string_view line)
{
    const auto [label, text] = split_line(line);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ParseError(fmt::format("prompt line '{}' does not end in a number", line));
    }
    return v;
}

} // namespace

NameTable naming_for(const PromptConfig& config, const data::Dataset& dataset, std::size_t k)
{
    if (k < 1 || k > dataset.feature_count()) {
        throw ValidationError(fmt::format("k = {} is outside 1..{} for dataset '{}'", k, dataset.feature_count(),
                                          dataset.name));
    }
    NameTable names;
    if (config.kind == PromptKind::AnonymizedFeatures) {
        for (std::size_t i = 0; i < k; ++i) {
            names.features.push_back(fmt::format("Feature {}", i + 1));
        }
        names.target = std::string(kAnonymousTarget);
    } else {
        names.features.assign(dataset.feature_names.begin(), dataset.feature_names.begin() + static_cast<std::ptrdiff_t>(k));
        names.target = dataset.target_name;
    }
    if (!config.ablation) {
        return names;
    }

    if (const auto* perm = std::get_if<FeaturePermutation>(&*config.ablation)) {
        auto sorted = perm->order;
        std::sort(sorted.begin(), sorted.end());
        std::vector<std::size_t> identity(k);
        std::iota(identity.begin(), identity.end(), 0);
        if (sorted != identity) {
            throw ValidationError(fmt::format("feature permutation must reorder 0..{}", k - 1));
        }
        std::vector<std::string> reordered;
        for (auto i : perm->order) {
            reordered.push_back(names.features[i]);
        }
        names.features = std::move(reordered);
    } else if (const auto* remap = std::get_if<RandomNameRemap>(&*config.ablation)) {
        std::set<std::string> seen;
        for (auto& name : names.features) {
            const auto hit = remap->mapping.find(name);
            if (hit == remap->mapping.end()) {
                throw ValidationError(fmt::format("name remap has no entry for active feature '{}'", name));
            }
            if (!seen.insert(hit->second).second) {
                throw ValidationError(fmt::format("name remap sends two features to '{}'", hit->second));
            }
            name = hit->second;
        }
    }
    return names;
}

std::string build_instruction(const PromptConfig& config, const data::Dataset& dataset, std::size_t k)
{
    const auto names = naming_for(config, dataset, k);
    const char* noun = names.features.size() == 1 ? "feature" : "features";
    std::string text = fmt::format("Estimate the \"{}\" based on the given {} {}.", names.target, noun,
                                   quoted_list(names.features));
    if (shows_stats(config.kind)) {
        text += fmt::format(" The \"{}\" is typically around {} with a standard deviation of {}.", names.target,
                            format_value(dataset.stats.mean), format_value(dataset.stats.std));
    }
    if (config.kind == PromptKind::Reasoning) {
        text += fmt::format(" Explain your reasoning based on the given features, then end with a final line of the "
                            "form \"{} X.\" where X is a number.",
                            kFinalEstimatePrefix);
    } else {
        text += ' ';
        text += kNumberOnlyDirective;
    }
    return text;
}

std::vector<data::Record> select_examples(const data::SplitDataset& split, std::size_t m, std::uint64_t seed,
                                          std::optional<SortOrder> ordering)
{
    if (m > split.in_context.size()) {
        throw ValidationError(fmt::format("m = {} exceeds the {} in-context records", m, split.in_context.size()));
    }
    std::vector<std::size_t> positions(split.in_context.size());
    std::iota(positions.begin(), positions.end(), 0);
    Rng rng(seed);
    rng.shuffle(positions);

    std::vector<data::Record> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.push_back(split.in_context[positions[i]]);
    }
    if (ordering) {
        std::stable_sort(out.begin(), out.end(), [&](const data::Record& a, const data::Record& b) {
            return *ordering == SortOrder::Ascending ? a.target < b.target : a.target > b.target;
        });
    }
    return out;
}

std::vector<data::Record> randomize_targets(std::span<const data::Record> examples, data::Stats stats,
                                            std::uint64_t seed)
{
    if (!(stats.std > 0.0)) {
        throw ValidationError("randomized targets need a positive standard deviation");
    }
    Rng rng(seed);
    std::vector<data::Record> out(examples.begin(), examples.end());
    for (auto& rec : out) {
        rec.target = round2(stats.mean + stats.std * rng.normal());
    }
    return out;
}

std::string render_example(const data::Record& record, const PromptConfig& config, std::size_t k,
                           const NameTable& naming)
{
    return feature_lines(record, config, k, naming) + fmt::format("{}: {}", naming.target, format_value(record.target));
}

std::string render_query(const data::Record& record, const PromptConfig& config, std::size_t k,
                         const NameTable& naming)
{
    return feature_lines(record, config, k, naming) + naming.target + ":";
}

std::string compose(std::string_view instruction, std::string_view example_block, std::string_view query_block)
{
    std::string out(instruction);
    out += "\n\n";
    if (!example_block.empty()) {
        out += example_block;
        out += "\n\n";
    }
    out += query_block;
    return out;
}

std::uint64_t randomization_seed_for(std::uint64_t cell_seed, std::size_t query_position)
{
    return derive_seed(derive_seed(cell_seed, 0x52474E44ULL), query_position);
}

Prompt build_prompt(const FactorCell& cell, const data::Dataset& dataset, const data::SplitDataset& split,
                    std::size_t query_position)
{
    if (query_position >= split.test.size()) {
        throw ValidationError(fmt::format("query position {} is outside the {}-record test split", query_position,
                                          split.test.size()));
    }
    if (cell.m < 0 || cell.k < 1) {
        throw ValidationError(fmt::format("cell {} has invalid m or k", cell.id()));
    }
    const auto k = static_cast<std::size_t>(cell.k);
    const auto& query = split.test[query_position];
    const auto names = naming_for(cell.config, dataset, k);

    std::optional<SortOrder> ordering;
    if (cell.config.ablation) {
        if (const auto* sorted = std::get_if<SortedExamples>(&*cell.config.ablation)) {
            ordering = sorted->order;
        }
    }

    Prompt prompt;
    prompt.provenance.cell = cell;
    prompt.provenance.query_position = query_position;
    prompt.provenance.query_record_index = query.index;
    prompt.provenance.query_target = query.target;
    prompt.provenance.selection_seed = cell.seed;

    auto examples = select_examples(split, static_cast<std::size_t>(cell.m), cell.seed, ordering);
    for (const auto& rec : examples) {
        prompt.provenance.example_record_indices.push_back(rec.index);
    }
    if (cell.config.kind == PromptKind::RandomizedGroundTruth) {
        const auto seed = randomization_seed_for(cell.seed, query_position);
        prompt.provenance.randomization_seed = seed;
        examples = randomize_targets(examples, dataset.stats, seed);
    }

    prompt.instruction = build_instruction(cell.config, dataset, k);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (i > 0) {
            prompt.example_block += "\n\n";
        }
        prompt.example_block += render_example(examples[i], cell.config, k, names);
    }
    prompt.query_block = render_query(query, cell.config, k, names);
    prompt.full_text = compose(prompt.instruction, prompt.example_block, prompt.query_block);
    return prompt;
}

ParsedPrompt parse_rendered_prompt(std::string_view full_text)
{
    const auto blocks = split_blocks(full_text);
    if (blocks.size() < 2) {
        throw ParseError("prompt has no query block");
    }
    ParsedPrompt out;
    out.instruction = std::string(blocks.front());

    const auto query_lines = split_lines(blocks.back());
    const auto [target_label, target_value] = split_line(query_lines.back());
    if (!target_value.empty()) {
        throw ParseError(fmt::format("query line '{}' should be a bare target label", query_lines.back()));
    }
    out.target_label = std::string(target_label);
    for (std::size_t i = 0; i + 1 < query_lines.size(); ++i) {
        out.feature_labels.emplace_back(split_line(query_lines[i]).label);
        out.query_features.push_back(line_value(query_lines[i]));
    }

    for (std::size_t b = 1; b + 1 < blocks.size(); ++b) {
        const auto lines = split_lines(blocks[b]);
        if (lines.size() != query_lines.size()) {
            throw ParseError(fmt::format("example block starting '{}' has {} lines, expected {}", lines.front(),
                                         lines.size(), query_lines.size()));
        }
        std::vector<double> x;
        for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
            x.push_back(line_value(lines[i]));
        }
        out.example_features.push_back(std::move(x));
        out.example_targets.push_back(line_value(lines.back()));
    }
    return out;
}

} // namespace iclbench::prompt
