#pragma once

#include "iclbench/cell.hpp"
#include "iclbench/data.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iclbench::prompt {

/// Directive that ends every non-reasoning instruction.
inline constexpr std::string_view kNumberOnlyDirective = "Just provide a number and no explanation as the output.";

/// Final-line form requested by the reasoning configuration.
inline constexpr std::string_view kFinalEstimatePrefix = "My final estimation is";

inline constexpr std::string_view kAnonymousTarget = "Output";

/// Labels shown in a prompt, in display order.
struct NameTable {
    std::vector<std::string> features;
    std::string target;
};

/// Resolves the labels for the first k features of `dataset` under `config`:
/// real names, "Feature 1".."Feature k" / "Output", or remapped names. A
/// FeaturePermutation ablation reorders the result. Throws ValidationError on
/// k out of range, a non-permutation, or a remap that is not a bijection over
/// the active names.
NameTable naming_for(const PromptConfig& config, const data::Dataset& dataset, std::size_t k);

/// Task paragraph. Reasoning and DirectQA include the target's mean and
/// standard deviation; every kind except Reasoning ends with kNumberOnlyDirective.
std::string build_instruction(const PromptConfig& config, const data::Dataset& dataset, std::size_t k);

/// First m records of a Rng(seed) shuffle of the in-context split, optionally
/// re-sorted by target. Throws ValidationError if m exceeds the split.
std::vector<data::Record> select_examples(const data::SplitDataset& split, std::size_t m, std::uint64_t seed,
                                          std::optional<SortOrder> ordering = std::nullopt);

/// Replaces every target with round2(mean + std * z), z ~ N(0,1) drawn from
/// Rng(seed) in example order. Features are untouched. Throws ValidationError
/// when std <= 0.
std::vector<data::Record> randomize_targets(std::span<const data::Record> examples, data::Stats stats,
                                            std::uint64_t seed);

/// "Label: value" per active feature (display order) followed by "Target: value".
std::string render_example(const data::Record& record, const PromptConfig& config, std::size_t k,
                           const NameTable& naming);

/// Feature lines of the query followed by the bare "Target:" label.
std::string render_query(const data::Record& record, const PromptConfig& config, std::size_t k,
                         const NameTable& naming);

/// Canonical layout: instruction, blank line, examples separated by blank
/// lines, blank line, query block. No trailing newline.
std::string compose(std::string_view instruction, std::string_view example_block, std::string_view query_block);

struct Provenance {
    FactorCell cell;
    std::size_t query_position = 0;      // index into split.test
    std::size_t query_record_index = 0;  // Record::index of the query
    double query_target = 0.0;
    std::vector<std::size_t> example_record_indices;
    std::uint64_t selection_seed = 0;
    std::optional<std::uint64_t> randomization_seed;
};

struct Prompt {
    std::string instruction;
    std::string example_block;
    std::string query_block;
    std::string full_text;
    Provenance provenance;
};

/// Seed for the randomized targets shown with one query. Each query draws its own
/// targets so a cell's error averages over draws instead of hinging on one.
std::uint64_t randomization_seed_for(std::uint64_t cell_seed, std::size_t query_position);

/// Renders the prompt for test record `split.test[query_position]`. Examples
/// are selected with the cell seed, so every query of a cell sees the same
/// records; only randomized targets vary per query. Byte-deterministic in (cell, dataset, split, position).
Prompt build_prompt(const FactorCell& cell, const data::Dataset& dataset, const data::SplitDataset& split,
                    std::size_t query_position);

/// Numbers recovered from a rendered prompt.
struct ParsedPrompt {
    std::string instruction;
    std::string target_label;
    std::vector<std::string> feature_labels;
    std::vector<std::vector<double>> example_features;
    std::vector<double> example_targets;
    std::vector<double> query_features;
};

/// Inverse of the canonical layout. Throws ParseError naming the offending line.
ParsedPrompt parse_rendered_prompt(std::string_view full_text);

} // namespace iclbench::prompt
