#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace iclbench {

enum class PromptKind {
    NamedFeatures,
    AnonymizedFeatures,
    RandomizedGroundTruth,
    DirectQA,
    Reasoning,
};

std::string_view to_string(PromptKind kind);

/// Accepts the canonical snake_case names and the short aliases a, b, c, qa.
PromptKind prompt_kind_from_string(std::string_view text);

/// Reorders the k feature lines: position i shows feature order[i].
struct FeaturePermutation {
    std::vector<std::size_t> order;
    friend bool operator==(const FeaturePermutation&, const FeaturePermutation&) = default;
};

enum class SortOrder { Ascending, Descending };

/// Sorts the selected in-context examples by their (true) target.
struct SortedExamples {
    SortOrder order = SortOrder::Ascending;
    friend bool operator==(const SortedExamples&, const SortedExamples&) = default;
};

/// Displays each real feature name under a substitute name.
struct RandomNameRemap {
    std::map<std::string, std::string> mapping;
    friend bool operator==(const RandomNameRemap&, const RandomNameRemap&) = default;
};

using Ablation = std::variant<FeaturePermutation, SortedExamples, RandomNameRemap>;

struct PromptConfig {
    PromptKind kind = PromptKind::NamedFeatures;
    std::optional<Ablation> ablation;

    friend bool operator==(const PromptConfig&, const PromptConfig&) = default;
};

/// Stable short name, e.g. "anonymized_features" or "direct_qa+perm_2_0_1".
std::string config_tag(const PromptConfig& config);

/// One experiment point.
struct FactorCell {
    std::string dataset_id;
    std::string model_id;
    PromptConfig config;
    int m = 0;
    int k = 1;
    std::uint64_t seed = 0;

    /// "<dataset>/<model>/<config_tag>/m<m>/k<k>"
    std::string id() const;

    friend bool operator==(const FactorCell&, const FactorCell&) = default;
};

nlohmann::json config_to_json(const PromptConfig& config);
/// Accepts either a bare kind string or {"kind": ..., "ablation": {...}}.
PromptConfig config_from_json(const nlohmann::json& doc);

nlohmann::json cell_to_json(const FactorCell& cell);
FactorCell cell_from_json(const nlohmann::json& doc);

} // namespace iclbench
