#include "iclbench/cell.hpp"

#include "iclbench/errors.hpp"

#include <fmt/format.h>

namespace iclbench {

std::string_view to_string(PromptKind kind)
{
    switch (kind) {
    case PromptKind::NamedFeatures:
        return "named_features";
    case PromptKind::AnonymizedFeatures:
        return "anonymized_features";
    case PromptKind::RandomizedGroundTruth:
        return "randomized_ground_truth";
    case PromptKind::DirectQA:
        return "direct_qa";
    case PromptKind::Reasoning:
        return "reasoning";
    }
    return "unknown";
}

PromptKind prompt_kind_from_string(std::string_view text)
{
    if (text == "named_features" || text == "a") {
        return PromptKind::NamedFeatures;
    }
    if (text == "anonymized_features" || text == "b") {
        return PromptKind::AnonymizedFeatures;
    }
    if (text == "randomized_ground_truth" || text == "c") {
        return PromptKind::RandomizedGroundTruth;
    }
    if (text == "direct_qa" || text == "qa") {
        return PromptKind::DirectQA;
    }
    if (text == "reasoning") {
        return PromptKind::Reasoning;
    }
    throw SchemaError(fmt::format("unknown prompt configuration '{}'", text));
}

std::string config_tag(const PromptConfig& config)
{
    std::string tag(to_string(config.kind));
    if (!config.ablation) {
        return tag;
    }
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, FeaturePermutation>) {
                tag += "+perm";
                for (auto i : a.order) {
                    tag += fmt::format("_{}", i);
                }
            } else if constexpr (std::is_same_v<T, SortedExamples>) {
                tag += a.order == SortOrder::Ascending ? "+sorted_asc" : "+sorted_desc";
            } else {
                tag += "+remap";
                for (const auto& [from, to] : a.mapping) {
                    tag += fmt::format("_{}={}", from, to);
                }
            }
        },
        *config.ablation);
    return tag;
}

std::string FactorCell::id() const
{
    return fmt::format("{}/{}/{}/m{}/k{}", dataset_id, model_id, config_tag(config), m, k);
}

nlohmann::json config_to_json(const PromptConfig& config)
{
    nlohmann::json doc{{"kind", to_string(config.kind)}};
    if (config.ablation) {
        std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, FeaturePermutation>) {
                    doc["ablation"] = {{"feature_permutation", a.order}};
                } else if constexpr (std::is_same_v<T, SortedExamples>) {
                    doc["ablation"] = {{"sorted_examples", a.order == SortOrder::Ascending ? "ascending" : "descending"}};
                } else {
                    doc["ablation"] = {{"random_name_remap", a.mapping}};
                }
            },
            *config.ablation);
    }
    return doc;
}

PromptConfig config_from_json(const nlohmann::json& doc)
{
    try {
        if (doc.is_string()) {
            return {prompt_kind_from_string(doc.get<std::string>()), std::nullopt};
        }
        PromptConfig config{prompt_kind_from_string(doc.at("kind").get<std::string>()), std::nullopt};
        if (auto it = doc.find("ablation"); it != doc.end() && !it->is_null()) {
            if (it->contains("feature_permutation")) {
                config.ablation = FeaturePermutation{it->at("feature_permutation").get<std::vector<std::size_t>>()};
            } else if (it->contains("sorted_examples")) {
                const auto order = it->at("sorted_examples").get<std::string>();
                if (order != "ascending" && order != "descending") {
                    throw SchemaError(fmt::format("sorted_examples must be ascending or descending, got '{}'", order));
                }
                config.ablation = SortedExamples{order == "ascending" ? SortOrder::Ascending : SortOrder::Descending};
            } else if (it->contains("random_name_remap")) {
                config.ablation = RandomNameRemap{it->at("random_name_remap").get<std::map<std::string, std::string>>()};
            } else {
                throw SchemaError(fmt::format("unknown ablation {}", it->dump()));
            }
        }
        return config;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(fmt::format("malformed prompt configuration {}: {}", doc.dump(), e.what()));
    }
}

nlohmann::json cell_to_json(const FactorCell& cell)
{
    return {{"dataset", cell.dataset_id}, {"model", cell.model_id}, {"config", config_to_json(cell.config)},
            {"m", cell.m},                {"k", cell.k},              {"seed", cell.seed}};
}

FactorCell cell_from_json(const nlohmann::json& doc)
{
    try {
        FactorCell cell;
        cell.dataset_id = doc.at("dataset").get<std::string>();
        cell.model_id = doc.at("model").get<std::string>();
        cell.config = config_from_json(doc.at("config"));
        cell.m = doc.at("m").get<int>();
        cell.k = doc.at("k").get<int>();
        cell.seed = doc.value("seed", std::uint64_t{0});
        return cell;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(fmt::format("malformed cell {}: {}", doc.dump(), e.what()));
    }
}

} // namespace iclbench
