#include "golden.hpp"

#include "iclbench/orchestrator.hpp"
#include "iclbench/prompt_builder.hpp"

#include <fmt/format.h>

namespace iclbench::golden {

Fixture load_fixture(const std::filesystem::path& csv)
{
    const auto raw = data::load_csv(csv, kTarget, kFeatures);
    auto dataset = data::preprocess(raw, kImportance, kDatasetId);
    auto split = data::split(dataset, kSeed);
    return {std::move(dataset), std::move(split)};
}

std::vector<Case> cases()
{
    const PromptKind kinds[] = {PromptKind::NamedFeatures, PromptKind::AnonymizedFeatures,
                                PromptKind::RandomizedGroundTruth, PromptKind::DirectQA, PromptKind::Reasoning};
    auto make = [](std::string name, PromptConfig config, int m, int k) {
        FactorCell cell{kDatasetId, "golden", std::move(config), m, k, 0};
        cell.seed = orchestrator::cell_seed(kSeed, kDatasetId, m, k);
        return Case{std::move(name), std::move(cell), 0};
    };

    std::vector<Case> out;
    for (auto kind : kinds) {
        for (int k : {1, 3}) {
            for (int m : {0, 10}) {
                auto c = make(fmt::format("{}_k{}_m{}.txt", to_string(kind), k, m), PromptConfig{kind, {}}, m, k);
                if (!orchestrator::validate_cell(c.cell)) {
                    out.push_back(std::move(c));
                }
            }
        }
    }
    out.push_back(make("named_features_perm_k3_m10.txt",
                       PromptConfig{PromptKind::NamedFeatures, FeaturePermutation{{2, 0, 1}}}, 10, 3));
    out.push_back(make("named_features_sorted_desc_k3_m10.txt",
                       PromptConfig{PromptKind::NamedFeatures, SortedExamples{SortOrder::Descending}}, 10, 3));
    out.push_back(make("named_features_remap_k3_m10.txt",
                       PromptConfig{PromptKind::NamedFeatures,
                                    RandomNameRemap{{{"Voltage", "Humidity"},
                                                     {"Current Draw", "Wind Speed"},
                                                     {"Cabinet Temperature", "Rainfall"}}}},
                       10, 3));
    return out;
}

std::string render(const Case& c, const Fixture& fixture)
{
    return prompt::build_prompt(c.cell, fixture.dataset, fixture.split, c.query).full_text;
}

} // namespace iclbench::golden
