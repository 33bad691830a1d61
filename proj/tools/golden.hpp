#pragma once

#include "iclbench/cell.hpp"
#include "iclbench/data.hpp"

#include <filesystem>
#include <string>
#include <vector>

// Fixed prompt renderings on the checked-in synthetic dataset. The CLI writes
// them; the unit tests compare fresh renderings against the stored files.
namespace iclbench::golden {

inline constexpr const char* kDatasetId = "synthetic_linear";
inline constexpr const char* kTarget = "Power Usage";
inline const std::vector<std::string> kFeatures = {"Voltage", "Current Draw", "Cabinet Temperature"};
inline const std::vector<double> kImportance = {0.9, 0.09, 0.01};
inline constexpr std::uint64_t kSeed = 100;

struct Case {
    std::string file_name;
    FactorCell cell;
    std::size_t query = 0;
};

struct Fixture {
    data::Dataset dataset;
    data::SplitDataset split;
};

Fixture load_fixture(const std::filesystem::path& csv);

/// Every valid (configuration, k in {1,3}, m in {0,10}) plus one case per ablation.
std::vector<Case> cases();

std::string render(const Case& c, const Fixture& fixture);

} // namespace iclbench::golden
