#pragma once

#include "iclbench/baseline_models.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iclbench::data {

/// Table as read from disk, restricted to the requested features followed by
/// the target column. Categorical cells are already encoded to numbers.
struct RawTable {
    std::vector<std::string> column_names; // features..., target
    std::vector<std::vector<double>> rows;
    std::string source_path;

    std::size_t feature_count() const { return column_names.empty() ? 0 : column_names.size() - 1; }
    const std::string& target_name() const { return column_names.back(); }
};

/// Per-column mapping from text cell to numeric code, e.g. {"smoker": {"yes": 1, "no": 0}}.
using CategoricalEncodings = std::map<std::string, std::map<std::string, double>, std::less<>>;

/// Reads an RFC-4180 CSV with a header row. Cells in requested columns must be
/// numeric, listed in `encodings`, or one of yes/no/true/false (case-insensitive,
/// mapped to 1/0). Throws SchemaError for missing columns or an empty file and
/// ParseError (with the data-row index) for cells that cannot be read.
RawTable load_csv(const std::filesystem::path& path, std::string_view target_column,
                  std::span<const std::string> feature_columns, const CategoricalEncodings& encodings = {});

/// Same as load_csv, reading from an in-memory document.
RawTable parse_csv(std::string_view text, std::string_view target_column,
                   std::span<const std::string> feature_columns, const CategoricalEncodings& encodings = {},
                   std::string source_path = {});

/// One row of a dataset. `index` is the row position in the source table and
/// identifies the record across splits.
struct Record {
    std::size_t index = 0;
    std::vector<double> features;
    double target = 0.0;

    friend bool operator==(const Record&, const Record&) = default;
};

struct Stats {
    double mean = 0.0;
    double std = 0.0;
};

/// Divisor used for the target standard deviation shown in prompts.
enum class StdConvention {
    Sample,     // N - 1; gives 12110.01 on the Insurance targets
    Population, // N
};

struct Dataset {
    std::string name;
    std::string target_name;
    std::vector<std::string> feature_names; // descending importance
    std::vector<Record> records;
    Stats stats;
    std::vector<double> importance; // aligned with feature_names

    std::size_t feature_count() const { return feature_names.size(); }
};

/// Rounds every value to 2 decimals, orders features by descending importance
/// (ties keep their input order) and computes target stats over all records.
/// Throws ValidationError on a bad importance vector or zero target spread.
Dataset preprocess(const RawTable& raw, std::span<const double> importance, std::string name = {},
                   StdConvention convention = StdConvention::Sample);

/// Inverse view of a Dataset as a RawTable (feature order as in the dataset).
RawTable to_raw_table(const Dataset& dataset);

/// Normalized impurity-reduction importances of a forest fitted on the table,
/// with `seed` overriding forest_params.seed. A single feature yields {1.0};
/// constant columns get 0. Throws ValidationError when the target is constant
/// and SizeError with fewer than 2 rows.
std::vector<double> rank_features(const RawTable& raw, const models::ForestParams& forest_params,
                                  std::uint64_t seed);

inline constexpr std::size_t kInContextSize = 100;
inline constexpr std::size_t kTestSize = 300;

struct SplitDataset {
    std::vector<Record> in_context;
    std::vector<Record> test;
    std::uint64_t split_seed = 0;
};

/// Shuffles record positions with Rng(seed); the first 100 become the
/// in-context split, the next 300 the test split.
SplitDataset split(const Dataset& dataset, std::uint64_t seed);

/// Mean and standard deviation of the targets, both rounded to 2 decimals.
Stats stats_of(std::span<const Record> records, StdConvention convention = StdConvention::Sample);

std::vector<double> targets_of(std::span<const Record> records);

/// First k feature values of every record.
models::FeatureMatrix features_of(std::span<const Record> records, std::size_t k);

} // namespace iclbench::data
