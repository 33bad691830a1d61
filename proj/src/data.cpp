#include "iclbench/data.hpp"

#include "iclbench/errors.hpp"
#include "iclbench/numeric_format.hpp"
#include "iclbench/random.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <numeric>
#include <sstream>

namespace iclbench::data {

namespace {

std::vector<std::vector<std::string>> read_rfc4180(std::string_view text)
{
    if (text.starts_with("\xEF\xBB\xBF")) {
        text.remove_prefix(3);
    }
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && row.front().empty())) {
            rows.push_back(std::move(row));
        }
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field_started) {
                quoted = true;
                field_started = true;
            } else {
                field.push_back(c);
            }
            break;
        case ',':
            end_field();
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') {
                ++i;
            }
            end_row();
            break;
        case '\n':
            end_row();
            break;
        default:
            field.push_back(c);
            field_started = true;
        }
    }
    if (quoted) {
        throw ParseError("unterminated quoted field at end of CSV");
    }
    if (field_started || !row.empty()) {
        end_row();
    }
    return rows;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

double parse_cell(std::string_view raw, const std::string& column, std::size_t row_index,
                  const CategoricalEncodings& encodings)
{
    const auto cell = trim(raw);
    if (auto col = encodings.find(column); col != encodings.end()) {
        if (auto hit = col->second.find(std::string(cell)); hit != col->second.end()) {
            return hit->second;
        }
    }
    double value = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, value);
    if (!cell.empty() && res.ec == std::errc{} && res.ptr == last && std::isfinite(value)) {
        return value;
    }
    const auto l = lower(cell);
    if (l == "yes" || l == "true") {
        return 1.0;
    }
    if (l == "no" || l == "false") {
        return 0.0;
    }
    throw ParseError(fmt::format("row {}: column '{}' has non-numeric value '{}'", row_index, column, cell));
}

} // namespace

RawTable parse_csv(std::string_view text, std::string_view target_column, std::span<const std::string> feature_columns,
                   const CategoricalEncodings& encodings, std::string source_path)
{
    const auto rows = read_rfc4180(text);
    if (rows.empty()) {
        throw SchemaError(fmt::format("CSV '{}' is empty (no header row)", source_path));
    }
    const auto& header = rows.front();
    auto column_of = [&](std::string_view name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trim(header[i]) == name) {
                return i;
            }
        }
        throw SchemaError(fmt::format("CSV '{}' has no column named '{}'", source_path, name));
    };

    RawTable table;
    table.source_path = std::move(source_path);
    std::vector<std::size_t> picks;
    for (const auto& f : feature_columns) {
        picks.push_back(column_of(f));
        table.column_names.push_back(f);
    }
    picks.push_back(column_of(target_column));
    table.column_names.emplace_back(target_column);
    if (table.column_names.size() < 2) {
        throw SchemaError("a table needs at least one feature column and a target column");
    }

    table.rows.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& src = rows[r];
        if (src.size() != header.size()) {
            throw ParseError(fmt::format("row {}: expected {} cells, found {}", r - 1, header.size(), src.size()));
        }
        std::vector<double> out;
        out.reserve(picks.size());
        for (std::size_t c = 0; c < picks.size(); ++c) {
            out.push_back(parse_cell(src[picks[c]], table.column_names[c], r - 1, encodings));
        }
        table.rows.push_back(std::move(out));
    }
    return table;
}

RawTable load_csv(const std::filesystem::path& path, std::string_view target_column,
                  std::span<const std::string> feature_columns, const CategoricalEncodings& encodings)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw SchemaError(fmt::format("cannot open CSV '{}'", path.string()));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), target_column, feature_columns, encodings, path.string());
}

Stats stats_of(std::span<const Record> records, StdConvention convention)
{
    if (records.size() < 2) {
        throw SizeError(fmt::format("stats need at least 2 records, got {}", records.size()));
    }
    const auto n = static_cast<double>(records.size());
    double mean = 0.0;
    for (const auto& r : records) {
        mean += r.target;
    }
    mean /= n;
    double ss = 0.0;
    for (const auto& r : records) {
        ss += (r.target - mean) * (r.target - mean);
    }
    const double divisor = convention == StdConvention::Sample ? n - 1.0 : n;
    return {round2(mean), round2(std::sqrt(ss / divisor))};
}

Dataset preprocess(const RawTable& raw, std::span<const double> importance, std::string name,
                   StdConvention convention)
{
    const auto k = raw.feature_count();
    if (k == 0) {
        throw SchemaError("table has no feature columns");
    }
    if (importance.size() != k) {
        throw ValidationError(fmt::format("importance has {} entries for {} features", importance.size(), k));
    }
    for (double v : importance) {
        if (!(v >= 0.0)) {
            throw ValidationError("importance entries must be non-negative");
        }
    }

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });

    Dataset ds;
    ds.name = name.empty() ? std::filesystem::path(raw.source_path).stem().string() : std::move(name);
    ds.target_name = raw.target_name();
    for (auto i : order) {
        ds.feature_names.push_back(raw.column_names[i]);
        ds.importance.push_back(importance[i]);
    }
    ds.records.reserve(raw.rows.size());
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        const auto& row = raw.rows[r];
        if (row.size() != k + 1) {
            throw SchemaError(fmt::format("row {} has {} cells, expected {}", r, row.size(), k + 1));
        }
        Record rec;
        rec.index = r;
        for (auto i : order) {
            rec.features.push_back(round2(row[i]));
        }
        rec.target = round2(row[k]);
        ds.records.push_back(std::move(rec));
    }
    ds.stats = stats_of(ds.records, convention);
    if (!(ds.stats.std > 0.0)) {
        throw ValidationError(fmt::format("target '{}' has zero standard deviation", ds.target_name));
    }
    return ds;
}

RawTable to_raw_table(const Dataset& dataset)
{
    RawTable raw;
    raw.column_names = dataset.feature_names;
    raw.column_names.push_back(dataset.target_name);
    raw.source_path = dataset.name;
    for (const auto& rec : dataset.records) {
        auto row = rec.features;
        row.push_back(rec.target);
        raw.rows.push_back(std::move(row));
    }
    return raw;
}

std::vector<double> rank_features(const RawTable& raw, const models::ForestParams& forest_params, std::uint64_t seed)
{
    if (raw.rows.size() < 2) {
        throw SizeError(fmt::format("feature ranking needs at least 2 records, got {}", raw.rows.size()));
    }
    const auto k = raw.feature_count();
    if (k == 1) {
        return {1.0};
    }
    models::FeatureMatrix x;
    std::vector<double> y;
    x.reserve(raw.rows.size());
    for (const auto& row : raw.rows) {
        x.emplace_back(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k));
        y.push_back(row[k]);
    }
    auto params = forest_params;
    params.seed = seed;
    const auto forest = models::fit_forest(x, y, params);
    if (!forest.importance_defined) {
        throw ValidationError(fmt::format("cannot rank features of '{}': target is constant", raw.source_path));
    }
    return forest.feature_importance;
}

SplitDataset split(const Dataset& dataset, std::uint64_t seed)
{
    constexpr auto needed = kInContextSize + kTestSize;
    const auto have = dataset.records.size();
    if (have < needed) {
        throw SizeError(fmt::format("dataset '{}' has {} records; a split needs {} ({} short)", dataset.name, have,
                                    needed, needed - have));
    }
    std::vector<std::size_t> positions(have);
    std::iota(positions.begin(), positions.end(), 0);
    Rng rng(seed);
    rng.shuffle(positions);

    SplitDataset out;
    out.split_seed = seed;
    for (std::size_t i = 0; i < kInContextSize; ++i) {
        out.in_context.push_back(dataset.records[positions[i]]);
    }
    for (std::size_t i = kInContextSize; i < needed; ++i) {
        out.test.push_back(dataset.records[positions[i]]);
    }
    return out;
}

std::vector<double> targets_of(std::span<const Record> records)
{
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back(r.target);
    }
    return out;
}

models::FeatureMatrix features_of(std::span<const Record> records, std::size_t k)
{
    models::FeatureMatrix out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (r.features.size() < k) {
            throw ValidationError(fmt::format("record {} has {} features, {} requested", r.index, r.features.size(), k));
        }
        out.emplace_back(r.features.begin(), r.features.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return out;
}

} // namespace iclbench::data
