#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace symreg {

// Missing observations are stored as quiet NaN inside the value columns.
inline constexpr double missing_value = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) noexcept { return std::isnan(v); }

struct Column {
    std::string name;
    std::vector<double> values;
};

// Named, equal-length numeric columns. Immutable after construction.
class TimeSeriesTable {
public:
    TimeSeriesTable() = default;
    // Throws StructuralError on unequal or zero lengths, SchemaError on empty
    // or duplicate names.
    explicit TimeSeriesTable(std::vector<Column> columns);

    std::size_t length() const noexcept { return length_; }
    std::size_t width() const noexcept { return columns_.size(); }

    const Column& column(std::size_t index) const { return columns_.at(index); }
    std::span<const double> values(std::size_t index) const { return columns_.at(index).values; }
    std::span<const Column> columns() const noexcept { return columns_; }
    std::vector<std::string> names() const;

    std::optional<std::size_t> index_of(std::string_view name) const;
    // Like index_of, but throws SchemaError for unknown names.
    std::size_t require_index(std::string_view name) const;

    bool has_missing() const noexcept { return has_missing_; }

private:
    std::vector<Column> columns_;
    std::size_t length_ = 0;
    bool has_missing_ = false;
};

struct CsvOptions {
    char delimiter = ',';
    char decimal = '.';
    std::vector<std::string> missing_tokens { "NA", "" };
};

TimeSeriesTable load_csv(std::istream& source, const CsvOptions& options = {});
TimeSeriesTable load_csv_file(const std::filesystem::path& path, const CsvOptions& options = {});
void write_csv(std::ostream& sink, const TimeSeriesTable& table, const CsvOptions& options = {});

// Central five-point stencil (f[t-2] - 8 f[t-1] + 8 f[t+1] - f[t+2]) / 12.
// The first and last two entries are missing; no one-sided formulas are used.
std::vector<double> five_point_derivative(std::span<const double> values);

// Replaces each listed column by its five-point derivative.
TimeSeriesTable apply_derivatives(const TimeSeriesTable& table, const std::set<std::string>& variables);

// Inclusive, 0-based index interval.
struct IndexRange {
    std::size_t first = 0;
    std::size_t last = 0;

    std::size_t size() const noexcept { return last - first + 1; }
    bool contains(std::size_t i) const noexcept { return i >= first && i <= last; }
    bool operator==(const IndexRange&) const = default;
};

struct Partition {
    IndexRange fitness;
    IndexRange validation;
    IndexRange test;

    // Throws RangeError unless all ranges are well formed, inside
    // [0, length-1], ordered fitness < validation < test by start, and
    // fitness/validation do not overlap.
    void validate(std::size_t length) const;

    // Converts 1-based inclusive observation numbers.
    static Partition from_one_based(std::size_t fit_first, std::size_t fit_last,
                                    std::size_t val_first, std::size_t val_last,
                                    std::size_t test_first, std::size_t test_last);

    bool operator==(const Partition&) const = default;
};

// Lagged view of a table: cell((v, lag), t) = table[v][t - lag]. Rows below
// max_lag are not valid because some lagged references are unresolvable.
class LaggedDesignMatrix {
public:
    LaggedDesignMatrix(TimeSeriesTable table, std::size_t max_lag);

    std::size_t max_lag() const noexcept { return max_lag_; }
    std::size_t length() const noexcept { return table_.length(); }
    std::size_t first_valid_row() const noexcept { return max_lag_; }
    IndexRange valid_rows() const noexcept { return { max_lag_, table_.length() - 1 }; }
    std::size_t variable_count() const noexcept { return table_.width(); }
    bool has_missing() const noexcept { return table_.has_missing(); }

    const TimeSeriesTable& table() const noexcept { return table_; }

    // Throws SchemaError for an unknown variable or a lag above max_lag and
    // RangeError for a row that is not valid.
    double cell(std::size_t variable, std::size_t lag, std::size_t row) const;

    // Values of (variable, lag) over rows [rows.first, rows.last]; unchecked.
    std::span<const double> lagged(std::size_t variable, std::size_t lag, IndexRange rows) const noexcept
    {
        return table_.values(variable).subspan(rows.first - lag, rows.size());
    }

private:
    TimeSeriesTable table_;
    std::size_t max_lag_;
};

} // namespace symreg
