#include "symreg/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "symreg/error.hpp"

namespace symreg {

TimeSeriesTable::TimeSeriesTable(std::vector<Column> columns)
    : columns_(std::move(columns))
{
    if (columns_.empty()) {
        throw StructuralError("table has no columns");
    }
    length_ = columns_.front().values.size();
    if (length_ == 0) {
        throw StructuralError("table has no observations");
    }
    std::unordered_set<std::string> seen;
    for (const auto& c : columns_) {
        if (c.name.empty()) {
            throw SchemaError("empty column name");
        }
        if (!seen.insert(c.name).second) {
            throw SchemaError("duplicate column name '" + c.name + "'");
        }
        if (c.values.size() != length_) {
            throw StructuralError("column '" + c.name + "' has " + std::to_string(c.values.size())
                                  + " observations, expected " + std::to_string(length_));
        }
        has_missing_ = has_missing_ || std::any_of(c.values.begin(), c.values.end(), is_missing);
    }
}

std::vector<std::string> TimeSeriesTable::names() const
{
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) {
        out.push_back(c.name);
    }
    return out;
}

std::optional<std::size_t> TimeSeriesTable::index_of(std::string_view name) const
{
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t TimeSeriesTable::require_index(std::string_view name) const
{
    if (auto i = index_of(name)) {
        return *i;
    }
    throw SchemaError("unknown variable '" + std::string(name) + "'");
}

namespace {

std::string_view trim(std::string_view s)
{
    constexpr std::string_view ws = " \t\r";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

// Splits one record. Fields may be wrapped in double quotes, with "" as an
// escaped quote; quoted fields cannot span lines.
std::vector<std::string> split_record(std::string_view line, char delimiter, std::size_t line_no)
{
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && trim(field).empty()) {
            quoted = true;
            was_quoted = true;
            field.clear();
        } else if (c == delimiter) {
            fields.emplace_back(was_quoted ? field : std::string(trim(field)));
            field.clear();
            was_quoted = false;
        } else {
            field.push_back(c);
        }
    }
    if (quoted) {
        throw StructuralError("unterminated quoted field on line " + std::to_string(line_no));
    }
    fields.emplace_back(was_quoted ? field : std::string(trim(field)));
    return fields;
}

std::optional<double> parse_real(std::string_view text, char decimal)
{
    std::string buffer(text);
    if (decimal != '.') {
        std::replace(buffer.begin(), buffer.end(), decimal, '.');
    }
    std::string_view s = buffer;
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc {} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

bool needs_quoting(std::string_view s, char delimiter)
{
    return s.find_first_of(std::string { delimiter, '"', '\n', '\r' }) != std::string_view::npos
        || s != trim(s) || s.empty();
}

} // namespace

TimeSeriesTable load_csv(std::istream& source, const CsvOptions& options)
{
    if (options.delimiter == options.decimal) {
        throw UsageError("CSV delimiter and decimal separator must differ");
    }
    std::string line;
    std::size_t line_no = 0;
    std::vector<Column> columns;
    while (std::getline(source, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) {
            line.erase(0, 3);
        }
        if (trim(line).empty() && (columns.empty() || columns.size() > 1)) {
            continue;
        }
        auto fields = split_record(line, options.delimiter, line_no);
        if (columns.empty()) {
            std::unordered_set<std::string> seen;
            for (auto& name : fields) {
                if (name.empty()) {
                    throw SchemaError("empty column name in header");
                }
                if (!seen.insert(name).second) {
                    throw SchemaError("duplicate column name '" + name + "' in header");
                }
                columns.push_back({ std::move(name), {} });
            }
            continue;
        }
        if (fields.size() != columns.size()) {
            throw StructuralError("line " + std::to_string(line_no) + " has " + std::to_string(fields.size())
                                  + " fields, header has " + std::to_string(columns.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const auto& cell = fields[c];
            if (std::find(options.missing_tokens.begin(), options.missing_tokens.end(), cell)
                != options.missing_tokens.end()) {
                columns[c].values.push_back(missing_value);
                continue;
            }
            auto value = parse_real(cell, options.decimal);
            if (!value) {
                throw ParseError("cannot parse '" + cell + "' as a number", line_no, c + 1);
            }
            columns[c].values.push_back(*value);
        }
    }
    if (columns.empty()) {
        throw StructuralError("CSV input has no header row");
    }
    return TimeSeriesTable(std::move(columns));
}

TimeSeriesTable load_csv_file(const std::filesystem::path& path, const CsvOptions& options)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open dataset '" + path.string() + "'");
    }
    return load_csv(in, options);
}

void write_csv(std::ostream& sink, const TimeSeriesTable& table, const CsvOptions& options)
{
    auto write_name = [&](const std::string& name) {
        if (needs_quoting(name, options.delimiter)) {
            sink << '"';
            for (char ch : name) {
                if (ch == '"') {
                    sink << '"';
                }
                sink << ch;
            }
            sink << '"';
        } else {
            sink << name;
        }
    };
    for (std::size_t c = 0; c < table.width(); ++c) {
        if (c > 0) {
            sink << options.delimiter;
        }
        write_name(table.column(c).name);
    }
    sink << '\n';
    const std::string missing = options.missing_tokens.empty() ? std::string("NA") : options.missing_tokens.front();
    std::array<char, 64> buf {};
    for (std::size_t r = 0; r < table.length(); ++r) {
        for (std::size_t c = 0; c < table.width(); ++c) {
            if (c > 0) {
                sink << options.delimiter;
            }
            double v = table.values(c)[r];
            if (is_missing(v)) {
                sink << missing;
                continue;
            }
            auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
            std::string text(buf.data(), end);
            if (options.decimal != '.') {
                std::replace(text.begin(), text.end(), '.', options.decimal);
            }
            sink << text;
        }
        sink << '\n';
    }
}

std::vector<double> five_point_derivative(std::span<const double> values)
{
    const std::size_t n = values.size();
    if (n < 5) {
        throw SizeError("five-point derivative needs at least 5 values, got " + std::to_string(n));
    }
    std::vector<double> out(n, missing_value);
    for (std::size_t t = 2; t + 2 < n; ++t) {
        out[t] = (values[t - 2] - 8.0 * values[t - 1] + 8.0 * values[t + 1] - values[t + 2]) / 12.0;
    }
    return out;
}

TimeSeriesTable apply_derivatives(const TimeSeriesTable& table, const std::set<std::string>& variables)
{
    for (const auto& name : variables) {
        table.require_index(name);
    }
    std::vector<Column> columns(table.columns().begin(), table.columns().end());
    for (auto& c : columns) {
        if (variables.contains(c.name)) {
            c.values = five_point_derivative(c.values);
        }
    }
    return TimeSeriesTable(std::move(columns));
}

void Partition::validate(std::size_t length) const
{
    auto check = [length](const IndexRange& r, const char* what) {
        if (r.first > r.last) {
            throw RangeError(std::string(what) + " range is empty or reversed");
        }
        if (r.last >= length) {
            throw RangeError(std::string(what) + " range ends at index " + std::to_string(r.last)
                             + " beyond the last observation " + std::to_string(length - 1));
        }
    };
    check(fitness, "fitness");
    check(validation, "validation");
    check(test, "test");
    if (!(fitness.first < validation.first && validation.first < test.first)) {
        throw RangeError("partition ranges must start in the order fitness, validation, test");
    }
    if (fitness.last >= validation.first) {
        throw RangeError("fitness and validation ranges overlap");
    }
}

Partition Partition::from_one_based(std::size_t fit_first, std::size_t fit_last,
                                    std::size_t val_first, std::size_t val_last,
                                    std::size_t test_first, std::size_t test_last)
{
    for (auto v : { fit_first, fit_last, val_first, val_last, test_first, test_last }) {
        if (v == 0) {
            throw RangeError("observation numbers are 1-based; got 0");
        }
    }
    return { { fit_first - 1, fit_last - 1 }, { val_first - 1, val_last - 1 }, { test_first - 1, test_last - 1 } };
}

LaggedDesignMatrix::LaggedDesignMatrix(TimeSeriesTable table, std::size_t max_lag)
    : table_(std::move(table))
    , max_lag_(max_lag)
{
    if (max_lag_ >= table_.length()) {
        throw RangeError("max_lag " + std::to_string(max_lag_) + " must be below the table length "
                         + std::to_string(table_.length()));
    }
}

double LaggedDesignMatrix::cell(std::size_t variable, std::size_t lag, std::size_t row) const
{
    if (variable >= table_.width()) {
        throw SchemaError("variable index " + std::to_string(variable) + " out of range");
    }
    if (lag > max_lag_) {
        throw SchemaError("lag " + std::to_string(lag) + " exceeds max_lag " + std::to_string(max_lag_));
    }
    if (row < max_lag_ || row >= table_.length()) {
        throw RangeError("row " + std::to_string(row) + " outside the valid range");
    }
    return table_.values(variable)[row - lag];
}

} // namespace symreg
