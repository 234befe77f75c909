#include "ekp/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "ekp/errors.hpp"

namespace ekp {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed on " + path);
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed on " + path);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view field, double& out) {
    field = trim(field);
    if (field.empty()) return false;
    const std::string buf(field);
    char* end = nullptr;
    out = std::strtod(buf.c_str(), &end);
    return end == buf.c_str() + buf.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

struct Line {
    std::string_view text;
    int number;  // 1-based position in the file
};

std::vector<Line> nonempty_lines(const std::string& content) {
    std::vector<Line> lines;
    int number = 0;
    std::size_t start = 0;
    while (start <= content.size()) {
        std::size_t pos = content.find('\n', start);
        if (pos == std::string_view::npos) pos = content.size();
        std::string_view text(content.data() + start, pos - start);
        if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
        ++number;
        if (!trim(text).empty()) lines.push_back({text, number});
        start = pos + 1;
        if (pos == content.size()) break;
    }
    return lines;
}

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
    throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

// Parses comma-separated numeric rows; a non-numeric first line is a header.
std::vector<std::vector<double>> parse_csv_rows(const std::string& path,
                                                const std::string& content) {
    const auto lines = nonempty_lines(content);
    if (lines.empty()) throw ParseError(path + ": empty file");

    std::vector<std::vector<double>> rows;
    std::size_t first = 0;
    {
        bool numeric = true;
        double v;
        for (std::string_view f : split(lines[0].text, ','))
            if (!parse_double(f, v)) {
                numeric = false;
                break;
            }
        if (!numeric) first = 1;
    }
    if (first >= lines.size()) throw ParseError(path + ": no data rows");

    std::size_t width = 0;
    for (std::size_t i = first; i < lines.size(); ++i) {
        const auto fields = split(lines[i].text, ',');
        if (width == 0) width = fields.size();
        if (fields.size() != width)
            fail(path, lines[i].number,
                 "expected " + std::to_string(width) + " columns, got " +
                     std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::string_view f : fields) {
            double v;
            if (!parse_double(f, v))
                fail(path, lines[i].number,
                     "non-numeric cell '" + std::string(trim(f)) + "'");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

DataSet from_csv(const std::string& path, const std::string& content, Task task) {
    const auto rows = parse_csv_rows(path, content);
    const auto m = rows.size();
    const auto width = rows.front().size();
    if (width < 2) throw ParseError(path + ": need at least one feature column plus labels");

    DataSet data;
    data.features.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(width - 1));
    data.labels.resize(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j + 1 < width; ++j)
            data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];
        data.labels(static_cast<Eigen::Index>(i)) = rows[i][width - 1];
    }
    data.task = task;
    return data;
}

DataSet from_svmlight(const std::string& path, const std::string& content, Task task) {
    const auto lines = nonempty_lines(content);
    if (lines.empty()) throw ParseError(path + ": empty file");

    struct SparseRow {
        double label;
        std::vector<std::pair<int, double>> entries;
    };
    std::vector<SparseRow> rows;
    int max_index = 0;

    for (const Line& line : lines) {
        std::string_view text = line.text;
        const std::size_t hash = text.find('#');
        if (hash != std::string_view::npos) text = text.substr(0, hash);
        text = trim(text);
        if (text.empty()) continue;

        std::vector<std::string_view> tokens;
        for (std::string_view piece : split(text, ' '))
            if (!trim(piece).empty()) tokens.push_back(trim(piece));
        SparseRow row;
        if (!parse_double(tokens.front(), row.label))
            fail(path, line.number, "bad label '" + std::string(tokens.front()) + "'");
        for (std::size_t t = 1; t < tokens.size(); ++t) {
            const std::string_view tok = tokens[t];
            const std::size_t colon = tok.find(':');
            if (colon == std::string_view::npos)
                fail(path, line.number, "expected idx:val, got '" + std::string(tok) + "'");
            int idx = 0;
            const std::string_view idx_text = trim(tok.substr(0, colon));
            const auto conv = std::from_chars(idx_text.data(),
                                              idx_text.data() + idx_text.size(), idx);
            if (conv.ec != std::errc{} || conv.ptr != idx_text.data() + idx_text.size() ||
                idx < 1)
                fail(path, line.number, "bad feature index '" + std::string(idx_text) + "'");
            double val;
            if (!parse_double(tok.substr(colon + 1), val))
                fail(path, line.number,
                     "bad feature value '" + std::string(tok.substr(colon + 1)) + "'");
            row.entries.emplace_back(idx, val);
            max_index = std::max(max_index, idx);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");
    if (max_index == 0) throw ParseError(path + ": no features present");

    DataSet data;
    data.features = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), max_index);
    data.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        data.labels(static_cast<Eigen::Index>(i)) = rows[i].label;
        for (const auto& [idx, val] : rows[i].entries)
            data.features(static_cast<Eigen::Index>(i), idx - 1) = val;
    }
    data.task = task;
    return data;
}

}  // namespace

DataSet load_dataset(const std::string& path, const std::string& format, Task task) {
    const std::string content = read_text_file(path);
    DataSet data;
    if (format == "csv")
        data = from_csv(path, content, task);
    else if (format == "svmlight")
        data = from_svmlight(path, content, task);
    else
        throw ParseError("unknown format: " + format);
    data.source = path;
    data.format = format;
    normalize_labels(data);
    return data;
}

KernelMatrix load_kernel_csv(const std::string& path, int spec_id) {
    const std::string content = read_text_file(path);
    const auto rows = parse_csv_rows(path, content);
    const auto m = rows.size();
    if (rows.front().size() != m)
        throw ParseError(path + ": kernel matrix must be square, got " +
                         std::to_string(m) + "x" + std::to_string(rows.front().size()));

    KernelMatrix k;
    k.values.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            k.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];
    if (!k.values.allFinite()) throw DomainError(path + ": non-finite kernel entries");

    const double scale = std::max(k.values.cwiseAbs().maxCoeff(), 1.0);
    const double asym = (k.values - k.values.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * scale)
        throw DomainError(path + ": kernel matrix is not symmetric");
    k.values = ((k.values + k.values.transpose()) * 0.5).eval();
    k.spec_id = spec_id;
    k.is_square = true;
    return k;
}

}  // namespace ekp
