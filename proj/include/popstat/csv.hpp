#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "popstat/errors.hpp"

// Minimal CSV layer. All numeric output goes through std::to_chars (shortest
// round-trip form), so artifacts are byte-identical for identical inputs and
// doubles survive a write/read cycle bit-exactly.

namespace popstat {

inline std::string fmt_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline std::string fmt_int(std::int64_t v) {
    char buf[24];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline double parse_double(std::string_view s, const std::string& where) {
    double v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ParseError(where + ": bad number '" + std::string(s) + "'");
    return v;
}

inline std::int64_t parse_int(std::string_view s, const std::string& where) {
    std::int64_t v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ParseError(where + ": bad integer '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

/// Row-oriented reader with a mandatory header and line numbers in errors.
class CsvReader {
  public:
    CsvReader(const std::string& path, const std::vector<std::string>& header)
        : path_(path), in_(path) {
        if (!in_) throw ParseError(path + ": cannot open");
        std::string line;
        if (!std::getline(in_, line)) throw ParseError(path + ": empty file");
        strip_cr(line);
        auto got = split_fields(line);
        if (got.size() != header.size())
            throw ParseError(path + ":1: expected " + fmt_int((std::int64_t)header.size()) +
                             " header fields, got " + fmt_int((std::int64_t)got.size()));
        for (std::size_t i = 0; i < header.size(); ++i)
            if (got[i] != header[i])
                throw ParseError(path + ":1: header field " + fmt_int((std::int64_t)i + 1) +
                                 " is '" + std::string(got[i]) + "', expected '" + header[i] + "'");
        ncols_ = header.size();
        lineno_ = 1;
    }

    /// Next data row, or nullopt at EOF. Blank trailing lines are skipped.
    std::optional<std::vector<std::string>> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++lineno_;
            strip_cr(line);
            if (line.empty()) continue;
            auto fields = split_fields(line);
            if (fields.size() != ncols_)
                throw ParseError(where() + ": expected " + fmt_int((std::int64_t)ncols_) +
                                 " fields, got " + fmt_int((std::int64_t)fields.size()));
            std::vector<std::string> out;
            out.reserve(fields.size());
            for (auto f : fields) out.emplace_back(f);
            return out;
        }
        return std::nullopt;
    }

    std::string where() const { return path_ + ":" + fmt_int((std::int64_t)lineno_); }

  private:
    static void strip_cr(std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    }
    std::string path_;
    std::ifstream in_;
    std::size_t ncols_ = 0;
    std::size_t lineno_ = 0;
};

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw DataError(path + ": cannot open for writing");
        row(header);
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    void close() { out_.close(); }

  private:
    std::ofstream out_;
};

} // namespace popstat
