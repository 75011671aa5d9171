#pragma once

// CSV artifacts: a provenance comment line, a header line, then rows printed
// with %.17g so identical runs produce identical bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#ifndef BLOCHSC_VERSION
#define BLOCHSC_VERSION "0.0.0"
#endif

namespace blochsc {

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::uint64_t config_hash, const std::vector<std::string>& columns)
        : out_(path), ncol_(columns.size()) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
        out_ << "# blochsc " << BLOCHSC_VERSION << " config " << hex64(config_hash) << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != ncol_) throw std::logic_error("csv row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    void row(std::initializer_list<double> values) {
        std::vector<std::string> cells;
        for (double v : values) cells.push_back(format_number(v));
        row(cells);
    }

    void row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        for (double v : values) cells.push_back(format_number(v));
        row(cells);
    }

private:
    std::ofstream out_;
    std::size_t ncol_;
};

}  // namespace blochsc
