#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "imb/error.hpp"
#include "imb/version.hpp"

namespace imb::io {

/// Shortest round-trip formatting is locale- and platform-dependent in
/// places; a fixed 17 significant digits keeps output byte-identical.
inline std::string num(double v) { return fmt::format("{:.17g}", v); }

/// CSV file with the schema line "# imb-lab v<version> <subcommand>" followed
/// by a column header.
class CsvWriter {
public:
    CsvWriter(const std::string& path, std::string_view subcommand, std::initializer_list<std::string_view> columns)
        : out_(path, std::ios::binary) {
        if (!out_) throw Error(ErrorKind::invalid_argument, "cannot write '" + path + "'");
        out_ << "# " << kProgramName << " v" << kVersion << ' ' << subcommand << '\n';
        bool first = true;
        for (auto c : columns) {
            if (!first) out_ << ',';
            out_ << c;
            first = false;
        }
        out_ << '\n';
    }

    template <class... Ts>
    void row(const Ts&... fields) {
        bool first = true;
        ((write_field(fields, first)), ...);
        out_ << '\n';
    }

private:
    void sep(bool& first) {
        if (!first) out_ << ',';
        first = false;
    }
    void write_field(double v, bool& first) { sep(first); out_ << num(v); }
    void write_field(int v, bool& first) { sep(first); out_ << v; }
    void write_field(long v, bool& first) { sep(first); out_ << v; }
    void write_field(std::size_t v, bool& first) { sep(first); out_ << v; }
    void write_field(bool v, bool& first) { sep(first); out_ << (v ? 1 : 0); }
    void write_field(const std::string& v, bool& first) { sep(first); out_ << v; }
    void write_field(const char* v, bool& first) { sep(first); out_ << v; }

    std::ofstream out_;
};

}  // namespace imb::io
