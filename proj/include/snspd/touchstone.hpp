#pragma once

// Version-1 Touchstone reader/writer for two-port S-parameter files.
//
// Supported: option line `# <Hz|kHz|MHz|GHz> S <RI|MA|DB> R <z0>` (any token
// order, case-insensitive, missing tokens take the GHz/MA/50 defaults),
// `!` comments, one nine-column data line per frequency in the order
// f S11 S21 S12 S22.

#include <array>
#include <charconv>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "snspd/errors.hpp"
#include "snspd/twoport.hpp"

namespace snspd::rfcal {

enum class FreqUnit { Hz, kHz, MHz, GHz };
enum class DataFormat { RI, MA, DB };

struct TouchstoneOptions {
    FreqUnit unit = FreqUnit::GHz;
    DataFormat format = DataFormat::MA;
    double ref_impedance = 50.0;
};

/// Numeric content exactly as read: frequency in file units plus the eight
/// S-parameter columns in file format.
struct TouchstoneData {
    TouchstoneOptions options;
    std::vector<std::array<double, 9>> rows;
};

inline double unit_scale(FreqUnit u) {
    switch (u) {
        case FreqUnit::Hz: return 1.0;
        case FreqUnit::kHz: return 1e3;
        case FreqUnit::MHz: return 1e6;
        case FreqUnit::GHz: return 1e9;
    }
    return 1.0;
}

inline const char* unit_name(FreqUnit u) {
    switch (u) {
        case FreqUnit::Hz: return "Hz";
        case FreqUnit::kHz: return "kHz";
        case FreqUnit::MHz: return "MHz";
        case FreqUnit::GHz: return "GHz";
    }
    return "GHz";
}

inline const char* format_name(DataFormat f) {
    switch (f) {
        case DataFormat::RI: return "RI";
        case DataFormat::MA: return "MA";
        case DataFormat::DB: return "DB";
    }
    return "MA";
}

namespace detail {

inline std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

inline double to_double(const std::string& tok, std::size_t lineno) {
    std::string_view s = tok;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
        throw ParseError(lineno, "invalid number '" + tok + "'");
    }
    return v;
}

inline TouchstoneOptions parse_options(const std::string& line, std::size_t lineno) {
    TouchstoneOptions opt;
    std::istringstream is(line.substr(1));
    std::string tok;
    while (is >> tok) {
        const std::string u = upper(tok);
        if (u == "HZ") opt.unit = FreqUnit::Hz;
        else if (u == "KHZ") opt.unit = FreqUnit::kHz;
        else if (u == "MHZ") opt.unit = FreqUnit::MHz;
        else if (u == "GHZ") opt.unit = FreqUnit::GHz;
        else if (u == "S") {}
        else if (u == "Y" || u == "Z" || u == "H" || u == "G") {
            throw ParseError(lineno, "unsupported parameter type '" + tok + "' (only S)");
        }
        else if (u == "RI") opt.format = DataFormat::RI;
        else if (u == "MA") opt.format = DataFormat::MA;
        else if (u == "DB") opt.format = DataFormat::DB;
        else if (u == "R") {
            std::string z;
            if (!(is >> z)) throw ParseError(lineno, "option R needs a reference impedance");
            opt.ref_impedance = to_double(z, lineno);
            if (!(opt.ref_impedance > 0.0)) throw ParseError(lineno, "reference impedance must be > 0");
        } else {
            throw ParseError(lineno, "unknown option token '" + tok + "'");
        }
    }
    return opt;
}

inline std::string shortest(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace detail

inline TouchstoneData read_touchstone(std::string_view text) {
    TouchstoneData data;
    bool have_options = false;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string line(text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++lineno;
        if (const auto bang = line.find('!'); bang != std::string::npos) line.erase(bang);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        line = line.substr(first);
        if (line[0] == '#') {
            if (have_options) throw ParseError(lineno, "duplicate option line");
            if (!data.rows.empty()) throw ParseError(lineno, "option line after data");
            data.options = detail::parse_options(line, lineno);
            have_options = true;
            continue;
        }
        std::istringstream is(line);
        std::string tok;
        std::vector<double> values;
        while (is >> tok) values.push_back(detail::to_double(tok, lineno));
        if (values.size() != 9) {
            throw ParseError(lineno, "expected 9 columns for a two-port data line, got " +
                                         std::to_string(values.size()));
        }
        std::array<double, 9> row{};
        std::copy(values.begin(), values.end(), row.begin());
        if (!data.rows.empty() && !(row[0] > data.rows.back()[0])) {
            throw ParseError(lineno, "frequencies must be strictly increasing");
        }
        if (row[0] < 0.0) throw ParseError(lineno, "negative frequency");
        data.rows.push_back(row);
    }
    if (data.rows.empty()) throw ParseError(lineno, "no data lines");
    return data;
}

inline TwoPortNetwork to_network(const TouchstoneData& data) {
    TwoPortNetwork net;
    net.form = NetworkForm::S;
    net.ref_impedance = data.options.ref_impedance;
    const double scale = unit_scale(data.options.unit);
    const double deg = std::numbers::pi / 180.0;
    for (const auto& row : data.rows) {
        net.freqs.push_back(row[0] * scale);
        std::array<cplx, 4> v;
        for (std::size_t k = 0; k < 4; ++k) {
            const double a = row[1 + 2 * k], b = row[2 + 2 * k];
            switch (data.options.format) {
                case DataFormat::RI: v[k] = {a, b}; break;
                case DataFormat::MA: v[k] = std::polar(a, b * deg); break;
                case DataFormat::DB: v[k] = std::polar(std::pow(10.0, a / 20.0), b * deg); break;
            }
        }
        // File order is S11 S21 S12 S22.
        Mat2 s;
        s(0, 0) = v[0];
        s(1, 0) = v[1];
        s(0, 1) = v[2];
        s(1, 1) = v[3];
        net.params.push_back(s);
    }
    return net;
}

inline TwoPortNetwork parse_touchstone(std::string_view text) { return to_network(read_touchstone(text)); }

/// Converts a network to file rows in the requested unit and format.
inline TouchstoneData from_network(const TwoPortNetwork& net, FreqUnit unit = FreqUnit::GHz,
                                   DataFormat format = DataFormat::RI) {
    const TwoPortNetwork s = to_s(net, net.form == NetworkForm::S ? net.ref_impedance : 50.0);
    TouchstoneData data;
    data.options = {unit, format, s.ref_impedance};
    const double scale = unit_scale(unit);
    const double rad = 180.0 / std::numbers::pi;
    for (std::size_t i = 0; i < s.size(); ++i) {
        std::array<double, 9> row{};
        row[0] = s.freqs[i] / scale;
        const Mat2& m = s.params[i];
        const std::array<cplx, 4> v{m(0, 0), m(1, 0), m(0, 1), m(1, 1)};
        for (std::size_t k = 0; k < 4; ++k) {
            switch (format) {
                case DataFormat::RI: row[1 + 2 * k] = v[k].real(); row[2 + 2 * k] = v[k].imag(); break;
                case DataFormat::MA: row[1 + 2 * k] = std::abs(v[k]); row[2 + 2 * k] = std::arg(v[k]) * rad; break;
                case DataFormat::DB:
                    row[1 + 2 * k] = 20.0 * std::log10(std::abs(v[k]));
                    row[2 + 2 * k] = std::arg(v[k]) * rad;
                    break;
            }
        }
        data.rows.push_back(row);
    }
    return data;
}

/// Numbers are written in shortest round-trip form, so reading the output
/// back yields bit-identical values.
inline std::string serialize_touchstone(const TouchstoneData& data) {
    std::string out = "! two-port S-parameters\n# ";
    out += unit_name(data.options.unit);
    out += " S ";
    out += format_name(data.options.format);
    out += " R " + detail::shortest(data.options.ref_impedance) + "\n";
    for (const auto& row : data.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += ' ';
            out += detail::shortest(row[k]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace snspd::rfcal
