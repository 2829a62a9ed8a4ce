#pragma once

// Binary click sequence: one bin per gate (gated mode) or per time bin
// (free-running mode).

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "snspd/csv.hpp"
#include "snspd/errors.hpp"

namespace snspd {

enum class TrainMode { FM, GM };

struct ClickTrain {
    std::vector<std::uint8_t> bins;
    double bin_width = 0.0;  // s; gate period for GM trains
    TrainMode mode = TrainMode::GM;
    // Intra-gate detection time per bin (s); negative where there was no click.
    std::optional<std::vector<double>> phase_times;

    std::size_t size() const { return bins.size(); }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : bins) n += b;
        return n;
    }
};

/// CSV with a header line `index,click[,phase_time]`, preceded by a comment
/// line carrying the mode and bin width.
inline void write_clicktrain_csv(std::ostream& os, const ClickTrain& train) {
    os << "# mode=" << (train.mode == TrainMode::GM ? "GM" : "FM")
       << " bin_width=" << csv::format_number(train.bin_width) << "\n";
    const bool phases = train.phase_times.has_value();
    os << (phases ? "index,click,phase_time\n" : "index,click\n");
    for (std::size_t i = 0; i < train.bins.size(); ++i) {
        os << i << ',' << static_cast<int>(train.bins[i]);
        if (phases) {
            const double ph = (*train.phase_times)[i];
            os << ',';
            if (ph >= 0.0) os << csv::format_number(ph);
        }
        os << '\n';
    }
}

inline ClickTrain read_clicktrain_csv(std::istream& is) {
    ClickTrain train;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    bool phases = false;
    std::vector<double> phase_values;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string tok;
            while (meta >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
                if (key == "mode") {
                    if (val == "GM") train.mode = TrainMode::GM;
                    else if (val == "FM") train.mode = TrainMode::FM;
                    else throw ParseError(lineno, "unknown train mode '" + val + "'");
                } else if (key == "bin_width") {
                    train.bin_width = csv::parse_number(val, lineno);
                }
            }
            continue;
        }
        const auto cols = csv::split(line);
        if (!header) {
            if (cols.size() < 2 || cols[0] != "index" || cols[1] != "click") {
                throw ParseError(lineno, "expected header 'index,click[,phase_time]'");
            }
            phases = cols.size() == 3 && cols[2] == "phase_time";
            header = true;
            continue;
        }
        if (cols.size() != (phases ? 3u : 2u)) throw ParseError(lineno, "wrong column count");
        if (csv::parse_number(cols[0], lineno) != static_cast<double>(train.bins.size())) {
            throw ParseError(lineno, "indices must be consecutive from 0");
        }
        const double click = csv::parse_number(cols[1], lineno);
        if (click != 0.0 && click != 1.0) throw ParseError(lineno, "click must be 0 or 1");
        train.bins.push_back(click == 1.0 ? 1 : 0);
        if (phases) phase_values.push_back(cols[2].empty() ? -1.0 : csv::parse_number(cols[2], lineno));
    }
    if (!header) throw ParseError(lineno, "missing header");
    if (phases) train.phase_times = std::move(phase_values);
    return train;
}

}  // namespace snspd
