#include "bikevhc/csv.hpp"

#include <cstdio>
#include <istream>
#include <sstream>

#include "bikevhc/errors.hpp"

namespace bikevhc::csv {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

Table read(std::istream& is, const std::vector<std::string>& expected_header) {
    Table table;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            // metadata: "# a=1 b=2"
            std::istringstream ls(line.substr(1));
            std::string tok;
            while (ls >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                try {
                    table.metadata[tok.substr(0, eq)] = std::stod(tok.substr(eq + 1));
                } catch (const std::exception&) {
                    throw ParseError("csv: bad metadata token '" + tok + "'");
                }
            }
            continue;
        }
        if (!header_seen) {
            table.header = split(line, ',');
            if (!expected_header.empty() && table.header != expected_header) {
                std::string want;
                for (const auto& h : expected_header) want += h + ",";
                throw ParseError("csv: unexpected header '" + line + "', want '" + want + "'");
            }
            header_seen = true;
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != table.header.size())
            throw ParseError("csv: row width mismatch in line '" + line + "'");
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            try {
                row[i] = std::stod(cells[i]);
            } catch (const std::exception&) {
                throw ParseError("csv: non-numeric cell '" + cells[i] + "'");
            }
        }
        table.data.push_back(std::move(row));
    }
    if (!header_seen) throw ParseError("csv: missing header");
    return table;
}

}  // namespace bikevhc::csv
