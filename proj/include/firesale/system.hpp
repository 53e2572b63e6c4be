// Finite financial system: holdings matrix, capitals, exogenous losses, process functions.
#pragma once

#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "firesale/common.hpp"
#include "firesale/impact.hpp"
#include "firesale/sales.hpp"

namespace firesale {

struct FiniteSystem {
    int assets = 0;                    // M
    std::vector<std::string> ids;      // optional row ids; empty when constructed in code
    std::vector<double> holdings;      // n x M, row-major, non-negative
    std::vector<double> capitals;      // strictly positive
    std::vector<double> losses;        // non-negative exogenous losses
    SalesFunction sales = SalesFunction::indicator();
    PriceImpact impact;

    std::size_t size() const { return capitals.size(); }

    const double* row(std::size_t i) const {
        return holdings.data() + i * static_cast<std::size_t>(assets);
    }

    void validate() const {
        std::size_t n = size();
        if (losses.size() != n || holdings.size() != n * static_cast<std::size_t>(assets))
            throw DomainError("system: inconsistent array sizes");
        if (impact.assets() != assets) throw DomainError("system: impact asset count mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(capitals[i] > 0.0))
                throw DomainError("system: non-positive capital in row " + row_name(i));
            if (!(losses[i] >= 0.0))
                throw DomainError("system: negative loss in row " + row_name(i));
            bool any = false;
            for (int m = 0; m < assets; ++m) {
                double x = row(i)[m];
                if (!(x >= 0.0))
                    throw DomainError("system: negative holding in row " + row_name(i));
                any = any || x > 0.0;
            }
            if (!any)
                throw DomainError("system: all-zero holdings in row " + row_name(i) +
                                  " (loader should have dropped it)");
        }
    }

    std::string row_name(std::size_t i) const {
        return i < ids.size() && !ids[i].empty() ? ids[i] : std::to_string(i);
    }
};

struct CsvLoadReport {
    std::size_t rows_loaded = 0;
    std::size_t rows_dropped = 0;  // all-zero holdings rows removed with a warning count
};

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_field(const std::string& s, std::size_t line_no, const std::string& col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw DomainError("csv line " + std::to_string(line_no) + ": cannot parse column '" +
                          col + "' from '" + s + "'");
    }
}
}  // namespace detail

// Loads `id,x_1,...,x_M,c,l` rows. Rows whose holdings are all zero are dropped and
// counted; a non-positive capital is an error naming the row.
inline FiniteSystem load_system_csv(std::istream& in, SalesFunction sales, PriceImpact impact,
                                    CsvLoadReport* report = nullptr) {
    std::string line;
    if (!std::getline(in, line)) throw DomainError("csv: empty input");
    auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header.front() != "id")
        throw DomainError("csv: header must be id,x_1,...,x_M,c,l");
    if (header.back() != "l") throw DomainError("csv: missing loss column 'l'");
    if (header.size() < 3 || header[header.size() - 2] != "c")
        throw DomainError("csv: missing capital column 'c'");
    if (header.size() < 4)
        throw DomainError("csv: need at least one holdings column x_1");
    int M = static_cast<int>(header.size()) - 3;
    for (int m = 0; m < M; ++m) {
        std::string want = "x_" + std::to_string(m + 1);
        if (header[static_cast<std::size_t>(m) + 1] != want)
            throw DomainError("csv: expected column '" + want + "', found '" +
                              header[static_cast<std::size_t>(m) + 1] + "'");
    }

    FiniteSystem sys;
    sys.assets = M;
    sys.sales = std::move(sales);
    sys.impact = std::move(impact);
    if (sys.impact.assets() != M)
        throw DomainError("csv: impact configured for " + std::to_string(sys.impact.assets()) +
                          " assets but file has " + std::to_string(M));

    CsvLoadReport rep;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != header.size())
            throw DomainError("csv line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields, found " +
                              std::to_string(f.size()));
        std::vector<double> x(static_cast<std::size_t>(M));
        bool any = false;
        for (int m = 0; m < M; ++m) {
            x[static_cast<std::size_t>(m)] =
                detail::parse_field(f[static_cast<std::size_t>(m) + 1], line_no,
                                    header[static_cast<std::size_t>(m) + 1]);
            if (x[static_cast<std::size_t>(m)] < 0.0)
                throw DomainError("csv line " + std::to_string(line_no) + ": negative holding");
            any = any || x[static_cast<std::size_t>(m)] > 0.0;
        }
        double c = detail::parse_field(f[f.size() - 2], line_no, "c");
        double l = detail::parse_field(f.back(), line_no, "l");
        if (!any) {
            ++rep.rows_dropped;
            continue;
        }
        if (!(c > 0.0))
            throw DomainError("csv line " + std::to_string(line_no) + ": capital must be > 0 (row '" +
                              f[0] + "')");
        if (l < 0.0)
            throw DomainError("csv line " + std::to_string(line_no) + ": loss must be >= 0");
        sys.ids.push_back(f[0]);
        sys.holdings.insert(sys.holdings.end(), x.begin(), x.end());
        sys.capitals.push_back(c);
        sys.losses.push_back(l);
        ++rep.rows_loaded;
    }
    if (sys.size() == 0) throw DomainError("csv: no usable rows");
    if (report) *report = rep;
    return sys;
}

}  // namespace firesale
