#include "ccl/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ccl/error.hpp"
#include "ccl/graph.hpp"

namespace ccl::io {

using graph::format_double;

namespace {

std::vector<std::string> split(const std::string& line) {
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

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw FormatError("line " + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

int parse_int(const std::string& s, std::size_t line) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw FormatError("line " + std::to_string(line) + ": bad integer '" + s + "'");
    return v;
}

std::string opt(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

std::string series_csv(const Series& s) {
    std::ostringstream out;
    out << 't';
    for (std::size_t j = 0; j < s.cols(); ++j) out << ",x" << j;
    for (std::size_t j = 0; j < s.cols(); ++j) out << ",do" << j;
    out << '\n';
    for (std::size_t t = 0; t < s.rows(); ++t) {
        out << t;
        for (std::size_t j = 0; j < s.cols(); ++j) out << ',' << format_double(s.values(t, j));
        for (std::size_t j = 0; j < s.cols(); ++j) out << ',' << (s.is_do(t, j) ? 1 : 0);
        out << '\n';
    }
    return out.str();
}

Series parse_series_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw FormatError("series csv: empty file");
    const auto header = split(lines[0]);
    if (header.empty() || header[0] != "t") throw FormatError("series csv: header must start with 't'");
    std::size_t nx = 0, nd = 0;
    for (std::size_t k = 1; k < header.size(); ++k) {
        const std::string want_x = "x" + std::to_string(nx);
        const std::string want_d = "do" + std::to_string(nd);
        if (nd == 0 && header[k] == want_x)
            ++nx;
        else if (header[k] == want_d)
            ++nd;
        else
            throw FormatError("series csv: unexpected header column '" + header[k] + "'");
    }
    if (nx == 0) throw FormatError("series csv: no value columns");
    if (nd != 0 && nd != nx)
        throw FormatError("series csv: " + std::to_string(nx) + " value columns but " + std::to_string(nd) +
                          " do columns");
    Series s(0, nx);
    std::vector<double> row(nx);
    std::vector<std::uint8_t> mask(nx, 0);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto f = split(lines[li]);
        if (f.size() != 1 + nx + nd)
            throw FormatError("line " + std::to_string(li + 1) + ": expected " + std::to_string(1 + nx + nd) +
                              " fields, got " + std::to_string(f.size()));
        for (std::size_t j = 0; j < nx; ++j) row[j] = parse_double(f[1 + j], li + 1);
        for (std::size_t j = 0; j < nx; ++j) {
            if (nd == 0) {
                mask[j] = 0;
                continue;
            }
            const std::string& d = f[1 + nx + j];
            if (d != "0" && d != "1") throw FormatError("line " + std::to_string(li + 1) + ": do flag must be 0 or 1");
            mask[j] = d == "1";
        }
        s.append_row(row, mask);
    }
    return s;
}

std::string constraints_csv(const idisc::ConstraintList& c) {
    std::ostringstream out;
    out << "kind,j,i,tau,p\n";
    for (const auto& d : c.deps) out << "dep," << d.j << ',' << d.i << ',' << d.tau << ',' << format_double(d.p) << '\n';
    for (const auto& d : c.indeps)
        out << "indep," << d.j << ',' << d.i << ',' << d.tau << ',' << format_double(d.p) << '\n';
    return out.str();
}

idisc::ConstraintList parse_constraints_csv(const std::string& text) {
    const auto lines = lines_of(text);
    idisc::ConstraintList out;
    if (lines.empty()) return out;
    if (lines[0] != "kind,j,i,tau,p") throw FormatError("constraints csv: header must be kind,j,i,tau,p");
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto f = split(lines[li]);
        if (f.size() != 5) throw FormatError("line " + std::to_string(li + 1) + ": expected 5 fields");
        const idisc::Constraint c{parse_int(f[1], li + 1), parse_int(f[2], li + 1), parse_int(f[3], li + 1),
                                  parse_double(f[4], li + 1)};
        if (c.tau < 0 || c.i < 0 || c.j < 0) throw FormatError("line " + std::to_string(li + 1) + ": negative index");
        if (f[0] == "dep")
            out.deps.push_back(c);
        else if (f[0] == "indep")
            out.indeps.push_back(c);
        else
            throw FormatError("line " + std::to_string(li + 1) + ": kind must be dep or indep");
    }
    return out;
}

std::string episode_csv(const experiment::EpisodeResult& e) {
    std::ostringstream out;
    out << "t,acted,variable,value,was_alternative,eps,y_actual,y_oracle,regret_increment\n";
    for (const auto& r : e.records) {
        out << r.t << ',' << (r.acted ? 1 : 0) << ',';
        if (r.acted) out << r.variable;
        out << ',' << (r.acted ? opt(r.value) : std::string()) << ',' << (r.was_alternative ? 1 : 0) << ','
            << format_double(r.eps) << ',' << format_double(r.y_actual) << ',' << format_double(r.y_oracle) << ','
            << format_double(r.regret_increment) << '\n';
    }
    return out.str();
}

namespace {

void aggregate_fields(std::ostringstream& out, const experiment::Aggregate& a) {
    out << a.episodes << ',' << format_double(a.mean_avg_regret) << ',' << format_double(a.q1) << ','
        << format_double(a.median) << ',' << format_double(a.q3) << ',' << format_double(a.min) << ','
        << format_double(a.max) << ',' << opt(a.mean_optimal_fraction);
}

}  // namespace

std::string aggregate_csv(const experiment::Aggregate& a) {
    std::ostringstream out;
    out << "episodes,mean_avg_regret,q1,median,q3,min,max,mean_optimal_fraction\n";
    aggregate_fields(out, a);
    out << '\n';
    return out.str();
}

std::string sweep_csv(std::span<const experiment::SweepRow> rows) {
    std::ostringstream out;
    out << "param_value,episodes,mean_avg_regret,q1,median,q3,min,max,mean_optimal_fraction\n";
    for (const auto& r : rows) {
        out << r.param_value << ',';
        aggregate_fields(out, r.agg);
        out << '\n';
    }
    return out.str();
}

std::string boxplot_csv(std::span<const experiment::SweepRow> rows) {
    std::ostringstream out;
    out << "param_value,episode,seed,avg_regret,optimal_fraction\n";
    for (const auto& r : rows) {
        for (std::size_t l = 0; l < r.episodes.size(); ++l) {
            const auto& e = r.episodes[l];
            out << r.param_value << ',' << l << ',' << e.seed << ',' << format_double(e.avg_regret) << ','
                << opt(e.optimal_fraction) << '\n';
        }
    }
    return out.str();
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw FormatError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + p.string());
    out << content;
    if (!out) throw Error("write failed for " + p.string());
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out += hex[md[k] >> 4];
        out += hex[md[k] & 0xf];
    }
    return out;
}

}  // namespace ccl::io
