#include <algorithm>
#include <charconv>
#include <sstream>
#include <vector>

#include "ccl/error.hpp"
#include "ccl/graph.hpp"

namespace ccl::graph {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return {buf, ptr};
}

namespace {

char from_char(Edgemark m) {
    switch (m) {
        case Edgemark::Tail: return '-';
        case Edgemark::Arrow: return '<';
        case Edgemark::Circle: return 'o';
    }
    return '?';
}

char to_char(Edgemark m) {
    switch (m) {
        case Edgemark::Tail: return '-';
        case Edgemark::Arrow: return '>';
        case Edgemark::Circle: return 'o';
    }
    return '?';
}

Edgemark parse_mark(char c, int lineno) {
    switch (c) {
        case '-': return Edgemark::Tail;
        case '<':
        case '>': return Edgemark::Arrow;
        case 'o': return Edgemark::Circle;
        default: throw FormatError("graph text line " + std::to_string(lineno) + ": bad edgemark '" + c + "'");
    }
}

struct ParsedLink {
    int src, tau, dst;
    Edgemark at_src, at_dst;
    std::optional<double> effect;
};

}  // namespace

std::string to_text(const TsPag& g) {
    std::ostringstream os;
    os << "# n_vars " << g.n_vars() << " tau_max " << g.tau_max() << '\n';
    for (const Link& l : g.links()) {
        os << l.from << ' ' << from_char(l.mark_from) << to_char(l.mark_to) << ' ' << l.to << " @ " << l.lag;
        if (l.effect) os << ' ' << format_double(*l.effect);
        os << '\n';
    }
    return os.str();
}

TsPag parse_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    int n_vars = -1, tau_max = -1;
    std::vector<ParsedLink> parsed;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream ls(line);
        if (line[line.find_first_not_of(" \t")] == '#') {
            std::string hash, k1, k2;
            int v1 = 0, v2 = 0;
            ls >> hash >> k1 >> v1 >> k2 >> v2;
            if (ls && k1 == "n_vars" && k2 == "tau_max") n_vars = v1, tau_max = v2;
            continue;
        }
        ParsedLink p{};
        std::string marks, at;
        if (!(ls >> p.src >> marks >> p.dst >> at >> p.tau) || marks.size() != 2 || at != "@")
            throw FormatError("graph text line " + std::to_string(lineno) + ": expected `i <m><m> j @ tau [effect]`");
        p.at_src = parse_mark(marks[0], lineno);
        p.at_dst = parse_mark(marks[1], lineno);
        std::string eff;
        if (ls >> eff) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(eff.data(), eff.data() + eff.size(), v);
            if (ec != std::errc{} || ptr != eff.data() + eff.size())
                throw FormatError("graph text line " + std::to_string(lineno) + ": bad effect '" + eff + "'");
            p.effect = v;
        }
        std::string extra;
        if (ls >> extra) throw FormatError("graph text line " + std::to_string(lineno) + ": trailing tokens");
        if (p.src < 0 || p.dst < 0 || p.tau < 0)
            throw FormatError("graph text line " + std::to_string(lineno) + ": negative index");
        parsed.push_back(p);
    }
    if (n_vars < 0) {
        n_vars = 1;
        tau_max = 0;
        for (const auto& p : parsed) {
            n_vars = std::max({n_vars, p.src + 1, p.dst + 1});
            tau_max = std::max(tau_max, p.tau);
        }
    }
    TsPag g(n_vars, tau_max);
    for (const auto& p : parsed) {
        if (p.src >= n_vars || p.dst >= n_vars || p.tau > tau_max || (p.tau == 0 && p.src == p.dst))
            throw FormatError("graph text: link " + std::to_string(p.src) + "-" + std::to_string(p.dst) +
                              " @ " + std::to_string(p.tau) + " out of range");
        if (g.has(p.src, p.tau, p.dst)) throw FormatError("graph text: duplicate link");
        g.add(p.src, p.tau, p.dst, p.at_src, p.at_dst);
        g.set_effect(p.src, p.tau, p.dst, p.effect);
    }
    return g;
}

}  // namespace ccl::graph
