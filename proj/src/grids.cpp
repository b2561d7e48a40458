#include "wakecough/grids.hpp"

#include <cmath>
#include <regex>
#include <stdexcept>

namespace wakecough {

namespace {

std::string normalize(const std::string& expr) {
    std::string s;
    for (size_t i = 0; i < expr.size();) {
        // UTF-8: ellipsis e2 80 a6, minus e2 88 92, multiplication c3 97
        if (i + 2 < expr.size() && static_cast<unsigned char>(expr[i]) == 0xe2 &&
            static_cast<unsigned char>(expr[i + 1]) == 0x80 &&
            static_cast<unsigned char>(expr[i + 2]) == 0xa6) {
            s += "...";
            i += 3;
        } else if (i + 2 < expr.size() && static_cast<unsigned char>(expr[i]) == 0xe2 &&
                   static_cast<unsigned char>(expr[i + 1]) == 0x88 &&
                   static_cast<unsigned char>(expr[i + 2]) == 0x92) {
            s += '-';
            i += 3;
        } else if (i + 1 < expr.size() && static_cast<unsigned char>(expr[i]) == 0xc3 &&
                   static_cast<unsigned char>(expr[i + 1]) == 0x97) {
            s += '*';
            i += 2;
        } else {
            s += expr[i++];
        }
    }
    // a lone 'x' between tokens also means multiplication
    s = std::regex_replace(s, std::regex("(^|[\\s)])x([\\s(])"), "$1*$2");
    s = std::regex_replace(s, std::regex("\\s+"), " ");
    const auto a = s.find_first_not_of(' ');
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(' ');
    return s.substr(a, b - a + 1);
}

double to_num(const std::string& t) {
    size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument("bad number in grid expression: " + t);
    return v;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (start <= s.size()) {
        size_t pos = s.find(',', start);
        if (pos == std::string::npos) pos = s.size();
        std::string part = s.substr(start, pos - start);
        const auto a = part.find_first_not_of(' ');
        if (a != std::string::npos) {
            const auto b = part.find_last_not_of(' ');
            parts.push_back(part.substr(a, b - a + 1));
        } else {
            parts.emplace_back();
        }
        start = pos + 1;
        if (pos == s.size()) break;
    }
    return parts;
}

// "9, ... 12" / "-7, ... 7" / "3, 4, 5" -> integer list
std::vector<long> parse_exponents(const std::string& spec) {
    std::vector<long> out;
    for (const auto& part : split_commas(spec)) {
        if (part.empty()) throw std::invalid_argument("empty entry in grid expression");
        if (part.rfind("...", 0) == 0) {
            if (out.empty())
                throw std::invalid_argument("ellipsis without a starting value: " + spec);
            const long hi = std::lround(to_num(part.substr(3)));
            for (long v = out.back() + 1; v <= hi; ++v) out.push_back(v);
        } else {
            out.push_back(std::lround(to_num(part)));
        }
    }
    return out;
}

const std::string kNum = "[-+]?[0-9]*\\.?[0-9]+(?:[eE][-+]?[0-9]+)?";

} // namespace

std::vector<double> parse_grid_expr(const std::string& expr) {
    const std::string s = normalize(expr);
    if (s.empty()) throw std::invalid_argument("empty grid expression");
    std::smatch m;

    // prefix values + "A to B with step of C" / "in steps of C"
    static const std::regex range_re("^((?:" + kNum + " ?, ?)*)(" + kNum + ") to (" + kNum +
                                     ") (?:with step of|in steps of) (" + kNum + ")$");
    if (std::regex_match(s, m, range_re)) {
        std::vector<double> out;
        if (m[1].length() > 0)
            for (const auto& p : split_commas(m[1].str()))
                if (!p.empty()) out.push_back(to_num(p));
        const double lo = to_num(m[2].str());
        const double hi = to_num(m[3].str());
        const double step = to_num(m[4].str());
        if (step <= 0) throw std::invalid_argument("non-positive step: " + expr);
        for (double v = lo; v <= hi + step * 1e-9; v += step)
            out.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
        return out;
    }

    // [C *] B^k (, | where) k = exponents
    static const std::regex pow_re("^(?:(" + kNum + ") ?\\* ?)?(" + kNum +
                                   ")\\^([a-z]) ?(?:,|where) ?([a-z]) ?= ?(.+)$");
    if (std::regex_match(s, m, pow_re)) {
        if (m[3].str() != m[4].str())
            throw std::invalid_argument("mismatched index variable: " + expr);
        const double coef = m[1].length() > 0 ? to_num(m[1].str()) : 1.0;
        const double base = to_num(m[2].str());
        std::vector<double> out;
        for (long k : parse_exponents(m[5].str()))
            out.push_back(coef * std::pow(base, static_cast<double>(k)));
        return out;
    }

    // C * k (, | where) k = list
    static const std::regex mult_re("^(" + kNum + ") ?\\* ?([a-z]) ?(?:,|where) ?([a-z]) ?= ?(.+)$");
    if (std::regex_match(s, m, mult_re)) {
        if (m[2].str() != m[3].str())
            throw std::invalid_argument("mismatched index variable: " + expr);
        const double coef = to_num(m[1].str());
        std::vector<double> out;
        for (long k : parse_exponents(m[4].str()))
            out.push_back(coef * static_cast<double>(k));
        return out;
    }

    // plain comma-separated list
    static const std::regex list_re("^" + kNum + "( ?, ?" + kNum + ")*$");
    if (std::regex_match(s, list_re)) {
        std::vector<double> out;
        for (const auto& p : split_commas(s)) out.push_back(to_num(p));
        return out;
    }

    throw std::invalid_argument("unrecognized grid expression: " + expr);
}

bool on_grid(double value, const std::vector<double>& grid, double rel_tol) {
    for (double g : grid) {
        const double tol = rel_tol * std::max({std::abs(g), std::abs(value), 1e-300});
        if (std::abs(value - g) <= std::max(tol, 1e-12)) return true;
    }
    return false;
}

const PaperGrids& paper_grids() {
    static const PaperGrids grids = [] {
        PaperGrids g;
        g.frame_lengths = parse_grid_expr("2^k, k=9, ... 12");
        g.frame_counts = parse_grid_expr("10 * k, k=7, 10, 12, 15");
        g.num_subjects = parse_grid_expr("5 to 51 with step of 5");
        g.cough_seconds = parse_grid_expr("2, 5 to 100 with step of 5");
        g.pow10 = parse_grid_expr("10^i where i=-7, ... 7");
        g.penalty_steps = parse_grid_expr("0 to 1 in steps of 0.05");
        g.mlp_hidden = parse_grid_expr("70 to 150 in steps of 20");
        g.cnn_filters = parse_grid_expr("3 * 2^k where k=3, 4, 5");
        g.cnn_kernel = parse_grid_expr("2, 3");
        g.cnn_dropout = parse_grid_expr("0.1 to 0.5 in steps of 0.2");
        g.cnn_dense = parse_grid_expr("2^k, k=4, 5");
        g.cnn_batch = parse_grid_expr("2^k, k=6, ... 8");
        g.cnn_epochs = parse_grid_expr("10 to 200 in steps of 20");
        return g;
    }();
    return grids;
}

} // namespace wakecough
