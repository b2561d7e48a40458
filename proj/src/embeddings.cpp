#include "wakecough/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace wakecough {

EmbeddingKind parse_embedding_kind(const std::string& name) {
    if (name == "ivector") return EmbeddingKind::IVector;
    if (name == "xvector") return EmbeddingKind::XVector;
    if (name == "dvector") return EmbeddingKind::DVector;
    throw std::invalid_argument("unknown embedding kind: " + name);
}

namespace {

const char* kind_name(EmbeddingKind kind) {
    switch (kind) {
        case EmbeddingKind::IVector: return "ivector";
        case EmbeddingKind::XVector: return "xvector";
        case EmbeddingKind::DVector: return "dvector";
    }
    return "?";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto a = field.find_first_not_of(" \t\r");
        if (a == std::string::npos) {
            fields.emplace_back();
        } else {
            const auto b = field.find_last_not_of(" \t\r");
            fields.push_back(field.substr(a, b - a + 1));
        }
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

} // namespace

EmbeddingSet import_embeddings(const std::string& path, EmbeddingKind kind) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open embeddings file: " + path);
    const int dim = embedding_dim(kind);

    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty embeddings file: " + path);

    EmbeddingSet set;
    set.kind = kind;
    std::vector<Eigen::VectorXd> rows;
    std::set<std::pair<std::string, long>> seen;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != dim + 2)
            throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(dim + 2) + " columns for " +
                                        kind_name(kind) + ", got " +
                                        std::to_string(fields.size()));
        const std::string& subject = fields[0];
        long segment = 0;
        {
            const auto& f = fields[1];
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), segment);
            if (ec != std::errc{} || p != f.data() + f.size())
                throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                            ": bad segment index '" + f + "'");
        }
        if (!seen.insert({subject, segment}).second)
            throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                        ": duplicate (subject, segment) pair " + subject + "," +
                                        std::to_string(segment));
        Eigen::VectorXd row(dim);
        for (int j = 0; j < dim; ++j) {
            const auto& f = fields[static_cast<size_t>(j) + 2];
            try {
                size_t used = 0;
                row(j) = std::stod(f, &used);
                if (used != f.size()) throw std::invalid_argument(f);
            } catch (const std::exception&) {
                throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                            ": non-numeric field '" + f + "'");
            }
        }
        set.subjects.push_back(subject);
        set.segments.push_back(segment);
        rows.push_back(std::move(row));
    }

    set.rows.resize(static_cast<long>(rows.size()), dim);
    for (size_t i = 0; i < rows.size(); ++i) set.rows.row(static_cast<long>(i)) = rows[i];

    // x-vectors use a 0.75 s hop and d-vectors 0.5 s segments, so valid
    // per-subject counts are multiples of t/0.75 and t/0.5 for integer t.
    if (kind != EmbeddingKind::IVector) {
        std::map<std::string, long> counts;
        for (const auto& s : set.subjects) ++counts[s];
        const double unit = kind == EmbeddingKind::XVector ? 0.75 : 0.5;
        for (const auto& [subject, n] : counts) {
            const double t = static_cast<double>(n) * unit;
            if (std::abs(t - std::round(t)) > 1e-9)
                set.warnings.push_back("subject " + subject + ": " + std::to_string(n) +
                                       " rows does not match an integer duration at " +
                                       std::to_string(unit) + " s per row");
        }
    }
    return set;
}

void export_embeddings(const std::string& path, const EmbeddingSet& set) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write embeddings file: " + path);
    const int dim = embedding_dim(set.kind);
    out << "subject_id,segment_index";
    for (int j = 0; j < dim; ++j) out << ",e" << j;
    out << '\n';
    out << std::setprecision(17);
    for (long i = 0; i < set.rows.rows(); ++i) {
        out << set.subjects[static_cast<size_t>(i)] << ','
            << set.segments[static_cast<size_t>(i)];
        for (int j = 0; j < dim; ++j) out << ',' << set.rows(i, j);
        out << '\n';
    }
}

LabeledSet to_labeled_set(const EmbeddingSet& set, const std::vector<std::string>& subjects) {
    std::vector<std::string> sorted = subjects;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::map<std::string, int> label_of;
    for (size_t i = 0; i < sorted.size(); ++i) label_of[sorted[i]] = static_cast<int>(i);

    std::set<std::string> present(set.subjects.begin(), set.subjects.end());
    for (const auto& s : sorted)
        if (!present.count(s)) throw std::invalid_argument("subject not in embedding set: " + s);

    std::vector<long> keep;
    for (long i = 0; i < set.rows.rows(); ++i)
        if (label_of.count(set.subjects[static_cast<size_t>(i)])) keep.push_back(i);

    LabeledSet out;
    out.num_classes = static_cast<int>(sorted.size());
    out.X.resize(static_cast<long>(keep.size()), set.rows.cols());
    out.y.resize(keep.size());
    for (size_t i = 0; i < keep.size(); ++i) {
        out.X.row(static_cast<long>(i)) = set.rows.row(keep[i]);
        out.y[i] = label_of[set.subjects[static_cast<size_t>(keep[i])]];
    }
    return out;
}

} // namespace wakecough
